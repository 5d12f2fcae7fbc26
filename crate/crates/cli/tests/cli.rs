use std::process::{Command, Output};

fn hogsos(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hogsos"))
        .args(args)
        .env_remove("HOGSOS_DEPTH")
        .env_remove("HOGSOS_PROBE_SIZE")
        .env_remove("HOGSOS_SEED")
        .current_dir(env!("CARGO_TARGET_TMPDIR"))
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn trace_chain() {
    let o = hogsos(&["trace", "xtcl", "S t s e"]);
    assert_eq!(o.status.code(), Some(0));
    let lines: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(lines[0], "S t s e  →");
    assert_eq!(lines[1], "S'(t) s e  →");
    assert_eq!(lines[2], "S''(t, s) e  →");
    assert!(lines[3].starts_with("t e (s e)  ⊥"));
    assert_eq!(stdout(&hogsos(&["trace", "xtcl", "e"])), "e  ✓\n");
}

#[test]
fn trace_probabilistic_and_json() {
    let o = stdout(&hogsos(&["trace", "xptcl", "e (+) I e"]));
    assert!(o.contains("→^1/2  e\n") && o.contains("→^1/2  I e\n"), "{o}");
    let j: serde_json::Value = serde_json::from_str(&stdout(&hogsos(&["trace", "xtcl", "I e", "--format", "json"]))).unwrap();
    assert_eq!(j["entries"].as_array().unwrap().len(), 2);
    assert_eq!(j["entries"][1]["kind"], "✓");
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(hogsos(&["trace", "xtcl", "S I I e"]).status.code(), Some(2));
    assert_eq!(hogsos(&["trace", "nolang", "e"]).status.code(), Some(2));
    assert_eq!(hogsos(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(hogsos(&["bisim", "xtcl", "e", "I"]).status.code(), Some(2));
    assert_eq!(hogsos(&["suite", "lambda-oracle", "--lang", "xcl"]).status.code(), Some(2));
}

#[test]
fn bisim_exit_codes_and_witness() {
    let o = hogsos(&["bisim", "xtcl", "e", "I e", "--depth", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o), "distinguished at depth 0: root tags ✓ vs →\n");
    let o = hogsos(&["bisim", "xcl", "I", "S K K", "--depth", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let o = hogsos(&["bisim", "xtcl", "K e (I e)", "I (I e)", "--depth", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn denote_formats() {
    let j: serde_json::Value =
        serde_json::from_str(&stdout(&hogsos(&["denote", "xtcl", "I e", "--depth", "3"]))).unwrap();
    assert_eq!(j["tag"], "reduct");
    assert_eq!(j["bag"]["next"]["tag"], "terminal");
    let j: serde_json::Value =
        serde_json::from_str(&stdout(&hogsos(&["denote", "xtcl", "I e", "--depth", "0"]))).unwrap();
    assert_eq!(j, serde_json::json!({"tag": "cut", "step": "reduct"}));
    let dot = stdout(&hogsos(&["denote", "xcl", "S K K", "--depth", "4", "--format", "dot", "--probe-size", "1"]));
    assert!(dot.starts_with("digraph"));
    assert!(dot.matches("->").count() >= 3);
    let closed = stdout(&hogsos(&["denote", "lambda", "x x", "--env", "\\y. y", "--depth", "3"]));
    let direct = stdout(&hogsos(&["denote", "lambda", "(\\y. y) (\\y. y)", "--depth", "3"]));
    assert_eq!(closed, direct);
}

#[test]
fn stage_listing() {
    let o = stdout(&hogsos(&["stage", "xnccl", "0"]));
    assert!(o.starts_with("3 elements\n"));
    assert_eq!(o.lines().count(), 4);
    assert!(stdout(&hogsos(&["stage", "xcl", "2", "--limit", "2"])).starts_with("5446 elements\n"));
    assert_eq!(hogsos(&["stage", "xtcl", "0"]).status.code(), Some(2));
}

#[test]
fn suite_json_lines_are_reproducible() {
    let args = ["suite", "adequacy", "--lang", "xtcl", "--seed", "42", "--samples", "40", "--depth", "4"];
    let a = hogsos(&args);
    assert_eq!(a.status.code(), Some(0));
    let b = hogsos(&args);
    assert_eq!(a.stdout, b.stdout);
    let lines: Vec<serde_json::Value> = stdout(&a).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 41);
    assert_eq!(lines[40]["check"], "summary");
    assert_eq!(lines[40]["params"]["samples"], 40);
}

#[test]
fn suite_on_a_mutant_fails() {
    let o = hogsos(&[
        "suite",
        "compositionality",
        "--lang",
        "xtcl",
        "--mutation",
        "I-loops",
        "--params",
        "{\"samples\": 30, \"depth\": 4}",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(hogsos(&["suite", "compositionality", "--lang", "xtcl", "--mutation", "nope"]).status.code(), Some(2));
}

#[test]
fn config_file_and_env_overrides() {
    let dir = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("cfg");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("hogsos.toml");
    std::fs::write(&cfg, "depth = 0\n").unwrap();
    let out = |envs: &[(&str, &str)]| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_hogsos"));
        c.args(["denote", "xtcl", "I e", "--config", cfg.to_str().unwrap()]);
        c.env_remove("HOGSOS_DEPTH");
        for (k, v) in envs {
            c.env(k, v);
        }
        let o = c.output().unwrap();
        serde_json::from_slice::<serde_json::Value>(&o.stdout).unwrap()
    };
    assert_eq!(out(&[])["tag"], "cut");
    assert_eq!(out(&[("HOGSOS_DEPTH", "2")])["bag"]["next"]["tag"], "terminal");
    std::fs::write(&cfg, "depht = 3\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_hogsos"))
        .args(["trace", "xtcl", "e", "--config", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn law_and_mutation_listing() {
    let law = stdout(&hogsos(&["law", "xcl"]));
    assert!(law.contains("app(fun, any) @+ => red f0(x1)"), "{law}");
    let m = stdout(&hogsos(&["mutations", "lambda"]));
    assert_eq!(m.lines().filter(|l| !l.starts_with(' ')).count(), 5);
}
