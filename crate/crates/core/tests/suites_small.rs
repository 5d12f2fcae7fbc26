//! Every suite at reduced scale, on every language it applies to.

use hogsos::harness::{run_suite, run_suite_with_law, mutations, Params, Suite};
use hogsos::lang::LangId;

fn small(suite: Suite, lang: LangId) -> Params {
    let p = suite.default_params_for(lang);
    Params {
        samples: if suite == Suite::Mutations { 100 } else { 20 },
        depth: if suite == Suite::Tower { p.depth } else { 4 },
        probe_size: 2,
        max_size: if suite == Suite::Mutations { 8 } else { 6 },
        ..p
    }
}

#[test]
fn all_suites_pass_on_shipped_laws() {
    for suite in Suite::ALL {
        for lang in suite.languages() {
            let r = run_suite(suite, lang, &small(suite, lang)).unwrap();
            assert!(r.passed(), "{suite} {lang}: {:?}", r.failures().first());
            assert!(!r.records.is_empty(), "{suite} {lang}");
        }
    }
}

#[test]
fn reports_are_deterministic_json_lines() {
    let p = small(Suite::Adequacy, LangId::Xcl);
    let a = run_suite(Suite::Adequacy, LangId::Xcl, &p).unwrap().to_json_lines();
    let b = run_suite(Suite::Adequacy, LangId::Xcl, &p).unwrap().to_json_lines();
    assert_eq!(a, b);
    let lines: Vec<serde_json::Value> = a.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 21);
    for v in &lines[..20] {
        assert_eq!(v["suite"], "adequacy");
        assert_eq!(v["seed"], 42);
        assert!(v["verdict"] == "pass" || v["verdict"] == "fail");
    }
    assert_eq!(lines[20]["check"], "summary");
    let other = run_suite(Suite::Adequacy, LangId::Xcl, &Params { seed: 7, ..p }).unwrap().to_json_lines();
    assert_ne!(a, other);
}

#[test]
fn compositionality_rejects_each_mutation() {
    for lang in LangId::ALL {
        for mu in mutations(lang) {
            let p = Params { samples: 100, max_size: 8, ..small(Suite::Compositionality, lang) };
            let r = run_suite_with_law(Suite::Compositionality, lang, Some(mu.law(lang).unwrap()), &p).unwrap();
            assert!(!r.passed(), "{lang} {} not detected", mu.id);
        }
    }
}

#[test]
fn unknown_suite_and_language_mismatch() {
    assert!("nope".parse::<Suite>().is_err());
    assert_eq!("lambda-oracle".parse::<Suite>().unwrap(), Suite::LambdaOracle);
    assert!(run_suite(Suite::LambdaOracle, LangId::Xcl, &Params::default()).is_err());
}
