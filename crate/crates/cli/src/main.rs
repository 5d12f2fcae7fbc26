//! `hogsos` command-line frontend.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::json;

use hogsos::bisim::Bisimulator;
use hogsos::engine::{run_trace_with, HoGsosLaw, StepKind, Trace};
use hogsos::gitrees::{enumerate_stage, Truncator};
use hogsos::harness::{mutations, run_suite_with_law, Suite};
use hogsos::kernel::{Sort, Term};
use hogsos::lang::lambda::LamTerm;
use hogsos::lang::{language, LangId};

#[derive(Parser)]
#[command(name = "hogsos", version, about = "Rule-format workbench for higher-order languages")]
struct Cli {
    /// TOML file with default parameters (default: ./hogsos.toml if present).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Follow reduct steps of a term.
    Trace {
        lang: LangId,
        term: String,
        #[arg(long)]
        fuel: Option<usize>,
        /// Observe a guarded language up to this stage: at most this many steps.
        #[arg(long)]
        stage: Option<usize>,
        /// Branch to follow in distributions and sets.
        #[arg(long, value_enum, default_value_t = Branch::First)]
        branch: Branch,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = TextOrJson::Text)]
        format: TextOrJson,
    },
    /// Truncated denotation of a term as a tree.
    Denote {
        lang: LangId,
        term: String,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        probe_size: Option<usize>,
        #[arg(long, value_enum, default_value_t = TreeFormat::Json)]
        format: TreeFormat,
        /// λ only: closed terms substituted for the free variables, in
        /// order of first occurrence.
        #[arg(long = "env")]
        env: Vec<String>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Step-indexed bisimilarity of two terms of the same sort.
    Bisim {
        lang: LangId,
        p: String,
        q: String,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        probe_size: Option<usize>,
        #[arg(long, value_enum, default_value_t = TextOrJson::Text)]
        format: TextOrJson,
    },
    /// Run a property suite; writes JSON lines.
    Suite {
        name: Suite,
        /// A language, or `all` for every language the suite applies to.
        #[arg(long, default_value = "all")]
        lang: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        probe_size: Option<usize>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        max_size: Option<usize>,
        /// Parameters as a JSON object, e.g. '{"samples": 50}'.
        #[arg(long)]
        params: Option<String>,
        /// Law file to test instead of the shipped law.
        #[arg(long)]
        law: Option<PathBuf>,
        /// Test the shipped law with this documented mutation applied.
        #[arg(long)]
        mutation: Option<String>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Elements of stage n of a guarded language's denotation domain.
    Stage {
        lang: LangId,
        n: usize,
        /// Print at most this many elements.
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long, value_enum, default_value_t = TextOrJson::Text)]
        format: TextOrJson,
    },
    /// Print a language's shipped rule table.
    Law { lang: LangId },
    /// List the documented rule mutations of a language.
    Mutations { lang: LangId },
}

#[derive(Clone, Copy, ValueEnum)]
enum Branch {
    First,
    Random,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TextOrJson {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum TreeFormat {
    Json,
    Dot,
}

/// Keys accepted in the config file; all optional.
#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Config {
    depth: Option<usize>,
    probe_size: Option<usize>,
    seed: Option<u64>,
    samples: Option<usize>,
    max_size: Option<usize>,
    fuel: Option<usize>,
}

impl Config {
    fn load(path: Option<&PathBuf>) -> Result<Config> {
        let path = match path {
            Some(p) => p.clone(),
            None => {
                let p = PathBuf::from("hogsos.toml");
                if !p.exists() {
                    return Config::default().with_env();
                }
                p
            }
        };
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: Config = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        cfg.with_env()
    }

    /// `HOGSOS_DEPTH`, `HOGSOS_PROBE_SIZE` and `HOGSOS_SEED` override the file.
    fn with_env(mut self) -> Result<Config> {
        fn var<T: std::str::FromStr>(name: &str) -> Result<Option<T>> {
            match std::env::var(name) {
                Ok(v) => v
                    .trim()
                    .parse()
                    .map(Some)
                    .map_err(|_| anyhow!("{name}={v} is not a number")),
                Err(_) => Ok(None),
            }
        }
        self.depth = var("HOGSOS_DEPTH")?.or(self.depth);
        self.probe_size = var("HOGSOS_PROBE_SIZE")?.or(self.probe_size);
        self.seed = var("HOGSOS_SEED")?.or(self.seed);
        Ok(self)
    }

    fn depth(&self, flag: Option<usize>, default: usize) -> usize {
        flag.or(self.depth).unwrap_or(default)
    }

    fn probe_size(&self, flag: Option<usize>, default: usize) -> usize {
        flag.or(self.probe_size).unwrap_or(default)
    }
}

fn parse_term(lang: LangId, src: &str) -> Result<Term> {
    language(lang)
        .parse(src)
        .map_err(|e| anyhow!("{src:?}: {e}"))
}

fn emit(output: Option<&PathBuf>, text: &str) -> Result<()> {
    match output {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn trace_text(lang: LangId, tr: &Trace) -> String {
    let l = language(lang);
    let mut s = String::new();
    for e in &tr.entries {
        match &e.kind {
            StepKind::Reduct(succ) if succ.len() > 1 || succ.iter().any(|(_, w)| w.is_some()) => {
                s.push_str(&format!("{}  →\n", l.print(&e.term)));
                for (t, w) in succ {
                    match w {
                        Some(w) => s.push_str(&format!("    →^{w}  {}\n", l.print(t))),
                        None => s.push_str(&format!("    ∋  {}\n", l.print(t))),
                    }
                }
            }
            StepKind::Reduct(succ) if succ.is_empty() => s.push_str(&format!("{}  → ∅\n", l.print(&e.term))),
            StepKind::Stuck(why) => s.push_str(&format!("{}  ⊥  ({why})\n", l.print(&e.term))),
            k => s.push_str(&format!("{}  {}\n", l.print(&e.term), k.symbol())),
        }
    }
    if tr.diverged {
        s.push_str("…  (fuel exhausted)\n");
    }
    s
}

fn trace_json(lang: LangId, src: &str, tr: &Trace) -> serde_json::Value {
    let l = language(lang);
    let entries: Vec<_> = tr
        .entries
        .iter()
        .map(|e| {
            let mut v = json!({ "term": l.print(&e.term), "kind": e.kind.symbol() });
            match &e.kind {
                StepKind::Reduct(succ) => {
                    v["successors"] = succ
                        .iter()
                        .map(|(t, w)| match w {
                            Some(w) => json!({ "term": l.print(t), "weight": w.to_string() }),
                            None => json!({ "term": l.print(t) }),
                        })
                        .collect();
                }
                StepKind::Stuck(why) => v["reason"] = json!(why),
                _ => {}
            }
            v
        })
        .collect();
    json!({ "lang": lang, "term": src, "entries": entries, "diverged": tr.diverged })
}

/// Closes an open λ term with the given environment.
fn close_lambda(t: &Term, env: &[String]) -> Result<Term> {
    let (body, m) = LamTerm::from_term(t)?;
    if env.len() != m as usize {
        bail!("term has {m} free variables but {} --env terms were given", env.len());
    }
    let items = env
        .iter()
        .map(|s| {
            let u = parse_term(LangId::Lambda, s)?;
            if u.sort() != &Sort::Ctx(0) {
                bail!("--env {s:?} is not closed");
            }
            Ok(LamTerm::from_term(&u)?.0)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(body.subst(m, &items, 0)?.to_term(0)?)
}

fn suite_langs(suite: Suite, lang: &str) -> Result<Vec<LangId>> {
    if lang == "all" {
        return Ok(suite.languages());
    }
    let l: LangId = lang.parse().map_err(|e| anyhow!("{e}"))?;
    if !suite.languages().contains(&l) {
        bail!("suite {suite} does not apply to {l}");
    }
    Ok(vec![l])
}

/// Runs the command; `Ok(false)` means a negative verdict (exit 1).
fn run(cli: Cli) -> Result<bool> {
    let cfg = Config::load(cli.config.as_ref())?;
    match cli.cmd {
        Cmd::Trace {
            lang,
            term,
            fuel,
            stage,
            branch,
            seed,
            format,
        } => {
            let t = parse_term(lang, &term)?;
            if stage.is_some() && !lang.is_guarded() {
                bail!("{lang} is not stage-indexed");
            }
            let fuel = stage.or(fuel).or(cfg.fuel).unwrap_or(100);
            let mut rng = ChaCha8Rng::seed_from_u64(seed.or(cfg.seed).unwrap_or(42));
            let model = language(lang).operational();
            let tr = run_trace_with(&model, &t, fuel, |succ| match branch {
                Branch::First => 0,
                Branch::Random => rng.gen_range(0..succ.len()),
            });
            let text = match format {
                TextOrJson::Text => trace_text(lang, &tr),
                TextOrJson::Json => format!("{}\n", trace_json(lang, &term, &tr)),
            };
            emit(None, &text)?;
            Ok(true)
        }
        Cmd::Denote {
            lang,
            term,
            depth,
            probe_size,
            format,
            env,
            output,
        } => {
            let mut t = parse_term(lang, &term)?;
            if !env.is_empty() {
                if lang != LangId::Lambda {
                    bail!("--env applies to lambda terms only");
                }
                t = close_lambda(&t, &env)?;
            }
            let depth = cfg.depth(depth, 6);
            let l = language(lang);
            let den = l.denotational();
            let d = den.denote(&t)?;
            let probes = hogsos::gitrees::mapped_probes(&l.probes(cfg.probe_size(probe_size, 4)), {
                let den = den.clone();
                move |p: &Term| den.denote(p)
            });
            let tree = Truncator::new(den, probes).truncate(&d, depth)?;
            let text = match format {
                TreeFormat::Json => format!("{}\n", tree.to_json_pretty()),
                TreeFormat::Dot => tree.to_dot(),
            };
            emit(output.as_ref(), &text)?;
            Ok(true)
        }
        Cmd::Bisim {
            lang,
            p,
            q,
            depth,
            probe_size,
            format,
        } => {
            let (tp, tq) = (parse_term(lang, &p)?, parse_term(lang, &q)?);
            if tp.sort() != tq.sort() {
                bail!("sorts differ: {} vs {}", tp.sort(), tq.sort());
            }
            let depth = cfg.depth(depth, 6);
            let bis = Bisimulator::new(lang, language(lang).probes(cfg.probe_size(probe_size, 4)));
            let report = bis.check(&tp, &tq, depth)?;
            let text = match format {
                TextOrJson::Json => format!("{}\n", serde_json::to_string(&report)?),
                TextOrJson::Text => match report.witness() {
                    None => format!("related at depth {depth}\n"),
                    Some(w) => format!("distinguished at depth {}: {w}\n", w.depth),
                },
            };
            emit(None, &text)?;
            Ok(report.related())
        }
        Cmd::Suite {
            name,
            lang,
            seed,
            depth,
            probe_size,
            samples,
            max_size,
            params,
            law,
            mutation,
            output,
        } => {
            let overrides: serde_json::Map<String, serde_json::Value> = match &params {
                Some(s) => serde_json::from_str(s).map_err(|e| anyhow!("--params: {e}"))?,
                None => Default::default(),
            };
            if law.is_some() && mutation.is_some() {
                bail!("--law and --mutation are exclusive");
            }
            let mut out = String::new();
            let mut all_pass = true;
            for l in suite_langs(name, &lang)? {
                let mut p = name.default_params_for(l);
                let mut merged = serde_json::to_value(&p)?;
                for (k, v) in &overrides {
                    if merged.get(k).is_none() {
                        bail!("--params: unknown key {k}");
                    }
                    merged[k] = v.clone();
                }
                p = serde_json::from_value(merged).map_err(|e| anyhow!("--params: {e}"))?;
                p.seed = seed.or(cfg.seed).unwrap_or(p.seed);
                p.depth = depth.or(cfg.depth).unwrap_or(p.depth);
                p.probe_size = probe_size.or(cfg.probe_size).unwrap_or(p.probe_size);
                p.samples = samples.or(cfg.samples).unwrap_or(p.samples);
                p.max_size = max_size.or(cfg.max_size).unwrap_or(p.max_size);
                let law_under_test = match (&law, &mutation) {
                    (Some(path), _) => {
                        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                        Some(std::sync::Arc::new(HoGsosLaw::parse(language(l).sig().clone(), &text)?))
                    }
                    (_, Some(id)) => {
                        let mu = mutations(l)
                            .iter()
                            .find(|m| m.id == id)
                            .ok_or_else(|| anyhow!("{l} has no mutation {id}"))?;
                        Some(mu.law(l)?)
                    }
                    _ => None,
                };
                let report = run_suite_with_law(name, l, law_under_test, &p)?;
                all_pass &= report.passed();
                out.push_str(&report.to_json_lines());
            }
            emit(output.as_ref(), &out)?;
            Ok(all_pass)
        }
        Cmd::Stage { lang, n, limit, format } => {
            let sl = language(lang)
                .stage_language()
                .ok_or_else(|| anyhow!("{lang} has no stage enumeration"))?;
            let elems = enumerate_stage(sl, n)?;
            let shown = limit.unwrap_or(elems.len()).min(elems.len());
            let text = match format {
                TextOrJson::Json => {
                    let items: Vec<String> = elems.iter().take(shown).map(ToString::to_string).collect();
                    format!("{}\n", json!({ "lang": lang, "stage": n, "size": elems.len(), "elements": items }))
                }
                TextOrJson::Text => {
                    let mut s = format!("{} elements\n", elems.len());
                    for e in elems.iter().take(shown) {
                        s.push_str(&format!("  {e}\n"));
                    }
                    if shown < elems.len() {
                        s.push_str(&format!("  … {} more\n", elems.len() - shown));
                    }
                    s
                }
            };
            emit(None, &text)?;
            Ok(true)
        }
        Cmd::Law { lang } => {
            emit(None, &language(lang).law.to_string())?;
            Ok(true)
        }
        Cmd::Mutations { lang } => {
            let mut s = String::new();
            for m in mutations(lang) {
                s.push_str(&format!("{}\n  replaces: {}\n  with:     {}\n  {}\n", m.id, m.pattern, m.replacement, m.description));
            }
            emit(None, &s)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
