use std::collections::HashMap;
use std::sync::Arc;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::gen::{gen_pairs, gen_program_terms, gen_terms};
use super::mutation::mutations;
use super::oracle::{canonical_reducts, CombinatorOracle, RefStep};
use super::{Params, Suite, SuiteReport};
use crate::behavior::{Env, Step, StepTag, Weight};
use crate::bisim::{pow_bisim, prob_bisim, Bisimulator, RefinementKey};
use crate::engine::{
    check_bialgebra_law, Comparison, DenotationalModel, HoGsosLaw, Model, OperationalModel, StagedBehavior,
};
use crate::error::{Error, Result};
use crate::gitrees::{
    approximant, enumerate_stage, mapped_probes, poisoned, tree_difference, Denotation, PoisonLog, ProbeSet,
    Truncator,
};
use crate::kernel::{OperatorDecl, Sort, Term};
use crate::lang::lambda::{LamTerm, LambdaSig};
use crate::lang::{language, LangId};

/// Terms per sort in the pools that pairs and triples are drawn from.
const POOL: usize = 64;
/// Samples processed between early-exit checks.
const CHUNK: usize = 32;

/// Models and observers of one law at one probe size.
pub struct Bench {
    pub lang: LangId,
    pub law: Arc<HoGsosLaw>,
    pub op: Arc<OperationalModel>,
    pub den: Arc<DenotationalModel>,
    pub term_probes: ProbeSet<Term>,
    pub den_probes: ProbeSet<Denotation>,
    pub op_tr: Truncator<OperationalModel>,
    pub den_tr: Truncator<DenotationalModel>,
}

impl Bench {
    pub fn new(lang: LangId, law: &Arc<HoGsosLaw>, probe_size: usize) -> Result<Bench> {
        let op = OperationalModel::new(law.clone());
        let den = DenotationalModel::new(law.clone())?;
        let term_probes = language(lang).probes(probe_size);
        let d = den.clone();
        let den_probes = mapped_probes(&term_probes, move |t: &Term| d.denote(t));
        Ok(Bench {
            lang,
            law: law.clone(),
            op_tr: Truncator::new(op.clone(), term_probes.clone()),
            den_tr: Truncator::new(den.clone(), den_probes.clone()),
            op,
            den,
            term_probes,
            den_probes,
        })
    }

    pub fn shipped(lang: LangId, probe_size: usize) -> Result<Bench> {
        Bench::new(lang, &language(lang).law, probe_size)
    }

    pub fn denote(&self, t: &Term) -> Result<Denotation> {
        self.den.denote(t)
    }

    pub fn print(&self, t: &Term) -> String {
        language(self.lang).print(t)
    }

    /// Empties every memo table; called between chunks of samples to keep
    /// memory bounded.
    pub fn clear(&self) {
        self.op.clear_cache();
        self.den.clear_cache();
        self.op_tr.clear_cache();
        self.den_tr.clear_cache();
    }
}

impl Drop for Bench {
    // memoized denotations hold the model that memoizes them
    fn drop(&mut self) {
        self.clear();
    }
}

fn pair_subject(lang: LangId, p: &Term, q: &Term) -> String {
    format!("{}  |  {}", language(lang).print(p), language(lang).print(q))
}

/// Runs `f` over `items` in parallel, in chunks, keeping input order; stops
/// after the first chunk containing a failure when `stop_early` is set.
fn run_chunked<T: Sync, R: Send>(
    items: &[T],
    stop_early: bool,
    f: impl Fn(&T) -> R + Sync,
    failed: impl Fn(&R) -> bool,
) -> Vec<R> {
    run_chunked_with(items, stop_early, f, failed, || {})
}

/// [`run_chunked`], calling `between` before each chunk.
fn run_chunked_with<T: Sync, R: Send>(
    items: &[T],
    stop_early: bool,
    f: impl Fn(&T) -> R + Sync,
    failed: impl Fn(&R) -> bool,
    between: impl Fn(),
) -> Vec<R> {
    let mut out = Vec::with_capacity(items.len());
    for chunk in items.chunks(CHUNK) {
        between();
        let part: Vec<R> = chunk.par_iter().map(&f).collect();
        let stop = stop_early && part.iter().any(&failed);
        out.extend(part);
        if stop {
            break;
        }
    }
    out
}

// ------------------------------------------------------------------ adequacy

struct PairOutcome {
    den_equal: bool,
    related: bool,
    den_witness: Option<crate::gitrees::Witness>,
    bisim_witness: Option<crate::gitrees::Witness>,
}

/// For each pair: obs-equal denotations (under `law`) must not be
/// distinguished by bisimilarity (under the shipped operational model), and
/// every distinguished pair must have a denotational witness.
pub fn check_adequacy(lang: LangId, law: &Arc<HoGsosLaw>, params: &Params) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(Suite::Adequacy, Some(lang), params);
    let bench = Bench::new(lang, law, params.probe_size)?;
    let reference = OperationalModel::new(language(lang).law.clone());
    let bis = Bisimulator::with_model(lang, reference.clone(), language(lang).probes(params.probe_size));
    let pairs = gen_pairs(lang, params.max_size, POOL, params.samples, params.seed)?;
    let n = params.depth;
    let outcomes = run_chunked_with(
        &pairs,
        false,
        |(p, q)| -> Result<PairOutcome> {
            let (dp, dq) = (bench.denote(p)?, bench.denote(q)?);
            let den_witness = bench.den_tr.witness(&dp, &dq, n)?;
            let verdict = bis.check(p, q, n)?;
            Ok(PairOutcome {
                den_equal: den_witness.is_none(),
                related: verdict.related(),
                den_witness,
                bisim_witness: verdict.witness().cloned(),
            })
        },
        |_| false,
        || {
            bench.clear();
            reference.clear_cache();
            bis.truncator().clear_cache();
        },
    );
    let (mut equal, mut distinguished, mut witnessed, mut violations) = (0usize, 0usize, 0usize, 0usize);
    for ((p, q), o) in pairs.iter().zip(outcomes) {
        let subject = pair_subject(lang, p, q);
        match o {
            Err(e) => {
                violations += 1;
                report.push("pair", subject, false).with_detail(format!("error: {e}"));
            }
            Ok(o) => {
                equal += o.den_equal as usize;
                distinguished += !o.related as usize;
                let witness_ok = o.related || o.den_witness.is_some();
                witnessed += (!o.related && o.den_witness.is_some()) as usize;
                let ok = !(o.den_equal && !o.related) && witness_ok;
                violations += !ok as usize;
                let rec = report.push("pair", subject, ok);
                let detail = match (o.den_equal, o.related) {
                    (true, true) => "denotations equal, related",
                    (false, true) => "denotations differ, related",
                    (false, false) => "denotations differ, distinguished",
                    (true, false) => "VIOLATION: denotations equal, distinguished",
                };
                rec.with_detail(detail);
                if let Some(w) = o.den_witness.as_ref().or(o.bisim_witness.as_ref()) {
                    rec.with_witness(w);
                }
            }
        }
    }
    report.stat("pairs", pairs.len());
    report.stat("obs_equal", equal);
    report.stat("distinguished", distinguished);
    report.stat("distinguished_with_witness", witnessed);
    report.stat("violations", violations);
    Ok(report)
}

// --------------------------------------------------------- compositionality

/// `a_ρ(f, ⟦args⟧)` against `⟦f(args)⟧` and against the shipped operational
/// observation of `f(args)`, exactly, at depth `params.depth`.
pub fn check_compositionality(
    lang: LangId,
    law: &Arc<HoGsosLaw>,
    params: &Params,
    stop_early: bool,
) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(Suite::Compositionality, Some(lang), params);
    let bench = match Bench::new(lang, law, params.probe_size) {
        Ok(b) => b,
        Err(e @ Error::FlatnessViolation(_)) => {
            report.push("flatness", law.name.clone(), false).with_detail(e.to_string());
            return Ok(report);
        }
        Err(e) => return Err(e),
    };
    let reference = Bench::shipped(lang, params.probe_size)?;
    let terms = algebra_samples(lang, params)?;
    let n = params.depth;
    let outcomes = run_chunked_with(
        &terms,
        stop_early,
        |t| -> Result<std::result::Result<(), String>> {
            let op = t.op().ok_or_else(|| Error::Invalid("open sample".into()))?;
            let args = t.children().iter().map(|a| bench.denote(a)).collect::<Result<Vec<_>>>()?;
            let composed = bench.den.algebra(op, args)?;
            let whole = bench.denote(t)?;
            let a = bench.den_tr.truncate(&composed, n)?;
            let b = bench.den_tr.truncate(&whole, n)?;
            let c = reference.op_tr.truncate(t, n)?;
            Ok(if a != b {
                Err(diff("a_ρ(f, ⟦args⟧) vs ⟦f(args)⟧", &a, &b))
            } else if a != c {
                Err(diff("a_ρ(f, ⟦args⟧) vs operational", &a, &c))
            } else {
                Ok(())
            })
        },
        |o| !matches!(o, Ok(Ok(()))),
        || {
            bench.clear();
            reference.clear();
        },
    );
    let mut violations = 0usize;
    for (t, o) in terms.iter().zip(outcomes) {
        let subject = bench.print(t);
        match o {
            Err(e) => {
                violations += 1;
                report.push("sample", subject, false).with_detail(format!("error: {e}"));
            }
            Ok(o) => {
                violations += o.is_err() as usize;
                let rec = report.push("algebra-morphism", subject, o.is_ok());
                if let Err(d) = o {
                    rec.with_detail(d);
                }
            }
        }
    }
    report.stat("samples", report.records.iter().filter(|r| r.check == "algebra-morphism").count());
    report.stat("violations", violations);
    Ok(report)
}

/// Program terms; for λ, terms in contexts of length 0, 1 and 2.
fn algebra_samples(lang: LangId, params: &Params) -> Result<Vec<Term>> {
    if lang != LangId::Lambda {
        return gen_program_terms(lang, params.max_size, params.samples, params.seed);
    }
    let per = params.samples.div_ceil(3);
    let mut out = Vec::with_capacity(params.samples);
    for m in 0..3u32 {
        out.extend(gen_terms(lang, &Sort::Ctx(m), params.max_size, per, params.seed + m as u64)?);
    }
    out.truncate(params.samples);
    Ok(out)
}

fn diff(what: &str, a: &crate::gitrees::Tree, b: &crate::gitrees::Tree) -> String {
    match tree_difference(a, b) {
        Some((path, l, r)) => {
            let path: Vec<String> = path.iter().map(ToString::to_string).collect();
            format!("{what}: after [{}]: {l} vs {r}", path.join(" "))
        }
        None => format!("{what}: trees differ"),
    }
}

// ---------------------------------------------------------------- bialgebra

/// The pentagon with `law` against the shipped models (operational, exact;
/// denotational, observational at `depth` on the first fifth of the
/// samples, at most 100), and the engine under `law` against the reference
/// interpreter.
pub fn check_bialgebra(lang: LangId, law: &Arc<HoGsosLaw>, params: &Params, stop_early: bool) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(Suite::Bialgebra, Some(lang), params);
    let reference = Bench::shipped(lang, params.probe_size)?;
    let terms = gen_program_terms(lang, params.max_size, params.samples, params.seed)?;
    let samples: Vec<(Arc<OperatorDecl>, Vec<Term>)> = terms
        .iter()
        .map(|t| (t.op().expect("closed").clone(), t.children().to_vec()))
        .collect();

    let exact_probes = language(lang).probes(params.probe_size.min(3));
    let op_report = check_bialgebra_law(law, &reference.op, &samples, Comparison::Exact, &exact_probes);
    report
        .push("pentagon-operational", format!("{} samples", op_report.checked), op_report.ok())
        .with_detail(format!("{} violations", op_report.violations.len()));
    for v in op_report.violations.iter().take(20) {
        report.push("pentagon-operational-violation", v.sample.clone(), false).with_detail(v.detail.clone());
    }
    report.stat("operational_samples", op_report.checked);
    report.stat("operational_violations", op_report.violations.len());
    if stop_early && !op_report.ok() {
        return Ok(report);
    }

    let den_count = (params.samples / 5).clamp(1, 100).min(samples.len());
    let den_samples = samples[..den_count]
        .iter()
        .map(|(op, args)| Ok((op.clone(), args.iter().map(|a| reference.denote(a)).collect::<Result<Vec<_>>>()?)))
        .collect::<Result<Vec<_>>>()?;
    let den_report = check_bialgebra_law(
        law,
        &reference.den,
        &den_samples,
        Comparison::Observational(params.depth),
        &reference.den_probes,
    );
    report
        .push("pentagon-denotational", format!("{} samples", den_report.checked), den_report.ok())
        .with_detail(format!("{} violations at depth {}", den_report.violations.len(), params.depth));
    for v in den_report.violations.iter().take(20) {
        report.push("pentagon-denotational-violation", v.sample.clone(), false).with_detail(v.detail.clone());
    }
    report.stat("denotational_samples", den_report.checked);
    report.stat("denotational_violations", den_report.violations.len());
    if stop_early && !den_report.ok() {
        return Ok(report);
    }

    let model = OperationalModel::new(law.clone());
    let oracle_probes = language(lang).probes(2);
    let outcomes = run_chunked(
        &terms,
        stop_early,
        |t| match lang {
            LangId::Lambda => lambda_kappa(&model, t),
            _ => combinator_agreement(lang, &model, t, &oracle_probes),
        },
        |r| !matches!(r, Ok(None)),
    );
    let mut disagreements = 0;
    for (t, o) in terms.iter().zip(outcomes) {
        let (ok, detail) = match o {
            Ok(None) => (true, None),
            Ok(Some(d)) => (false, Some(d)),
            Err(e) => (false, Some(format!("error: {e}"))),
        };
        disagreements += !ok as usize;
        let rec = report.push("reference-interpreter", reference.print(t), ok);
        if let Some(d) = detail {
            rec.with_detail(d);
        }
    }
    report.stat("oracle_disagreements", disagreements);
    Ok(report)
}

fn combinator_agreement(
    lang: LangId,
    model: &Arc<OperationalModel>,
    t: &Term,
    probes: &ProbeSet<Term>,
) -> Result<Option<String>> {
    let oracle = CombinatorOracle::new(lang)?;
    let expected = oracle.step(t)?;
    let b = model.behavior(t)?;
    if b.tag() != expected.tag() {
        return Ok(Some(format!("engine {} vs reference {}", b.tag(), expected.tag())));
    }
    if model.law().guarded {
        let zero = model.behavior_at(t, 0)?;
        if zero.tag() != expected.tag() {
            return Ok(Some(format!("stage 0: engine {} vs reference {}", zero.tag(), expected.tag())));
        }
    }
    match (&b.step, &expected) {
        (Step::Reduct(_), RefStep::Reduct(want)) => {
            let got = canonical_reducts(&b).expect("reduct");
            if &got != want {
                return Ok(Some(format!("reducts {got:?} vs reference {want:?}")));
            }
        }
        (Step::Function(f), RefStep::Function) => {
            let (dom, _) = model
                .signature()
                .function_sorts(t.sort())
                .ok_or_else(|| Error::Invalid("function without a domain".into()))?;
            for p in probes.get(&dom)?.iter() {
                let (got, want) = (f.apply(p)?, oracle.apply(t, p)?);
                if got != want {
                    return Ok(Some(format!("on {p:?}: {got:?} vs reference {want:?}")));
                }
            }
        }
        _ => {}
    }
    Ok(None)
}

// ---------------------------------------------------------------- λ oracle

/// κ against weak-head β at stages 1 and 2, and the stage-0 tag.
fn lambda_kappa(model: &Arc<OperationalModel>, t: &Term) -> Result<Option<String>> {
    let (lt, m) = LamTerm::from_term(t)?;
    let expected = lt.beta_step(m);
    for stage in [1, 2] {
        let StagedBehavior::Full(b) = model.behavior_at(t, stage)? else {
            return Ok(Some(format!("stage {stage}: trivial behaviour")));
        };
        let mismatch = match (&b.step, &expected) {
            (Step::Reduct(bag), Some(e)) => {
                let got = bag.support();
                if got.len() != 1 || LamTerm::from_term(got[0])?.0 != *e {
                    Some(format!("reduct {got:?} vs β {e:?}"))
                } else {
                    None
                }
            }
            (Step::Function(_), None) if matches!(lt, LamTerm::Lam(_)) => None,
            (Step::Terminal, None) if !matches!(lt, LamTerm::Lam(_)) => None,
            (_, e) => Some(format!("engine {} vs β {e:?}", b.tag())),
        };
        if let Some(d) = mismatch {
            return Ok(Some(format!("stage {stage}: {d}")));
        }
    }
    let zero = model.behavior_at(t, 0)?.tag();
    let want = match (&lt, &expected) {
        (_, Some(_)) => StepTag::Reduct,
        (LamTerm::Lam(_), None) => StepTag::Function,
        _ => StepTag::Terminal,
    };
    Ok((zero != want).then(|| format!("stage 0: engine {zero} vs {want}")))
}

/// ν applied to `env` against simultaneous substitution.
fn lambda_nu(model: &Arc<OperationalModel>, t: &Term, env: &[Term], l: u32) -> Result<Option<String>> {
    let (lt, m) = LamTerm::from_term(t)?;
    let items: Vec<LamTerm> = env.iter().map(|u| Ok(LamTerm::from_term(u)?.0)).collect::<Result<_>>()?;
    let want = lt.subst(m, &items, l)?.to_term(l)?;
    let b = model.behavior(t)?;
    let s = b
        .subst
        .as_ref()
        .ok_or_else(|| Error::Invalid("no substitution component".into()))?;
    let got = s.apply(&Env {
        target: Sort::Ctx(l),
        items: env.to_vec(),
    })?;
    Ok((got != want).then(|| format!("{} vs {}", language(LangId::Lambda).print(&got), language(LangId::Lambda).print(&want))))
}

/// Engine κ against weak-head β on `samples` closed terms, and engine ν
/// against simultaneous substitution on `samples` (term, environment)
/// pairs, contexts up to 3.
pub fn check_lambda_oracle(law: &Arc<HoGsosLaw>, params: &Params, stop_early: bool) -> Result<SuiteReport> {
    let lang = LangId::Lambda;
    let mut report = SuiteReport::new(Suite::LambdaOracle, Some(lang), params);
    let model = OperationalModel::new(law.clone());
    let print = |t: &Term| language(lang).print(t);

    let terms = gen_terms(lang, &Sort::Ctx(0), params.max_size, params.samples, params.seed)?;
    let outcomes = run_chunked(&terms, stop_early, |t| lambda_kappa(&model, t), |r| !matches!(r, Ok(None)));
    let mut kappa_bad = 0;
    for (t, o) in terms.iter().zip(outcomes) {
        let (ok, d) = flatten(o);
        kappa_bad += !ok as usize;
        let rec = report.push("kappa", print(t), ok);
        if let Some(d) = d {
            rec.with_detail(d);
        }
    }
    report.stat("kappa_samples", terms.len());
    report.stat("kappa_disagreements", kappa_bad);
    if stop_early && kappa_bad > 0 {
        return Ok(report);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ 0x1a3b_da);
    let mut bodies: HashMap<u32, Vec<Term>> = HashMap::new();
    let mut envs: HashMap<u32, Vec<Term>> = HashMap::new();
    for m in 1..=3u32 {
        bodies.insert(m, gen_terms(lang, &Sort::Ctx(m), params.max_size.min(10), 200, params.seed + m as u64)?);
    }
    for l in 0..=2u32 {
        envs.insert(l, gen_terms(lang, &Sort::Ctx(l), 6, 100, params.seed + 10 + l as u64)?);
    }
    let cases: Vec<(Term, Vec<Term>, u32)> = (0..params.samples)
        .map(|_| {
            let m = rng.gen_range(1..=3u32);
            let l = rng.gen_range(0..=2u32);
            let body = &bodies[&m];
            let pool = &envs[&l];
            let t = body[rng.gen_range(0..body.len())].clone();
            let env = (0..m).map(|_| pool[rng.gen_range(0..pool.len())].clone()).collect();
            (t, env, l)
        })
        .collect();
    let outcomes = run_chunked(
        &cases,
        stop_early,
        |(t, env, l)| lambda_nu(&model, t, env, *l),
        |r| !matches!(r, Ok(None)),
    );
    let mut nu_bad = 0;
    for ((t, env, l), o) in cases.iter().zip(outcomes) {
        let (ok, d) = flatten(o);
        nu_bad += !ok as usize;
        let env_s: Vec<String> = env.iter().map(print).collect();
        let rec = report.push("nu", format!("{} [{}] into {l}", print(t), env_s.join(", ")), ok);
        if let Some(d) = d {
            rec.with_detail(d);
        }
    }
    report.stat("nu_samples", cases.len());
    report.stat("nu_disagreements", nu_bad);
    Ok(report)
}

fn flatten(o: Result<Option<String>>) -> (bool, Option<String>) {
    match o {
        Ok(None) => (true, None),
        Ok(Some(d)) => (false, Some(d)),
        Err(e) => (false, Some(format!("error: {e}"))),
    }
}

// -------------------------------------------------------------------- tower

const TOWER_DEPTH: usize = 5;

/// Guarded languages: approximant `n` agrees with `Z` at every stage
/// `k < n ≤ bound`. Typed languages: observations through iteration `n`
/// and `n + 1` agree on program types of complexity `≤ n ≤ bound`.
pub fn check_tower(lang: LangId, bound: usize, params: &Params) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(Suite::Tower, Some(lang), params);
    if let Some(sl) = language(lang).stage_language() {
        if bound > sl.bound() + 1 {
            return Err(Error::StageTooLarge {
                requested: bound,
                bound: sl.bound() + 1,
            });
        }
        let mut exact = Vec::new();
        for k in 0..bound {
            let mut z = enumerate_stage(sl, k)?;
            z.sort();
            report.push("stage-size", format!("Z_{k}"), true).with_detail(format!("{} elements", z.len()));
            report.stat(&format!("z{k}"), z.len());
            exact.push(z);
        }
        for n in 1..=bound {
            let tower = approximant(sl, n, n - 1)?;
            for (k, z) in exact.iter().enumerate().take(n) {
                let mut a = tower.stages[k].clone();
                a.sort();
                report
                    .push("approximant", format!("F^{n}1 at stage {k}"), &a == z)
                    .with_detail(format!("{} vs {} elements", a.len(), z.len()));
            }
        }
        return Ok(report);
    }
    if !lang.is_typed() {
        return Err(Error::Invalid(format!("{lang} has no finite stage enumeration")));
    }
    let bench = Bench::shipped(lang, params.probe_size)?;
    let sorts = language(lang).program_sorts();
    let mut separated = 0;
    for n in 1..=bound {
        let here = Truncator::new(bench.den.clone(), bench.den_probes.clone()).at_iteration(n as u32);
        let next = Truncator::new(bench.den.clone(), bench.den_probes.clone()).at_iteration(n as u32 + 1);
        for (i, sort) in sorts.iter().enumerate() {
            let complexity = sort.as_ty().map_or(0, |t| t.complexity() as usize);
            let terms = gen_terms(lang, sort, params.max_size, 40, params.seed + i as u64)?;
            let mut agree = 0;
            let mut differ = 0;
            for t in &terms {
                let d = bench.denote(t)?;
                if here.truncate(&d, TOWER_DEPTH)? == next.truncate(&d, TOWER_DEPTH)? {
                    agree += 1;
                } else {
                    differ += 1;
                }
            }
            if complexity <= n {
                report
                    .push("iteration-agreement", format!("iterations {n}, {} at {sort}", n + 1), differ == 0)
                    .with_detail(format!("{agree} agree, {differ} differ"));
            } else {
                separated += differ;
                report
                    .push("iteration-above", format!("iterations {n}, {} at {sort}", n + 1), true)
                    .with_detail(format!("{agree} agree, {differ} differ (complexity {complexity} > {n})"));
            }
        }
    }
    report.stat("separated_above_complexity", separated);
    Ok(report)
}

// ------------------------------------------------------------- guardedness

/// `I x` in the combinator calculi, `(λx.x) x` in λ.
fn delay(lang: LangId, x: &Term) -> Result<Term> {
    match lang {
        LangId::Lambda => {
            let id = Term::make(&LambdaSig::lam(0), vec![Term::constant(&LambdaSig::var(0, 1))?])?;
            Term::make(&LambdaSig::app(0), vec![id, x.clone()])
        }
        _ => {
            let sig = language(lang).sig();
            let i = Term::constant(&sig.instantiate("I", None, &[], Some(&Sort::Untyped))?)?;
            Term::make(&sig.instantiate("app", None, &[Sort::Untyped, Sort::Untyped], None)?, vec![i, x.clone()])
        }
    }
}

fn delayed(lang: LangId, x: &Term, k: usize) -> Result<Term> {
    (0..k).try_fold(x.clone(), |t, _| delay(lang, &t))
}

/// Checks one function on a pair that agrees in `Z` up to stage `n`: the
/// outputs agree at depth `n`, and the output at depth `n` never forces the
/// argument beyond depth `n`.
pub fn guarded_on(
    tr: &Truncator<DenotationalModel>,
    f: &crate::behavior::FunctionNode<Denotation, Denotation>,
    a: &Denotation,
    b: &Denotation,
    n: usize,
) -> Result<std::result::Result<(), String>> {
    if tr.truncate(a, n)? != tr.truncate(b, n)? {
        return Ok(Err(format!("arguments already differ at depth {n}")));
    }
    let (fa, fb) = (tr.truncate(&f.apply(a)?, n)?, tr.truncate(&f.apply(b)?, n)?);
    if fa != fb {
        return Ok(Err(diff(&format!("outputs at depth {n}"), &fa, &fb)));
    }
    let log = PoisonLog::new();
    let probe = poisoned(a, n as i64, &log);
    match f.apply(&probe).and_then(|y| tr.truncate(&y, n)) {
        Ok(t) if t == fa && log.hits() == 0 => Ok(Ok(())),
        Ok(_) => Ok(Err(format!("instrumented argument changed the output ({} hits)", log.hits()))),
        Err(e) => Ok(Err(format!("argument forced beyond depth {n}: {e}"))),
    }
}

/// Function-valued terms fed pairs `I^(n+1) x`, `I^(n+1) y` that agree in
/// `Z` up to stage `n` whatever `x` and `y` are.
pub fn check_guardedness(lang: LangId, law: &Arc<HoGsosLaw>, params: &Params) -> Result<SuiteReport> {
    if !law.guarded {
        return Err(Error::Invalid(format!("{lang} is not a guarded language")));
    }
    let mut report = SuiteReport::new(Suite::Guardedness, Some(lang), params);
    let bench = Bench::new(lang, law, params.probe_size)?;
    let sort = language(lang).program_sorts()[0].clone();
    let pool = gen_terms(lang, &sort, params.max_size, 200, params.seed)?;
    let mut functions = Vec::new();
    for t in &pool {
        if bench.op.behavior(t)?.tag() == StepTag::Function {
            functions.push(t.clone());
        }
    }
    if functions.is_empty() || pool.len() < 2 {
        return Err(Error::Invalid("no function-valued sample terms".into()));
    }
    let max_n = params.depth.saturating_sub(2).min(4);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ 0x9a2d);
    let cases: Vec<(Term, Term, Term, usize)> = (0..params.samples)
        .map(|_| {
            let f = functions[rng.gen_range(0..functions.len())].clone();
            let x = pool[rng.gen_range(0..pool.len())].clone();
            let mut y = pool[rng.gen_range(0..pool.len())].clone();
            while y == x {
                y = pool[rng.gen_range(0..pool.len())].clone();
            }
            (f, x, y, rng.gen_range(0..=max_n))
        })
        .collect();
    let outcomes = run_chunked(
        &cases,
        false,
        |(f, x, y, n)| -> Result<std::result::Result<(), String>> {
            let (a, b) = (delayed(lang, x, n + 1)?, delayed(lang, y, n + 1)?);
            let df = bench.denote(f)?;
            let beh = df.force()?;
            let Step::Function(g) = &beh.step else {
                return Ok(Err("sample is not a function".into()));
            };
            guarded_on(&bench.den_tr, g, &bench.denote(&a)?, &bench.denote(&b)?, *n)
        },
        |_| false,
    );
    let mut violations = 0;
    for ((f, x, y, n), o) in cases.iter().zip(outcomes) {
        let (ok, d) = match o {
            Ok(Ok(())) => (true, None),
            Ok(Err(d)) => (false, Some(d)),
            Err(e) => (false, Some(format!("error: {e}"))),
        };
        violations += !ok as usize;
        let subject = format!("{} on I^{}({}) / I^{}({})", bench.print(f), n + 1, bench.print(x), n + 1, bench.print(y));
        let rec = report.push("later", subject, ok);
        if let Some(d) = d {
            rec.with_detail(d);
        }
    }
    report.stat("pairs", cases.len());
    report.stat("violations", violations);
    Ok(report)
}

// -------------------------------------------------------------- ultrametric

/// Symmetry, `d(x, x) = 0`, the strong triangle inequality and
/// 1-boundedness, exactly, on random same-sort triples.
pub fn check_ultrametric(lang: LangId, law: &Arc<HoGsosLaw>, params: &Params) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(Suite::Ultrametric, Some(lang), params);
    let bench = Bench::new(lang, law, params.probe_size)?;
    let sorts = language(lang).program_sorts();
    let pools: Vec<Vec<Term>> = sorts
        .iter()
        .enumerate()
        .map(|(i, s)| gen_terms(lang, s, params.max_size, POOL, params.seed + i as u64))
        .collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ 0x0d15);
    let triples: Vec<[Term; 3]> = (0..params.samples)
        .map(|_| {
            let p = &pools[rng.gen_range(0..pools.len())];
            [0, 1, 2].map(|_| p[rng.gen_range(0..p.len())].clone())
        })
        .collect();
    let n = params.depth;
    let outcomes = run_chunked(
        &triples,
        false,
        |[x, y, z]| -> Result<std::result::Result<Weight, String>> {
            let (dx, dy, dz) = (bench.denote(x)?, bench.denote(y)?, bench.denote(z)?);
            let d = |a: &Denotation, b: &Denotation| bench.den_tr.distance(a, b, n);
            let (xy, yx, yz, xz, xx) = (d(&dx, &dy)?, d(&dy, &dx)?, d(&dy, &dz)?, d(&dx, &dz)?, d(&dx, &dx)?);
            let one = Weight::one();
            Ok(if !xx.is_zero() {
                Err(format!("d(x, x) = {xx}"))
            } else if xy != yx {
                Err(format!("d(x, y) = {xy} but d(y, x) = {yx}"))
            } else if xz > xy.clone().max(yz.clone()) {
                Err(format!("d(x, z) = {xz} > max({xy}, {yz})"))
            } else if xy > one || yz > one || xz > one || xy < Weight::zero() {
                Err("distance outside [0, 1]".into())
            } else if xy.is_zero() != bench.den_tr.obs_equal(&dx, &dy, n)? {
                Err("zero distance disagrees with obs_equal".into())
            } else {
                Ok(xy)
            })
        },
        |_| false,
    );
    let mut violations = 0;
    let mut nonzero = 0;
    for (tr, o) in triples.iter().zip(outcomes) {
        let subject = tr.iter().map(|t| bench.print(t)).collect::<Vec<_>>().join("  |  ");
        let (ok, d) = match o {
            Ok(Ok(w)) => {
                nonzero += !w.is_zero() as usize;
                (true, format!("d(x, y) = {w}"))
            }
            Ok(Err(d)) => (false, d),
            Err(e) => (false, format!("error: {e}")),
        };
        violations += !ok as usize;
        report.push("triple", subject, ok).with_detail(d);
    }
    report.stat("triples", triples.len());
    report.stat("nonzero_distances", nonzero);
    report.stat("violations", violations);
    Ok(report)
}

// -------------------------------------------------------------------- bisim

/// Downward closure and witness replay on random pairs; for xPTCL and
/// xNCCL, the choice examples checked by partition refinement.
pub fn check_bisim_properties(lang: LangId, params: &Params) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(Suite::Bisim, Some(lang), params);
    let probes = language(lang).probes(params.probe_size);
    let bis = Bisimulator::new(lang, probes.clone());
    let pairs = gen_pairs(lang, params.max_size.min(6), 24, params.samples, params.seed)?;
    let n = params.depth;
    let outcomes = run_chunked(
        &pairs,
        false,
        |(p, q)| -> Result<std::result::Result<String, String>> {
            let verdicts = (0..=n).map(|k| bis.check(p, q, k)).collect::<Result<Vec<_>>>()?;
            for k in 0..n {
                if verdicts[k + 1].related() && !verdicts[k].related() {
                    return Ok(Err(format!("related at {} but not at {k}", k + 1)));
                }
            }
            match verdicts[n].witness() {
                Some(w) if !bis.replay(p, q, w)? => Ok(Err(format!("witness {w} does not replay"))),
                Some(w) => Ok(Ok(format!("distinguished: {w}"))),
                None => Ok(Ok(format!("related at depth {n}"))),
            }
        },
        |_| false,
    );
    for ((p, q), o) in pairs.iter().zip(outcomes) {
        let (ok, d) = match o {
            Ok(Ok(d)) => (true, d),
            Ok(Err(d)) => (false, d),
            Err(e) => (false, format!("error: {e}")),
        };
        report.push("downward-closure", pair_subject(lang, p, q), ok).with_detail(d);
    }
    if matches!(lang, LangId::Xptcl | LangId::Xnccl) {
        choice_checks(lang, params, &probes, &mut report)?;
    }
    Ok(report)
}

/// Probe size and term size for the xNCCL refinement, whose reachable
/// state sets grow with the product of both sides' reduct sets.
const NONDET_CHOICE_SCALE: (usize, usize) = (2, 4);

fn choice_checks(lang: LangId, params: &Params, probes: &ProbeSet<Term>, report: &mut SuiteReport) -> Result<()> {
    let small;
    let (probes, max_size) = if lang == LangId::Xnccl {
        small = language(lang).probes(NONDET_CHOICE_SCALE.0.min(params.probe_size));
        report.stat("choice_probe_size", NONDET_CHOICE_SCALE.0.min(params.probe_size));
        (&small, NONDET_CHOICE_SCALE.1.min(params.max_size))
    } else {
        (probes, params.max_size.min(6))
    };
    report.stat("choice_max_size", max_size);
    let l = language(lang);
    let sig = l.sig();
    let plus = |p: &Term, q: &Term| -> Result<Term> {
        Term::make(&sig.instantiate("plus", None, &[p.sort().clone(), q.sort().clone()], None)?, vec![p.clone(), q.clone()])
    };
    let refine = |universe: &[Term], n: usize| {
        if lang == LangId::Xptcl {
            prob_bisim(lang, universe, n, probes)
        } else {
            pow_bisim(lang, universe, n, probes)
        }
    };
    let n = params.depth;
    if lang == LangId::Xptcl {
        let (e, ee) = (l.parse("e")?, l.parse("e (+) e")?);
        let part = refine(&[e.clone(), ee.clone()], n)?;
        report.push("separated", pair_subject(lang, &e, &ee), !part.related(&e, &ee));
    } else {
        let (s, ss) = (l.parse("S")?, l.parse("S (+) S")?);
        let part = refine(&[s.clone(), ss.clone()], n)?;
        report.push("separated", pair_subject(lang, &s, &ss), !part.related(&s, &ss));
    }
    let pairs = gen_pairs(lang, max_size, 24, params.samples, params.seed ^ 0xc401)?;
    let (mut related, mut mass_errors) = (0, 0);
    for (p, q) in &pairs {
        let (pq, qp) = (plus(p, q)?, plus(q, p)?);
        let part = refine(&[pq.clone(), qp.clone()], n)?;
        let ok = part.related(&pq, &qp) && part.is_valid_for(&[pq.clone(), qp.clone()]);
        let masses_ok = part.keys.iter().all(|(_, k)| match k {
            RefinementKey::Masses(_, ms) => ms.iter().map(|(_, w)| w.clone()).sum::<Weight>().is_one(),
            _ => true,
        });
        related += ok as usize;
        mass_errors += !masses_ok as usize;
        report
            .push("choice-commutes", pair_subject(lang, &pq, &qp), ok && masses_ok)
            .with_detail(format!("{} blocks over {} states", part.blocks.len(), part.explored));
    }
    report.stat("choice_pairs", pairs.len());
    report.stat("choice_related", related);
    report.stat("mass_errors", mass_errors);
    Ok(())
}

// ---------------------------------------------------------------- mutations

/// Runs compositionality on every documented mutation; a record passes when
/// the suite rejects the mutant. Whether the bialgebra suite (and for λ the
/// oracle suite) also rejects it is reported in `detail`.
pub fn check_mutations(lang: LangId, params: &Params) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(Suite::Mutations, Some(lang), params);
    let mut caught_total = 0;
    for mu in mutations(lang) {
        let law = mu.law(lang)?;
        let comp = check_compositionality(lang, &law, params, true)?;
        let mut also = vec![("bialgebra", !check_bialgebra(lang, &law, params, true)?.passed())];
        if lang == LangId::Lambda {
            also.push(("lambda-oracle", !check_lambda_oracle(&law, params, true)?.passed()));
        }
        let caught = !comp.passed();
        caught_total += caught as usize;
        let first = comp
            .failures()
            .first()
            .map(|f| format!("{}: {}", f.subject, f.detail.as_deref().unwrap_or("")))
            .unwrap_or_else(|| "not detected".into());
        let others: Vec<String> = also
            .iter()
            .map(|(n, c)| format!("{n} {}", if *c { "rejects" } else { "accepts" }))
            .collect();
        report
            .push("compositionality-rejects", mu.id.to_string(), caught)
            .with_detail(format!("{}; {first}; {}", mu.description, others.join(", ")));
        for (n, c) in also {
            report.stat(&format!("{}:{n}", mu.id), c);
        }
    }
    report.stat("mutations", mutations(lang).len());
    report.stat("rejected", caught_total);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Params {
        Params {
            depth: 4,
            probe_size: 2,
            samples: 30,
            max_size: 6,
            seed: 1,
        }
    }

    #[test]
    fn adequacy_small() {
        for lang in LangId::ALL {
            let r = check_adequacy(lang, &language(lang).law, &small()).unwrap();
            assert!(r.passed(), "{lang}: {:?}", r.failures());
        }
    }

    #[test]
    fn compositionality_small_and_mutant() {
        let lang = LangId::Xtcl;
        let r = check_compositionality(lang, &language(lang).law, &small(), false).unwrap();
        assert!(r.passed(), "{:?}", r.failures());
        let law = mutations(lang)[2].law(lang).unwrap();
        assert!(!check_compositionality(lang, &law, &small(), true).unwrap().passed());
    }

    #[test]
    fn unguarded_function_is_caught() {
        let bench = Bench::shipped(LangId::Xcl, 2).unwrap();
        // forces its argument two steps further than its output
        let peek = crate::behavior::FunctionNode::new(|a: &Denotation| {
            let b = a.force()?;
            if let Step::Reduct(crate::behavior::Bag::Det(next)) = &b.step {
                next.force()?;
            }
            Ok(a.clone())
        });
        let l = language(LangId::Xcl);
        let (x, y) = (l.parse("I (I S)").unwrap(), l.parse("I (I K)").unwrap());
        let (a, b) = (bench.denote(&x).unwrap(), bench.denote(&y).unwrap());
        assert!(guarded_on(&bench.den_tr, &peek, &a, &b, 0).unwrap().is_err());
        let id = crate::behavior::FunctionNode::new(|a: &Denotation| Ok(a.clone()));
        assert!(guarded_on(&bench.den_tr, &id, &a, &b, 0).unwrap().is_ok());
    }
}
