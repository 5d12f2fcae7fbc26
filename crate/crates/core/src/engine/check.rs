use std::sync::Arc;

use serde::Serialize;

use super::apply::apply_rule;
use super::law::{Branches, ConclusionStep, HoGsosLaw};
use super::{Carrier, Model};
use crate::behavior::{effect_equal, Behavior, Env, Step};
use crate::error::Result;
use crate::gitrees::{ProbeSet, Truncator};
use crate::kernel::{OperatorDecl, Sort};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FlatnessReport {
    pub flat: bool,
    pub violations: Vec<String>,
}

/// A rule for a rank-`j` operator may use operators of rank `≤ j` at the head
/// of each conclusion term and operators of rank `< j` everywhere below it.
pub fn check_flatness(law: &HoGsosLaw) -> FlatnessReport {
    let mut violations = Vec::new();
    for rule in &law.rules {
        let fam = &rule.pattern.family;
        let Some(j) = law.rank(fam) else {
            violations.push(format!("operator {fam} has no rank"));
            continue;
        };
        let mut exprs = Vec::new();
        match &rule.conclusion.step {
            ConclusionStep::Terminal => {}
            ConclusionStep::Function(e) => exprs.push(e),
            ConclusionStep::Reduct(b) => exprs.extend(match b {
                Branches::Single(e) => vec![e],
                Branches::Set(es) => es.iter().collect(),
                Branches::Dist(ws) => ws.iter().map(|(_, e)| e).collect(),
            }),
        }
        exprs.extend(rule.conclusion.subst.iter());
        for e in exprs {
            e.visit_ops(false, &mut |g, nested| match law.rank(g) {
                None => violations.push(format!("rule for {fam}: operator {g} has no rank")),
                Some(r) if nested && r >= j => violations.push(format!(
                    "rule for {fam} (rank {j}): {g} (rank {r}) occurs below the head"
                )),
                Some(r) if !nested && r > j => violations.push(format!(
                    "rule for {fam} (rank {j}): head {g} has higher rank {r}"
                )),
                _ => {}
            });
        }
    }
    FlatnessReport {
        flat: violations.is_empty(),
        violations,
    }
}

/// How the two legs of the pentagon are compared.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Comparison {
    /// Successors compared by carrier equality, functions on every probe.
    Exact,
    /// Truncations compared at the given depth.
    Observational(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BialgebraViolation {
    pub sample: String,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct BialgebraReport {
    pub checked: usize,
    pub violations: Vec<BialgebraViolation>,
}

impl BialgebraReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// The ρ-bialgebra law at each sample `σ = f(x₁..xₙ)`: the coalgebra after
/// the algebra, `c(a(σ))`, against `B(id, â∘Σ*∇)(ρ(Σ⟨id, c⟩(σ)))`, where the
/// second leg runs `law` over the model's own coalgebra and algebra.
pub fn check_bialgebra_law<M: Model>(
    law: &Arc<HoGsosLaw>,
    model: &Arc<M>,
    samples: &[(Arc<OperatorDecl>, Vec<M::C>)],
    comparison: Comparison,
    probes: &ProbeSet<M::C>,
) -> BialgebraReport {
    let truncator = match comparison {
        Comparison::Observational(_) => Some(Truncator::new(model.clone(), probes.clone())),
        Comparison::Exact => None,
    };
    let mut report = BialgebraReport::default();
    for (op, args) in samples {
        report.checked += 1;
        let sample = format!("{op}{args:?}");
        let outcome = (|| -> Result<Option<String>> {
            let whole = model.build(op, args.clone())?;
            let left = model.behavior(&whole)?;
            let right = apply_rule(law, model, op, args.clone())?;
            match (&truncator, comparison) {
                (Some(tr), Comparison::Observational(depth)) => {
                    let l = tr.truncate_behavior(&left, whole.sort(), depth)?;
                    let r = tr.truncate_behavior(&right, whole.sort(), depth)?;
                    Ok((l != r).then(|| format!("truncations differ at depth {depth}")))
                }
                _ => exact_difference(&left, &right, whole.sort(), model.as_ref(), probes),
            }
        })();
        match outcome {
            Ok(None) => {}
            Ok(Some(detail)) => report.violations.push(BialgebraViolation { sample, detail }),
            Err(e) => report.violations.push(BialgebraViolation {
                sample,
                detail: format!("error: {e}"),
            }),
        }
    }
    report
}

fn exact_difference<M: Model>(
    left: &Behavior<M::C>,
    right: &Behavior<M::C>,
    sort: &Sort,
    model: &M,
    probes: &ProbeSet<M::C>,
) -> Result<Option<String>> {
    if left.tag() != right.tag() {
        return Ok(Some(format!("tags {} vs {}", left.tag(), right.tag())));
    }
    match (&left.step, &right.step) {
        (Step::Reduct(a), Step::Reduct(b)) => {
            if !effect_equal(a, b, &mut |x, y| x == y)? {
                return Ok(Some(format!("reducts {:?} vs {:?}", a.support(), b.support())));
            }
        }
        (Step::Function(f), Step::Function(g)) => {
            if let Some((dom, _)) = model.signature().function_sorts(sort) {
                for p in probes.get(&dom)?.iter() {
                    let (x, y) = (f.apply(p)?, g.apply(p)?);
                    if x != y {
                        return Ok(Some(format!("on probe {p:?}: {x:?} vs {y:?}")));
                    }
                }
            }
        }
        _ => {}
    }
    match (&left.subst, &right.subst) {
        (None, None) => Ok(None),
        (Some(s), Some(t)) => {
            for env in probes.envs(sort)?.iter() {
                let env: Env<M::C> = env.clone();
                let (x, y) = (s.apply(&env)?, t.apply(&env)?);
                if x != y {
                    return Ok(Some(format!("substitution {:?}: {x:?} vs {y:?}", env.items)));
                }
            }
            Ok(None)
        }
        _ => Ok(Some("substitution component present on one side only".into())),
    }
}
