use std::collections::BTreeSet;
use std::sync::Arc;

use num_traits::One;

use super::law::{Branches, ConclusionStep, EnvExpr, Expr, HoGsosLaw, Rule, StageGuard};
use super::Model;
use crate::behavior::{self, Bag, Behavior, Effect, Env, FunctionNode, Step, StepTag, SubstComponent, Weight};
use crate::engine::Carrier;
use crate::error::{Error, Result};
use crate::kernel::{OperatorDecl, Sort};

/// A behaviour at a given stage of a guarded law: stage 0 keeps only the
/// variant tag (and, for sets, whether the set is empty).
#[derive(Clone)]
pub enum StagedBehavior<C> {
    Trivial { tag: StepTag, nonempty: bool },
    Full(Arc<Behavior<C>>),
}

impl<C> StagedBehavior<C> {
    pub fn tag(&self) -> StepTag {
        match self {
            StagedBehavior::Trivial { tag, .. } => *tag,
            StagedBehavior::Full(b) => b.tag(),
        }
    }
}

impl<C: Carrier> StagedBehavior<C> {
    /// Restriction to stage 0.
    pub fn erase(&self) -> StagedBehavior<C> {
        match self {
            StagedBehavior::Trivial { .. } => self.clone(),
            StagedBehavior::Full(b) => StagedBehavior::Trivial {
                tag: b.tag(),
                nonempty: !b.reduct().is_some_and(Bag::is_empty),
            },
        }
    }
}

fn tag_of<M: Model>(model: &M, x: &M::C) -> Result<StepTag> {
    Ok(model.behavior(x)?.tag())
}

/// Finds the unique rule for `op` applied to `args`, forcing argument
/// behaviours only where a premise inspects them.
pub fn select_rule<'l, M: Model>(
    law: &'l HoGsosLaw,
    model: &M,
    op: &OperatorDecl,
    args: &[M::C],
    stage_zero: bool,
) -> Result<&'l Rule> {
    let mut tags: Vec<Option<StepTag>> = vec![None; args.len()];
    let guards: &[Option<StageGuard>] = if !law.guarded {
        &[None, Some(StageGuard::Succ)]
    } else if stage_zero {
        &[Some(StageGuard::Zero), None]
    } else {
        &[Some(StageGuard::Succ), None]
    };
    for guard in guards {
        'rules: for rule in law.rules_for(&op.family) {
            if rule.pattern.stage != *guard || rule.pattern.premises.len() != args.len() {
                continue;
            }
            for (i, premise) in rule.pattern.premises.iter().enumerate() {
                let crate::engine::Premise::Tag(want) = premise else { continue };
                let tag = match tags[i] {
                    Some(t) => t,
                    None => {
                        let t = tag_of(model, &args[i])?;
                        tags[i] = Some(t);
                        t
                    }
                };
                if tag != *want {
                    continue 'rules;
                }
            }
            return Ok(rule);
        }
    }
    let shown: Vec<String> = tags
        .iter()
        .map(|t| t.map_or("_".to_string(), |t| format!("{t:?}")))
        .collect();
    Err(Error::NoRuleApplies(format!("{op}({})", shown.join(", "))))
}

/// `B(id, â ∘ Σ*∇) ∘ ρ` at one operator: matches the rule and instantiates its
/// conclusion in the model's carrier. Function and substitution components
/// are evaluated lazily, on each application.
pub fn apply_rule<M: Model>(
    law: &Arc<HoGsosLaw>,
    model: &Arc<M>,
    op: &Arc<OperatorDecl>,
    args: Vec<M::C>,
) -> Result<Behavior<M::C>> {
    let rule = select_rule(law, model.as_ref(), op, &args, false)?;
    let ev = Eval {
        law: law.clone(),
        model: model.clone(),
        op: op.clone(),
        args: Arc::new(args),
    };
    ev.conclusion(rule)
}

/// Rule application at an explicit stage. Stage 0 of a guarded law yields the
/// trivial payload; other stages coincide with [`apply_rule`].
pub fn apply_rule_at_stage<M: Model>(
    law: &Arc<HoGsosLaw>,
    model: &Arc<M>,
    op: &Arc<OperatorDecl>,
    args: Vec<M::C>,
    stage: usize,
) -> Result<StagedBehavior<M::C>> {
    if !law.guarded || stage > 0 {
        return apply_rule(law, model, op, args).map(|b| StagedBehavior::Full(Arc::new(b)));
    }
    let rule = select_rule(law, model.as_ref(), op, &args, true)?;
    if rule.pattern.stage == Some(StageGuard::Zero) {
        let nonempty = match &rule.conclusion.step {
            ConclusionStep::Reduct(Branches::Set(es)) => !es.is_empty(),
            _ => true,
        };
        return Ok(StagedBehavior::Trivial {
            tag: rule.conclusion.step.tag(),
            nonempty,
        });
    }
    let full = apply_rule(law, model, op, args)?;
    Ok(StagedBehavior::Full(Arc::new(full)).erase())
}

#[derive(Clone)]
struct Scope<C> {
    probe: Option<C>,
    env: Option<Env<C>>,
    bound: Vec<(usize, C)>,
}

impl<C> Scope<C> {
    fn empty() -> Self {
        Scope {
            probe: None,
            env: None,
            bound: Vec::new(),
        }
    }
}

struct Eval<M: Model> {
    law: Arc<HoGsosLaw>,
    model: Arc<M>,
    op: Arc<OperatorDecl>,
    args: Arc<Vec<M::C>>,
}

impl<M: Model> Clone for Eval<M> {
    fn clone(&self) -> Self {
        Eval {
            law: self.law.clone(),
            model: self.model.clone(),
            op: self.op.clone(),
            args: self.args.clone(),
        }
    }
}

fn check_sort(what: &str, expected: Option<&Sort>, found: &Sort) -> Result<()> {
    match expected {
        Some(e) if e != found => Err(Error::SortMismatch {
            context: what.to_string(),
            expected: e.clone(),
            found: found.clone(),
        }),
        _ => Ok(()),
    }
}

impl<M: Model> Eval<M> {
    fn arg(&self, i: usize) -> Result<&M::C> {
        self.args
            .get(i)
            .ok_or_else(|| Error::Invalid(format!("rule for {} mentions argument {i}", self.op)))
    }

    fn conclusion(&self, rule: &Rule) -> Result<Behavior<M::C>> {
        let step = match &rule.conclusion.step {
            ConclusionStep::Terminal => Step::Terminal,
            ConclusionStep::Reduct(branches) => Step::Reduct(self.reduct(branches)?),
            ConclusionStep::Function(body) => {
                let (dom, cod) = self.model.signature().function_sorts(&self.op.result_sort).ok_or_else(|| {
                    Error::Invalid(format!("{} has no function summand at sort {}", self.op, self.op.result_sort))
                })?;
                let ev = self.clone();
                let body = body.clone();
                Step::Function(FunctionNode::new(move |x: &M::C| {
                    check_sort("function input", Some(&dom), x.sort())?;
                    let scope = Scope {
                        probe: Some(x.clone()),
                        ..Scope::empty()
                    };
                    ev.expr(&body, &scope, Some(&cod))
                }))
            }
        };
        let subst = rule.conclusion.subst.as_ref().map(|body| {
            let ev = self.clone();
            let body = body.clone();
            SubstComponent::new(move |env: &Env<M::C>| {
                let width = match &ev.op.result_sort {
                    Sort::Ctx(m) => *m as usize,
                    _ => 0,
                };
                if env.items.len() != width {
                    return Err(Error::EnvLengthMismatch {
                        expected: width,
                        found: env.items.len(),
                    });
                }
                let scope = Scope {
                    env: Some(env.clone()),
                    ..Scope::empty()
                };
                ev.expr(&body, &scope, Some(&env.target))
            })
        });
        Ok(Behavior { step, subst })
    }

    fn reduct(&self, branches: &Branches) -> Result<Bag<M::C>> {
        let weighted: Vec<(Weight, &Expr)> = match branches {
            Branches::Single(e) => vec![(Weight::one(), e)],
            Branches::Set(es) => es.iter().map(|e| (Weight::one(), e)).collect(),
            Branches::Dist(ws) => ws.iter().map(|(w, e)| (w.clone(), e)).collect(),
        };
        let own = &self.op.result_sort;
        let mut items: Vec<(M::C, Weight)> = Vec::new();
        for (w, e) in weighted {
            let mut idx = BTreeSet::new();
            e.reduct_indices(&mut idx);
            let idx: Vec<usize> = idx.into_iter().collect();
            let behaviors = idx
                .iter()
                .map(|&i| self.model.behavior(self.arg(i)?))
                .collect::<Result<Vec<_>>>()?;
            let bags = behaviors
                .iter()
                .zip(&idx)
                .map(|(b, i)| {
                    b.reduct()
                        .ok_or_else(|| Error::NoRuleApplies(format!("argument {i} of {} has no reduct", self.op)))
                })
                .collect::<Result<Vec<_>>>()?;
            for (picks, pw) in behavior::product(&bags) {
                let scope = Scope {
                    bound: idx.iter().copied().zip(picks).collect(),
                    ..Scope::empty()
                };
                items.push((self.expr(e, &scope, Some(own))?, &w * pw));
            }
        }
        match self.law.effect {
            Effect::Deterministic => {
                if items.len() != 1 {
                    return Err(Error::Invalid(format!(
                        "deterministic rule for {} produced {} reducts",
                        self.op,
                        items.len()
                    )));
                }
                Ok(Bag::Det(items.pop().expect("one item").0))
            }
            Effect::FiniteDistribution => Bag::dist(items),
            Effect::FinitePowerset => Ok(Bag::pow(items.into_iter().map(|(x, _)| x).collect())),
        }
    }

    fn expr(&self, e: &Expr, scope: &Scope<M::C>, expected: Option<&Sort>) -> Result<M::C> {
        match e {
            Expr::Arg(i) => {
                let x = self.arg(*i)?.clone();
                check_sort("argument metavariable", expected, x.sort())?;
                Ok(x)
            }
            Expr::ReductOf(i) => {
                let x = match scope.bound.iter().find(|(j, _)| j == i) {
                    Some((_, x)) => x.clone(),
                    None => {
                        let b = self.model.behavior(self.arg(*i)?)?;
                        match b.reduct() {
                            Some(Bag::Det(x)) => x.clone(),
                            _ => {
                                return Err(Error::NoRuleApplies(format!(
                                    "argument {i} of {} has no single reduct",
                                    self.op
                                )))
                            }
                        }
                    }
                };
                check_sort("reduct metavariable", expected, x.sort())?;
                Ok(x)
            }
            Expr::ApplyFun(i, a) => {
                let f = self.arg(*i)?;
                let (dom, cod) = self
                    .model
                    .signature()
                    .function_sorts(f.sort())
                    .ok_or_else(|| Error::Invalid(format!("argument {i} of {} has no function sort", self.op)))?;
                let input = self.expr(a, scope, Some(&dom))?;
                let b = self.model.behavior(f)?;
                let node = b
                    .function()
                    .ok_or_else(|| Error::NoRuleApplies(format!("argument {i} of {} is not a function", self.op)))?;
                let out = node.apply(&input)?;
                check_sort("function result", Some(&cod), out.sort())?;
                check_sort("function result", expected, out.sort())?;
                Ok(out)
            }
            Expr::Op(fam, index, es) => {
                let mut vals = Vec::with_capacity(es.len());
                for a in es {
                    vals.push(self.expr(a, scope, None)?);
                }
                let sorts: Vec<Sort> = vals.iter().map(|v| v.sort().clone()).collect();
                let op = self.model.signature().instantiate(fam, *index, &sorts, expected)?;
                check_sort(&format!("conclusion operator {op}"), expected, &op.result_sort)?;
                self.model.build(&op, vals)
            }
            Expr::SubstOf(i, env_expr) => {
                let child = self.arg(*i)?;
                let env = self.env(env_expr, scope)?;
                let width = match child.sort() {
                    Sort::Ctx(m) => *m as usize,
                    s => return Err(Error::Invalid(format!("substitution into non-context sort {s}"))),
                };
                if env.items.len() != width {
                    return Err(Error::EnvLengthMismatch {
                        expected: width,
                        found: env.items.len(),
                    });
                }
                let b = self.model.behavior(child)?;
                let s = b
                    .subst
                    .as_ref()
                    .ok_or_else(|| Error::Invalid(format!("argument {i} of {} has no substitution component", self.op)))?;
                let out = s.apply(&env)?;
                check_sort("substitution result", Some(&env.target), out.sort())?;
                check_sort("substitution result", expected, out.sort())?;
                Ok(out)
            }
            Expr::Probe => {
                let x = scope
                    .probe
                    .clone()
                    .ok_or_else(|| Error::Invalid("`t` used outside a function conclusion".into()))?;
                check_sort("probe", expected, x.sort())?;
                Ok(x)
            }
            Expr::EnvAt => {
                let env = scope
                    .env
                    .as_ref()
                    .ok_or_else(|| Error::Invalid("`u@` used outside a substitution conclusion".into()))?;
                let j = self
                    .op
                    .index
                    .ok_or_else(|| Error::Invalid(format!("`u@` needs an indexed operator, got {}", self.op)))?
                    as usize;
                let x = env.items.get(j).cloned().ok_or(Error::EnvLengthMismatch {
                    expected: j + 1,
                    found: env.items.len(),
                })?;
                check_sort("environment entry", expected, x.sort())?;
                Ok(x)
            }
            Expr::Trivial => Err(Error::Invalid("`*` is only meaningful in stage-0 rules".into())),
        }
    }

    fn variables(&self, ctx: u32) -> Result<Vec<M::C>> {
        let fam = self
            .law
            .variables
            .as_deref()
            .ok_or_else(|| Error::Invalid(format!("law {} declares no variable family", self.law.name)))?;
        (0..ctx)
            .map(|j| {
                let op = self
                    .model
                    .signature()
                    .instantiate(fam, Some(j), &[], Some(&Sort::Ctx(ctx)))?;
                self.model.build(&op, Vec::new())
            })
            .collect()
    }

    fn weaken(&self, x: &M::C, l: u32) -> Result<M::C> {
        if let Some(r) = self.model.weaken_direct(x, l) {
            return r;
        }
        let env = Env {
            target: Sort::Ctx(l + 1),
            items: self.variables(l + 1)?.into_iter().take(l as usize).collect(),
        };
        let b = self.model.behavior(x)?;
        let s = b
            .subst
            .as_ref()
            .ok_or_else(|| Error::Invalid("weakening needs a substitution component".into()))?;
        s.apply(&env)
    }

    fn env(&self, e: &EnvExpr, scope: &Scope<M::C>) -> Result<Env<M::C>> {
        match e {
            EnvExpr::Incoming => scope
                .env
                .clone()
                .ok_or_else(|| Error::Invalid("`u` used outside a substitution conclusion".into())),
            EnvExpr::Weakened => {
                let env = scope
                    .env
                    .as_ref()
                    .ok_or_else(|| Error::Invalid("`u+` used outside a substitution conclusion".into()))?;
                let l = match env.target {
                    Sort::Ctx(l) => l,
                    ref s => return Err(Error::Invalid(format!("environment targets non-context sort {s}"))),
                };
                let mut items = Vec::with_capacity(env.items.len() + 1);
                for x in &env.items {
                    items.push(self.weaken(x, l)?);
                }
                let fresh = self.variables(l + 1)?.pop().expect("l + 1 > 0 variables");
                items.push(fresh);
                Ok(Env {
                    target: Sort::Ctx(l + 1),
                    items,
                })
            }
            EnvExpr::Extend(extra) => {
                let m = match self.op.result_sort {
                    Sort::Ctx(m) => m,
                    ref s => return Err(Error::Invalid(format!("`id` at non-context sort {s}"))),
                };
                let mut items = self.variables(m)?;
                items.push(self.expr(extra, scope, Some(&Sort::Ctx(m)))?);
                Ok(Env {
                    target: Sort::Ctx(m),
                    items,
                })
            }
        }
    }
}
