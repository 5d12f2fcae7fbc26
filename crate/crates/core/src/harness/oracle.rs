//! Reference interpreters written directly from the rule displays, with no
//! use of the rule engine: combinator calculi here, λ via
//! [`LamTerm::beta_step`](crate::lang::lambda::LamTerm::beta_step).

use std::collections::BTreeMap;

use num_traits::One;

use crate::behavior::{weight, Bag, Behavior, Step, StepTag, Weight};
use crate::error::{Error, Result};
use crate::kernel::{Signature, Term};
use crate::lang::{language, LangId};

/// One step of a closed combinator term; reducts are canonical: sorted,
/// with equal terms merged (weights added, or deduplicated for sets).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RefStep {
    Terminal,
    Function,
    Reduct(Vec<(Term, Weight)>),
}

impl RefStep {
    pub fn tag(&self) -> StepTag {
        match self {
            RefStep::Terminal => StepTag::Terminal,
            RefStep::Function => StepTag::Function,
            RefStep::Reduct(_) => StepTag::Reduct,
        }
    }
}

fn family(t: &Term) -> Result<&str> {
    t.op()
        .map(|o| &*o.family)
        .ok_or_else(|| Error::Invalid("reference step on an open term".into()))
}

fn mk(sig: &dyn Signature, fam: &str, args: Vec<Term>, result: Option<&crate::kernel::Sort>) -> Result<Term> {
    let sorts: Vec<_> = args.iter().map(|a| a.sort().clone()).collect();
    let op = sig.instantiate(fam, None, &sorts, result)?;
    Term::make(&op, args)
}

fn canonical(items: Vec<(Term, Weight)>, sets: bool) -> Vec<(Term, Weight)> {
    let mut m: BTreeMap<Term, Weight> = BTreeMap::new();
    for (t, w) in items {
        if sets {
            m.insert(t, Weight::one());
        } else {
            *m.entry(t).or_insert_with(|| weight(0, 1)) += w;
        }
    }
    m.into_iter().collect()
}

/// The Fig.-style rules of xTCL, xPTCL, xCL and xNCCL at stage `n + 1`.
pub struct CombinatorOracle {
    lang: LangId,
}

impl CombinatorOracle {
    pub fn new(lang: LangId) -> Result<CombinatorOracle> {
        if lang == LangId::Lambda {
            return Err(Error::Invalid("the combinator oracle does not cover λ".into()));
        }
        Ok(CombinatorOracle { lang })
    }

    fn sig(&self) -> &dyn Signature {
        language(self.lang).sig().as_ref()
    }

    fn sets(&self) -> bool {
        self.lang == LangId::Xnccl
    }

    pub fn step(&self, t: &Term) -> Result<RefStep> {
        let kids = t.children();
        Ok(match family(t)? {
            "e" => RefStep::Terminal,
            "I" | "K" | "K'" | "S" | "S'" | "S''" => RefStep::Function,
            "app" => match self.step(&kids[0])? {
                RefStep::Reduct(ps) => {
                    let mut out = Vec::new();
                    for (p, w) in ps {
                        out.push((mk(self.sig(), "app", vec![p, kids[1].clone()], None)?, w));
                    }
                    RefStep::Reduct(canonical(out, self.sets()))
                }
                RefStep::Function => RefStep::Reduct(vec![(self.apply(&kids[0], &kids[1])?, Weight::one())]),
                RefStep::Terminal => return Err(Error::NoRuleApplies(format!("applying a value: {t:?}"))),
            },
            "plus" => {
                let half = weight(1, 2);
                RefStep::Reduct(canonical(
                    vec![(kids[0].clone(), half.clone()), (kids[1].clone(), half)],
                    self.sets(),
                ))
            }
            "par" => {
                let (l, r) = (self.step(&kids[0])?, self.step(&kids[1])?);
                let lefts = match &l {
                    RefStep::Reduct(ps) => ps.iter().map(|(p, _)| p.clone()).collect(),
                    _ => vec![kids[0].clone()],
                };
                let rights = match &r {
                    RefStep::Reduct(qs) => qs.iter().map(|(q, _)| q.clone()).collect(),
                    _ => vec![kids[1].clone()],
                };
                if l.tag() == StepTag::Function && r.tag() == StepTag::Function {
                    RefStep::Function
                } else {
                    let mut out = Vec::new();
                    for p in &lefts {
                        for q in &rights {
                            out.push((mk(self.sig(), "par", vec![p.clone(), q.clone()], None)?, Weight::one()));
                        }
                    }
                    RefStep::Reduct(canonical(out, true))
                }
            }
            other => return Err(Error::UnknownOperator(other.to_string())),
        })
    }

    /// The output of a function-valued term on `arg`.
    pub fn apply(&self, f: &Term, arg: &Term) -> Result<Term> {
        let sig = self.sig();
        let cod = sig
            .function_sorts(f.sort())
            .map(|(_, c)| c)
            .ok_or_else(|| Error::Invalid(format!("{f:?} is not function-sorted")))?;
        let kids = f.children();
        let app = |a: &Term, b: &Term| mk(sig, "app", vec![a.clone(), b.clone()], None);
        match family(f)? {
            "I" => Ok(arg.clone()),
            "K" => mk(sig, "K'", vec![arg.clone()], Some(&cod)),
            "K'" => Ok(kids[0].clone()),
            "S" => mk(sig, "S'", vec![arg.clone()], Some(&cod)),
            "S'" => mk(sig, "S''", vec![kids[0].clone(), arg.clone()], Some(&cod)),
            "S''" => app(&app(&kids[0], arg)?, &app(&kids[1], arg)?),
            "par" => mk(sig, "par", vec![app(&kids[0], arg)?, app(&kids[1], arg)?], None),
            other => Err(Error::Invalid(format!("{other} is not a function"))),
        }
    }
}

/// Canonical reduct list of an engine behaviour, comparable with
/// [`RefStep::Reduct`].
pub fn canonical_reducts(b: &Behavior<Term>) -> Option<Vec<(Term, Weight)>> {
    match &b.step {
        Step::Reduct(Bag::Det(t)) => Some(vec![(t.clone(), Weight::one())]),
        Step::Reduct(Bag::Dist(ws)) => Some(canonical(ws.clone(), false)),
        Step::Reduct(Bag::Pow(v)) => Some(canonical(v.iter().map(|t| (t.clone(), Weight::one())).collect(), true)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(l: LangId, s: &str) -> Term {
        language(l).parse(s).unwrap()
    }

    #[test]
    fn chain_by_hand() {
        let l = LangId::Xcl;
        let o = CombinatorOracle::new(l).unwrap();
        let mut cur = t(l, "S I I K");
        let mut chain = vec![language(l).print(&cur)];
        while let RefStep::Reduct(next) = o.step(&cur).unwrap() {
            cur = next[0].0.clone();
            chain.push(language(l).print(&cur));
        }
        assert_eq!(chain, ["S I I K", "S'(I) I K", "S''(I, I) K", "I K (I K)", "K (I K)", "K'(I K)"]);
    }

    #[test]
    fn choice_merges_and_sets_dedup() {
        let o = CombinatorOracle::new(LangId::Xptcl).unwrap();
        let RefStep::Reduct(d) = o.step(&t(LangId::Xptcl, "e (+) e")).unwrap() else { panic!() };
        assert_eq!(d, vec![(t(LangId::Xptcl, "e"), Weight::one())]);
        let o = CombinatorOracle::new(LangId::Xnccl).unwrap();
        let RefStep::Reduct(s) = o.step(&t(LangId::Xnccl, "(S (+) K) || (I (+) I)")).unwrap() else { panic!() };
        assert_eq!(s.len(), 2);
    }
}
