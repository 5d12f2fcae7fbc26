//! One transition step of a state: the concrete behaviour bifunctor.
//!
//! A [`Behavior<X, Y>`] is an element of `B(X, Y)`: a reduct bag of `Y`s, a
//! function from inputs `X` to outputs `Y`, or the terminal observation,
//! optionally paired with a simultaneous-substitution component.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::Sort;

pub type Weight = BigRational;

pub fn weight(num: i64, den: i64) -> Weight {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Branching effect wrapped around the reduct summand.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Effect {
    #[serde(rename = "det")]
    Deterministic,
    #[serde(rename = "dist")]
    FiniteDistribution,
    #[serde(rename = "set")]
    FinitePowerset,
}

impl fmt::Display for Effect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Effect::Deterministic => "det",
            Effect::FiniteDistribution => "dist",
            Effect::FinitePowerset => "set",
        })
    }
}

/// Payloads that can be merged inside bags. `same` must be an equivalence;
/// it need not be full semantic equality (denotations use identity).
pub trait Payload: Clone {
    fn same(&self, other: &Self) -> bool;
}

impl Payload for crate::kernel::Term {
    fn same(&self, other: &Self) -> bool {
        self == other
    }
}

/// A reduct bag: the branching effect applied to successor states.
#[derive(Clone, Debug)]
pub enum Bag<A> {
    Det(A),
    /// Support paired with weights in (0,1], merged, summing to exactly 1.
    Dist(Vec<(A, Weight)>),
    /// Duplicate-free finite set.
    Pow(Vec<A>),
}

impl<A: Payload> Bag<A> {
    pub fn det(a: A) -> Self {
        Bag::Det(a)
    }

    /// Builds a normalized distribution, merging equal support elements.
    pub fn dist(items: Vec<(A, Weight)>) -> Result<Self> {
        let mut merged: Vec<(A, Weight)> = Vec::with_capacity(items.len());
        let mut total = Weight::zero();
        for (a, w) in items {
            if w <= Weight::zero() || w > Weight::one() {
                return Err(Error::MalformedDistribution(format!("weight {w} outside (0,1]")));
            }
            total += &w;
            match merged.iter_mut().find(|(b, _)| b.same(&a)) {
                Some((_, acc)) => *acc += w,
                None => merged.push((a, w)),
            }
        }
        if !total.is_one() {
            return Err(Error::MalformedDistribution(format!("weights sum to {total}")));
        }
        Ok(Bag::Dist(merged))
    }

    pub fn pow(items: Vec<A>) -> Self {
        let mut out: Vec<A> = Vec::with_capacity(items.len());
        for a in items {
            if !out.iter().any(|b| b.same(&a)) {
                out.push(a);
            }
        }
        Bag::Pow(out)
    }

    pub fn effect(&self) -> Effect {
        match self {
            Bag::Det(_) => Effect::Deterministic,
            Bag::Dist(_) => Effect::FiniteDistribution,
            Bag::Pow(_) => Effect::FinitePowerset,
        }
    }

    /// Support elements in order (weights dropped).
    pub fn support(&self) -> Vec<&A> {
        match self {
            Bag::Det(a) => vec![a],
            Bag::Dist(v) => v.iter().map(|(a, _)| a).collect(),
            Bag::Pow(v) => v.iter().collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Bag::Pow(v) if v.is_empty())
    }

    /// Functorial action; distributions and sets are re-normalized.
    pub fn map<B: Payload>(&self, mut f: impl FnMut(&A) -> B) -> Bag<B> {
        match self {
            Bag::Det(a) => Bag::Det(f(a)),
            Bag::Dist(v) => {
                let items = v.iter().map(|(a, w)| (f(a), w.clone())).collect();
                Bag::dist(items).expect("pushforward of a distribution is a distribution")
            }
            Bag::Pow(v) => Bag::pow(v.iter().map(f).collect()),
        }
    }

    pub fn try_map<B: Payload>(&self, mut f: impl FnMut(&A) -> Result<B>) -> Result<Bag<B>> {
        Ok(match self {
            Bag::Det(a) => Bag::Det(f(a)?),
            Bag::Dist(v) => {
                let mut items = Vec::with_capacity(v.len());
                for (a, w) in v {
                    items.push((f(a)?, w.clone()));
                }
                Bag::dist(items)?
            }
            Bag::Pow(v) => {
                let mut items = Vec::with_capacity(v.len());
                for a in v {
                    items.push(f(a)?);
                }
                Bag::pow(items)
            }
        })
    }

    /// Checks the representation invariants.
    pub fn validate(&self) -> Result<()> {
        match self {
            Bag::Det(_) => Ok(()),
            Bag::Dist(v) => {
                let mut total = Weight::zero();
                for (i, (a, w)) in v.iter().enumerate() {
                    if *w <= Weight::zero() || *w > Weight::one() {
                        return Err(Error::MalformedDistribution(format!("weight {w} outside (0,1]")));
                    }
                    if v[..i].iter().any(|(b, _)| b.same(a)) {
                        return Err(Error::MalformedDistribution("unmerged support".into()));
                    }
                    total += w;
                }
                if total.is_one() {
                    Ok(())
                } else {
                    Err(Error::MalformedDistribution(format!("weights sum to {total}")))
                }
            }
            Bag::Pow(v) => {
                for (i, a) in v.iter().enumerate() {
                    if v[..i].iter().any(|b| b.same(a)) {
                        return Err(Error::Invalid("set with duplicates".into()));
                    }
                }
                Ok(())
            }
        }
    }
}

/// Effect-wise product: the bag of argument vectors, one pick per bag.
/// All bags must share one effect; distributions multiply independently.
pub fn product<A: Payload>(bags: &[&Bag<A>]) -> Vec<(Vec<A>, Weight)> {
    let mut acc: Vec<(Vec<A>, Weight)> = vec![(Vec::new(), Weight::one())];
    for bag in bags {
        let picks: Vec<(A, Weight)> = match bag {
            Bag::Det(a) => vec![(a.clone(), Weight::one())],
            Bag::Dist(v) => v.clone(),
            Bag::Pow(v) => v.iter().map(|a| (a.clone(), Weight::one())).collect(),
        };
        let mut next = Vec::with_capacity(acc.len() * picks.len());
        for (prefix, w) in &acc {
            for (a, wa) in &picks {
                let mut v = prefix.clone();
                v.push(a.clone());
                next.push((v, w * wa));
            }
        }
        acc = next;
    }
    acc
}

/// Lifts an equivalence on payloads to bags: equality for deterministic
/// steps, Egli-Milner for sets, equal mass on every class for distributions.
pub fn effect_equal<A: Payload>(
    e1: &Bag<A>,
    e2: &Bag<A>,
    eq: &mut impl FnMut(&A, &A) -> bool,
) -> Result<bool> {
    e1.validate()?;
    e2.validate()?;
    match (e1, e2) {
        (Bag::Det(a), Bag::Det(b)) => Ok(eq(a, b)),
        (Bag::Pow(xs), Bag::Pow(ys)) => {
            let forth = xs.iter().all(|x| ys.iter().any(|y| eq(x, y)));
            let back = ys.iter().all(|y| xs.iter().any(|x| eq(x, y)));
            Ok(forth && back)
        }
        (Bag::Dist(xs), Bag::Dist(ys)) => {
            // classes over the union of supports: (representative, mass left, mass right)
            let mut classes: Vec<(A, Weight, Weight)> = Vec::new();
            for (a, w) in xs {
                match classes.iter_mut().find(|(r, _, _)| eq(r, a)) {
                    Some((_, l, _)) => *l += w,
                    None => classes.push((a.clone(), w.clone(), Weight::zero())),
                }
            }
            for (b, w) in ys {
                match classes.iter_mut().find(|(r, _, _)| eq(r, b)) {
                    Some((_, _, r)) => *r += w,
                    None => classes.push((b.clone(), Weight::zero(), w.clone())),
                }
            }
            Ok(classes.iter().all(|(_, l, r)| l == r))
        }
        _ => Ok(false),
    }
}

/// Variant tag of a step: what survives at stage 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepTag {
    Reduct,
    Function,
    Terminal,
}

impl fmt::Display for StepTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StepTag::Reduct => "→",
            StepTag::Function => "→t",
            StepTag::Terminal => "✓",
        })
    }
}

type FunBox<X, Y> = dyn Fn(&X) -> Result<Y> + Send + Sync;
type SubstBox<X, Y> = dyn Fn(&Env<X>) -> Result<Y> + Send + Sync;

/// The `Y^X` summand. Opaque: only ever compared by probing.
pub struct FunctionNode<X, Y>(Arc<FunBox<X, Y>>);

impl<X, Y> Clone for FunctionNode<X, Y> {
    fn clone(&self) -> Self {
        FunctionNode(self.0.clone())
    }
}

impl<X: 'static, Y: 'static> FunctionNode<X, Y> {
    pub fn new(f: impl Fn(&X) -> Result<Y> + Send + Sync + 'static) -> Self {
        FunctionNode(Arc::new(f))
    }

    pub fn apply(&self, x: &X) -> Result<Y> {
        (self.0)(x)
    }
}

/// An environment for simultaneous substitution: one entry per variable of
/// the source context, all living in the `target` context.
#[derive(Clone, Debug)]
pub struct Env<X> {
    pub target: Sort,
    pub items: Vec<X>,
}

/// The simultaneous-substitution observable `⟨X, Y⟩`.
pub struct SubstComponent<X, Y>(Arc<SubstBox<X, Y>>);

impl<X, Y> Clone for SubstComponent<X, Y> {
    fn clone(&self) -> Self {
        SubstComponent(self.0.clone())
    }
}

impl<X: 'static, Y: 'static> SubstComponent<X, Y> {
    pub fn new(f: impl Fn(&Env<X>) -> Result<Y> + Send + Sync + 'static) -> Self {
        SubstComponent(Arc::new(f))
    }

    pub fn apply(&self, env: &Env<X>) -> Result<Y> {
        (self.0)(env)
    }
}

pub enum Step<X, Y> {
    Reduct(Bag<Y>),
    Function(FunctionNode<X, Y>),
    Terminal,
}

impl<X, Y: Clone> Clone for Step<X, Y> {
    fn clone(&self) -> Self {
        match self {
            Step::Reduct(b) => Step::Reduct(b.clone()),
            Step::Function(f) => Step::Function(f.clone()),
            Step::Terminal => Step::Terminal,
        }
    }
}

/// An element of `B(X, Y)`.
pub struct Behavior<X, Y = X> {
    pub step: Step<X, Y>,
    pub subst: Option<SubstComponent<X, Y>>,
}

impl<X, Y: Clone> Clone for Behavior<X, Y> {
    fn clone(&self) -> Self {
        Behavior {
            step: self.step.clone(),
            subst: self.subst.clone(),
        }
    }
}

impl<X, Y> fmt::Debug for Behavior<X, Y> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Behavior({}", self.tag())?;
        if self.subst.is_some() {
            write!(f, ", subst")?;
        }
        write!(f, ")")
    }
}

impl<X, Y> Behavior<X, Y> {
    pub fn new(step: Step<X, Y>) -> Self {
        Behavior { step, subst: None }
    }

    pub fn terminal() -> Self {
        Behavior::new(Step::Terminal)
    }

    pub fn tag(&self) -> StepTag {
        match self.step {
            Step::Reduct(_) => StepTag::Reduct,
            Step::Function(_) => StepTag::Function,
            Step::Terminal => StepTag::Terminal,
        }
    }

    pub fn reduct(&self) -> Option<&Bag<Y>> {
        match &self.step {
            Step::Reduct(b) => Some(b),
            _ => None,
        }
    }

    pub fn function(&self) -> Option<&FunctionNode<X, Y>> {
        match &self.step {
            Step::Function(f) => Some(f),
            _ => None,
        }
    }
}

impl<X: 'static, Y: Payload + Send + Sync + 'static> Behavior<X, Y> {
    /// `B(id, f)`: post-composes `f` with every covariant occurrence.
    pub fn map_cov<Z>(&self, f: impl Fn(&Y) -> Z + Send + Sync + 'static) -> Behavior<X, Z>
    where
        Z: Payload + Send + Sync + 'static,
    {
        let f = Arc::new(f);
        let step = match &self.step {
            Step::Terminal => Step::Terminal,
            Step::Reduct(bag) => Step::Reduct(bag.map(|y| f(y))),
            Step::Function(phi) => {
                let phi = phi.clone();
                let f = f.clone();
                Step::Function(FunctionNode::new(move |x| phi.apply(x).map(|y| f(&y))))
            }
        };
        let subst = self.subst.as_ref().map(|s| {
            let s = s.clone();
            let f = f.clone();
            SubstComponent::new(move |env| s.apply(env).map(|y| f(&y)))
        });
        Behavior { step, subst }
    }

    /// `B(g, id)`: pre-composes `g` with every contravariant occurrence.
    pub fn map_contra<W>(&self, g: impl Fn(&W) -> X + Send + Sync + 'static) -> Behavior<W, Y>
    where
        W: Clone + 'static,
    {
        let g = Arc::new(g);
        let step = match &self.step {
            Step::Terminal => Step::Terminal,
            Step::Reduct(bag) => Step::Reduct(bag.clone()),
            Step::Function(phi) => {
                let phi = phi.clone();
                let g = g.clone();
                Step::Function(FunctionNode::new(move |w| phi.apply(&g(w))))
            }
        };
        let subst = self.subst.as_ref().map(|s| {
            let s = s.clone();
            let g = g.clone();
            SubstComponent::new(move |env: &Env<W>| {
                let mapped = Env {
                    target: env.target.clone(),
                    items: env.items.iter().map(|w| g(w)).collect(),
                };
                s.apply(&mapped)
            })
        });
        Behavior { step, subst }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Clone, Debug, PartialEq)]
    struct P(i64);

    impl Payload for P {
        fn same(&self, other: &Self) -> bool {
            self == other
        }
    }

    fn half() -> Weight {
        weight(1, 2)
    }

    #[test]
    fn map_cov_on_terminal_is_terminal() {
        let b: Behavior<P, P> = Behavior::terminal();
        assert_eq!(b.map_cov(|p: &P| P(p.0 + 1)).tag(), StepTag::Terminal);
    }

    #[test]
    fn map_cov_on_reduct_maps_poststate() {
        let b: Behavior<P, P> = Behavior::new(Step::Reduct(Bag::det(P(3))));
        let m = b.map_cov(|p: &P| P(p.0 * 10));
        match m.reduct() {
            Some(Bag::Det(p)) => assert_eq!(*p, P(30)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn constant_map_merges_distribution_weights() {
        let bag = Bag::dist(vec![(P(1), half()), (P(2), half())]).unwrap();
        let b: Behavior<P, P> = Behavior::new(Step::Reduct(bag));
        let m = b.map_cov(|_| P(7));
        match m.reduct() {
            Some(Bag::Dist(v)) => {
                assert_eq!(v.len(), 1);
                assert_eq!(v[0].0, P(7));
                assert!(v[0].1.is_one());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn map_contra_leaves_reduct_alone_and_composes_functions() {
        let r: Behavior<P, P> = Behavior::new(Step::Reduct(Bag::det(P(4))));
        let r2 = r.map_contra(|w: &P| P(w.0 - 1));
        assert!(matches!(r2.reduct(), Some(Bag::Det(P(4)))));

        let phi: Behavior<P, P> = Behavior::new(Step::Function(FunctionNode::new(|x: &P| Ok(P(x.0 * 2)))));
        let id = phi.map_contra(|w: &P| w.clone());
        for probe in [0, 5, -3] {
            assert_eq!(id.function().unwrap().apply(&P(probe)).unwrap(), P(probe * 2));
        }
        // (g ; φ ; f)(x) = f(φ(g(x)))
        let composed = phi.map_contra(|w: &P| P(w.0 + 1)).map_cov(|y: &P| P(y.0 - 100));
        for probe in [0, 5, -3] {
            let got = composed.function().unwrap().apply(&P(probe)).unwrap();
            assert_eq!(got, P((probe + 1) * 2 - 100));
        }
    }

    #[test]
    fn map_cov_identity_and_composition_on_probes() {
        let phi: Behavior<P, P> = Behavior::new(Step::Function(FunctionNode::new(|x: &P| Ok(P(x.0 + 3)))));
        let id = phi.map_cov(|y: &P| y.clone());
        let f = |y: &P| P(y.0 * 2);
        let g = |y: &P| P(y.0 - 1);
        let twice = phi.map_cov(f).map_cov(g);
        let once = phi.map_cov(move |y: &P| g(&f(y)));
        for probe in [-2, 0, 9] {
            let x = P(probe);
            assert_eq!(id.function().unwrap().apply(&x).unwrap(), P(probe + 3));
            assert_eq!(
                twice.function().unwrap().apply(&x).unwrap(),
                once.function().unwrap().apply(&x).unwrap()
            );
        }
    }

    #[test]
    fn class_mass_comparison_is_exact() {
        // p eq q: ½·p + ½·q against 1·p
        let left = Bag::dist(vec![(P(1), half()), (P(2), half())]).unwrap();
        let right = Bag::dist(vec![(P(1), Weight::one())]).unwrap();
        let mut all_eq = |_: &P, _: &P| true;
        assert!(effect_equal(&left, &right, &mut all_eq).unwrap());
        let mut syntactic = |a: &P, b: &P| a == b;
        assert!(!effect_equal(&left, &right, &mut syntactic).unwrap());
        assert!(effect_equal(&right, &right, &mut syntactic).unwrap());
    }

    #[test]
    fn egli_milner_on_sets() {
        let pq = Bag::pow(vec![P(1), P(2)]);
        let p = Bag::pow(vec![P(1)]);
        let mut syntactic = |a: &P, b: &P| a == b;
        assert!(!effect_equal(&pq, &p, &mut syntactic).unwrap());
        let mut all_eq = |_: &P, _: &P| true;
        assert!(effect_equal(&pq, &p, &mut all_eq).unwrap());
    }

    #[test]
    fn malformed_distribution_is_rejected() {
        assert!(matches!(
            Bag::dist(vec![(P(1), half())]),
            Err(Error::MalformedDistribution(_))
        ));
        let raw = Bag::Dist(vec![(P(1), half())]);
        let mut syntactic = |a: &P, b: &P| a == b;
        assert!(matches!(
            effect_equal(&raw, &raw, &mut syntactic),
            Err(Error::MalformedDistribution(_))
        ));
    }

    #[test]
    fn sets_are_duplicate_free() {
        let s = Bag::pow(vec![P(1), P(1), P(2)]);
        assert_eq!(s.support().len(), 2);
        s.validate().unwrap();
    }

    #[test]
    fn product_of_distributions_multiplies_weights() {
        let a = Bag::dist(vec![(P(1), half()), (P(2), half())]).unwrap();
        let b = Bag::dist(vec![(P(3), weight(1, 3)), (P(4), weight(2, 3))]).unwrap();
        let prod = product(&[&a, &b]);
        assert_eq!(prod.len(), 4);
        let total: Weight = prod.iter().map(|(_, w)| w.clone()).sum();
        assert!(total.is_one());
        assert_eq!(prod[1].1, weight(1, 3));
    }
}
