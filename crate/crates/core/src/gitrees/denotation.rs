use std::cell::Cell;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, OnceLock, Weak};

use crate::behavior::{Bag, Behavior, Env, FunctionNode, Payload, Step, SubstComponent};
use crate::engine::Carrier;
use crate::error::{Error, Result};
use crate::kernel::Sort;

type Thunk = Arc<dyn Fn() -> Result<Behavior<Denotation>> + Send + Sync>;

/// Nested forcings allowed on one thread before reporting `FuelExhausted`.
pub const FORCE_FUEL: usize = 1024;

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

thread_local! {
    static FORCE_DEPTH: Cell<usize> = const { Cell::new(0) };
    static MAX_FORCE_DEPTH: Cell<usize> = const { Cell::new(0) };
}

struct Node {
    id: u64,
    sort: Sort,
    label: Arc<str>,
    cell: OnceLock<Result<Arc<Behavior<Denotation>>>>,
    thunk: Mutex<Option<Thunk>>,
}

impl Node {
    fn new(sort: Sort, label: &str, thunk: Option<Thunk>) -> Node {
        Node {
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            sort,
            label: label.into(),
            cell: OnceLock::new(),
            thunk: Mutex::new(thunk),
        }
    }
}

/// A state of the locally final coalgebra, unfolded on demand.
///
/// The first completed computation of the node is cached and returned to
/// every caller; concurrent first forcings may compute it more than once but
/// never block on each other. Identity is object identity: equality of
/// denotations is only ever observed through truncations.
#[derive(Clone)]
pub struct Denotation(Arc<Node>);

impl Denotation {
    /// A denotation whose node is computed by `f` when first forced.
    pub fn lazy(
        sort: Sort,
        label: &str,
        f: impl Fn() -> Result<Behavior<Denotation>> + Send + Sync + 'static,
    ) -> Denotation {
        Denotation(Arc::new(Node::new(sort, label, Some(Arc::new(f)))))
    }

    pub fn ready(sort: Sort, label: &str, b: Behavior<Denotation>) -> Denotation {
        let node = Node::new(sort, label, None);
        let _ = node.cell.set(Ok(Arc::new(b)));
        Denotation(Arc::new(node))
    }

    /// A self-referential denotation: `f` receives the denotation being
    /// defined and may place it among its own successors.
    pub fn cyclic(
        sort: Sort,
        label: &str,
        f: impl Fn(Denotation) -> Behavior<Denotation> + Send + Sync + 'static,
    ) -> Denotation {
        let node = Arc::new_cyclic(|weak: &Weak<Node>| {
            let weak = weak.clone();
            let thunk: Thunk = Arc::new(move || {
                let me = weak
                    .upgrade()
                    .ok_or_else(|| Error::Invalid("cyclic denotation dropped while forcing".into()))?;
                Ok(f(Denotation(me)))
            });
            Node::new(sort, label, Some(thunk))
        });
        Denotation(node)
    }

    /// The infinite reduction path `∞`.
    pub fn divergent(sort: Sort) -> Denotation {
        Denotation::cyclic(sort, "∞", |me| Behavior::new(Step::Reduct(Bag::Det(me))))
    }

    /// `k` reduct steps in front of `tail`.
    pub fn after_steps(k: usize, tail: Denotation) -> Denotation {
        (0..k).fold(tail, |d, _| {
            let sort = d.sort().clone();
            Denotation::ready(sort, "→", Behavior::new(Step::Reduct(Bag::Det(d))))
        })
    }

    pub fn id(&self) -> u64 {
        self.0.id
    }

    pub fn sort(&self) -> &Sort {
        &self.0.sort
    }

    pub fn label(&self) -> &str {
        &self.0.label
    }

    pub fn is_forced(&self) -> bool {
        self.0.cell.get().is_some()
    }

    /// Forces the node. Repeated calls return the cached outcome.
    pub fn force(&self) -> Result<Arc<Behavior<Denotation>>> {
        if let Some(r) = self.0.cell.get() {
            return r.clone();
        }
        let thunk = self.0.thunk.lock().expect("thunk lock").clone();
        let Some(thunk) = thunk else {
            return self.0.cell.get().cloned().unwrap_or_else(|| Err(Error::Invalid("denotation has no node".into())));
        };
        let depth = FORCE_DEPTH.with(|d| {
            let v = d.get() + 1;
            d.set(v);
            v
        });
        MAX_FORCE_DEPTH.with(|m| m.set(m.get().max(depth)));
        let out = if depth > FORCE_FUEL {
            Err(Error::FuelExhausted(FORCE_FUEL))
        } else {
            thunk().map(Arc::new)
        };
        FORCE_DEPTH.with(|d| d.set(d.get() - 1));
        if matches!(out, Err(Error::FuelExhausted(_))) {
            // not cached: a shallower forcing may still succeed
            return out;
        }
        let stored = self.0.cell.get_or_init(|| out).clone();
        self.0.thunk.lock().expect("thunk lock").take();
        stored
    }
}

/// Records forcings of a [`poisoned`] denotation beyond its budget.
#[derive(Clone, Debug, Default)]
pub struct PoisonLog(Arc<AtomicU64>);

impl PoisonLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn hits(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }
}

/// Wraps `x` so that its nodes may be forced only `budget` reduct or
/// function steps deep; forcing any deeper node fails and is logged.
/// Substitution outputs keep the budget of the node they come from.
pub fn poisoned(x: &Denotation, budget: i64, log: &PoisonLog) -> Denotation {
    let inner = x.clone();
    let log = log.clone();
    Denotation::lazy(x.sort().clone(), "poisoned", move || {
        if budget < 0 {
            log.0.fetch_add(1, Ordering::Relaxed);
            return Err(Error::Invalid("argument forced beyond its stage".into()));
        }
        let b = inner.force()?;
        let step = match &b.step {
            Step::Terminal => Step::Terminal,
            Step::Reduct(bag) => Step::Reduct(bag.map(|y| poisoned(y, budget - 1, &log))),
            Step::Function(f) => {
                let (f, log) = (f.clone(), log.clone());
                Step::Function(FunctionNode::new(move |a: &Denotation| {
                    f.apply(a).map(|y| poisoned(&y, budget - 1, &log))
                }))
            }
        };
        let subst = b.subst.as_ref().map(|s| {
            let (s, log) = (s.clone(), log.clone());
            SubstComponent::new(move |env: &Env<Denotation>| s.apply(env).map(|y| poisoned(&y, budget, &log)))
        });
        Ok(Behavior { step, subst })
    })
}

/// Deepest nesting of forcings observed on this thread since the last reset.
pub fn max_force_depth() -> usize {
    MAX_FORCE_DEPTH.with(Cell::get)
}

pub fn reset_max_force_depth() {
    MAX_FORCE_DEPTH.with(|m| m.set(0));
}

impl PartialEq for Denotation {
    fn eq(&self, other: &Self) -> bool {
        self.0.id == other.0.id
    }
}

impl Eq for Denotation {}

impl Hash for Denotation {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.id.hash(state);
    }
}

impl fmt::Debug for Denotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "⟦{}#{}⟧", self.0.label, self.0.id)
    }
}

impl Payload for Denotation {
    fn same(&self, other: &Self) -> bool {
        self == other
    }
}

impl Carrier for Denotation {
    fn sort(&self) -> &Sort {
        &self.0.sort
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Sort {
        Sort::Untyped
    }

    #[test]
    fn forcing_is_cached() {
        let calls = Arc::new(AtomicU64::new(0));
        let c = calls.clone();
        let d = Denotation::lazy(unit(), "x", move || {
            c.fetch_add(1, Ordering::Relaxed);
            Ok(Behavior::terminal())
        });
        assert!(!d.is_forced());
        d.force().unwrap();
        d.force().unwrap();
        assert_eq!(calls.load(Ordering::Relaxed), 1);
        assert!(d.is_forced());
    }

    #[test]
    fn divergent_points_at_itself() {
        let d = Denotation::divergent(unit());
        let b = d.force().unwrap();
        match b.reduct() {
            Some(Bag::Det(next)) => assert_eq!(next, &d),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn after_steps_prefixes_reducts() {
        let end = Denotation::ready(unit(), "end", Behavior::terminal());
        let mut d = Denotation::after_steps(3, end.clone());
        for _ in 0..3 {
            let b = d.force().unwrap();
            d = match b.reduct() {
                Some(Bag::Det(x)) => x.clone(),
                _ => panic!("expected a reduct"),
            };
        }
        assert_eq!(d, end);
    }

    #[test]
    fn unbounded_nesting_runs_out_of_fuel() {
        fn chain(n: u64) -> Denotation {
            Denotation::lazy(Sort::Untyped, "chain", move || {
                chain(n + 1).force()?;
                Ok(Behavior::terminal())
            })
        }
        assert!(matches!(chain(0).force(), Err(Error::FuelExhausted(_))));
    }

    #[test]
    fn poison_budget_counts_steps() {
        let end = Denotation::ready(unit(), "end", Behavior::terminal());
        let d = Denotation::after_steps(2, end);
        let log = PoisonLog::new();
        let p = poisoned(&d, 1, &log);
        let b = p.force().unwrap();
        let Some(Bag::Det(p1)) = b.reduct() else { panic!() };
        let b1 = p1.force().unwrap();
        let Some(Bag::Det(p2)) = b1.reduct() else { panic!() };
        assert_eq!(log.hits(), 0);
        assert!(p2.force().is_err());
        assert_eq!(log.hits(), 1);
    }
}
