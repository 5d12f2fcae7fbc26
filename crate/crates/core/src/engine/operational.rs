use std::collections::HashMap;
use std::sync::{Arc, Mutex, Weak};

use super::apply::{apply_rule, apply_rule_at_stage, StagedBehavior};
use super::law::HoGsosLaw;
use super::Model;
use crate::behavior::{Bag, Behavior, Step, Weight};
use crate::error::{Error, Result};
use crate::kernel::{Head, OperatorDecl, Signature, Term};

/// The operational model `γ : μΣ → B(μΣ, μΣ)` of a law, defined by primitive
/// recursion: the behaviour of `f(t₁..tₙ)` is the rule for `f` applied to the
/// pairs `(tᵢ, γ(tᵢ))`, with conclusions flattened back into terms.
///
/// Child behaviours are computed on demand and memoized per term, so terms
/// whose rules ignore an argument never force it.
pub struct OperationalModel {
    law: Arc<HoGsosLaw>,
    me: Weak<OperationalModel>,
    memo: Mutex<HashMap<Term, Arc<Behavior<Term>>>>,
}

impl std::fmt::Debug for OperationalModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "OperationalModel({})", self.law.name)
    }
}

impl OperationalModel {
    pub fn new(law: Arc<HoGsosLaw>) -> Arc<OperationalModel> {
        Arc::new_cyclic(|me| OperationalModel {
            law,
            me: me.clone(),
            memo: Mutex::new(HashMap::new()),
        })
    }

    pub fn law(&self) -> &Arc<HoGsosLaw> {
        &self.law
    }

    fn arc(&self) -> Arc<OperationalModel> {
        self.me.upgrade().expect("model is alive while in use")
    }

    /// Behaviour at a stage; terms are a constant presheaf, so only stage 0
    /// of a guarded law differs from the unstaged behaviour.
    pub fn behavior_at(&self, t: &Term, stage: usize) -> Result<StagedBehavior<Term>> {
        let op = head_op(t)?;
        if stage == 0 && self.law.guarded {
            return apply_rule_at_stage(&self.law, &self.arc(), op, t.children().to_vec(), 0);
        }
        self.behavior(t).map(StagedBehavior::Full)
    }

    pub fn cached_terms(&self) -> usize {
        self.memo.lock().expect("memo lock").len()
    }

    pub fn clear_cache(&self) {
        self.memo.lock().expect("memo lock").clear();
    }
}

fn head_op(t: &Term) -> Result<&Arc<OperatorDecl>> {
    match t.head() {
        Head::Op(op) => Ok(op),
        Head::Meta(name) => Err(Error::UnboundMetavariable(name.to_string())),
    }
}

impl Model for OperationalModel {
    type C = Term;

    fn signature(&self) -> &Arc<dyn Signature> {
        &self.law.sig
    }

    fn behavior(&self, t: &Term) -> Result<Arc<Behavior<Term>>> {
        if let Some(b) = self.memo.lock().expect("memo lock").get(t) {
            return Ok(b.clone());
        }
        let op = head_op(t)?;
        let b = Arc::new(apply_rule(&self.law, &self.arc(), op, t.children().to_vec())?);
        let mut memo = self.memo.lock().expect("memo lock");
        Ok(memo.entry(t.clone()).or_insert(b).clone())
    }

    fn build(&self, op: &Arc<OperatorDecl>, args: Vec<Term>) -> Result<Term> {
        Term::make(op, args)
    }

    fn guarded(&self) -> bool {
        self.law.guarded
    }
}

/// `γ(t)` for a fresh model of `law`. Prefer [`OperationalModel`] when
/// stepping many terms, to share its memo table.
pub fn operational_model(law: &Arc<HoGsosLaw>, t: &Term) -> Result<Arc<Behavior<Term>>> {
    OperationalModel::new(law.clone()).behavior(t)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepKind {
    /// `✓`
    Terminal,
    /// `→t`: the term is a function and the trace stops.
    Function,
    /// `→`: successors with their probabilities (`None` outside distributions).
    Reduct(Vec<(Term, Option<Weight>)>),
    /// The behaviour depends on an unknown subterm (a metavariable) or the
    /// rule table has a gap.
    Stuck(String),
}

impl StepKind {
    pub fn symbol(&self) -> &'static str {
        match self {
            StepKind::Terminal => "✓",
            StepKind::Function => "→t",
            StepKind::Reduct(_) => "→",
            StepKind::Stuck(_) => "⊥",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEntry {
    pub term: Term,
    pub kind: StepKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub entries: Vec<TraceEntry>,
    /// Fuel ran out while the term was still reducing.
    pub diverged: bool,
}

impl Trace {
    pub fn terms(&self) -> Vec<Term> {
        self.entries.iter().map(|e| e.term.clone()).collect()
    }

    pub fn steps(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| matches!(e.kind, StepKind::Reduct(_)))
            .count()
    }
}

/// Follows reduct steps (the first branch of sets and distributions) until a
/// value, a stuck configuration, or `fuel` reductions.
pub fn run_trace(model: &OperationalModel, t: &Term, fuel: usize) -> Trace {
    run_trace_with(model, t, fuel, |_| 0)
}

/// As [`run_trace`], with `choose` picking the branch to follow.
pub fn run_trace_with(
    model: &OperationalModel,
    t: &Term,
    fuel: usize,
    mut choose: impl FnMut(&[(Term, Option<Weight>)]) -> usize,
) -> Trace {
    let mut entries = Vec::new();
    let mut cur = t.clone();
    loop {
        let b = match model.behavior(&cur) {
            Ok(b) => b,
            Err(e) => {
                entries.push(TraceEntry {
                    term: cur,
                    kind: StepKind::Stuck(e.to_string()),
                });
                return Trace {
                    entries,
                    diverged: false,
                };
            }
        };
        let kind = match &b.step {
            Step::Terminal => StepKind::Terminal,
            Step::Function(_) => StepKind::Function,
            Step::Reduct(bag) => StepKind::Reduct(match bag {
                Bag::Det(x) => vec![(x.clone(), None)],
                Bag::Dist(v) => v.iter().map(|(x, w)| (x.clone(), Some(w.clone()))).collect(),
                Bag::Pow(v) => v.iter().map(|x| (x.clone(), None)).collect(),
            }),
        };
        let next = match &kind {
            StepKind::Reduct(succ) if !succ.is_empty() => {
                let i = choose(succ).min(succ.len() - 1);
                Some(succ[i].0.clone())
            }
            _ => None,
        };
        let reductions = entries.len();
        entries.push(TraceEntry { term: cur, kind });
        match next {
            None => {
                return Trace {
                    entries,
                    diverged: false,
                }
            }
            Some(_) if reductions >= fuel => {
                return Trace {
                    entries,
                    diverged: true,
                }
            }
            Some(n) => cur = n,
        }
    }
}
