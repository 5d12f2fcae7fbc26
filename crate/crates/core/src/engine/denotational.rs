use std::collections::HashMap;
use std::sync::{Arc, Mutex, Weak};

use super::apply::apply_rule;
use super::check::check_flatness;
use super::law::HoGsosLaw;
use super::Model;
use crate::behavior::Behavior;
use crate::error::{Error, Result};
use crate::gitrees::Denotation;
use crate::kernel::{Head, OperatorDecl, Signature, Term};

type AlgebraKey = (Arc<OperatorDecl>, Vec<u64>);

/// The denotational model `(Z, a_ρ, z)` of a relatively flat law.
///
/// `a_ρ(f, d₁..dₙ)` is a deferred node: forcing it forces the arguments as
/// far as the rule for `f` inspects them and instantiates the conclusion,
/// where every conclusion operator is interpreted by `a_ρ` again. Flatness
/// makes this unfolding productive, so it is the unique coalgebra morphism
/// into `Z` restricted to the forced part.
pub struct DenotationalModel {
    law: Arc<HoGsosLaw>,
    me: Weak<DenotationalModel>,
    algebra_memo: Mutex<HashMap<AlgebraKey, Denotation>>,
    term_memo: Mutex<HashMap<Term, Denotation>>,
}

impl std::fmt::Debug for DenotationalModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "DenotationalModel({})", self.law.name)
    }
}

impl DenotationalModel {
    pub fn new(law: Arc<HoGsosLaw>) -> Result<Arc<DenotationalModel>> {
        let report = check_flatness(&law);
        if !report.flat {
            return Err(Error::FlatnessViolation(report.violations.join("; ")));
        }
        Ok(Arc::new_cyclic(|me| DenotationalModel {
            law,
            me: me.clone(),
            algebra_memo: Mutex::new(HashMap::new()),
            term_memo: Mutex::new(HashMap::new()),
        }))
    }

    pub fn law(&self) -> &Arc<HoGsosLaw> {
        &self.law
    }

    fn arc(&self) -> Arc<DenotationalModel> {
        self.me.upgrade().expect("model is alive while in use")
    }

    /// `a_ρ` at one operator.
    pub fn algebra(&self, op: &Arc<OperatorDecl>, args: Vec<Denotation>) -> Result<Denotation> {
        if op.arity() != args.len() {
            return Err(Error::ArityMismatch {
                op: op.to_string(),
                expected: op.arity(),
                found: args.len(),
            });
        }
        for (i, (want, a)) in op.arg_sorts.iter().zip(&args).enumerate() {
            if want != a.sort() {
                return Err(Error::SortMismatch {
                    context: format!("argument {i} of {op}"),
                    expected: want.clone(),
                    found: a.sort().clone(),
                });
            }
        }
        let key = (op.clone(), args.iter().map(Denotation::id).collect::<Vec<_>>());
        if let Some(d) = self.algebra_memo.lock().expect("memo lock").get(&key) {
            return Ok(d.clone());
        }
        let (law, model, op2) = (self.law.clone(), self.arc(), op.clone());
        let d = Denotation::lazy(op.result_sort.clone(), &op.to_string(), move || {
            apply_rule(&law, &model, &op2, args.clone())
        });
        let mut memo = self.algebra_memo.lock().expect("memo lock");
        Ok(memo.entry(key).or_insert(d).clone())
    }

    /// `⟦t⟧`: the fold of `a_ρ`.
    pub fn denote(&self, t: &Term) -> Result<Denotation> {
        if let Some(d) = self.term_memo.lock().expect("memo lock").get(t) {
            return Ok(d.clone());
        }
        let op = match t.head() {
            Head::Op(op) => op,
            Head::Meta(m) => return Err(Error::UnboundMetavariable(m.to_string())),
        };
        let args = t.children().iter().map(|c| self.denote(c)).collect::<Result<Vec<_>>>()?;
        let d = self.algebra(op, args)?;
        let mut memo = self.term_memo.lock().expect("memo lock");
        Ok(memo.entry(t.clone()).or_insert(d).clone())
    }

    pub fn cached(&self) -> usize {
        self.algebra_memo.lock().expect("memo lock").len()
    }

    /// Drops both memo tables. Denotations already handed out stay valid.
    pub fn clear_cache(&self) {
        self.algebra_memo.lock().expect("memo lock").clear();
        self.term_memo.lock().expect("memo lock").clear();
    }
}

impl Model for DenotationalModel {
    type C = Denotation;

    fn signature(&self) -> &Arc<dyn Signature> {
        &self.law.sig
    }

    fn behavior(&self, x: &Denotation) -> Result<Arc<Behavior<Denotation>>> {
        x.force()
    }

    fn build(&self, op: &Arc<OperatorDecl>, args: Vec<Denotation>) -> Result<Denotation> {
        self.algebra(op, args)
    }

    fn guarded(&self) -> bool {
        self.law.guarded
    }
}

/// `a_ρ(f, args)` for a fresh model of `law`.
pub fn denotational_algebra(law: &Arc<HoGsosLaw>, op: &Arc<OperatorDecl>, args: Vec<Denotation>) -> Result<Denotation> {
    DenotationalModel::new(law.clone())?.algebra(op, args)
}

/// `⟦t⟧` for a fresh model of `law`.
pub fn denote(law: &Arc<HoGsosLaw>, t: &Term) -> Result<Denotation> {
    DenotationalModel::new(law.clone())?.denote(t)
}
