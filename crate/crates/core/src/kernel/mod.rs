//! Sorted signatures, well-sorted terms, folds and term enumeration.

mod enumerate;
mod sort;
mod term;

use std::fmt;
use std::sync::Arc;

pub use enumerate::{enumerate_terms, TermCounter};
pub use sort::{Sort, Ty};
pub use term::{Head, OperatorDecl, Term};

use crate::error::Result;

/// An operator family as it appears in rule tables: the name shared by all
/// sort instances, its arity and its flatness rank.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Family {
    pub name: &'static str,
    pub arity: usize,
    pub rank: u32,
    /// Families indexed by a natural number (λ-calculus variables).
    pub indexed: bool,
}

/// A sorted signature whose operators are instantiated on demand.
///
/// Typed signatures have infinitely many operators; `operators_into` must
/// return a finite, deterministic list (typed signatures bound the type
/// parameters of their instances).
pub trait Signature: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    fn families(&self) -> &[Family];

    fn family(&self, name: &str) -> Option<&Family> {
        self.families().iter().find(|f| f.name == name)
    }

    /// Operators whose result sort is `sort`, in canonical order.
    fn operators_into(&self, sort: &Sort) -> Vec<Arc<OperatorDecl>>;

    /// Picks the instance of `family` for the given argument sorts and, when
    /// known, the expected result sort.
    fn instantiate(
        &self,
        family: &str,
        index: Option<u32>,
        args: &[Sort],
        result: Option<&Sort>,
    ) -> Result<Arc<OperatorDecl>>;

    /// Domain and codomain of the function summand at `sort`, if any.
    fn function_sorts(&self, sort: &Sort) -> Option<(Sort, Sort)>;

    /// Whether behaviours at `sort` may carry the terminal summand.
    fn has_terminal(&self, sort: &Sort) -> bool;
}

/// Makes `op(args)`; thin wrapper kept for symmetry with the other
/// operations of this module.
pub fn make_term(op: &Arc<OperatorDecl>, args: Vec<Term>) -> Result<Term> {
    Term::make(op, args)
}
