//! The rule engine: rule tables, rule application over any carrier, the
//! operational and denotational models, and law checks.

mod apply;
mod check;
mod denotational;
mod law;
mod operational;

use std::fmt;
use std::hash::Hash;
use std::sync::Arc;

pub use apply::{apply_rule, apply_rule_at_stage, select_rule, StagedBehavior};
pub use check::{
    check_bialgebra_law, check_flatness, BialgebraReport, BialgebraViolation, Comparison, FlatnessReport,
};
pub use denotational::{denotational_algebra, denote, DenotationalModel};
pub use law::{
    parse_rule_line, print_expr, print_law, print_pattern, print_rule, Branches, ConclusionStep, EnvExpr, Expr,
    HoGsosLaw, Premise, Rule, RuleConclusion, RulePattern, StageGuard,
};
pub use operational::{
    operational_model, run_trace, run_trace_with, OperationalModel, StepKind, Trace, TraceEntry,
};

use crate::behavior::{Behavior, Payload};
use crate::error::Result;
use crate::kernel::{OperatorDecl, Signature, Sort};

/// States a model can carry: terms or denotations.
pub trait Carrier: Payload + Eq + Hash + fmt::Debug + Send + Sync + 'static {
    fn sort(&self) -> &Sort;
}

/// A carrier with an algebra and a coalgebra structure.
pub trait Model: Send + Sync + 'static {
    type C: Carrier;

    fn signature(&self) -> &Arc<dyn Signature>;

    /// The coalgebra structure.
    fn behavior(&self, x: &Self::C) -> Result<Arc<Behavior<Self::C>>>;

    /// The algebra structure.
    fn build(&self, op: &Arc<OperatorDecl>, args: Vec<Self::C>) -> Result<Self::C>;

    /// Whether behaviours live in the topos of trees, so that function
    /// outputs at depth `d` depend only on inputs up to depth `d`.
    fn guarded(&self) -> bool {
        false
    }

    /// A direct renaming into context `l + 1`, when the carrier has one.
    /// Otherwise weakening goes through the substitution component.
    fn weaken_direct(&self, _x: &Self::C, _l: u32) -> Option<Result<Self::C>> {
        None
    }
}

impl Carrier for crate::kernel::Term {
    fn sort(&self) -> &Sort {
        crate::kernel::Term::sort(self)
    }
}
