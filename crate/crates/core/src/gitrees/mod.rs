//! Denotations in the locally final coalgebra and their finite
//! observations: truncations, distances, exact stages and approximants.

mod denotation;
mod probes;
mod stage;
mod tree;
mod truncate;

pub use denotation::{max_force_depth, poisoned, reset_max_force_depth, Denotation, PoisonLog, FORCE_FUEL};
pub use probes::{mapped_probes, term_probes, ProbeSet};
pub use stage::{
    approximant, enumerate_stage, nu_tower, stage_tower, StageElement, StageLanguage, Tower, CANDIDATE_CAP,
};
pub use tree::{Entry, Tree, TreeBag, TreeDocument, TreeNode, WeightedTree, TREE_SCHEMA_VERSION};
pub use truncate::{classify_unit, dyadic, tree_difference, Move, Truncator, UnitShape, Witness};
