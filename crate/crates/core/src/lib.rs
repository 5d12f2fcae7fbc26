//! A workbench for higher-order abstract GSOS: rule tables, operational and
//! denotational models, truncated observations and bisimilarity checks, with
//! five calculi as instances.

pub mod behavior;
pub mod bisim;
pub mod engine;
pub mod error;
pub mod gitrees;
pub mod harness;
pub mod kernel;
pub mod lang;

pub use error::{Error, Result};
