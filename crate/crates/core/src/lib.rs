// `!(x < y)` comparisons are deliberate: they treat NaN as failing.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod cli;
pub mod conditions;
pub mod config;
pub mod error;
pub mod experiments;
pub mod fem;
pub mod linalg;
pub mod problems;
pub mod steppers;
pub mod system;

pub use error::{Error, Result};
pub use problems::{Loads, ProblemData};
pub use system::{AssembledSystem, MaterialParams};
