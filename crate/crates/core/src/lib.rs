//! Analysis of weakly homogeneous optimization problems.

pub mod analysis;
pub mod certificates;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod kernel;
pub mod oracle;
pub mod parametric;
pub mod problem;
pub mod search;
pub mod solver;
mod vecops;
pub mod verdict;

pub use error::{Error, Result};
