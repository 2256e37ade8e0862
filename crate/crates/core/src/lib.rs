//! Semidefinite-relaxation solver suite for quadratically constrained
//! quadratic programs whose sparsity graph is a tree, with an optimal power
//! flow frontend for radial networks.

pub mod condition;
pub mod conic;
pub mod error;
pub mod graph;
pub mod hermitian;
pub mod heuristic;
pub mod io;
mod jacobi;
pub mod opf;
pub mod problem;
pub mod recovery;
pub mod sdr;
pub mod simplex;

pub use error::{Error, Result};
pub use condition::{check_condition1, origin_in_relint, ConditionReport};
pub use graph::ProblemGraph;
pub use hermitian::{HermitianMatrix, Spectrum, C64};
pub use problem::{BoundPair, Constraint, QcqpProblem};
