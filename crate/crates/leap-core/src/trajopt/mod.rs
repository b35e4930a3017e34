//! Trajectory-optimization programs for the three jump phases, the dense
//! transcription utilities, and the in-repo QP / SQP solvers behind a
//! pluggable solver interface.

pub mod banded;
pub mod ipm;
pub mod qp;

pub use ipm::{InteriorPointSolver, IpmOptions};
pub use qp::{QpOutcome, QpProblem, QpSolve, SolveStatus, SolverReport, SparseMat};
pub mod launch;
