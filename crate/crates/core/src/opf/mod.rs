//! Optimal power flow on radial networks, posed as a tree-structured QCQP.

pub mod assemble;
pub mod matrices;
pub mod network;
pub mod solve;

pub use assemble::{apply_pattern, assemble_opf, check_opf_condition, OpfConditionReport, OpfProblem, Pattern};
pub use matrices::{build_admittance, build_flow_matrices, build_injection_matrices, build_objective};
pub use network::{Base, Bus, Line, ObjectiveKind, ObjectiveSpec, PowerNetwork};
pub use solve::{recover_physical, solve_opf, BusSolution, LineSolution, OpfSolution, OpfSolveConfig, OpfStatus, OpfSummary, PhysicalState};
