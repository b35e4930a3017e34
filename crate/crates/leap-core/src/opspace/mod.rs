//! Operational-space whole-body control: task-space dynamics,
//! dynamically consistent inverses and null-spaces, SVD-reduced
//! task-consistent subspaces, and prioritized stack compilation under
//! support and under-actuation.

pub mod algebra;
pub mod stack;

pub use algebra::{
    consistent_posture_jacobian, default_sigma_tol, support_projection, task_bias_terms,
    task_force, task_space_dynamics, weighted_task_space, Support, TaskSpace,
};
pub use stack::{
    compile_stack, constrained_qdd, support_jacobian, CompiledStack, FixedBlockProvider,
    LevelKind, LevelReport, OpspaceError, SupportSpec, TaskBlock, TaskLevel, TaskProvider,
    TaskStack, TickContext,
};
