//! Constraint tasks: joint-limit avoidance and (self-) collision
//! avoidance over simple volumes, driven by a repulsive potential that
//! activates inside a distance threshold.

pub mod geometry;
pub mod tasks;

pub use geometry::{pair_distance, CollisionGeom, PairDistance, Shape};
pub use tasks::{
    audit_violations, build_pairs, firas_force, joint_limit_blocks, CollisionPair,
    CollisionProvider, ConstraintActivation, ConstraintError, JointLimitProvider, PairTarget,
    ViolationReport, WorldGeom,
};
