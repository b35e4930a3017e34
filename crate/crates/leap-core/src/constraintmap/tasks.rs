//! Joint-limit and collision avoidance as top-priority constraint tasks:
//! activation logic, constraint Jacobians, and the repulsive potential.

use nalgebra::{DMatrix, DVector, Isometry3, Vector3};
use thiserror::Error;

use crate::constraintmap::geometry::{pair_distance, CollisionGeom, Shape};
use crate::opspace::{TaskBlock, TaskProvider, TickContext};
use crate::rigidbody::{point_jacobian_world, JointKind, RobotModel};
use crate::Real;

#[derive(Debug, Error)]
pub enum ConstraintError {
    #[error("repulsive potential is undefined for non-positive distance {rho}")]
    Penetration { rho: f64 },
    #[error("collision pair references unknown geometry {0:?}")]
    UnknownGeom(String),
}

/// Repulsive magnitude `eta (1/rho - 1/rho0) / rho^2`, zero at and beyond
/// the activation distance, strictly increasing as `rho -> 0`.
pub fn firas_force<T: Real>(rho: T, rho0: T, eta: T) -> Result<T, ConstraintError> {
    if rho <= T::zero() {
        return Err(ConstraintError::Penetration { rho: rho.as_f64() });
    }
    if rho >= rho0 {
        return Ok(T::zero());
    }
    Ok(eta * (T::one() / rho - T::one() / rho0) / (rho * rho))
}

/// Snapshot of one constraint's activation state, for telemetry.
#[derive(Clone, Debug)]
pub struct ConstraintActivation {
    pub name: String,
    /// Current distance metric (m for pairs, rad for joint limits).
    pub rho: f64,
    pub rho0: f64,
    pub active: bool,
    pub penetrating: bool,
}

/// Joint-limit avoidance rows: one selection row per joint inside its
/// activation margin, with the repulsive law pushing away from the limit.
pub struct JointLimitProvider<T: Real> {
    pub eta: T,
    /// Distance clamp used once a limit is crossed (the potential itself
    /// is undefined there); the tick is flagged in the activations.
    pub penetration_clamp: T,
}

impl<T: Real> Default for JointLimitProvider<T> {
    fn default() -> Self {
        JointLimitProvider {
            eta: nalgebra::convert(0.01_f64),
            penetration_clamp: nalgebra::convert(1e-3_f64),
        }
    }
}

pub fn joint_limit_blocks<T: Real>(
    model: &RobotModel<T>,
    q: &nalgebra::DVector<T>,
    eta: T,
    clamp: T,
) -> (Vec<TaskBlock<T>>, Vec<ConstraintActivation>) {
    let mut blocks = Vec::new();
    let mut activations = Vec::new();
    for b in 1..model.n_bodies() {
        let JointKind::Hinge {
            limits,
            activation_margin,
            ..
        } = &model.body(b).joint
        else {
            continue;
        };
        let coord = model.joint_coord(b);
        let to_lower = q[coord] - limits[0];
        let to_upper = limits[1] - q[coord];
        let (rho, sign) = if to_lower <= to_upper {
            (to_lower, T::one())
        } else {
            (to_upper, -T::one())
        };
        let active = rho <= *activation_margin;
        let penetrating = rho <= T::zero();
        if active {
            let rho_eff = rho.max(clamp);
            let magnitude =
                firas_force(rho_eff, *activation_margin, eta).unwrap_or_else(|_| T::zero());
            let mut jac = DMatrix::zeros(1, model.nq());
            jac[(0, coord)] = T::one();
            blocks.push(TaskBlock {
                name: format!("joint_limit:{}", model.body(b).name),
                jacobian: jac,
                accel_bias: DVector::zeros(1),
                desired: DVector::from_element(1, sign * magnitude),
            });
        }
        if active || penetrating {
            activations.push(ConstraintActivation {
                name: format!("joint_limit:{}", model.body(b).name),
                rho: rho.as_f64(),
                rho0: activation_margin.as_f64(),
                active,
                penetrating,
            });
        }
    }
    (blocks, activations)
}

impl<T: Real> TaskProvider<T> for JointLimitProvider<T> {
    fn name(&self) -> &str {
        "joint_limits"
    }
    fn blocks(&self, ctx: &TickContext<'_, T>) -> Vec<TaskBlock<T>> {
        joint_limit_blocks(ctx.model, &ctx.state.q, self.eta, self.penetration_clamp).0
    }
}

/// One registered collision pair: a robot geometry against either another
/// robot geometry or a world-fixed geometry.
#[derive(Clone, Debug)]
pub struct CollisionPair<T: Real> {
    pub name: String,
    pub body_a: usize,
    pub geom_a: usize,
    pub other: PairTarget<T>,
}

#[derive(Clone, Debug)]
pub enum PairTarget<T: Real> {
    Robot { body: usize, geom: usize },
    World { shape: Shape<T>, pose: Isometry3<T> },
}

/// Named world-fixed geometry available to environment pairs.
#[derive(Clone, Debug)]
pub struct WorldGeom<T: Real> {
    pub name: String,
    pub shape: Shape<T>,
    pub pose: Isometry3<T>,
}

/// Resolves the model's registry against the scenario's world geometry.
pub fn build_pairs<T: Real>(
    model: &RobotModel<T>,
    world: &[WorldGeom<T>],
) -> Result<Vec<CollisionPair<T>>, ConstraintError> {
    let mut pairs = Vec::new();
    for (a, b) in &model.collision_pairs.self_pairs {
        let (body_a, geom_a) = model
            .geom_owner(a)
            .ok_or_else(|| ConstraintError::UnknownGeom(a.clone()))?;
        let (body_b, geom_b) = model
            .geom_owner(b)
            .ok_or_else(|| ConstraintError::UnknownGeom(b.clone()))?;
        pairs.push(CollisionPair {
            name: format!("{a}~{b}"),
            body_a,
            geom_a,
            other: PairTarget::Robot {
                body: body_b,
                geom: geom_b,
            },
        });
    }
    for (a, env) in &model.collision_pairs.environment_pairs {
        let (body_a, geom_a) = model
            .geom_owner(a)
            .ok_or_else(|| ConstraintError::UnknownGeom(a.clone()))?;
        let w = world
            .iter()
            .find(|w| &w.name == env)
            .ok_or_else(|| ConstraintError::UnknownGeom(env.clone()))?;
        pairs.push(CollisionPair {
            name: format!("{a}~{env}"),
            body_a,
            geom_a,
            other: PairTarget::World {
                shape: w.shape.clone(),
                pose: w.pose,
            },
        });
    }
    Ok(pairs)
}

/// Evaluates all registered pairs at the current kinematics.
pub fn pair_states<T: Real>(
    model: &RobotModel<T>,
    kin: &crate::rigidbody::Kinematics<T>,
    pairs: &[CollisionPair<T>],
) -> Vec<(usize, crate::constraintmap::geometry::PairDistance<T>)> {
    let mut out = Vec::new();
    for (idx, pair) in pairs.iter().enumerate() {
        let geom_a: &CollisionGeom<T> = &model.body(pair.body_a).collision_geoms[pair.geom_a];
        let pose_a = kin.frames[pair.body_a].iso;
        let hit = match &pair.other {
            PairTarget::Robot { body, geom } => pair_distance(
                &geom_a.shape,
                &pose_a,
                &model.body(*body).collision_geoms[*geom].shape,
                &kin.frames[*body].iso,
            ),
            PairTarget::World { shape, pose } => {
                pair_distance(&geom_a.shape, &pose_a, shape, pose)
            }
        };
        if let Some(d) = hit {
            out.push((idx, d));
        }
    }
    out
}

/// Collision avoidance rows for every active registered pair.
///
/// Each row maps `qd` to the separation rate of the closest points:
/// `direction^T (J_a - J_b) qd`; the desired acceleration is the repulsive
/// magnitude along the separating direction.
pub struct CollisionProvider<T: Real> {
    pub pairs: Vec<CollisionPair<T>>,
    pub eta: T,
    pub rho0: T,
    pub penetration_clamp: T,
}

impl<T: Real> CollisionProvider<T> {
    pub fn new(pairs: Vec<CollisionPair<T>>, eta: T, rho0: T) -> Self {
        CollisionProvider {
            pairs,
            eta,
            rho0,
            penetration_clamp: nalgebra::convert(1e-3_f64),
        }
    }

    pub fn evaluate(
        &self,
        ctx: &TickContext<'_, T>,
    ) -> (Vec<TaskBlock<T>>, Vec<ConstraintActivation>) {
        let mut blocks = Vec::new();
        let mut activations = Vec::new();
        for (idx, dist) in pair_states(ctx.model, &ctx.kin, &self.pairs) {
            let pair = &self.pairs[idx];
            let active = dist.rho <= self.rho0;
            if !(active || dist.penetrating) {
                continue;
            }
            let dir = dist.direction.into_inner();
            let jac_a =
                point_jacobian_world(ctx.model, &ctx.kin, pair.body_a, &dist.point_a);
            let mut row = dir.transpose() * jac_a.linear;
            let mut bias = dir.dot(&point_bias_world(ctx, pair.body_a, &dist.point_a));
            if let PairTarget::Robot { body, .. } = &pair.other {
                let jac_b = point_jacobian_world(ctx.model, &ctx.kin, *body, &dist.point_b);
                row -= dir.transpose() * jac_b.linear;
                bias -= dir.dot(&point_bias_world(ctx, *body, &dist.point_b));
            }
            let rho_eff = dist.rho.max(self.penetration_clamp);
            let magnitude =
                firas_force(rho_eff, self.rho0, self.eta).unwrap_or_else(|_| T::zero());
            let mut jacobian = DMatrix::zeros(1, ctx.model.nq());
            jacobian.row_mut(0).copy_from(&row);
            blocks.push(TaskBlock {
                name: format!("collision:{}", pair.name),
                jacobian,
                accel_bias: DVector::from_element(1, bias),
                desired: DVector::from_element(1, magnitude),
            });
            activations.push(ConstraintActivation {
                name: format!("collision:{}", pair.name),
                rho: dist.rho.as_f64(),
                rho0: self.rho0.as_f64(),
                active,
                penetrating: dist.penetrating,
            });
        }
        (blocks, activations)
    }
}

/// Acceleration bias of a world point rigidly attached to `body`.
fn point_bias_world<T: Real>(
    ctx: &TickContext<'_, T>,
    body: usize,
    point_world: &Vector3<T>,
) -> Vector3<T> {
    let frame = &ctx.kin.frames[body];
    let r = point_world - frame.joint_origin_world;
    ctx.accel_bias.a_origin[body]
        + ctx.accel_bias.alpha[body].cross(&r)
        + ctx.vel.omega[body].cross(&ctx.vel.omega[body].cross(&r))
}

impl<T: Real> TaskProvider<T> for CollisionProvider<T> {
    fn name(&self) -> &str {
        "collision_avoidance"
    }
    fn blocks(&self, ctx: &TickContext<'_, T>) -> Vec<TaskBlock<T>> {
        self.evaluate(ctx).0
    }
}

/// Per-tick constraint violation audit used by the run harness: hard
/// joint-limit excursions and registered-pair penetrations.
#[derive(Clone, Debug, Default)]
pub struct ViolationReport {
    pub joint_limit_violations: Vec<String>,
    pub penetrations: Vec<String>,
}

pub fn audit_violations<T: Real>(
    model: &RobotModel<T>,
    kin: &crate::rigidbody::Kinematics<T>,
    q: &nalgebra::DVector<T>,
    pairs: &[CollisionPair<T>],
) -> ViolationReport {
    let mut report = ViolationReport::default();
    for b in 1..model.n_bodies() {
        if let JointKind::Hinge { limits, .. } = &model.body(b).joint {
            let coord = model.joint_coord(b);
            if q[coord] < limits[0] || q[coord] > limits[1] {
                report.joint_limit_violations.push(model.body(b).name.clone());
            }
        }
    }
    for (idx, dist) in pair_states(model, kin, pairs) {
        if dist.penetrating {
            report.penetrations.push(pairs[idx].name.clone());
        }
    }
    report
}
