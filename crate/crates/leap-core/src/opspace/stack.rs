//! Prioritized task stacks (constraints > task > posture) compiled to
//! actuated joint torques, with optional support consistency and
//! under-actuation resolution.

use nalgebra::{DMatrix, DVector, Vector3};
use thiserror::Error;

use crate::math::row_space_reduce_with_floor;
use crate::opspace::algebra::{support_projection, weighted_task_space, Support};
use crate::rigidbody::{
    bias_and_gravity, body_accelerations, body_velocities, forward_kinematics, mass_matrix,
    point_jacobian_world, BodyAccelerations, BodyVelocities, Kinematics, RobotModel, RobotState,
    StateError,
};
use crate::Real;

#[derive(Debug, Error)]
pub enum OpspaceError {
    #[error(transparent)]
    State(#[from] StateError),
    #[error("mass matrix is not positive definite")]
    MassNotPd,
    #[error("support Jacobian rank collapsed to {rank} (need {need})")]
    SupportRankLoss { rank: usize, need: usize },
}

/// Per-tick model evaluation shared by every task provider.
pub struct TickContext<'m, T: Real> {
    pub model: &'m RobotModel<T>,
    pub state: &'m RobotState<T>,
    pub kin: Kinematics<T>,
    pub vel: BodyVelocities<T>,
    /// Body accelerations at zero `qdd` (the `Jdot qd` source).
    pub accel_bias: BodyAccelerations<T>,
    pub mass: DMatrix<T>,
    pub mass_inv: DMatrix<T>,
    /// Velocity-product generalized forces `b`.
    pub bias: DVector<T>,
    /// Gravity generalized forces `g`.
    pub gravity_force: DVector<T>,
    pub gravity: Vector3<T>,
    /// Seconds since the active phase started.
    pub phase_time: T,
}

impl<'m, T: Real> TickContext<'m, T> {
    pub fn compute(
        model: &'m RobotModel<T>,
        state: &'m RobotState<T>,
        gravity: Vector3<T>,
        phase_time: T,
    ) -> Result<Self, OpspaceError> {
        let kin = forward_kinematics(model, state)?;
        let vel = body_velocities(model, &kin, state);
        let zero = DVector::zeros(model.nq());
        let accel_bias = body_accelerations(model, &kin, state, &vel, &zero);
        let mass = mass_matrix(model, &kin);
        let chol = mass.clone().cholesky().ok_or(OpspaceError::MassNotPd)?;
        let mass_inv = chol.inverse();
        let (bias, gravity_force) = bias_and_gravity(model, &kin, state, &gravity);
        Ok(TickContext {
            model,
            state,
            kin,
            vel,
            accel_bias,
            mass,
            mass_inv,
            bias,
            gravity_force,
            gravity,
            phase_time,
        })
    }

    /// World acceleration of a body point at zero `qdd`.
    pub fn point_bias(&self, body: usize, point_in_body: &Vector3<T>) -> Vector3<T> {
        let frame = &self.kin.frames[body];
        let r = self.kin.point_world(body, point_in_body) - frame.joint_origin_world;
        self.accel_bias.a_origin[body]
            + self.accel_bias.alpha[body].cross(&r)
            + self.vel.omega[body].cross(&self.vel.omega[body].cross(&r))
    }
}

/// One evaluated task contribution: rows of the stacked level.
#[derive(Clone, Debug)]
pub struct TaskBlock<T: Real> {
    pub name: String,
    /// `r x nq` task Jacobian.
    pub jacobian: DMatrix<T>,
    /// `Jdot * qd` of the task coordinates.
    pub accel_bias: DVector<T>,
    /// Desired unit-space acceleration `F*`.
    pub desired: DVector<T>,
}

/// Produces zero or more task blocks each tick; constraint providers
/// return nothing while inactive.
pub trait TaskProvider<T: Real> {
    fn name(&self) -> &str;
    fn blocks(&self, ctx: &TickContext<'_, T>) -> Vec<TaskBlock<T>>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LevelKind {
    Constraint,
    Task,
    Posture,
}

pub struct TaskLevel<T: Real> {
    pub kind: LevelKind,
    pub providers: Vec<Box<dyn TaskProvider<T>>>,
}

/// Support contact specification: the named body's frame is treated as a
/// rigid 6-DoF contact at `point_in_body`.
#[derive(Clone, Debug)]
pub struct SupportSpec<T: Real> {
    pub body: usize,
    pub point_in_body: Vector3<T>,
}

/// Ordered task levels plus support and actuation context.
pub struct TaskStack<T: Real> {
    pub name: String,
    pub levels: Vec<TaskLevel<T>>,
    pub support: Option<SupportSpec<T>>,
    /// Relative singular-value cutoff for every rank decision.
    pub sigma_tol: T,
}

impl<T: Real> TaskStack<T> {
    pub fn new(name: impl Into<String>) -> Self {
        TaskStack {
            name: name.into(),
            levels: Vec::new(),
            support: None,
            sigma_tol: crate::opspace::algebra::default_sigma_tol(),
        }
    }

    pub fn push_level(&mut self, kind: LevelKind, providers: Vec<Box<dyn TaskProvider<T>>>) {
        self.levels.push(TaskLevel { kind, providers });
    }
}

#[derive(Clone, Debug)]
pub struct LevelReport {
    pub kind: &'static str,
    pub rows: usize,
    pub rank: usize,
    pub names: Vec<String>,
}

/// Compiled per-tick output of a stack.
#[derive(Clone, Debug)]
pub struct CompiledStack<T: Real> {
    /// Torques of the actuated coordinates.
    pub torque_actuated: DVector<T>,
    /// `U^T` expansion of the actuated torques to all coordinates.
    pub torque_full: DVector<T>,
    /// Designed torque before under-actuation resolution.
    pub torque_designed: DVector<T>,
    pub levels: Vec<LevelReport>,
    /// Names of active constraint rows this tick.
    pub active_constraints: Vec<String>,
}

fn level_kind_name(kind: LevelKind) -> &'static str {
    match kind {
        LevelKind::Constraint => "constraint",
        LevelKind::Task => "task",
        LevelKind::Posture => "posture",
    }
}

/// Support Jacobian (6 rows: linear then angular) and its `Jdot qd`.
pub fn support_jacobian<T: Real>(
    ctx: &TickContext<'_, T>,
    spec: &SupportSpec<T>,
) -> (DMatrix<T>, DVector<T>) {
    let jac = {
        let p = ctx.kin.point_world(spec.body, &spec.point_in_body);
        point_jacobian_world(ctx.model, &ctx.kin, spec.body, &p)
    };
    let mut j = DMatrix::zeros(6, ctx.model.nq());
    j.view_mut((0, 0), (3, ctx.model.nq())).copy_from(&jac.linear);
    j.view_mut((3, 0), (3, ctx.model.nq()))
        .copy_from(&jac.angular);
    let lin_bias = ctx.point_bias(spec.body, &spec.point_in_body);
    let ang_bias = ctx.accel_bias.alpha[spec.body];
    let mut bias = DVector::zeros(6);
    for k in 0..3 {
        bias[k] = lin_bias[k];
        bias[k + 3] = ang_bias[k];
    }
    (j, bias)
}

/// Compiles the stack into actuated torques.
///
/// The levels are resolved in strict priority order inside the
/// support-consistent dynamics `qdd = W Gamma + d` with
/// `W = N_s M^-1` (or `M^-1` without support). Each level is SVD-reduced
/// to its achievable subspace, commanded exactly there, and lower levels
/// are projected so they cannot disturb it. The final designed torque is
/// mapped to actuated coordinates with the dynamically consistent
/// generalized inverse of `U N_s`.
pub fn compile_stack<T: Real>(
    stack: &TaskStack<T>,
    ctx: &TickContext<'_, T>,
) -> Result<CompiledStack<T>, OpspaceError> {
    let nq = ctx.model.nq();
    let tol = stack.sigma_tol;

    // Support-consistent dynamics: qdd = W * Gamma + drift.
    let (weight, drift, n_s) = match &stack.support {
        Some(spec) => {
            let (j_s, jdot_qd_s) = support_jacobian(ctx, spec);
            let svd = j_s.clone().svd(false, false);
            let smax = svd.singular_values.max();
            let rank = svd
                .singular_values
                .iter()
                .filter(|&&s| s > smax * nalgebra::convert(1e-6_f64))
                .count();
            if rank < 6 {
                return Err(OpspaceError::SupportRankLoss { rank, need: 6 });
            }
            let sup: Support<T> = support_projection(&ctx.mass_inv, &j_s, tol);
            let weight = &sup.n_s * &ctx.mass_inv;
            let drift = -&weight * (&ctx.bias + &ctx.gravity_force) - &sup.jbar_s * jdot_qd_s;
            (weight, drift, Some(sup.n_s))
        }
        None => {
            let weight = ctx.mass_inv.clone();
            let drift = -&weight * (&ctx.bias + &ctx.gravity_force);
            (weight, drift, None)
        }
    };

    let mut projector = match &n_s {
        Some(n_s) => n_s.clone(),
        None => DMatrix::identity(nq, nq),
    };
    let mut torque = DVector::zeros(nq);
    let mut reports = Vec::new();
    let mut active_constraints = Vec::new();

    for level in &stack.levels {
        let mut blocks: Vec<TaskBlock<T>> = Vec::new();
        for provider in &level.providers {
            blocks.extend(provider.blocks(ctx));
        }
        let rows: usize = blocks.iter().map(|b| b.jacobian.nrows()).sum();
        if rows == 0 {
            reports.push(LevelReport {
                kind: level_kind_name(level.kind),
                rows: 0,
                rank: 0,
                names: Vec::new(),
            });
            continue;
        }
        let mut jac = DMatrix::zeros(rows, nq);
        let mut jdot_qd = DVector::zeros(rows);
        let mut desired = DVector::zeros(rows);
        let mut names = Vec::new();
        let mut at = 0;
        for block in &blocks {
            let r = block.jacobian.nrows();
            jac.view_mut((at, 0), (r, nq)).copy_from(&block.jacobian);
            jdot_qd.rows_mut(at, r).copy_from(&block.accel_bias);
            desired.rows_mut(at, r).copy_from(&block.desired);
            if level.kind == LevelKind::Constraint {
                active_constraints.push(block.name.clone());
            }
            names.push(block.name.clone());
            at += r;
        }

        // Achievable subspace after higher priorities and support. The
        // cutoff floor is tied to the unprojected Jacobian scale so a
        // fully consumed level reduces to nothing instead of noise.
        let floor = tol * jac.norm();
        let (u_r, phi) = row_space_reduce_with_floor(&(&jac * &projector), tol, floor);
        let rank = phi.nrows();
        reports.push(LevelReport {
            kind: level_kind_name(level.kind),
            rows,
            rank,
            names,
        });
        if rank == 0 {
            continue;
        }

        let ts = weighted_task_space(&weight, &phi, tol);
        // Command the reduced coordinates exactly: compensate the bias,
        // drift, and everything already injected by higher levels.
        let induced = &jac * (&weight * &torque + &drift);
        let rhs = u_r.transpose() * (&desired - &jdot_qd - induced);
        let force = &ts.lambda * rhs;
        torque += phi.transpose() * &force;
        // Lower priorities act in the remaining space only.
        projector -= &weight * phi.transpose() * &ts.lambda * &phi;
    }

    // Under-actuation resolution: dynamically consistent generalized
    // inverse of U N_s maps the designed torque to actuated coordinates.
    let actuated = ctx.model.actuated_coords();
    let m = actuated.len();
    let torque_designed = torque.clone();
    let (torque_actuated, torque_full) = if m == nq {
        (torque.clone(), torque)
    } else {
        let mut u_sel = DMatrix::zeros(m, nq);
        for (row, &coord) in actuated.iter().enumerate() {
            u_sel[(row, coord)] = T::one();
        }
        let x = match &n_s {
            Some(n_s) => &u_sel * n_s,
            None => u_sel.clone(),
        };
        let ts = weighted_task_space(&ctx.mass_inv, &x, tol);
        let gamma_a = ts.jbar.transpose() * &torque;
        let mut full = DVector::zeros(nq);
        for (row, &coord) in actuated.iter().enumerate() {
            full[coord] = gamma_a[row];
        }
        (gamma_a, full)
    };

    Ok(CompiledStack {
        torque_actuated,
        torque_full,
        torque_designed,
        levels: reports,
        active_constraints,
    })
}

/// Ideal-algebra forward dynamics for a compiled torque: the support
/// constraint (if any) is enforced exactly rather than through a contact
/// model. `qdd = N_s M^-1 (Gamma - b - g) - Jbar_s Jdot_s qd`.
pub fn constrained_qdd<T: Real>(
    ctx: &TickContext<'_, T>,
    support: Option<&SupportSpec<T>>,
    torque_full: &DVector<T>,
) -> DVector<T> {
    let applied = torque_full - &ctx.bias - &ctx.gravity_force;
    match support {
        Some(spec) => {
            let (j_s, jdot_qd_s) = support_jacobian(ctx, spec);
            let sup = support_projection(
                &ctx.mass_inv,
                &j_s,
                crate::opspace::algebra::default_sigma_tol(),
            );
            &sup.n_s * (&ctx.mass_inv * applied) - &sup.jbar_s * jdot_qd_s
        }
        None => &ctx.mass_inv * applied,
    }
}

/// Fixed numeric blocks, for tests and scripted tasks.
pub struct FixedBlockProvider<T: Real> {
    pub label: String,
    pub block: TaskBlock<T>,
}

impl<T: Real> TaskProvider<T> for FixedBlockProvider<T> {
    fn name(&self) -> &str {
        &self.label
    }
    fn blocks(&self, _ctx: &TickContext<'_, T>) -> Vec<TaskBlock<T>> {
        vec![self.block.clone()]
    }
}
