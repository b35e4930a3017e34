//! Centroidal aggregation of the multibody system: total mass, COM
//! kinematics, the centroidal inertia tensor, the centroidal momentum
//! matrix with its free-floating / actuated split, and the configuration
//! gradients used for inertia shaping.
//!
//! All quantities are world-frame 3-vectors / 3x3 tensors about the
//! instantaneous COM. Symmetric tensors vectorize to the upper-triangular
//! order (xx, xy, xz, yy, yz, zz) of [`crate::math::sym_to_vec6`].

use nalgebra::{DMatrix, DVector, Matrix3, Vector3, Vector6};
use thiserror::Error;

use crate::math::{skew, sym_to_vec6};
use crate::rigidbody::{
    body_accelerations, body_point_jacobian, body_velocities, BodyVelocities, Kinematics,
    RobotModel, RobotState,
};
use crate::Real;

#[derive(Debug, Error)]
pub enum CentroidalError {
    #[error("centroidal inertia is numerically singular")]
    SingularInertia,
}

/// Aggregate state of the robot seen as a single variable-inertia body.
#[derive(Clone, Debug)]
pub struct CentroidalState<T: Real> {
    pub m_total: T,
    pub x_com: Vector3<T>,
    pub v_com: Vector3<T>,
    /// Rotational inertia about the COM, world frame.
    pub i_centroid: Matrix3<T>,
    pub h_lin: Vector3<T>,
    /// Angular momentum about the COM.
    pub h_ang: Vector3<T>,
    /// Contribution of the base angular rates.
    pub h_free: Vector3<T>,
    /// Contribution of the actuated joint rates.
    pub h_act: Vector3<T>,
    pub omega_avg: Vector3<T>,
}

/// World COM position.
pub fn com_position<T: Real>(model: &RobotModel<T>, kin: &Kinematics<T>) -> Vector3<T> {
    let mut weighted = Vector3::zeros();
    for (i, frame) in kin.frames.iter().enumerate() {
        weighted += frame.com_world * model.body(i).mass;
    }
    weighted / model.total_mass()
}

/// World COM velocity from the body velocity recursion.
pub fn com_velocity<T: Real>(model: &RobotModel<T>, vel: &BodyVelocities<T>) -> Vector3<T> {
    let mut weighted = Vector3::zeros();
    for (i, v) in vel.v_com.iter().enumerate() {
        weighted += v * model.body(i).mass;
    }
    weighted / model.total_mass()
}

/// COM Jacobian: mass-weighted mean of the body COM linear Jacobians.
pub fn com_jacobian<T: Real>(model: &RobotModel<T>, kin: &Kinematics<T>) -> DMatrix<T> {
    let mut j = DMatrix::zeros(3, model.nq());
    for i in 0..model.n_bodies() {
        let jac = body_point_jacobian(model, kin, i, &model.body(i).com_offset);
        j += jac.linear * model.body(i).mass;
    }
    j / model.total_mass()
}

/// `Jdot * qd` term of the COM task (COM acceleration at zero `qdd`).
pub fn com_acceleration_bias<T: Real>(
    model: &RobotModel<T>,
    kin: &Kinematics<T>,
    state: &RobotState<T>,
    vel: &BodyVelocities<T>,
) -> Vector3<T> {
    let zero = DVector::zeros(model.nq());
    let acc = body_accelerations(model, kin, state, vel, &zero);
    let mut weighted = Vector3::zeros();
    for (i, a) in acc.a_com.iter().enumerate() {
        weighted += a * model.body(i).mass;
    }
    weighted / model.total_mass()
}

fn world_inertia<T: Real>(model: &RobotModel<T>, kin: &Kinematics<T>, i: usize) -> Matrix3<T> {
    let r = kin.body_rotation(i);
    r * model.body(i).inertia_com * r.transpose()
}

/// Rotational inertia of the whole robot about its COM (world frame):
/// rotated body inertias plus the parallel-axis terms.
pub fn centroidal_inertia<T: Real>(model: &RobotModel<T>, kin: &Kinematics<T>) -> Matrix3<T> {
    let x_com = com_position(model, kin);
    let mut total = Matrix3::zeros();
    for i in 0..model.n_bodies() {
        let rho = skew(&(kin.frames[i].com_world - x_com));
        total += world_inertia(model, kin, i) + rho * rho.transpose() * model.body(i).mass;
    }
    total
}

/// Centroidal momentum matrix mapping `qd` to the angular momentum about
/// the COM, split into its structural blocks.
#[derive(Clone, Debug)]
pub struct Cmm<T: Real> {
    /// Full `3 x nq` map `[0 | ang | act]`.
    pub matrix: DMatrix<T>,
    /// `3 x 3` block over the base angle rates.
    pub ang: Matrix3<T>,
    /// `3 x (nq - 6)` block over the joint rates.
    pub act: DMatrix<T>,
}

/// Per-body assembly of the centroidal momentum matrix. The base linear
/// columns cancel exactly (the mass-weighted COM offsets sum to zero) and
/// are zeroed structurally.
pub fn centroidal_momentum_matrix<T: Real>(model: &RobotModel<T>, kin: &Kinematics<T>) -> Cmm<T> {
    let nq = model.nq();
    let x_com = com_position(model, kin);
    let mut h = DMatrix::zeros(3, nq);
    for i in 0..model.n_bodies() {
        let jac = body_point_jacobian(model, kin, i, &model.body(i).com_offset);
        let rho = skew(&(kin.frames[i].com_world - x_com));
        h += world_inertia(model, kin, i) * jac.angular + rho * jac.linear * model.body(i).mass;
    }
    h.view_mut((0, 0), (3, 3)).fill(T::zero());
    Cmm {
        ang: h.fixed_view::<3, 3>(0, 3).into_owned(),
        act: h.view((0, 6), (3, nq - 6)).into_owned(),
        matrix: h,
    }
}

/// Angular momentum about the COM by direct per-body summation.
pub fn angular_momentum<T: Real>(
    model: &RobotModel<T>,
    kin: &Kinematics<T>,
    vel: &BodyVelocities<T>,
) -> Vector3<T> {
    let x_com = com_position(model, kin);
    let mut h = Vector3::zeros();
    for i in 0..model.n_bodies() {
        let body = model.body(i);
        let rho = kin.frames[i].com_world - x_com;
        h += world_inertia(model, kin, i) * vel.omega[i] + rho.cross(&vel.v_com[i]) * body.mass;
    }
    h
}

/// `omega_avg = I_centroid^-1 * h_ang`.
pub fn average_angular_velocity<T: Real>(
    i_centroid: &Matrix3<T>,
    h_ang: &Vector3<T>,
) -> Result<Vector3<T>, CentroidalError> {
    i_centroid
        .cholesky()
        .map(|chol| chol.solve(h_ang))
        .ok_or(CentroidalError::SingularInertia)
}

/// Configuration gradient of the centroidal inertia: `6 x nq` matrix whose
/// column `j` is the vectorized `dI/dq_j`. `J_I * qd` is the tensor rate.
pub fn inertia_gradient<T: Real>(model: &RobotModel<T>, kin: &Kinematics<T>) -> DMatrix<T> {
    let nq = model.nq();
    let n = model.n_bodies();
    let x_com = com_position(model, kin);
    let j_com = com_jacobian(model, kin);

    let mut grad = DMatrix::zeros(6, nq);
    let mut inertias = Vec::with_capacity(n);
    let mut rhos = Vec::with_capacity(n);
    let mut jacs = Vec::with_capacity(n);
    for i in 0..n {
        inertias.push(world_inertia(model, kin, i));
        rhos.push(skew(&(kin.frames[i].com_world - x_com)));
        jacs.push(body_point_jacobian(model, kin, i, &model.body(i).com_offset));
    }

    for j in 0..nq {
        let mut d_total = Matrix3::zeros();
        for i in 0..n {
            let w = Vector3::new(
                jacs[i].angular[(0, j)],
                jacs[i].angular[(1, j)],
                jacs[i].angular[(2, j)],
            );
            let d_rho = Vector3::new(
                jacs[i].linear[(0, j)] - j_com[(0, j)],
                jacs[i].linear[(1, j)] - j_com[(1, j)],
                jacs[i].linear[(2, j)] - j_com[(2, j)],
            );
            let w_hat = skew(&w);
            let d_rho_hat = skew(&d_rho);
            // d(R I R^T) = [w] I_w - I_w [w]
            d_total += w_hat * inertias[i] - inertias[i] * w_hat;
            // d(m [rho][rho]^T) = m ([drho][rho]^T + [rho][drho]^T)
            d_total += (d_rho_hat * rhos[i].transpose() + rhos[i] * d_rho_hat.transpose())
                * model.body(i).mass;
        }
        grad.set_column(j, &sym_to_vec6(&d_total));
    }
    grad
}

/// Task Jacobian mapping `qd` to `h_act`: the actuated block of the
/// centroidal momentum matrix with zero base columns.
pub fn h_act_task_jacobian<T: Real>(model: &RobotModel<T>, kin: &Kinematics<T>) -> DMatrix<T> {
    let cmm = centroidal_momentum_matrix(model, kin);
    let mut j = DMatrix::zeros(3, model.nq());
    j.view_mut((0, 6), (3, model.nq() - 6)).copy_from(&cmm.act);
    j
}

/// `Hdot * qd` term: rate of the angular momentum about the COM at zero
/// generalized acceleration. Together with the momentum matrix this gives
/// `h_dot = H * qdd + bias` for any `qdd`.
pub fn momentum_rate_bias<T: Real>(
    model: &RobotModel<T>,
    kin: &Kinematics<T>,
    state: &RobotState<T>,
    vel: &BodyVelocities<T>,
) -> Vector3<T> {
    let zero = DVector::zeros(model.nq());
    let acc = body_accelerations(model, kin, state, vel, &zero);
    let x_com = com_position(model, kin);
    let v_com = com_velocity(model, vel);
    let mut bias = Vector3::zeros();
    for i in 0..model.n_bodies() {
        let body = model.body(i);
        let iw = world_inertia(model, kin, i);
        let rho = kin.frames[i].com_world - x_com;
        bias += iw * acc.alpha[i]
            + vel.omega[i].cross(&(iw * vel.omega[i]))
            + rho.cross(&acc.a_com[i]) * body.mass
            + (vel.v_com[i] - v_com).cross(&vel.v_com[i]) * body.mass;
    }
    bias
}

impl<T: Real> CentroidalState<T> {
    /// Assembles every centroidal quantity at the given kinematic snapshot.
    pub fn compute(
        model: &RobotModel<T>,
        kin: &Kinematics<T>,
        state: &RobotState<T>,
    ) -> Result<Self, CentroidalError> {
        let vel = body_velocities(model, kin, state);
        let m_total = model.total_mass();
        let x_com = com_position(model, kin);
        let v_com = com_velocity(model, &vel);
        let i_centroid = centroidal_inertia(model, kin);
        let cmm = centroidal_momentum_matrix(model, kin);
        let h_free = cmm.ang * state.base_angle_rates();
        let h_act = (&cmm.act * state.qd.rows(6, model.nq() - 6))
            .fixed_rows::<3>(0)
            .into_owned();
        let h_ang = h_free + h_act;
        let omega_avg = average_angular_velocity(&i_centroid, &h_ang)?;
        Ok(CentroidalState {
            m_total,
            x_com,
            v_com,
            i_centroid,
            h_lin: v_com * m_total,
            h_ang,
            h_free,
            h_act,
            omega_avg,
        })
    }

    /// Vectorized centroidal inertia (xx, xy, xz, yy, yz, zz).
    pub fn inertia_vec(&self) -> Vector6<T> {
        sym_to_vec6(&self.i_centroid)
    }
}
