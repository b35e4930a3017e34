//! Forward kinematics, geometric Jacobians, and the velocity /
//! acceleration recursions shared by the dynamics algorithms.

use nalgebra::{DMatrix, DVector, Isometry3, Matrix3, Point3, Translation3, Vector3};

use crate::math::{euler_rate_map, euler_rate_map_dot, skew};
use crate::rigidbody::model::{JointKind, RobotModel};
use crate::rigidbody::state::{RobotState, StateError};
use crate::Real;

/// Per-body world-frame pose data.
#[derive(Clone, Debug)]
pub struct BodyFrame<T: Real> {
    /// Body frame (origin at the joint anchor).
    pub iso: Isometry3<T>,
    /// Body COM in world coordinates.
    pub com_world: Vector3<T>,
    /// Joint anchor in world coordinates (base origin for body 0).
    pub joint_origin_world: Vector3<T>,
    /// Hinge axis in world coordinates (zero vector for the base).
    pub joint_axis_world: Vector3<T>,
}

/// Forward-kinematics snapshot of every body plus the base rate map.
#[derive(Clone, Debug)]
pub struct Kinematics<T: Real> {
    pub frames: Vec<BodyFrame<T>>,
    /// Base angle-rate map `E` with `omega = E * zeta_dot`.
    pub euler_map: Matrix3<T>,
    pub base_origin: Vector3<T>,
}

impl<T: Real> Kinematics<T> {
    pub fn body_rotation(&self, body: usize) -> Matrix3<T> {
        self.frames[body].iso.rotation.to_rotation_matrix().into_inner()
    }

    /// Maps a body-frame point to world coordinates.
    pub fn point_world(&self, body: usize, point_in_body: &Vector3<T>) -> Vector3<T> {
        (self.frames[body].iso * Point3::from(*point_in_body)).coords
    }
}

/// Computes world frames and COM positions for every body.
pub fn forward_kinematics<T: Real>(
    model: &RobotModel<T>,
    state: &RobotState<T>,
) -> Result<Kinematics<T>, StateError> {
    state.validate(model)?;
    let mut frames: Vec<BodyFrame<T>> = Vec::with_capacity(model.n_bodies());

    let base_iso = Isometry3::from_parts(
        Translation3::from(state.base_position()),
        state.base_rotation().into(),
    );
    frames.push(BodyFrame {
        com_world: (base_iso * Point3::from(model.body(0).com_offset)).coords,
        joint_origin_world: state.base_position(),
        joint_axis_world: Vector3::zeros(),
        iso: base_iso,
    });

    for i in 1..model.n_bodies() {
        let body = model.body(i);
        let parent = &frames[body.parent];
        let anchor = parent.iso * Point3::from(body.origin_in_parent);
        let mount = parent.iso.rotation.to_rotation_matrix() * body.rotation_in_parent;
        let (axis, angle) = match &body.joint {
            JointKind::Hinge { axis, .. } => (axis, state.q[model.joint_coord(i)]),
            JointKind::FreeBase => unreachable!("free joint only on the base"),
        };
        let hinge = nalgebra::Rotation3::from_axis_angle(axis, angle);
        let rot = mount * hinge;
        let iso = Isometry3::from_parts(Translation3::from(anchor.coords), rot.into());
        frames.push(BodyFrame {
            com_world: (iso * Point3::from(body.com_offset)).coords,
            joint_origin_world: anchor.coords,
            joint_axis_world: mount * axis.into_inner(),
            iso,
        });
    }

    Ok(Kinematics {
        euler_map: euler_rate_map(&state.base_angles()),
        base_origin: state.base_position(),
        frames,
    })
}

/// Linear and angular Jacobian of a body-fixed point, both `3 x nq`.
///
/// `jv * qd` is the world velocity of the point; `jw * qd` the world
/// angular velocity of the body.
#[derive(Clone, Debug)]
pub struct PointJacobian<T: Real> {
    pub linear: DMatrix<T>,
    pub angular: DMatrix<T>,
}

/// Jacobians of a point given in the body frame.
pub fn body_point_jacobian<T: Real>(
    model: &RobotModel<T>,
    kin: &Kinematics<T>,
    body_index: usize,
    point_in_body: &Vector3<T>,
) -> PointJacobian<T> {
    let point_world = kin.point_world(body_index, point_in_body);
    point_jacobian_world(model, kin, body_index, &point_world)
}

/// Jacobians of a world-coordinate point rigidly attached to a body.
pub fn point_jacobian_world<T: Real>(
    model: &RobotModel<T>,
    kin: &Kinematics<T>,
    body_index: usize,
    point_world: &Vector3<T>,
) -> PointJacobian<T> {
    let nq = model.nq();
    let mut jv = DMatrix::zeros(3, nq);
    let mut jw = DMatrix::zeros(3, nq);

    // Base translation: direct world-velocity coordinates.
    jv.view_mut((0, 0), (3, 3)).fill_with_identity();
    // Base rotation: omega = E * zeta_dot, point velocity = omega x r.
    let r = point_world - kin.base_origin;
    let lin_base = -skew(&r) * kin.euler_map;
    jv.view_mut((0, 3), (3, 3)).copy_from(&lin_base);
    jw.view_mut((0, 3), (3, 3)).copy_from(&kin.euler_map);

    let mut b = body_index;
    while b != 0 {
        let frame = &kin.frames[b];
        let axis = frame.joint_axis_world;
        let col = model.joint_coord(b);
        let arm = point_world - frame.joint_origin_world;
        jv.set_column(col, &axis.cross(&arm));
        jw.set_column(col, &axis);
        b = model.body(b).parent;
    }

    PointJacobian {
        linear: jv,
        angular: jw,
    }
}

/// World-frame body velocities from the current generalized rates.
#[derive(Clone, Debug)]
pub struct BodyVelocities<T: Real> {
    pub omega: Vec<Vector3<T>>,
    pub v_com: Vec<Vector3<T>>,
    pub v_origin: Vec<Vector3<T>>,
}

pub fn body_velocities<T: Real>(
    model: &RobotModel<T>,
    kin: &Kinematics<T>,
    state: &RobotState<T>,
) -> BodyVelocities<T> {
    let n = model.n_bodies();
    let mut omega = vec![Vector3::zeros(); n];
    let mut v_com = vec![Vector3::zeros(); n];
    let mut v_origin = vec![Vector3::zeros(); n];

    omega[0] = kin.euler_map * state.base_angle_rates();
    v_origin[0] = state.base_velocity();
    v_com[0] = v_origin[0] + omega[0].cross(&(kin.frames[0].com_world - kin.base_origin));

    for i in 1..n {
        let parent = model.body(i).parent;
        let frame = &kin.frames[i];
        let rate = state.qd[model.joint_coord(i)];
        let axis = frame.joint_axis_world;
        omega[i] = omega[parent] + axis * rate;
        v_origin[i] = v_origin[parent]
            + omega[parent].cross(&(frame.joint_origin_world - kin.frames[parent].joint_origin_world));
        v_com[i] = v_origin[i] + omega[i].cross(&(frame.com_world - frame.joint_origin_world));
    }

    BodyVelocities {
        omega,
        v_com,
        v_origin,
    }
}

/// World-frame body accelerations for a given `qdd` (pass zeros to get the
/// velocity-product terms, i.e. the `Jdot * qd` bias of any body point).
#[derive(Clone, Debug)]
pub struct BodyAccelerations<T: Real> {
    pub alpha: Vec<Vector3<T>>,
    pub a_com: Vec<Vector3<T>>,
    pub a_origin: Vec<Vector3<T>>,
}

pub fn body_accelerations<T: Real>(
    model: &RobotModel<T>,
    kin: &Kinematics<T>,
    state: &RobotState<T>,
    vel: &BodyVelocities<T>,
    qdd: &DVector<T>,
) -> BodyAccelerations<T> {
    let n = model.n_bodies();
    let mut alpha = vec![Vector3::zeros(); n];
    let mut a_com = vec![Vector3::zeros(); n];
    let mut a_origin = vec![Vector3::zeros(); n];

    let zeta_dot = state.base_angle_rates();
    let zeta_ddot = Vector3::new(qdd[3], qdd[4], qdd[5]);
    let e_dot = euler_rate_map_dot(&state.base_angles(), &zeta_dot);
    alpha[0] = kin.euler_map * zeta_ddot + e_dot * zeta_dot;
    a_origin[0] = Vector3::new(qdd[0], qdd[1], qdd[2]);
    let r0 = kin.frames[0].com_world - kin.base_origin;
    a_com[0] = a_origin[0] + alpha[0].cross(&r0) + vel.omega[0].cross(&vel.omega[0].cross(&r0));

    for i in 1..n {
        let parent = model.body(i).parent;
        let frame = &kin.frames[i];
        let axis = frame.joint_axis_world;
        let rate = state.qd[model.joint_coord(i)];
        let acc = qdd[model.joint_coord(i)];

        alpha[i] = alpha[parent] + axis * acc + vel.omega[parent].cross(&(axis * rate));
        let r_joint = frame.joint_origin_world - kin.frames[parent].joint_origin_world;
        a_origin[i] = a_origin[parent]
            + alpha[parent].cross(&r_joint)
            + vel.omega[parent].cross(&vel.omega[parent].cross(&r_joint));
        let r_com = frame.com_world - frame.joint_origin_world;
        a_com[i] = a_origin[i]
            + alpha[i].cross(&r_com)
            + vel.omega[i].cross(&vel.omega[i].cross(&r_com));
    }

    BodyAccelerations {
        alpha,
        a_com,
        a_origin,
    }
}

/// `Jdot * qd` terms of a body point: linear and angular acceleration of
/// the point under zero generalized acceleration.
pub fn point_acceleration_bias<T: Real>(
    model: &RobotModel<T>,
    kin: &Kinematics<T>,
    state: &RobotState<T>,
    vel: &BodyVelocities<T>,
    body_index: usize,
    point_in_body: &Vector3<T>,
) -> (Vector3<T>, Vector3<T>) {
    let zero = DVector::zeros(model.nq());
    let acc = body_accelerations(model, kin, state, vel, &zero);
    let frame = &kin.frames[body_index];
    let r = kin.point_world(body_index, point_in_body) - frame.joint_origin_world;
    let lin = acc.a_origin[body_index]
        + acc.alpha[body_index].cross(&r)
        + vel.omega[body_index].cross(&vel.omega[body_index].cross(&r));
    (lin, acc.alpha[body_index])
}
