//! Exact articulated dynamics: composite-rigid-body mass matrix,
//! recursive Newton-Euler inverse dynamics, and the derived bias /
//! gravity vectors.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use crate::math::skew;
use crate::rigidbody::kinematics::{body_accelerations, body_velocities, Kinematics};
use crate::rigidbody::model::RobotModel;
use crate::rigidbody::state::RobotState;
use crate::Real;

/// World-frame rotational inertia of body `i` about its COM.
fn world_inertia<T: Real>(model: &RobotModel<T>, kin: &Kinematics<T>, i: usize) -> Matrix3<T> {
    let r = kin.body_rotation(i);
    r * model.body(i).inertia_com * r.transpose()
}

/// Inverse dynamics: generalized forces realizing `qdd` at the current
/// state under `gravity`, i.e. `M qdd + b + g`.
pub fn inverse_dynamics<T: Real>(
    model: &RobotModel<T>,
    kin: &Kinematics<T>,
    state: &RobotState<T>,
    qdd: &DVector<T>,
    gravity: &Vector3<T>,
) -> DVector<T> {
    let n = model.n_bodies();
    let vel = body_velocities(model, kin, state);
    let acc = body_accelerations(model, kin, state, &vel, qdd);

    // Net wrench each body must receive (force + moment about its COM).
    let mut force: Vec<Vector3<T>> = Vec::with_capacity(n);
    let mut moment: Vec<Vector3<T>> = Vec::with_capacity(n);
    for i in 0..n {
        let body = model.body(i);
        let inertia_w = world_inertia(model, kin, i);
        force.push((acc.a_com[i] - gravity) * body.mass);
        moment.push(inertia_w * acc.alpha[i] + vel.omega[i].cross(&(inertia_w * vel.omega[i])));
    }

    // Accumulate child wrenches into parents; moments are carried about
    // each body's joint anchor.
    let mut f_acc = force.clone();
    let mut n_acc: Vec<Vector3<T>> = (0..n)
        .map(|i| {
            moment[i]
                + (kin.frames[i].com_world - kin.frames[i].joint_origin_world).cross(&force[i])
        })
        .collect();
    for i in (1..n).rev() {
        let p = model.body(i).parent;
        let shift = kin.frames[i].joint_origin_world - kin.frames[p].joint_origin_world;
        let (fi, ni) = (f_acc[i], n_acc[i]);
        f_acc[p] += fi;
        n_acc[p] += ni + shift.cross(&fi);
    }

    let mut tau = DVector::zeros(model.nq());
    tau.fixed_rows_mut::<3>(0).copy_from(&f_acc[0]);
    tau.fixed_rows_mut::<3>(3)
        .copy_from(&(kin.euler_map.transpose() * n_acc[0]));
    for i in 1..n {
        tau[model.joint_coord(i)] = kin.frames[i].joint_axis_world.dot(&n_acc[i]);
    }
    tau
}

/// Velocity-product and gravity terms `(b, g)` with
/// `inverse_dynamics = M qdd + b + g`.
pub fn bias_and_gravity<T: Real>(
    model: &RobotModel<T>,
    kin: &Kinematics<T>,
    state: &RobotState<T>,
    gravity: &Vector3<T>,
) -> (DVector<T>, DVector<T>) {
    let zero_qdd = DVector::zeros(model.nq());
    let b = inverse_dynamics(model, kin, state, &zero_qdd, &Vector3::zeros());
    let rest = RobotState {
        q: state.q.clone(),
        qd: DVector::zeros(model.nq()),
    };
    let g = inverse_dynamics(model, kin, &rest, &zero_qdd, gravity);
    (b, g)
}

/// Composite subtree inertia: mass, COM, and inertia about that COM in
/// the world frame.
struct Composite<T: Real> {
    mass: T,
    com: Vector3<T>,
    inertia: Matrix3<T>,
}

fn composites<T: Real>(model: &RobotModel<T>, kin: &Kinematics<T>) -> Vec<Composite<T>> {
    let n = model.n_bodies();
    let mut comp: Vec<Composite<T>> = (0..n)
        .map(|i| Composite {
            mass: model.body(i).mass,
            com: kin.frames[i].com_world,
            inertia: world_inertia(model, kin, i),
        })
        .collect();
    for i in (1..n).rev() {
        let p = model.body(i).parent;
        let m_sum = comp[p].mass + comp[i].mass;
        let com = (comp[p].com * comp[p].mass + comp[i].com * comp[i].mass) / m_sum;
        let shift = |c: &Composite<T>, new_com: &Vector3<T>| {
            let d = c.com - new_com;
            c.inertia + skew(&d) * skew(&d).transpose() * c.mass
        };
        comp[p] = Composite {
            inertia: shift(&comp[p], &com) + shift(&comp[i], &com),
            mass: m_sum,
            com,
        };
    }
    comp
}

/// Mass matrix by the composite-rigid-body recursion; symmetric by
/// construction.
pub fn mass_matrix<T: Real>(model: &RobotModel<T>, kin: &Kinematics<T>) -> DMatrix<T> {
    let nq = model.nq();
    let mut m = DMatrix::zeros(nq, nq);
    let comp = composites(model, kin);
    let e = kin.euler_map;
    let base_origin = kin.base_origin;

    // Base 6x6 block from the whole-robot composite about the base origin.
    let d = comp[0].com - base_origin;
    let m_tot = comp[0].mass;
    let i_origin = comp[0].inertia + skew(&d) * skew(&d).transpose() * m_tot;
    m.view_mut((0, 0), (3, 3))
        .copy_from(&(Matrix3::identity() * m_tot));
    let lin_ang = -skew(&d) * e * m_tot;
    m.view_mut((0, 3), (3, 3)).copy_from(&lin_ang);
    m.view_mut((3, 0), (3, 3)).copy_from(&lin_ang.transpose());
    m.view_mut((3, 3), (3, 3))
        .copy_from(&(e.transpose() * i_origin * e));

    // Hinge columns: unit acceleration of joint k sweeps its subtree.
    for k in 1..model.n_bodies() {
        let col = model.joint_coord(k);
        let frame = &kin.frames[k];
        let axis = frame.joint_axis_world;
        let arm = comp[k].com - frame.joint_origin_world;
        let force = axis.cross(&arm) * comp[k].mass;
        let moment = comp[k].inertia * axis + arm.cross(&force);

        m[(col, col)] = axis.dot(&moment);
        let mut b = model.body(k).parent;
        loop {
            if b == 0 {
                let shift = frame.joint_origin_world - base_origin;
                let n0 = moment + shift.cross(&force);
                let lin = force;
                let ang = e.transpose() * n0;
                for r in 0..3 {
                    m[(r, col)] = lin[r];
                    m[(col, r)] = lin[r];
                    m[(r + 3, col)] = ang[r];
                    m[(col, r + 3)] = ang[r];
                }
                break;
            }
            let bf = &kin.frames[b];
            let row = model.joint_coord(b);
            let shift = frame.joint_origin_world - bf.joint_origin_world;
            let val = bf.joint_axis_world.dot(&(moment + shift.cross(&force)));
            m[(row, col)] = val;
            m[(col, row)] = val;
            b = model.body(b).parent;
        }
    }
    m
}

/// Forward dynamics: `qdd = M^-1 (tau - b - g)` with `tau` the total
/// generalized force (actuation plus external contributions).
pub fn forward_dynamics<T: Real>(
    model: &RobotModel<T>,
    kin: &Kinematics<T>,
    state: &RobotState<T>,
    tau: &DVector<T>,
    gravity: &Vector3<T>,
) -> DVector<T> {
    let m = mass_matrix(model, kin);
    let (b, g) = bias_and_gravity(model, kin, state, gravity);
    let rhs = tau - b - g;
    m.cholesky()
        .expect("mass matrix must be positive definite")
        .solve(&rhs)
}
