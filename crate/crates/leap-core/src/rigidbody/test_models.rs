//! Small hand-built robots for unit tests.

use nalgebra::DVector;
use rand::Rng;

use crate::rigidbody::model::RobotModel;
use crate::rigidbody::state::RobotState;

fn parse(json: &str) -> RobotModel<f64> {
    RobotModel::from_json(json).expect("test model must parse")
}

/// One floating cuboid body of the given mass.
pub fn single_body(mass: f64) -> RobotModel<f64> {
    parse(&format!(
        r#"{{
        "name": "single",
        "support_body": "root",
        "foot_corners": [[0.0, 0.0, -0.1]],
        "bodies": [
            {{ "name": "root", "joint": {{ "kind": "free" }},
               "mass": {mass}, "inertia_com": [0.02, 0.03, 0.04],
               "com_offset": [0.0, 0.0, 0.0] }}
        ]
    }}"#
    ))
}

/// Floating 0.1 kg carrier with a hinged point mass `m` at distance `l`
/// (hinge about x at the carrier origin, bob hanging along -z at q = 0).
pub fn pendulum(mass: f64, length: f64) -> (RobotModel<f64>, f64) {
    let model = parse(&format!(
        r#"{{
        "name": "pendulum",
        "support_body": "base",
        "foot_corners": [[0.0, 0.0, 0.0]],
        "bodies": [
            {{ "name": "base", "joint": {{ "kind": "free" }},
               "mass": 0.1, "inertia_com": [1e-3, 1e-3, 1e-3] }},
            {{ "name": "bob", "parent": "base",
               "joint": {{ "kind": "hinge", "axis": [1, 0, 0], "limits_deg": [-720, 720] }},
               "origin_in_parent": [0, 0, 0],
               "mass": {mass}, "inertia_com": [1e-9, 1e-9, 1e-9],
               "com_offset": [0.0, 0.0, -{length}] }}
        ]
    }}"#
    ));
    (model, length)
}

/// Floating torso with two hinged links about different axes; inertias
/// and offsets chosen to be fully three-dimensional.
pub fn two_link_arm() -> RobotModel<f64> {
    parse(
        r#"{
        "name": "two_link",
        "support_body": "torso",
        "foot_corners": [[0.05, 0.05, -0.2], [-0.05, 0.05, -0.2], [0.05, -0.05, -0.2], [-0.05, -0.05, -0.2]],
        "bodies": [
            { "name": "torso", "joint": { "kind": "free" },
              "mass": 6.0, "inertia_com": [0.11, 0.09, 0.06, 0.004, -0.002, 0.003],
              "com_offset": [0.01, -0.02, 0.05],
              "collision": [{ "name": "torso_cap", "kind": "capsule",
                              "a": [0, 0, -0.15], "b": [0, 0, 0.15], "radius": 0.1 }] },
            { "name": "upper", "parent": "torso",
              "joint": { "kind": "hinge", "axis": [1, 0, 0], "limits_deg": [-170, 170] },
              "origin_in_parent": [0.0, 0.12, -0.05],
              "rpy_in_parent_deg": [10.0, 0.0, 25.0],
              "mass": 1.4, "inertia_com": [0.011, 0.012, 0.003],
              "com_offset": [0.0, 0.03, -0.14],
              "collision": [{ "name": "upper_cap", "kind": "capsule",
                              "a": [0, 0, 0], "b": [0, 0.05, -0.26], "radius": 0.045 }] },
            { "name": "lower", "parent": "upper",
              "joint": { "kind": "hinge", "axis": [0, 1, 0], "limits_deg": [-150, 150] },
              "origin_in_parent": [0.0, 0.05, -0.28],
              "mass": 0.9, "inertia_com": [0.006, 0.002, 0.006],
              "com_offset": [0.0, 0.0, -0.11],
              "collision": [{ "name": "lower_cap", "kind": "capsule",
                              "a": [0, 0, 0], "b": [0, 0, -0.22], "radius": 0.04 }] }
        ],
        "collision_pairs": {
            "self_pairs": [["lower_cap", "torso_cap"]],
            "environment_pairs": [["lower_cap", "floor"]]
        }
    }"#,
    )
}

/// Random state with joints inside their limits and the base pitch away
/// from the representation singularity.
pub fn random_state(model: &RobotModel<f64>, rng: &mut impl Rng) -> RobotState<f64> {
    let nq = model.nq();
    let mut q = DVector::zeros(nq);
    let mut qd = DVector::zeros(nq);
    for i in 0..3 {
        q[i] = rng.gen_range(-1.0..1.0);
    }
    q[3] = rng.gen_range(-2.0..2.0);
    q[4] = rng.gen_range(-1.0..1.0);
    q[5] = rng.gen_range(-2.0..2.0);
    for b in 1..model.n_bodies() {
        let coord = model.joint_coord(b);
        if let crate::rigidbody::model::JointKind::Hinge { limits, .. } = &model.body(b).joint {
            let lo = limits[0].max(-1.5);
            let hi = limits[1].min(1.5);
            q[coord] = rng.gen_range(lo..hi);
        }
    }
    for i in 0..nq {
        qd[i] = rng.gen_range(-1.0..1.0);
    }
    RobotState { q, qd }
}
