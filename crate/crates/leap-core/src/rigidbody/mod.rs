//! Kinematic-tree model and exact articulated rigid-body quantities.

pub mod dynamics;
pub mod kinematics;
pub mod model;
pub mod state;

#[cfg(test)]
pub mod test_models;

pub use dynamics::{bias_and_gravity, forward_dynamics, inverse_dynamics, mass_matrix};
pub use kinematics::{
    body_accelerations, body_point_jacobian, body_velocities, forward_kinematics,
    point_jacobian_world, BodyAccelerations, BodyFrame, BodyVelocities, Kinematics, PointJacobian,
};
pub use model::{Body, CollisionPairs, JointKind, ModelError, RobotFile, RobotModel};
pub use state::{RobotState, StateError};

#[cfg(test)]
mod tests {
    use super::test_models::{random_state, single_body, two_link_arm};
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{DVector, Vector3};
    use rand::SeedableRng;

    #[test]
    fn zero_configuration_single_body_is_identity() {
        let model = single_body(1.0);
        let state = RobotState::zero(&model);
        let kin = forward_kinematics(&model, &state).unwrap();
        assert_relative_eq!(
            kin.frames[0].iso.translation.vector,
            Vector3::zeros(),
            epsilon = 1e-15
        );
        assert!(kin.frames[0].iso.rotation.angle() < 1e-15);
    }

    #[test]
    fn rigid_translation_moves_every_frame() {
        let model = two_link_arm();
        let mut state = RobotState::zero(&model);
        let kin0 = forward_kinematics(&model, &state).unwrap();
        state.q[0] = 1.0;
        state.q[1] = 2.0;
        state.q[2] = 3.0;
        let kin1 = forward_kinematics(&model, &state).unwrap();
        let shift = Vector3::new(1.0, 2.0, 3.0);
        for (f0, f1) in kin0.frames.iter().zip(kin1.frames.iter()) {
            assert_relative_eq!(
                f1.iso.translation.vector,
                f0.iso.translation.vector + shift,
                epsilon = 1e-14
            );
            assert_relative_eq!(f1.com_world, f0.com_world + shift, epsilon = 1e-14);
        }
    }

    #[test]
    fn two_link_chain_matches_hand_composed_transform() {
        // Chain along +z with a hinge about x: at 90 deg the tip moves into
        // the -y direction of the joint frame.
        let file = r#"{
            "name": "chain",
            "support_body": "base",
            "foot_corners": [[0, 0, 0]],
            "bodies": [
              { "name": "base", "joint": { "kind": "free" },
                "mass": 1.0, "inertia_com": [0.01, 0.01, 0.01] },
              { "name": "link", "parent": "base",
                "joint": { "kind": "hinge", "axis": [1, 0, 0], "limits_deg": [-180, 180] },
                "origin_in_parent": [0, 0, 1.0],
                "mass": 1.0, "inertia_com": [0.01, 0.01, 0.01],
                "com_offset": [0, 0, 1.0] }
            ]
        }"#;
        let model: RobotModel<f64> = RobotModel::from_json(file).unwrap();
        let mut state = RobotState::zero(&model);
        state.q[6] = std::f64::consts::FRAC_PI_2;
        let kin = forward_kinematics(&model, &state).unwrap();
        // joint anchor at (0,0,1); com offset (0,0,1) rotated 90 deg about x -> (0,-1,0)
        assert_relative_eq!(
            kin.frames[1].com_world,
            Vector3::new(0.0, -1.0, 1.0),
            epsilon = 1e-12
        );
    }

    #[test]
    fn free_base_jacobian_blocks() {
        let model = single_body(2.0);
        let mut state = RobotState::zero(&model);
        state.q[3] = 0.4;
        state.q[4] = -0.2;
        state.q[5] = 0.9;
        let kin = forward_kinematics(&model, &state).unwrap();
        let jac = body_point_jacobian(&model, &kin, 0, &Vector3::zeros());
        // point at the base origin: linear block = [I | 0]
        for r in 0..3 {
            for c in 0..3 {
                let expect = if r == c { 1.0 } else { 0.0 };
                assert_relative_eq!(jac.linear[(r, c)], expect, epsilon = 1e-14);
                assert_relative_eq!(jac.linear[(r, c + 3)], 0.0, epsilon = 1e-14);
            }
        }
        // angular block equals the rate map
        let e = crate::math::euler_rate_map(&state.base_angles());
        for r in 0..3 {
            for c in 0..3 {
                assert_relative_eq!(jac.angular[(r, c + 3)], e[(r, c)], epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn jacobians_match_finite_difference_flow() {
        let model = two_link_arm();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        for _ in 0..100 {
            let state = random_state(&model, &mut rng);
            let kin = forward_kinematics(&model, &state).unwrap();
            let point = Vector3::new(0.02, -0.01, -0.15);
            let body = 2;
            let jac = body_point_jacobian(&model, &kin, body, &point);
            let predicted = &jac.linear * &state.qd;
            let predicted_w = &jac.angular * &state.qd;

            let eps = 1e-7;
            let perturb = |sign: f64| {
                let s = RobotState {
                    q: &state.q + &state.qd * (sign * eps),
                    qd: DVector::zeros(model.nq()),
                };
                forward_kinematics(&model, &s).unwrap()
            };
            let (kp, km) = (perturb(1.0), perturb(-1.0));
            let fd = (kp.point_world(body, &point) - km.point_world(body, &point)) / (2.0 * eps);
            let scale = predicted.norm().max(1.0);
            assert!(
                (predicted - fd).norm() / scale < 1e-6,
                "linear Jacobian finite-difference mismatch"
            );

            let rdot = (kp.body_rotation(body) - km.body_rotation(body)) / (2.0 * eps);
            let w_hat = rdot * kin.body_rotation(body).transpose();
            let fd_w = Vector3::new(w_hat[(2, 1)], w_hat[(0, 2)], w_hat[(1, 0)]);
            let scale_w = predicted_w.norm().max(1.0);
            assert!(
                (predicted_w - fd_w).norm() / scale_w < 1e-6,
                "angular Jacobian finite-difference mismatch"
            );
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let model = two_link_arm();
        let state = RobotState {
            q: DVector::zeros(3),
            qd: DVector::zeros(3),
        };
        assert!(matches!(
            forward_kinematics(&model, &state),
            Err(StateError::Dimension { .. })
        ));
    }

    #[test]
    fn singular_pitch_rejected_for_planning() {
        let model = two_link_arm();
        let mut state = RobotState::zero(&model);
        state.q[4] = std::f64::consts::FRAC_PI_2 - 0.001;
        assert!(state
            .validate_for_planning(&model, 1.0_f64.to_radians())
            .is_err());
        state.q[4] = 0.3;
        assert!(state
            .validate_for_planning(&model, 1.0_f64.to_radians())
            .is_ok());
    }

    #[test]
    fn model_validation_catches_bad_files() {
        let bad_mass = r#"{
            "name": "bad", "support_body": "a", "foot_corners": [[0,0,0]],
            "bodies": [{ "name": "a", "joint": { "kind": "free" },
                         "mass": -1.0, "inertia_com": [0.1, 0.1, 0.1] }]
        }"#;
        assert!(RobotModel::<f64>::from_json(bad_mass).is_err());

        let bad_inertia = r#"{
            "name": "bad", "support_body": "a", "foot_corners": [[0,0,0]],
            "bodies": [{ "name": "a", "joint": { "kind": "free" },
                         "mass": 1.0, "inertia_com": [1.0, 0.1, 0.1] }]
        }"#;
        // violates the triangle inequality (1.0 > 0.1 + 0.1)
        assert!(RobotModel::<f64>::from_json(bad_inertia).is_err());

        let bad_limits = r#"{
            "name": "bad", "support_body": "a", "foot_corners": [[0,0,0]],
            "bodies": [
              { "name": "a", "joint": { "kind": "free" }, "mass": 1.0,
                "inertia_com": [0.1, 0.1, 0.1] },
              { "name": "b", "parent": "a",
                "joint": { "kind": "hinge", "axis": [1,0,0], "limits_deg": [30, -30] },
                "mass": 1.0, "inertia_com": [0.1, 0.1, 0.1] }
            ]
        }"#;
        assert!(RobotModel::<f64>::from_json(bad_limits).is_err());
    }

    #[test]
    fn actuated_coordinates_follow_declarations() {
        let model = two_link_arm();
        assert_eq!(model.actuated_coords(), &[6, 7]);
        assert_eq!(model.nq(), 8);
        assert_eq!(model.n_joints(), 2);
    }
}
