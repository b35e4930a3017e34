//! Generalized positions and velocities.

use nalgebra::{DVector, Rotation3, Vector3};
use thiserror::Error;

use crate::math::{pitch_singularity_margin, rotation_zyx};
use crate::rigidbody::model::RobotModel;
use crate::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct RobotState<T: Real> {
    /// `[base position (3), base angles (3), joint angles]` in m / rad.
    pub q: DVector<T>,
    /// `[base velocity (3), base angle rates (3), joint rates]`.
    pub qd: DVector<T>,
}

#[derive(Debug, Error)]
pub enum StateError {
    #[error("state dimension mismatch: model has {expected} coordinates, state has {got}")]
    Dimension { expected: usize, got: usize },
    #[error("state contains a non-finite entry at index {0}")]
    NonFinite(usize),
    #[error("base pitch within {margin_deg:.2} deg of the representation singularity")]
    NearSingularity { margin_deg: f64 },
}

impl<T: Real> RobotState<T> {
    pub fn zero(model: &RobotModel<T>) -> Self {
        RobotState {
            q: DVector::zeros(model.nq()),
            qd: DVector::zeros(model.nq()),
        }
    }

    pub fn nq(&self) -> usize {
        self.q.len()
    }

    pub fn base_position(&self) -> Vector3<T> {
        Vector3::new(self.q[0], self.q[1], self.q[2])
    }

    pub fn base_angles(&self) -> Vector3<T> {
        Vector3::new(self.q[3], self.q[4], self.q[5])
    }

    pub fn base_rotation(&self) -> Rotation3<T> {
        rotation_zyx(&self.base_angles())
    }

    pub fn base_velocity(&self) -> Vector3<T> {
        Vector3::new(self.qd[0], self.qd[1], self.qd[2])
    }

    pub fn base_angle_rates(&self) -> Vector3<T> {
        Vector3::new(self.qd[3], self.qd[4], self.qd[5])
    }

    /// Checks dimensions and finiteness against a model.
    pub fn validate(&self, model: &RobotModel<T>) -> Result<(), StateError> {
        if self.q.len() != model.nq() || self.qd.len() != model.nq() {
            return Err(StateError::Dimension {
                expected: model.nq(),
                got: self.q.len().max(self.qd.len()),
            });
        }
        for (i, v) in self.q.iter().chain(self.qd.iter()).enumerate() {
            if !v.is_finite() {
                return Err(StateError::NonFinite(i % self.q.len()));
            }
        }
        Ok(())
    }

    /// Additionally rejects states inside the planning singular band
    /// (base pitch within `margin` radians of +-90 deg).
    pub fn validate_for_planning(
        &self,
        model: &RobotModel<T>,
        margin: T,
    ) -> Result<(), StateError> {
        self.validate(model)?;
        if pitch_singularity_margin(&self.base_angles()) < margin {
            return Err(StateError::NearSingularity {
                margin_deg: margin.as_f64().to_degrees(),
            });
        }
        Ok(())
    }
}
