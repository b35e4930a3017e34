//! Planning and whole-body control for dynamic jumping maneuvers of
//! articulated rigid-body robots, closed in a built-in physics harness.
//!
//! The stack plans over an aggregate model of the robot (total mass,
//! center of mass, angular momentum, and a shapeable centroidal inertia)
//! and executes the plans with an operational-space whole-body controller
//! layered as constraints > task > posture. Three phase programs (launch,
//! flight, landing) are transcribed into dense optimization problems and
//! solved by the in-repo interior-point / SQP solvers.
//!
//! All core math is generic over the scalar type; concrete `f64` aliases
//! for the common entry points live at the crate root.

pub mod ballistics;
pub mod centroidal;
pub mod constraintmap;
pub mod math;
pub mod opspace;
pub mod phases;
pub mod rigidbody;
pub mod sim;
pub mod trajopt;

/// Scalar type for all core math; implemented by `f32` and `f64`.
pub trait Real: nalgebra::RealField + num_traits::ToPrimitive + Copy {
    /// Lossy conversion for diagnostics, telemetry, and reports.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}
impl<T: nalgebra::RealField + num_traits::ToPrimitive + Copy> Real for T {}

pub type Model = rigidbody::RobotModel<f64>;
pub type State = rigidbody::RobotState<f64>;
pub type Kinematics = rigidbody::Kinematics<f64>;

