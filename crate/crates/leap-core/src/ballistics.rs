//! Closed-form takeoff state from a desired landing displacement, and the
//! flight-time / orientation bookkeeping shared by the planner and the
//! phase machine.
//!
//! Sign conventions: `d_h` is the horizontal displacement along the
//! heading, `d_v` the vertical displacement measured upward. The
//! flight-time discriminant is `(v0 sin a)^2 - 2 g d_v` with this
//! convention; it selects the descending crossing of the target height.

use nalgebra::{Unit, Vector3};
use thiserror::Error;

use crate::Real;

#[derive(Debug, Error)]
pub enum BallisticsError {
    #[error(
        "target (d_h={d_h:.3}, d_v={d_v:.3}) unreachable at launch angle {alpha_deg:.1} deg; \
         feasible angles lie in ({lo_deg:.1}, 90) deg"
    )]
    UnreachableTarget {
        d_h: f64,
        d_v: f64,
        alpha_deg: f64,
        lo_deg: f64,
    },
    #[error("apex below target: (v0 sin a)^2 = {v_sq:.4} < 2 g d_v = {need:.4}")]
    ApexBelowTarget { v_sq: f64, need: f64 },
    #[error("takeoff speed must be positive")]
    NonPositiveSpeed,
}

/// Takeoff state solving the point-mass landing problem.
#[derive(Clone, Debug)]
pub struct BallisticTarget<T: Real> {
    pub d_h: T,
    pub d_v: T,
    pub alpha0: T,
    pub v0: T,
    pub t_flight: T,
    /// Unit horizontal direction of travel.
    pub heading: Unit<Vector3<T>>,
}

/// `v0 = sqrt(d_h^2 g / (d_h sin(2 a) - 2 d_v cos^2(a)))`.
pub fn takeoff_speed<T: Real>(d_h: T, d_v: T, alpha0: T, g: T) -> Result<T, BallisticsError> {
    let two = T::one() + T::one();
    let denom = d_h * (two * alpha0).sin() - two * d_v * alpha0.cos() * alpha0.cos();
    if denom <= T::zero() {
        return Err(BallisticsError::UnreachableTarget {
            d_h: d_h.as_f64(),
            d_v: d_v.as_f64(),
            alpha_deg: alpha0.as_f64().to_degrees(),
            lo_deg: d_v.as_f64().atan2(d_h.as_f64()).to_degrees(),
        });
    }
    Ok((d_h * d_h * g / denom).sqrt())
}

/// Time of the descending crossing of the target height `d_v` (up
/// positive): `t = (v0 sin a + sqrt((v0 sin a)^2 - 2 g d_v)) / g`.
pub fn flight_time<T: Real>(v0: T, alpha0: T, d_v: T, g: T) -> Result<T, BallisticsError> {
    if v0 <= T::zero() {
        return Err(BallisticsError::NonPositiveSpeed);
    }
    let two = T::one() + T::one();
    let v_z = v0 * alpha0.sin();
    let disc = v_z * v_z - two * g * d_v;
    if disc < T::zero() {
        return Err(BallisticsError::ApexBelowTarget {
            v_sq: (v_z * v_z).as_f64(),
            need: (two * g * d_v).as_f64(),
        });
    }
    Ok((v_z + disc.sqrt()) / g)
}

/// Planner boundary value for the flight program: accumulated angles at
/// touchdown are the takeoff angles plus the (unbounded) rotation goal.
pub fn touchdown_orientation_target<T: Real>(
    zeta_takeoff: &Vector3<T>,
    rotation_goal: &Vector3<T>,
) -> Vector3<T> {
    zeta_takeoff + rotation_goal
}

impl<T: Real> BallisticTarget<T> {
    /// Solves the takeoff state for a displacement target. `d_h` below
    /// `1 mm` is treated as a vertical jump: the launch angle becomes 90
    /// degrees and `apex_rise` (height gained above the higher of start
    /// and target) sets the speed.
    pub fn solve(
        d_h: T,
        d_v: T,
        heading: Unit<Vector3<T>>,
        alpha0: Option<T>,
        apex_rise: T,
        g: T,
    ) -> Result<Self, BallisticsError> {
        let two = T::one() + T::one();
        let eps: T = nalgebra::convert(1e-3_f64);
        if d_h <= eps {
            let apex = d_v.max(T::zero()) + apex_rise;
            let v0 = (two * g * apex).sqrt();
            let alpha = T::frac_pi_2();
            let t_flight = flight_time(v0, alpha, d_v, g)?;
            return Ok(BallisticTarget {
                d_h,
                d_v,
                alpha0: alpha,
                v0,
                t_flight,
                heading,
            });
        }
        let alpha = alpha0.unwrap_or_else(|| default_launch_angle(d_h, d_v));
        let v0 = takeoff_speed(d_h, d_v, alpha, g)?;
        let t_flight = flight_time(v0, alpha, d_v, g)?;
        Ok(BallisticTarget {
            d_h,
            d_v,
            alpha0: alpha,
            v0,
            t_flight,
            heading,
        })
    }

    /// World takeoff velocity vector.
    pub fn takeoff_velocity(&self) -> Vector3<T> {
        self.heading.into_inner() * self.v0 * self.alpha0.cos()
            + Vector3::z() * self.v0 * self.alpha0.sin()
    }
}

/// Launch-angle heuristic: half the line-of-sight elevation above a 55
/// degree base, clipped to [50, 75] degrees. Keeps the contact-force and
/// CoP constraints of the launch program comfortably feasible on the
/// reference robots.
pub fn default_launch_angle<T: Real>(d_h: T, d_v: T) -> T {
    let los = d_v.as_f64().atan2(d_h.as_f64().max(1e-6));
    let alpha = 55.0_f64.to_radians() + 0.5 * los;
    nalgebra::convert(alpha.clamp(50.0_f64.to_radians(), 75.0_f64.to_radians()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const G: f64 = 9.81;

    /// Point-mass oracle: RK4 integration of the ballistic flight (exact
    /// for polynomial dynamics) sampled at a candidate flight time.
    fn integrate_point_mass(v0: f64, alpha: f64, t_end: f64) -> (f64, f64) {
        let mut y = 0.0;
        let mut z = 0.0;
        let mut vy = v0 * alpha.cos();
        let mut vz = v0 * alpha.sin();
        let n = 2000;
        let dt = t_end / n as f64;
        for _ in 0..n {
            let (k1y, k1z) = (vy, vz);
            let (k2y, k2z) = (vy, vz - 0.5 * dt * G);
            let (k3y, k3z) = (vy, vz - 0.5 * dt * G);
            let (k4y, k4z) = (vy, vz - dt * G);
            y += dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
            z += dt / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z);
            vz -= dt * G;
        }
        (y, z)
    }

    #[test]
    fn flat_ground_forty_five_degrees() {
        let v0 = takeoff_speed(1.0, 0.0, 45.0_f64.to_radians(), G).unwrap();
        assert_relative_eq!(v0, G.sqrt(), epsilon = 1e-12);
        let t = flight_time(v0, 45.0_f64.to_radians(), 0.0, G).unwrap();
        assert_relative_eq!(
            t,
            2.0 * v0 * 45.0_f64.to_radians().sin() / G,
            epsilon = 1e-12
        );
        assert_relative_eq!(t, 0.4515, epsilon = 1e-4);
    }

    #[test]
    fn takeoff_speed_matches_shooting_oracle() {
        // Bisection on a point-mass shot: find v such that the descending
        // crossing of z = d_v happens exactly at horizontal d_h.
        let (d_h, d_v, alpha) = (1.0, 0.3, 70.0_f64.to_radians());
        let overshoot = |v: f64| -> f64 {
            let vz = v * alpha.sin();
            let mut t_hi = 2.0 * vz / G + 1.0;
            let mut t_lo = vz / G; // apex
            for _ in 0..200 {
                let t = 0.5 * (t_lo + t_hi);
                let z = vz * t - 0.5 * G * t * t;
                if z > d_v {
                    t_lo = t;
                } else {
                    t_hi = t;
                }
            }
            v * alpha.cos() * 0.5 * (t_lo + t_hi) - d_h
        };
        let (mut lo, mut hi) = (0.5, 50.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if overshoot(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let v_oracle = 0.5 * (lo + hi);
        let v_formula = takeoff_speed(d_h, d_v, alpha, G).unwrap();
        assert_relative_eq!(v_formula, v_oracle, epsilon = 1e-9);
    }

    #[test]
    fn infeasible_angle_is_rejected_with_interval() {
        let los = (0.5_f64).atan2(1.0);
        let err = takeoff_speed(1.0, 0.5, los, G).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("unreachable"), "{msg}");
        assert!(takeoff_speed(1.0, 0.5, los - 0.1, G).is_err());
        assert!(takeoff_speed(1.0, 0.5, los + 0.2, G).is_ok());
    }

    #[test]
    fn pure_vertical_flight_time() {
        let v0 = 2.4;
        let t = flight_time(v0, 90.0_f64.to_radians(), 0.0, G).unwrap();
        assert_relative_eq!(t, 2.0 * v0 / G, epsilon = 1e-12);
    }

    #[test]
    fn apex_below_target_is_reported() {
        let err = flight_time(1.0, 45.0_f64.to_radians(), 2.0, G).unwrap_err();
        assert!(matches!(err, BallisticsError::ApexBelowTarget { .. }));
    }

    #[test]
    fn round_trip_lands_on_target() {
        for d_h in [0.3, 0.8, 1.4, 2.0] {
            for d_v in [-0.4, -0.1, 0.0, 0.2, 0.5] {
                let target = BallisticTarget::<f64>::solve(
                    d_h,
                    d_v,
                    Unit::new_normalize(Vector3::y()),
                    None,
                    0.3,
                    G,
                )
                .unwrap();
                let (y, z) = integrate_point_mass(target.v0, target.alpha0, target.t_flight);
                let err = ((y - d_h).powi(2) + (z - d_v).powi(2)).sqrt();
                assert!(err < 1e-9, "landing error {err:.2e} for d_h={d_h} d_v={d_v}");
            }
        }
    }

    #[test]
    fn vertical_jump_special_case() {
        let target = BallisticTarget::<f64>::solve(
            0.0,
            0.0,
            Unit::new_normalize(Vector3::y()),
            None,
            0.3,
            G,
        )
        .unwrap();
        assert_relative_eq!(target.v0, (2.0 * G * 0.3).sqrt(), epsilon = 1e-12);
        let v = target.takeoff_velocity();
        assert!(v.x.abs() < 1e-12 && v.y.abs() < 1e-12);
        assert_relative_eq!(v.z, target.v0, epsilon = 1e-12);
    }

    #[test]
    fn speed_monotone_in_horizontal_distance() {
        let alpha = 60.0_f64.to_radians();
        let mut last = 0.0;
        for i in 1..20 {
            let d_h = 0.2 * i as f64;
            let v = takeoff_speed(d_h, 0.0, alpha, G).unwrap();
            assert!(v > last);
            last = v;
        }
    }

    #[test]
    fn orientation_targets_accumulate() {
        let takeoff = Vector3::new(0.1, 0.0, -0.2);
        let two_pi = 2.0 * std::f64::consts::PI;
        let flip = touchdown_orientation_target(&takeoff, &Vector3::new(two_pi, 0.0, 0.0));
        assert_relative_eq!(flip.x, 0.1 + two_pi, epsilon = 1e-15);
        let twist =
            touchdown_orientation_target(&takeoff, &Vector3::new(0.0, 0.0, std::f64::consts::PI));
        assert_relative_eq!(twist.z, -0.2 + std::f64::consts::PI, epsilon = 1e-15);
        let none = touchdown_orientation_target(&takeoff, &Vector3::zeros());
        assert_relative_eq!(none, takeoff, epsilon = 0.0);
    }
}
