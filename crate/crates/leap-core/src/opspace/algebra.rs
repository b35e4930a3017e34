//! Task-space dynamics, dynamically consistent inverses, null-space
//! projections, and the SVD reduction to task-consistent subspaces.

use nalgebra::{DMatrix, DVector};

use crate::math::{pseudo_inverse, row_space_reduce};
use crate::Real;

/// Default relative singular-value cutoff for all rank decisions.
pub fn default_sigma_tol<T: Real>() -> T {
    nalgebra::convert(1e-8_f64)
}

/// Task-space inertia and the dynamically consistent generalized inverse.
#[derive(Clone, Debug)]
pub struct TaskSpace<T: Real> {
    /// `(J M^-1 J^T)^+`, the task-space kinetic energy matrix.
    pub lambda: DMatrix<T>,
    /// `M^-1 J^T Lambda`; null-space motion through it produces no task
    /// acceleration.
    pub jbar: DMatrix<T>,
}

/// `Lambda = (J W J^T)^+` and `Jbar = W J^T Lambda` for a weighting `W`
/// (the inverse mass matrix, or its support-consistent form).
pub fn weighted_task_space<T: Real>(
    weight: &DMatrix<T>,
    jacobian: &DMatrix<T>,
    sigma_tol: T,
) -> TaskSpace<T> {
    let lambda_inv = jacobian * weight * jacobian.transpose();
    let lambda = pseudo_inverse(&lambda_inv, sigma_tol);
    let jbar = weight * jacobian.transpose() * &lambda;
    TaskSpace { lambda, jbar }
}

/// Task-space dynamics with the plain inverse-mass weighting.
pub fn task_space_dynamics<T: Real>(
    mass_inv: &DMatrix<T>,
    jacobian: &DMatrix<T>,
    sigma_tol: T,
) -> TaskSpace<T> {
    weighted_task_space(mass_inv, jacobian, sigma_tol)
}

/// Velocity-product and gravity terms of a task:
/// `mu = Jbar^T b - Lambda Jdot_qd`, `p = Jbar^T g`.
pub fn task_bias_terms<T: Real>(
    ts: &TaskSpace<T>,
    bias: &DVector<T>,
    gravity: &DVector<T>,
    jdot_qd: &DVector<T>,
) -> (DVector<T>, DVector<T>) {
    let mu = ts.jbar.transpose() * bias - &ts.lambda * jdot_qd;
    let p = ts.jbar.transpose() * gravity;
    (mu, p)
}

/// `F_t = Lambda F* + mu + p`.
pub fn task_force<T: Real>(
    lambda: &DMatrix<T>,
    mu: &DVector<T>,
    p: &DVector<T>,
    f_star: &DVector<T>,
) -> DVector<T> {
    lambda * f_star + mu + p
}

/// Support-consistent projection data for a support Jacobian `J_s`.
#[derive(Clone, Debug)]
pub struct Support<T: Real> {
    pub n_s: DMatrix<T>,
    pub lambda_s: DMatrix<T>,
    pub jbar_s: DMatrix<T>,
}

/// `N_s = I - Jbar_s J_s` with the dynamically consistent inverse; for an
/// empty `J_s` the projection is the identity.
pub fn support_projection<T: Real>(
    mass_inv: &DMatrix<T>,
    j_s: &DMatrix<T>,
    sigma_tol: T,
) -> Support<T> {
    let n = mass_inv.nrows();
    if j_s.nrows() == 0 {
        return Support {
            n_s: DMatrix::identity(n, n),
            lambda_s: DMatrix::zeros(0, 0),
            jbar_s: DMatrix::zeros(n, 0),
        };
    }
    let ts = weighted_task_space(mass_inv, j_s, sigma_tol);
    Support {
        n_s: DMatrix::identity(n, n) - &ts.jbar * j_s,
        lambda_s: ts.lambda,
        jbar_s: ts.jbar,
    }
}

/// Task-consistent posture Jacobian: the rows of `J_p N_t` compressed to
/// the directions that survive the higher-priority projection. Returns
/// `(J_p_given_t, U_p_given_t)`; both are empty when the posture space is
/// fully consumed.
pub fn consistent_posture_jacobian<T: Real>(
    j_p: &DMatrix<T>,
    n_t: &DMatrix<T>,
    sigma_tol: T,
) -> (DMatrix<T>, DMatrix<T>) {
    let (u_r, reduced) = row_space_reduce(&(j_p * n_t), sigma_tol);
    (reduced, u_r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn random_spd(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        &a * a.transpose() + DMatrix::identity(n, n) * 0.5
    }

    #[test]
    fn identity_task_recovers_mass_matrix() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let m = random_spd(5, &mut rng);
        let m_inv = m.clone().try_inverse().unwrap();
        let j = DMatrix::identity(5, 5);
        let ts = task_space_dynamics(&m_inv, &j, 1e-8);
        assert_relative_eq!(ts.lambda, m, epsilon = 1e-9);
        assert_relative_eq!(ts.jbar, DMatrix::identity(5, 5), epsilon = 1e-9);
    }

    #[test]
    fn single_row_task_reduces_to_scalar() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let m = random_spd(4, &mut rng);
        let m_inv = m.clone().try_inverse().unwrap();
        let mut j = DMatrix::zeros(1, 4);
        j[(0, 2)] = 1.0;
        let ts = task_space_dynamics(&m_inv, &j, 1e-8);
        assert_relative_eq!(ts.lambda[(0, 0)], 1.0 / m_inv[(2, 2)], epsilon = 1e-12);
    }

    #[test]
    fn dynamic_consistency_and_idempotency() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let n = rng.gen_range(4..9);
            let r = rng.gen_range(1..4);
            let m = random_spd(n, &mut rng);
            let m_inv = m.clone().try_inverse().unwrap();
            let j = DMatrix::from_fn(r, n, |_, _| rng.gen_range(-1.0..1.0));
            let ts = task_space_dynamics(&m_inv, &j, 1e-8);
            // J Jbar = I on the row space
            assert_relative_eq!(&j * &ts.jbar, DMatrix::identity(r, r), epsilon = 1e-8);
            // N = I - Jbar J idempotent, and J N = 0
            let n_t = DMatrix::identity(n, n) - &ts.jbar * &j;
            assert!((&n_t * &n_t - &n_t).amax() < 1e-8);
            assert!((&j * &n_t).amax() < 1e-9);
        }
    }

    #[test]
    fn support_projection_identities() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let n = 8;
            let m = random_spd(n, &mut rng);
            let m_inv = m.clone().try_inverse().unwrap();
            let j_s = DMatrix::from_fn(3, n, |_, _| rng.gen_range(-1.0..1.0));
            let s = support_projection(&m_inv, &j_s, 1e-8);
            assert!((&j_s * &s.n_s).amax() < 1e-10, "J_s N_s must vanish");
            assert!((&s.n_s * &s.n_s - &s.n_s).amax() < 1e-8);
        }
        // empty support
        let s = support_projection(&DMatrix::identity(4, 4), &DMatrix::zeros(0, 4), 1e-8);
        assert_relative_eq!(s.n_s, DMatrix::identity(4, 4), epsilon = 0.0);
        // full-coordinate support consumes everything
        let full = support_projection(&DMatrix::identity(4, 4), &DMatrix::identity(4, 4), 1e-8);
        assert!(full.n_s.amax() < 1e-12);
    }

    #[test]
    fn posture_reduction_cases() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let n = 6;
        let j_p = DMatrix::from_fn(3, n, |_, _| rng.gen_range(-1.0..1.0));

        // N = I keeps the full row space
        let (reduced, u) = consistent_posture_jacobian(&j_p, &DMatrix::identity(n, n), 1e-8);
        assert_eq!(reduced.nrows(), 3);
        assert_relative_eq!(&u * &reduced, j_p, epsilon = 1e-10);

        // N = 0 consumes the posture completely
        let (reduced0, _) = consistent_posture_jacobian(&j_p, &DMatrix::zeros(n, n), 1e-8);
        assert_eq!(reduced0.nrows(), 0);

        // random case: task consistency J_p|t (I - N) = 0
        let m = random_spd(n, &mut rng);
        let m_inv = m.clone().try_inverse().unwrap();
        let j_t = DMatrix::from_fn(2, n, |_, _| rng.gen_range(-1.0..1.0));
        let ts = task_space_dynamics(&m_inv, &j_t, 1e-8);
        let n_t = DMatrix::identity(n, n) - &ts.jbar * &j_t;
        let (reduced_t, _) = consistent_posture_jacobian(&j_p, &n_t, 1e-8);
        let leak = &reduced_t * (DMatrix::identity(n, n) - &n_t);
        assert!(leak.amax() < 1e-8);
    }

    #[test]
    fn task_force_assembles_gravity_compensation() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        let n = 5;
        let m = random_spd(n, &mut rng);
        let m_inv = m.clone().try_inverse().unwrap();
        let j = DMatrix::identity(n, n);
        let ts = task_space_dynamics(&m_inv, &j, 1e-8);
        let g = DVector::from_fn(n, |i, _| 1.0 + i as f64);
        let zero = DVector::zeros(n);
        let (mu, p) = task_bias_terms(&ts, &zero, &g, &zero);
        assert!(mu.amax() < 1e-12, "no velocity terms at rest");
        let f = task_force(&ts.lambda, &mu, &p, &zero);
        // with F* = 0 the task force is pure gravity compensation
        assert_relative_eq!(f, g, epsilon = 1e-9);
    }
}
