//! Shared small-matrix helpers: Euler-angle rate maps, skew matrices,
//! symmetric-tensor vectorization, and SVD utilities.
//!
//! Base orientation convention used across the crate: the three angles
//! `(rx, ry, rz)` compose as `R = Rz(rz) * Ry(ry) * Rx(rx)` and are stored
//! unbounded (no wrapping), so multi-turn rotations accumulate
//! monotonically. The rate map `E` relates angle rates to the world-frame
//! angular velocity, `omega = E * zeta_dot`; it is singular at
//! `ry = +-90 deg` (determinant `cos(ry)`).

use nalgebra::{DMatrix, Matrix3, Rotation3, Vector3, Vector6};

use crate::Real;

/// Skew-symmetric cross-product matrix: `skew(a) * b == a.cross(&b)`.
pub fn skew<T: Real>(v: &Vector3<T>) -> Matrix3<T> {
    Matrix3::new(
        T::zero(),
        -v.z,
        v.y,
        v.z,
        T::zero(),
        -v.x,
        -v.y,
        v.x,
        T::zero(),
    )
}

/// Rotation matrix for angles `(rx, ry, rz)`: `Rz(rz) * Ry(ry) * Rx(rx)`.
pub fn rotation_zyx<T: Real>(angles: &Vector3<T>) -> Rotation3<T> {
    Rotation3::from_euler_angles(angles.x, angles.y, angles.z)
}

/// Extracts `(rx, ry, rz)` from a rotation, in `(-pi, pi]` ranges.
pub fn angles_zyx<T: Real>(rot: &Rotation3<T>) -> Vector3<T> {
    let (rx, ry, rz) = rot.euler_angles();
    Vector3::new(rx, ry, rz)
}

/// Angle-rate map `E` with `omega_world = E * zeta_dot`.
///
/// Columns: `E = [Rz*Ry*ex | Rz*ey | ez]`.
pub fn euler_rate_map<T: Real>(angles: &Vector3<T>) -> Matrix3<T> {
    let (sy, cy) = angles.y.sin_cos();
    let (sz, cz) = angles.z.sin_cos();
    Matrix3::new(
        cz * cy,
        -sz,
        T::zero(),
        sz * cy,
        cz,
        T::zero(),
        -sy,
        T::zero(),
        T::one(),
    )
}

/// Time derivative of [`euler_rate_map`] along `rates`.
pub fn euler_rate_map_dot<T: Real>(angles: &Vector3<T>, rates: &Vector3<T>) -> Matrix3<T> {
    let (sy, cy) = angles.y.sin_cos();
    let (sz, cz) = angles.z.sin_cos();
    let ry_dot = rates.y;
    let rz_dot = rates.z;
    // d/dt [Rz*Ry*ex] = rz_dot ez x (Rz*Ry*ex) + ry_dot Rz (ey x Ry*ex)
    let col0 = Vector3::new(
        -rz_dot * sz * cy - ry_dot * cz * sy,
        rz_dot * cz * cy - ry_dot * sz * sy,
        -ry_dot * cy,
    );
    // d/dt [Rz*ey] = rz_dot ez x (Rz*ey)
    let col1 = Vector3::new(-rz_dot * cz, -rz_dot * sz, T::zero());
    Matrix3::from_columns(&[col0, col1, Vector3::zeros()])
}

/// Margin to the `ry = +-90 deg` representation singularity, in radians.
pub fn pitch_singularity_margin<T: Real>(angles: &Vector3<T>) -> T {
    let half_pi = T::frac_pi_2();
    let pi = T::pi();
    // distance of ry to the nearest odd multiple of pi/2
    let folded = (angles.y - half_pi) % pi;
    let folded = if folded < T::zero() { folded + pi } else { folded };
    folded.min(pi - folded)
}

/// Upper-triangular 6-vector of a symmetric 3x3 tensor: (xx, xy, xz, yy, yz, zz).
pub fn sym_to_vec6<T: Real>(m: &Matrix3<T>) -> Vector6<T> {
    Vector6::new(
        m[(0, 0)],
        m[(0, 1)],
        m[(0, 2)],
        m[(1, 1)],
        m[(1, 2)],
        m[(2, 2)],
    )
}

/// Inverse of [`sym_to_vec6`].
pub fn vec6_to_sym<T: Real>(v: &Vector6<T>) -> Matrix3<T> {
    Matrix3::new(v[0], v[1], v[2], v[1], v[3], v[4], v[2], v[4], v[5])
}

/// Moore-Penrose pseudo-inverse with a relative singular-value cutoff
/// `sigma_tol = rel_tol * sigma_max`.
pub fn pseudo_inverse<T: Real>(a: &DMatrix<T>, rel_tol: T) -> DMatrix<T> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return DMatrix::zeros(a.ncols(), a.nrows());
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("svd u");
    let vt = svd.v_t.as_ref().expect("svd v_t");
    let smax = svd.singular_values.max();
    let cut = rel_tol * smax;
    let mut out = DMatrix::zeros(a.ncols(), a.nrows());
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cut && s > T::zero() {
            let vi = vt.row(i).transpose();
            let ui = u.column(i);
            out += (vi * ui.transpose()) / s;
        }
    }
    out
}

/// Rows of `a` compressed to an orthonormal basis of its row-image:
/// returns `(u_r, reduced)` where `reduced = u_r^T * a` has full row rank
/// and `u_r` holds the kept left singular vectors as columns.
///
/// Singular directions with `sigma <= rel_tol * sigma_max` are dropped.
/// An empty pair is returned when `a` is numerically zero.
pub fn row_space_reduce<T: Real>(a: &DMatrix<T>, rel_tol: T) -> (DMatrix<T>, DMatrix<T>) {
    row_space_reduce_with_floor(a, rel_tol, T::zero())
}

/// [`row_space_reduce`] with an additional absolute singular-value floor,
/// for callers that know the natural scale of `a` before projections
/// shrank it (a projected Jacobian that is numerically zero must reduce
/// to an empty row space, not to noise directions).
pub fn row_space_reduce_with_floor<T: Real>(
    a: &DMatrix<T>,
    rel_tol: T,
    floor: T,
) -> (DMatrix<T>, DMatrix<T>) {
    if a.nrows() == 0 {
        return (DMatrix::zeros(0, 0), DMatrix::zeros(0, a.ncols()));
    }
    let svd = a.clone().svd(true, false);
    let u = svd.u.as_ref().expect("svd u");
    let smax = svd.singular_values.max();
    let cut = (rel_tol * smax).max(floor);
    let kept: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > cut && s > T::zero())
        .map(|(i, _)| i)
        .collect();
    let mut u_r = DMatrix::zeros(a.nrows(), kept.len());
    for (j, &i) in kept.iter().enumerate() {
        u_r.set_column(j, &u.column(i));
    }
    let reduced = u_r.transpose() * a;
    (u_r, reduced)
}
