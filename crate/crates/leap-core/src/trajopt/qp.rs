//! Sparse quadratic-program representation and the solver interface
//! contract. An external solver can replace the in-repo one by
//! implementing [`QpSolve`].

use crate::Real;

/// Triplet-form sparse matrix (duplicate entries accumulate).
#[derive(Clone, Debug)]
pub struct SparseMat<T: Real> {
    pub nrows: usize,
    pub ncols: usize,
    pub triplets: Vec<(usize, usize, T)>,
}

impl<T: Real> SparseMat<T> {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        SparseMat {
            nrows,
            ncols,
            triplets: Vec::new(),
        }
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, val: T) {
        debug_assert!(row < self.nrows && col < self.ncols);
        if val != T::zero() {
            self.triplets.push((row, col, val));
        }
    }

    pub fn mul_vec(&self, x: &[T], out: &mut [T]) {
        out.fill(T::zero());
        for &(r, c, v) in &self.triplets {
            out[r] += v * x[c];
        }
    }

    pub fn mul_transpose_vec(&self, x: &[T], out: &mut [T]) {
        out.fill(T::zero());
        for &(r, c, v) in &self.triplets {
            out[c] += v * x[r];
        }
    }

    /// Rows grouped for per-row products (built once, reused).
    pub fn row_groups(&self) -> Vec<Vec<(usize, T)>> {
        let mut rows = vec![Vec::new(); self.nrows];
        for &(r, c, v) in &self.triplets {
            rows[r].push((c, v));
        }
        rows
    }
}

/// `min 1/2 x^T Q x + c^T x` subject to `A x = b`, `G x <= h`.
///
/// `Q` holds the full symmetric matrix (both triangles or diagonal).
#[derive(Clone, Debug)]
pub struct QpProblem<T: Real> {
    pub q: SparseMat<T>,
    pub c: Vec<T>,
    pub a: SparseMat<T>,
    pub b: Vec<T>,
    pub g: SparseMat<T>,
    pub h: Vec<T>,
}

impl<T: Real> QpProblem<T> {
    pub fn new(n: usize, n_eq: usize, n_ineq: usize) -> Self {
        QpProblem {
            q: SparseMat::new(n, n),
            c: vec![T::zero(); n],
            a: SparseMat::new(n_eq, n),
            b: vec![T::zero(); n_eq],
            g: SparseMat::new(n_ineq, n),
            h: vec![T::zero(); n_ineq],
        }
    }

    pub fn n(&self) -> usize {
        self.q.ncols
    }

    pub fn objective(&self, x: &[T]) -> T {
        let mut qx = vec![T::zero(); self.n()];
        self.q.mul_vec(x, &mut qx);
        let half: T = nalgebra::convert(0.5_f64);
        let mut obj = T::zero();
        for i in 0..self.n() {
            obj += half * x[i] * qx[i] + self.c[i] * x[i];
        }
        obj
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    MaxIterations,
}

/// Outcome of one program solve.
#[derive(Clone, Debug)]
pub struct SolverReport {
    pub status: SolveStatus,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub complementarity: f64,
    pub objective: f64,
    pub wall_time_s: f64,
}

impl SolverReport {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

#[derive(Clone, Debug)]
pub struct QpOutcome<T: Real> {
    pub x: Vec<T>,
    /// Equality multipliers.
    pub y: Vec<T>,
    /// Inequality multipliers (nonnegative).
    pub z: Vec<T>,
    pub report: SolverReport,
}

/// Program-in, trajectories-out solver contract.
pub trait QpSolve<T: Real> {
    fn solve(&self, problem: &QpProblem<T>) -> QpOutcome<T>;
}
