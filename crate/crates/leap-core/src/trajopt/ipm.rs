//! Dense-free primal-dual interior-point QP solver (Mehrotra
//! predictor-corrector). The reduced KKT system is regularized to a
//! quasi-definite form, reordered once with reverse Cuthill-McKee, and
//! factored as a banded LDL^T each iteration; iterative refinement
//! recovers the unregularized solution.

use std::time::Instant;

use crate::trajopt::banded::{bandwidth_under, reverse_cuthill_mckee, SymBanded};
use crate::trajopt::qp::{QpOutcome, QpProblem, QpSolve, SolveStatus, SolverReport};
use crate::Real;

#[derive(Clone, Debug)]
pub struct IpmOptions<T: Real> {
    pub max_iterations: usize,
    /// Scaled dual-residual and complementarity target.
    pub tolerance: T,
    /// Absolute equality-row target.
    pub equality_tolerance: T,
    /// Quasi-definite regularization added to the factorization only.
    pub regularization: T,
    pub refinement_steps: usize,
}

impl<T: Real> Default for IpmOptions<T> {
    fn default() -> Self {
        IpmOptions {
            max_iterations: 80,
            tolerance: nalgebra::convert(1e-9_f64),
            equality_tolerance: nalgebra::convert(1e-9_f64),
            regularization: nalgebra::convert(1e-6_f64),
            refinement_steps: 3,
        }
    }
}

/// In-repo interior-point solver.
#[derive(Clone, Debug, Default)]
pub struct InteriorPointSolver<T: Real> {
    pub options: IpmOptions<T>,
}

struct Kkt<T: Real> {
    dim: usize,
    perm: Vec<usize>,
    pos: Vec<usize>,
    band: SymBanded<T>,
}

impl<T: Real> Kkt<T> {
    /// Builds the ordering from the joint sparsity pattern of
    /// `[[Q + G^T W G, A^T], [A, -delta I]]`.
    fn plan(problem: &QpProblem<T>) -> Self {
        let n = problem.n();
        let me = problem.a.nrows;
        let dim = n + me;
        let mut pattern: Vec<(usize, usize)> = Vec::new();
        for &(i, j, _) in &problem.q.triplets {
            pattern.push((i, j));
        }
        for group in problem.g.row_groups() {
            for (idx_a, &(ca, _)) in group.iter().enumerate() {
                for &(cb, _) in group.iter().skip(idx_a) {
                    pattern.push((ca, cb));
                }
            }
        }
        for &(r, c, _) in &problem.a.triplets {
            pattern.push((n + r, c));
        }
        let perm = reverse_cuthill_mckee(dim, &pattern);
        let mut pos = vec![0usize; dim];
        for (new, &old) in perm.iter().enumerate() {
            pos[old] = new;
        }
        let bw = bandwidth_under(&perm, &pattern).max(1);
        Kkt {
            dim,
            perm,
            pos,
            band: SymBanded::zeros(dim, bw),
        }
    }

    /// Refills values for the current scaling `w = z / s` and factors.
    fn factor(
        &mut self,
        problem: &QpProblem<T>,
        g_rows: &[Vec<(usize, T)>],
        w: &[T],
        delta: T,
    ) -> Result<(), usize> {
        let n = problem.n();
        self.band.clear();
        // Q carries both triangles; keep one copy of each off-diagonal.
        for &(i, j, v) in &problem.q.triplets {
            if i == j || self.pos[i] > self.pos[j] {
                self.band.add(self.pos[i], self.pos[j], v);
            }
        }
        for (r, group) in g_rows.iter().enumerate() {
            let wi = w[r];
            for (idx_a, &(ca, va)) in group.iter().enumerate() {
                for &(cb, vb) in group.iter().skip(idx_a) {
                    let v = va * vb * wi;
                    if ca == cb {
                        self.band.add(self.pos[ca], self.pos[ca], v);
                    } else {
                        self.band.add(self.pos[ca], self.pos[cb], v);
                    }
                }
            }
        }
        for &(r, c, v) in &problem.a.triplets {
            self.band.add(self.pos[n + r], self.pos[c], v);
        }
        for i in 0..n {
            self.band.add(self.pos[i], self.pos[i], delta);
        }
        for r in 0..problem.a.nrows {
            self.band.add(self.pos[n + r], self.pos[n + r], -delta);
        }
        self.band.factor()
    }

    /// Solves the factored system and applies iterative refinement
    /// against the operator with regularization `delta` (pass zero to
    /// refine against the true KKT; inside the interior-point loop the
    /// regularized operator is used -- its proximal error contracts with
    /// the step size, while the true KKT may be singular along
    /// cost-indifferent directions).
    fn solve_refined(
        &self,
        problem: &QpProblem<T>,
        g_rows: &[Vec<(usize, T)>],
        w: &[T],
        rhs: &[T],
        steps: usize,
        delta: T,
    ) -> Vec<T> {
        let n = problem.n();
        let me = problem.a.nrows;
        let apply_true = |v: &[T], out: &mut [T]| {
            out.fill(T::zero());
            // (Q + G^T W G + delta I) x + A^T y ; A x - delta y
            for &(i, j, val) in &problem.q.triplets {
                out[i] += val * v[j];
            }
            for (r, group) in g_rows.iter().enumerate() {
                let mut gx = T::zero();
                for &(c, val) in group {
                    gx += val * v[c];
                }
                let scaled = w[r] * gx;
                for &(c, val) in group {
                    out[c] += val * scaled;
                }
            }
            for &(r, c, val) in &problem.a.triplets {
                out[c] += val * v[n + r];
                out[n + r] += val * v[c];
            }
            for i in 0..n {
                out[i] += delta * v[i];
            }
            for r in 0..me {
                out[n + r] -= delta * v[n + r];
            }
        };

        let solve_perm = |r: &[T]| -> Vec<T> {
            let mut tmp = vec![T::zero(); self.dim];
            for new in 0..self.dim {
                tmp[new] = r[self.perm[new]];
            }
            self.band.solve(&mut tmp);
            let mut out = vec![T::zero(); self.dim];
            for new in 0..self.dim {
                out[self.perm[new]] = tmp[new];
            }
            out
        };

        // Left-preconditioned GMRES on K0 d = rhs with the factored
        // regularized matrix as the preconditioner. The preconditioned
        // spectrum clusters at one with a few outliers along the
        // regularized directions, so a short Krylov loop solves to
        // machine precision where plain refinement would stagnate.
        let dim = self.dim;
        let dot = |a: &[T], b: &[T]| -> T {
            let mut acc = T::zero();
            for i in 0..dim {
                acc += a[i] * b[i];
            }
            acc
        };
        let norm = |a: &[T]| dot(a, a).sqrt();

        let mut x = solve_perm(rhs);
        let mut tmp = vec![T::zero(); dim];
        let max_kry = steps.max(2) * 8;
        for _outer in 0..2 {
            // r = M^-1 (rhs - K0 x)
            apply_true(&x, &mut tmp);
            for i in 0..dim {
                tmp[i] = rhs[i] - tmp[i];
            }
            let r0 = solve_perm(&tmp);
            let beta = norm(&r0);
            if beta <= nalgebra::convert::<f64, T>(1e-300_f64) {
                break;
            }
            let mut basis: Vec<Vec<T>> = vec![r0.iter().map(|&v| v / beta).collect()];
            let mut hess: Vec<Vec<T>> = Vec::new(); // hess[j][i]
            let mut g = vec![T::zero(); max_kry + 1];
            g[0] = beta;
            let mut cs: Vec<(T, T)> = Vec::new();
            let mut converged_cols = 0usize;
            for j in 0..max_kry {
                apply_true(&basis[j], &mut tmp);
                let mut w_vec = solve_perm(&tmp);
                let mut h_col = vec![T::zero(); j + 2];
                for (i, q) in basis.iter().enumerate() {
                    let hij = dot(&w_vec, q);
                    h_col[i] = hij;
                    for k in 0..dim {
                        w_vec[k] -= hij * q[k];
                    }
                }
                let h_next = norm(&w_vec);
                h_col[j + 1] = h_next;
                // apply stored Givens rotations
                for (i, &(c, sn)) in cs.iter().enumerate() {
                    let t0 = c * h_col[i] + sn * h_col[i + 1];
                    let t1 = -sn * h_col[i] + c * h_col[i + 1];
                    h_col[i] = t0;
                    h_col[i + 1] = t1;
                }
                let denom = (h_col[j] * h_col[j] + h_col[j + 1] * h_col[j + 1]).sqrt();
                let (c, sn) = if denom > T::zero() {
                    (h_col[j] / denom, h_col[j + 1] / denom)
                } else {
                    (T::one(), T::zero())
                };
                h_col[j] = denom;
                h_col[j + 1] = T::zero();
                let g_j = g[j];
                g[j] = c * g_j;
                g[j + 1] = -sn * g_j;
                cs.push((c, sn));
                hess.push(h_col);
                converged_cols = j + 1;
                if g[j + 1].abs() <= beta * nalgebra::convert(1e-14_f64)
                    || h_next <= nalgebra::convert(1e-300_f64)
                {
                    break;
                }
                if j + 1 < max_kry {
                    basis.push(w_vec.iter().map(|&v| v / h_next).collect());
                }
            }
            // back-substitution for the Krylov coefficients
            let m = converged_cols;
            let mut ys = vec![T::zero(); m];
            for i in (0..m).rev() {
                let mut acc = g[i];
                for j2 in (i + 1)..m {
                    acc -= hess[j2][i] * ys[j2];
                }
                ys[i] = acc / hess[i][i];
            }
            for (j2, coeff) in ys.iter().enumerate() {
                for k in 0..dim {
                    x[k] += *coeff * basis[j2][k];
                }
            }
        }
        x
    }
}

impl<T: Real> InteriorPointSolver<T> {
    pub fn new(options: IpmOptions<T>) -> Self {
        InteriorPointSolver { options }
    }
}

/// Ruiz equilibration: symmetric row/column scaling of the stacked
/// `[Q; A; G]` data with scales snapped to powers of two (exact in
/// floating point). Returns the scaled problem and the variable /
/// equality-row / inequality-row scales with
/// `x = d_x ∘ x_scaled`, `y = d_e ∘ y_scaled`, `z = d_i ∘ z_scaled`.
fn equilibrate<T: Real>(problem: &QpProblem<T>) -> (QpProblem<T>, Vec<T>, Vec<T>, Vec<T>) {
    let n = problem.n();
    let me = problem.a.nrows;
    let mi = problem.g.nrows;
    let mut d_x = vec![T::one(); n];
    let mut d_e = vec![T::one(); me];
    let mut d_i = vec![T::one(); mi];
    let mut scaled = problem.clone();

    let snap = |v: T| -> T {
        if v <= T::zero() {
            return T::one();
        }
        let l = v.as_f64().log2().round();
        nalgebra::convert(l.exp2())
    };

    for _ in 0..3 {
        let mut col_max = vec![T::zero(); n];
        let mut eq_max = vec![T::zero(); me];
        let mut ineq_max = vec![T::zero(); mi];
        for &(i, j, v) in &scaled.q.triplets {
            let a = v.abs();
            col_max[i] = col_max[i].max(a);
            col_max[j] = col_max[j].max(a);
        }
        for &(r, c, v) in &scaled.a.triplets {
            let a = v.abs();
            eq_max[r] = eq_max[r].max(a);
            col_max[c] = col_max[c].max(a);
        }
        for &(r, c, v) in &scaled.g.triplets {
            let a = v.abs();
            ineq_max[r] = ineq_max[r].max(a);
            col_max[c] = col_max[c].max(a);
        }
        let col_s: Vec<T> = col_max.iter().map(|&m| snap(m.sqrt()).recip()).collect();
        let eq_s: Vec<T> = eq_max.iter().map(|&m| snap(m.sqrt()).recip()).collect();
        let ineq_s: Vec<T> = ineq_max.iter().map(|&m| snap(m.sqrt()).recip()).collect();
        for (i, sc) in col_s.iter().enumerate() {
            d_x[i] *= *sc;
        }
        for (r, sc) in eq_s.iter().enumerate() {
            d_e[r] *= *sc;
        }
        for (r, sc) in ineq_s.iter().enumerate() {
            d_i[r] *= *sc;
        }
        for t in &mut scaled.q.triplets {
            t.2 *= col_s[t.0] * col_s[t.1];
        }
        for t in &mut scaled.a.triplets {
            t.2 *= eq_s[t.0] * col_s[t.1];
        }
        for t in &mut scaled.g.triplets {
            t.2 *= ineq_s[t.0] * col_s[t.1];
        }
    }
    for j in 0..n {
        scaled.c[j] = problem.c[j] * d_x[j];
    }
    for r in 0..me {
        scaled.b[r] = problem.b[r] * d_e[r];
    }
    for r in 0..mi {
        scaled.h[r] = problem.h[r] * d_i[r];
    }
    (scaled, d_x, d_e, d_i)
}

fn inf_norm<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
}

impl<T: Real> QpSolve<T> for InteriorPointSolver<T> {
    fn solve(&self, original: &QpProblem<T>) -> QpOutcome<T> {
        let start = Instant::now();
        let opts = &self.options;
        let (problem, d_x, d_e, d_i) = equilibrate(original);
        let problem = &problem;
        let n = problem.n();
        let me = problem.a.nrows;
        let mi = problem.g.nrows;
        let g_rows = problem.g.row_groups();
        let mut kkt = Kkt::plan(problem);

        let scale_b = inf_norm(&original.b).max(T::one());
        let scale_c = inf_norm(&original.c).max(T::one());
        let scale_h = inf_norm(&original.h).max(T::one());

        // residual norms mapped back to original row/column units
        let orig_norm = |v: &[T], d: &[T]| -> T {
            let mut m = T::zero();
            for (val, sc) in v.iter().zip(d.iter()) {
                m = m.max(val.abs() / *sc);
            }
            m
        };

        let finish = |x: &[T],
                      y: &[T],
                      z: &[T],
                      status: SolveStatus,
                      iterations: usize,
                      started: Instant|
         -> QpOutcome<T> {
            let x_o: Vec<T> = (0..n).map(|j| x[j] * d_x[j]).collect();
            let y_o: Vec<T> = (0..me).map(|r| y[r] * d_e[r]).collect();
            let z_o: Vec<T> = (0..mi).map(|r| z[r] * d_i[r]).collect();
            let mut r_dual = vec![T::zero(); n];
            let mut tmp_n = vec![T::zero(); n];
            original.q.mul_vec(&x_o, &mut r_dual);
            for i in 0..n {
                r_dual[i] += original.c[i];
            }
            original.a.mul_transpose_vec(&y_o, &mut tmp_n);
            for i in 0..n {
                r_dual[i] += tmp_n[i];
            }
            original.g.mul_transpose_vec(&z_o, &mut tmp_n);
            for i in 0..n {
                r_dual[i] += tmp_n[i];
            }
            let mut r_pri = vec![T::zero(); me];
            original.a.mul_vec(&x_o, &mut r_pri);
            for r in 0..me {
                r_pri[r] -= original.b[r];
            }
            let mut comp = T::zero();
            if mi > 0 {
                let mut gx = vec![T::zero(); mi];
                original.g.mul_vec(&x_o, &mut gx);
                for r in 0..mi {
                    comp += z_o[r] * (original.h[r] - gx[r]).max(T::zero());
                }
                comp /= nalgebra::convert(mi as f64);
            }
            QpOutcome {
                report: SolverReport {
                    status,
                    iterations,
                    primal_residual: inf_norm(&r_pri).as_f64(),
                    dual_residual: (inf_norm(&r_dual) / scale_c).as_f64(),
                    complementarity: comp.as_f64(),
                    objective: original.objective(&x_o).as_f64(),
                    wall_time_s: started.elapsed().as_secs_f64(),
                },
                x: x_o,
                y: y_o,
                z: z_o,
            }
        };

        // An equality-constrained QP is a single linear KKT solve.
        if mi == 0 {
            let w: Vec<T> = Vec::new();
            if kkt.factor(problem, &g_rows, &w, opts.regularization).is_err() {
                return finish(
                    &vec![T::zero(); n],
                    &vec![T::zero(); me],
                    &[],
                    SolveStatus::Infeasible,
                    0,
                    start,
                );
            }
            let mut rhs = vec![T::zero(); n + me];
            for i in 0..n {
                rhs[i] = -problem.c[i];
            }
            rhs[n..(me + n)].copy_from_slice(&problem.b[..me]);
            let sol = kkt.solve_refined(problem, &g_rows, &w, &rhs, opts.refinement_steps + 3, T::zero());
            let (x, y) = sol.split_at(n);
            let mut r_pri = vec![T::zero(); me];
            problem.a.mul_vec(x, &mut r_pri);
            for r in 0..me {
                r_pri[r] -= problem.b[r];
            }
            let pri = orig_norm(&r_pri, &d_e);
            let status = if pri <= opts.equality_tolerance {
                SolveStatus::Optimal
            } else {
                SolveStatus::Infeasible
            };
            return finish(x, y, &[], status, 1, start);
        }

        // Starting point: one KKT solve with unit scaling gives an
        // equality-consistent x and slack-scaled (s, z), shifted into the
        // positive orthant.
        let (mut x, mut y, mut s, mut z) = {
            let w_init = vec![T::one(); mi];
            let mut x0 = vec![T::zero(); n];
            let mut y0 = vec![T::zero(); me];
            if kkt
                .factor(problem, &g_rows, &w_init, opts.regularization)
                .is_ok()
            {
                let mut rhs = vec![T::zero(); n + me];
                let mut gth = vec![T::zero(); n];
                problem.g.mul_transpose_vec(&problem.h, &mut gth);
                for i in 0..n {
                    rhs[i] = gth[i] - problem.c[i];
                }
                rhs[n..(me + n)].copy_from_slice(&problem.b[..me]);
                let sol =
                    kkt.solve_refined(problem, &g_rows, &w_init, &rhs, opts.refinement_steps, T::zero());
                x0.copy_from_slice(&sol[..n]);
                y0.copy_from_slice(&sol[n..]);
            }
            let mut s_cand = vec![T::zero(); mi];
            problem.g.mul_vec(&x0, &mut s_cand);
            for i in 0..mi {
                s_cand[i] = problem.h[i] - s_cand[i];
            }
            let min_s = s_cand.iter().fold(T::max_value().unwrap_or(T::one()), |m, &v| m.min(v));
            let mut s0 = s_cand.clone();
            if min_s <= T::zero() {
                let shift = T::one() - min_s;
                for v in &mut s0 {
                    *v += shift;
                }
            }
            let mut z0: Vec<T> = s_cand.iter().map(|&v| -v).collect();
            let min_z = z0.iter().fold(T::max_value().unwrap_or(T::one()), |m, &v| m.min(v));
            if min_z <= T::zero() {
                let shift = T::one() - min_z;
                for v in &mut z0 {
                    *v += shift;
                }
            }
            (x0, y0, s0, z0)
        };

        let mut iterations = 0;
        let mut status = SolveStatus::MaxIterations;
        let mut best = (f64::MAX, f64::MAX, f64::MAX);
        let mut stall = 0usize;

        let mut r_dual = vec![T::zero(); n];
        let mut r_pri = vec![T::zero(); me];
        let mut r_ineq = vec![T::zero(); mi];

        for iter in 0..opts.max_iterations {
            iterations = iter + 1;

            let mut tmp_n = vec![T::zero(); n];
            problem.q.mul_vec(&x, &mut r_dual);
            for i in 0..n {
                r_dual[i] += problem.c[i];
            }
            problem.a.mul_transpose_vec(&y, &mut tmp_n);
            for i in 0..n {
                r_dual[i] += tmp_n[i];
            }
            problem.g.mul_transpose_vec(&z, &mut tmp_n);
            for i in 0..n {
                r_dual[i] += tmp_n[i];
            }
            problem.a.mul_vec(&x, &mut r_pri);
            for r in 0..me {
                r_pri[r] -= problem.b[r];
            }
            problem.g.mul_vec(&x, &mut r_ineq);
            for r in 0..mi {
                r_ineq[r] += s[r] - problem.h[r];
            }
            let mu = {
                let mut acc = T::zero();
                for i in 0..mi {
                    acc += s[i] * z[i];
                }
                acc / nalgebra::convert(mi as f64)
            };

            let pri = orig_norm(&r_pri, &d_e);
            let ineq = orig_norm(&r_ineq, &d_i) / scale_h;
            let dual = orig_norm(&r_dual, &d_x) / scale_c;
            let comp = mu / scale_c.max(scale_b);

            if pri <= opts.equality_tolerance
                && ineq <= opts.tolerance
                && dual <= opts.tolerance
                && comp <= opts.tolerance
            {
                status = SolveStatus::Optimal;
                break;
            }
            let improving = pri.as_f64() < best.0 * 0.9999
                || ineq.as_f64() < best.1 * 0.9999
                || comp.as_f64() < best.2;
            best = (
                best.0.min(pri.as_f64()),
                best.1.min(ineq.as_f64()),
                best.2.min(comp.as_f64()),
            );
            if !improving {
                stall += 1;
            } else {
                stall = 0;
            }
            if stall >= 10
                && (pri > opts.equality_tolerance.max(opts.tolerance * scale_b)
                    || ineq > opts.tolerance)
            {
                status = SolveStatus::Infeasible;
                break;
            }

            let w_lo: T = nalgebra::convert(1e-12_f64);
            let w_hi: T = nalgebra::convert(1e12_f64);
            let w: Vec<T> = (0..mi).map(|i| (z[i] / s[i]).clamp(w_lo, w_hi)).collect();
            if kkt.factor(problem, &g_rows, &w, opts.regularization).is_err() {
                status = SolveStatus::Infeasible;
                break;
            }

            // affine predictor
            let mut rhs = vec![T::zero(); n + me];
            let mut ineq_term = vec![T::zero(); mi];
            for i in 0..mi {
                ineq_term[i] = w[i] * (r_ineq[i] - s[i]);
            }
            problem.g.mul_transpose_vec(&ineq_term, &mut tmp_n);
            for i in 0..n {
                rhs[i] = -r_dual[i] - tmp_n[i];
            }
            for r in 0..me {
                rhs[n + r] = -r_pri[r];
            }
            let aff = kkt.solve_refined(problem, &g_rows, &w, &rhs, opts.refinement_steps, T::zero());
            let (dx_aff, _dy_aff) = aff.split_at(n);
            let mut g_dx = vec![T::zero(); mi];
            problem.g.mul_vec(dx_aff, &mut g_dx);
            let mut dz_aff = vec![T::zero(); mi];
            let mut ds_aff = vec![T::zero(); mi];
            for i in 0..mi {
                dz_aff[i] = w[i] * (g_dx[i] + r_ineq[i] - s[i]);
                ds_aff[i] = -s[i] - s[i] / z[i] * dz_aff[i];
            }
            let step = |v: &[T], dv: &[T]| -> T {
                let mut alpha = T::one();
                for i in 0..v.len() {
                    if dv[i] < T::zero() {
                        alpha = alpha.min(-v[i] / dv[i]);
                    }
                }
                alpha
            };
            let alpha_aff = step(&s, &ds_aff).min(step(&z, &dz_aff)).min(T::one());
            let mu_aff = {
                let mut acc = T::zero();
                for i in 0..mi {
                    acc += (s[i] + alpha_aff * ds_aff[i]) * (z[i] + alpha_aff * dz_aff[i]);
                }
                acc / nalgebra::convert(mi as f64)
            };
            let sigma = if mu > T::zero() {
                let ratio = mu_aff / mu;
                ratio * ratio * ratio
            } else {
                T::zero()
            };

            // corrector: complementarity target rc = sigma mu e - S Z e
            // - dS_aff dZ_aff e; eliminating ds gives
            // dz = W (G dx + r_ineq) + rc / s and the reduced rhs term
            // G^T (W r_ineq + rc / s).
            for i in 0..mi {
                let rc = sigma * mu - s[i] * z[i] - ds_aff[i] * dz_aff[i];
                ineq_term[i] = w[i] * r_ineq[i] + rc / s[i];
            }
            problem.g.mul_transpose_vec(&ineq_term, &mut tmp_n);
            for i in 0..n {
                rhs[i] = -r_dual[i] - tmp_n[i];
            }
            for r in 0..me {
                rhs[n + r] = -r_pri[r];
            }
            let dir = kkt.solve_refined(problem, &g_rows, &w, &rhs, opts.refinement_steps, T::zero());
            let (dx, dy) = dir.split_at(n);
            problem.g.mul_vec(dx, &mut g_dx);
            let mut dz = vec![T::zero(); mi];
            let mut ds = vec![T::zero(); mi];
            for i in 0..mi {
                let rc = sigma * mu - s[i] * z[i] - ds_aff[i] * dz_aff[i];
                dz[i] = w[i] * (g_dx[i] + r_ineq[i]) + rc / s[i];
                ds[i] = (rc - s[i] * dz[i]) / z[i];
            }
            let frac: T = nalgebra::convert(0.99_f64);
            let alpha_p = (frac * step(&s, &ds)).min(T::one());
            let alpha_d = (frac * step(&z, &dz)).min(T::one());
            if alpha_p < nalgebra::convert(1e-12_f64) && alpha_d < nalgebra::convert(1e-12_f64) {
                status = SolveStatus::Infeasible;
                break;
            }

            if std::env::var_os("LEAP_IPM_DEBUG").is_some() {
                let mut adx = vec![T::zero(); me];
                problem.a.mul_vec(dx, &mut adx);
                let mut dir_err = T::zero();
                for r in 0..me {
                    dir_err = dir_err.max((adx[r] + r_pri[r]).abs());
                }
                eprintln!(
                    "it {:2} pri {:9.2e} ineq {:9.2e} dual {:9.2e} mu {:9.2e} sigma {:7.1e} ap {:7.1e} ad {:7.1e} direrr {:9.2e}",
                    iter,
                    pri.as_f64(),
                    ineq.as_f64(),
                    dual.as_f64(),
                    mu.as_f64(),
                    sigma.as_f64(),
                    alpha_p.as_f64(),
                    alpha_d.as_f64(),
                    dir_err.as_f64()
                );
            }
            for i in 0..n {
                x[i] += alpha_p * dx[i];
            }
            for r in 0..me {
                y[r] += alpha_d * dy[r];
            }
            for i in 0..mi {
                s[i] += alpha_p * ds[i];
                z[i] += alpha_d * dz[i];
            }
        }

        finish(&x, &y, &z, status, iterations, start)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};

    fn solver() -> InteriorPointSolver<f64> {
        InteriorPointSolver::default()
    }

    #[test]
    fn scalar_bound_becomes_active() {
        // min x^2  s.t.  x >= 1
        let mut p = QpProblem::<f64>::new(1, 0, 1);
        p.q.push(0, 0, 2.0);
        p.g.push(0, 0, -1.0);
        p.h[0] = -1.0;
        let out = solver().solve(&p);
        assert!(out.report.is_optimal(), "{:?}", out.report);
        assert_relative_eq!(out.x[0], 1.0, epsilon = 1e-7);
        assert_relative_eq!(out.report.objective, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn equality_only_matches_direct_kkt_solve() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let n = 6;
            let me = 3;
            let a_raw = DMatrix::<f64>::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let q_dense = &a_raw * a_raw.transpose() + DMatrix::identity(n, n);
            let a_eq = DMatrix::<f64>::from_fn(me, n, |_, _| rng.gen_range(-1.0..1.0));
            let c = DVector::<f64>::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let b = DVector::<f64>::from_fn(me, |_, _| rng.gen_range(-1.0..1.0));

            let mut p = QpProblem::<f64>::new(n, me, 0);
            for i in 0..n {
                for j in 0..n {
                    p.q.push(i, j, q_dense[(i, j)]);
                }
                p.c[i] = c[i];
            }
            for r in 0..me {
                for j in 0..n {
                    p.a.push(r, j, a_eq[(r, j)]);
                }
                p.b[r] = b[r];
            }
            let out = solver().solve(&p);
            assert!(out.report.is_optimal());

            // direct KKT
            let mut kkt = DMatrix::<f64>::zeros(n + me, n + me);
            kkt.view_mut((0, 0), (n, n)).copy_from(&q_dense);
            kkt.view_mut((n, 0), (me, n)).copy_from(&a_eq);
            kkt.view_mut((0, n), (n, me)).copy_from(&a_eq.transpose());
            let mut rhs = DVector::zeros(n + me);
            for i in 0..n {
                rhs[i] = -c[i];
            }
            for r in 0..me {
                rhs[n + r] = b[r];
            }
            let sol = kkt.lu().solve(&rhs).unwrap();
            for i in 0..n {
                assert_relative_eq!(out.x[i], sol[i], epsilon = 1e-10);
            }
        }
    }

    /// Brute-force oracle: enumerate every active set, solve the equality
    /// KKT, keep the best feasible candidate with nonnegative multipliers.
    fn active_set_enumeration(
        q: &DMatrix<f64>,
        c: &DVector<f64>,
        g: &DMatrix<f64>,
        h: &DVector<f64>,
    ) -> Option<(DVector<f64>, f64)> {
        let n = q.nrows();
        let mi = g.nrows();
        let mut best: Option<(DVector<f64>, f64)> = None;
        for mask in 0..(1u32 << mi) {
            let active: Vec<usize> = (0..mi).filter(|i| mask & (1 << i) != 0).collect();
            let k = active.len();
            if k > n {
                continue;
            }
            let mut kkt = DMatrix::<f64>::zeros(n + k, n + k);
            kkt.view_mut((0, 0), (n, n)).copy_from(q);
            for (r, &i) in active.iter().enumerate() {
                for j in 0..n {
                    kkt[(n + r, j)] = g[(i, j)];
                    kkt[(j, n + r)] = g[(i, j)];
                }
            }
            let mut rhs = DVector::<f64>::zeros(n + k);
            for i in 0..n {
                rhs[i] = -c[i];
            }
            for (r, &i) in active.iter().enumerate() {
                rhs[n + r] = h[i];
            }
            let Some(sol) = kkt.lu().solve(&rhs) else {
                continue;
            };
            let x = sol.rows(0, n).into_owned();
            let lambda = sol.rows(n, k);
            if lambda.iter().any(|&l| l < -1e-9) {
                continue;
            }
            let slack = h - g * &x;
            if slack.iter().any(|&s| s < -1e-8) {
                continue;
            }
            let obj = 0.5 * (&x.transpose() * q * &x)[(0, 0)] + c.dot(&x);
            if best.as_ref().map_or(true, |(_, b)| obj < *b) {
                best = Some((x, obj));
            }
        }
        best
    }

    #[test]
    fn random_tiny_qps_match_active_set_enumeration() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut solved = 0;
        for _ in 0..40 {
            let n = rng.gen_range(2..=5);
            let mi = rng.gen_range(1..=7);
            let a_raw = DMatrix::<f64>::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let q = &a_raw * a_raw.transpose() + DMatrix::identity(n, n) * 0.5;
            let c = DVector::<f64>::from_fn(n, |_, _| rng.gen_range(-2.0..2.0));
            let g = DMatrix::<f64>::from_fn(mi, n, |_, _| rng.gen_range(-1.0..1.0));
            // feasible by construction around a random interior point
            let x_feas = DVector::<f64>::from_fn(n, |_, _| rng.gen_range(-0.5..0.5));
            let margins = DVector::<f64>::from_fn(mi, |_, _| rng.gen_range(0.05..1.0));
            let h = &g * &x_feas + margins;

            let Some((_, obj_ref)) = active_set_enumeration(&q, &c, &g, &h) else {
                continue;
            };
            let mut p = QpProblem::<f64>::new(n, 0, mi);
            for i in 0..n {
                for j in 0..n {
                    p.q.push(i, j, q[(i, j)]);
                }
                p.c[i] = c[i];
            }
            for r in 0..mi {
                for j in 0..n {
                    p.g.push(r, j, g[(r, j)]);
                }
                p.h[r] = h[r];
            }
            let out = solver().solve(&p);
            assert!(out.report.is_optimal(), "{:?}", out.report);
            assert!(
                (out.report.objective - obj_ref).abs() < 1e-6,
                "objective {:.9} vs enumeration {:.9}",
                out.report.objective,
                obj_ref
            );
            solved += 1;
        }
        assert!(solved > 30);
    }

    #[test]
    fn medium_random_qp_meets_kkt_tolerances() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let n = 50;
        let me = 10;
        let mi = 30;
        let a_raw = DMatrix::<f64>::from_fn(n, n, |_, _| rng.gen_range(-0.3..0.3));
        let q = &a_raw * a_raw.transpose() + DMatrix::identity(n, n) * 0.2;
        let x_feas = DVector::<f64>::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let a_eq = DMatrix::<f64>::from_fn(me, n, |_, _| rng.gen_range(-1.0..1.0));
        let b = &a_eq * &x_feas;
        let g = DMatrix::<f64>::from_fn(mi, n, |_, _| rng.gen_range(-1.0..1.0));
        let h = &g * &x_feas + DVector::from_element(mi, 0.3);

        let mut p = QpProblem::<f64>::new(n, me, mi);
        for i in 0..n {
            for j in 0..n {
                if q[(i, j)] != 0.0 {
                    p.q.push(i, j, q[(i, j)]);
                }
            }
            p.c[i] = rng.gen_range(-1.0..1.0);
        }
        for r in 0..me {
            for j in 0..n {
                p.a.push(r, j, a_eq[(r, j)]);
            }
            p.b[r] = b[r];
        }
        for r in 0..mi {
            for j in 0..n {
                p.g.push(r, j, g[(r, j)]);
            }
            p.h[r] = h[r];
        }
        let out = solver().solve(&p);
        assert!(out.report.is_optimal(), "{:?}", out.report);
        assert!(out.report.primal_residual < 1e-8);
        assert!(out.report.dual_residual < 1e-6);
        assert!(out.report.complementarity < 1e-6);
    }

    #[test]
    fn infeasible_equalities_are_detected() {
        // x = 0 and x = 1 cannot both hold
        let mut p = QpProblem::<f64>::new(1, 2, 0);
        p.q.push(0, 0, 2.0);
        p.a.push(0, 0, 1.0);
        p.a.push(1, 0, 1.0);
        p.b[0] = 0.0;
        p.b[1] = 1.0;
        let out = solver().solve(&p);
        assert!(!out.report.is_optimal());
    }

    #[test]
    fn infeasible_inequalities_are_detected() {
        // x <= -1 and -x <= -1 (x >= 1) conflict
        let mut p = QpProblem::<f64>::new(1, 0, 2);
        p.q.push(0, 0, 2.0);
        p.g.push(0, 0, 1.0);
        p.h[0] = -1.0;
        p.g.push(1, 0, -1.0);
        p.h[1] = -1.0;
        let out = solver().solve(&p);
        assert!(!out.report.is_optimal());
    }
}
