//! Symmetric banded LDL^T factorization with reverse Cuthill-McKee
//! ordering, for the quasi-definite KKT systems of the transcription
//! solvers. Transcribed programs couple only neighboring knots, so after
//! reordering the KKT matrix has a narrow band and factors in
//! `O(n * bw^2)`.

use crate::Real;

/// Reverse Cuthill-McKee ordering of a symmetric sparsity pattern.
///
/// `pattern` lists off-diagonal index pairs (either triangle). Returns
/// `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(n: usize, pattern: &[(usize, usize)]) -> Vec<usize> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(i, j) in pattern {
        if i != j && i < n && j < n {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }

    let mut order = Vec::with_capacity(n);
    let mut visited = vec![false; n];
    let mut queue = std::collections::VecDeque::new();

    // Process components from nodes of minimal degree.
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&v| adj[v].len());
    for &start in &by_degree {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nexts: Vec<usize> = adj[v].iter().copied().filter(|&u| !visited[u]).collect();
            nexts.sort_by_key(|&u| adj[u].len());
            for u in nexts {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    order
}

/// Bandwidth of a pattern under a permutation (`perm[new] = old`).
pub fn bandwidth_under(perm: &[usize], pattern: &[(usize, usize)]) -> usize {
    let mut pos = vec![0usize; perm.len()];
    for (new, &old) in perm.iter().enumerate() {
        pos[old] = new;
    }
    pattern
        .iter()
        .map(|&(i, j)| pos[i].abs_diff(pos[j]))
        .max()
        .unwrap_or(0)
}

/// Lower-band storage of a symmetric matrix: entry `(i, j)` with
/// `0 <= i - j <= bw` lives at `data[j * (bw + 1) + (i - j)]`.
pub struct SymBanded<T: Real> {
    pub n: usize,
    pub bw: usize,
    data: Vec<T>,
}

impl<T: Real> SymBanded<T> {
    pub fn zeros(n: usize, bw: usize) -> Self {
        SymBanded {
            n,
            bw,
            data: vec![T::zero(); n * (bw + 1)],
        }
    }

    pub fn clear(&mut self) {
        self.data.fill(T::zero());
    }

    /// Adds `v` at `(i, j)`; only the lower triangle is stored, so pass
    /// each symmetric pair once (or diagonal entries directly).
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        debug_assert!(hi - lo <= self.bw, "entry outside band");
        self.data[lo * (self.bw + 1) + (hi - lo)] += v;
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> T {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        if hi - lo > self.bw {
            return T::zero();
        }
        self.data[lo * (self.bw + 1) + (hi - lo)]
    }

    /// In-place LDL^T without pivoting. Suitable for quasi-definite
    /// matrices (regularized saddle systems); fails only on a zero pivot.
    pub fn factor(&mut self) -> Result<(), usize> {
        let bw = self.bw;
        for j in 0..self.n {
            // d_j = a_jj - sum_k L_jk^2 d_k
            let mut d = self.get(j, j);
            let k_lo = j.saturating_sub(bw);
            for k in k_lo..j {
                let l_jk = self.get(j, k);
                let d_k = self.data[k * (bw + 1)];
                d -= l_jk * l_jk * d_k;
            }
            if d == T::zero() || !d.is_finite() {
                return Err(j);
            }
            self.data[j * (bw + 1)] = d;
            let i_hi = (j + bw).min(self.n - 1);
            for i in (j + 1)..=i_hi {
                let mut v = self.get(i, j);
                let k_lo = i.saturating_sub(bw).max(k_lo);
                for k in k_lo..j {
                    let d_k = self.data[k * (bw + 1)];
                    v -= self.get(i, k) * self.get(j, k) * d_k;
                }
                self.data[j * (bw + 1) + (i - j)] = v / d;
            }
        }
        Ok(())
    }

    /// Solves `L D L^T x = rhs` after [`Self::factor`].
    pub fn solve(&self, rhs: &mut [T]) {
        let bw = self.bw;
        let n = self.n;
        // forward: L y = rhs
        for j in 0..n {
            let y_j = rhs[j];
            let i_hi = (j + bw).min(n - 1);
            for i in (j + 1)..=i_hi {
                rhs[i] -= self.data[j * (bw + 1) + (i - j)] * y_j;
            }
        }
        // diagonal
        for j in 0..n {
            rhs[j] /= self.data[j * (bw + 1)];
        }
        // backward: L^T x = y
        for j in (0..n).rev() {
            let i_hi = (j + bw).min(n - 1);
            let mut acc = rhs[j];
            for i in (j + 1)..=i_hi {
                acc -= self.data[j * (bw + 1) + (i - j)] * rhs[i];
            }
            rhs[j] = acc;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};

    #[test]
    fn factors_and_solves_banded_spd() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let n = 40;
        let bw = 3;
        let mut dense = DMatrix::<f64>::zeros(n, n);
        let mut banded = SymBanded::zeros(n, bw);
        for j in 0..n {
            for i in j..(j + bw + 1).min(n) {
                let v = if i == j {
                    10.0 + rng.gen_range(0.0..1.0)
                } else {
                    rng.gen_range(-1.0..1.0)
                };
                dense[(i, j)] = v;
                dense[(j, i)] = v;
                banded.add(i, j, v);
            }
        }
        banded.factor().unwrap();
        let x_true = DVector::from_fn(n, |i, _| (i as f64 * 0.37).sin());
        let b = &dense * &x_true;
        let mut rhs: Vec<f64> = b.iter().copied().collect();
        banded.solve(&mut rhs);
        for i in 0..n {
            assert_relative_eq!(rhs[i], x_true[i], epsilon = 1e-10);
        }
    }

    #[test]
    fn handles_quasi_definite_saddle_blocks() {
        // [[I, a], [a, -delta]] pattern: negative pivots must pass.
        let mut banded = SymBanded::zeros(4, 2);
        banded.add(0, 0, 2.0);
        banded.add(1, 1, 3.0);
        banded.add(2, 0, 1.0);
        banded.add(2, 1, -1.0);
        banded.add(2, 2, -1e-8);
        banded.add(3, 1, 0.5);
        banded.add(3, 3, -1e-8);
        let dense = DMatrix::from_row_slice(
            4,
            4,
            &[
                2.0, 0.0, 1.0, 0.0, //
                0.0, 3.0, -1.0, 0.5, //
                1.0, -1.0, -1e-8, 0.0, //
                0.0, 0.5, 0.0, -1e-8,
            ],
        );
        banded.factor().unwrap();
        let b = vec![1.0, -2.0, 0.5, 0.25];
        let mut x = b.clone();
        banded.solve(&mut x);
        let x_direct = dense.lu().solve(&DVector::from_vec(b)).unwrap();
        for i in 0..4 {
            assert_relative_eq!(x[i], x_direct[i], epsilon = 1e-6);
        }
    }

    #[test]
    fn rcm_shrinks_chain_bandwidth() {
        // chain graph declared in scrambled order
        let n = 50;
        let mut pattern = Vec::new();
        let scramble: Vec<usize> = (0..n).map(|i| (i * 29) % n).collect();
        for w in 0..n - 1 {
            pattern.push((scramble[w], scramble[w + 1]));
        }
        let natural_bw = pattern.iter().map(|&(i, j)| i.abs_diff(j)).max().unwrap();
        let perm = reverse_cuthill_mckee(n, &pattern);
        let bw = bandwidth_under(&perm, &pattern);
        assert!(bw <= 2, "rcm bandwidth {bw}");
        assert!(natural_bw > 10);
        // perm is a permutation
        let mut seen = vec![false; n];
        for &p in &perm {
            assert!(!seen[p]);
            seen[p] = true;
        }
    }
}
