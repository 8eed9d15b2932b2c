//! Eigenpairs of the discretized radial Hamiltonian.
//!
//! Eigenvalues are located by bisection on the inertia of
//! `S(σ) = M(H − σ)M = −DM/2 + M(V − σ)M`, a symmetric pentadiagonal matrix
//! congruent to `H − σ`. Eigenvectors follow from inverse iteration on
//! `(K − σM)x = M·b`, and the eigenvalue is polished by the Rayleigh quotient.

use super::grid::RadialOperator;
use crate::error::{Error, Result};

/// Number of eigenvalues of `H` strictly below `sigma`.
pub fn count_below(op: &RadialOperator, sigma: f64) -> usize {
    let n = op.len();
    let (mo, dd, doff) = (op.m_off, &op.d_diag, op.d_off);
    let md = &op.m_diag;
    let w = |i: usize| op.v[i] - sigma;
    let tiny = f64::MIN_POSITIVE.sqrt();

    let s0 = |i: usize| {
        let mut dm = dd[i] * md[i];
        let mut mwm = md[i] * md[i] * w(i);
        if i > 0 {
            dm += doff * mo;
            mwm += mo * mo * w(i - 1);
        }
        if i + 1 < n {
            dm += doff * mo;
            mwm += mo * mo * w(i + 1);
        }
        -0.5 * dm + mwm
    };
    // S[i][i+1]
    let s1 = |i: usize| -0.5 * (dd[i] * mo + doff * md[i + 1]) + md[i] * mo * w(i) + mo * md[i + 1] * w(i + 1);
    // S[i][i+2]
    let s2 = |i: usize| -0.5 * doff * mo + mo * mo * w(i + 1);

    let mut count = 0;
    let (mut d2, mut d1) = (0.0f64, 0.0f64); // D[i−2], D[i−1]
    let mut l1_prev = 0.0; // L[i−1][i−2]
    for i in 0..n {
        let (l2, l1) = if i >= 2 {
            let l2 = s2(i - 2) / d2;
            (l2, (s1(i - 1) - l2 * d2 * l1_prev) / d1)
        } else if i == 1 {
            (0.0, s1(0) / d1)
        } else {
            (0.0, 0.0)
        };
        let mut di = s0(i) - l1 * l1 * d1 - l2 * l2 * d2;
        if di == 0.0 {
            di = tiny;
        }
        if di < 0.0 {
            count += 1;
        }
        d2 = d1;
        d1 = di;
        l1_prev = l1;
    }
    count
}

/// LU factorization with partial pivoting of a general tridiagonal matrix.
struct TridiagonalLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swap: Vec<bool>,
}

impl TridiagonalLu {
    /// `lower[i] = A[i][i−1]`, `upper[i] = A[i][i+1]`.
    fn new(lower: &[f64], diag: &[f64], upper: &[f64]) -> Self {
        let n = diag.len();
        let mut dl: Vec<f64> = (1..n).map(|i| lower[i]).collect();
        let mut d = diag.to_vec();
        let mut du: Vec<f64> = (0..n.saturating_sub(1)).map(|i| upper[i]).collect();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swap = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = f64::EPSILON;
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swap[i] = true;
            }
        }
        if n > 0 && d[n - 1] == 0.0 {
            d[n - 1] = f64::EPSILON;
        }
        Self { dl, d, du, du2, swap }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if self.swap[i] {
                let temp = b[i] - self.dl[i] * b[i + 1];
                b[i] = b[i + 1];
                b[i + 1] = temp;
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

/// Eigenpairs of one partial wave, energies ascending. Vectors are real and
/// normalized so that `h·Σ x_i² = 1`.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub ell: u32,
    pub h: f64,
    pub energies: Vec<f64>,
    n: usize,
    vectors: Vec<f64>,
}

impl EigenSystem {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn vector(&self, k: usize) -> &[f64] {
        &self.vectors[k * self.n..(k + 1) * self.n]
    }

    /// Index of the first state with positive energy.
    pub fn first_continuum(&self) -> usize {
        self.energies.partition_point(|&e| e <= 0.0)
    }
}

fn lower_bound(op: &RadialOperator) -> f64 {
    let vmin = op.v.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut lo = vmin - 1.0;
    while count_below(op, lo) > 0 {
        lo = 2.0 * lo - 1.0;
    }
    lo
}

const REFINE_TOL: f64 = 1e-9;

fn bisect_eigenvalues(op: &RadialOperator, lo: f64, c_lo: usize, hi: f64, c_hi: usize, out: &mut Vec<f64>) {
    if c_hi <= c_lo {
        return;
    }
    let tol = REFINE_TOL * hi.abs().max(lo.abs()).max(1e-3);
    if hi - lo < tol {
        for _ in c_lo..c_hi {
            out.push(0.5 * (lo + hi));
        }
        return;
    }
    if c_hi - c_lo == 1 {
        let (mut a, mut b) = (lo, hi);
        while b - a > tol {
            let m = 0.5 * (a + b);
            if count_below(op, m) > c_lo {
                b = m;
            } else {
                a = m;
            }
        }
        out.push(0.5 * (a + b));
        return;
    }
    let mid = 0.5 * (lo + hi);
    let c_mid = count_below(op, mid);
    bisect_eigenvalues(op, lo, c_lo, mid, c_mid, out);
    bisect_eigenvalues(op, mid, c_mid, hi, c_hi, out);
}

/// Inverse iteration at shift `sigma`; returns the polished eigenvalue and the
/// normalized eigenvector.
pub fn eigenvector(op: &RadialOperator, sigma: f64) -> Result<(f64, Vec<f64>)> {
    let n = op.len();
    let h = op.h;
    let (kl, kd, ku) = op.k_matrix();
    let lower: Vec<f64> = (0..n).map(|i| kl[i] - sigma * op.m_off * (i > 0) as u8 as f64).collect();
    let diag: Vec<f64> = (0..n).map(|i| kd[i] - sigma * op.m_diag[i]).collect();
    let upper: Vec<f64> = (0..n).map(|i| ku[i] - sigma * op.m_off * (i + 1 < n) as u8 as f64).collect();
    let lu = TridiagonalLu::new(&lower, &diag, &upper);

    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i as f64) * 0.618).sin()).collect();
    for _ in 0..4 {
        // right-hand side M·x
        let mut b: Vec<f64> = (0..n)
            .map(|i| {
                let mut s = op.m_diag[i] * x[i];
                if i > 0 {
                    s += op.m_off * x[i - 1];
                }
                if i + 1 < n {
                    s += op.m_off * x[i + 1];
                }
                s
            })
            .collect();
        lu.solve(&mut b);
        let norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::numerical(format!("inverse iteration failed at shift {sigma}")));
        }
        x = b.into_iter().map(|v| v / norm).collect();
    }
    let hx = op.apply(&x);
    let lambda = x.iter().zip(&hx).map(|(a, b)| a * b).sum::<f64>();
    let scale = 1.0 / (h * x.iter().map(|v| v * v).sum::<f64>()).sqrt();
    // sign convention: positive near the origin
    let lead = x.iter().find(|v| v.abs() > 1e-200).copied().unwrap_or(1.0);
    let s = scale * lead.signum();
    Ok((lambda, x.into_iter().map(|v| v * s).collect()))
}

/// All eigenpairs with energy below `e_max`.
pub fn eigensystem(op: &RadialOperator, e_max: f64) -> Result<EigenSystem> {
    let lo = lower_bound(op);
    let c_hi = count_below(op, e_max);
    let mut guesses = Vec::with_capacity(c_hi);
    bisect_eigenvalues(op, lo, 0, e_max, c_hi, &mut guesses);
    let n = op.len();
    let mut energies = Vec::with_capacity(guesses.len());
    let mut vectors = Vec::with_capacity(guesses.len() * n);
    for g in guesses {
        let (e, v) = eigenvector(op, g)?;
        energies.push(e);
        vectors.extend(v);
    }
    Ok(EigenSystem { ell: op.ell, h: op.h, energies, n, vectors })
}

/// The `count` lowest eigenpairs.
pub fn lowest(op: &RadialOperator, count: usize) -> Result<EigenSystem> {
    let lo = lower_bound(op);
    let mut hi = 0.0f64.max(lo + 1.0);
    while count_below(op, hi) < count {
        hi = 2.0 * hi + 1.0;
        if hi > 1e8 {
            return Err(Error::numerical("grid has fewer states than requested"));
        }
    }
    // shrink until exactly `count` states lie below
    let mut guesses = Vec::new();
    bisect_eigenvalues(op, lo, 0, hi, count_below(op, hi), &mut guesses);
    guesses.truncate(count);
    let n = op.len();
    let mut energies = Vec::with_capacity(count);
    let mut vectors = Vec::with_capacity(count * n);
    for g in guesses {
        let (e, v) = eigenvector(op, g)?;
        energies.push(e);
        vectors.extend(v);
    }
    Ok(EigenSystem { ell: op.ell, h: op.h, energies, n, vectors })
}

#[cfg(test)]
mod tests {
    use super::super::grid::RadialGrid;
    use super::*;

    #[test]
    fn hydrogen_levels() {
        let g = RadialGrid::new(80.0, 0.1, 0.0).unwrap();
        for ell in 0..3u32 {
            let op = RadialOperator::new(&g, ell, 1.0);
            let sys = lowest(&op, 3).unwrap();
            for (k, e) in sys.energies.iter().enumerate() {
                let n = (k as u32 + ell + 1) as f64;
                assert!((e + 0.5 / (n * n)).abs() < 2e-5, "ℓ={ell} k={k}: {e}");
            }
        }
    }

    #[test]
    fn count_matches_dense_diagonalization() {
        let g = RadialGrid::new(30.0, 0.3, 0.0).unwrap();
        let op = RadialOperator::new(&g, 0, 1.0);
        let n = op.len();
        let dense = nalgebra::DMatrix::from_fn(n, n, |i, j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            op.apply(&e)[i]
        });
        let sym = (&dense + dense.transpose()) * 0.5;
        let mut evals: Vec<f64> = sym.symmetric_eigenvalues().iter().cloned().collect();
        evals.sort_by(f64::total_cmp);
        for sigma in [-0.6, -0.1, 0.0, 0.3, 2.0, 10.0] {
            let want = evals.iter().filter(|&&e| e < sigma).count();
            assert_eq!(count_below(&op, sigma), want, "σ = {sigma}");
        }
        let sys = eigensystem(&op, 1.0).unwrap();
        let want: Vec<f64> = evals.iter().cloned().filter(|&e| e < 1.0).collect();
        assert_eq!(sys.len(), want.len());
        for (a, b) in sys.energies.iter().zip(&want) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn vectors_are_orthonormal() {
        let g = RadialGrid::new(40.0, 0.2, 0.0).unwrap();
        let op = RadialOperator::new(&g, 1, 1.0);
        let sys = eigensystem(&op, 0.8).unwrap();
        assert!(sys.len() > 10);
        for a in 0..sys.len() {
            for b in a..sys.len() {
                let dot: f64 = sys.vector(a).iter().zip(sys.vector(b)).map(|(x, y)| x * y).sum::<f64>() * sys.h;
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-10, "<{a}|{b}> = {dot}");
            }
        }
        assert!(sys.first_continuum() > 0);
    }
}
