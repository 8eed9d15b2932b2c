//! Radial grid and the Numerov-discretized field-free radial Hamiltonian.
//!
//! Points sit at `r_i = (i+1)·h`, `i = 0 … n−1`, with `u = 0` at `r = 0` and at
//! `r = (n+1)·h`. The second derivative is represented as `M⁻¹D` with
//! `D = tridiag(1, −2, 1)/h²` and `M = tridiag(1, 10, 1)/12`, which is fourth
//! order accurate. For `ℓ = 0` the first diagonal entry of `D` is corrected for
//! the Coulomb cusp, and `M` is adjusted so that `D = 12(M − I)/h²` still holds.
//! `M` and `D` then commute and `H = −½M⁻¹D + V` is symmetric.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    /// Box radius (a.u.).
    pub r_max: f64,
    /// Grid spacing (a.u.).
    pub dr: f64,
    /// Fraction of the box covered by the absorbing mask.
    pub absorber_fraction: f64,
}

impl RadialGrid {
    pub fn new(r_max: f64, dr: f64, absorber_fraction: f64) -> Result<Self> {
        let g = Self { r_max, dr, absorber_fraction };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dr > 0.0) || !(self.r_max > 10.0 * self.dr) {
            return Err(Error::config(format!("invalid radial grid: r_max {} dr {}", self.r_max, self.dr)));
        }
        if !(0.0..1.0).contains(&self.absorber_fraction) {
            return Err(Error::config("absorber fraction must lie in [0, 1)"));
        }
        Ok(())
    }

    /// Number of interior points.
    pub fn len(&self) -> usize {
        (self.r_max / self.dr).round() as usize - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn r(&self, i: usize) -> f64 {
        (i + 1) as f64 * self.dr
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.r(i)).collect()
    }

    pub fn absorber_start(&self) -> f64 {
        self.r_max * (1.0 - self.absorber_fraction)
    }

    /// `cos^{1/8}` mask, 1 inside the absorber start radius.
    pub fn mask(&self) -> Vec<f64> {
        let r0 = self.absorber_start();
        let width = self.r_max - r0;
        self.radii()
            .into_iter()
            .map(|r| {
                if r <= r0 || width <= 0.0 {
                    1.0
                } else {
                    let x = ((r - r0) / width).min(1.0);
                    (0.5 * std::f64::consts::PI * x).cos().max(0.0).powf(0.125)
                }
            })
            .collect()
    }
}

/// Field-free radial operator of one partial wave.
#[derive(Debug, Clone)]
pub struct RadialOperator {
    pub ell: u32,
    pub z: f64,
    pub h: f64,
    pub m_diag: Vec<f64>,
    pub m_off: f64,
    pub d_diag: Vec<f64>,
    pub d_off: f64,
    /// `−Z/r + ℓ(ℓ+1)/(2r²)`
    pub v: Vec<f64>,
}

impl RadialOperator {
    pub fn new(grid: &RadialGrid, ell: u32, z: f64) -> Self {
        let n = grid.len();
        let h = grid.dr;
        let h2 = h * h;
        let mut d_diag = vec![-2.0 / h2; n];
        let mut m_diag = vec![10.0 / 12.0; n];
        if ell == 0 {
            d_diag[0] = -2.0 / h2 * (1.0 - z * h / (12.0 - 10.0 * z * h));
            m_diag[0] = 1.0 + h2 * d_diag[0] / 12.0;
        }
        let l = ell as f64;
        let v = (0..n)
            .map(|i| {
                let r = grid.r(i);
                -z / r + l * (l + 1.0) / (2.0 * r * r)
            })
            .collect();
        Self { ell, z, h, m_diag, m_off: 1.0 / 12.0, d_diag, d_off: 1.0 / h2, v }
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    /// Tridiagonal `K = −D/2 + M·V` as `(lower, diag, upper)`, where
    /// `lower[i] = K[i][i−1]` and `upper[i] = K[i][i+1]`.
    pub fn k_matrix(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = self.len();
        let mut lower = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let diag = (0..n).map(|i| -0.5 * self.d_diag[i] + self.m_diag[i] * self.v[i]).collect();
        for i in 0..n {
            if i > 0 {
                lower[i] = -0.5 * self.d_off + self.m_off * self.v[i - 1];
            }
            if i + 1 < n {
                upper[i] = -0.5 * self.d_off + self.m_off * self.v[i + 1];
            }
        }
        (lower, diag, upper)
    }

    /// `H·x` for a real vector.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut dx = vec![0.0; n];
        for i in 0..n {
            let mut s = self.d_diag[i] * x[i];
            if i > 0 {
                s += self.d_off * x[i - 1];
            }
            if i + 1 < n {
                s += self.d_off * x[i + 1];
            }
            dx[i] = -0.5 * s;
        }
        let mut y = solve_symmetric_tridiagonal(&self.m_diag, self.m_off, &dx);
        for i in 0..n {
            y[i] += self.v[i] * x[i];
        }
        y
    }
}

/// Solves `T·x = b` for symmetric tridiagonal `T` with constant off-diagonal.
/// Intended for the diagonally dominant `M`.
pub fn solve_symmetric_tridiagonal(diag: &[f64], off: f64, b: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut denom = diag[0];
    x[0] = b[0] / denom;
    for i in 1..n {
        c[i - 1] = off / denom;
        denom = diag[i] - off * c[i - 1];
        x[i] = (b[i] - off * x[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    x
}
