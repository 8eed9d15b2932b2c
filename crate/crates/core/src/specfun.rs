//! Complex log-Gamma and arg-Gamma.
//!
//! `log_gamma` is evaluated with the Stirling series after shifting the argument
//! to `Re z ≥ 15` with the recurrence `log Γ(z) = log Γ(z+n) − Σ log(z+k)`.
//! Summing principal logarithms yields the branch of `log Γ` that is analytic
//! off the negative real axis, with no 2π jumps in the imaginary part. The
//! imaginary part is reduced to `(−π, π]` only by [`arg_gamma`].

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexVal = Complex64;

const SHIFT_TO: f64 = 15.0;
/// ½·ln(2π)
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// `B_{2n} / (2n(2n−1))` for n = 1..=10.
const STIRLING: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
    43_867.0 / 244_188.0,
    -174_611.0 / 125_400.0,
];

fn check(z: Complex64) -> Result<()> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::precondition(format!("non-finite Gamma argument {z}")));
    }
    if z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round() {
        return Err(Error::precondition(format!("Gamma has a pole at {}", z.re)));
    }
    Ok(())
}

fn stirling(z: Complex64) -> Complex64 {
    let inv = z.inv();
    let inv2 = inv * inv;
    let mut series = Complex64::new(0.0, 0.0);
    let mut pow = inv;
    for c in STIRLING {
        series += pow * c;
        pow *= inv2;
    }
    (z - 0.5) * z.ln() - z + HALF_LN_2PI + series
}

/// Principal-branch `log Γ(z)`, continuous in `z` off the negative real axis.
pub fn log_gamma(z: ComplexVal) -> Result<ComplexVal> {
    check(z)?;
    if z.im == 0.0 && z.re > 0.0 {
        // keep real arguments exactly real
        let v = log_gamma_shifted(Complex64::new(z.re, 0.0));
        return Ok(Complex64::new(v.re, 0.0));
    }
    Ok(log_gamma_shifted(z))
}

fn log_gamma_shifted(z: Complex64) -> Complex64 {
    let mut shifted = z;
    let mut acc = Complex64::new(0.0, 0.0);
    while shifted.re < SHIFT_TO {
        acc += shifted.ln();
        shifted += 1.0;
    }
    stirling(shifted) - acc
}

/// Reduces an angle to `(−π, π]`.
pub fn wrap_phase(phase: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut p = phase % two_pi;
    if p <= -PI {
        p += two_pi;
    } else if p > PI {
        p -= two_pi;
    }
    p
}

/// `arg Γ(z)` reduced to the principal interval `(−π, π]`.
pub fn arg_gamma(z: ComplexVal) -> Result<f64> {
    Ok(wrap_phase(log_gamma(z)?.im))
}

/// Continuous (unreduced) `Im log Γ(z)`.
pub fn arg_gamma_unwrapped(z: ComplexVal) -> Result<f64> {
    Ok(log_gamma(z)?.im)
}
