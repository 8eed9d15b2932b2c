//! Photoelectron spectra by projection onto the field-free box eigenstates.

use rayon::prelude::*;

use super::eigen::{eigensystem, EigenSystem};
use super::grid::{RadialGrid, RadialOperator};
use super::propagate::PartialWaveState;
use crate::error::{Error, Result};

/// Eigenstates of every partial wave below `e_max`, computed once per grid.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    pub grid: RadialGrid,
    pub e_max: f64,
    pub systems: Vec<EigenSystem>,
}

impl SpectralBasis {
    pub fn new(grid: &RadialGrid, l_max: u32, z: f64, e_max: f64) -> Result<Self> {
        if !(e_max > 0.0) {
            return Err(Error::precondition("spectral basis needs a positive energy cutoff"));
        }
        let systems = (0..=l_max)
            .into_par_iter()
            .map(|ell| eigensystem(&RadialOperator::new(grid, ell, z), e_max))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { grid: *grid, e_max, systems })
    }

    /// `|⟨n ℓ|ψ⟩|²` for every stored eigenstate.
    pub fn populations(&self, state: &PartialWaveState) -> Result<Vec<Vec<f64>>> {
        if state.u.len() > self.systems.len() || state.grid != self.grid {
            return Err(Error::precondition("state does not match the spectral basis"));
        }
        let h = self.grid.dr;
        Ok(state
            .u
            .iter()
            .zip(&self.systems)
            .map(|(u, sys)| {
                (0..sys.len())
                    .map(|k| {
                        let (mut re, mut im) = (0.0, 0.0);
                        for (x, v) in sys.vector(k).iter().zip(u) {
                            re += x * v.re;
                            im += x * v.im;
                        }
                        (re * re + im * im) * h * h
                    })
                    .collect()
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhotoelectronSpectrum {
    /// Energies (a.u.).
    pub energy: Vec<f64>,
    /// Angle-integrated probability density per unit energy.
    pub density: Vec<f64>,
    /// Density per partial wave.
    pub partial: Vec<Vec<f64>>,
    pub bound: f64,
    pub continuum: f64,
    /// Norm of the state.
    pub norm: f64,
}

impl PhotoelectronSpectrum {
    /// Population above the basis cutoff.
    pub fn unresolved(&self) -> f64 {
        self.norm - self.bound - self.continuum
    }
}

/// Projects the state on the continuum eigenstates and spreads each discrete
/// population `P_n` over its level spacing. The density is linearly
/// interpolated onto `energy`.
pub fn photoelectron_spectrum(state: &PartialWaveState, basis: &SpectralBasis, energy: &[f64]) -> Result<PhotoelectronSpectrum> {
    if let Some(&e) = energy.iter().find(|&&e| e > basis.e_max) {
        return Err(Error::precondition(format!("energy {e} exceeds the spectral basis cutoff {}", basis.e_max)));
    }
    let pops = basis.populations(state)?;
    let mut bound = 0.0;
    let mut continuum = 0.0;
    let mut partial = Vec::with_capacity(pops.len());
    for (p, sys) in pops.iter().zip(&basis.systems) {
        let first = sys.first_continuum();
        bound += p[..first].iter().sum::<f64>();
        continuum += p[first..].iter().sum::<f64>();
        let e = &sys.energies[first..];
        let p = &p[first..];
        let m = e.len();
        let rho: Vec<f64> = (0..m)
            .map(|k| {
                let spacing = match (k, m) {
                    (_, 1) => 1.0,
                    (0, _) => e[1] - e[0],
                    (k, m) if k == m - 1 => e[k] - e[k - 1],
                    (k, _) => 0.5 * (e[k + 1] - e[k - 1]),
                };
                p[k] / spacing
            })
            .collect();
        partial.push(energy.iter().map(|&x| interpolate(e, &rho, x)).collect::<Vec<f64>>());
    }
    let density = (0..energy.len()).map(|j| partial.iter().map(|c| c[j]).sum()).collect();
    Ok(PhotoelectronSpectrum { energy: energy.to_vec(), density, partial, bound, continuum, norm: state.norm() })
}

fn interpolate(x: &[f64], y: &[f64], at: f64) -> f64 {
    if x.len() < 2 || at < x[0] || at > x[x.len() - 1] {
        return 0.0;
    }
    let k = x.partition_point(|&v| v <= at).clamp(1, x.len() - 1);
    let t = (at - x[k - 1]) / (x[k] - x[k - 1]);
    y[k - 1] * (1.0 - t) + y[k] * t
}
