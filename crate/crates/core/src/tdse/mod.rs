//! Radial TDSE for hydrogen in an XUV pulse train plus NIR probe.
//!
//! The wavefunction is expanded in partial waves `u_ℓ(r)/r · Y_ℓ0`, each on a
//! Numerov-discretized radial grid, and propagated in the length gauge. The
//! photoelectron spectrum is obtained by projecting on the box eigenstates of
//! the field-free Hamiltonian. A delay scan repeats this for every delay.

pub mod eigen;
pub mod field;
pub mod grid;
pub mod propagate;
pub mod spectrum;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use field::{build_field, Field, PulseTrainSpec};
pub use grid::RadialGrid;
pub use propagate::{ground_state, PartialWaveState, PropagationLog, Propagator};
pub use spectrum::{photoelectron_spectrum, PhotoelectronSpectrum, SpectralBasis};

use crate::error::{Error, Result};
use crate::manifest::Preset;
use crate::scan::{DelayScan, ScanMeta, Scheme};
use crate::synth::DelayGrid;
use crate::units::{ev_to_au, fs_to_au};

pub const TDSE_SCHEMA_VERSION: u32 = 1;

fn default_z() -> f64 {
    1.0
}

fn default_flux_tolerance() -> f64 {
    0.01
}

/// Versioned run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TdseConfig {
    pub schema_version: u32,
    pub pulses: PulseTrainSpec,
    pub grid: RadialGrid,
    pub l_max: u32,
    /// Time step (a.u.).
    pub dt: f64,
    #[serde(default = "default_z")]
    pub z: f64,
    pub delays: DelayGrid,
    /// Output energy bin width (eV).
    pub energy_step_ev: f64,
    /// Largest tolerated fraction of the ionized probability that is absorbed
    /// or lies above the spectral cutoff.
    #[serde(default = "default_flux_tolerance")]
    pub flux_tolerance: f64,
}

impl TdseConfig {
    /// Desk scale: harmonics 5–13 of 400 nm, 5 fs pulses, 16 delays over two
    /// 4ω periods centered on the pulse overlap.
    pub fn desk() -> Self {
        let pulses = PulseTrainSpec::desk();
        let omega = pulses.omega().expect("valid wavelength");
        Self {
            schema_version: TDSE_SCHEMA_VERSION,
            pulses,
            grid: RadialGrid { r_max: 1600.0, dr: 0.15, absorber_fraction: 0.2 },
            l_max: 6,
            dt: 0.1,
            z: 1.0,
            delays: DelayGrid::centered(omega, 2, 8),
            energy_step_ev: 0.02,
            flux_tolerance: default_flux_tolerance(),
        }
    }

    /// Eight harmonics with 20 fs pulses. Hours of CPU time.
    pub fn paper() -> Self {
        let pulses = PulseTrainSpec::full();
        let omega = pulses.omega().expect("valid wavelength");
        Self {
            pulses,
            grid: RadialGrid { r_max: 5000.0, dr: 0.15, absorber_fraction: 0.2 },
            l_max: 8,
            delays: DelayGrid::centered(omega, 2, 8),
            ..Self::desk()
        }
    }

    pub fn preset(preset: Preset) -> Self {
        match preset {
            Preset::Desk => Self::desk(),
            Preset::Paper => Self::paper(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != TDSE_SCHEMA_VERSION {
            return Err(Error::config(format!(
                "unsupported tdse schema_version {} (expected {TDSE_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.pulses.validate()?;
        self.grid.validate()?;
        if self.l_max < 5 {
            return Err(Error::config("l_max must be at least 5 for three-sideband paths"));
        }
        if !(self.dt > 0.0) || !(self.energy_step_ev > 0.0) {
            return Err(Error::config("dt and energy_step_ev must be positive"));
        }
        if !(self.z > 0.0) {
            return Err(Error::config("the TDSE needs a positive nuclear charge"));
        }
        if self.delays.count == 0 || !(self.delays.step_fs > 0.0) {
            return Err(Error::config("delay grid must have a positive step and at least one point"));
        }
        let period = 2.0 * std::f64::consts::PI / (4.0 * self.pulses.omega()?);
        if self.delays.count > 1 && fs_to_au(self.delays.step_fs) > period / 8.0 * (1.0 + 1e-9) {
            return Err(Error::config("delay grid needs at least 8 points per 4ω period"));
        }
        if !(self.flux_tolerance > 0.0) {
            return Err(Error::config("flux_tolerance must be positive"));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::config(format!("invalid tdse config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Highest output energy: top harmonic plus three probe photons and a margin.
    fn spectrum_top(&self, ip: f64) -> Result<f64> {
        let omega = self.pulses.omega()?;
        let q = self.pulses.harmonic_orders.iter().copied().max().unwrap_or(1) as f64;
        Ok(q * 2.0 * omega - ip + 4.0 * omega)
    }
}

/// Per-delay provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayLog {
    /// Delay (a.u.).
    pub tau: f64,
    pub propagation: PropagationLog,
    pub bound_population: f64,
    pub continuum_population: f64,
    /// Population above the spectral cutoff.
    pub unresolved: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TdseProvenance {
    pub config: TdseConfig,
    pub ground_energy: f64,
    pub grid_points: usize,
    pub basis_cutoff: f64,
    pub basis_states: Vec<usize>,
    pub runs: Vec<DelayLog>,
}

/// Everything shared by the propagations of one scan.
pub struct ScanContext {
    pub config: TdseConfig,
    pub propagator: Propagator,
    pub basis: SpectralBasis,
    pub ground: PartialWaveState,
    pub ground_energy: f64,
    pub energy: Vec<f64>,
}

impl ScanContext {
    pub fn new(config: &TdseConfig) -> Result<Self> {
        config.validate()?;
        let (ground, e0) = ground_state(&config.grid, config.z, config.l_max)?;
        let top = config.spectrum_top(-e0)?;
        let step = ev_to_au(config.energy_step_ev);
        let n = (top / step).floor() as usize;
        let energy: Vec<f64> = (1..=n).map(|i| i as f64 * step).collect();
        if energy.len() < 2 {
            return Err(Error::config("energy_step_ev too coarse for the spectrum range"));
        }
        let basis = SpectralBasis::new(&config.grid, config.l_max, config.z, top + 0.05)?;
        let propagator = Propagator::new(&config.grid, config.l_max, config.z, config.dt)?;
        Ok(Self { config: config.clone(), propagator, basis, ground, ground_energy: e0, energy })
    }

    /// Propagates through the pulses at delay `tau` and returns the spectrum.
    pub fn run_delay(&self, tau: f64) -> Result<(PhotoelectronSpectrum, DelayLog)> {
        let field = self.config.pulses.at_delay(tau)?;
        let (t0, t1) = field.support();
        let n_steps = ((t1 - t0) / self.config.dt).ceil() as usize;
        let mut state = self.ground.clone();
        let log = self.propagator.propagate(&mut state, |t| field.at(t), t0, n_steps)?;
        let spectrum = photoelectron_spectrum(&state, &self.basis, &self.energy)?;
        let ionized = log.initial_norm - spectrum.bound;
        let lost = log.absorbed + spectrum.unresolved().max(0.0);
        if ionized > 0.0 && lost > self.config.flux_tolerance * ionized {
            return Err(Error::numerical(format!(
                "at τ = {tau:.3} a.u. {:.2}% of the ionized flux was absorbed or lies above the spectral cutoff; enlarge r_max",
                100.0 * lost / ionized
            )));
        }
        let entry = DelayLog {
            tau,
            propagation: log,
            bound_population: spectrum.bound,
            continuum_population: spectrum.continuum,
            unresolved: spectrum.unresolved(),
        };
        Ok((spectrum, entry))
    }

    pub fn scan_meta(&self) -> Result<ScanMeta> {
        let mut orders = self.config.pulses.harmonic_orders.clone();
        orders.sort_unstable();
        Ok(ScanMeta {
            source: "tdse".into(),
            scheme: Scheme::ThreeSideband,
            omega: self.config.pulses.omega()?,
            ip: -self.ground_energy,
            z: self.config.z,
            lambda: 1,
            harmonic_orders: orders,
        })
    }
}

/// One propagation and spectrum per delay, assembled into a scan.
pub fn run_rabbitt_scan(config: &TdseConfig) -> Result<(DelayScan, TdseProvenance)> {
    let ctx = ScanContext::new(config)?;
    let delays = config.delays.values_au();
    log::info!(
        "tdse: {} grid points, ℓ_max {}, {} basis states, {} delays",
        config.grid.len(),
        config.l_max,
        ctx.basis.systems.iter().map(|s| s.len()).sum::<usize>(),
        delays.len()
    );
    let results = delays
        .par_iter()
        .map(|&tau| {
            let out = ctx.run_delay(tau);
            log::info!("tdse: delay {tau:.3} a.u. done");
            out
        })
        .collect::<Result<Vec<_>>>()?;
    let n_e = ctx.energy.len();
    let mut signal = Array2::zeros((delays.len(), n_e));
    let mut runs = Vec::with_capacity(delays.len());
    for (i, (spec, entry)) in results.into_iter().enumerate() {
        for (j, &d) in spec.density.iter().enumerate() {
            signal[[i, j]] = d.max(0.0);
        }
        runs.push(entry);
    }
    let scan = DelayScan::new(ctx.energy.clone(), delays, signal, ctx.scan_meta()?)?;
    let provenance = TdseProvenance {
        config: config.clone(),
        ground_energy: ctx.ground_energy,
        grid_points: config.grid.len(),
        basis_cutoff: ctx.basis.e_max,
        basis_states: ctx.basis.systems.iter().map(|s| s.len()).collect(),
        runs,
    };
    Ok((scan, provenance))
}
