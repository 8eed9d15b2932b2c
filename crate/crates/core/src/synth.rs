//! Perturbative RABBITT spectrogram generator.
//!
//! Every peak in the spectrum is the coherent sum of the quantum paths that
//! reach it. A path of order `N` starting from harmonic `q` contributes
//!
//! ```text
//! A = s_N · E_q · E_ω^{N−1} · exp(i[φ_q + arg M + (n_abs − n_emit)·ω_p·τ])
//! ```
//!
//! with `arg M` from the decomposition phase engine and `s_N` one coupling
//! constant per order. The spectral profile of each peak is a Gaussian.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phases::{band_paths, decompose_path_phase, higher_order_paths, PhaseOptions, PhotonPath, ProbeStep};
use crate::scan::{DelayScan, ScanMeta, Scheme};
use crate::units::{
    ev_to_au, field_from_intensity, fs_to_au, harmonic_peak, photon_energy, sideband_ladder, Band,
};

/// One harmonic of the XUV comb.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    /// Odd order `q` of the 2ω quantum.
    pub order: u32,
    /// Spectral phase `φ_q` (rad).
    #[serde(default)]
    pub phase: f64,
    /// Peak intensity (W/cm²).
    pub intensity_w_cm2: f64,
}

/// Uniform delay axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayGrid {
    pub start_fs: f64,
    pub step_fs: f64,
    pub count: usize,
}

impl DelayGrid {
    /// `per_period` samples per `4ω` period over `periods` periods, starting at zero.
    pub fn over_periods(omega: f64, periods: usize, per_period: usize) -> Self {
        let period_au = 2.0 * PI / (4.0 * omega);
        let step = period_au / per_period as f64;
        Self { start_fs: 0.0, step_fs: crate::units::au_to_fs(step), count: periods * per_period }
    }

    /// Same sampling as [`DelayGrid::over_periods`], symmetric about zero delay.
    pub fn centered(omega: f64, periods: usize, per_period: usize) -> Self {
        let g = Self::over_periods(omega, periods, per_period);
        Self { start_fs: -0.5 * (g.count as f64 - 1.0) * g.step_fs, ..g }
    }

    pub fn values_au(&self) -> Vec<f64> {
        (0..self.count).map(|i| fs_to_au(self.start_fs + i as f64 * self.step_fs)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldConfig {
    /// Fundamental probe wavelength (nm); the probe quantum is ω in the 3SB
    /// scheme and 2ω in the 1SB scheme.
    pub probe_wavelength_nm: f64,
    pub probe_intensity_w_cm2: f64,
    pub probe_duration_fs: f64,
    pub harmonics: Vec<Harmonic>,
    pub delays: DelayGrid,
}

impl FieldConfig {
    pub fn omega(&self) -> Result<f64> {
        photon_energy(self.probe_wavelength_nm)
    }

    pub fn validate(&self) -> Result<()> {
        if self.harmonics.is_empty() {
            return Err(Error::config("no harmonics configured"));
        }
        for h in &self.harmonics {
            if h.order % 2 == 0 {
                return Err(Error::config(format!("harmonic order {} is not odd", h.order)));
            }
            if !(h.intensity_w_cm2 >= 0.0) {
                return Err(Error::config(format!("harmonic {} has negative intensity", h.order)));
            }
        }
        let mut orders: Vec<_> = self.harmonics.iter().map(|h| h.order).collect();
        orders.sort_unstable();
        if orders.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::config("duplicate harmonic orders"));
        }
        if !(self.probe_intensity_w_cm2 >= 0.0) || !(self.probe_duration_fs > 0.0) {
            return Err(Error::config("probe intensity must be ≥ 0 and duration > 0"));
        }
        if self.delays.count == 0 || !(self.delays.step_fs > 0.0) {
            return Err(Error::config("delay grid must have a positive step and at least one point"));
        }
        self.omega()?;
        Ok(())
    }

    fn harmonic(&self, order: u32) -> Option<&Harmonic> {
        self.harmonics.iter().find(|h| h.order == order)
    }

    pub fn orders(&self) -> Vec<u32> {
        let mut o: Vec<_> = self.harmonics.iter().map(|h| h.order).collect();
        o.sort_unstable();
        o
    }
}

/// Per-order coupling constants `s_1 … s_4` (a.u.).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderCoupling(pub [f64; 4]);

impl Default for OrderCoupling {
    /// Each probe exchange scales the amplitude by ≈ 0.5 at 10¹¹ W/cm².
    fn default() -> Self {
        let s = 300.0;
        Self([1.0, s, s * s, s * s * s])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthOptions {
    #[serde(default = "default_z")]
    pub z: f64,
    #[serde(default = "default_lambda")]
    pub lambda: u32,
    /// Ionization potential (a.u.).
    #[serde(default = "default_ip")]
    pub ip: f64,
    /// Gaussian peak FWHM (a.u.).
    #[serde(default = "default_fwhm")]
    pub peak_fwhm: f64,
    /// Energy bin width (a.u.); defaults to a tenth of the FWHM.
    #[serde(default)]
    pub energy_step: Option<f64>,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default)]
    pub coupling: OrderCoupling,
    /// Add the fourth-order paths E–G and K–M.
    #[serde(default)]
    pub include_higher_order_paths: bool,
    #[serde(default)]
    pub phase_options: PhaseOptions,
}

fn default_z() -> f64 {
    1.0
}
fn default_lambda() -> u32 {
    1
}
fn default_ip() -> f64 {
    0.5
}
fn default_fwhm() -> f64 {
    ev_to_au(0.3)
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            z: default_z(),
            lambda: default_lambda(),
            ip: default_ip(),
            peak_fwhm: default_fwhm(),
            energy_step: None,
            scheme: Scheme::ThreeSideband,
            coupling: OrderCoupling::default(),
            include_higher_order_paths: false,
            phase_options: PhaseOptions::default(),
        }
    }
}

/// A path with its static complex amplitude and its net probe-photon count.
#[derive(Debug, Clone)]
struct PathAmplitude {
    amplitude: Complex64,
    net_probe: i32,
}

/// A spectral peak and the paths feeding it.
#[derive(Debug, Clone)]
struct Peak {
    energy: f64,
    paths: Vec<PathAmplitude>,
}

impl Peak {
    fn intensity(&self, probe_quantum: f64, tau: f64) -> f64 {
        self.paths
            .iter()
            .map(|p| p.amplitude * Complex64::from_polar(1.0, p.net_probe as f64 * probe_quantum * tau))
            .sum::<Complex64>()
            .norm_sqr()
    }
}

struct Builder<'a> {
    cfg: &'a FieldConfig,
    opts: &'a SynthOptions,
    probe_field: f64,
}

impl Builder<'_> {
    fn amplitude(&self, path: &PhotonPath, harmonic: &Harmonic) -> Result<PathAmplitude> {
        let order = path.order();
        let s = *self
            .opts
            .coupling
            .0
            .get(order - 1)
            .ok_or_else(|| Error::config(format!("no coupling constant for order {order}")))?;
        let e_q = field_from_intensity(harmonic.intensity_w_cm2)?;
        let mag = s * e_q * self.probe_field.powi(order as i32 - 1);
        let phase = decompose_path_phase(path, self.opts.z, self.opts.phase_options)?.unwrapped + harmonic.phase;
        Ok(PathAmplitude { amplitude: Complex64::from_polar(mag, phase), net_probe: path.net_probe_photons() })
    }

    fn harmonic_peaks(&self) -> Result<Vec<Peak>> {
        self.cfg
            .harmonics
            .iter()
            .map(|h| {
                let e = harmonic_peak(h.order, self.cfg.omega()?, self.opts.ip);
                if !(e > 0.0) {
                    return Err(Error::precondition(format!("harmonic {} is below threshold", h.order)));
                }
                let amp = self.opts.coupling.0[0] * field_from_intensity(h.intensity_w_cm2)?;
                Ok(Peak {
                    energy: e,
                    paths: vec![PathAmplitude { amplitude: Complex64::from_polar(amp, h.phase), net_probe: 0 }],
                })
            })
            .collect()
    }

    fn three_sideband_peaks(&self, q: u32) -> Result<Vec<Peak>> {
        let omega = self.cfg.omega()?;
        let ladder = sideband_ladder(q, omega, self.opts.ip)?;
        let (lo, hi) = (self.cfg.harmonic(q - 1).unwrap(), self.cfg.harmonic(q + 1).unwrap());
        let mut peaks = Vec::with_capacity(3);
        for band in Band::ALL {
            let (emission, absorption) = band_paths(band, &ladder, self.opts.lambda)?;
            let mut paths = vec![self.amplitude(&emission, hi)?, self.amplitude(&absorption, lo)?];
            if self.opts.include_higher_order_paths {
                for p in higher_order_paths(band, &ladder, self.opts.lambda)? {
                    let source = if p.energies[0] == ladder.upper_harmonic() { hi } else { lo };
                    paths.push(self.amplitude(&p, source)?);
                }
            }
            peaks.push(Peak { energy: ladder.band(band), paths });
        }
        Ok(peaks)
    }

    fn one_sideband_peak(&self, q: u32) -> Result<Peak> {
        let probe = 2.0 * self.cfg.omega()?;
        let lower = harmonic_peak(q - 1, probe / 2.0, self.opts.ip);
        if !(lower > 0.0) {
            return Err(Error::precondition(format!("H_{} is below threshold", q - 1)));
        }
        let (lo, hi) = (self.cfg.harmonic(q - 1).unwrap(), self.cfg.harmonic(q + 1).unwrap());
        let a = PhotonPath::new("A", self.opts.lambda, lower + 2.0 * probe, probe, &[ProbeStep::Emit])?;
        let b = PhotonPath::new("B", self.opts.lambda, lower, probe, &[ProbeStep::Absorb])?;
        Ok(Peak { energy: lower + probe, paths: vec![self.amplitude(&a, hi)?, self.amplitude(&b, lo)?] })
    }
}

/// Builds a noise-free delay scan.
pub fn synthesize_scan(cfg: &FieldConfig, opts: &SynthOptions) -> Result<DelayScan> {
    cfg.validate()?;
    if !(opts.peak_fwhm > 0.0) {
        return Err(Error::precondition("peak width must be positive"));
    }
    let omega = cfg.omega()?;
    let probe_quantum = match opts.scheme {
        Scheme::ThreeSideband => omega,
        Scheme::OneSideband => 2.0 * omega,
    };
    let builder = Builder { cfg, opts, probe_field: field_from_intensity(cfg.probe_intensity_w_cm2)? };

    let meta = ScanMeta {
        source: "synth".into(),
        scheme: opts.scheme,
        omega,
        ip: opts.ip,
        z: opts.z,
        lambda: opts.lambda,
        harmonic_orders: cfg.orders(),
    };
    let mut peaks = builder.harmonic_peaks()?;
    for q in meta.groups() {
        match opts.scheme {
            Scheme::ThreeSideband => peaks.extend(builder.three_sideband_peaks(q)?),
            Scheme::OneSideband => peaks.push(builder.one_sideband_peak(q)?),
        }
    }

    let step = opts.energy_step.unwrap_or(opts.peak_fwhm / 10.0);
    if !(step > 0.0) {
        return Err(Error::precondition("energy step must be positive"));
    }
    let e_min = peaks.iter().map(|p| p.energy).fold(f64::INFINITY, f64::min);
    let e_max = peaks.iter().map(|p| p.energy).fold(f64::NEG_INFINITY, f64::max);
    let lo = (e_min - probe_quantum).max(step);
    let hi = e_max + probe_quantum;
    let n_e = ((hi - lo) / step).floor() as usize + 1;
    let energy: Vec<f64> = (0..n_e).map(|i| lo + i as f64 * step).collect();
    let delay = cfg.delays.values_au();

    let width = opts.peak_fwhm;
    let profiles: Vec<Vec<(usize, f64)>> = peaks
        .iter()
        .map(|p| {
            energy
                .iter()
                .enumerate()
                .filter_map(|(j, &e)| {
                    let x = (e - p.energy) / width;
                    (x.abs() < 4.0).then(|| (j, (-4.0 * std::f64::consts::LN_2 * x * x).exp()))
                })
                .collect()
        })
        .collect();

    let rows: Vec<Vec<f64>> = delay
        .par_iter()
        .map(|&tau| {
            let mut row = vec![0.0; n_e];
            for (peak, profile) in peaks.iter().zip(&profiles) {
                let intensity = peak.intensity(probe_quantum, tau);
                for &(j, g) in profile {
                    row[j] += intensity * g;
                }
            }
            row
        })
        .collect();
    let signal = Array2::from_shape_vec((delay.len(), n_e), rows.into_iter().flatten().collect())
        .map_err(|e| Error::numerical(e.to_string()))?;
    DelayScan::new(energy, delay, signal, meta)
}

/// Additive drift `mean_τ(s)·(c1·τ + c2·τ²)` per energy bin.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct QuadraticDrift {
    pub c1: f64,
    pub c2: f64,
}

/// Adds a slowly varying quadratic drift and Gaussian noise of standard
/// deviation `noise_rel · max(signal)`. Negative samples are clamped to zero.
pub fn apply_decay_and_noise(scan: &DelayScan, drift: QuadraticDrift, noise_rel: f64, seed: u64) -> Result<DelayScan> {
    if !(noise_rel >= 0.0) {
        return Err(Error::precondition(format!("noise level must be ≥ 0, got {noise_rel}")));
    }
    let mut out = scan.clone();
    let peak = scan.signal.iter().cloned().fold(0.0, f64::max);
    let sigma = noise_rel * peak;
    let means = scan.signal.mean_axis(ndarray::Axis(0)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = if sigma > 0.0 { Some(Normal::new(0.0, sigma).map_err(|e| Error::numerical(e.to_string()))?) } else { None };
    let mut clamped = 0usize;
    for (i, mut row) in out.signal.outer_iter_mut().enumerate() {
        let tau = scan.delay[i];
        let d = drift.c1 * tau + drift.c2 * tau * tau;
        for (j, v) in row.iter_mut().enumerate() {
            let mut x = *v + means[j] * d;
            if let Some(n) = &normal {
                x += n.sample(&mut rng);
            }
            if x < 0.0 {
                clamped += 1;
                x = 0.0;
            }
            *v = x;
        }
    }
    if clamped > 0 {
        log::warn!("clamped {clamped} negative samples to zero");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::au_to_ev;

    pub(crate) fn desk_config() -> FieldConfig {
        let omega = photon_energy(800.0).unwrap();
        FieldConfig {
            probe_wavelength_nm: 800.0,
            probe_intensity_w_cm2: 1e11,
            probe_duration_fs: 20.0,
            harmonics: (9..=13).step_by(2).map(|order| Harmonic { order, phase: 0.0, intensity_w_cm2: 1e9 }).collect(),
            delays: DelayGrid::over_periods(omega, 2, 8),
        }
    }

    #[test]
    fn zero_probe_gives_static_harmonics_only() {
        let mut cfg = desk_config();
        cfg.probe_intensity_w_cm2 = 0.0;
        let scan = synthesize_scan(&cfg, &SynthOptions::default()).unwrap();
        let first = scan.signal.row(0).to_owned();
        for row in scan.signal.outer_iter() {
            assert_eq!(row, first);
        }
        // sideband bins empty
        let omega = cfg.omega().unwrap();
        let sc = sideband_ladder(10, omega, 0.5).unwrap().band(Band::Center);
        let j = scan.energy.iter().position(|&e| (e - sc).abs() < 0.5 * scan.energy_step().unwrap()).unwrap();
        assert!(first[j] < 1e-30);
    }

    #[test]
    fn peaks_sit_on_ladder() {
        let cfg = desk_config();
        let scan = synthesize_scan(&cfg, &SynthOptions::default()).unwrap();
        let omega = cfg.omega().unwrap();
        let sc = sideband_ladder(12, omega, 0.5).unwrap().band(Band::Center);
        let row = scan.signal.row(0);
        let (jmax, _) = scan
            .energy
            .iter()
            .enumerate()
            .filter(|(_, &e)| (e - sc).abs() < omega / 2.0)
            .map(|(j, _)| (j, row[j]))
            .fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
        assert!(au_to_ev((scan.energy[jmax] - sc).abs()) < 0.05);
    }

    #[test]
    fn errors() {
        let mut cfg = desk_config();
        let opts = SynthOptions { peak_fwhm: 0.0, ..Default::default() };
        assert!(synthesize_scan(&cfg, &opts).is_err());
        cfg.harmonics[0].order = 4;
        assert!(synthesize_scan(&cfg, &SynthOptions::default()).is_err());
        let mut cfg = desk_config();
        cfg.harmonics = vec![Harmonic { order: 7, phase: 0.0, intensity_w_cm2: 1e9 }, Harmonic { order: 9, phase: 0.0, intensity_w_cm2: 1e9 }];
        let opts = SynthOptions { ip: 0.8, ..Default::default() };
        assert!(matches!(synthesize_scan(&cfg, &opts), Err(Error::Precondition(_))));
    }

    #[test]
    fn noise_identity_and_determinism() {
        let scan = synthesize_scan(&desk_config(), &SynthOptions::default()).unwrap();
        let same = apply_decay_and_noise(&scan, QuadraticDrift::default(), 0.0, 3).unwrap();
        assert_eq!(same, scan);
        let a = apply_decay_and_noise(&scan, QuadraticDrift { c1: 1e-3, c2: 0.0 }, 0.01, 42).unwrap();
        let b = apply_decay_and_noise(&scan, QuadraticDrift { c1: 1e-3, c2: 0.0 }, 0.01, 42).unwrap();
        assert_eq!(a, b);
        let c = apply_decay_and_noise(&scan, QuadraticDrift { c1: 1e-3, c2: 0.0 }, 0.01, 43).unwrap();
        assert_ne!(a, c);
        assert!(apply_decay_and_noise(&scan, QuadraticDrift::default(), -0.1, 1).is_err());
        assert!(a.signal.iter().all(|&v| v >= 0.0));
    }

    fn bin(scan: &DelayScan, e: f64) -> usize {
        scan.energy.iter().enumerate().min_by(|a, b| (a.1 - e).abs().total_cmp(&(b.1 - e).abs())).unwrap().0
    }

    /// DFT amplitude of column `j` at `k` cycles over the delay axis.
    fn dft(scan: &DelayScan, j: usize, k: f64) -> Complex64 {
        let n = scan.delay.len() as f64;
        scan.signal
            .column(j)
            .iter()
            .enumerate()
            .map(|(i, &v)| v * Complex64::from_polar(1.0, -2.0 * PI * k * i as f64 / n))
            .sum::<Complex64>()
            / n
    }

    #[test]
    fn sidebands_oscillate_at_four_omega_only() {
        let cfg = desk_config();
        let scan = synthesize_scan(&cfg, &SynthOptions::default()).unwrap();
        let omega = cfg.omega().unwrap();
        let ladder = sideband_ladder(10, omega, 0.5).unwrap();
        // two 4ω periods over the grid: the 4ω line sits at DFT index 2
        for band in Band::ALL {
            let j = bin(&scan, ladder.band(band));
            let main = dft(&scan, j, 2.0).norm();
            assert!(main > 1e-3 * dft(&scan, j, 0.0).norm());
            for k in [1.0, 3.0, 4.0, 5.0, 6.0, 7.0] {
                assert!(dft(&scan, j, k).norm() < 1e-12 * main, "band {band} k {k}");
            }
        }
        for h in [ladder.lower_harmonic(), ladder.upper_harmonic()] {
            let j = bin(&scan, h);
            let dc = dft(&scan, j, 0.0).norm();
            for k in 1..8 {
                assert!(dft(&scan, j, k as f64).norm() < 1e-12 * dc);
            }
        }
    }

    #[test]
    fn center_band_is_out_of_phase_with_side_bands() {
        let cfg = desk_config();
        let opts = SynthOptions { phase_options: PhaseOptions { antisymmetrize: true }, ..Default::default() };
        let scan = synthesize_scan(&cfg, &opts).unwrap();
        let ladder = sideband_ladder(12, cfg.omega().unwrap(), 0.5).unwrap();
        let phase = |b: Band| {
            let z = dft(&scan, bin(&scan, ladder.band(b)), 2.0);
            // DFT of cos(4ωτ − φ) at +4ω carries e^{−iφ}/2
            -z.arg()
        };
        let c = phase(Band::Center);
        assert!((crate::specfun::wrap_phase(phase(Band::Lower) - c - PI)).abs() < 1e-9);
        assert!((crate::specfun::wrap_phase(c - phase(Band::Higher) - PI)).abs() < 1e-9);
    }

    #[test]
    fn one_sideband_scheme() {
        let cfg = desk_config();
        let opts = SynthOptions { scheme: Scheme::OneSideband, ..Default::default() };
        let scan = synthesize_scan(&cfg, &opts).unwrap();
        let omega = cfg.omega().unwrap();
        let sb = harmonic_peak(9, omega, 0.5) + 2.0 * omega;
        let j = bin(&scan, sb);
        assert!(dft(&scan, j, 2.0).norm() > 1e-3 * dft(&scan, j, 0.0).norm());
    }

    #[test]
    fn higher_order_paths_keep_phases() {
        let cfg = desk_config();
        let base = synthesize_scan(&cfg, &SynthOptions { phase_options: PhaseOptions { antisymmetrize: true }, ..Default::default() }).unwrap();
        let more = synthesize_scan(
            &cfg,
            &SynthOptions { include_higher_order_paths: true, phase_options: PhaseOptions { antisymmetrize: true }, ..Default::default() },
        )
        .unwrap();
        let ladder = sideband_ladder(10, cfg.omega().unwrap(), 0.5).unwrap();
        for band in Band::ALL {
            let j = bin(&base, ladder.band(band));
            let a = dft(&base, j, 2.0).arg();
            let b = dft(&more, j, 2.0).arg();
            assert!(crate::specfun::wrap_phase(a - b).abs() < 1e-9, "{band}");
        }
    }
}
