//! XUV attosecond pulse train plus NIR probe.
//!
//! `E(t) = Σ_q E_q·g_X(t)·cos(q·2ω·t + φ_q) + E_p·g_P(t−τ)·cos(ω(t−τ))`
//! with Gaussian field envelopes `g(t) = exp(−2 ln2 · t²/T²)`, so that `T` is
//! the intensity FWHM. Envelopes are shifted down by [`ENVELOPE_CUTOFF`] so the
//! field switches on and off continuously.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{field_from_intensity, fs_to_au, photon_energy};

/// Field envelope level at which a pulse is considered over.
pub const ENVELOPE_CUTOFF: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseTrainSpec {
    /// Probe wavelength (nm); harmonics are odd multiples of twice its frequency.
    pub fundamental_nm: f64,
    /// Odd harmonic orders of 2ω.
    pub harmonic_orders: Vec<u32>,
    /// Per-harmonic phases; empty means all zero.
    #[serde(default)]
    pub harmonic_phases: Vec<f64>,
    pub harmonic_duration_fs: f64,
    pub harmonic_intensity_w_cm2: f64,
    pub probe_duration_fs: f64,
    pub probe_intensity_w_cm2: f64,
}

impl PulseTrainSpec {
    /// Scaled-down train: harmonics 5–13 of 400 nm, 5 fs envelopes.
    pub fn desk() -> Self {
        Self {
            fundamental_nm: 800.0,
            harmonic_orders: vec![5, 7, 9, 11, 13],
            harmonic_phases: vec![],
            harmonic_duration_fs: 5.0,
            harmonic_intensity_w_cm2: 1e9,
            probe_duration_fs: 5.0,
            probe_intensity_w_cm2: 1e11,
        }
    }

    /// Eight harmonics 5–19 of 400 nm with 20 fs envelopes.
    pub fn full() -> Self {
        Self {
            harmonic_orders: (5..=19).step_by(2).collect(),
            harmonic_duration_fs: 20.0,
            probe_duration_fs: 20.0,
            ..Self::desk()
        }
    }

    pub fn validate(&self) -> Result<()> {
        photon_energy(self.fundamental_nm)?;
        if self.harmonic_orders.iter().any(|q| q % 2 == 0) {
            return Err(Error::config("harmonic orders must be odd"));
        }
        if !self.harmonic_phases.is_empty() && self.harmonic_phases.len() != self.harmonic_orders.len() {
            return Err(Error::config("harmonic_phases must be empty or match harmonic_orders"));
        }
        if !(self.harmonic_duration_fs > 0.0) || !(self.probe_duration_fs > 0.0) {
            return Err(Error::config("pulse durations must be positive"));
        }
        if !(self.harmonic_intensity_w_cm2 >= 0.0) || !(self.probe_intensity_w_cm2 >= 0.0) {
            return Err(Error::config("intensities must be nonnegative"));
        }
        Ok(())
    }

    pub fn omega(&self) -> Result<f64> {
        photon_energy(self.fundamental_nm)
    }

    /// Field model at probe delay `tau` (a.u.).
    pub fn at_delay(&self, tau: f64) -> Result<Field> {
        self.validate()?;
        let omega = self.omega()?;
        let e_x = field_from_intensity(self.harmonic_intensity_w_cm2)?;
        let harmonics = self
            .harmonic_orders
            .iter()
            .enumerate()
            .map(|(i, &q)| (e_x, 2.0 * omega * q as f64, self.harmonic_phases.get(i).copied().unwrap_or(0.0)))
            .collect();
        Ok(Field {
            harmonics,
            xuv_width: fs_to_au(self.harmonic_duration_fs),
            probe_amplitude: field_from_intensity(self.probe_intensity_w_cm2)?,
            probe_width: fs_to_au(self.probe_duration_fs),
            omega,
            tau,
        })
    }
}

/// Half-width (a.u.) beyond which a Gaussian field envelope of intensity FWHM
/// `fwhm` stays below [`ENVELOPE_CUTOFF`].
pub fn support_half_width(fwhm: f64) -> f64 {
    fwhm * ((1.0 / ENVELOPE_CUTOFF).ln() / (2.0 * LN_2)).sqrt()
}

/// Gaussian lowered by the cutoff and rescaled, so it reaches zero at the
/// support edge instead of jumping there. An abrupt cut leaves a broadband
/// floor about 1e-5 of the harmonic peaks in the spectrum.
fn envelope(t: f64, fwhm: f64) -> f64 {
    let g = (-2.0 * LN_2 * t * t / (fwhm * fwhm)).exp();
    ((g - ENVELOPE_CUTOFF) / (1.0 - ENVELOPE_CUTOFF)).max(0.0)
}

/// Evaluable field for one delay.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    /// `(amplitude, angular frequency, phase)` per harmonic.
    pub harmonics: Vec<(f64, f64, f64)>,
    pub xuv_width: f64,
    pub probe_amplitude: f64,
    pub probe_width: f64,
    pub omega: f64,
    pub tau: f64,
}

impl Field {
    pub fn xuv(&self, t: f64) -> f64 {
        let g = envelope(t, self.xuv_width);
        g * self.harmonics.iter().map(|&(a, w, p)| a * (w * t + p).cos()).sum::<f64>()
    }

    pub fn probe(&self, t: f64) -> f64 {
        let s = t - self.tau;
        self.probe_amplitude * envelope(s, self.probe_width) * (self.omega * s).cos()
    }

    pub fn at(&self, t: f64) -> f64 {
        self.xuv(t) + self.probe(t)
    }

    /// Interval covering both pulses down to [`ENVELOPE_CUTOFF`].
    pub fn support(&self) -> (f64, f64) {
        let wx = support_half_width(self.xuv_width);
        let wp = support_half_width(self.probe_width);
        let has_xuv = self.harmonics.iter().any(|h| h.0 != 0.0);
        let has_probe = self.probe_amplitude != 0.0;
        match (has_xuv, has_probe) {
            (true, true) => ((-wx).min(self.tau - wp), wx.max(self.tau + wp)),
            (false, true) => (self.tau - wp, self.tau + wp),
            _ => (-wx, wx),
        }
    }
}

/// Samples `E(t)` on `t_grid`, which must cover the pulse support.
pub fn build_field(spec: &PulseTrainSpec, tau: f64, t_grid: &[f64]) -> Result<Vec<f64>> {
    let field = spec.at_delay(tau)?;
    let (a, b) = field.support();
    let first = t_grid.first().copied().unwrap_or(f64::NAN);
    let last = t_grid.last().copied().unwrap_or(f64::NAN);
    if !(first <= a && last >= b) {
        return Err(Error::precondition(format!(
            "time grid [{first}, {last}] does not cover the pulses [{a:.1}, {b:.1}]"
        )));
    }
    Ok(t_grid.iter().map(|&t| field.at(t)).collect())
}
