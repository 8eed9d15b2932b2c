//! Hartree atomic units and the kinematic maps used across the crate.
//!
//! Everything inside the library is in atomic units. Conversions to eV, nm,
//! fs, as and W/cm² happen only at input/output boundaries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hartree energy in eV (CODATA 2018).
pub const HARTREE_EV: f64 = 27.211_386_245_988;
/// Bohr radius in nm (CODATA 2018).
pub const BOHR_NM: f64 = 0.052_917_721_090_3;
/// Speed of light in atomic units (inverse fine-structure constant, CODATA 2018).
pub const SPEED_OF_LIGHT_AU: f64 = 137.035_999_084;
/// Atomic unit of time in attoseconds (CODATA 2018).
pub const AU_TIME_AS: f64 = 24.188_843_265_857;
/// Atomic unit of intensity in W/cm², `I = E² · I_AU` for a linearly polarized peak field `E`.
pub const INTENSITY_AU_W_CM2: f64 = 3.509_447_5e16;

pub fn ev_to_au(ev: f64) -> f64 {
    ev / HARTREE_EV
}

pub fn au_to_ev(au: f64) -> f64 {
    au * HARTREE_EV
}

pub fn fs_to_au(fs: f64) -> f64 {
    fs * 1000.0 / AU_TIME_AS
}

pub fn au_to_fs(au: f64) -> f64 {
    au * AU_TIME_AS / 1000.0
}

pub fn au_to_as(au: f64) -> f64 {
    au * AU_TIME_AS
}

/// Peak field amplitude (a.u.) for a cycle-averaged intensity given in W/cm².
pub fn field_from_intensity(intensity_w_cm2: f64) -> Result<f64> {
    if !(intensity_w_cm2 >= 0.0) || !intensity_w_cm2.is_finite() {
        return Err(Error::precondition(format!(
            "intensity must be nonnegative and finite, got {intensity_w_cm2}"
        )));
    }
    Ok((intensity_w_cm2 / INTENSITY_AU_W_CM2).sqrt())
}

/// Photon energy in atomic units for a vacuum wavelength in nm, `2πc/λ`.
pub fn photon_energy(wavelength_nm: f64) -> Result<f64> {
    if !(wavelength_nm > 0.0) {
        return Err(Error::precondition(format!(
            "wavelength must be positive, got {wavelength_nm} nm"
        )));
    }
    if wavelength_nm.is_infinite() {
        return Ok(0.0);
    }
    let lambda_au = wavelength_nm / BOHR_NM;
    Ok(2.0 * std::f64::consts::PI * SPEED_OF_LIGHT_AU / lambda_au)
}

/// Nonrelativistic momentum `k = √(2ε)`.
pub fn momentum_from_energy(energy: f64) -> Result<f64> {
    if !(energy >= 0.0) {
        return Err(Error::precondition(format!(
            "kinetic energy must be nonnegative, got {energy} a.u."
        )));
    }
    Ok((2.0 * energy).sqrt())
}

pub fn energy_from_momentum(k: f64) -> f64 {
    0.5 * k * k
}

/// Converts a RABBITT phase to a delay, `t = φ / (4ω)`.
pub fn phase_to_delay(phase: f64, omega: f64) -> f64 {
    phase / (4.0 * omega)
}

/// Monotone list of photoelectron kinetic energies (a.u.).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyGrid(Vec<f64>);

impl EnergyGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::precondition("energy grid is empty"));
        }
        if values.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
            return Err(Error::precondition("energy grid values must be positive"));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::precondition("energy grid must be strictly increasing"));
        }
        Ok(Self(values))
    }

    /// Uniform grid `start, start+step, ...` not exceeding `stop`.
    pub fn uniform(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(stop > start) {
            return Err(Error::precondition("invalid uniform energy grid bounds"));
        }
        let n = ((stop - start) / step).floor() as usize + 1;
        Self::new((0..n).map(|i| start + i as f64 * step).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Which member of a three-sideband group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Lower,
    Center,
    Higher,
}

impl Band {
    pub const ALL: [Band; 3] = [Band::Lower, Band::Center, Band::Higher];

    /// Number of probe photons above `H_{q-1}`.
    pub fn rung(self) -> u32 {
        match self {
            Band::Lower => 1,
            Band::Center => 2,
            Band::Higher => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Band::Lower => "lower",
            Band::Center => "center",
            Band::Higher => "higher",
        }
    }
}

impl std::fmt::Display for Band {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Band {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lower" | "l" => Ok(Band::Lower),
            "center" | "c" => Ok(Band::Center),
            "higher" | "h" => Ok(Band::Higher),
            other => Err(Error::config(format!("unknown band '{other}'"))),
        }
    }
}

/// Energy ladder of one three-sideband group: `H_{q-1}`, `S_l`, `S_c`, `S_h`, `H_{q+1}`.
///
/// Only the base energy `H_{q-1}` and the probe quantum are stored; all rungs are
/// derived so that the spacing is exactly `ω`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SidebandLadder {
    /// Even group order `q`. `None` when the ladder was built from a continuous energy.
    pub q: Option<u32>,
    pub omega: f64,
    pub ip: f64,
    base: f64,
}

impl SidebandLadder {
    /// Energy of rung `n` above `H_{q-1}` (`n = 0..=4`).
    pub fn rung(&self, n: u32) -> f64 {
        self.base + n as f64 * self.omega
    }

    pub fn lower_harmonic(&self) -> f64 {
        self.rung(0)
    }

    pub fn upper_harmonic(&self) -> f64 {
        self.rung(4)
    }

    pub fn band(&self, band: Band) -> f64 {
        self.rung(band.rung())
    }

    pub fn energies(&self) -> [f64; 5] {
        [self.rung(0), self.rung(1), self.rung(2), self.rung(3), self.rung(4)]
    }

    /// Ladder whose center sideband sits at `center` (a.u.), used for continuous phase curves.
    pub fn from_center_energy(center: f64, omega: f64, ip: f64) -> Result<Self> {
        if !(omega > 0.0) {
            return Err(Error::precondition("probe frequency must be positive"));
        }
        let base = center - 2.0 * omega;
        if !(base > 0.0) {
            return Err(Error::precondition(format!(
                "lower harmonic at {:.4} eV is below threshold",
                au_to_ev(base)
            )));
        }
        Ok(Self { q: None, omega, ip, base })
    }
}

/// Builds the ladder of group `q` for harmonics `(q±1)·2ω` ionizing a target with potential `ip`.
pub fn sideband_ladder(q: u32, omega: f64, ip: f64) -> Result<SidebandLadder> {
    if q % 2 != 0 || q < 2 {
        return Err(Error::precondition(format!("group order q={q} must be an even integer ≥ 2")));
    }
    if !(omega > 0.0) || !(ip >= 0.0) {
        return Err(Error::precondition("probe frequency must be positive and Ip nonnegative"));
    }
    let base = (q - 1) as f64 * 2.0 * omega - ip;
    if !(base > 0.0) {
        return Err(Error::precondition(format!(
            "H_{} lies {:.4} eV below threshold",
            q - 1,
            au_to_ev(-base)
        )));
    }
    Ok(SidebandLadder { q: Some(q), omega, ip, base })
}

/// Photoelectron energy of harmonic `order` (odd multiple of 2ω).
pub fn harmonic_peak(order: u32, omega: f64, ip: f64) -> f64 {
    order as f64 * 2.0 * omega - ip
}
