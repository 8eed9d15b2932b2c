//! The delay-scan container shared by the synthesizer, the TDSE driver and the fitter.
//!
//! Two on-disk forms are supported:
//!
//! * JSON container (`format = "rabbitt-delay-scan"`, `version = 1`): axes in
//!   atomic units, a row of signal values per delay, metadata and the run manifest.
//! * Long-form CSV (`energy_au,energy_ev,delay_au,delay_fs,signal`), preceded by
//!   `#`-prefixed header lines carrying the format tag and the manifest as JSON.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifest::RunManifest;
use crate::units::{au_to_ev, au_to_fs, sideband_ladder, SidebandLadder};

pub const SCAN_FORMAT: &str = "rabbitt-delay-scan";
pub const SCAN_VERSION: u32 = 1;

/// Sideband scheme of a scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Scheme {
    /// Probe at 2ω, one sideband between harmonics.
    #[serde(rename = "1sb")]
    OneSideband,
    /// Probe at ω, three sidebands between harmonics.
    #[serde(rename = "3sb")]
    #[default]
    ThreeSideband,
}

/// Physical context needed to locate sidebands in a scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanMeta {
    /// "synth" or "tdse".
    pub source: String,
    pub scheme: Scheme,
    /// Fundamental probe frequency ω (a.u.); harmonics are odd multiples of 2ω.
    pub omega: f64,
    /// Ionization potential (a.u.).
    pub ip: f64,
    /// Residual ion charge.
    pub z: f64,
    /// Bound-continuum channel.
    pub lambda: u32,
    /// Odd harmonic orders of 2ω present in the pump.
    pub harmonic_orders: Vec<u32>,
}

impl ScanMeta {
    /// Even group orders `q` with both `q−1` and `q+1` present.
    pub fn groups(&self) -> Vec<u32> {
        let mut orders = self.harmonic_orders.clone();
        orders.sort_unstable();
        orders
            .windows(2)
            .filter(|w| w[1] == w[0] + 2)
            .map(|w| w[0] + 1)
            .collect()
    }

    /// Ladder of group `q`. For the one-sideband scheme the ladder is built
    /// with the 2ω probe quantum, so only `lower_harmonic + ω_probe` is a sideband.
    pub fn ladder(&self, q: u32) -> Result<SidebandLadder> {
        sideband_ladder(q, self.omega, self.ip)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelayScan {
    /// Photoelectron energies (a.u.), strictly increasing.
    pub energy: Vec<f64>,
    /// Pump–probe delays (a.u.).
    pub delay: Vec<f64>,
    /// Signal, shape `(delay.len(), energy.len())`, nonnegative.
    pub signal: Array2<f64>,
    pub meta: ScanMeta,
    pub manifest: Option<RunManifest>,
}

#[derive(Serialize, Deserialize)]
struct ScanFile {
    format: String,
    version: u32,
    meta: ScanMeta,
    #[serde(default)]
    manifest: Option<RunManifest>,
    energy_au: Vec<f64>,
    delay_au: Vec<f64>,
    signal: Vec<Vec<f64>>,
}

impl DelayScan {
    pub fn new(energy: Vec<f64>, delay: Vec<f64>, signal: Array2<f64>, meta: ScanMeta) -> Result<Self> {
        let scan = Self { energy, delay, signal, meta, manifest: None };
        scan.validate()?;
        Ok(scan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.energy.is_empty() || self.delay.is_empty() {
            return Err(Error::config("scan axes must be nonempty"));
        }
        if self.energy.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("scan energy axis must be strictly increasing"));
        }
        if self.signal.dim() != (self.delay.len(), self.energy.len()) {
            return Err(Error::config(format!(
                "signal shape {:?} does not match axes ({}, {})",
                self.signal.dim(),
                self.delay.len(),
                self.energy.len()
            )));
        }
        if self.signal.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::config("scan signal must be finite and nonnegative"));
        }
        Ok(())
    }

    pub fn energy_step(&self) -> Option<f64> {
        (self.energy.len() > 1).then(|| self.energy[1] - self.energy[0])
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ScanFile {
            format: SCAN_FORMAT.into(),
            version: SCAN_VERSION,
            meta: self.meta.clone(),
            manifest: self.manifest.clone(),
            energy_au: self.energy.clone(),
            delay_au: self.delay.clone(),
            signal: self.signal.outer_iter().map(|r| r.to_vec()).collect(),
        };
        serde_json::to_string(&file).map_err(|e| Error::numerical(format!("serializing scan: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ScanFile =
            serde_json::from_str(text).map_err(|e| Error::config(format!("invalid scan container: {e}")))?;
        if file.format != SCAN_FORMAT {
            return Err(Error::config(format!("unexpected scan format '{}'", file.format)));
        }
        if file.version != SCAN_VERSION {
            return Err(Error::config(format!("unsupported scan version {}", file.version)));
        }
        let rows = file.signal.len();
        let cols = file.energy_au.len();
        if file.signal.iter().any(|r| r.len() != cols) {
            return Err(Error::config("ragged signal matrix in scan container"));
        }
        let flat: Vec<f64> = file.signal.into_iter().flatten().collect();
        let signal = Array2::from_shape_vec((rows, cols), flat)
            .map_err(|e| Error::config(format!("signal shape: {e}")))?;
        let scan = Self {
            energy: file.energy_au,
            delay: file.delay_au,
            signal,
            meta: file.meta,
            manifest: file.manifest,
        };
        scan.validate()?;
        Ok(scan)
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
        Self::from_json(&text)
    }

    /// Long-form CSV with a `#` header block.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# format: {SCAN_FORMAT}-csv v{SCAN_VERSION}");
        let _ = writeln!(out, "# meta: {}", serde_json::to_string(&self.meta).unwrap_or_default());
        if let Some(m) = &self.manifest {
            let _ = writeln!(out, "# manifest: {}", serde_json::to_string(m).unwrap_or_default());
        }
        out.push_str("energy_au,energy_ev,delay_au,delay_fs,signal\n");
        for (i, &t) in self.delay.iter().enumerate() {
            for (j, &e) in self.energy.iter().enumerate() {
                let _ = writeln!(out, "{},{},{},{},{}", e, au_to_ev(e), t, au_to_fs(t), self.signal[[i, j]]);
            }
        }
        out
    }
}
