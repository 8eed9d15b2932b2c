//! Sideband phase extraction.
//!
//! A trace `s(τ)` is integrated over an energy window, its mean removed and
//! the remainder rescaled to unit RMS, then fitted by linear least squares to
//! `I0 + c1·τ + c2·τ² + I1·cos(4ωτ − φ)`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scan::{DelayScan, Scheme};
use crate::specfun::wrap_phase;
use crate::units::{au_to_as, au_to_ev, ev_to_au, Band};

/// Default integration window (0.25 eV).
pub fn default_window() -> f64 {
    ev_to_au(0.25)
}

const MAX_CONDITION: f64 = 1e10;

/// Sums the signal bins within `±window/2` of `center` for every delay.
pub fn integrate_window(scan: &DelayScan, center: f64, window: f64) -> Result<Vec<f64>> {
    if !(window > 0.0) {
        return Err(Error::precondition("integration window must be positive"));
    }
    let (lo, hi) = (center - window / 2.0, center + window / 2.0);
    let first = scan.energy[0];
    let last = *scan.energy.last().unwrap();
    if lo < first - 1e-12 || hi > last + 1e-12 {
        return Err(Error::precondition(format!(
            "window {:.4}–{:.4} eV lies outside the energy grid {:.4}–{:.4} eV",
            au_to_ev(lo),
            au_to_ev(hi),
            au_to_ev(first),
            au_to_ev(last)
        )));
    }
    let bins: Vec<usize> = scan
        .energy
        .iter()
        .enumerate()
        .filter(|(_, &e)| e >= lo && e <= hi)
        .map(|(j, _)| j)
        .collect();
    if bins.is_empty() {
        return Err(Error::precondition(format!("no energy bins within the window at {:.4} eV", au_to_ev(center))));
    }
    Ok(scan.signal.outer_iter().map(|row| bins.iter().map(|&j| row[j]).sum()).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SidebandFit {
    /// Group order `q`, when known.
    pub group: Option<u32>,
    pub band: Option<Band>,
    /// Center energy (a.u.).
    pub energy: f64,
    /// Mean of the raw trace.
    pub i0: f64,
    /// Drift coefficients of the raw trace, `c1·τ + c2·τ²`.
    pub c1: f64,
    pub c2: f64,
    /// Oscillation amplitude in raw signal units.
    pub i1: f64,
    /// Phase `φ ∈ (−π, π]`.
    pub phase: f64,
    /// RMS residual of the normalized fit.
    pub residual_rms: f64,
    /// 1σ standard error of `φ`.
    pub phase_err: f64,
}

/// Fits `I0 + c1·τ + c2·τ² + I1·cos(freq·τ − φ)` to `(tau, signal)`.
pub fn fit_oscillation(tau: &[f64], signal: &[f64], freq: f64) -> Result<SidebandFit> {
    const P: usize = 5;
    let n = tau.len();
    if signal.len() != n {
        return Err(Error::precondition("delay and signal lengths differ"));
    }
    if n < 8 {
        return Err(Error::precondition(format!("need at least 8 delay samples, got {n}")));
    }
    if signal.iter().chain(tau).any(|v| !v.is_finite()) {
        return Err(Error::numerical("non-finite input to fit"));
    }
    let t_min = tau.iter().cloned().fold(f64::INFINITY, f64::min);
    let t_max = tau.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if freq * (t_max - t_min) < 2.0 * PI * (1.0 - 1e-9) {
        return Err(Error::precondition("delays must span at least one oscillation period"));
    }

    // polynomial terms in a centered, scaled variable for conditioning
    let mid = 0.5 * (t_min + t_max);
    let half = 0.5 * (t_max - t_min);
    let mean = signal.iter().sum::<f64>() / n as f64;
    let rms = (signal.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let scale = if rms > 0.0 { rms } else { 1.0 };
    let y = DVector::from_iterator(n, signal.iter().map(|s| (s - mean) / scale));
    let x = DMatrix::from_fn(n, P, |i, j| {
        let u = (tau[i] - mid) / half;
        match j {
            0 => 1.0,
            1 => u,
            2 => u * u,
            3 => (freq * tau[i]).cos(),
            _ => (freq * tau[i]).sin(),
        }
    });

    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 0.0) || smax / smin > MAX_CONDITION {
        return Err(Error::numerical(format!(
            "rank-deficient design matrix (condition {:.3e}); delays may alias the oscillation",
            smax / smin
        )));
    }
    let beta = svd.solve(&y, 0.0).map_err(|e| Error::numerical(e.to_string()))?;
    let resid = &y - &x * &beta;
    let rss = resid.norm_squared();
    let residual_rms = (rss / n as f64).sqrt();

    // covariance s²·(XᵀX)⁻¹ = s²·V Σ⁻² Vᵀ
    let dof = n.saturating_sub(P);
    let s2 = if dof > 0 { rss / dof as f64 } else { 0.0 };
    let v_t = svd.v_t.as_ref().unwrap();
    let cov = |a: usize, b: usize| -> f64 {
        (0..P).map(|k| v_t[(k, a)] * v_t[(k, b)] / svd.singular_values[k].powi(2)).sum::<f64>() * s2
    };
    let (bc, bs) = (beta[3], beta[4]);
    let r2 = bc * bc + bs * bs;
    let phase_err = if r2 > 0.0 {
        ((bs * bs * cov(3, 3) + bc * bc * cov(4, 4) - 2.0 * bc * bs * cov(3, 4)) / (r2 * r2)).max(0.0).sqrt()
    } else {
        f64::INFINITY
    };

    // back to raw units and raw τ
    let (b0, b1, b2) = (beta[0] * scale, beta[1] * scale, beta[2] * scale);
    let c2 = b2 / (half * half);
    let c1 = b1 / half - 2.0 * mid * c2;
    let i0 = mean + b0 - b1 * mid / half + b2 * mid * mid / (half * half);

    Ok(SidebandFit {
        group: None,
        band: None,
        energy: f64::NAN,
        i0,
        c1,
        c2,
        i1: r2.sqrt() * scale,
        phase: wrap_phase(bs.atan2(bc)),
        residual_rms,
        phase_err,
    })
}

/// Fit amplitude as a function of trial frequency, for spotting a wrong
/// oscillation period. Returns `(freq, I1)` over `freq·(1 ± span)`.
pub fn scan_frequency(tau: &[f64], signal: &[f64], freq: f64, span: f64, points: usize) -> Result<Vec<(f64, f64)>> {
    if points < 2 || !(span > 0.0) {
        return Err(Error::precondition("frequency scan needs ≥ 2 points and a positive span"));
    }
    (0..points)
        .map(|i| {
            let f = freq * (1.0 - span + 2.0 * span * i as f64 / (points - 1) as f64);
            fit_oscillation(tau, signal, f).map(|fit| (f, fit.i1))
        })
        .collect()
}

/// Integrates and fits one sideband of group `q`.
pub fn fit_band(scan: &DelayScan, q: u32, band: Band, window: f64) -> Result<SidebandFit> {
    let ladder = scan.meta.ladder(q)?;
    let center = match scan.meta.scheme {
        Scheme::ThreeSideband => ladder.band(band),
        Scheme::OneSideband => ladder.lower_harmonic() + 2.0 * scan.meta.omega,
    };
    let trace = integrate_window(scan, center, window)?;
    let mut fit = fit_oscillation(&scan.delay, &trace, 4.0 * scan.meta.omega)?;
    fit.group = Some(q);
    fit.band = Some(band);
    fit.energy = center;
    Ok(fit)
}

/// Fits every sideband of every complete group in the scan. The 1SB scheme
/// yields one fit per group, labeled as the center band.
pub fn fit_scan(scan: &DelayScan, window: f64) -> Result<Vec<SidebandFit>> {
    let bands: &[Band] = match scan.meta.scheme {
        Scheme::ThreeSideband => &Band::ALL,
        Scheme::OneSideband => &[Band::Center],
    };
    let groups = scan.meta.groups();
    if groups.is_empty() {
        return Err(Error::precondition("scan has no complete sideband group"));
    }
    let mut out = Vec::new();
    for q in groups {
        for &band in bands {
            out.push(fit_band(scan, q, band, window)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandPhaseRow {
    pub group: u32,
    pub band: Band,
    pub energy_ev: f64,
    /// Phase after offset removal and unwrapping (rad).
    pub phase_rad: f64,
    /// Fitted phase as returned by the regression (rad).
    pub phase_raw: f64,
    pub phase_err: f64,
    /// `phase_rad / (4ω)` in attoseconds.
    pub delay_as: f64,
    /// `phase_rad − φ_c` of the same group.
    pub delta_vs_center_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandPhaseReport {
    pub omega: f64,
    pub rows: Vec<BandPhaseRow>,
}

/// Removes the `+π` / `−π` offsets from `S_l` / `S_h`, unwraps each band
/// across groups and tabulates differences with respect to the center band.
pub fn band_phase_report(fits: &[SidebandFit], omega: f64) -> Result<BandPhaseReport> {
    let mut groups: Vec<u32> = fits.iter().filter_map(|f| f.group).collect();
    groups.sort_unstable();
    groups.dedup();
    if groups.is_empty() {
        return Err(Error::precondition("no labeled fits"));
    }
    let find = |q: u32, b: Band| -> Result<&SidebandFit> {
        fits.iter()
            .find(|f| f.group == Some(q) && f.band == Some(b))
            .ok_or_else(|| Error::precondition(format!("group {q} is missing the {b} band fit")))
    };

    // center band: unwrap across groups
    let mut center = Vec::with_capacity(groups.len());
    for (i, &q) in groups.iter().enumerate() {
        let raw = find(q, Band::Center)?.phase;
        let v = if i == 0 { raw } else { unwrap_near(raw, center[i - 1]) };
        center.push(v);
    }
    let mut rows = Vec::with_capacity(groups.len() * 3);
    for (i, &q) in groups.iter().enumerate() {
        for band in Band::ALL {
            let fit = find(q, band)?;
            let offset = match band {
                Band::Lower => PI,
                Band::Center => 0.0,
                Band::Higher => -PI,
            };
            // side bands are unwrapped to sit nearest their group's center phase
            let phase = match band {
                Band::Center => center[i],
                _ => unwrap_near(fit.phase - offset, center[i]),
            };
            rows.push(BandPhaseRow {
                group: q,
                band,
                energy_ev: au_to_ev(fit.energy),
                phase_rad: phase,
                phase_raw: fit.phase,
                phase_err: fit.phase_err,
                delay_as: au_to_as(phase / (4.0 * omega)),
                delta_vs_center_rad: phase - center[i],
            });
        }
    }
    Ok(BandPhaseReport { omega, rows })
}

fn unwrap_near(phase: f64, reference: f64) -> f64 {
    reference + wrap_phase(phase - reference)
}

impl BandPhaseReport {
    pub fn row(&self, group: u32, band: Band) -> Option<&BandPhaseRow> {
        self.rows.iter().find(|r| r.group == group && r.band == band)
    }

    /// `|φ_h − φ_l|` per group as `(group, energy of S_c in eV, rad, as)`.
    pub fn side_differences(&self) -> Vec<(u32, f64, f64, f64)> {
        let mut groups: Vec<u32> = self.rows.iter().map(|r| r.group).collect();
        groups.dedup();
        groups
            .into_iter()
            .filter_map(|q| {
                let l = self.row(q, Band::Lower)?;
                let c = self.row(q, Band::Center)?;
                let h = self.row(q, Band::Higher)?;
                let d = (h.phase_rad - l.phase_rad).abs();
                Some((q, c.energy_ev, d, au_to_as(d / (4.0 * self.omega))))
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("group,band,energy_ev,phase_rad,phase_raw,phase_err,delay_as,delta_vs_center_rad\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.group, r.band, r.energy_ev, r.phase_rad, r.phase_raw, r.phase_err, r.delay_as, r.delta_vs_center_rad
            ));
        }
        out
    }
}
