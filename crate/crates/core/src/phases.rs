//! Analytic phase engine for multi-photon RABBITT paths.
//!
//! The phase of an `N`-photon matrix element (one XUV photon followed by
//! `N−1` probe photons, single bound-continuum channel `λ`) is built up step
//! by step:
//!
//! ```text
//! arg M ≈ (N−2)π/2 − λπ/2 + η_λ(k₁) + Σₙ φcc(kₙ₊₁, kₙ)
//! ```
//!
//! where `η_λ` is the Coulomb phase and `φcc(k, κ)` the one-photon
//! continuum–continuum phase for a transition `κ → k`. The continuum–continuum
//! phase is taken to be independent of the angular momentum of the states
//! involved; that is a model limitation, not something this module checks.
//!
//! All sums are carried unreduced. Phases are reduced to `(−π, π]` only on the
//! `phase` field of [`AtomicPhaseResult`].

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::{log_gamma, wrap_phase};
use crate::units::{momentum_from_energy, Band, SidebandLadder};

/// Momenta entering one continuum–continuum transition `κ → k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CcPhaseInput {
    /// Final momentum (a.u.).
    pub k: f64,
    /// Initial continuum momentum (a.u.).
    pub kappa: f64,
    /// Residual ion charge.
    pub z: f64,
}

impl CcPhaseInput {
    pub fn new(k: f64, kappa: f64, z: f64) -> Result<Self> {
        let input = Self { k, kappa, z };
        input.validate()?;
        Ok(input)
    }

    fn validate(&self) -> Result<()> {
        if !(self.k > 0.0) || !(self.kappa > 0.0) {
            return Err(Error::precondition(format!(
                "continuum momenta must be positive (k={}, κ={})",
                self.k, self.kappa
            )));
        }
        if self.k == self.kappa {
            return Err(Error::precondition(format!(
                "cc phase is singular for k = κ = {}",
                self.k
            )));
        }
        if !(self.z >= 0.0) {
            return Err(Error::precondition(format!("residual charge must be ≥ 0, got {}", self.z)));
        }
        Ok(())
    }
}

/// Options shared by the composite phase operations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseOptions {
    /// Replace `φcc(k,κ)` by `(φcc(k,κ) − φcc(κ,k))/2`.
    #[serde(default)]
    pub antisymmetrize: bool,
}

/// Unreduced continuum–continuum phase: the argument of
/// `(2κ)^{iZ/κ} / (2k)^{iZ/k} · (Γ[2+ia] + γ) / (κ−k)^{ia}` with `a = Z(1/κ − 1/k)` and
/// `γ = (iZ(κ−k)/2)(1/κ² + 1/k²) Γ[1+ia]`.
///
/// The power of `(κ−k)` has a purely imaginary exponent, so its argument is
/// `a·ln|κ−k|` on any branch; a negative base only changes the modulus.
fn cc_phase_raw(input: &CcPhaseInput) -> Result<f64> {
    let CcPhaseInput { k, kappa, z } = *input;
    if z == 0.0 {
        return Ok(0.0);
    }
    let a = z * (1.0 / kappa - 1.0 / k);
    let lg1 = log_gamma(Complex64::new(1.0, a))?;
    let gamma1 = lg1.exp();
    // Γ(2+ia) = (1+ia) Γ(1+ia)
    let gamma2 = Complex64::new(1.0, a) * gamma1;
    let correction =
        Complex64::new(0.0, 0.5 * z * (kappa - k) * (1.0 / (kappa * kappa) + 1.0 / (k * k))) * gamma1;
    let bracket = gamma2 + correction;
    let prefactor = z / kappa * (2.0 * kappa).ln() - z / k * (2.0 * k).ln();
    // arg(bracket) relative to arg Γ(1+ia), keeping the unreduced Γ phase
    let bracket_arg = lg1.im + (bracket / gamma1).arg();
    Ok(prefactor + bracket_arg - a * (kappa - k).abs().ln())
}

/// Continuum–continuum phase `φcc(k, κ)` for `κ → k`, reduced to `(−π, π]`.
pub fn cc_phase(input: CcPhaseInput) -> Result<f64> {
    input.validate()?;
    Ok(wrap_phase(cc_phase_raw(&input)?))
}

/// `φcc(k, κ)`, optionally antisymmetrized, unreduced.
pub fn cc_phase_unwrapped(k: f64, kappa: f64, z: f64, opts: PhaseOptions) -> Result<f64> {
    let fwd = CcPhaseInput::new(k, kappa, z)?;
    let raw = cc_phase_raw(&fwd)?;
    if !opts.antisymmetrize {
        return Ok(raw);
    }
    let back = cc_phase_raw(&CcPhaseInput { k: kappa, kappa: k, z })?;
    Ok(0.5 * (raw - back))
}

/// Coulomb (Wigner) phase `η_λ(κ) = arg Γ(λ + 1 − iZ/κ)`, unreduced.
pub fn coulomb_phase_unwrapped(lambda: u32, kappa: f64, z: f64) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::precondition(format!("Coulomb phase needs κ > 0, got {kappa}")));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    Ok(log_gamma(Complex64::new(lambda as f64 + 1.0, -z / kappa))?.im)
}

/// Coulomb phase reduced to `(−π, π]`.
pub fn coulomb_phase(lambda: u32, kappa: f64, z: f64) -> Result<f64> {
    Ok(wrap_phase(coulomb_phase_unwrapped(lambda, kappa, z)?))
}

/// Exchange of one probe photon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeStep {
    Absorb,
    Emit,
}

impl ProbeStep {
    pub fn sign(self) -> f64 {
        match self {
            ProbeStep::Absorb => 1.0,
            ProbeStep::Emit => -1.0,
        }
    }
}

/// One quantum path: XUV absorption into `k₁` followed by probe exchanges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotonPath {
    pub label: String,
    /// Angular momentum reached by the XUV step.
    pub lambda: u32,
    pub steps: Vec<ProbeStep>,
    /// Kinetic energies after each photon, `ε₁ … ε_N` (a.u.).
    pub energies: Vec<f64>,
    /// Momenta `k₁ … k_N` (a.u.).
    pub momenta: Vec<f64>,
}

impl PhotonPath {
    /// Path starting at kinetic energy `first` after the XUV photon, then
    /// exchanging probe photons of energy `omega` according to `steps`.
    pub fn new(
        label: impl Into<String>,
        lambda: u32,
        first: f64,
        omega: f64,
        steps: &[ProbeStep],
    ) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::precondition("a path needs at least one probe step (N ≥ 2)"));
        }
        let mut energies = Vec::with_capacity(steps.len() + 1);
        energies.push(first);
        for s in steps {
            let last = *energies.last().unwrap();
            energies.push(last + s.sign() * omega);
        }
        let momenta = energies
            .iter()
            .map(|&e| {
                if e > 0.0 {
                    momentum_from_energy(e)
                } else {
                    Err(Error::precondition(format!(
                        "path intermediate state at {e} a.u. is not in the continuum"
                    )))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { label: label.into(), lambda, steps: steps.to_vec(), energies, momenta })
    }

    /// Total number of photons `N`.
    pub fn order(&self) -> usize {
        self.momenta.len()
    }

    pub fn net_probe_photons(&self) -> i32 {
        self.steps.iter().map(|s| s.sign() as i32).sum()
    }

    pub fn n_absorbed(&self) -> usize {
        self.steps.iter().filter(|s| **s == ProbeStep::Absorb).count()
    }

    pub fn n_emitted(&self) -> usize {
        self.steps.len() - self.n_absorbed()
    }

    pub fn final_energy(&self) -> f64 {
        *self.energies.last().unwrap()
    }
}

/// Labeled contribution to an atomic phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTerm {
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicPhaseResult {
    /// Phase reduced to `(−π, π]`.
    pub phase: f64,
    /// Unreduced sum of `terms`.
    pub unwrapped: f64,
    pub terms: Vec<PhaseTerm>,
}

impl AtomicPhaseResult {
    fn from_terms(terms: Vec<PhaseTerm>) -> Self {
        let unwrapped = terms.iter().map(|t| t.value).sum();
        Self { phase: wrap_phase(unwrapped), unwrapped, terms }
    }

    pub fn term(&self, label: &str) -> Option<f64> {
        self.terms.iter().find(|t| t.label == label).map(|t| t.value)
    }

    /// Sum of all continuum–continuum terms.
    pub fn cc_sum(&self) -> f64 {
        self.terms.iter().filter(|t| t.label.contains("cc")).map(|t| t.value).sum()
    }
}

fn term(label: impl Into<String>, value: f64) -> PhaseTerm {
    PhaseTerm { label: label.into(), value }
}

/// Phase of the matrix element of `path` in the decomposition approximation.
pub fn decompose_path_phase(path: &PhotonPath, z: f64, opts: PhaseOptions) -> Result<AtomicPhaseResult> {
    let n = path.order();
    if n < 2 {
        return Err(Error::precondition("path order must be ≥ 2"));
    }
    let k = &path.momenta;
    let mut terms = vec![
        term("order_offset", (n as f64 - 2.0) * PI / 2.0),
        term("channel_offset", -(path.lambda as f64) * PI / 2.0),
        term("eta", coulomb_phase_unwrapped(path.lambda, k[0], z)?),
    ];
    for i in 1..n {
        let v = cc_phase_unwrapped(k[i], k[i - 1], z, opts)?;
        terms.push(term(format!("cc[{}<-{}]", i + 1, i), v));
    }
    Ok(AtomicPhaseResult::from_terms(terms))
}

/// The pair of interfering lowest-order paths for one band of a three-sideband
/// group: `(emission path from H_{q+1}, absorption path from H_{q−1})`.
pub fn band_paths(band: Band, ladder: &SidebandLadder, lambda: u32) -> Result<(PhotonPath, PhotonPath)> {
    use ProbeStep::{Absorb as A, Emit as E};
    let w = ladder.omega;
    let top = ladder.upper_harmonic();
    let bottom = ladder.lower_harmonic();
    Ok(match band {
        Band::Lower => (
            PhotonPath::new("C", lambda, top, w, &[E, E, E])?,
            PhotonPath::new("D", lambda, bottom, w, &[A])?,
        ),
        Band::Center => (
            PhotonPath::new("H", lambda, top, w, &[E, E])?,
            PhotonPath::new("I", lambda, bottom, w, &[A, A])?,
        ),
        Band::Higher => (
            PhotonPath::new("J", lambda, top, w, &[E])?,
            PhotonPath::new("N", lambda, bottom, w, &[A, A, A])?,
        ),
    })
}

/// Fourth-order paths that only rescale the amplitude of a band in the
/// decomposition picture: E, F, G (into `S_l` from `H_{q−1}`) and K, L, M
/// (into `S_h` from `H_{q+1}`). The center band has none.
pub fn higher_order_paths(band: Band, ladder: &SidebandLadder, lambda: u32) -> Result<Vec<PhotonPath>> {
    use ProbeStep::{Absorb as A, Emit as E};
    let w = ladder.omega;
    let top = ladder.upper_harmonic();
    let bottom = ladder.lower_harmonic();
    let paths = match band {
        Band::Lower => vec![
            ("E", bottom, [A, A, E]),
            ("F", bottom, [A, E, A]),
            ("G", bottom, [E, A, A]),
        ],
        Band::Higher => vec![
            ("K", top, [E, E, A]),
            ("L", top, [E, A, E]),
            ("M", top, [A, E, E]),
        ],
        Band::Center => vec![],
    };
    // paths whose intermediate state dips below threshold are dropped
    Ok(paths
        .into_iter()
        .filter_map(|(label, start, steps)| PhotonPath::new(label, lambda, start, w, &steps).ok())
        .collect())
}

/// `Δφ_atom` of a band: phase of the emission path minus phase of the absorption path.
pub fn atomic_phase_3sb(
    band: Band,
    ladder: &SidebandLadder,
    z: f64,
    lambda: u32,
    opts: PhaseOptions,
) -> Result<AtomicPhaseResult> {
    let (emission, absorption) = band_paths(band, ladder, lambda)?;
    interfering_pair_phase(&emission, &absorption, z, opts)
}

/// Single-sideband scheme with probe quantum `ladder.omega`: sideband at `H_{q−1} + ω`
/// reached by emission from `H_{q+1} = H_{q−1} + 2ω` and absorption from `H_{q−1}`.
pub fn atomic_phase_1sb(
    lower_harmonic: f64,
    probe: f64,
    z: f64,
    lambda: u32,
    opts: PhaseOptions,
) -> Result<AtomicPhaseResult> {
    let emission = PhotonPath::new("A", lambda, lower_harmonic + 2.0 * probe, probe, &[ProbeStep::Emit])?;
    let absorption = PhotonPath::new("B", lambda, lower_harmonic, probe, &[ProbeStep::Absorb])?;
    interfering_pair_phase(&emission, &absorption, z, opts)
}

/// `arg(M_emission · M*_absorption)` itemized as `Δη`, order offset and signed cc terms.
pub fn interfering_pair_phase(
    emission: &PhotonPath,
    absorption: &PhotonPath,
    z: f64,
    opts: PhaseOptions,
) -> Result<AtomicPhaseResult> {
    if emission.lambda != absorption.lambda {
        return Err(Error::precondition("interfering paths must share the bound-continuum channel"));
    }
    let e = decompose_path_phase(emission, z, opts)?;
    let a = decompose_path_phase(absorption, z, opts)?;
    let mut terms = vec![
        term("delta_eta", e.term("eta").unwrap() - a.term("eta").unwrap()),
        term("pi_offset", e.term("order_offset").unwrap() - a.term("order_offset").unwrap()),
    ];
    let cc_label = |p: &PhotonPath, t: &PhaseTerm| format!("{}:{}", p.label, t.label);
    for t in e.terms.iter().filter(|t| t.label.starts_with("cc")) {
        terms.push(term(cc_label(emission, t), t.value));
    }
    for t in a.terms.iter().filter(|t| t.label.starts_with("cc")) {
        terms.push(term(cc_label(absorption, t), -t.value));
    }
    Ok(AtomicPhaseResult::from_terms(terms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{ev_to_au, photon_energy, sideband_ladder};
    use approx::assert_relative_eq;

    fn k_ev(ev: f64) -> f64 {
        momentum_from_energy(ev_to_au(ev)).unwrap()
    }

    /// Direct transcription of the bracket with complex powers, for cross-checking
    /// the reduced closed form used in `cc_phase_raw`.
    fn cc_direct(k: f64, kappa: f64, z: f64) -> f64 {
        let i = Complex64::i();
        let a = z * (1.0 / kappa - 1.0 / k);
        let g1 = log_gamma(Complex64::new(1.0, a)).unwrap().exp();
        let g2 = log_gamma(Complex64::new(2.0, a)).unwrap().exp();
        let gamma = i * z * (kappa - k) / 2.0 * (1.0 / (kappa * kappa) + 1.0 / (k * k)) * g1;
        let num = Complex64::new(2.0 * kappa, 0.0).powc(i * z / kappa);
        let den = Complex64::new(2.0 * k, 0.0).powc(i * z / k);
        let diff = Complex64::new(kappa - k, 0.0).powc(i * a);
        (num / den * (g2 + gamma) / diff).arg()
    }

    #[test]
    fn cc_phase_null_charge() {
        let p = cc_phase(CcPhaseInput::new(1.2, 0.9, 0.0).unwrap()).unwrap();
        assert_eq!(p, 0.0);
    }

    #[test]
    fn cc_phase_rejects_degenerate_momenta() {
        assert!(CcPhaseInput::new(1.0, 1.0, 1.0).is_err());
        assert!(CcPhaseInput::new(0.0, 1.0, 1.0).is_err());
        assert!(CcPhaseInput::new(1.0, -1.0, 1.0).is_err());
    }

    /// 10 eV → 10 eV + ω(800 nm), Z = 1, frozen from a 30-digit mpmath evaluation.
    #[test]
    fn cc_phase_10ev_absorption() {
        let w = photon_energy(800.0).unwrap();
        let kappa = k_ev(10.0);
        let k = (kappa * kappa + 2.0 * w).sqrt();
        let got = cc_phase(CcPhaseInput::new(k, kappa, 1.0).unwrap()).unwrap();
        assert_relative_eq!(got, 0.141_544_913_588_187_55, max_relative = 1e-11);
        assert_relative_eq!(got, cc_direct(k, kappa, 1.0), epsilon = 1e-12);
        let swapped = cc_phase(CcPhaseInput::new(kappa, k, 1.0).unwrap()).unwrap();
        assert!((got + swapped).abs() < 0.01);
    }

    #[test]
    fn cc_phase_agrees_with_direct_form() {
        for &(k, kappa) in &[(0.5, 0.7), (1.3, 1.1), (2.0, 0.4), (0.3, 0.31)] {
            for z in [1.0, 2.0] {
                let got = cc_phase(CcPhaseInput::new(k, kappa, z).unwrap()).unwrap();
                let want = cc_direct(k, kappa, z);
                assert!((wrap_phase(got - want)).abs() < 1e-11, "{k} {kappa} {z}: {got} {want}");
            }
        }
    }

    #[test]
    fn coulomb_phase_examples() {
        assert_eq!(coulomb_phase(3, 0.7, 0.0).unwrap(), 0.0);
        // arg Γ(2 − i), 40-digit mpmath
        assert_relative_eq!(
            coulomb_phase(1, 1.0, 1.0).unwrap(),
            -0.483_757_842_929_915_111_73,
            max_relative = 1e-13
        );
        assert!(coulomb_phase(1, 1e9, 1.0).unwrap().abs() < 1e-8);
        assert!(coulomb_phase(1, 0.0, 1.0).is_err());
    }

    #[test]
    fn two_photon_path_structure() {
        let w = photon_energy(800.0).unwrap();
        let first = ev_to_au(12.0);
        let path = PhotonPath::new("B", 1, first, w, &[ProbeStep::Absorb]).unwrap();
        let r = decompose_path_phase(&path, 1.0, PhaseOptions::default()).unwrap();
        let k1 = path.momenta[0];
        let k2 = path.momenta[1];
        let want = -PI / 2.0
            + coulomb_phase_unwrapped(1, k1, 1.0).unwrap()
            + cc_phase_unwrapped(k2, k1, 1.0, PhaseOptions::default()).unwrap();
        assert_relative_eq!(r.unwrapped, want, epsilon = 1e-14);

        let neutral = decompose_path_phase(&path, 0.0, PhaseOptions::default()).unwrap();
        assert_eq!(neutral.unwrapped, -PI / 2.0);
    }

    #[test]
    fn back_and_forth_steps_add_pi() {
        use ProbeStep::*;
        let w = photon_energy(800.0).unwrap();
        let opts = PhaseOptions { antisymmetrize: true };
        let first = ev_to_au(15.0);
        let two = PhotonPath::new("D", 1, first, w, &[Absorb]).unwrap();
        let base = decompose_path_phase(&two, 1.0, opts).unwrap().unwrapped;
        for steps in [[Absorb, Emit, Absorb], [Absorb, Absorb, Emit], [Emit, Absorb, Absorb]] {
            let p = PhotonPath::new("x", 1, first, w, &steps).unwrap();
            let v = decompose_path_phase(&p, 1.0, opts).unwrap().unwrapped;
            assert!((v - base - PI).abs() < 1e-12, "{steps:?}: {}", v - base);
        }
    }

    #[test]
    fn path_rejects_bound_intermediate() {
        let w = photon_energy(800.0).unwrap();
        assert!(PhotonPath::new("x", 1, 0.5 * w, w, &[ProbeStep::Emit]).is_err());
        assert!(PhotonPath::new("x", 1, 0.5, w, &[]).is_err());
    }

    /// Term-by-term transcription of the three band phase formulas.
    fn band_phase_direct(band: Band, l: &SidebandLadder, z: f64) -> f64 {
        let k = |n: u32| momentum_from_energy(l.rung(n)).unwrap();
        let cc = |a: u32, b: u32| cc_phase_unwrapped(k(a), k(b), z, PhaseOptions::default()).unwrap();
        let deta = coulomb_phase_unwrapped(1, k(4), z).unwrap() - coulomb_phase_unwrapped(1, k(0), z).unwrap();
        // rungs: 0 = H_{q-1}, 1 = l, 2 = c, 3 = h, 4 = H_{q+1}
        match band {
            Band::Lower => deta + cc(3, 4) + cc(2, 3) + cc(1, 2) - cc(1, 0) + PI,
            Band::Center => deta + cc(3, 4) + cc(2, 3) - cc(2, 1) - cc(1, 0),
            Band::Higher => deta + cc(3, 4) - cc(3, 2) - cc(2, 1) - cc(1, 0) - PI,
        }
    }

    #[test]
    fn band_phases_match_direct_formulas() {
        let w = photon_energy(800.0).unwrap();
        for q in [8, 10, 14] {
            let l = sideband_ladder(q, w, 0.5).unwrap();
            for band in Band::ALL {
                let r = atomic_phase_3sb(band, &l, 1.0, 1, PhaseOptions::default()).unwrap();
                assert!((r.unwrapped - band_phase_direct(band, &l, 1.0)).abs() < 1e-12);
                let sum: f64 = r.terms.iter().map(|t| t.value).sum();
                assert!(wrap_phase(sum - r.phase).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn antisymmetrized_pi_ladder() {
        let w = photon_energy(800.0).unwrap();
        let opts = PhaseOptions { antisymmetrize: true };
        for q in [6, 8, 10, 12, 20] {
            let l = sideband_ladder(q, w, 0.5).unwrap();
            let lo = atomic_phase_3sb(Band::Lower, &l, 1.0, 1, opts).unwrap().unwrapped;
            let c = atomic_phase_3sb(Band::Center, &l, 1.0, 1, opts).unwrap().unwrapped;
            let h = atomic_phase_3sb(Band::Higher, &l, 1.0, 1, opts).unwrap().unwrapped;
            assert!((lo - c - PI).abs() < 1e-12);
            assert!((c - h - PI).abs() < 1e-12);
        }
    }

    #[test]
    fn null_charge_reduces_to_offsets() {
        let w = photon_energy(800.0).unwrap();
        let l = sideband_ladder(10, w, 0.5).unwrap();
        for (band, off) in [(Band::Lower, PI), (Band::Center, 0.0), (Band::Higher, -PI)] {
            let r = atomic_phase_3sb(band, &l, 0.0, 1, PhaseOptions::default()).unwrap();
            assert_eq!(r.unwrapped, off);
            assert_eq!(r.term("delta_eta"), Some(0.0));
            assert_eq!(r.cc_sum(), 0.0);
        }
    }

    #[test]
    fn higher_order_paths_differ_by_pi_from_lowest_order() {
        let w = photon_energy(800.0).unwrap();
        let l = sideband_ladder(12, w, 0.5).unwrap();
        let opts = PhaseOptions { antisymmetrize: true };
        let (j, d) = (band_paths(Band::Higher, &l, 1).unwrap().0, band_paths(Band::Lower, &l, 1).unwrap().1);
        let dphase = decompose_path_phase(&d, 1.0, opts).unwrap().unwrapped;
        let jphase = decompose_path_phase(&j, 1.0, opts).unwrap().unwrapped;
        for p in higher_order_paths(Band::Lower, &l, 1).unwrap() {
            assert_eq!(p.final_energy(), l.band(Band::Lower));
            let v = decompose_path_phase(&p, 1.0, opts).unwrap().unwrapped;
            assert!(wrap_phase(v - dphase - PI).abs() < 1e-12);
        }
        for p in higher_order_paths(Band::Higher, &l, 1).unwrap() {
            let v = decompose_path_phase(&p, 1.0, opts).unwrap().unwrapped;
            assert!(wrap_phase(v - jphase - PI).abs() < 1e-12);
        }
    }
}
