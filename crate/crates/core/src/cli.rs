//! The `rabbitt` command line.
//!
//! Every subcommand computes all of its outputs in memory before touching the
//! output directory, so a failing run leaves no files behind. Outputs embed the
//! run manifest and carry no timestamps.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::fit::{band_phase_report, fit_band, BandPhaseReport, SidebandFit};
use crate::manifest::{Preset, RunManifest};
use crate::phases::{atomic_phase_1sb, atomic_phase_3sb, AtomicPhaseResult, PhaseOptions};
use crate::scan::{DelayScan, ScanMeta, Scheme};
use crate::specfun::wrap_phase;
use crate::synth::{apply_decay_and_noise, synthesize_scan, DelayGrid, FieldConfig, Harmonic, QuadraticDrift, SynthOptions};
use crate::tdse::{run_rabbitt_scan, TdseConfig};
use crate::units::{au_to_as, au_to_ev, ev_to_au, photon_energy, Band, SidebandLadder};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;
const FIT_FORMAT: &str = "rabbitt-fit-report";

#[derive(Debug, Parser)]
#[command(name = "rabbitt", version, about = "Multi-sideband RABBITT phases: analytic model, synthesis, TDSE and fitting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON configuration file (schema_version 1).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "rabbitt-out")]
    pub out: PathBuf,
    /// Random seed for noise generation.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Scale preset for TDSE runs.
    #[arg(long, global = true, default_value = "desk", value_parser = parse_preset)]
    pub preset: Preset,
    /// Worker thread cap.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Only print errors.
    #[arg(long, global = true)]
    pub quiet: bool,
    /// Print a machine-readable summary on stdout.
    #[arg(long, global = true)]
    pub json: bool,
}

fn parse_preset(s: &str) -> std::result::Result<Preset, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate analytic three-sideband phases against energy.
    Phases,
    /// Synthesize a delay scan from the perturbative path model.
    Synth,
    /// Run the radial TDSE delay scan.
    Tdse,
    /// Extract sideband phases from a delay scan.
    Fit {
        /// Delay-scan container (JSON).
        #[arg(long)]
        scan: PathBuf,
        /// Integration window (eV).
        #[arg(long)]
        window_ev: Option<f64>,
    },
    /// Compare fitted phases with the analytic model.
    Compare {
        /// Fit report written by `fit`.
        #[arg(long)]
        fits: PathBuf,
    },
}

/// What a subcommand produced.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub subcommand: String,
    pub out_dir: String,
    pub files: Vec<String>,
    pub details: serde_json::Value,
}

fn check_schema(version: u32, what: &str) -> Result<()> {
    if version != CONFIG_SCHEMA_VERSION {
        return Err(Error::config(format!(
            "{what} config schema_version {version} is not supported (expected {CONFIG_SCHEMA_VERSION})"
        )));
    }
    Ok(())
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

/// Parses the optional config into `T`, returning the raw bytes for hashing.
fn load_config<T: for<'de> Deserialize<'de> + Default>(path: Option<&Path>) -> Result<(T, Vec<u8>)> {
    match path {
        None => Ok((T::default(), Vec::new())),
        Some(p) => {
            let bytes = read_file(p)?;
            let cfg = serde_json::from_slice(&bytes)
                .map_err(|e| Error::config(format!("{}: {e}", p.display())))?;
            Ok((cfg, bytes))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhasesConfig {
    pub schema_version: u32,
    #[serde(default = "one")]
    pub z: f64,
    #[serde(default = "one_u32")]
    pub lambda: u32,
    #[serde(default = "default_wavelength")]
    pub wavelength_nm: f64,
    /// Ionization potential (a.u.).
    #[serde(default = "half")]
    pub ip: f64,
    /// Center-sideband energy range (eV).
    #[serde(default = "default_e_min")]
    pub energy_min_ev: f64,
    #[serde(default = "default_e_max")]
    pub energy_max_ev: f64,
    #[serde(default = "default_e_step")]
    pub energy_step_ev: f64,
    #[serde(default)]
    pub antisymmetrize: bool,
}

fn one() -> f64 {
    1.0
}
fn one_u32() -> u32 {
    1
}
fn half() -> f64 {
    0.5
}
fn default_wavelength() -> f64 {
    800.0
}
fn default_e_min() -> f64 {
    5.0
}
fn default_e_max() -> f64 {
    40.0
}
fn default_e_step() -> f64 {
    0.5
}

impl Default for PhasesConfig {
    fn default() -> Self {
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            z: 1.0,
            lambda: 1,
            wavelength_nm: 800.0,
            ip: 0.5,
            energy_min_ev: default_e_min(),
            energy_max_ev: default_e_max(),
            energy_step_ev: default_e_step(),
            antisymmetrize: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub schema_version: u32,
    pub field: FieldConfig,
    #[serde(default)]
    pub options: SynthOptions,
    #[serde(default)]
    pub drift: QuadraticDrift,
    /// Noise standard deviation relative to the peak signal.
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let omega = photon_energy(800.0).expect("valid wavelength");
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            field: FieldConfig {
                probe_wavelength_nm: 800.0,
                probe_intensity_w_cm2: 1e11,
                probe_duration_fs: 20.0,
                harmonics: (5..=19).step_by(2).map(|order| Harmonic { order, phase: 0.0, intensity_w_cm2: 1e9 }).collect(),
                delays: DelayGrid::over_periods(omega, 2, 8),
            },
            options: SynthOptions::default(),
            drift: QuadraticDrift::default(),
            noise: 0.0,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub schema_version: u32,
    #[serde(default = "default_window_ev")]
    pub window_ev: f64,
}

fn default_window_ev() -> f64 {
    0.25
}

impl Default for FitConfig {
    fn default() -> Self {
        Self { schema_version: CONFIG_SCHEMA_VERSION, window_ev: default_window_ev() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub antisymmetrize: bool,
    /// `Δφ_XUV = φ_{q+1} − φ_{q−1}` per group; missing groups are zero.
    #[serde(default)]
    pub xuv_phase_difference: BTreeMap<u32, f64>,
}

/// Fit results as written by `fit` and read by `compare`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReportFile {
    pub format: String,
    pub version: u32,
    pub manifest: RunManifest,
    pub meta: ScanMeta,
    pub window_ev: f64,
    pub fits: Vec<SidebandFit>,
    pub report: Option<BandPhaseReport>,
}

struct Outputs(Vec<(String, String)>);

impl Outputs {
    fn write(self, dir: &Path) -> Result<Vec<String>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut names = Vec::new();
        for (name, content) in self.0 {
            let path = dir.join(&name);
            std::fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
            names.push(path.display().to_string());
        }
        Ok(names)
    }
}

fn manifest_header(m: &RunManifest) -> String {
    format!("# manifest: {}\n", serde_json::to_string(m).unwrap_or_default())
}

fn to_json_pretty<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map(|s| s + "\n").map_err(|e| Error::numerical(e.to_string()))
}

/// Runs the parsed command line.
pub fn run(cli: &Cli) -> Result<Summary> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::config("--threads must be at least 1"));
        }
        // the global pool can only be set once per process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let config = cli.config.as_deref();
    let config_path = config.map(|p| p.display().to_string()).unwrap_or_default();
    let out = cli.out.display().to_string();
    let manifest = |sub: &str, inputs: &[&[u8]], seed: u64| RunManifest::new(sub, &config_path, inputs, &out, seed, cli.preset);

    let (sub, outputs, details) = match &cli.command {
        Command::Phases => {
            let (cfg, bytes) = load_config::<PhasesConfig>(config)?;
            check_schema(cfg.schema_version, "phases")?;
            let m = manifest("phases", &[&bytes], 0);
            let (csv, rows) = phases_table(&cfg, &m)?;
            ("phases", Outputs(vec![("phases.csv".into(), csv)]), json!({ "rows": rows }))
        }
        Command::Synth => {
            let (cfg, bytes) = load_config::<SynthConfig>(config)?;
            check_schema(cfg.schema_version, "synth")?;
            let seed = cli.seed.or(cfg.seed).unwrap_or(0);
            let mut scan = synthesize_scan(&cfg.field, &cfg.options)?;
            if cfg.noise > 0.0 || cfg.drift != QuadraticDrift::default() {
                scan = apply_decay_and_noise(&scan, cfg.drift, cfg.noise, seed)?;
            }
            scan.manifest = Some(manifest("synth", &[&bytes], seed));
            let details = json!({ "delays": scan.delay.len(), "energies": scan.energy.len(), "groups": scan.meta.groups() });
            let files = vec![("scan.json".into(), scan.to_json()? + "\n"), ("scan.csv".into(), scan.to_csv())];
            ("synth", Outputs(files), details)
        }
        Command::Tdse => {
            let (cfg, bytes) = match config {
                Some(p) => {
                    let bytes = read_file(p)?;
                    let text = String::from_utf8(bytes.clone()).map_err(|e| Error::config(e.to_string()))?;
                    (TdseConfig::from_json(&text)?, bytes)
                }
                None => {
                    let cfg = TdseConfig::preset(cli.preset);
                    let bytes = serde_json::to_vec(&cfg).map_err(|e| Error::config(e.to_string()))?;
                    (cfg, bytes)
                }
            };
            let (mut scan, provenance) = run_rabbitt_scan(&cfg)?;
            let m = manifest("tdse", &[&bytes], cli.seed.unwrap_or(0));
            scan.manifest = Some(m.clone());
            let details = json!({ "ground_energy": provenance.ground_energy, "delays": scan.delay.len() });
            let log = to_json_pretty(&json!({ "manifest": m, "provenance": provenance }))?;
            let files = vec![
                ("scan.json".into(), scan.to_json()? + "\n"),
                ("scan.csv".into(), scan.to_csv()),
                ("provenance.json".into(), log),
            ];
            ("tdse", Outputs(files), details)
        }
        Command::Fit { scan, window_ev } => {
            let (cfg, bytes) = load_config::<FitConfig>(config)?;
            check_schema(cfg.schema_version, "fit")?;
            let window_ev = window_ev.unwrap_or(cfg.window_ev);
            let scan_bytes = read_file(scan)?;
            let text = String::from_utf8(scan_bytes.clone()).map_err(|e| Error::config(e.to_string()))?;
            let scan = DelayScan::from_json(&text)?;
            let m = manifest("fit", &[&bytes, &scan_bytes], cli.seed.unwrap_or(0));
            let file = fit_all(&scan, ev_to_au(window_ev), window_ev, m)?;
            let details = json!({
                "fits": file.fits.len(),
                "side_differences": file.report.as_ref().map(|r| r.side_differences()),
            });
            let mut csv = manifest_header(&file.manifest);
            csv.push_str(&match &file.report {
                Some(r) => r.to_csv(),
                None => fits_csv(&file.fits, scan.meta.omega),
            });
            let files = vec![("fits.json".into(), to_json_pretty(&file)?), ("report.csv".into(), csv)];
            ("fit", Outputs(files), details)
        }
        Command::Compare { fits } => {
            let (cfg, bytes) = load_config::<CompareConfig>(config)?;
            if config.is_some() {
                check_schema(cfg.schema_version, "compare")?;
            }
            let fit_bytes = read_file(fits)?;
            let file: FitReportFile = serde_json::from_slice(&fit_bytes)
                .map_err(|e| Error::config(format!("{}: {e}", fits.display())))?;
            if file.format != FIT_FORMAT {
                return Err(Error::config(format!("{} is not a fit report", fits.display())));
            }
            let m = manifest("compare", &[&bytes, &fit_bytes], cli.seed.unwrap_or(0));
            let (compare_csv, sides_csv, details) = compare(&file, &cfg, &m)?;
            let files = vec![("compare.csv".into(), compare_csv), ("side_differences.csv".into(), sides_csv)];
            ("compare", Outputs(files), details)
        }
    };
    let files = outputs.write(&cli.out)?;
    Ok(Summary { subcommand: sub.into(), out_dir: out, files, details })
}

fn band_energy(ladder: &SidebandLadder, scheme: Scheme, band: Band) -> f64 {
    match scheme {
        Scheme::ThreeSideband => ladder.band(band),
        Scheme::OneSideband => ladder.lower_harmonic() + 2.0 * ladder.omega,
    }
}

fn phases_table(cfg: &PhasesConfig, m: &RunManifest) -> Result<(String, usize)> {
    if !(cfg.energy_step_ev > 0.0) || !(cfg.energy_max_ev >= cfg.energy_min_ev) {
        return Err(Error::config("energy range must be increasing with a positive step"));
    }
    let omega = photon_energy(cfg.wavelength_nm)?;
    let opts = PhaseOptions { antisymmetrize: cfg.antisymmetrize };
    let mut csv = manifest_header(m);
    csv.push_str(
        "center_energy_ev,band,band_energy_ev,phase_rad,phase_unwrapped,atomic_phase_rad,delta_eta,pi_offset,cc_total,atomic_delay_as\n",
    );
    let n = ((cfg.energy_max_ev - cfg.energy_min_ev) / cfg.energy_step_ev + 1e-9).floor() as usize + 1;
    for i in 0..n {
        let e_ev = cfg.energy_min_ev + i as f64 * cfg.energy_step_ev;
        let ladder = SidebandLadder::from_center_energy(ev_to_au(e_ev), omega, cfg.ip)?;
        for band in Band::ALL {
            let r = atomic_phase_3sb(band, &ladder, cfg.z, cfg.lambda, opts)?;
            let (offset, atomic) = split_offset(&r);
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{},{},{},{}",
                e_ev,
                band,
                au_to_ev(ladder.band(band)),
                r.phase,
                r.unwrapped,
                atomic,
                r.term("delta_eta").unwrap_or(0.0),
                offset,
                r.cc_sum(),
                au_to_as(atomic / (4.0 * omega))
            );
        }
    }
    Ok((csv, 3 * n))
}

/// `(π offset, phase without it)`.
fn split_offset(r: &AtomicPhaseResult) -> (f64, f64) {
    let offset = r.term("pi_offset").unwrap_or(0.0);
    (offset, r.unwrapped - offset)
}

fn fit_all(scan: &DelayScan, window: f64, window_ev: f64, manifest: RunManifest) -> Result<FitReportFile> {
    let groups = scan.meta.groups();
    if groups.is_empty() {
        return Err(Error::precondition("the scan contains no complete sideband group"));
    }
    let bands: &[Band] = match scan.meta.scheme {
        Scheme::ThreeSideband => &Band::ALL,
        Scheme::OneSideband => &[Band::Center],
    };
    let mut fits = Vec::new();
    let mut failures = Vec::new();
    for q in groups {
        for &band in bands {
            match fit_band(scan, q, band, window) {
                Ok(f) => fits.push(f),
                Err(e) => failures.push(format!("group {q} band {band}: {e}")),
            }
        }
    }
    if !failures.is_empty() {
        return Err(Error::precondition(format!("band extraction failed:\n  {}", failures.join("\n  "))));
    }
    let report = match scan.meta.scheme {
        Scheme::ThreeSideband => Some(band_phase_report(&fits, scan.meta.omega)?),
        Scheme::OneSideband => None,
    };
    Ok(FitReportFile {
        format: FIT_FORMAT.into(),
        version: 1,
        manifest,
        meta: scan.meta.clone(),
        window_ev,
        fits,
        report,
    })
}

fn fits_csv(fits: &[SidebandFit], omega: f64) -> String {
    let mut csv = String::from("group,band,energy_ev,phase_rad,phase_err,delay_as,amplitude,residual_rms\n");
    for f in fits {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            f.group.unwrap_or(0),
            f.band.map(|b| b.to_string()).unwrap_or_default(),
            au_to_ev(f.energy),
            f.phase,
            f.phase_err,
            au_to_as(f.phase / (4.0 * omega)),
            f.i1,
            f.residual_rms
        );
    }
    csv
}

fn compare(file: &FitReportFile, cfg: &CompareConfig, m: &RunManifest) -> Result<(String, String, serde_json::Value)> {
    let meta = &file.meta;
    let opts = PhaseOptions { antisymmetrize: cfg.antisymmetrize };
    let bands: &[Band] = match meta.scheme {
        Scheme::ThreeSideband => &Band::ALL,
        Scheme::OneSideband => &[Band::Center],
    };
    let groups = meta.groups();
    let mut missing = Vec::new();
    for &q in &groups {
        for &b in bands {
            if !file.fits.iter().any(|f| f.group == Some(q) && f.band == Some(b)) {
                missing.push(format!("group {q} band {b}"));
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::precondition(format!("missing sideband fits: {}", missing.join(", "))));
    }
    let omega = meta.omega;
    let mut csv = manifest_header(m);
    csv.push_str("group,band,energy_ev,phase_fit,phase_analytic,diff_rad,diff_as,phase_err\n");
    let mut diffs = BTreeMap::new();
    for &q in &groups {
        let ladder = meta.ladder(q)?;
        let xuv = cfg.xuv_phase_difference.get(&q).copied().unwrap_or(0.0);
        for &b in bands {
            let fit = file.fits.iter().find(|f| f.group == Some(q) && f.band == Some(b)).unwrap();
            let analytic = match meta.scheme {
                Scheme::ThreeSideband => atomic_phase_3sb(b, &ladder, meta.z, meta.lambda, opts)?,
                Scheme::OneSideband => atomic_phase_1sb(ladder.lower_harmonic(), 2.0 * omega, meta.z, meta.lambda, opts)?,
            };
            let want = wrap_phase(analytic.unwrapped + xuv);
            let diff = wrap_phase(fit.phase - want);
            diffs.insert(format!("{q}:{b}"), diff);
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{},{}",
                q,
                b,
                au_to_ev(band_energy(&ladder, meta.scheme, b)),
                fit.phase,
                want,
                diff,
                au_to_as(diff / (4.0 * omega)),
                fit.phase_err
            );
        }
    }
    let mut sides = manifest_header(m);
    sides.push_str("group,center_energy_ev,abs_diff_rad,abs_diff_as\n");
    let mut side_rows = Vec::new();
    if meta.scheme == Scheme::ThreeSideband {
        let report = band_phase_report(&file.fits, omega)?;
        for (q, e, d, t) in report.side_differences() {
            let _ = writeln!(sides, "{q},{e},{d},{t}");
            side_rows.push(json!({ "group": q, "center_energy_ev": e, "abs_diff_rad": d, "abs_diff_as": t }));
        }
    }
    Ok((csv, sides, json!({ "diff_rad": diffs, "side_differences": side_rows })))
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = if cli.quiet { "error" } else { "info" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
    match run(&cli) {
        Ok(summary) => {
            if cli.json {
                println!("{}", serde_json::to_string(&summary).unwrap_or_default());
            } else if !cli.quiet {
                for f in &summary.files {
                    println!("wrote {f}");
                }
            }
            0
        }
        Err(e) => {
            if cli.json {
                println!("{}", json!({ "error": e.to_string(), "exit_code": e.exit_code() }));
            }
            eprintln!("rabbitt: {e}");
            e.exit_code()
        }
    }
}
