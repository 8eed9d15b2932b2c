use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn rabbitt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rabbitt")).args(args).output().expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn files_in(dir: &Path) -> Vec<String> {
    match std::fs::read_dir(dir) {
        Ok(rd) => rd.map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect(),
        Err(_) => Vec::new(),
    }
}

fn json_line(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON document")
}

#[test]
fn malformed_config_exits_2_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, "{\"schema_version\": 1, \"bogus\": 3}").unwrap();
    let out_dir = dir.path().join("out");
    for sub in ["phases", "synth", "tdse"] {
        let o = rabbitt(&[sub, "--config", p(&cfg), "--out", p(&out_dir), "--quiet"]);
        assert_eq!(o.status.code(), Some(2), "{sub}");
        assert!(files_in(&out_dir).is_empty(), "{sub} left files behind");
    }
    std::fs::write(&cfg, "{\"schema_version\": 7}").unwrap();
    let o = rabbitt(&["phases", "--config", p(&cfg), "--out", p(&out_dir)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("schema_version"));
    assert_eq!(rabbitt(&["phases", "--no-such-flag"]).status.code(), Some(2));
}

#[test]
fn zero_charge_has_zero_atomic_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("z0.json");
    std::fs::write(&cfg, "{\"schema_version\": 1, \"z\": 0.0, \"energy_min_ev\": 12, \"energy_max_ev\": 20}").unwrap();
    let out_dir = dir.path().join("out");
    let o = rabbitt(&["phases", "--config", p(&cfg), "--out", p(&out_dir), "--quiet"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out_dir.join("phases.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# manifest: "));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').enumerate().filter(|(i, _)| *i != 1).map(|(_, v)| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3 * 17);
    for name in ["atomic_phase_rad", "delta_eta", "cc_total", "atomic_delay_as"] {
        // the band column was dropped from `rows`
        let col = header.iter().position(|h| *h == name).unwrap() - 1;
        assert!(rows.iter().all(|r| r[col] == 0.0), "{name}");
    }
}

fn synth_and_fit(dir: &Path) -> (std::path::PathBuf, std::path::PathBuf) {
    let synth_dir = dir.join("synth");
    let fit_dir = dir.join("fit");
    let o = rabbitt(&["synth", "--out", p(&synth_dir), "--quiet"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = rabbitt(&["fit", "--scan", p(&synth_dir.join("scan.json")), "--out", p(&fit_dir), "--quiet"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    (synth_dir, fit_dir)
}

#[test]
fn synth_fit_compare_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (_, fit_dir) = synth_and_fit(dir.path());
    let o = rabbitt(&["compare", "--fits", p(&fit_dir.join("fits.json")), "--out", p(&dir.path().join("cmp")), "--json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = json_line(&o);
    assert_eq!(summary["subcommand"], "compare");
    let diffs = summary["details"]["diff_rad"].as_object().unwrap();
    assert_eq!(diffs.len(), 3 * 7);
    for (key, d) in diffs {
        assert!(d.as_f64().unwrap().abs() < 1e-6, "{key}: {d}");
    }
    assert!(dir.path().join("cmp/side_differences.csv").exists());
}

#[test]
fn compare_names_the_missing_band() {
    let dir = tempfile::tempdir().unwrap();
    let (_, fit_dir) = synth_and_fit(dir.path());
    let path = fit_dir.join("fits.json");
    let mut report: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let fits = report["fits"].as_array_mut().unwrap();
    fits.retain(|f| !(f["group"] == 10 && f["band"] == "higher"));
    let pruned = dir.path().join("pruned.json");
    std::fs::write(&pruned, serde_json::to_string(&report).unwrap()).unwrap();
    let cmp = dir.path().join("cmp");
    let o = rabbitt(&["compare", "--fits", p(&pruned), "--out", p(&cmp)]);
    assert_ne!(o.status.code(), Some(0));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("group 10 band higher"), "{err}");
    assert!(files_in(&cmp).is_empty());
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("noisy.json");
    std::fs::write(
        &cfg,
        r#"{"schema_version": 1,
            "field": {"probe_wavelength_nm": 800, "probe_intensity_w_cm2": 1e11, "probe_duration_fs": 20,
                      "harmonics": [{"order": 11, "intensity_w_cm2": 1e9}, {"order": 13, "intensity_w_cm2": 1e9}],
                      "delays": {"start_fs": 0, "step_fs": 0.083, "count": 16}},
            "noise": 0.02, "drift": {"c1": 1e-4, "c2": 0}}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let run = |seed: &str| {
        let o = rabbitt(&["synth", "--config", p(&cfg), "--out", p(&out_dir), "--seed", seed, "--quiet"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        (std::fs::read(out_dir.join("scan.json")).unwrap(), std::fs::read(out_dir.join("scan.csv")).unwrap())
    };
    let a = run("5");
    let b = run("5");
    assert_eq!(a, b);
    let c = run("6");
    assert_ne!(a.0, c.0);
}

#[test]
fn json_and_quiet_modes() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let o = rabbitt(&["phases", "--out", p(&out_dir), "--json"]);
    assert!(o.status.success());
    let s = json_line(&o);
    assert_eq!(s["subcommand"], "phases");
    assert_eq!(s["details"]["rows"], 3 * 71);

    let o = rabbitt(&["phases", "--out", p(&out_dir), "--quiet"]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty() && o.stderr.is_empty());

    let o = rabbitt(&["fit", "--scan", p(&dir.path().join("absent.json")), "--out", p(&out_dir), "--json"]);
    assert_eq!(o.status.code(), Some(2));
    let s = json_line(&o);
    assert_eq!(s["exit_code"], 2);
    assert!(s["error"].as_str().unwrap().contains("absent.json"));
}
