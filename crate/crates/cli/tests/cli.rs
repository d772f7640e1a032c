use std::collections::HashMap;
use std::path::Path;
use std::process::{Command, Output};

use aqrm_cli::schema::{self, FigureKind};

fn aqrm(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aqrm"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("RUST_LOG", "off")
        .output()
        .expect("binary runs")
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<HashMap<String, String>>) {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    let rows = rdr
        .records()
        .map(|rec| header.iter().cloned().zip(rec.unwrap().iter().map(String::from)).collect())
        .collect();
    (header, rows)
}

fn check_layout(dir: &Path, stem: &str) -> Vec<HashMap<String, String>> {
    let (header, rows) = read_csv(&dir.join(format!("{stem}.csv")));
    let cols: Vec<&str> = header.iter().map(String::as_str).collect();
    assert_eq!(cols, schema::layout(stem).unwrap(), "{stem}");
    for kind in FigureKind::ALL {
        schema::check_header(kind, stem, &cols).unwrap();
    }
    rows
}

fn num(row: &HashMap<String, String>, col: &str) -> f64 {
    row[col].parse().unwrap_or_else(|_| panic!("{col} = {:?}", row[col]))
}

#[test]
fn degenerate_grid_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = aqrm(dir.path(), &["spectrum", "--g-min", "1", "--g-max", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    assert!(!dir.path().join("spectrum.csv").exists());
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(aqrm(dir.path(), &["spectrum", "--coupling", "1"]).status.code(), Some(2));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# sweep\ndelta = 2\nr = 0.3\ng-steps = 5\nlevels = 3\n").unwrap();
    let out = aqrm(dir.path(), &["spectrum", "--config", cfg.to_str().unwrap(), "--r", "0.4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let meta: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["delta"], 2.0);
    assert_eq!(meta["config"]["r"], 0.4);
    assert_eq!(meta["config"]["g_steps"], 5);

    std::fs::write(&cfg, "coupling = 1\n").unwrap();
    let out = aqrm(dir.path(), &["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn spectrum_csv_contains_the_closed_form_crossing() {
    let dir = tempfile::tempdir().unwrap();
    let out = aqrm(dir.path(), &["spectrum", "--delta", "0.5", "--r", "0.2", "--g-steps", "11", "--levels", "4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = check_layout(dir.path(), "spectrum");
    assert!(rows.len() >= 11 * 4);
    let crossing = rows
        .iter()
        .find(|r| r["class"] == "degenerate-exceptional" && r["x"].parse::<f64>().unwrap() == 0.0)
        .expect("degenerate row on the lowest pole line");
    assert!((num(crossing, "g") - (0.5f64 / 0.96).sqrt()).abs() < 1e-9);
    for r in &rows {
        let degenerate = r["class"] == "degenerate-exceptional";
        assert_eq!(r["parity"] == "undefined", degenerate, "{r:?}");
        assert!(degenerate || r["parity"] == "+1" || r["parity"] == "-1");
    }
    // rows are ordered by coupling, then level
    let keys: Vec<(f64, f64)> = rows.iter().map(|r| (num(r, "g"), num(r, "level"))).collect();
    assert!(keys.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn json_format_mirrors_the_layout() {
    let dir = tempfile::tempdir().unwrap();
    let out = aqrm(dir.path(), &["ed", "--delta", "1", "--r", "0.5", "--g-steps", "3", "--levels", "2", "--format", "json"]);
    assert!(out.status.success());
    let rows: Vec<serde_json::Map<String, serde_json::Value>> =
        serde_json::from_slice(&std::fs::read(dir.path().join("ed.json")).unwrap()).unwrap();
    assert_eq!(rows.len(), 6);
    for row in &rows {
        let mut keys: Vec<&str> = row.keys().map(String::as_str).collect();
        let mut want = schema::ED.to_vec();
        keys.sort_unstable();
        want.sort_unstable();
        assert_eq!(keys, want);
    }
}

#[test]
fn exceptional_scan_writes_both_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = aqrm(dir.path(), &["exceptional", "--delta", "2", "--r", "2", "--g-max", "3", "--n-pole-cap", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let pts = check_layout(dir.path(), "exceptional");
    let degenerate: Vec<f64> = pts.iter().filter(|r| r["kind"] == "degenerate").map(|r| num(r, "g")).collect();
    for g in [0.58151, 2.06499, 2.12289, 2.862] {
        assert!(degenerate.iter().any(|d| (d - g).abs() < 1e-4), "{g} missing from {degenerate:?}");
    }
    assert!(pts.iter().any(|r| r["kind"] == "nondegenerate"));
    let curves = check_layout(dir.path(), "f_curves");
    assert!(curves.iter().any(|r| r["n"] == "2"));
}

#[test]
fn isotropic_scan_reports_only_judd_points() {
    let dir = tempfile::tempdir().unwrap();
    let out = aqrm(dir.path(), &["exceptional", "--delta", "1", "--r", "1", "--g-max", "2", "--n-pole-cap", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let pts = check_layout(dir.path(), "exceptional");
    let degenerate: Vec<_> = pts.iter().filter(|r| r["kind"] == "degenerate").collect();
    assert!(!degenerate.is_empty());
    // the lowest pole line carries no Judd point
    assert!(degenerate.iter().all(|r| r["n"] != "0" && r["confirmed"] == "true"));
}

#[test]
fn phase_boundary_approaches_rotating_wave_limit() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["phase-diagram", "--delta", "1.5", "--r-min", "0.001", "--r-max", "0.01", "--r-steps", "2", "--n-pole-cap", "1"];
    let out = aqrm(dir.path(), &args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = check_layout(dir.path(), "phase");
    let first = rows.iter().find(|r| r["n"] == "0" && num(r, "r") == 0.001).unwrap();
    assert!((num(first, "g_c") - 1.5f64.sqrt()).abs() < 1e-5);
    assert_eq!((first["gs_parity_below"].as_str(), first["gs_parity_above"].as_str()), ("+1", "-1"));
}

#[test]
fn phase_parity_alternates_across_confirmed_boundaries() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["phase-diagram", "--delta", "1", "--r-min", "0.5", "--r-max", "0.6", "--r-steps", "2", "--n-pole-cap", "3"];
    let out = aqrm(dir.path(), &args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = check_layout(dir.path(), "phase");
    let confirmed: Vec<_> = rows.iter().filter(|r| num(r, "r") == 0.5 && r["confirmed"] == "true").collect();
    assert!(confirmed.len() >= 3);
    for w in confirmed.windows(2) {
        assert!(num(w[0], "g_c") < num(w[1], "g_c"));
        assert_eq!(w[0]["gs_parity_above"], w[1]["gs_parity_below"]);
        assert_ne!(w[1]["gs_parity_below"], w[1]["gs_parity_above"]);
    }
}

#[test]
fn validation_passes_at_default_cutoff() {
    let dir = tempfile::tempdir().unwrap();
    let out = aqrm(dir.path(), &["validate", "--delta", "0.8", "--r", "1.4", "--g-steps", "9"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = check_layout(dir.path(), "validate");
    assert!(rows.iter().all(|r| r["status"] == "ok" || r["status"] == "near-exceptional"));
}

#[test]
fn capped_cutoff_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let out = aqrm(dir.path(), &["validate", "--delta", "1", "--r", "2", "--g-min", "1", "--g-max", "1.5", "--g-steps", "3", "--trunc", "20"]);
    assert_eq!(out.status.code(), Some(1));
    let rows = check_layout(dir.path(), "validate");
    assert!(rows.iter().any(|r| r["status"].contains("not-converged")));
    let meta: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["summary"]["passed"], false);
}
