use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn skytex(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skytex")).arg("--out").arg(out).args(args).output().expect("binary runs")
}

fn ok(out: &Path, args: &[&str]) -> String {
    let o = skytex(out, args);
    assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn file_pipeline_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();

    let prep = d.join("prep");
    ok(&prep, &["prepare"]);
    let field_q = json(&prep.join("diagnostics.json"))["q"].as_f64().unwrap();
    assert!((field_q + 1.0).abs() < 0.03, "{field_q}");
    assert!(prep.join("field-quiver.svg").exists());

    let crystal = prep.join("crystal.json");
    let meas = d.join("meas");
    ok(&meas, &["measure", "--input", path_str(&prep.join("field.csv")), "--crystal", path_str(&crystal)]);
    let shots: Vec<_> = ["x", "y", "z"].iter().map(|b| meas.join(format!("shots_{b}.csv"))).collect();

    let rec = d.join("rec");
    let mut args = vec!["reconstruct", "--crystal", path_str(&crystal), "--input"];
    args.extend(shots.iter().map(|p| path_str(p)));
    ok(&rec, &args);
    let measured = json(&rec.join("diagnostics.json"));
    assert!(measured["mean_fidelity"].as_f64().unwrap() >= 0.9);

    let diag = d.join("diag");
    ok(&diag, &["diagnose", "--input", path_str(&rec.join("binned.csv")), "--crystal", path_str(&crystal)]);
    assert_eq!(json(&diag.join("diagnostics.json"))["mean_fidelity"], measured["mean_fidelity"]);

    let render = d.join("render");
    ok(&render, &["render", "--input", path_str(&rec.join("binned.csv")), "--style", "heatmap-z"]);
    let svg = std::fs::read_to_string(render.join("binned-heatmap-z.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(!render.join("binned-quiver.svg").exists());
}

#[test]
fn binary_shot_files_round_trip_through_reconstruct() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    ok(&a, &["--set", "measurement.shot_format=\"binary\"", "measure"]);
    let rec = tmp.path().join("rec");
    let inputs: Vec<String> =
        ["x", "y", "z"].iter().map(|b| path_str(&a.join(format!("shots_{b}.bin"))).to_owned()).collect();
    let mut args = vec!["reconstruct", "--input"];
    args.extend(inputs.iter().map(String::as_str));
    ok(&rec, &args);
    let direct = tmp.path().join("direct");
    ok(&direct, &["reconstruct"]);
    assert_eq!(std::fs::read(rec.join("binned.csv")).unwrap(), std::fs::read(direct.join("binned.csv")).unwrap());
}

#[test]
fn spacing_beyond_radius_gives_one_ion() {
    let tmp = tempfile::tempdir().unwrap();
    let stdout = ok(tmp.path(), &["--set", "crystal.spacing_um=200", "crystal"]);
    assert!(stdout.contains("n_ions = 1"), "{stdout}");
    let doc = json(&tmp.path().join("crystal.json"));
    assert_eq!(doc["ions"].as_array().unwrap().len(), 1);
}

#[test]
fn rwa_check_reports_the_frequency_ratio() {
    let tmp = tempfile::tempdir().unwrap();
    ok(tmp.path(), &["rwa-check"]);
    let ratio = json(&tmp.path().join("rwa.json"))["report"]["ratio"].as_f64().unwrap();
    assert!((ratio - 1.56 / 52.0).abs() < 1e-9, "{ratio}");

    let slow =
        skytex(tmp.path(), &["--set", "drive.rotation_hz=5000", "--set", "drive.microwave_rabi_hz=5000", "rwa-check"]);
    assert_eq!(slow.status.code(), Some(3));
}

#[test]
fn resolved_config_is_always_written() {
    let tmp = tempfile::tempdir().unwrap();
    ok(tmp.path(), &["--seed", "9", "--format", "svg", "crystal"]);
    let cfg = json(&tmp.path().join("resolved_config.json"));
    assert_eq!(cfg["seed"], 9);
    assert!(!tmp.path().join("crystal.json").exists());
}

#[test]
fn config_errors_exit_2_and_name_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let o = skytex(tmp.path(), &["--set", "drive.eta_x=-1", "prepare"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("drive.eta_x"));

    let o = skytex(tmp.path(), &["--set", "measurement.n_shots=\"many\"", "measure"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("measurement.n_shots"));

    let cfg = tmp.path().join("bad.json");
    std::fs::write(&cfg, r#"{"schema": 1, "drive": {"eta": 0.3}}"#).unwrap();
    let o = skytex(tmp.path(), &["--config", path_str(&cfg), "prepare"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("drive.eta"));
}

#[test]
fn input_errors_exit_5() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    assert_eq!(skytex(tmp.path(), &["diagnose", "--input", path_str(&empty)]).status.code(), Some(5));

    let missing = tmp.path().join("nope.csv");
    assert_eq!(skytex(tmp.path(), &["render", "--input", path_str(&missing)]).status.code(), Some(5));

    let small = tmp.path().join("small");
    ok(&small, &["--set", "crystal.radius_um=60", "prepare"]);
    let o = skytex(tmp.path(), &["measure", "--input", path_str(&small.join("field.csv"))]);
    assert_eq!(o.status.code(), Some(5));
}
