use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qlm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qlm-magic"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON record")
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn dim_prints_lucas_number() {
    let v = stdout_json(&qlm(&["dim", "--length", "20"]));
    assert_eq!(v["outputs"]["dim"], 15127);
    assert_eq!(v["command"], "dim");
    qlm_magic::io::validate_record(&v).unwrap();
}

#[test]
fn basis_lists_momentum_representatives() {
    let v = stdout_json(&qlm(&["basis", "--length", "6", "--momentum", "0"]));
    assert_eq!(v["outputs"]["count"], 5);
    let all = stdout_json(&qlm(&["basis", "--length", "6"]));
    assert_eq!(all["outputs"]["count"], 18);
}

#[test]
fn exact_methods_agree() {
    let a = stdout_json(&qlm(&["sre-exact", "--length", "8", "--u", "-1.2", "--v", "0.4"]));
    let b = stdout_json(&qlm(&[
        "sre-exact", "--length", "8", "--u", "-1.2", "--v", "0.4", "--method", "quadruple",
    ]));
    let (x, y) = (a["outputs"]["M2"].as_f64().unwrap(), b["outputs"]["M2"].as_f64().unwrap());
    assert!((x - y).abs() < 1e-10, "{x} vs {y}");
}

#[test]
fn gs_writes_text_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gs.txt");
    let out = qlm(&[
        "gs", "--length", "10", "--u", "0.5", "--v", "1.0", "--amplitudes", "--out", path.to_str().unwrap(),
    ]);
    let v = stdout_json(&out);
    let gs = qlm_magic::io::read_gs_text(&path).unwrap();
    let e: f64 = gs.get("energy").unwrap().parse().unwrap();
    assert!((e - v["outputs"]["energy"].as_f64().unwrap()).abs() < 1e-12);
    assert_eq!(gs.amplitudes.len(), 123);
}

#[test]
fn sampling_is_reproducible_for_fixed_seed() {
    let args = ["sre-sample", "--length", "12", "--beta", "0.3", "--samples", "60", "--runs", "3", "--seed", "11"];
    let a = stdout_json(&qlm(&args));
    let b = stdout_json(&qlm(&args));
    assert_eq!(a["outputs"]["per_run"], b["outputs"]["per_run"]);
    let c = stdout_json(&qlm(&[
        "sre-sample", "--length", "12", "--beta", "0.3", "--samples", "60", "--runs", "3", "--seed", "12",
    ]));
    assert_ne!(a["outputs"]["per_run"], c["outputs"]["per_run"]);
}

#[test]
fn sampling_with_one_thread_matches_default() {
    let args = ["sre-sample", "--length", "10", "--u", "-1", "--v", "1", "--samples", "40", "--runs", "4"];
    let a = stdout_json(&qlm(&args));
    let mut single = vec!["--threads", "1"];
    single.extend_from_slice(&args);
    let b = stdout_json(&qlm(&single));
    assert_eq!(a["outputs"]["per_run"], b["outputs"]["per_run"]);
}

#[test]
fn rk_line_reports_closed_forms() {
    let v = stdout_json(&qlm(&["rk-line", "--beta", "0", "--length", "40", "--finite"]));
    let asym = v["outputs"]["m2_asymptotic"].as_f64().unwrap();
    let fin = v["outputs"]["m2_finite"].as_f64().unwrap();
    assert!((asym - fin).abs() < 1e-3);
    assert!((v["outputs"]["U"].as_f64().unwrap() + 2.0).abs() < 1e-12);

    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("rk.csv");
    let out = qlm(&["rk-line", "--scan", "-1", "1", "4", "--length", "12", "--out", csv.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(text.starts_with("beta,U,V,lambda,m2_asymptotic,m2_finite_L12"));
}

#[test]
fn gauge_verify_passes_default_dictionary() {
    let v = stdout_json(&qlm(&["gauge-verify", "--length", "4"]));
    let o = &v["outputs"];
    assert_eq!(o["dual_map_bijective"], true);
    assert!(o["max_difference"].as_f64().unwrap() < 1e-10);
    assert_eq!(o["sector_dim"], 7);
}

#[test]
fn sweep_resume_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("sweep.conf");
    write(&conf, "[chain]\nlengths = 6, 8\nv = 1.5\n\n[sweep]\nu_scan = -3.0, -2.0, 0.25\nmethod = pauli\n");
    let out = dir.path().join("out");
    let (c, o) = (conf.to_str().unwrap(), out.to_str().unwrap());
    let first = stdout_json(&qlm(&["sweep", "--config", c, "--out", o]));
    assert_eq!(first["outputs"]["failed_points"], 0);
    let rows = qlm_magic::io::read_sweep_csv(&out.join("sweep_L8.csv")).unwrap();
    assert_eq!(rows.len(), 5);
    assert!(out.join("manifest.json").exists());
    assert_eq!(std::fs::read_to_string(out.join("checkpoint.jsonl")).unwrap().lines().count(), 10);

    let again = stdout_json(&qlm(&["sweep", "--config", c, "--out", o, "--resume"]));
    assert_eq!(again["inputs"]["resumed_points"], 10);
    let rows2 = qlm_magic::io::read_sweep_csv(&out.join("sweep_L8.csv")).unwrap();
    assert_eq!(rows, rows2);

    let plots = dir.path().join("plots");
    let p = stdout_json(&qlm(&["emit-plots", "--sweep", o, "--out", plots.to_str().unwrap()]));
    assert_eq!(p["outputs"]["files"].as_array().unwrap().len(), 4);
}

#[test]
fn fit_alpha_recovers_linear_law() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("m2.csv");
    write(&csv, "L,M2\n10,3.0\n20,6.0\n30,9.0\n40,12.0\n");
    let v = stdout_json(&qlm(&["fit-alpha", "--in", csv.to_str().unwrap(), "--window", "3"]));
    let fits = v["outputs"]["fits"].as_array().unwrap();
    assert_eq!(fits.len(), 2);
    for f in fits {
        assert!((f["alpha"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn exit_codes_distinguish_failures() {
    assert_eq!(qlm(&["dim", "--length", "1"]).status.code(), Some(2));
    assert_eq!(qlm(&["sre-exact", "--length", "8"]).status.code(), Some(2));
    assert_eq!(qlm(&["fit-alpha", "--in", "/nonexistent/m2.csv"]).status.code(), Some(4));

    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("bad.conf");
    write(&conf, "[chain]\nlength = 1\nu = x\nbogus = 3\n");
    let out = qlm(&["dim", "--length", "4", "--config", conf.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2") && err.contains("line 3") && err.contains("line 4"), "{err}");

    let garbled = dir.path().join("bad.csv");
    write(&garbled, "L,M2\n10,abc\n");
    assert_eq!(qlm(&["fit-alpha", "--in", garbled.to_str().unwrap()]).status.code(), Some(4));
}

#[test]
fn out_flag_writes_valid_record() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rec.json");
    stdout_json(&qlm(&["dim", "--length", "9", "--out", path.to_str().unwrap()]));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    qlm_magic::io::validate_record(&v).unwrap();
    assert_eq!(v["outputs"]["dim"], 76);
}
