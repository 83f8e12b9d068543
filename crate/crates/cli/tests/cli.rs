use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn sfl(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("run.json");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_sfl"))
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(args)
        .output()
        .unwrap()
}

fn table(dir: &Path, name: &str) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(dir.join("out").join(name)).unwrap();
    r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect()
}

fn col(rows: &[Vec<String>], k: usize) -> Vec<f64> {
    rows.iter().map(|r| r[k].parse().unwrap()).collect()
}

const DC_GAMMA_A: &str =
    r#"{"model":{"model":"double_chain","t1":1,"t2":1,"delta":4,"gamma":3.872983346207417,"n_cells":20,"m":11}}"#;

fn impurity(gamma: f64) -> String {
    format!(r#"{{"model":{{"model":"impurity_chain","t":1,"gamma":{gamma},"length":40,"m":20}}}}"#)
}

#[test]
fn both_routes_agree_and_are_recorded() {
    let d = TempDir::new().unwrap();
    let out = sfl(d.path(), DC_GAMMA_A, &["--method", "both", "spectrum"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.path().join("out/match.json")).unwrap()).unwrap();
    assert!(m["distance"].as_f64().unwrap() <= 1e-7);
    let rows = table(d.path(), "spectrum.csv");
    assert_eq!(rows.len(), 80);
    assert!(rows.iter().all(|r| r[3] == "sfl"));
}

#[test]
fn csv_header_and_precision() {
    let d = TempDir::new().unwrap();
    assert!(sfl(d.path(), &impurity(0.0), &["spectrum"]).status.success());
    let text = std::fs::read_to_string(d.path().join("out/spectrum.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("index,re_e,im_e,class,chi,xi,residual,method"));
    let re = lines.next().unwrap().split(',').nth(1).unwrap().to_string();
    let mantissa = re.trim_start_matches('-').split('e').next().unwrap();
    assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17);
}

#[test]
fn hermitian_impurity_ring_is_extended() {
    let d = TempDir::new().unwrap();
    assert!(sfl(d.path(), &impurity(0.0), &["spectrum"]).status.success());
    let rows = table(d.path(), "spectrum.csv");
    assert!(rows.iter().all(|r| r[3] == "extended"));
    assert!(col(&rows, 2).iter().all(|x| x.abs() <= 1e-10));
}

#[test]
fn one_bound_state_past_threshold() {
    let d = TempDir::new().unwrap();
    assert!(sfl(d.path(), &impurity(2.05), &["spectrum"]).status.success());
    let rows = table(d.path(), "spectrum.csv");
    assert_eq!(rows.iter().filter(|r| r[3] == "bound").count(), 1);
}

#[test]
fn phase_diagram_table() {
    let d = TempDir::new().unwrap();
    let out = sfl(d.path(), DC_GAMMA_A, &["phase-diagram", "--delta", "0.5:8:16", "--gamma", "0:10:21"]);
    assert!(out.status.success());
    let rows = table(d.path(), "phase.csv");
    assert_eq!(rows.len(), 16 * 21);
    assert_eq!(rows.iter().map(|r| r[2].parse::<usize>().unwrap()).max(), Some(38));
    // δ = 0.5 < t₁ without gain and loss
    assert_eq!((rows[0][0].as_str(), rows[0][1].as_str(), rows[0][3].as_str()), ("5.0000000000000000e-1", "0.0000000000000000e0", "0"));
    let a = rows.iter().find(|r| r[0].parse::<f64>().unwrap() == 4.0 && r[1].parse::<f64>().unwrap() == 1.0).unwrap();
    assert_eq!(a[4], "pt_unbroken");
    assert!(rows.iter().all(|r| r[8].is_empty()));
}

#[test]
fn scale_free_scaling() {
    let d = TempDir::new().unwrap();
    let cfg = r#"{"model":{"model":"double_chain","t1":1,"t2":1,"delta":4,"gamma":3.4,"n_cells":20,"m":11}}"#;
    assert!(sfl(d.path(), cfg, &["scaling", "--sizes", "40,80,160"]).status.success());
    let r = col(&table(d.path(), "scaling.csv"), 2);
    let (lo, hi) = r.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    assert!((hi - lo) / lo <= 0.02, "{r:?}");
}

#[test]
fn quasiperiodic_profiles_collapse() {
    let d = TempDir::new().unwrap();
    let cfg = r#"{"model":{"model":"aa_nonreciprocal","t":1,"lambda":0.05,"delta":8,"gamma":7.937253933193772,"length":20,"m":11},
                  "scaling":{"sizes":[20,40,80]}}"#;
    assert!(sfl(d.path(), cfg, &["scaling"]).status.success());
    let e = col(&table(d.path(), "scaling.csv"), 4);
    assert!(*e.last().unwrap() <= 0.05, "{e:?}");
}

#[test]
fn bound_state_keeps_its_length() {
    let d = TempDir::new().unwrap();
    assert!(sfl(d.path(), &impurity(2.05), &["scaling", "--sizes", "40,80", "--select", "bound"]).status.success());
    let rows = table(d.path(), "scaling.csv");
    let xi = col(&rows, 1);
    let per = col(&rows, 2);
    assert!(((xi[1] - xi[0]) / xi[0]).abs() <= 0.1, "{xi:?}");
    assert!((per[1] / per[0] - 0.5).abs() <= 0.05, "{per:?}");
}

#[test]
fn missing_bound_state_is_a_solver_error() {
    let d = TempDir::new().unwrap();
    let out = sfl(d.path(), &impurity(1.0), &["scaling", "--sizes", "40,80", "--select", "bound"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn config_errors_exit_with_two() {
    let d = TempDir::new().unwrap();
    let aa = r#"{"model":{"model":"aa_imaginary","t":1,"lambda":0.1,"gamma":1,"length":60,"m":30}}"#;
    assert_eq!(sfl(d.path(), aa, &["--method", "secular", "spectrum"]).status.code(), Some(2));
    assert_eq!(sfl(d.path(), "{}", &["spectrum"]).status.code(), Some(2));
    assert_eq!(sfl(d.path(), "not json", &["spectrum"]).status.code(), Some(2));
    assert_eq!(sfl(d.path(), DC_GAMMA_A, &["scaling", "--sizes", "40"]).status.code(), Some(2));
    let bad = r#"{"model":{"model":"impurity_chain","t":1,"gamma":1,"length":40,"m":41}}"#;
    assert_eq!(sfl(d.path(), bad, &["spectrum"]).status.code(), Some(2));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    for d in [&a, &b] {
        assert!(sfl(d.path(), DC_GAMMA_A, &["--method", "both", "spectrum"]).status.success());
        assert!(sfl(d.path(), DC_GAMMA_A, &["phase-diagram", "--delta", "1:5:5", "--gamma", "0:6:7"]).status.success());
    }
    for f in ["spectrum.csv", "match.json", "phase.csv"] {
        let x = std::fs::read(a.path().join("out").join(f)).unwrap();
        let y = std::fs::read(b.path().join("out").join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
}

#[test]
fn json_format_and_state_profiles() {
    let d = TempDir::new().unwrap();
    let out = sfl(d.path(), &impurity(2.05), &["--format", "json", "states", "--select", "largest-im"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.path().join("out/states.json")).unwrap()).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 40);
    let peak = rows.iter().map(|r| r["abs_psi"].as_f64().unwrap()).fold(0.0, f64::max);
    assert_eq!(peak, 1.0);
}

#[test]
fn verify_reports_every_criterion() {
    let out = Command::new(env!("CARGO_BIN_EXE_sfl")).arg("verify").output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]") || l.starts_with("[FAIL]")).count(), 11);
    let all_pass = text.lines().all(|l| !l.starts_with("[FAIL]"));
    assert_eq!(out.status.success(), all_pass);
}
