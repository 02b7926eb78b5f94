use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dswap(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_dswap"))
        .args(args)
        .output()
        .expect("run dswap");
    assert!(
        out.status.success(),
        "dswap {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

#[test]
fn matchseq_reports_pairing_number_first() {
    let text = stdout(&dswap(&["matchseq", "--path", "5"]));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("6"));
    assert!(text.contains("wins: true"));
}

#[test]
fn matchseq_constructive_on_grid() {
    let text = stdout(&dswap(&["matchseq", "--grid", "3x3", "--constructive"]));
    let len: usize = text.lines().next().unwrap().parse().unwrap();
    assert!(len <= 729);
    assert!(text.contains("wins: true"));
}

#[test]
fn protocol_generation_verifies() {
    let v = json(&dswap(&["protocol", "--gen", "L=12", "λ=3", "--verify"]));
    assert_eq!(v["winning"], true);
    assert_eq!(v["mixing_ok"], true);
    assert_eq!(v["window_gates"], 12);
}

#[test]
fn protocol_export_import_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("seq.txt");
    let file = file.to_str().unwrap();
    dswap(&["protocol", "--gen", "L=24", "lambda=4", "--export", file]);
    let v = json(&dswap(&["protocol", "--import", file, "--verify", "--chi", "0.1"]));
    assert_eq!(v["len"], 24);
    assert_eq!(v["lambda"], 4);
    assert_eq!(v["winning"], true);
    assert_eq!(v["schedule"]["cycle_ticks"], 2 * 30);
}

#[test]
fn bad_generation_fails() {
    let out = Command::new(env!("CARGO_BIN_EXE_dswap"))
        .args(["protocol", "--gen", "L=10", "λ=3"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn oracle_and_simulate_agree_roughly() {
    let rates = ["--gamma-plus", "0.05", "--gamma-minus", "1", "--gamma-zero", "0.3"];
    let mut args = vec!["oracle", "--len", "5"];
    args.extend(rates);
    let exact: f64 = stdout(&dswap(&args)).trim().parse().unwrap();
    let mut args = vec!["--trials", "2000", "--seed", "2", "simulate", "--len", "5"];
    args.extend(rates);
    let v = json(&dswap(&args));
    let mean = v["estimate"]["mean"].as_f64().unwrap();
    let se = v["estimate"]["std_error"].as_f64().unwrap();
    assert!((mean - exact).abs() < 4.0 * se, "{mean} ± {se} vs {exact}");
}

#[test]
fn oracle_stationary_is_boltzmann() {
    let text = stdout(&dswap(&["oracle", "--len", "4", "--stationary", "--xi", "1", "--temperature", "0.7"]));
    let line = text.lines().find(|l| l.starts_with("max relative")).unwrap();
    let err: f64 = line.rsplit(' ').next().unwrap().parse().unwrap();
    assert!(err < 1e-8);
}

fn write_config(dir: &Path) -> String {
    let path = dir.join("sweep.toml");
    fs::write(
        &path,
        r#"
lens = [12, 24]
lambdas = [3]
chis = [0.0, 0.001, 0.01]
trials = 40
seed = 4

[[rates]]
kind = "boltzmann"
temperature = 0.2
gamma_minus = 1.0
gamma_zero = 0.05
"#,
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn sweep_then_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = dir.path().join("run");
    let out_s = out.to_str().unwrap();
    dswap(&["--config", &cfg, "--out", out_s, "sweep"]);
    let csv = fs::read_to_string(out.join("lifetimes.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 6);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 4);

    // Same seed, same bytes.
    let again = dir.path().join("again");
    dswap(&["--config", &cfg, "--out", again.to_str().unwrap(), "--threads", "2", "sweep"]);
    assert_eq!(csv, fs::read_to_string(again.join("lifetimes.csv")).unwrap());

    let report = dir.path().join("report");
    dswap(&["--out", report.to_str().unwrap(), "analyze", out_s]);
    let a: serde_json::Value = serde_json::from_str(&fs::read_to_string(report.join("analysis.json")).unwrap()).unwrap();
    assert!(a.is_object());
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let spec: dswap_core::sweep::SweepSpec = toml::from_str(&fs::read_to_string(&path).unwrap())
                .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert!(!spec.points().is_empty());
            n += 1;
        }
    }
    assert!(n >= 5);
}
