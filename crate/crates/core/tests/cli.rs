use std::fs;
use std::path::Path;
use std::process::Command;

fn rydpol(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_rydpol"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn header_hash(path: &Path) -> String {
    let text = fs::read_to_string(path).unwrap();
    let first = text.lines().next().unwrap();
    first
        .split_whitespace()
        .find_map(|w| w.strip_prefix("config_hash="))
        .unwrap()
        .to_string()
}

#[test]
fn predict_prints_derived_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let out = rydpol(dir.path(), &["predict"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["od"], 72.0);
    assert!((v["r_b"].as_f64().unwrap() - 10.87).abs() < 0.01);

    let out = rydpol(dir.path(), &["predict", "--od-sweep", "10:72:5", "--out", "o"]);
    assert!(out.status.success());
    let csv = dir.path().join("o/predict.csv");
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("od,tau_cross_us,tau_self_us,g2_cross0,g2_cross0_floored,t_cw"));
    assert_eq!(text.lines().count(), 7);
    assert_eq!(header_hash(&csv).len(), 64);
}

#[test]
fn exit_codes_follow_error_class() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "gamma_e_mhz = 0\n").unwrap();
    let out = rydpol(dir.path(), &["--config", "bad.toml", "predict"]);
    assert_eq!(out.status.code(), Some(2));
    let out = rydpol(dir.path(), &["tags", "analyze", "--in", "missing.csv"]);
    assert_eq!(out.status.code(), Some(4));
    fs::write(dir.path().join("bad.csv"), "window_id,detector,time_ps\n0,7,10\n").unwrap();
    let out = rydpol(dir.path(), &["tags", "analyze", "--in", "bad.csv"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn pair_solve_synthesis_and_analysis_chain() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("c.toml"), "od = 20.0\ngrid_points = 128\n").unwrap();
    let out = rydpol(d, &["--config", "c.toml", "solve-pair", "--geometry", "counter", "--out", "pair"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["pair_map.csv", "g2_tau.csv", "pair_summary.json"] {
        assert!(d.join("pair").join(f).exists(), "{f}");
    }
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("pair/pair_summary.json")).unwrap()).unwrap();
    assert!(summary["residual"].as_f64().unwrap() < 1e-10);
    assert_eq!(summary["config"]["od"], 20.0);

    let synth = |seed: &str, out: &str| {
        rydpol(
            d,
            &["--config", "c.toml", "--seed", seed, "tags", "synth", "--model", "pair/g2_tau.csv", "--windows", "500", "--out", out],
        )
    };
    assert!(synth("5", "a.bin").status.success());
    assert!(synth("5", "b.bin").status.success());
    assert_eq!(fs::read(d.join("a.bin")).unwrap(), fs::read(d.join("b.bin")).unwrap());

    let out = rydpol(d, &["tags", "analyze", "--in", "a.bin", "--mode", "cross", "--bin-ns", "100", "--out", "est"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("est/tags_summary.json")).unwrap()).unwrap();
    let g0 = s["g2_0"].as_f64().unwrap();
    assert!(g0 < 0.2, "{g0}");
}

#[test]
fn json_format_and_triple_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("c.toml"), "od = 9.5\n").unwrap();
    let out = rydpol(d, &["--config", "c.toml", "--format", "json", "solve-triple", "--grid", "48", "--out", "t"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let map: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("t/g3_map.json")).unwrap()).unwrap();
    let rows = map["rows"].as_array().unwrap();
    assert!(rows[0].get("eta_us").is_some() && rows[0].get("g3").is_some());
    let s: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("t/triple_summary.json")).unwrap()).unwrap();
    assert!(s["g3_00"].as_f64().unwrap() < s["pairwise_product"].as_f64().unwrap() * 2.0);
    assert_eq!(s["config"]["triple_grid_points"], 48);
}
