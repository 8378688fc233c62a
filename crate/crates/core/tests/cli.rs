use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ringlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ringlab"))
        .arg("--out-dir")
        .arg(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn spectra_cycle() {
    let dir = tempfile::tempdir().unwrap();
    let o = ringlab(dir.path(), &["spectra", "--topology", "cycle", "--n", "10"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("spectra.json")).unwrap()).unwrap();
    let ratio = v["max_im_re_ratio"].as_f64().unwrap();
    assert!((ratio - 1.0 / (std::f64::consts::PI / 10.0).tan()).abs() < 1e-6);
    assert_eq!(v["config"]["n"], 10);
    assert_eq!(v["eigenvalues"].as_array().unwrap().len(), 10);
}

#[test]
fn spectra_custom_reversible_is_real() {
    let dir = tempfile::tempdir().unwrap();
    let rates = dir.path().join("rates.csv");
    fs::write(&rates, "i,j,q\n2,1,1\n1,2,2\n3,2,0.5\n2,3,0.25\n").unwrap();
    let o = ringlab(dir.path(), &["spectra", "--topology", "custom", "--rates", rates.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("spectra.json")).unwrap()).unwrap();
    assert_eq!(v["all_real"], true);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&ringlab(dir.path(), &["spectra", "--topology", "cycle"])), 2);
    assert_eq!(code(&ringlab(dir.path(), &["simulate", "--n", "4", "--sigma", "-1"])), 2);
    assert_eq!(code(&ringlab(dir.path(), &["simulate", "--sigma", "1"])), 2);
    assert_eq!(code(&ringlab(dir.path(), &["no-such-command"])), 2);
    let missing = dir.path().join("missing.json");
    assert_eq!(code(&ringlab(dir.path(), &["sweep", "--config", missing.to_str().unwrap()])), 2);
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"n_values\": []}").unwrap();
    assert_eq!(code(&ringlab(dir.path(), &["sweep", "--config", bad.to_str().unwrap()])), 2);
    assert_eq!(code(&ringlab(dir.path(), &["--help"])), 0);
}

#[test]
fn simulate_is_byte_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["simulate", "--topology", "ring", "--n", "5", "--sigma", "0.5", "--seed", "3", "--t-final", "200"];
    assert_eq!(code(&ringlab(a.path(), &args)), 0);
    assert_eq!(code(&ringlab(b.path(), &args)), 0);
    let ta = fs::read(a.path().join("trajectory.csv")).unwrap();
    assert_eq!(ta, fs::read(b.path().join("trajectory.csv")).unwrap());
    let text = String::from_utf8(ta).unwrap();
    let mut lines = text.lines();
    let comment = lines.next().unwrap();
    assert!(comment.starts_with("# {"));
    let config: serde_json::Value = serde_json::from_str(&comment[2..]).unwrap();
    assert_eq!(config["seed"], 3);
    assert_eq!(config["sigma"], 0.5);
    assert_eq!(lines.next(), Some("t,z1,z2,z3,z4,z5,y1,y2,y3,y4,y5"));
    assert_eq!(lines.count(), 2001);
}

#[test]
fn classify_chain_reports_sync() {
    let dir = tempfile::tempdir().unwrap();
    let o = ringlab(dir.path(), &["classify", "--topology", "chain", "--n", "3", "--sigma", "1.5"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("classification.json")).unwrap()).unwrap();
    assert_eq!(v["record"]["kind"], "sync");
    assert_eq!(v["config"]["topology"]["kind"], "directed-chain");
    assert!(dir.path().join("trajectory.csv").exists());
}

#[test]
fn classify_unresolved_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    // uncoupled chain over a short horizon never synchronizes
    let o = ringlab(dir.path(), &["classify", "--topology", "chain", "--n", "3", "--sigma", "0", "--t-final", "2000"]);
    assert_eq!(code(&o), 4);
}

#[test]
fn custom_edges_topology() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("edges.csv");
    fs::write(&edges, "from,to,weight\n1,2,1\n2,3,1\n3,1,1\n").unwrap();
    let o = ringlab(dir.path(), &[
        "simulate", "--topology", "custom", "--edges", edges.to_str().unwrap(), "--sigma", "1", "--t-final", "10",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn small_sweep_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.json");
    fs::write(
        &cfg,
        r#"{"n_values":[3,6],"sigma_values":[0.5,2.0],"samples_per_cell":3,"t_final":3000,"master_seed":5,"topology":"ring","floquet":false}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = ringlab(&out, &["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let grid = fs::read_to_string(out.join("grid.csv")).unwrap();
    assert!(grid.starts_with("# {"));
    assert!(grid.contains("\"master_seed\":5"));
    assert_eq!(grid.lines().count(), 2 + 4);
    let region = fs::read_to_string(out.join("region.csv")).unwrap();
    // rerun resumes from the stored cells with identical output
    let o = ringlab(&out, &["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read_to_string(out.join("grid.csv")).unwrap(), grid);
    assert_eq!(fs::read_to_string(out.join("region.csv")).unwrap(), region);
}

#[test]
fn floquet_default_wave() {
    let dir = tempfile::tempdir().unwrap();
    let o = ringlab(dir.path(), &["floquet"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("floquet.json")).unwrap()).unwrap();
    assert_eq!(v["floquet"]["stable"], true);
    assert!(dir.path().join("orbit.csv").exists());
}

#[test]
fn floquet_without_wave_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let o = ringlab(dir.path(), &["floquet", "--n", "3", "--sigma", "10"]);
    assert_eq!(code(&o), 4);
}

#[test]
fn two_rings_demo_runs() {
    let dir = tempfile::tempdir().unwrap();
    let o = ringlab(dir.path(), &["two-rings-demo"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("two_rings.json")).unwrap()).unwrap();
    assert_eq!(v["ring1"]["regime"], "near-sync");
    assert_eq!(v["ring2"]["regime"], "near-wave");
    assert_eq!(v["config"]["demo"]["k"], 10);
    assert!(dir.path().join("two_rings_excerpt.csv").exists());
}
