use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use feducbvi::formats::{load_config, save_fleet, FleetFile};
use feducbvi::output::render_csv;
use feducbvi_core::harness::run_experiment;
use tempfile::TempDir;

fn bin(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_feducbvi"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn run_writes_csv_and_summary() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"env":"synthetic","S":3,"A":2,"H":3,"M":2,"T":3,"output_path":"out.csv"}"#);
    let out = bin(&["run", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("out.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.starts_with("episode,cum_common_regret,round,comm_rounds,messages,bytes\n"));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 1);
    let summary: serde_json::Value = serde_json::from_str(stdout.trim()).unwrap();
    assert!(summary["wall_time_secs"].as_f64().unwrap() >= 0.0);
    assert_eq!(summary["T"], 3);
}

#[test]
fn out_of_range_delta_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"delta":1.5,"T":5}"#);
    let out = bin(&["run", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("delta"));
}

#[test]
fn malformed_and_missing_configs() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"env":"ocean"}"#);
    assert_eq!(bin(&["run", &cfg], dir.path()).status.code(), Some(1));
    assert_eq!(bin(&["run", "does-not-exist.json"], dir.path()).status.code(), Some(2));
    assert_eq!(bin(&["fly"], dir.path()).status.code(), Some(1));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "blocker", "not a directory");
    let cfg = write(dir.path(), "c.json", r#"{"T":5,"M":2,"output_path":"blocker/out.csv"}"#);
    let out = bin(&["run", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("blocker"));
}

#[test]
fn cli_output_matches_the_library() {
    let dir = TempDir::new().unwrap();
    let cfg_path = write(
        dir.path(),
        "c.json",
        r#"{"env":"gridworld","H":6,"M":3,"T":40,"eps_p":0.2,"eps_r":0.1,"seed":1,"output_path":"cli.csv"}"#,
    );
    let out = bin(&["run", "--seed", "9", "--algorithm", "concurrent_ucbvi", &cfg_path], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let mut cfg = load_config(Path::new(&cfg_path)).unwrap();
    cfg.seed = 9;
    cfg.algorithm = feducbvi_core::harness::Algorithm::ConcurrentUcbvi;
    let expected = render_csv(&run_experiment(&cfg).unwrap());
    assert_eq!(fs::read_to_string(dir.path().join("cli.csv")).unwrap(), expected);
    // concurrent mode: one round per episode
    assert!(expected.lines().last().unwrap().starts_with("40,"));
    assert!(expected.lines().last().unwrap().contains(",40,40,"));
}

#[test]
fn oracle_prints_closed_form_and_gridworld_range() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "l.json", r#"{"env":"lower_bound","H":2,"eps_p":0.5}"#);
    let out = bin(&["oracle", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["optimal_value"].as_f64(), Some(1.5));

    let cfg = write(dir.path(), "g.json", r#"{"env":"gridworld","H":10}"#);
    let out = bin(&["oracle", &cfg, "--fleet-out", "fleet.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let v1 = v["optimal_value"].as_f64().unwrap();
    assert!(v1 > 0.0 && v1 <= 10.0);
    assert!(dir.path().join("fleet.json").exists());

    let cfg = write(dir.path(), "s.json", r#"{"env":"synthetic","S":2,"A":2,"H":2,"seed":3}"#);
    let a = bin(&["oracle", &cfg], dir.path()).stdout;
    let b = bin(&["oracle", &cfg], dir.path()).stdout;
    assert_eq!(a, b);
}

#[test]
fn check_passes_on_a_small_homogeneous_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"S":3,"A":2,"H":3,"M":3,"T":200}"#);
    let out = bin(&["check", &cfg], dir.path());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 7);
}

#[test]
fn check_flags_a_corrupted_kernel_row() {
    let dir = TempDir::new().unwrap();
    let cfg_path = write(dir.path(), "c.json", r#"{"S":3,"A":2,"H":3,"M":2,"T":50,"eps_p":0.1}"#);
    let fleet = load_config(Path::new(&cfg_path)).unwrap().build_fleet().unwrap();
    let fleet_path = dir.path().join("fleet.json");
    save_fleet(&fleet_path, &fleet).unwrap();
    let mut file: FleetFile = serde_json::from_str(&fs::read_to_string(&fleet_path).unwrap()).unwrap();
    file.common_kernel[1][2][0][0] += 0.25;
    fs::write(&fleet_path, serde_json::to_string(&file).unwrap()).unwrap();

    let out = bin(&["check", &cfg_path, "--fleet", "fleet.json"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.lines().any(|l| l.starts_with("FAIL stochasticity")), "{stdout}");
}

#[test]
fn sweep_writes_cells_and_summary() {
    let dir = TempDir::new().unwrap();
    let spec = write(
        dir.path(),
        "sweep.json",
        r#"{"base":{"S":3,"A":2,"H":3,"T":30},"eps_p_values":[0.0,0.1],"M_values":[1,2],"seeds":[4],"output_dir":"out"}"#,
    );
    let out = bin(&["sweep", &spec, "--jobs", "2"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(dir.path().join("out/summary.csv")).unwrap();
    let rows: Vec<&str> = summary.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    for row in rows {
        let f: Vec<&str> = row.split(',').collect();
        let name = format!("synthetic_ep{}_M{}_s{}.csv", f[0], f[1], f[2]);
        let csv = fs::read_to_string(dir.path().join("out").join(name)).unwrap();
        let last: Vec<&str> = csv.lines().last().unwrap().split(',').collect();
        assert_eq!(last[1], f[3]);
        assert_eq!(last[3], f[4]);
    }
}

#[test]
fn failing_sweep_cell_is_named() {
    let dir = TempDir::new().unwrap();
    let spec = write(
        dir.path(),
        "sweep.json",
        r#"{"base":{"T":10},"eps_p_values":[0.0,1.5],"M_values":[2],"seeds":[0],"output_dir":"out"}"#,
    );
    let out = bin(&["sweep", &spec], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("eps_p=1.5"));
}
