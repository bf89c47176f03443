//! End-to-end checks of the `annulus-lab` binary: exit codes, precondition
//! messages, config files and byte-identical reruns.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_annulus-lab"));
    c.env_remove("ANNULUS_LAB_JOBS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8 stdout")
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).expect("utf-8 stderr")
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("annulus-lab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

/// Last line of stdout parsed as JSON.
fn last_json(o: &Output) -> serde_json::Value {
    let out = stdout(o);
    let line = out.lines().last().expect("some output");
    serde_json::from_str(line).unwrap_or_else(|e| panic!("bad JSON {line:?}: {e}"))
}

#[test]
fn example_command_succeeds_with_summary() {
    let o = run(&["example", "--id", "1", "--delta", "2^-6", "--alpha", "0.5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = last_json(&o);
    assert_eq!(v["id"], 1);
    assert_eq!(v["s"], "6");
    assert!(v["frostman_constant"].as_f64().unwrap() > 0.0);
}

#[test]
fn out_of_range_theorem_exponent_exits_2_with_range() {
    let o = run(&["sweep", "--s", "9999", "--p", "3", "--q", "3", "--alpha", "0.5", "--theorem"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("3/(1−α) = 6"), "message should state the admissible range: {err}");
}

#[test]
fn unknown_command_exits_2() {
    let o = run(&["no-such-command"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn non_dyadic_scale_is_a_usage_error() {
    let o = run(&["example", "--id", "2", "--delta", "0.3", "--alpha", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["example", "--id", "4", "--delta", "2^-6", "--alpha", "0.5"]);
    assert_eq!(o.status.code(), Some(2), "example 4 needs α ∈ [1,2]");
    assert!(stderr(&o).contains("[1, 2]"));
}

#[test]
fn reruns_are_byte_identical() {
    let args = ["--seed", "7", "avg", "--union", "4", "--delta", "2^-5", "--alpha", "1"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let seq = bin().args(args).env("ANNULUS_LAB_JOBS", "1").output().unwrap();
    assert_eq!(a.stdout, seq.stdout, "sequential and parallel paths must agree byte for byte");
}

#[test]
fn output_file_carries_verifiable_header() {
    let path = tmp("gen.txt");
    let o = run(&["--seed", "3", "generate", "--delta", "2^-6", "--alpha", "1.5", "--output", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("# annulus-lab "));
    assert!(text.contains("# seed=3"));
    let body = annulus_lab::io::verify_wrapped(&text).expect("hash matches body");
    let set = annulus_lab::io::PointSetFile::parse(body).unwrap();
    assert_eq!(set.alpha, 1.5);
    assert!(!set.points.is_empty());

    // The generated file feeds the frostman command.
    let o = run(&["frostman", "--input", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = last_json(&o);
    assert_eq!(v["n"].as_u64().unwrap() as usize, set.points.len());
    assert!(v["frostman_constant"].as_f64().unwrap() >= 1.0);
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let cfg = tmp("region.cfg");
    std::fs::write(&cfg, "# region defaults\np = 3\nalpha = 0.5\nq_inv = 0.3\ns_inv = 0.2\n").unwrap();
    let o = run(&["region", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(last_json(&o)["region"], "proved");
    let o = run(&["region", "--config", cfg.to_str().unwrap(), "--s-inv", "0.05"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = last_json(&o);
    assert_eq!(v["s_inv"], 0.05);
    assert_eq!(v["region"], "excluded");
}

#[test]
fn theorem_sweep_reports_passing_verdict() {
    let o =
        run(&["sweep", "--theorem", "--family", "const", "--alpha", "0.5", "--p", "3", "--q", "3", "--s", "6", "--deltas", "2^-5..2^-7"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = last_json(&o);
    assert_eq!(v["pass"], true);
    assert_eq!(v["case"], 1);
}

#[test]
fn incidence_writes_csv_row() {
    let o = run(&["incidence", "--delta", "2^-8", "--t", "2^-4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let body = annulus_lab::io::verify_wrapped(&out).unwrap();
    let mut lines = body.lines();
    assert_eq!(lines.next(), Some(annulus_lab::geometry::INCIDENCE_CSV_HEADER));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), 6);
    let count: f64 = row[4].parse().unwrap();
    let bound: f64 = row[5].parse().unwrap();
    assert!(count <= bound);
}

#[test]
fn dual_norm_grid_round_trips() {
    let path = tmp("mult.bin");
    let o = run(&["dual-norm", "--delta", "2^-5", "--alpha", "1.75", "--m", "2", "--s", "8", "--grid-out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (delta, nx, ny, vals) = annulus_lab::io::decode_grid(&std::fs::read(&path).unwrap()).unwrap();
    assert_eq!(delta, 2f64.powi(-5));
    assert_eq!(vals.len(), nx * ny);
    let v = last_json(&o);
    let l2 = (vals.iter().map(|c| c * c).sum::<f64>() * delta * delta).sqrt();
    assert!((l2 - v["dual_norm"].as_f64().unwrap()).abs() <= 1e-9 * l2);
}

#[test]
fn wave_and_slice_produce_csv() {
    let o = run(&["wave", "--samples", "3", "--times", "65"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("x1,x2,holder_norm"));
    let o = run(&["slice", "--delta", "2^-6", "--alpha", "1.5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = last_json(&o);
    assert!(v["retention"].as_f64().unwrap() >= v["retention_floor"].as_f64().unwrap());
}
