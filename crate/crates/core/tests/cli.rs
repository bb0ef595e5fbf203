use std::fs;
use std::process::Command;

use manet_sim::engine::parse_scenario_str;
use manet_sim::matrix::{write_results, ExperimentMatrix};
use manet_sim::metrics::Mode;

const SCENARIO: &str = "\
# small fast scenario
num_nodes = 30
duration_seconds = 5
cbr.num_flows = 3
detection.warmup_flows = 1
";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_manet-sim"))
}

fn matrix() -> ExperimentMatrix {
    ExperimentMatrix {
        base: parse_scenario_str(SCENARIO).unwrap(),
        speeds: vec![0.0, 10.0],
        modes: Mode::ALL.to_vec(),
        seeds: vec![1, 2, 3],
        traces: false,
    }
}

#[test]
fn matrix_writes_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let cells = matrix().run().unwrap();
    assert_eq!(cells.len(), 18);
    write_results(dir.path(), &cells).unwrap();
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(lines.next().unwrap(), "speed,mode,seed,pdr,throughput_bps,originated,delivered,absorbed");
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 18);
    for r in rows.iter().filter(|r| r.starts_with("0.0,clean,")) {
        assert_eq!(r.split(',').nth(3), Some("1.0"), "{r}");
    }
    let sweep = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 1 + 6);
}

#[test]
fn matrix_output_is_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut m = matrix();
    m.traces = true;
    write_results(a.path(), &m.run().unwrap()).unwrap();
    write_results(b.path(), &m.run().unwrap()).unwrap();
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 2 + 18);
    for name in names {
        assert_eq!(fs::read(a.path().join(&name)).unwrap(), fs::read(b.path().join(&name)).unwrap(), "{name:?}");
    }
    assert!(a.path().join("trace_10_attack-detection_2.txt").exists());
}

#[test]
fn binary_runs_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("s.conf");
    fs::write(&scenario, SCENARIO).unwrap();
    let out = dir.path().join("out");
    let status = bin()
        .args(["--scenario", scenario.to_str().unwrap(), "--speeds", "0,5", "--modes", "clean,attack"])
        .args(["--seeds", "1,2", "--out", out.to_str().unwrap(), "--trace"])
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 8);
    assert!(out.join("trace_5_attack_2.txt").exists());
}

#[test]
fn binary_rejects_bad_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("bad.conf");
    fs::write(&scenario, "num_nodes = 30\nwarp_drive = on\n").unwrap();
    let out = bin().args(["--scenario", scenario.to_str().unwrap(), "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key `warp_drive`"));

    fs::write(&scenario, "num_nodes = 20\n").unwrap();
    // default attack members 23 and 24 do not exist in a 20-node network
    let out = bin().args(["--scenario", scenario.to_str().unwrap(), "--modes", "attack"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    let out = bin().args(["--modes", "sideways"]).output().unwrap();
    assert!(!out.status.success());
}
