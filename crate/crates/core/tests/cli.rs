//! End-to-end runs of the `metasyn` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn metasyn(args: &[&str], config: &str, dir: &Path, env: &[(&str, &str)]) -> Output {
    let cfg = dir.join("run.cfg");
    fs::write(&cfg, config).unwrap();
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_metasyn"));
    cmd.args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"));
    cmd.env_remove("METASYN_SEED_OFFSET");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join("out").join(name)).unwrap()
}

const SMALL: &str = "n_in = 32\nn_out = 32\nseeds = 2\nn_patterns = 20\n";

#[test]
fn compare_writes_traces_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = metasyn(&["compare"], SMALL, dir.path(), &[]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let traces = read(dir.path(), "traces.csv");
    assert!(traces.starts_with("model,seed,pattern_index,learning_acc,mean_acc\n"));
    // 3 models x 2 seeds x 20 patterns.
    assert_eq!(traces.lines().count(), 1 + 3 * 2 * 20);
    let summary = read(dir.path(), "summary.csv");
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines[0], "model,crossing_mean,crossing_std,ratio_vs_binary");
    assert!(lines[1].starts_with("binary,") && lines[1].ends_with(",1"));
    assert!(lines.iter().any(|l| l.starts_with("multistate,")));
    assert!(read(dir.path(), "accuracy.svg").starts_with("<svg"));
    assert!(!traces.contains('\r'));
}

#[test]
fn rerun_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        assert!(metasyn(&["compare"], SMALL, d.path(), &[]).status.success());
    }
    for name in ["traces.csv", "summary.csv", "accuracy.svg"] {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name}");
    }
}

#[test]
fn seed_offset_matches_shifted_base() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let run = "model = binary\nn_in = 32\nn_out = 32\nseeds = 1\nn_patterns = 10\n";
    assert!(
        metasyn(&["run"], run, a.path(), &[("METASYN_SEED_OFFSET", "7")])
            .status
            .success()
    );
    assert!(
        metasyn(&["run"], &format!("{run}seed_base = 7\n"), b.path(), &[])
            .status
            .success()
    );
    let ta = read(a.path(), "traces.csv");
    assert_eq!(ta, read(b.path(), "traces.csv"));
    assert!(ta.lines().nth(1).unwrap().starts_with("binary,7,1,"));
}

#[test]
fn bad_offset_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = metasyn(&["run"], SMALL, dir.path(), &[("METASYN_SEED_OFFSET", "x")]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("METASYN_SEED_OFFSET"));
}

#[test]
fn sweep_cf_writes_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "n_in = 16\nn_out = 16\nseeds = 1\nn_patterns = 5\nc_grid = 0.001, 0.5\nf_grid = 0.25, 0.5, 0.9\n";
    let out = metasyn(&["sweep-cf"], cfg, dir.path(), &[]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let grid = read(dir.path(), "cf_grid.csv");
    let lines: Vec<&str> = grid.lines().collect();
    assert_eq!(lines[0], "connectivity,activity,mean_acc_at_100,valid_flag");
    assert_eq!(lines.len(), 1 + 6);
    // 0.001 * 256 rounds to no connected synapse.
    for l in &lines[1..4] {
        assert!(l.starts_with("0.001,") && l.ends_with(",,0"), "{l}");
    }
    assert!(lines[4..]
        .iter()
        .all(|l| l.starts_with("0.5,") && l.ends_with(",1")));
    assert!(read(dir.path(), "cf_grid.svg").contains("<rect"));
}

#[test]
fn sweep_size_writes_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "seeds = 1\nn_patterns = 5\nsize_grid = 8, 16\n";
    assert!(metasyn(&["sweep-size"], cfg, dir.path(), &[])
        .status
        .success());
    assert_eq!(read(dir.path(), "size_sweep.csv").lines().count(), 3);
}

#[test]
fn calibrate_device_writes_six_plateaus() {
    let dir = tempfile::tempdir().unwrap();
    let out = metasyn(&["calibrate-device"], "", dir.path(), &[]);
    assert!(out.status.success());
    let table = read(dir.path(), "metastate_table.csv");
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "efficacy,metalevel,x_plateau,conductance_S");
    assert_eq!(lines.len(), 7);
    let xs: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert!(xs.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn calibrate_device_failure_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = metasyn(
        &["calibrate-device"],
        "k_off = 1000\nk_on = -1000\n",
        dir.path(),
        &[],
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("calibration"));
}

#[test]
fn dump_trace_on_small_crossbar() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "n_in = 5\nn_out = 3\nconnectivity = 0.5\nactivity = 0.4\nhardware = true\nn_patterns = 6\n";
    let out = metasyn(&["dump-trace"], cfg, dir.path(), &[]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let events = read(dir.path(), "events.csv");
    let mut lines = events.lines();
    assert_eq!(
        lines.next().unwrap(),
        "step,phase,row,col,x_before,x_after,meta_before,meta_after"
    );
    for l in lines {
        let f: Vec<&str> = l.split(',').collect();
        assert!(f[1] == "potentiate" || f[1] == "depress");
        assert!(f[0].parse::<usize>().unwrap() >= 1);
    }
    let state = read(dir.path(), "crossbar_state.csv");
    assert_eq!(state.lines().count(), 1 + 15);
    assert_eq!(
        state
            .lines()
            .filter(|l| l.split(',').nth(2) == Some("1"))
            .count(),
        8
    );
}

#[test]
fn config_errors_name_key_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = metasyn(&["run"], "# ok\nconnectivity = 1.5\n", dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("line 2") && err.contains("connectivity"),
        "{err}"
    );
    let out = metasyn(&["run"], "colour = red\n", dir.path(), &[]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn print_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = metasyn(
        &["print-config"],
        "model = binary\nhardware = true\n",
        dir.path(),
        &[],
    );
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let parsed = metasyn::config::parse_config(&text).unwrap();
    assert!(parsed.hardware);
    assert_eq!(parsed.network.model, metasyn::SynapseModel::Binary);
}
