use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use spectral_flow::config::{parse_config, parse_config_str, RunConfig};

const BIN: &str = env!("CARGO_BIN_EXE_spectral-flow");

const MINIMAL: &str = r#"
seed = 4

[operator]
kind = "path_dirichlet"
n = 8

[objective]
kind = "sum_first_k"
k = 1

[constraint]
kind = "box_mean"
v_minus = -1.0
v_plus = 1.0
v0 = 0.0

[flow]
tau = 0.01
T = 1.0
record_every = 10
"#;

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn flow_writes_schema_and_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", MINIMAL);
    let out = dir.path().join("out");
    let o = run(&["flow", s(&cfg), "--out", s(&out), "--gnuplot"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty(), "data goes to files only");

    let csv = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,F,H,K,lambda_1,lambda_2,step_norm,stat_residual,gap_ok,inner_iters");
    assert_eq!(lines.count(), 101);

    let mut snaps: Vec<String> = fs::read_dir(out.join("snapshots"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    snaps.sort();
    assert_eq!(snaps.len(), 11);
    assert!(snaps.contains(&"V_0.csv".to_string()) && snaps.contains(&"V_100.csv".to_string()));
    let snap = fs::read_to_string(out.join("snapshots/V_100.csv")).unwrap();
    assert!(snap.starts_with("node,x,V\n"));
    assert_eq!(snap.lines().count(), 9);

    assert!(out.join("plot.gp").exists());
    assert!(out.join("inner.csv").exists());
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 4);
    assert_eq!(summary["steps"], 100);
    for key in ["terminal_f", "dissipation", "max_stat_residual", "wall_time_seconds", "edi_residual_decreasing"] {
        assert!(summary[key].is_number(), "{key}");
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", MINIMAL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run(&["flow", s(&cfg), "--out", s(&a)]).status.success());
    assert!(run(&["flow", s(&cfg), "--out", s(&b)]).status.success());
    for f in ["trajectory.csv", "inner.csv", "snapshots/V_0.csv", "snapshots/V_50.csv", "snapshots/V_100.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn csv_numbers_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", MINIMAL);
    let out = dir.path().join("out");
    assert!(run(&["flow", s(&cfg), "--out", s(&out)]).status.success());
    let csv = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        // the last two columns are the gap flag and an iteration count
        for &field in &fields[..fields.len() - 2] {
            let x: f64 = field.parse().unwrap();
            if !x.is_nan() {
                assert_eq!(format!("{x:?}"), field);
            }
        }
    }
}

#[test]
fn summary_config_echo_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_config(dir.path(), "c.toml", MINIMAL);
    let out = dir.path().join("out");
    assert!(run(&["flow", s(&cfg_path), "--out", s(&out), "--tau", "0.02"]).status.success());
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let echoed = serde_json::to_string(&summary["config"]).unwrap();
    let reparsed: RunConfig = parse_config_str(&echoed, true).unwrap();
    let mut expected = parse_config(&cfg_path).unwrap();
    expected.flow.as_mut().unwrap().tau = Some(0.02);
    expected.out = Some(out.clone());
    assert_eq!(reparsed, expected);
    assert_eq!(summary["steps"], 50);
}

#[test]
fn horizon_below_tau_still_takes_one_step() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", MINIMAL);
    let out = dir.path().join("out");
    assert!(run(&["flow", s(&cfg), "--out", s(&out), "--T", "0.001"]).status.success());
    assert_eq!(fs::read_to_string(out.join("trajectory.csv")).unwrap().lines().count(), 3);
}

#[test]
fn config_errors_exit_2_and_list_everything() {
    let dir = tempfile::tempdir().unwrap();
    let tilted = MINIMAL
        .replace("kind = \"box_mean\"\nv_minus = -1.0\nv_plus = 1.0\nv0 = 0.0", "kind = \"tilted_box\"\nlo = -1.0\nhi = 1.0\ntheta = 2.0")
        .replace("tau = 0.01", "tau = 1.0");
    let cfg = write_config(dir.path(), "t.toml", &tilted);
    let o = run(&["flow", s(&cfg), "--out", s(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("τθ < 1"));

    let deep = MINIMAL.replace("n = 8", "n = 3").replace("k = 1", "k = 3");
    let cfg = write_config(dir.path(), "j.toml", &deep);
    let o = run(&["flow", s(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("J + 1 ≤ d"));

    let unknown = format!("colour = 1\n{MINIMAL}\nspeed = 2\n");
    let cfg = write_config(dir.path(), "u.toml", &unknown);
    let o = run(&["verify", s(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("`colour`") && err.contains("`flow.speed`"), "{err}");
}

#[test]
fn io_errors_exit_3() {
    assert_eq!(run(&["flow", "/definitely/not/here.toml"]).status.code(), Some(3));
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{MINIMAL}\n[verify]\nsamples = 30\nrotations = 20\nfd_points = 5\nfd_directions = 5\n");
    let cfg = write_config(dir.path(), "v.toml", &text);
    let out = dir.path().join("v");
    let o = run(&["verify", s(&cfg), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("verify_report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);

    // a tolerance no check can meet
    let failing = text.replace("fd_directions = 5", "fd_directions = 5\ntolerance = -1.0");
    let cfg = write_config(dir.path(), "f.toml", &failing);
    assert_eq!(run(&["verify", s(&cfg), "--out", s(&out)]).status.code(), Some(1));

    let mutated = text.replace("fd_directions = 5", "fd_directions = 5\nmutate = true");
    let cfg = write_config(dir.path(), "m.toml", &mutated);
    assert_eq!(run(&["verify", s(&cfg), "--out", s(&out)]).status.code(), Some(1));
}

#[test]
fn sweep_runs_each_tau_in_its_own_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", MINIMAL);
    let out = dir.path().join("sweep");
    let o = run(&["flow", s(&cfg), "--out", s(&out), "--T", "0.1", "--sweep", "tau=0.05,0.025"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for (sub, rows) in [("tau_0.05", 4), ("tau_0.025", 6)] {
        let csv = fs::read_to_string(out.join(sub).join("trajectory.csv")).unwrap();
        assert_eq!(csv.lines().count(), rows, "{sub}");
    }
    let bad = run(&["flow", s(&cfg), "--sweep", "beta=1,2"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn shipped_configs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs");
    let mut count = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = parse_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        cfg.build().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        count += 1;
    }
    assert!(count >= 4);
}
