//! Files written by a flow run.
//!
//! Floats are written with Rust's shortest round-trip formatting, so every
//! number parses back to the exact value that was computed.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::Result;
use crate::flow::{FlowProblem, FlowSummary, FlowTrajectory, StepRecord};
use crate::verify::PropertyReport;

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn flag(b: Option<bool>) -> &'static str {
    match b {
        Some(true) => "1",
        Some(false) => "0",
        None => "",
    }
}

/// Header of `trajectory.csv` for `count` eigenvalue columns.
pub fn trajectory_header(count: usize) -> String {
    let mut h = String::from("t,F,H,K");
    for i in 1..=count {
        write!(h, ",lambda_{i}").unwrap();
    }
    h.push_str(",step_norm,stat_residual,gap_ok,inner_iters");
    h
}

/// `trajectory.csv` contents: one row per state, `n = 0` included.
pub fn trajectory_csv(traj: &FlowTrajectory) -> String {
    let count = traj.records.iter().map(|r| r.lambdas.len()).max().unwrap_or(0);
    let mut s = trajectory_header(count);
    s.push('\n');
    for r in &traj.records {
        let mut row = vec![num(r.t), num(r.f), num(r.h), num(r.k)];
        row.extend((0..count).map(|i| r.lambdas.get(i).map_or(String::new(), |&l| num(l))));
        row.push(num(r.step_norm));
        row.push(num(r.stat_residual));
        row.push(flag(r.gap_ok).into());
        row.push(r.inner_iters.to_string());
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// `inner.csv`: inner-solver diagnostics per step.
pub fn inner_csv(records: &[StepRecord]) -> String {
    let mut s = String::from("n,inner_iters,inner_residual,inner_status,restarts,floor_active,energy_gap\n");
    for r in records {
        writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.n,
            r.inner_iters,
            num(r.inner_residual),
            r.inner_status.map(|st| st.to_string()).unwrap_or_default(),
            r.restarts,
            u8::from(r.floor_active),
            num(r.energy_gap)
        )
        .unwrap();
    }
    s
}

/// One snapshot: `node[,x[,y]],V`.
pub fn snapshot_csv(coords: &[Vec<f64>], values: &[f64]) -> String {
    let dims = coords.first().map_or(0, Vec::len).min(2);
    let mut s = String::from("node");
    for name in ["x", "y"].iter().take(dims) {
        s.push(',');
        s.push_str(name);
    }
    s.push_str(",V\n");
    for (i, v) in values.iter().enumerate() {
        s.push_str(&i.to_string());
        for c in coords.get(i).into_iter().flat_map(|c| c.iter().take(dims)) {
            s.push(',');
            s.push_str(&num(*c));
        }
        s.push(',');
        s.push_str(&num(*v));
        s.push('\n');
    }
    s
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    config: &'a RunConfig,
    seed: u64,
    tau: f64,
    horizon: f64,
    steps: usize,
    objective: String,
    constraint: String,
    operator: String,
    dim: usize,
    initial_f: f64,
    terminal_f: f64,
    dissipation: f64,
    max_stat_residual: Option<f64>,
    max_stat_residual_gap_ok: Option<f64>,
    max_energy_gap: f64,
    sup_f_excess: f64,
    max_inner_residual: f64,
    inner_warnings: usize,
    gap_failures: usize,
    floor_active: bool,
    sup_norm: f64,
    norm_bound: Option<f64>,
    dissipation_bound: Option<f64>,
    lower_bound: Option<f64>,
    edi_residual_decreasing: f64,
    edi_residual_increasing: f64,
    interpolant_gap: f64,
    wall_time_seconds: f64,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// `summary.json` contents.
pub fn summary_json(config: &RunConfig, seed: u64, problem: &FlowProblem, traj: &FlowTrajectory) -> String {
    let s: FlowSummary = traj.summary();
    let file = SummaryFile {
        config,
        seed,
        tau: traj.config.tau,
        horizon: traj.config.horizon,
        steps: s.steps,
        objective: problem.objective.name(),
        constraint: problem.constraint.name().to_string(),
        operator: problem.form.kind().to_string(),
        dim: problem.form.dim(),
        initial_f: s.initial_f,
        terminal_f: s.terminal_f,
        dissipation: s.dissipation,
        // NaN when probes are disabled; JSON has no NaN
        max_stat_residual: finite(s.max_stat_residual),
        max_stat_residual_gap_ok: finite(s.max_stat_residual_gap_ok),
        max_energy_gap: s.max_energy_gap,
        sup_f_excess: s.sup_f_excess,
        max_inner_residual: s.max_inner_residual,
        inner_warnings: s.inner_warnings,
        gap_failures: s.gap_failures,
        floor_active: s.floor_active,
        sup_norm: s.sup_norm,
        norm_bound: s.norm_bound,
        dissipation_bound: s.dissipation_bound,
        lower_bound: traj.lower_bound,
        edi_residual_decreasing: s.edi_residual_decreasing,
        edi_residual_increasing: s.edi_residual_increasing,
        interpolant_gap: s.interpolant_gap,
        wall_time_seconds: traj.wall_time,
    };
    serde_json::to_string_pretty(&file).expect("summary serializes") + "\n"
}

/// A gnuplot script plotting `F` and `V` at the last snapshot.
pub fn gnuplot_script(last_snapshot: usize, eigen_columns: usize) -> String {
    let mut s = String::new();
    s.push_str("set datafile separator ','\nset key autotitle columnhead\n");
    s.push_str("set terminal pngcairo size 1200,400\nset output 'plot.png'\nset multiplot layout 1,3\n");
    s.push_str("set title 'energy'\nset xlabel 't'\nplot 'trajectory.csv' using 1:2 with lines\n");
    s.push_str("set title 'eigenvalues'\nplot for [c=5:");
    write!(s, "{}", 4 + eigen_columns).unwrap();
    s.push_str("] 'trajectory.csv' using 1:c with lines\n");
    writeln!(
        s,
        "set title 'V at step {last_snapshot}'\nset xlabel 'node'\nplot 'snapshots/V_{last_snapshot}.csv' using 1:(column(\"V\")) with linespoints"
    )
    .unwrap();
    s.push_str("unset multiplot\n");
    s
}

/// Writes the full file set for one run into `dir` and returns the paths
/// written.
pub fn emit_outputs(
    dir: &Path,
    config: &RunConfig,
    seed: u64,
    problem: &FlowProblem,
    traj: &FlowTrajectory,
    gnuplot: bool,
) -> Result<Vec<PathBuf>> {
    let snaps = dir.join("snapshots");
    fs::create_dir_all(&snaps)?;
    let mut written = Vec::new();
    let mut put = |path: PathBuf, text: String| -> Result<()> {
        fs::write(&path, text)?;
        written.push(path);
        Ok(())
    };
    put(dir.join("trajectory.csv"), trajectory_csv(traj))?;
    put(dir.join("inner.csv"), inner_csv(&traj.records))?;
    let coords = problem.form.coordinates();
    let steps = traj.snapshot_steps();
    for &n in &steps {
        put(snaps.join(format!("V_{n}.csv")), snapshot_csv(coords, traj.states[n].as_slice()))?;
    }
    put(dir.join("summary.json"), summary_json(config, seed, problem, traj))?;
    if gnuplot {
        let eig = traj.records.iter().map(|r| r.lambdas.len()).max().unwrap_or(0);
        put(dir.join("plot.gp"), gnuplot_script(*steps.last().unwrap(), eig))?;
    }
    Ok(written)
}

#[derive(Serialize)]
struct VerifyFile<'a> {
    config: &'a RunConfig,
    seed: u64,
    passed: bool,
    // non-finite violations serialize as null
    reports: &'a [PropertyReport],
}

/// `verify_report.json` contents.
pub fn verify_json(config: &RunConfig, seed: u64, reports: &[PropertyReport]) -> String {
    let file = VerifyFile {
        config,
        seed,
        passed: crate::verify::all_passed(reports),
        reports,
    };
    serde_json::to_string_pretty(&file).expect("report serializes") + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_schema() {
        assert_eq!(
            trajectory_header(2),
            "t,F,H,K,lambda_1,lambda_2,step_norm,stat_residual,gap_ok,inner_iters"
        );
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.1 + 0.2, 1e-300, -7.25e17, f64::MIN_POSITIVE, 1.0 / 3.0] {
            assert_eq!(num(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
        assert!(num(f64::NAN).parse::<f64>().unwrap().is_nan());
    }

    #[test]
    fn snapshot_columns() {
        let one_d = snapshot_csv(&[vec![0.5], vec![1.0]], &[1.0, -1.0]);
        assert_eq!(one_d, "node,x,V\n0,0.5,1.0\n1,1.0,-1.0\n");
        let dense = snapshot_csv(&[vec![], vec![]], &[2.0, 3.0]);
        assert_eq!(dense, "node,V\n0,2.0\n1,3.0\n");
        let two_d = snapshot_csv(&[vec![1.0, 2.0]], &[0.0]);
        assert_eq!(two_d, "node,x,y,V\n0,1.0,2.0,0.0\n");
    }
}
