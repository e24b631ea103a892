//! Command-line driver behind the `spectral-flow` binary.
//!
//! Exit codes: 0 success, 1 a verification check failed, 2 bad
//! configuration or parameters, 3 numeric or I/O failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::thread;

use clap::{Args, Parser, Subcommand};

use crate::config::{parse_config, FlowSection, RunConfig};
use crate::error::{Error, Result};
use crate::flow::run_flow_observed;
use crate::output::{emit_outputs, verify_json};
use crate::verify::{all_passed, run_suite};

#[derive(Parser, Debug)]
#[command(name = "spectral-flow", version, about = "Minimizing movements for spectral functionals of Schrödinger potentials")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the discrete flow and write trajectory files.
    Flow {
        config: PathBuf,
        #[command(flatten)]
        common: Overrides,
        /// Run one flow per value in parallel, e.g. `tau=0.1,0.05`.
        #[arg(long, value_name = "tau=a,b,c")]
        sweep: Option<String>,
        /// Also write a gnuplot script (plot.gp).
        #[arg(long)]
        gnuplot: bool,
    },
    /// Run the property-check suites on the configured instance.
    Verify {
        config: PathBuf,
        #[command(flatten)]
        common: Overrides,
    },
}

/// Flags that override values from the config file.
#[derive(Args, Debug, Default, Clone)]
pub struct Overrides {
    #[arg(long)]
    pub tau: Option<f64>,
    /// Time horizon.
    #[arg(long = "T", value_name = "T")]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        if self.tau.is_some() || self.horizon.is_some() {
            let flow = cfg.flow.get_or_insert_with(FlowSection::default);
            if self.tau.is_some() {
                flow.tau = self.tau;
            }
            if self.horizon.is_some() {
                flow.horizon = self.horizon;
            }
        }
        if self.seed.is_some() {
            cfg.seed = self.seed;
        }
        if self.out.is_some() {
            cfg.out.clone_from(&self.out);
        }
    }
}

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Parameter(_) | Error::Construction(_) | Error::Dimension { .. } => 2,
        Error::Numeric(_) | Error::Domain(_) | Error::Io(_) => 3,
    }
}

/// Parses `tau=a,b,c`.
pub fn parse_sweep(spec: &str) -> Result<Vec<f64>> {
    let bad = |m: String| Error::Config(vec![m]);
    let (key, values) = spec.split_once('=').ok_or_else(|| bad(format!("sweep `{spec}` is not of the form tau=a,b,c")))?;
    if key.trim() != "tau" {
        return Err(bad(format!("only tau can be swept, got `{key}`")));
    }
    let taus = values
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| bad(format!("sweep value `{v}` is not a number"))))
        .collect::<Result<Vec<_>>>()?;
    if taus.is_empty() {
        return Err(bad("empty sweep".into()));
    }
    Ok(taus)
}

/// Runs one flow and writes its outputs to the configured directory.
pub fn run_flow_command(cfg: &RunConfig, gnuplot: bool, label: &str) -> Result<()> {
    let inst = cfg.build()?;
    let steps = inst.flow.steps();
    let stride = (steps / 10).max(1);
    eprintln!(
        "{label}flow: {} d={} τ={} T={} N={steps}",
        inst.problem.objective.name(),
        inst.problem.form.dim(),
        inst.flow.tau,
        inst.flow.horizon
    );
    let traj = run_flow_observed(&inst.problem, &inst.v0, &inst.flow, |r| {
        if r.n > 0 && (r.n % stride == 0 || r.n == steps) {
            eprintln!("{label}  step {}/{steps} t={:.4} F={:.10} |ΔV|/τ={:.3e}", r.n, r.t, r.f, r.step_norm);
        }
    })?;
    let files = emit_outputs(&inst.out, &inst.config, inst.seed, &inst.problem, &traj, gnuplot)?;
    let s = traj.summary();
    eprintln!(
        "{label}done in {:.2}s: F {} -> {}, max stationarity residual {:e}, {} files in {}",
        traj.wall_time,
        s.initial_f,
        s.terminal_f,
        s.max_stat_residual,
        files.len(),
        inst.out.display()
    );
    if s.inner_warnings > 0 {
        eprintln!("{label}warning: {} steps ended without inner convergence (see inner.csv)", s.inner_warnings);
    }
    if s.floor_active {
        eprintln!("{label}warning: the potential reached the power-law floor");
    }
    Ok(())
}

/// Runs the verification suites; `Ok(false)` means a check failed.
pub fn run_verify_command(cfg: &RunConfig) -> Result<bool> {
    let inst = cfg.build()?;
    let reports = run_suite(&inst.problem.form, &inst.problem.constraint, &inst.problem.objective, &inst.suite)?;
    for r in &reports {
        eprintln!("{}", r.line());
    }
    std::fs::create_dir_all(&inst.out)?;
    std::fs::write(inst.out.join("verify_report.json"), verify_json(&inst.config, inst.seed, &reports))?;
    let ok = all_passed(&reports);
    eprintln!("verify: {}", if ok { "all checks passed" } else { "FAILED" });
    Ok(ok)
}

fn sweep(cfg: &RunConfig, taus: &[f64], gnuplot: bool) -> Result<()> {
    let base = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let runs: Vec<RunConfig> = taus
        .iter()
        .map(|&tau| {
            let mut c = cfg.clone();
            Overrides { tau: Some(tau), out: Some(base.join(format!("tau_{tau:?}"))), ..Default::default() }.apply(&mut c);
            c
        })
        .collect();
    // validate everything before starting any run
    let mut problems = Vec::new();
    for c in &runs {
        if let Err(e) = c.build() {
            problems.push(format!("tau = {:?}: {e}", c.flow.as_ref().and_then(|f| f.tau).unwrap_or(f64::NAN)));
        }
    }
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    let results: Vec<Result<()>> = thread::scope(|s| {
        let handles: Vec<_> = runs
            .iter()
            .map(|c| {
                let label = format!("[tau={:?}] ", c.flow.as_ref().and_then(|f| f.tau).unwrap_or(f64::NAN));
                s.spawn(move || run_flow_command(c, gnuplot, &label))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep thread panicked")).collect()
    });
    results.into_iter().collect()
}

fn load(path: &Path, common: &Overrides) -> Result<RunConfig> {
    let mut cfg = parse_config(path)?;
    common.apply(&mut cfg);
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Flow { config, common, sweep: sw, gnuplot } => {
            let cfg = load(&config, &common)?;
            match sw {
                Some(spec) => sweep(&cfg, &parse_sweep(&spec)?, gnuplot)?,
                None => run_flow_command(&cfg, gnuplot, "")?,
            }
            Ok(0)
        }
        Command::Verify { config, common } => {
            let cfg = load(&config, &common)?;
            Ok(if run_verify_command(&cfg)? { 0 } else { 1 })
        }
    }
}

/// Entry point: parses `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_parsing() {
        assert_eq!(parse_sweep("tau=0.1, 0.05,0.025").unwrap(), vec![0.1, 0.05, 0.025]);
        assert!(parse_sweep("beta=1,2").is_err());
        assert!(parse_sweep("tau=1,x").is_err());
        assert!(parse_sweep("tau").is_err());
    }

    #[test]
    fn flags_parse() {
        let cli = Cli::try_parse_from([
            "spectral-flow", "flow", "c.toml", "--tau", "0.5", "--T", "3", "--seed", "9", "--out", "o", "--gnuplot",
        ])
        .unwrap();
        let Command::Flow { common, gnuplot, .. } = cli.command else { panic!() };
        assert!(gnuplot);
        let mut cfg = RunConfig::default();
        common.apply(&mut cfg);
        let flow = cfg.flow.unwrap();
        assert_eq!((flow.tau, flow.horizon, cfg.seed), (Some(0.5), Some(3.0), Some(9)));
        assert_eq!(cfg.out, Some(PathBuf::from("o")));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config(vec![])), 2);
        assert_eq!(exit_code(&Error::Numeric("x".into())), 3);
        assert_eq!(run(["spectral-flow", "flow", "/nonexistent/config.toml"]), 3);
        assert_eq!(run(["spectral-flow", "bogus"]), 2);
    }
}
