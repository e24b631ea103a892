//! Minimizing λ₁ over potentials in [−1, 1] with zero mean: the flow ends
//! at a two-level potential, V = −1 where the ground state lives and +1
//! elsewhere.
//!
//! `cargo run --release --example bang_bang_flow`

use spectral_flow::constraints::ConstraintFunctional;
use spectral_flow::flow::{run_flow_observed, FlowConfig, FlowProblem};
use spectral_flow::forms::{build_operator, OperatorSpec};
use spectral_flow::objectives::SpectralObjective;
use spectral_flow::space::{MeasureSpace, PotentialField};

fn main() -> spectral_flow::Result<()> {
    let n = 64;
    let space = MeasureSpace::counting(n);
    let form = build_operator(&OperatorSpec::PathDirichlet { n, h: 1.0 / (n + 1) as f64 }, &space)?;
    let problem = FlowProblem::new(
        form,
        ConstraintFunctional::box_mean(-1.0, 1.0, 0.0)?,
        SpectralObjective::sum_first_k(1)?,
    )?;
    let v0 = PotentialField::zeros(&space);
    let config = FlowConfig::new(10.0, 2000.0);
    let traj = run_flow_observed(&problem, &v0, &config, |r| {
        if r.n % 40 == 0 {
            eprintln!("step {:>3}  F = {:.10}  |ΔV|/τ = {:.2e}", r.n, r.f, r.step_norm);
        }
    })?;
    let v = traj.final_state().as_slice();
    let profile: String = v.iter().map(|x| if *x < -0.999 { '-' } else if *x > 0.999 { '+' } else { '.' }).collect();
    println!("final V: {profile}");
    let at_bounds = v.iter().filter(|x| (x.abs() - 1.0).abs() <= 1e-3).count();
    let s = traj.summary();
    println!("{at_bounds}/{n} nodes at ±1, λ₁: {:.6} -> {:.6}", s.initial_f, s.terminal_f);
    println!(
        "max stationarity residual {:.2e}, dissipation {:.4e} ≤ {:.4e}, {:.2}s",
        s.max_stat_residual,
        s.dissipation,
        s.dissipation_bound.unwrap_or(f64::NAN),
        traj.wall_time
    );
    Ok(())
}
