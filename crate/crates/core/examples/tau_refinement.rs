//! Halving the step: terminal potentials at τ and τ/2 differ by O(τ).
//!
//! `cargo run --release --example tau_refinement`

use std::f64::consts::PI;
use std::thread;

use spectral_flow::constraints::{ConstraintFunctional, Tilt};
use spectral_flow::flow::{run_flow, FlowConfig, FlowProblem};
use spectral_flow::forms::{build_operator, OperatorSpec};
use spectral_flow::objectives::SpectralObjective;
use spectral_flow::space::{MeasureSpace, PotentialField};

fn main() -> spectral_flow::Result<()> {
    let n = 16;
    let space = MeasureSpace::counting(n);
    let form = build_operator(&OperatorSpec::PathDirichlet { n, h: 1.0 }, &space)?;
    let a: Vec<f64> = (0..n).map(|i| 0.3 * (i as f64 * 0.5).cos()).collect();
    let problem = FlowProblem::new(
        form,
        ConstraintFunctional::tilted_box(-5.0, 5.0, Tilt::Field(a), 0.5)?,
        SpectralObjective::sum_first_k(2)?,
    )?;
    let v0 = PotentialField::new(&space, (0..n).map(|i| 0.5 * (PI * (i + 1) as f64 / (n + 1) as f64).sin()).collect())?;
    let taus = [2e-2, 1e-2, 5e-3, 2.5e-3, 1.25e-3];
    let finals = thread::scope(|s| {
        let handles: Vec<_> = taus
            .iter()
            .map(|&tau| {
                let (problem, v0) = (&problem, &v0);
                s.spawn(move || run_flow(problem, v0, &FlowConfig::new(tau, 1.0)).map(|t| t.final_state().clone()))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("run thread")).collect::<spectral_flow::Result<Vec<_>>>()
    })?;
    println!("{:>10} {:>14} {:>8}", "τ", "|V_τ − V_τ/2|", "order");
    let mut prev: Option<f64> = None;
    for (i, tau) in taus.iter().take(taus.len() - 1).enumerate() {
        let d = finals[i].dist(&finals[i + 1])?;
        let order = prev.map(|p| format!("{:.3}", (p / d).log2())).unwrap_or_default();
        println!("{tau:>10.5} {d:>14.6e} {order:>8}");
        prev = Some(d);
    }
    Ok(())
}
