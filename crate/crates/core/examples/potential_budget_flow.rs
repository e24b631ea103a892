//! Flow of e₂(λ₁, λ₂, λ₃) on a rectangular grid under the budget
//! mean(e^{−V}) ≤ 1/2, then written out the way the CLI does.
//!
//! `cargo run --release --example potential_budget_flow -- [out_dir]`

use std::path::PathBuf;

use spectral_flow::config::RunConfig;
use spectral_flow::constraints::{ConstraintFunctional, PsiFunction};
use spectral_flow::flow::{run_flow, FlowConfig, FlowProblem};
use spectral_flow::forms::{build_operator, OperatorSpec};
use spectral_flow::objectives::{ObjectiveKind, SpectralObjective};
use spectral_flow::output::emit_outputs;
use spectral_flow::space::{MeasureSpace, PotentialField};

fn main() -> spectral_flow::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("potential_budget"));
    let (nx, ny) = (7, 5);
    let space = MeasureSpace::counting(nx * ny);
    let form = build_operator(&OperatorSpec::Grid2dDirichlet { nx, ny, h: 1.0 / 7.0 }, &space)?;
    let problem = FlowProblem::new(
        form,
        ConstraintFunctional::psi_budget(PsiFunction::Exp { beta: 1.0 }, 0.5)?,
        SpectralObjective::new(ObjectiveKind::ElementarySymmetric2 { k: 3 })?,
    )?;
    let v0 = PotentialField::constant(&space, 1.0);
    let mut config = FlowConfig::new(0.5, 10.0);
    config.record_every = 5;
    let traj = run_flow(&problem, &v0, &config)?;
    let s = traj.summary();
    println!("F: {:.6} -> {:.6} in {} steps", s.initial_f, s.terminal_f, s.steps);
    let v = traj.final_state();
    println!("budget mean(e^-V) = {:.6}", v.as_slice().iter().map(|x| (-x).exp()).sum::<f64>() / v.dim() as f64);
    for row in 0..ny {
        let cells: Vec<String> = (0..nx).map(|c| format!("{:6.3}", v.as_slice()[row * nx + c])).collect();
        println!("  {}", cells.join(" "));
    }
    let files = emit_outputs(&out, &RunConfig::default(), config.seed, &problem, &traj, true)?;
    println!("wrote {} files under {}", files.len(), out.display());
    Ok(())
}
