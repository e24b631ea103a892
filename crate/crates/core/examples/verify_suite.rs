//! Runs every property check on one instance, then again with the
//! inequalities flipped to show that the harness can fail.
//!
//! `cargo run --release --example verify_suite`

use spectral_flow::constraints::ConstraintFunctional;
use spectral_flow::forms::{build_operator, OperatorSpec};
use spectral_flow::objectives::SpectralObjective;
use spectral_flow::space::MeasureSpace;
use spectral_flow::verify::{all_passed, run_suite, Mutation, SuiteOptions};

fn main() -> spectral_flow::Result<()> {
    let n = 16;
    let space = MeasureSpace::counting(n);
    let form = build_operator(&OperatorSpec::PathDirichlet { n, h: 1.0 }, &space)?;
    let k = ConstraintFunctional::box_mean(-1.0, 2.0, 0.5)?;
    let obj = SpectralObjective::with_depth(spectral_flow::objectives::ObjectiveKind::SumFirstK { k: 2 }, 4)?;
    let opts = SuiteOptions { seed: 11, ..Default::default() };
    let reports = run_suite(&form, &k, &obj, &opts)?;
    for r in &reports {
        println!("{}", r.line());
    }
    println!("all passed: {}\n", all_passed(&reports));

    let mutated = run_suite(&form, &k, &obj, &SuiteOptions { mutation: Mutation(true), ..opts })?;
    for r in mutated.iter().filter(|r| r.name.starts_with("spectrum.")) {
        println!("{}", r.line());
    }
    println!("all passed with flipped inequalities: {}", all_passed(&mutated));
    Ok(())
}
