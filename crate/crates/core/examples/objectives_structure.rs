//! Built-in spectral objectives: values, gradients, the ordering condition
//! on partial derivatives, and the gradient field ξ on a potential.
//!
//! `cargo run --release --example objectives_structure`

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use spectral_flow::forms::{build_operator, OperatorSpec};
use spectral_flow::objectives::{
    check_structural, phi_eval_grad, spectral_value, structural_samples, subgradient_xi, GapShape, ObjectiveKind,
    SpectralObjective,
};
use spectral_flow::space::{MeasureSpace, PotentialField};
use spectral_flow::spectrum::eigensolve;

fn main() -> spectral_flow::Result<()> {
    let objectives = [
        SpectralObjective::sum_first_k(2)?,
        SpectralObjective::new(ObjectiveKind::ElementarySymmetric2 { k: 3 })?,
        SpectralObjective::new(ObjectiveKind::RootProduct)?,
        SpectralObjective::new(ObjectiveKind::SumTimesSquares)?,
        SpectralObjective::with_depth(ObjectiveKind::GapPenalty { j: 2, shape: GapShape::Quadratic }, 2)?,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let lambdas = [1.0, 2.0, 4.0];
    println!("{:<26} {:>10}  gradient at λ = {lambdas:?}", "objective", "φ");
    for obj in &objectives {
        let (value, grad) = phi_eval_grad(obj, &lambdas[..obj.depth()])?;
        let samples = structural_samples(obj.depth(), 0.1, 10.0, 200, &mut rng);
        let report = check_structural(obj, &samples)?;
        println!(
            "{:<26} {value:>10.4}  {grad:?}  ordering condition: {}",
            obj.name(),
            if report.passed() { "holds" } else { "fails" }
        );
    }

    let n = 12;
    let space = MeasureSpace::counting(n);
    let form = build_operator(&OperatorSpec::PathDirichlet { n, h: 1.0 }, &space)?;
    let v = PotentialField::new(&space, (0..n).map(|i| 0.1 * i as f64).collect())?;
    let obj = SpectralObjective::sum_first_k(2)?;
    let spec = eigensolve(&form, &v, 3)?;
    let sel = subgradient_xi(&spec, &obj)?;
    println!("H(V) = {:.6}", spectral_value(&form, &v, &obj)?);
    println!("ξ = u₁² + u₂² = {:?}", sel.xi.as_slice().iter().map(|x| (x * 1e4).round() / 1e4).collect::<Vec<_>>());
    println!("⟨ξ, 1⟩ = {:.6} (= number of eigenvalues summed)", sel.xi.as_slice().iter().sum::<f64>());
    Ok(())
}
