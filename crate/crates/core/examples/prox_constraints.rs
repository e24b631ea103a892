//! The three constraint families and their proximal maps.
//!
//! `cargo run --release --example prox_constraints`

use spectral_flow::constraints::{subgradient_residual, ConstraintFunctional, PsiFunction, Tilt};
use spectral_flow::space::{MeasureSpace, PotentialField};

fn main() -> spectral_flow::Result<()> {
    let space = MeasureSpace::new(vec![1.0, 2.0, 1.0, 0.5])?;
    let w = PotentialField::new(&space, vec![-3.0, 0.2, 1.7, -0.4])?;
    let tau = 0.5;
    let constraints = [
        ConstraintFunctional::box_mean(-1.0, 1.0, 0.0)?,
        ConstraintFunctional::psi_budget(PsiFunction::Exp { beta: 1.0 }, 0.5)?,
        ConstraintFunctional::psi_budget(PsiFunction::Power { beta: 2.0 }, 1.0)?,
        ConstraintFunctional::tilted_box(-1.0, 2.0, Tilt::Uniform(0.4), 0.5)?,
    ];
    println!("W = {:?}, m = {:?}, τ = {tau}", w.as_slice(), space.weights());
    for k in &constraints {
        let out = k.prox_detailed(tau, &w)?;
        let p = &out.value;
        // (W − prox(W))/τ is a subgradient of K at prox(W)
        let xi = PotentialField::new(&space, w.as_slice().iter().zip(p.as_slice()).map(|(a, b)| (a - b) / tau).collect())?;
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(3);
        let probes = k.probes(p, 1.0, 200, &mut rng)?;
        println!(
            "{:<11} prox = {:?}  K = {:.4}  multiplier = {:.4}  optimality residual = {:.1e}",
            k.name(),
            p.as_slice().iter().map(|x| (x * 1e6).round() / 1e6).collect::<Vec<_>>(),
            k.value(p),
            out.multiplier,
            subgradient_residual(k, p, &xi, &probes)?
        );
    }
    Ok(())
}
