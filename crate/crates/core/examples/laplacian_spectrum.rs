//! Spectra of the built-in operators, with and without a potential.
//!
//! `cargo run --release --example laplacian_spectrum`

use std::f64::consts::PI;

use spectral_flow::forms::{build_operator, OperatorSpec};
use spectral_flow::space::{MeasureSpace, PotentialField};
use spectral_flow::spectrum::eigensolve;

fn main() -> spectral_flow::Result<()> {
    let n = 16;
    let space = MeasureSpace::counting(n);
    let path = build_operator(&OperatorSpec::PathDirichlet { n, h: 1.0 }, &space)?;
    let spec = eigensolve(&path, &PotentialField::zeros(&space), 5)?;
    println!("path_dirichlet({n}), V = 0");
    for (k, l) in spec.lambdas().iter().enumerate() {
        let exact = 4.0 * ((k + 1) as f64 * PI / (2.0 * (n + 1) as f64)).sin().powi(2);
        println!("  λ_{} = {l:.12}  closed form {exact:.12}", k + 1);
    }
    println!("  coercivity α = {:.6e}, max residual {:.2e}", path.alpha(), spec.max_residual(&path));

    // a well in the middle pulls the ground state down
    let well = PotentialField::new(&space, (0..n).map(|i| if (6..10).contains(&i) { -1.0 } else { 0.5 }).collect())?;
    let spec = eigensolve(&path, &well, 3)?;
    println!("with a well: λ = {:?}", spec.lambdas());
    let u1 = spec.frame()[0].as_slice();
    println!("  ground state mass inside the well: {:.4}", u1[6..10].iter().map(|u| u * u).sum::<f64>());

    // the square grid has repeated eigenvalues
    let grid_space = MeasureSpace::counting(36);
    let grid = build_operator(&OperatorSpec::Grid2dDirichlet { nx: 6, ny: 6, h: 1.0 }, &grid_space)?;
    let spec = eigensolve(&grid, &PotentialField::zeros(&grid_space), 6)?;
    println!("grid2d_dirichlet(6x6): λ = {:?}", spec.lambdas());
    println!("  clusters: {:?}", spec.clusters());

    let frac = build_operator(
        &OperatorSpec::Fractional { base: Box::new(OperatorSpec::PathDirichlet { n, h: 1.0 }), s: 0.5 },
        &space,
    )?;
    let spec = eigensolve(&frac, &PotentialField::zeros(&space), 3)?;
    println!("fractional s = 1/2: λ = {:?} (square roots of the path eigenvalues)", spec.lambdas());
    Ok(())
}
