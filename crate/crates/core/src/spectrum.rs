//! The generalized eigenproblem `L u + M V u = λ M u`.
//!
//! Solved densely: the `M^{1/2}` similarity turns it into an ordinary
//! symmetric problem, so the returned frame is m-orthonormal by
//! construction. Each eigenvector is signed so that its first
//! non-negligible entry is positive.

use std::ops::Range;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{check_dim, Error, Result};
use crate::forms::BilinearForm;
use crate::space::{PotentialField, StateVector};

/// When two consecutive eigenvalues count as equal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClusterTolerance {
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for ClusterTolerance {
    fn default() -> Self {
        Self { rel_tol: 1e-8, abs_tol: 1e-10 }
    }
}

impl ClusterTolerance {
    pub fn new(rel_tol: f64, abs_tol: f64) -> Result<Self> {
        if rel_tol >= 0.0 && abs_tol >= 0.0 {
            Ok(Self { rel_tol, abs_tol })
        } else {
            Err(Error::Parameter("cluster tolerances must be nonnegative".into()))
        }
    }

    /// `b` continues the cluster of `a` (with `a ≤ b`).
    pub fn joins(&self, a: f64, b: f64) -> bool {
        b - a <= self.abs_tol + self.rel_tol * a.abs().max(1.0)
    }
}

/// The lowest eigenpairs of `E_V`, ascending.
#[derive(Clone, Debug)]
pub struct Spectrum {
    lambdas: Vec<f64>,
    frame: Vec<StateVector>,
    clusters: Vec<Range<usize>>,
    potential: PotentialField,
    tol: ClusterTolerance,
}

impl Spectrum {
    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn frame(&self) -> &[StateVector] {
        &self.frame
    }

    /// Maximal groups of (numerically) equal eigenvalues, as 0-based
    /// index ranges.
    pub fn clusters(&self) -> &[Range<usize>] {
        &self.clusters
    }

    pub fn potential(&self) -> &PotentialField {
        &self.potential
    }

    pub fn cluster_tolerance(&self) -> ClusterTolerance {
        self.tol
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// The first `k` eigenvectors as the columns of a `d × k` matrix.
    pub fn frame_matrix(&self, k: usize) -> DMatrix<f64> {
        let d = self.potential.dim();
        DMatrix::from_fn(d, k, |i, j| self.frame[j].as_slice()[i])
    }

    /// Largest scaled residual `‖L u + M V u − λ M u‖ / (1 + |λ|)`.
    pub fn max_residual(&self, form: &BilinearForm) -> f64 {
        let m = DVector::from_column_slice(form.space().weights());
        let v = self.potential.values();
        self.lambdas
            .iter()
            .zip(&self.frame)
            .map(|(lam, u)| {
                let u = u.values();
                let r = form.matrix() * u + m.component_mul(v).component_mul(u) - m.component_mul(u) * *lam;
                r.norm() / (1.0 + lam.abs())
            })
            .fold(0.0, f64::max)
    }
}

/// The `count` smallest eigenpairs of `(L + M V, M)`.
pub fn eigensolve(form: &BilinearForm, v: &PotentialField, count: usize) -> Result<Spectrum> {
    eigensolve_with(form, v, count, ClusterTolerance::default())
}

pub fn eigensolve_with(
    form: &BilinearForm,
    v: &PotentialField,
    count: usize,
    tol: ClusterTolerance,
) -> Result<Spectrum> {
    let d = form.dim();
    check_dim(d, v.dim())?;
    if count == 0 || count > d {
        return Err(Error::Parameter(format!("requested {count} eigenpairs of a {d}-dimensional problem")));
    }
    if v.as_slice().iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("potential has non-finite entries".into()));
    }

    let mut a = form.reduced_matrix();
    for i in 0..d {
        a[(i, i)] += v.as_slice()[i];
    }
    let eig = SymmetricEigen::try_new(a, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numeric("symmetric eigensolver did not converge".into()))?;

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));

    let sqrt_m = form.space().sqrt_weights();
    let space = form.space();
    let mut lambdas = Vec::with_capacity(count);
    let mut frame = Vec::with_capacity(count);
    for &idx in order.iter().take(count) {
        let mut u = eig.eigenvectors.column(idx).component_div(&sqrt_m);
        let peak = u.amax();
        if let Some(first) = u.iter().find(|x| x.abs() > 1e-10 * peak) {
            if *first < 0.0 {
                u.neg_mut();
            }
        }
        lambdas.push(eig.eigenvalues[idx]);
        frame.push(StateVector::from_vector(space, u)?);
    }
    let clusters = detect_clusters(&lambdas, tol);
    Ok(Spectrum { lambdas, frame, clusters, potential: v.clone(), tol })
}

/// `σₖ = λ₁ + … + λₖ`.
pub fn sigma_k(spec: &Spectrum, k: usize) -> Result<f64> {
    if k == 0 || k > spec.len() {
        return Err(Error::Parameter(format!("σ_k needs 1 ≤ k ≤ {}, got {k}", spec.len())));
    }
    Ok(spec.lambdas[..k].iter().sum())
}

/// Splits an ascending sequence into maximal runs of consecutive values
/// that [`ClusterTolerance::joins`] chains together.
pub fn detect_clusters(lambdas: &[f64], tol: ClusterTolerance) -> Vec<Range<usize>> {
    let mut clusters = Vec::new();
    let mut start = 0;
    for i in 1..=lambdas.len() {
        if i == lambdas.len() || !tol.joins(lambdas[i - 1], lambdas[i]) {
            clusters.push(start..i);
            start = i;
        }
    }
    clusters
}

/// True iff each of the first `J + 1` eigenvalues sits in a singleton
/// cluster, i.e. `λ₁ < λ₂ < … < λ_{J+1}` and `λ_{J+1}` is not tied to a
/// further computed eigenvalue.
pub fn interior_gap_ok(spec: &Spectrum, j: usize) -> Result<bool> {
    if spec.len() < j + 1 {
        return Err(Error::Parameter(format!(
            "gap test at depth {j} needs {} eigenvalues, spectrum has {}",
            j + 1,
            spec.len()
        )));
    }
    Ok(spec.clusters.iter().filter(|c| c.start <= j).all(|c| c.len() == 1))
}
