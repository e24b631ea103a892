//! Executable property checks.
//!
//! Every check returns a [`PropertyReport`] holding the worst violation
//! over its samples and a verdict against a tolerance. Checks that need a
//! nondegenerate (or degenerate) spectrum and find none report
//! [`Verdict::Inconclusive`] instead of passing vacuously.
//!
//! [`run_suite`] runs all checks for one instance on scoped threads. Each
//! check draws from its own generator seeded from the suite seed and the
//! check name, so reports do not depend on scheduling.

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::thread;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::constraints::{subgradient_residual, ConstraintFunctional};
use crate::error::{Error, Result};
use crate::forms::BilinearForm;
use crate::objectives::{
    check_structural, linear_bound_check, phi_eval_grad, rotate_within_clusters, spectral_value,
    structural_samples, subgradient_xi, SpectralObjective,
};
use crate::sampling::random_frame;
use crate::space::PotentialField;
use crate::spectrum::{eigensolve, sigma_k, Spectrum};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Pass => "pass",
            Self::Fail => "fail",
            Self::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyReport {
    pub name: String,
    /// The inequality or identity being checked.
    pub statement: String,
    pub samples: usize,
    /// Maximum over samples; `-∞` when there were none.
    pub worst_violation: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub seed: u64,
    /// Why a check was inconclusive, or other remarks.
    pub note: Option<String>,
}

impl PropertyReport {
    fn new(name: &str, statement: &str, tolerance: f64, seed: u64) -> Self {
        Self {
            name: name.into(),
            statement: statement.into(),
            samples: 0,
            worst_violation: f64::NEG_INFINITY,
            tolerance,
            verdict: Verdict::Inconclusive,
            seed,
            note: None,
        }
    }

    fn record(&mut self, violation: f64) {
        self.samples += 1;
        // NaN counts as a failure
        self.worst_violation = if violation.is_nan() { f64::INFINITY } else { self.worst_violation.max(violation) };
    }

    fn finish(mut self) -> Self {
        self.verdict = if self.samples == 0 {
            Verdict::Inconclusive
        } else if self.worst_violation <= self.tolerance {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        self
    }

    fn inconclusive(mut self, why: impl Into<String>) -> Self {
        self.note = Some(why.into());
        self.samples = 0;
        self.verdict = Verdict::Inconclusive;
        self
    }

    /// One line: verdict, name, worst violation against tolerance.
    pub fn line(&self) -> String {
        format!(
            "[{}] {} worst={:e} tol={:e} samples={}{}",
            self.verdict,
            self.name,
            self.worst_violation,
            self.tolerance,
            self.samples,
            self.note.as_ref().map(|n| format!(" ({n})")).unwrap_or_default()
        )
    }
}

/// `true` iff no report failed (inconclusive reports are ignored).
pub fn all_passed(reports: &[PropertyReport]) -> bool {
    reports.iter().all(|r| r.verdict != Verdict::Fail)
}

/// Per-check seed derived from the suite seed and the check name.
pub fn check_seed(seed: u64, name: &str) -> u64 {
    let mut h = DefaultHasher::new();
    name.hash(&mut h);
    seed ^ h.finish().rotate_left(17)
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Flips the sign of checked inequalities, to confirm that the harness
/// can fail.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Mutation(pub bool);

impl Mutation {
    fn apply(self, v: f64) -> f64 {
        if self.0 {
            -v
        } else {
            v
        }
    }
}

fn restricted_eigenvalues(form: &BilinearForm, v: &PotentialField, frame: &DMatrix<f64>) -> DVector<f64> {
    let m = form.space().weights();
    let mv = DMatrix::from_fn(frame.nrows(), frame.ncols(), |i, j| m[i] * v.as_slice()[i] * frame[(i, j)]);
    let g = frame.transpose() * (form.matrix() * frame + mv);
    let g = (&g + g.transpose()) * 0.5;
    let mut e: Vec<f64> = g.symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(f64::total_cmp);
    DVector::from_vec(e)
}

fn frame_energies(form: &BilinearForm, v: &PotentialField, frame: &DMatrix<f64>) -> Vec<f64> {
    let m = form.space().weights();
    (0..frame.ncols())
        .map(|j| {
            let col = frame.column(j);
            form.energy(col.as_slice())
                + col.iter().zip(m).zip(v.as_slice()).map(|((u, mi), vi)| mi * vi * u * u).sum::<f64>()
        })
        .collect()
}

fn partial_sums(v: &[f64]) -> Vec<f64> {
    v.iter()
        .scan(0.0, |a, x| {
            *a += x;
            Some(*a)
        })
        .collect()
}

fn spectral_scale(lambdas: &[f64]) -> f64 {
    lambdas.iter().fold(1.0f64, |m, x| m.max(x.abs()))
}

/// Spectral inequalities on random domain samples: monotonicity in `V`,
/// concavity of `σₖ`, the min-max bound on random subspaces (with the
/// floor `λ₁ ≥ λ_min`), and weak majorization of frame energies.
pub fn spectral_suite(
    form: &BilinearForm,
    k: &ConstraintFunctional,
    depth: usize,
    samples: usize,
    seed: u64,
    mutation: Mutation,
) -> Result<Vec<PropertyReport>> {
    let d = form.dim();
    if depth == 0 || depth > d {
        return Err(Error::Parameter(format!("spectral suite needs 1 ≤ J ≤ {d}, got {depth}")));
    }
    let template = PotentialField::zeros(form.space());
    let lambda_min = form.alpha() + k.v_min();

    let name = "spectrum.monotonicity";
    let s = check_seed(seed, name);
    let mut rng = rng_for(s);
    let mut mono = PropertyReport::new(name, "V₁ ≤ V₂ pointwise implies λₖ(V₁) ≤ λₖ(V₂), k ≤ J (relative to max(1, |λ|))", 1e-9, s);
    for n in 0..samples {
        let v1 = k.sample_domain(&template, &mut rng)?;
        // every tenth pair is the degenerate pair V₂ = V₁
        let v2 = if n % 10 == 0 { v1.clone() } else { v1.with_values(v1.values() + DVector::from_fn(d, |_, _| rng.random_range(0.0..1.0))) };
        let a = eigensolve(form, &v1, depth)?;
        let b = eigensolve(form, &v2, depth)?;
        let scale = spectral_scale(b.lambdas());
        let worst = a.lambdas().iter().zip(b.lambdas()).map(|(x, y)| mutation.apply(x - y) / scale);
        mono.record(worst.fold(f64::NEG_INFINITY, f64::max));
    }

    let name = "spectrum.sigma_concavity";
    let s = check_seed(seed, name);
    let mut rng = rng_for(s);
    let mut conc = PropertyReport::new(
        name,
        "σₖ(tV₁ + (1−t)V₂) ≥ tσₖ(V₁) + (1−t)σₖ(V₂), k ≤ J (relative to max(1, |σ|))",
        1e-9,
        s,
    );
    for _ in 0..samples {
        let v1 = k.sample_domain(&template, &mut rng)?;
        let v2 = k.sample_domain(&template, &mut rng)?;
        let t = rng.random_range(0.0..1.0);
        let mid = v1.lerp(&v2, 1.0 - t);
        let (a, b, c) = (eigensolve(form, &v1, depth)?, eigensolve(form, &v2, depth)?, eigensolve(form, &mid, depth)?);
        let mut worst = f64::NEG_INFINITY;
        for kk in 1..=depth {
            let chord = t * sigma_k(&a, kk)? + (1.0 - t) * sigma_k(&b, kk)?;
            let at_mid = sigma_k(&c, kk)?;
            worst = worst.max(mutation.apply(chord - at_mid) / at_mid.abs().max(1.0));
        }
        conc.record(worst);
    }

    let name = "spectrum.min_max";
    let s = check_seed(seed, name);
    let mut rng = rng_for(s);
    let mut minmax = PropertyReport::new(
        name,
        "λₖ(V) ≤ λₖ(V, E) for random J-dimensional subspaces E, and λ₁(V) ≥ α + V_min (relative to max(1, |λ|))",
        1e-9,
        s,
    );
    for _ in 0..samples {
        let v = k.sample_domain(&template, &mut rng)?;
        let spec = eigensolve(form, &v, depth)?;
        let frame = random_frame(form.space(), depth, &mut rng);
        let restricted = restricted_eigenvalues(form, &v, &frame);
        let scale = spectral_scale(restricted.as_slice());
        let mut worst = mutation.apply(lambda_min - spec.lambdas()[0]) / scale;
        for (l, r) in spec.lambdas().iter().zip(restricted.iter()) {
            worst = worst.max(mutation.apply(l - r) / scale);
        }
        minmax.record(worst);
    }

    let name = "spectrum.weak_majorization";
    let s = check_seed(seed, name);
    let mut rng = rng_for(s);
    let mut major = PropertyReport::new(
        name,
        "partial sums of the sorted frame energies E_V(wᵢ) dominate σₖ(V) for random m-orthonormal J-frames",
        1e-9,
        s,
    );
    for _ in 0..samples {
        let v = k.sample_domain(&template, &mut rng)?;
        let spec = eigensolve(form, &v, depth)?;
        let frame = random_frame(form.space(), depth, &mut rng);
        let mut mu = frame_energies(form, &v, &frame);
        mu.sort_by(f64::total_cmp);
        let s_mu = partial_sums(&mu);
        let sig = partial_sums(spec.lambdas());
        let scale = spectral_scale(&s_mu);
        let worst = sig.iter().zip(&s_mu).map(|(a, b)| mutation.apply(a - b) / scale);
        major.record(worst.fold(f64::NEG_INFINITY, f64::max));
    }

    Ok(vec![mono.finish(), conc.finish(), minmax.finish(), major.finish()])
}

/// `σₖ(W) − σₖ(V) − ⟨Σ_{h≤k} u_h(V)², W − V⟩_m ≤ 0` on random admissible
/// pairs, for `k = 1..=depth`.
pub fn linear_bound_suite(
    form: &BilinearForm,
    k: &ConstraintFunctional,
    depth: usize,
    samples: usize,
    seed: u64,
) -> Result<PropertyReport> {
    let name = "sigma.linear_upper_bound";
    let s = check_seed(seed, name);
    let mut rng = rng_for(s);
    let template = PotentialField::zeros(form.space());
    let mut rep = PropertyReport::new(name, "σₖ(W) − σₖ(V) ≤ ⟨Σ_{h≤k} u_h², W − V⟩_m", 1e-9, s);
    for n in 0..samples {
        let v = k.sample_domain(&template, &mut rng)?;
        // alternate far pairs with nearby ones
        let w = if n % 2 == 0 {
            k.sample_domain(&template, &mut rng)?
        } else {
            let p = v.with_values(v.values() + DVector::from_fn(v.dim(), |_, _| 0.05 * rng.random_range(-1.0..1.0)));
            k.prox(1.0, &p)?
        };
        let kk = 1 + n % depth;
        rep.record(linear_bound_check(form, &v, &w, kk)?);
    }
    Ok(rep.finish())
}

/// For every complete cluster of size ≥ 2, `Σ_{h∈cluster} u_h²` is the
/// same for random orthogonal mixes of the cluster's eigenvectors.
pub fn frame_invariance_check(
    form: &BilinearForm,
    v: &PotentialField,
    rotations: usize,
    seed: u64,
) -> Result<PropertyReport> {
    let name = "frame.invariance";
    let s = check_seed(seed, name);
    let mut rng = rng_for(s);
    let rep = PropertyReport::new(
        name,
        "pointwise Σ_{h∈cluster} u_h² is unchanged by orthogonal mixing within a cluster",
        1e-9,
        s,
    );
    let spec = eigensolve(form, v, form.dim())?;
    let clusters: Vec<_> = spec.clusters().iter().filter(|c| c.len() > 1).cloned().collect();
    if clusters.is_empty() {
        return Ok(rep.inconclusive("no repeated eigenvalue"));
    }
    let cluster_sum = |frame: &[crate::space::StateVector], c: &std::ops::Range<usize>| -> DVector<f64> {
        let mut out = DVector::zeros(v.dim());
        for u in &frame[c.clone()] {
            out += u.values().component_mul(u.values());
        }
        out
    };
    let base: Vec<DVector<f64>> = clusters.iter().map(|c| cluster_sum(spec.frame(), c)).collect();
    let mut rep = rep;
    for _ in 0..rotations {
        let frame = rotate_within_clusters(&spec, &mut rng);
        let worst = clusters
            .iter()
            .zip(&base)
            .map(|(c, b)| (cluster_sum(&frame, c) - b).amax())
            .fold(0.0, f64::max);
        rep.record(worst);
    }
    Ok(rep.finish())
}

/// Eigenvalues of `(L + M(V + β))⁻¹ M` against `(λₖ + β)⁻¹`, largest first.
/// Needs `λ₁(V) + β > 0`.
pub fn resolvent_relation_check(form: &BilinearForm, v: &PotentialField, beta: f64) -> Result<PropertyReport> {
    let mut rep = PropertyReport::new(
        "resolvent.relation",
        "eigenvalues of (L + M(V+β))⁻¹M equal (λₖ(V) + β)⁻¹ in reversed order (relative error)",
        1e-9,
        0,
    );
    rep.record(resolvent_error(form, v, beta)?);
    Ok(rep.finish())
}

fn resolvent_error(form: &BilinearForm, v: &PotentialField, beta: f64) -> Result<f64> {
    let d = form.dim();
    let spec = eigensolve(form, v, d)?;
    let shift = spec.lambdas()[0] + beta;
    if !(shift > 0.0) {
        return Err(Error::Numeric(format!("resolvent needs λ₁ + β > 0, got {shift}")));
    }
    let m = form.space().weights();
    let a = DMatrix::from_fn(d, d, |i, j| {
        form.matrix()[(i, j)] + if i == j { m[i] * (v.as_slice()[i] + beta) } else { 0.0 }
    });
    let sqrt_m = DMatrix::from_diagonal(&form.space().sqrt_weights());
    let chol = a
        .cholesky()
        .ok_or_else(|| Error::Numeric(format!("shifted operator is singular at β = {beta}")))?;
    // M^{1/2} A⁻¹ M^{1/2} is similar to A⁻¹M and symmetric
    let r = &sqrt_m * chol.solve(&sqrt_m);
    let r = (&r + r.transpose()) * 0.5;
    let mut got: Vec<f64> = r.symmetric_eigenvalues().iter().copied().collect();
    got.sort_by(|a, b| b.total_cmp(a));
    let mut worst = 0.0f64;
    for (g, l) in got.iter().zip(spec.lambdas()) {
        let want = 1.0 / (l + beta);
        worst = worst.max((g - want).abs() / want.abs());
    }
    Ok(worst)
}

/// Resolvent relation over random `(V, β)` pairs from the domain.
pub fn resolvent_suite(
    form: &BilinearForm,
    k: &ConstraintFunctional,
    samples: usize,
    seed: u64,
) -> Result<PropertyReport> {
    let name = "resolvent.relation";
    let s = check_seed(seed, name);
    let mut rng = rng_for(s);
    let template = PotentialField::zeros(form.space());
    let mut rep = PropertyReport::new(
        name,
        "eigenvalues of (L + M(V+β))⁻¹M equal (λₖ(V) + β)⁻¹ in reversed order (relative error)",
        1e-9,
        s,
    );
    let floor = form.alpha() + k.v_min();
    for n in 0..samples {
        let v = k.sample_domain(&template, &mut rng)?;
        // β spread over several decades above the admissible floor
        let beta = (1.0 - floor).max(0.0) + 10f64.powi((n % 3) as i32) * rng.random_range(0.5..1.0);
        rep.record(resolvent_error(form, &v, beta)?);
    }
    Ok(rep.finish())
}

/// Smallest gap between consecutive eigenvalues below which finite
/// differences are not trusted.
pub const FD_GAP_FLOOR: f64 = 1e-6;

/// Centered differences of `H` along random m-unit directions against
/// `⟨ξ, d⟩_m`. Inconclusive when `λ₁, …, λ_{J+1}` has a gap below
/// [`FD_GAP_FLOOR`]. `step: None` picks [`fd_step`].
pub fn gradient_fd_check(
    form: &BilinearForm,
    obj: &SpectralObjective,
    v: &PotentialField,
    step: Option<f64>,
    directions: usize,
    seed: u64,
) -> Result<PropertyReport> {
    let mut rep = PropertyReport::new(
        "objective.gradient_fd",
        "centered differences of H match ⟨ξ, d⟩_m (relative to max(|fd|, |ξ|_m|d|_m))",
        1e-5,
        seed,
    );
    fd_into(&mut rep, form, obj, v, step, directions, &mut rng_for(seed))?;
    Ok(rep.finish())
}

/// Difference step balancing eigenvalue rounding (about `ε‖M⁻¹(L + MV)‖`)
/// against truncation, and kept well below the smallest gap.
pub fn fd_step(form: &BilinearForm, v: &PotentialField, min_gap: f64) -> f64 {
    let l = form.matrix();
    let m = form.space().weights();
    let norm = (0..l.nrows())
        .map(|i| l.row(i).iter().map(|x| x.abs()).sum::<f64>() / m[i] + v.as_slice()[i].abs())
        .fold(1.0f64, f64::max);
    (f64::EPSILON * norm).cbrt().min(1e-2 * min_gap)
}

/// Returns `false` when the base point was skipped as degenerate.
fn fd_into(
    rep: &mut PropertyReport,
    form: &BilinearForm,
    obj: &SpectralObjective,
    v: &PotentialField,
    step: Option<f64>,
    directions: usize,
    rng: &mut ChaCha8Rng,
) -> Result<bool> {
    let j = obj.depth();
    let count = (j + 1).min(form.dim());
    let spec = eigensolve(form, v, count)?;
    let min_gap = spec.lambdas().windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    if min_gap < FD_GAP_FLOOR {
        return Ok(false);
    }
    let step = step.unwrap_or_else(|| fd_step(form, v, min_gap));
    let xi = subgradient_xi(&spec, obj)?.xi;
    for _ in 0..directions {
        let raw = DVector::from_fn(v.dim(), |_, _| rng.random_range(-1.0..1.0));
        let dir = v.with_values(raw);
        let dir = dir.with_values(dir.values() / dir.norm());
        let plus = v.with_values(v.values() + dir.values() * step);
        let minus = v.with_values(v.values() - dir.values() * step);
        let fd = (spectral_value(form, &plus, obj)? - spectral_value(form, &minus, obj)?) / (2.0 * step);
        let exact = xi.dot(&dir)?;
        let denom = fd.abs().max(xi.norm());
        rep.record(if denom == 0.0 { 0.0 } else { (fd - exact).abs() / denom });
    }
    Ok(true)
}

/// [`gradient_fd_check`] over random domain base points.
pub fn gradient_fd_suite(
    form: &BilinearForm,
    k: &ConstraintFunctional,
    obj: &SpectralObjective,
    points: usize,
    directions: usize,
    seed: u64,
) -> Result<PropertyReport> {
    let name = "objective.gradient_fd";
    let s = check_seed(seed, name);
    let mut rng = rng_for(s);
    let template = PotentialField::zeros(form.space());
    let mut rep = PropertyReport::new(
        name,
        "centered differences of H match ⟨ξ, d⟩_m (relative to max(|fd|, |ξ|_m|d|_m))",
        1e-5,
        s,
    );
    let mut skipped = 0;
    for _ in 0..points {
        let v = k.sample_domain(&template, &mut rng)?;
        if !fd_into(&mut rep, form, obj, &v, None, directions, &mut rng)? {
            skipped += 1;
        }
    }
    if skipped > 0 {
        rep.note = Some(format!("{skipped} base points skipped for gaps below {FD_GAP_FLOOR:e}"));
    }
    Ok(rep.finish())
}

/// Ordering condition on `∂φ` at random ordered tuples above `λ_min`,
/// half of them with a forced tie.
pub fn structural_suite(obj: &SpectralObjective, lambda_min: f64, samples: usize, seed: u64) -> Result<PropertyReport> {
    let name = "objective.structural";
    let s = check_seed(seed, name);
    let mut rng = rng_for(s);
    let mut rep = PropertyReport::new(
        name,
        "∂_Jφ ≥ 0 and ∂_{k−1}φ ≥ ∂_kφ wherever λ_{k−1} = λ_k (violation in units of the gradient)",
        0.0,
        s,
    );
    let lo = lambda_min.max(1e-3);
    let pts = structural_samples(obj.depth(), lo, lo + 10.0, samples, &mut rng);
    let report = check_structural(obj, &pts)?;
    for sample in &report.samples {
        rep.record(if sample.passed() { 0.0 } else { 1.0 });
    }
    Ok(rep.finish())
}

/// `φ(E_V(w)) ≥ φ(λ^J(V))` over random m-orthonormal frames, with equality
/// at the eigenframe. Only meaningful for symmetric, increasing,
/// Schur-concave `φ`; inconclusive otherwise.
pub fn frame_minimum_suite(
    form: &BilinearForm,
    k: &ConstraintFunctional,
    obj: &SpectralObjective,
    samples: usize,
    seed: u64,
) -> Result<PropertyReport> {
    let name = "objective.frame_minimum";
    let s = check_seed(seed, name);
    let mut rng = rng_for(s);
    let rep = PropertyReport::new(
        name,
        "φ(E_V(w)) ≥ φ(λ^J(V)) for m-orthonormal J-frames w, equality at the eigenframe",
        1e-9,
        s,
    );
    if !obj.is_schur_concave_increasing() {
        return Ok(rep.inconclusive("objective is not known to be increasing and Schur-concave"));
    }
    let mut rep = rep;
    let template = PotentialField::zeros(form.space());
    let j = obj.depth();
    for _ in 0..samples {
        let v = k.sample_domain(&template, &mut rng)?;
        let spec = eigensolve(form, &v, j)?;
        let (best, _) = phi_eval_grad(obj, spec.lambdas())?;
        let scale = best.abs().max(1.0);
        let eig = frame_energies(form, &v, &spec.frame_matrix(j));
        let mut eig_sorted = eig.clone();
        eig_sorted.sort_by(f64::total_cmp);
        let at_eig = phi_eval_grad(obj, &eig_sorted)?.0;
        let frame = random_frame(form.space(), j, &mut rng);
        let mut mu = frame_energies(form, &v, &frame);
        mu.sort_by(f64::total_cmp);
        let at_random = phi_eval_grad(obj, &mu)?.0;
        rep.record(((best - at_random) / scale).max((at_eig - best).abs() / scale));
    }
    Ok(rep.finish())
}

/// Supergradients of a pointwise minimum of affine maps. With
/// `F(v) = min_{u ∈ C} ⟨v, f(u)⟩ + g(u)` over a finite `C` and `M(v)` the
/// minimizers, every convex combination of `{f(u) : u ∈ M(v)}` is a
/// supergradient: `F(v + h) ≤ F(v) + ⟨p, h⟩`. Ties are constructed so
/// that `M(v)` has several elements.
pub fn min_type_supergradient_check(dim: usize, samples: usize, seed: u64) -> Result<PropertyReport> {
    let name = "supergradient.min_type";
    let s = check_seed(seed, name);
    let mut rng = rng_for(s);
    let mut rep = PropertyReport::new(
        name,
        "convex combinations of active gradients of a finite minimum of affine maps are supergradients",
        1e-12,
        s,
    );
    let pieces = 8;
    for _ in 0..samples {
        let f: Vec<DVector<f64>> =
            (0..pieces).map(|_| DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0))).collect();
        let mut g: Vec<f64> = (0..pieces).map(|_| rng.random_range(0.0..1.0)).collect();
        let v = DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0));
        let val = |x: &DVector<f64>, g: &[f64]| (0..pieces).map(|i| f[i].dot(x) + g[i]).fold(f64::INFINITY, f64::min);
        let fv = val(&v, &g);
        // make the first three pieces active at v
        let active = 3;
        for i in 0..active {
            g[i] = fv - f[i].dot(&v);
        }
        let fv = val(&v, &g);
        let w: Vec<f64> = (0..active).map(|_| rng.random_range(0.0..1.0)).collect();
        let total: f64 = w.iter().sum();
        let p = (0..active).fold(DVector::zeros(dim), |acc, i| acc + &f[i] * (w[i] / total));
        let h = DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0)) * rng.random_range(0.0..1.0);
        rep.record(val(&(&v + &h), &g) - fv - p.dot(&h));
    }
    Ok(rep.finish())
}

/// Prox checks: membership of outputs, nonexpansiveness (Lipschitz
/// constant `1/(1 − τθ)`), and the subgradient certificate for
/// `(W − prox W)/τ` against 200 probes.
pub fn prox_suite(
    k: &ConstraintFunctional,
    template: &PotentialField,
    tau: f64,
    samples: usize,
    seed: u64,
) -> Result<Vec<PropertyReport>> {
    let name = "prox.membership";
    let s = check_seed(seed, name);
    let mut rng = rng_for(s);
    let spread = k.sup_bound().unwrap_or(5.0) * 2.0 + 1.0;
    let random_point = |rng: &mut ChaCha8Rng| {
        template.with_values(DVector::from_fn(template.dim(), |_, _| rng.random_range(-spread..spread)))
    };
    let mut member = PropertyReport::new(name, "prox outputs lie in the domain (1 = outside)", 0.0, s);
    for _ in 0..samples {
        let p = k.prox(tau, &random_point(&mut rng))?;
        member.record(if k.contains(&p) { 0.0 } else { 1.0 });
    }

    let name = "prox.nonexpansive";
    let s = check_seed(seed, name);
    let mut rng = rng_for(s);
    let lip = 1.0 / (1.0 - tau * k.theta());
    let mut nonexp = PropertyReport::new(name, "|prox W₁ − prox W₂|_m ≤ |W₁ − W₂|_m / (1 − τθ)", 1e-9, s);
    for _ in 0..samples {
        let (a, b) = (random_point(&mut rng), random_point(&mut rng));
        let d = k.prox(tau, &a)?.dist(&k.prox(tau, &b)?)?;
        nonexp.record(d - lip * a.dist(&b)?);
    }

    let name = "prox.optimality";
    let s = check_seed(seed, name);
    let mut rng = rng_for(s);
    let mut opt = PropertyReport::new(
        name,
        "(W − prox W)/τ is a subgradient of K at prox W against 200 probes",
        1e-8,
        s,
    );
    for _ in 0..samples.min(50) {
        let w = random_point(&mut rng);
        let p = k.prox(tau, &w)?;
        let xi = p.with_values((w.values() - p.values()) / tau);
        let probes = k.probes(&p, 1.0, 200, &mut rng)?;
        opt.record(subgradient_residual(k, &p, &xi, &probes)?);
    }
    Ok(vec![member.finish(), nonexp.finish(), opt.finish()])
}

#[derive(Clone, Debug)]
pub struct SuiteOptions {
    pub samples: usize,
    pub rotations: usize,
    pub fd_points: usize,
    pub fd_directions: usize,
    pub mutation: Mutation,
    /// Replaces every check's tolerance.
    pub tolerance: Option<f64>,
    pub seed: u64,
    /// Step size used by the prox checks.
    pub tau: f64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            samples: 100,
            rotations: 100,
            fd_points: 20,
            fd_directions: 20,
            mutation: Mutation(false),
            tolerance: None,
            seed: 0,
            tau: 0.1,
        }
    }
}

/// Runs every check on the instance concurrently; reports come back
/// sorted by name.
pub fn run_suite(
    form: &BilinearForm,
    k: &ConstraintFunctional,
    obj: &SpectralObjective,
    opts: &SuiteOptions,
) -> Result<Vec<PropertyReport>> {
    type Job<'a> = Box<dyn FnOnce() -> Result<Vec<PropertyReport>> + Send + 'a>;
    let template = PotentialField::zeros(form.space());
    let seed = opts.seed;
    let j = obj.depth();
    let lambda_min = form.alpha() + k.v_min();
    let jobs: Vec<Job> = vec![
        Box::new(|| spectral_suite(form, k, j, opts.samples, seed, opts.mutation)),
        Box::new(|| Ok(vec![linear_bound_suite(form, k, j, opts.samples, seed)?])),
        Box::new(|| Ok(vec![resolvent_suite(form, k, opts.samples.min(50), seed)?])),
        Box::new(|| Ok(vec![gradient_fd_suite(form, k, obj, opts.fd_points, opts.fd_directions, seed)?])),
        Box::new(move || Ok(vec![structural_suite(obj, lambda_min, opts.samples, seed)?])),
        Box::new(|| Ok(vec![frame_minimum_suite(form, k, obj, opts.samples, seed)?])),
        Box::new(|| {
            let v = k.central_point(&template)?;
            Ok(vec![frame_invariance_check(form, &v, opts.rotations, seed)?])
        }),
        Box::new(|| Ok(vec![min_type_supergradient_check(form.dim().min(8), opts.samples, seed)?])),
        Box::new(|| prox_suite(k, &template, opts.tau, opts.samples, seed)),
    ];
    let results: Vec<Result<Vec<PropertyReport>>> = thread::scope(|scope| {
        let handles: Vec<_> = jobs.into_iter().map(|job| scope.spawn(job)).collect();
        handles.into_iter().map(|h| h.join().expect("check thread panicked")).collect()
    });
    let mut reports = Vec::new();
    for r in results {
        reports.extend(r?);
    }
    if let Some(tol) = opts.tolerance {
        for r in &mut reports {
            r.tolerance = tol;
            if r.verdict != Verdict::Inconclusive {
                r.verdict = if r.worst_violation <= tol { Verdict::Pass } else { Verdict::Fail };
            }
        }
    }
    reports.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(reports)
}

/// Eigen-solves once and reports the largest `|Lu + MVu − λMu|`; a cheap
/// sanity check used by the CLI before long runs.
pub fn residual_report(form: &BilinearForm, v: &PotentialField, count: usize) -> Result<(Spectrum, f64)> {
    let spec = eigensolve(form, v, count)?;
    let r = spec.max_residual(form);
    Ok((spec, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::Tilt;
    use crate::forms::{build_operator, OperatorSpec};
    use crate::objectives::ObjectiveKind;
    use crate::space::MeasureSpace;

    fn path(n: usize) -> BilinearForm {
        build_operator(&OperatorSpec::PathDirichlet { n, h: 1.0 }, &MeasureSpace::counting(n)).unwrap()
    }

    fn zero_form(n: usize) -> BilinearForm {
        build_operator(&OperatorSpec::Dense { matrix: DMatrix::zeros(n, n) }, &MeasureSpace::counting(n)).unwrap()
    }

    #[test]
    fn spectral_suite_passes_and_mutation_fails() {
        let form = path(16);
        let k = ConstraintFunctional::box_mean(-1.0, 1.0, 0.0).unwrap();
        let reports = spectral_suite(&form, &k, 4, 100, 3, Mutation(false)).unwrap();
        assert_eq!(reports.len(), 4);
        for r in &reports {
            assert_eq!(r.verdict, Verdict::Pass, "{}", r.line());
            assert_eq!(r.samples, 100);
        }
        let mutated = spectral_suite(&form, &k, 4, 30, 3, Mutation(true)).unwrap();
        assert!(mutated.iter().all(|r| r.verdict == Verdict::Fail), "{mutated:?}");
    }

    #[test]
    fn frame_invariance_examples() {
        let form = zero_form(3);
        let v = PotentialField::new(form.space(), vec![1.0, 1.0, 2.0]).unwrap();
        let r = frame_invariance_check(&form, &v, 100, 1).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(r.worst_violation <= 1e-12);

        let triple = zero_form(4);
        let v = PotentialField::new(triple.space(), vec![0.5, 0.5, 0.5, 3.0]).unwrap();
        assert_eq!(frame_invariance_check(&triple, &v, 100, 1).unwrap().verdict, Verdict::Pass);

        let simple = PotentialField::new(form.space(), vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(frame_invariance_check(&form, &simple, 10, 1).unwrap().verdict, Verdict::Inconclusive);
    }

    #[test]
    fn resolvent_examples() {
        let form = path(3);
        let v = PotentialField::zeros(form.space());
        assert_eq!(resolvent_relation_check(&form, &v, 1.0).unwrap().verdict, Verdict::Pass);
        // largest resolvent eigenvalue 1/(3 − √2)
        let spec = eigensolve(&form, &v, 3).unwrap();
        assert!((1.0 / (spec.lambdas()[0] + 1.0) - 0.630602).abs() < 1e-6);

        let diag = zero_form(2);
        let v = PotentialField::new(diag.space(), vec![1.0, 2.0]).unwrap();
        for beta in [1.0, 10.0, 100.0] {
            let r = resolvent_relation_check(&diag, &v, beta).unwrap();
            assert!(r.worst_violation <= 1e-14, "{}", r.line());
        }
        assert!(resolvent_relation_check(&diag, &v, -1.0).is_err());
    }

    #[test]
    fn gradient_fd_examples() {
        let form = path(12);
        let mut r = rng_for(0);
        let v = PotentialField::new(form.space(), (0..12).map(|_| r.random_range(0.0..2.0)).collect()).unwrap();
        let obj = SpectralObjective::sum_first_k(1).unwrap();
        assert_eq!(gradient_fd_check(&form, &obj, &v, None, 20, 1).unwrap().verdict, Verdict::Pass);
        let c = SpectralObjective::new(ObjectiveKind::Constant { value: 2.0 }).unwrap();
        let rep = gradient_fd_check(&form, &c, &v, Some(1e-6), 5, 1).unwrap();
        assert_eq!(rep.worst_violation, 0.0);

        let diag = zero_form(3);
        let near = PotentialField::new(diag.space(), vec![1.0, 1.0 + 1e-7, 2.0]).unwrap();
        assert_eq!(gradient_fd_check(&diag, &obj, &near, None, 5, 1).unwrap().verdict, Verdict::Inconclusive);
    }

    #[test]
    fn frame_minimum_and_structural() {
        let form = path(10);
        let k = ConstraintFunctional::box_mean(-1.0, 1.0, 0.0).unwrap();
        let obj = SpectralObjective::sum_first_k(3).unwrap();
        assert_eq!(frame_minimum_suite(&form, &k, &obj, 50, 2).unwrap().verdict, Verdict::Pass);
        let gp = SpectralObjective::new(ObjectiveKind::GapPenalty {
            j: 2,
            shape: crate::objectives::GapShape::Quadratic,
        })
        .unwrap();
        assert_eq!(frame_minimum_suite(&form, &k, &gp, 5, 2).unwrap().verdict, Verdict::Inconclusive);
        assert_eq!(structural_suite(&gp, 0.1, 50, 2).unwrap().verdict, Verdict::Pass);
    }

    #[test]
    fn min_type_supergradients() {
        let r = min_type_supergradient_check(5, 200, 4).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{}", r.line());
    }

    #[test]
    fn prox_suite_passes_for_each_kind() {
        let s = MeasureSpace::new(vec![0.5, 1.0, 2.0, 1.5]).unwrap();
        let t = PotentialField::zeros(&s);
        for k in [
            ConstraintFunctional::box_mean(-1.0, 2.0, 0.5).unwrap(),
            ConstraintFunctional::psi_budget(crate::constraints::PsiFunction::Exp { beta: 2.0 }, 0.2).unwrap(),
            ConstraintFunctional::tilted_box(-1.0, 1.0, Tilt::Uniform(0.3), 1.0).unwrap(),
        ] {
            for r in prox_suite(&k, &t, 0.5, 60, 9).unwrap() {
                assert_eq!(r.verdict, Verdict::Pass, "{}: {}", k.name(), r.line());
            }
        }
    }

    #[test]
    fn suite_is_deterministic_and_tolerance_override_fails() {
        let form = path(8);
        let k = ConstraintFunctional::box_mean(-1.0, 1.0, 0.0).unwrap();
        let obj = SpectralObjective::sum_first_k(2).unwrap();
        let opts = SuiteOptions { samples: 20, rotations: 10, fd_points: 3, fd_directions: 5, ..Default::default() };
        let a = run_suite(&form, &k, &obj, &opts).unwrap();
        let b = run_suite(&form, &k, &obj, &opts).unwrap();
        assert_eq!(a, b);
        assert!(all_passed(&a), "{:#?}", a.iter().map(PropertyReport::line).collect::<Vec<_>>());
        let mut names: Vec<_> = a.iter().map(|r| r.name.clone()).collect();
        let sorted = names.clone();
        names.sort();
        assert_eq!(names, sorted);
        let strict = SuiteOptions { tolerance: Some(-1.0), ..opts };
        assert!(!all_passed(&run_suite(&form, &k, &obj, &strict).unwrap()));
    }
}
