//! Spectral functionals `H(V) = φ(λ₁(V), …, λ_J(V))`.
//!
//! A [`SpectralObjective`] bundles `φ` with its depth `J`. Besides value
//! and gradient, this module provides:
//!
//! * the structural ordering test on `∂φ` that makes `H` superdifferentiable
//!   at multiple eigenvalues ([`check_structural`]);
//! * the partial-sum reparametrization `ψ(s) = φ(s₁, s₂ − s₁, …)`;
//! * assembly of the supergradient `ξ = Σⱼ ∂ⱼφ · uⱼ²` from an eigenframe,
//!   both directly and through the partial sums `Σ_{h≤i} u_h²`.
//!
//! Under multiple eigenvalues the eigensolver's frame is taken as the
//! selection; [`xi_spread`] measures how much `ξ` moves under intra-cluster
//! rotations of that frame.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;
use rand::Rng;

use crate::error::{Error, Result};
use crate::forms::BilinearForm;
use crate::sampling::random_orthogonal;
use crate::space::{PotentialField, StateVector};
use crate::spectrum::{eigensolve, interior_gap_ok, ClusterTolerance, Spectrum};

/// Tolerance of the structural inequalities.
pub const STRUCTURAL_TOL: f64 = 1e-10;

/// User-supplied `φ`. Implementations must be `C¹` on ordered tuples.
pub trait SpectralFunction: Send + Sync + fmt::Debug {
    fn name(&self) -> String;
    /// Smallest `J` the function needs.
    fn min_depth(&self) -> usize;
    fn value(&self, lambdas: &[f64]) -> Result<f64>;
    fn gradient(&self, lambdas: &[f64]) -> Result<Vec<f64>>;
}

/// Shape of the gap penalty `h`, with `h(0) = h'(0) = 0` and `h' ≥ 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GapShape {
    /// `h(r) = r²`
    Quadratic,
    /// `h(r) = |r|^p` with `p > 1`
    Power(f64),
}

impl GapShape {
    fn value(self, r: f64) -> f64 {
        match self {
            Self::Quadratic => r * r,
            Self::Power(p) => r.abs().powf(p),
        }
    }

    fn derivative(self, r: f64) -> f64 {
        match self {
            Self::Quadratic => 2.0 * r,
            Self::Power(p) => p * r.abs().powf(p - 1.0) * r.signum(),
        }
    }
}

#[derive(Clone, Debug)]
pub enum ObjectiveKind {
    /// `λ₁ + … + λ_k`
    SumFirstK { k: usize },
    /// `Σ_{i≠j; i,j≤k} λᵢ λⱼ` (ordered pairs)
    ElementarySymmetric2 { k: usize },
    /// `2λ₁ + √(λ₁λ₂λ₃)`; needs positive eigenvalues
    RootProduct,
    /// `(λ₁ + λ₂ + λ₃)(λ₁² + λ₂²)`
    SumTimesSquares,
    /// `h(λ_j − λ_{j−1})`, `j ≥ 2` (1-based)
    GapPenalty { j: usize, shape: GapShape },
    /// `φ ≡ value`
    Constant { value: f64 },
    Custom(Arc<dyn SpectralFunction>),
}

impl ObjectiveKind {
    fn min_depth(&self) -> usize {
        match self {
            Self::SumFirstK { k } | Self::ElementarySymmetric2 { k } => *k,
            Self::RootProduct | Self::SumTimesSquares => 3,
            Self::GapPenalty { j, .. } => *j,
            Self::Constant { .. } => 1,
            Self::Custom(f) => f.min_depth(),
        }
    }
}

/// `φ` on the first `depth` eigenvalues.
#[derive(Clone, Debug)]
pub struct SpectralObjective {
    kind: ObjectiveKind,
    depth: usize,
}

impl SpectralObjective {
    /// Objective at its natural depth.
    pub fn new(kind: ObjectiveKind) -> Result<Self> {
        let depth = kind.min_depth();
        Self::with_depth(kind, depth)
    }

    /// Objective viewed as a function of the first `depth` eigenvalues;
    /// the trailing partials are zero.
    pub fn with_depth(kind: ObjectiveKind, depth: usize) -> Result<Self> {
        match &kind {
            ObjectiveKind::SumFirstK { k } | ObjectiveKind::ElementarySymmetric2 { k } if *k == 0 => {
                return Err(Error::Parameter("k must be at least 1".into()));
            }
            ObjectiveKind::GapPenalty { j, shape } => {
                if *j < 2 {
                    return Err(Error::Parameter(format!("gap penalty index must be ≥ 2, got {j}")));
                }
                if let GapShape::Power(p) = shape {
                    if !(*p > 1.0) {
                        return Err(Error::Parameter(format!("gap penalty exponent must exceed 1, got {p}")));
                    }
                }
            }
            _ => {}
        }
        let min = kind.min_depth();
        if depth < min.max(1) {
            return Err(Error::Parameter(format!("objective needs depth ≥ {min}, got {depth}")));
        }
        Ok(Self { kind, depth })
    }

    pub fn sum_first_k(k: usize) -> Result<Self> {
        Self::new(ObjectiveKind::SumFirstK { k })
    }

    pub fn kind(&self) -> &ObjectiveKind {
        &self.kind
    }

    /// `J`.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn name(&self) -> String {
        match &self.kind {
            ObjectiveKind::SumFirstK { k } => format!("sum_first_k({k})"),
            ObjectiveKind::ElementarySymmetric2 { k } => format!("elementary_symmetric_2({k})"),
            ObjectiveKind::RootProduct => "root_product".into(),
            ObjectiveKind::SumTimesSquares => "sum_times_squares".into(),
            ObjectiveKind::GapPenalty { j, .. } => format!("gap_penalty({j})"),
            ObjectiveKind::Constant { value } => format!("constant({value})"),
            ObjectiveKind::Custom(f) => f.name(),
        }
    }

    /// Whether `φ` is symmetric, increasing and Schur-concave on the first
    /// `k` eigenvalues, so that it is minimized over frames at the
    /// eigenframe.
    pub fn is_schur_concave_increasing(&self) -> bool {
        matches!(self.kind, ObjectiveKind::SumFirstK { .. } | ObjectiveKind::Constant { .. })
    }

    /// A lower bound for `φ` over ordered tuples with entries `≥ lambda_min`,
    /// when one is known in closed form.
    pub fn lower_bound(&self, lambda_min: f64) -> Option<f64> {
        let floor = vec![lambda_min; self.depth];
        match &self.kind {
            // increasing in every entry
            ObjectiveKind::SumFirstK { .. } => Some(self.eval_raw(&floor).ok()?.0),
            ObjectiveKind::ElementarySymmetric2 { .. } | ObjectiveKind::SumTimesSquares if lambda_min >= 0.0 => {
                Some(self.eval_raw(&floor).ok()?.0)
            }
            ObjectiveKind::RootProduct if lambda_min > 0.0 => Some(self.eval_raw(&floor).ok()?.0),
            ObjectiveKind::GapPenalty { .. } => Some(0.0),
            ObjectiveKind::Constant { value } => Some(*value),
            _ => None,
        }
    }

    /// Evaluates `φ` and `∇φ` without the ordering check. Used for the
    /// partial-sum reparametrization, whose arguments need not be sorted.
    fn eval_raw(&self, l: &[f64]) -> Result<(f64, Vec<f64>)> {
        let mut grad = vec![0.0; self.depth];
        let value = match &self.kind {
            ObjectiveKind::SumFirstK { k } => {
                grad[..*k].fill(1.0);
                l[..*k].iter().sum()
            }
            ObjectiveKind::ElementarySymmetric2 { k } => {
                let s: f64 = l[..*k].iter().sum();
                let sq: f64 = l[..*k].iter().map(|x| x * x).sum();
                for i in 0..*k {
                    grad[i] = 2.0 * (s - l[i]);
                }
                s * s - sq
            }
            ObjectiveKind::RootProduct => {
                let p = l[0] * l[1] * l[2];
                if !(p > 0.0) {
                    return Err(Error::Domain(format!("root_product needs λ₁λ₂λ₃ > 0, got {p}")));
                }
                let r = p.sqrt();
                grad[0] = 2.0 + l[1] * l[2] / (2.0 * r);
                grad[1] = l[0] * l[2] / (2.0 * r);
                grad[2] = l[0] * l[1] / (2.0 * r);
                2.0 * l[0] + r
            }
            ObjectiveKind::SumTimesSquares => {
                let s = l[0] + l[1] + l[2];
                let q = l[0] * l[0] + l[1] * l[1];
                grad[0] = q + 2.0 * s * l[0];
                grad[1] = q + 2.0 * s * l[1];
                grad[2] = q;
                s * q
            }
            ObjectiveKind::GapPenalty { j, shape } => {
                let r = l[j - 1] - l[j - 2];
                let dh = shape.derivative(r);
                grad[j - 1] = dh;
                grad[j - 2] = -dh;
                shape.value(r)
            }
            ObjectiveKind::Constant { value } => *value,
            ObjectiveKind::Custom(f) => {
                let g = f.gradient(l)?;
                if g.len() < f.min_depth() {
                    return Err(Error::Numeric(format!("custom gradient has {} entries", g.len())));
                }
                for (dst, src) in grad.iter_mut().zip(g) {
                    *dst = src;
                }
                f.value(l)?
            }
        };
        Ok((value, grad))
    }
}

/// `φ(λ)` and `∇φ(λ)` at an ordered tuple of length `J`.
pub fn phi_eval_grad(obj: &SpectralObjective, lambdas: &[f64]) -> Result<(f64, Vec<f64>)> {
    if lambdas.len() != obj.depth {
        return Err(Error::Dimension { expected: obj.depth, got: lambdas.len() });
    }
    if lambdas.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("eigenvalue tuple has non-finite entries".into()));
    }
    if let Some(w) = lambdas.windows(2).find(|w| w[1] < w[0]) {
        return Err(Error::Domain(format!("eigenvalue tuple is not ascending ({} > {})", w[0], w[1])));
    }
    obj.eval_raw(lambdas)
}

/// `ψ(s) = φ(s₁, s₂ − s₁, …, s_J − s_{J−1})`.
pub fn psi_value(obj: &SpectralObjective, partial_sums: &[f64]) -> Result<f64> {
    Ok(obj.eval_raw(&differences(obj, partial_sums)?)?.0)
}

/// `∂ⱼψ = ∂ⱼφ − ∂_{j+1}φ` for `j < J` and `∂_Jψ = ∂_Jφ`.
pub fn psi_gradient(obj: &SpectralObjective, partial_sums: &[f64]) -> Result<Vec<f64>> {
    let (_, p) = obj.eval_raw(&differences(obj, partial_sums)?)?;
    Ok(gamma_from_p(&p))
}

fn differences(obj: &SpectralObjective, s: &[f64]) -> Result<Vec<f64>> {
    if s.len() != obj.depth {
        return Err(Error::Dimension { expected: obj.depth, got: s.len() });
    }
    Ok((0..s.len()).map(|i| if i == 0 { s[0] } else { s[i] - s[i - 1] }).collect())
}

fn gamma_from_p(p: &[f64]) -> Vec<f64> {
    (0..p.len()).map(|i| p[i] - p.get(i + 1).copied().unwrap_or(0.0)).collect()
}

/// Outcome of the structural test at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct StructuralSample {
    pub point: Vec<f64>,
    /// `∂_Jφ ≥ 0`.
    pub last_partial_nonnegative: bool,
    /// `∂_{k−1}φ ≥ ∂_kφ` wherever `λ_{k−1} = λ_k`.
    pub ordered_at_ties: bool,
}

impl StructuralSample {
    pub fn passed(&self) -> bool {
        self.last_partial_nonnegative && self.ordered_at_ties
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StructuralReport {
    pub samples: Vec<StructuralSample>,
}

impl StructuralReport {
    pub fn passed(&self) -> bool {
        self.samples.iter().all(StructuralSample::passed)
    }
}

/// Checks the ordering condition on `∂φ` at each sample point. Ties are
/// detected with the default [`ClusterTolerance`].
pub fn check_structural(obj: &SpectralObjective, samples: &[Vec<f64>]) -> Result<StructuralReport> {
    let ties = ClusterTolerance::default();
    let mut out = Vec::with_capacity(samples.len());
    for point in samples {
        let (_, g) = phi_eval_grad(obj, point)?;
        let j = g.len();
        let last_partial_nonnegative = g[j - 1] >= -STRUCTURAL_TOL;
        let ordered_at_ties = (1..j)
            .filter(|&k| ties.joins(point[k - 1], point[k]))
            .all(|k| g[k - 1] >= g[k] - STRUCTURAL_TOL);
        out.push(StructuralSample { point: point.clone(), last_partial_nonnegative, ordered_at_ties });
    }
    Ok(StructuralReport { samples: out })
}

/// Random ordered `J`-tuples in `[lo, hi]`, every other one carrying a
/// forced tie `λ_{k−1} = λ_k` (cycling through `k`).
pub fn structural_samples<R: Rng + ?Sized>(depth: usize, lo: f64, hi: f64, count: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..count)
        .map(|n| {
            let mut p: Vec<f64> = (0..depth).map(|_| rng.random_range(lo..hi)).collect();
            p.sort_by(f64::total_cmp);
            if depth >= 2 && n % 2 == 1 {
                let k = 1 + (n / 2) % (depth - 1);
                p[k] = p[k - 1];
            }
            p
        })
        .collect()
}

/// Largest value of `−A(1 + max(λ_J, 0)) − φ(λ)` over the samples; the
/// growth bound from below holds on them iff the result is `≤ 0`.
pub fn lower_bound_violation(obj: &SpectralObjective, a: f64, samples: &[Vec<f64>]) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for p in samples {
        let (v, _) = phi_eval_grad(obj, p)?;
        worst = worst.max(-a * (1.0 + p[p.len() - 1].max(0.0)) - v);
    }
    Ok(worst)
}

/// `H(V) = φ(λ^J(V))`.
pub fn spectral_value(form: &BilinearForm, v: &PotentialField, obj: &SpectralObjective) -> Result<f64> {
    let spec = eigensolve(form, v, obj.depth)?;
    Ok(phi_eval_grad(obj, &spec.lambdas()[..obj.depth])?.0)
}

/// `H(V) = ψ(σ₁(V), …, σ_J(V))`, the same value reached through partial sums.
pub fn spectral_value_via_partial_sums(
    form: &BilinearForm,
    v: &PotentialField,
    obj: &SpectralObjective,
) -> Result<f64> {
    let spec = eigensolve(form, v, obj.depth)?;
    let sums: Vec<f64> = spec.lambdas()[..obj.depth]
        .iter()
        .scan(0.0, |acc, l| {
            *acc += l;
            Some(*acc)
        })
        .collect();
    psi_value(obj, &sums)
}

/// One element of the supergradient of `H` at the spectrum's potential.
#[derive(Clone, Debug)]
pub struct SubgradientSelection {
    /// `ξ(x) = Σⱼ pⱼ uⱼ(x)²`.
    pub xi: PotentialField,
    /// `p = ∇φ(λ^J)`.
    pub weights: Vec<f64>,
    /// The `J` eigenvectors used.
    pub frame: Vec<StateVector>,
    /// Whether `λ₁ < … < λ_{J+1}` held; `None` when the spectrum was too
    /// short to tell. When false, `ξ` is one frame-dependent selection.
    pub gap_ok: Option<bool>,
}

impl SubgradientSelection {
    /// `Σⱼ pⱼ uⱼ²` recomputed from the stored pieces.
    pub fn recompute(&self) -> DVector<f64> {
        weighted_square_sum(&self.weights, &self.frame, self.xi.dim())
    }
}

fn weighted_square_sum(p: &[f64], frame: &[StateVector], d: usize) -> DVector<f64> {
    let mut xi = DVector::zeros(d);
    for (pj, u) in p.iter().zip(frame) {
        xi += u.values().map(|x| x * x) * *pj;
    }
    xi
}

fn check_spectrum_depth(spec: &Spectrum, depth: usize) -> Result<()> {
    if spec.len() < depth {
        return Err(Error::Parameter(format!(
            "objective depth {depth} exceeds the {} eigenpairs available",
            spec.len()
        )));
    }
    Ok(())
}

/// `ξ = Σⱼ ∂ⱼφ(λ^J) uⱼ²` built on the solver frame.
pub fn subgradient_xi(spec: &Spectrum, obj: &SpectralObjective) -> Result<SubgradientSelection> {
    let j = obj.depth;
    check_spectrum_depth(spec, j)?;
    let (_, p) = phi_eval_grad(obj, &spec.lambdas()[..j])?;
    let frame = spec.frame()[..j].to_vec();
    let xi = spec.potential().with_values(weighted_square_sum(&p, &frame, spec.potential().dim()));
    let gap_ok = if spec.len() > j { Some(interior_gap_ok(spec, j)?) } else { None };
    Ok(SubgradientSelection { xi, weights: p, frame, gap_ok })
}

/// `Σᵢ γᵢ Σ_{h≤i} u_h²` with `γ = ∇ψ(σ)`; telescopes to [`subgradient_xi`].
pub fn subgradient_via_partial_sums(spec: &Spectrum, obj: &SpectralObjective) -> Result<DVector<f64>> {
    let j = obj.depth;
    check_spectrum_depth(spec, j)?;
    let sums: Vec<f64> = spec.lambdas()[..j]
        .iter()
        .scan(0.0, |acc, l| {
            *acc += l;
            Some(*acc)
        })
        .collect();
    let gamma = psi_gradient(obj, &sums)?;
    let d = spec.potential().dim();
    let mut out = DVector::zeros(d);
    for (i, g) in gamma.iter().enumerate() {
        out += sigma_frame_sum(spec, i + 1)?.values() * *g;
    }
    Ok(out)
}

/// `Σ_{h≤k} u_h²`, the frame element of the supergradient of `σₖ`.
pub fn sigma_frame_sum(spec: &Spectrum, k: usize) -> Result<PotentialField> {
    if k == 0 || k > spec.len() {
        return Err(Error::Parameter(format!("frame sum needs 1 ≤ k ≤ {}, got {k}", spec.len())));
    }
    let ones = vec![1.0; k];
    Ok(spec.potential().with_values(weighted_square_sum(&ones, &spec.frame()[..k], spec.potential().dim())))
}

/// `σₖ(W) − σₖ(V) − ⟨Σ_{h≤k} u_h(V)², W − V⟩_m`; nonpositive by concavity.
pub fn linear_bound_check(form: &BilinearForm, v: &PotentialField, w: &PotentialField, k: usize) -> Result<f64> {
    let at_v = eigensolve(form, v, k)?;
    let at_w = eigensolve(form, w, k)?;
    let sv: f64 = at_v.lambdas().iter().sum();
    let sw: f64 = at_w.lambdas().iter().sum();
    let xi = sigma_frame_sum(&at_v, k)?;
    let diff = w.with_values(w.values() - v.values());
    Ok(sw - sv - xi.dot(&diff)?)
}

/// Rotates every complete cluster of the spectrum by a random orthogonal
/// matrix and returns the rotated frame.
pub fn rotate_within_clusters<R: Rng + ?Sized>(spec: &Spectrum, rng: &mut R) -> Vec<StateVector> {
    let mut frame = spec.frame().to_vec();
    // the last cluster may continue past the computed eigenpairs unless the
    // whole space was resolved
    let complete = |c: &std::ops::Range<usize>| c.end < spec.len() || spec.len() == spec.potential().dim();
    for c in spec.clusters().iter().filter(|c| c.len() > 1 && complete(c)) {
        let q = random_orthogonal(c.len(), rng);
        for (a, idx) in c.clone().enumerate() {
            let mut mixed = DVector::zeros(spec.potential().dim());
            for (b, src) in c.clone().enumerate() {
                mixed += spec.frame()[src].values() * q[(b, a)];
            }
            frame[idx] = StateVector::from_vector(spec.potential().space(), mixed).expect("same space");
        }
    }
    frame
}

/// Largest pointwise change of `ξ` over `rotations` random intra-cluster
/// rotations of the eigenframe. Zero (up to rounding) whenever no cluster
/// straddles the cut between `λ_J` and `λ_{J+1}`.
pub fn xi_spread<R: Rng + ?Sized>(
    spec: &Spectrum,
    obj: &SpectralObjective,
    rotations: usize,
    rng: &mut R,
) -> Result<f64> {
    let base = subgradient_xi(spec, obj)?;
    let d = spec.potential().dim();
    let mut worst = 0.0f64;
    for _ in 0..rotations {
        let frame = rotate_within_clusters(spec, rng);
        let xi = weighted_square_sum(&base.weights, &frame[..obj.depth], d);
        worst = worst.max((xi - base.xi.values()).amax());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{build_operator, OperatorSpec};
    use crate::space::MeasureSpace;
    use crate::spectrum::eigensolve;
    use nalgebra::DMatrix;
    use rand::SeedableRng;

    fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
        rand_chacha::ChaCha8Rng::seed_from_u64(seed)
    }

    fn diag(values: &[f64]) -> (BilinearForm, PotentialField) {
        let n = values.len();
        let s = MeasureSpace::counting(n);
        let form = build_operator(&OperatorSpec::Dense { matrix: DMatrix::zeros(n, n) }, &s).unwrap();
        (form, PotentialField::new(&s, values.to_vec()).unwrap())
    }

    fn all_builtins() -> Vec<SpectralObjective> {
        vec![
            SpectralObjective::sum_first_k(3).unwrap(),
            SpectralObjective::new(ObjectiveKind::ElementarySymmetric2 { k: 3 }).unwrap(),
            SpectralObjective::new(ObjectiveKind::RootProduct).unwrap(),
            SpectralObjective::new(ObjectiveKind::SumTimesSquares).unwrap(),
            SpectralObjective::with_depth(ObjectiveKind::GapPenalty { j: 2, shape: GapShape::Quadratic }, 3).unwrap(),
            SpectralObjective::with_depth(ObjectiveKind::GapPenalty { j: 3, shape: GapShape::Power(1.5) }, 4).unwrap(),
        ]
    }

    #[test]
    fn phi_examples() {
        let (v, g) = phi_eval_grad(&SpectralObjective::sum_first_k(2).unwrap(), &[1.0, 3.0]).unwrap();
        assert_eq!((v, g), (4.0, vec![1.0, 1.0]));

        let obj = SpectralObjective::new(ObjectiveKind::SumTimesSquares).unwrap();
        let (v, g) = phi_eval_grad(&obj, &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!((v, g), (6.0, vec![8.0, 8.0, 2.0]));

        let obj = SpectralObjective::new(ObjectiveKind::GapPenalty { j: 2, shape: GapShape::Quadratic }).unwrap();
        assert_eq!(phi_eval_grad(&obj, &[1.0, 1.0]).unwrap(), (0.0, vec![0.0, 0.0]));
    }

    #[test]
    fn phi_domain_errors() {
        let obj = SpectralObjective::sum_first_k(2).unwrap();
        assert!(matches!(phi_eval_grad(&obj, &[2.0, 1.0]), Err(Error::Domain(_))));
        assert!(matches!(phi_eval_grad(&obj, &[1.0]), Err(Error::Dimension { .. })));
        let root = SpectralObjective::new(ObjectiveKind::RootProduct).unwrap();
        assert!(matches!(phi_eval_grad(&root, &[-1.0, 1.0, 2.0]), Err(Error::Domain(_))));
        assert!(matches!(phi_eval_grad(&root, &[0.0, 1.0, 2.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn depth_validation() {
        assert!(SpectralObjective::with_depth(ObjectiveKind::RootProduct, 2).is_err());
        assert!(SpectralObjective::new(ObjectiveKind::SumFirstK { k: 0 }).is_err());
        assert!(SpectralObjective::new(ObjectiveKind::GapPenalty { j: 1, shape: GapShape::Quadratic }).is_err());
        assert!(SpectralObjective::new(ObjectiveKind::GapPenalty { j: 2, shape: GapShape::Power(1.0) }).is_err());
        let padded = SpectralObjective::with_depth(ObjectiveKind::SumFirstK { k: 1 }, 3).unwrap();
        assert_eq!(phi_eval_grad(&padded, &[1.0, 2.0, 3.0]).unwrap().1, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut r = rng(9);
        for obj in all_builtins() {
            for _ in 0..50 {
                let mut p: Vec<f64> = (0..obj.depth()).map(|_| r.random_range(0.5..5.0)).collect();
                p.sort_by(f64::total_cmp);
                let (_, g) = phi_eval_grad(&obj, &p).unwrap();
                let h = 1e-6;
                for i in 0..p.len() {
                    let mut a = p.clone();
                    let mut b = p.clone();
                    a[i] += h;
                    b[i] -= h;
                    let fd = (obj.eval_raw(&a).unwrap().0 - obj.eval_raw(&b).unwrap().0) / (2.0 * h);
                    let scale = g.iter().fold(1.0f64, |m, x| m.max(x.abs()));
                    assert!((fd - g[i]).abs() <= 1e-6 * scale, "{}: ∂{i} fd {fd} vs {}", obj.name(), g[i]);
                }
            }
        }
    }

    #[test]
    fn structural_examples() {
        let mut r = rng(2);
        let samples = structural_samples(3, 0.5, 4.0, 40, &mut r);
        for obj in all_builtins().into_iter().filter(|o| o.depth() == 3) {
            assert!(check_structural(&obj, &samples).unwrap().passed(), "{}", obj.name());
        }
        let gp = SpectralObjective::with_depth(ObjectiveKind::GapPenalty { j: 3, shape: GapShape::Power(1.5) }, 4)
            .unwrap();
        assert!(check_structural(&gp, &structural_samples(4, 0.5, 4.0, 40, &mut r)).unwrap().passed());

        #[derive(Debug)]
        struct Spread;
        impl SpectralFunction for Spread {
            fn name(&self) -> String {
                "spread".into()
            }
            fn min_depth(&self) -> usize {
                2
            }
            fn value(&self, l: &[f64]) -> Result<f64> {
                Ok(l[1] - l[0])
            }
            fn gradient(&self, _: &[f64]) -> Result<Vec<f64>> {
                Ok(vec![-1.0, 1.0])
            }
        }
        let spread = SpectralObjective::new(ObjectiveKind::Custom(Arc::new(Spread))).unwrap();
        let report = check_structural(&spread, &[vec![1.0, 1.0], vec![1.0, 2.0]]).unwrap();
        assert!(!report.samples[0].ordered_at_ties);
        assert!(report.samples[1].passed());
        assert!(!report.passed());
    }

    #[test]
    fn lower_bound_on_structural_objectives() {
        // with the structural condition, φ is bounded below by its value at
        // (λ_min, …, λ_min); A = that value's negative part.
        let mut r = rng(4);
        let samples = structural_samples(3, -2.0, 4.0, 100, &mut r);
        let obj = SpectralObjective::sum_first_k(3).unwrap();
        let a = (-phi_eval_grad(&obj, &[-2.0; 3]).unwrap().0).max(0.0);
        assert!(lower_bound_violation(&obj, a, &samples).unwrap() <= 0.0);
    }

    #[test]
    fn closed_form_lower_bounds() {
        let mut r = rng(14);
        for obj in all_builtins() {
            let bound = obj.lower_bound(0.5).unwrap();
            for p in structural_samples(obj.depth(), 0.5, 6.0, 100, &mut r) {
                assert!(phi_eval_grad(&obj, &p).unwrap().0 >= bound - 1e-12, "{}", obj.name());
            }
        }
        let e2 = SpectralObjective::new(ObjectiveKind::ElementarySymmetric2 { k: 3 }).unwrap();
        assert_eq!(e2.lower_bound(-1.0), None);
    }

    #[test]
    fn psi_partials_identity() {
        let mut r = rng(6);
        for obj in all_builtins() {
            for _ in 0..20 {
                let mut l: Vec<f64> = (0..obj.depth()).map(|_| r.random_range(0.5..5.0)).collect();
                l.sort_by(f64::total_cmp);
                let s: Vec<f64> = l.iter().scan(0.0, |a, x| { *a += x; Some(*a) }).collect();
                let gamma = psi_gradient(&obj, &s).unwrap();
                // chain rule: ∇ψ = Dᵀ ∇φ with D the differencing matrix
                let (_, p) = phi_eval_grad(&obj, &l).unwrap();
                let j = p.len();
                let dmat = DMatrix::from_fn(j, j, |a, b| if a == b { 1.0 } else if a == b + 1 { -1.0 } else { 0.0 });
                let chain = dmat.transpose() * DVector::from_vec(p);
                for i in 0..j {
                    assert!((gamma[i] - chain[i]).abs() <= 1e-10);
                }
                assert!((psi_value(&obj, &s).unwrap() - phi_eval_grad(&obj, &l).unwrap().0).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn xi_examples() {
        let (form, v) = diag(&[1.0, 2.0]);
        let spec = eigensolve(&form, &v, 2).unwrap();
        let xi1 = subgradient_xi(&spec, &SpectralObjective::sum_first_k(1).unwrap()).unwrap();
        assert_eq!(xi1.xi.as_slice(), &[1.0, 0.0]);
        assert_eq!(xi1.gap_ok, Some(true));
        let xi2 = subgradient_xi(&spec, &SpectralObjective::sum_first_k(2).unwrap()).unwrap();
        assert_eq!(xi2.xi.as_slice(), &[1.0, 1.0]);
        assert_eq!(xi2.gap_ok, None);
        assert!((xi2.recompute() - xi2.xi.values()).amax() <= 1e-12);
    }

    #[test]
    fn degenerate_xi_is_frame_independent() {
        let (form, v) = diag(&[1.0, 1.0, 2.0]);
        let spec = eigensolve(&form, &v, 3).unwrap();
        let obj = SpectralObjective::sum_first_k(2).unwrap();
        let sel = subgradient_xi(&spec, &obj).unwrap();
        assert!((sel.xi.values() - DVector::from_vec(vec![1.0, 1.0, 0.0])).amax() < 1e-12);
        assert_eq!(sel.gap_ok, Some(false));
        assert!(xi_spread(&spec, &obj, 50, &mut rng(1)).unwrap() < 1e-12);

        // λ₁ alone on the doubled eigenvalue does depend on the frame
        let first = SpectralObjective::sum_first_k(1).unwrap();
        assert!(xi_spread(&spec, &first, 50, &mut rng(1)).unwrap() > 1e-3);
    }

    #[test]
    fn frame_sums() {
        let s = MeasureSpace::new(vec![0.5, 1.0, 2.0, 0.25]).unwrap();
        let form = build_operator(&OperatorSpec::PathDirichlet { n: 4, h: 1.0 }, &s).unwrap();
        let v = PotentialField::new(&s, vec![0.3, -0.2, 1.0, 0.0]).unwrap();
        let spec = eigensolve(&form, &v, 4).unwrap();
        let full = sigma_frame_sum(&spec, 4).unwrap();
        for (x, m) in full.as_slice().iter().zip(s.weights()) {
            assert!((x - 1.0 / m).abs() < 1e-10);
        }
        let first = sigma_frame_sum(&spec, 1).unwrap();
        let u = spec.frame()[0].values();
        assert!((first.values() - u.component_mul(u)).amax() == 0.0);
        assert!(sigma_frame_sum(&spec, 5).is_err());
    }

    #[test]
    fn partial_sum_routes_agree() {
        let mut r = rng(8);
        let s = MeasureSpace::counting(10);
        let form = build_operator(&OperatorSpec::PathDirichlet { n: 10, h: 1.0 }, &s).unwrap();
        for obj in all_builtins() {
            let v = PotentialField::new(&s, (0..10).map(|_| r.random_range(0.5..3.0)).collect()).unwrap();
            let spec = eigensolve(&form, &v, obj.depth() + 1).unwrap();
            let direct = subgradient_xi(&spec, &obj).unwrap();
            let telescoped = subgradient_via_partial_sums(&spec, &obj).unwrap();
            assert!((direct.xi.values() - telescoped).amax() < 1e-12, "{}", obj.name());
            let h1 = spectral_value(&form, &v, &obj).unwrap();
            let h2 = spectral_value_via_partial_sums(&form, &v, &obj).unwrap();
            assert!((h1 - h2).abs() <= 1e-10 * h1.abs().max(1.0));
        }
    }

    #[test]
    fn linear_bound_examples() {
        let mut r = rng(12);
        let s = MeasureSpace::new((0..8).map(|_| r.random_range(0.5..2.0)).collect()).unwrap();
        let form = build_operator(&OperatorSpec::PathDirichlet { n: 8, h: 1.0 }, &s).unwrap();
        let v = PotentialField::new(&s, (0..8).map(|_| r.random_range(-1.0..1.0)).collect()).unwrap();
        assert!(linear_bound_check(&form, &v, &v, 3).unwrap().abs() < 1e-12);
        assert!(linear_bound_check(&form, &v, &v.shifted(1.7), 3).unwrap().abs() < 1e-12);
        for eps in [1e-1, 1e-2, 1e-3] {
            let dir: Vec<f64> = (0..8).map(|_| r.random_range(-1.0..1.0)).collect();
            let w = v.with_values(v.values() + DVector::from_vec(dir) * eps);
            let res = linear_bound_check(&form, &v, &w, 2).unwrap();
            assert!(res <= 1e-12);
            assert!(res.abs() <= 10.0 * eps * eps, "second order: {res} at {eps}");
        }
    }
}
