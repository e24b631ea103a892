//! Confining functionals `K` and their proximal maps.
//!
//! Three kinds are provided:
//!
//! * `box_mean`: indicator of `V⁻ ≤ V ≤ V⁺` with m-weighted mean `≥ v₀`;
//! * `psi_budget`: indicator of `V ≥ 0` with m-weighted mean of `Ψ(V)`
//!   at most `c`, for a strictly decreasing convex `Ψ`;
//! * `tilted_box`: `⟨a, V⟩_m − (θ/2)|V|²_m` on a box, a `−θ`-convex
//!   functional that is not an indicator.
//!
//! `prox(τ, W)` returns the minimizer of `K(V) + |V − W|²_m / (2τ)`.

use nalgebra::DVector;
use rand::Rng;

use crate::error::{check_dim, Error, Result};
use crate::space::PotentialField;

/// Slack on the mean and budget inequalities in membership tests.
pub const FEASIBILITY_SLACK: f64 = 1e-12;

/// Positivity floor for `Ψ(s) = s^{−β}`, whose domain excludes zero.
pub const PSI_FLOOR: f64 = 1e-10;

const MAX_OUTER_ITERS: usize = 400;
const MAX_SCALAR_ITERS: usize = 200;

/// Decreasing convex scalar function used by the budget constraint.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PsiFunction {
    /// `e^{−βs}`
    Exp { beta: f64 },
    /// `s^{−β}`
    Power { beta: f64 },
}

impl PsiFunction {
    fn beta(self) -> f64 {
        match self {
            Self::Exp { beta } | Self::Power { beta } => beta,
        }
    }

    pub fn value(self, s: f64) -> f64 {
        match self {
            Self::Exp { beta } => (-beta * s).exp(),
            Self::Power { .. } if s <= 0.0 => f64::INFINITY,
            Self::Power { beta } => s.powf(-beta),
        }
    }

    pub fn derivative(self, s: f64) -> f64 {
        match self {
            Self::Exp { beta } => -beta * (-beta * s).exp(),
            Self::Power { beta } => -beta * s.powf(-beta - 1.0),
        }
    }

    fn second_derivative(self, s: f64) -> f64 {
        match self {
            Self::Exp { beta } => beta * beta * (-beta * s).exp(),
            Self::Power { beta } => beta * (beta + 1.0) * s.powf(-beta - 2.0),
        }
    }

    /// `Ψ(0)`.
    pub fn at_zero(self) -> f64 {
        self.value(0.0)
    }

    /// Smallest admissible component value.
    fn floor(self) -> f64 {
        match self {
            Self::Exp { .. } => 0.0,
            Self::Power { .. } => PSI_FLOOR,
        }
    }
}

/// Linear tilt `a` of [`ConstraintKind::TiltedBox`].
#[derive(Clone, Debug, PartialEq)]
pub enum Tilt {
    Uniform(f64),
    Field(Vec<f64>),
}

impl Tilt {
    fn at(&self, i: usize) -> f64 {
        match self {
            Self::Uniform(a) => *a,
            Self::Field(a) => a[i],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ConstraintKind {
    BoxMean { v_minus: f64, v_plus: f64, v0: f64 },
    PsiBudget { psi: PsiFunction, c: f64 },
    TiltedBox { lo: f64, hi: f64, a: Tilt, theta: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintFunctional {
    kind: ConstraintKind,
}

/// Result of a proximal step.
#[derive(Clone, Debug)]
pub struct ProxOutcome {
    pub value: PotentialField,
    /// Whether some component sits on [`PSI_FLOOR`].
    pub floor_active: bool,
    /// Multiplier of the mean or budget constraint (zero when slack).
    pub multiplier: f64,
}

impl ConstraintFunctional {
    pub fn box_mean(v_minus: f64, v_plus: f64, v0: f64) -> Result<Self> {
        if ![v_minus, v_plus, v0].iter().all(|x| x.is_finite()) {
            return Err(Error::Parameter("box_mean parameters must be finite".into()));
        }
        if !(v_minus < v_plus) {
            return Err(Error::Parameter(format!("box_mean needs V⁻ < V⁺, got {v_minus} ≥ {v_plus}")));
        }
        if v0 > v_plus {
            return Err(Error::Parameter(format!("box_mean domain is empty: mean floor {v0} exceeds V⁺ = {v_plus}")));
        }
        Ok(Self { kind: ConstraintKind::BoxMean { v_minus, v_plus, v0 } })
    }

    pub fn psi_budget(psi: PsiFunction, c: f64) -> Result<Self> {
        let beta = psi.beta();
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Parameter(format!("Ψ exponent must be positive, got {beta}")));
        }
        // both Ψ tend to zero at infinity
        if !(c > 0.0 && c < psi.at_zero()) {
            return Err(Error::Parameter(format!(
                "psi_budget needs 0 < c < Ψ(0) = {}, got {c}",
                psi.at_zero()
            )));
        }
        Ok(Self { kind: ConstraintKind::PsiBudget { psi, c } })
    }

    pub fn tilted_box(lo: f64, hi: f64, a: Tilt, theta: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Parameter(format!("tilted_box needs finite lo < hi, got [{lo}, {hi}]")));
        }
        if !(theta >= 0.0 && theta.is_finite()) {
            return Err(Error::Parameter(format!("θ must be finite and nonnegative, got {theta}")));
        }
        let finite = match &a {
            Tilt::Uniform(x) => x.is_finite(),
            Tilt::Field(v) => v.iter().all(|x| x.is_finite()),
        };
        if !finite {
            return Err(Error::Parameter("tilt must be finite".into()));
        }
        Ok(Self { kind: ConstraintKind::TiltedBox { lo, hi, a, theta } })
    }

    pub fn kind(&self) -> &ConstraintKind {
        &self.kind
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ConstraintKind::BoxMean { .. } => "box_mean",
            ConstraintKind::PsiBudget { .. } => "psi_budget",
            ConstraintKind::TiltedBox { .. } => "tilted_box",
        }
    }

    /// `θ`: `K + (θ/2)|·|²_m` is convex.
    pub fn theta(&self) -> f64 {
        match self.kind {
            ConstraintKind::TiltedBox { theta, .. } => theta,
            _ => 0.0,
        }
    }

    /// Lower bound enforced on every admissible potential.
    pub fn v_min(&self) -> f64 {
        match self.kind {
            ConstraintKind::BoxMean { v_minus, .. } => v_minus,
            ConstraintKind::PsiBudget { .. } => 0.0,
            ConstraintKind::TiltedBox { lo, .. } => lo,
        }
    }

    /// Sup-norm bound on the domain, when it is bounded.
    pub fn sup_bound(&self) -> Option<f64> {
        match self.kind {
            ConstraintKind::BoxMean { v_minus, v_plus, .. } => Some(v_minus.abs().max(v_plus.abs())),
            ConstraintKind::PsiBudget { .. } => None,
            ConstraintKind::TiltedBox { lo, hi, .. } => Some(lo.abs().max(hi.abs())),
        }
    }

    /// Checks that the constraint can act on fields of dimension `d`.
    pub fn check_dim(&self, d: usize) -> Result<()> {
        if let ConstraintKind::TiltedBox { a: Tilt::Field(a), .. } = &self.kind {
            check_dim(d, a.len())?;
        }
        Ok(())
    }

    /// A lower bound for `K` over the domain, for fields with measure
    /// weights `weights`.
    pub fn lower_bound(&self, weights: &[f64]) -> f64 {
        match &self.kind {
            ConstraintKind::TiltedBox { lo, hi, a, theta } => weights
                .iter()
                .enumerate()
                .map(|(i, m)| {
                    let f = |v: f64| a.at(i) * v - 0.5 * theta * v * v;
                    m * f(*lo).min(f(*hi))
                })
                .sum(),
            _ => 0.0,
        }
    }

    /// Domain membership with [`FEASIBILITY_SLACK`] on the integral
    /// constraints and exact box bounds.
    pub fn contains(&self, v: &PotentialField) -> bool {
        if self.check_dim(v.dim()).is_err() || v.as_slice().iter().any(|x| !x.is_finite()) {
            return false;
        }
        match &self.kind {
            ConstraintKind::BoxMean { v_minus, v_plus, v0 } => {
                in_box(v, *v_minus, *v_plus) && v.mean() >= v0 - FEASIBILITY_SLACK * v0.abs().max(1.0)
            }
            ConstraintKind::PsiBudget { psi, c } => {
                v.min() >= psi.floor().min(0.0) && psi_mean(*psi, v) <= c + FEASIBILITY_SLACK * c.max(1.0)
            }
            ConstraintKind::TiltedBox { lo, hi, .. } => in_box(v, *lo, *hi),
        }
    }

    /// `K(V)`; `+∞` off the domain.
    pub fn value(&self, v: &PotentialField) -> f64 {
        if !self.contains(v) {
            return f64::INFINITY;
        }
        match &self.kind {
            ConstraintKind::TiltedBox { a, theta, .. } => {
                let w = v.space().weights();
                v.as_slice()
                    .iter()
                    .enumerate()
                    .map(|(i, x)| w[i] * (a.at(i) * x - 0.5 * theta * x * x))
                    .sum()
            }
            _ => 0.0,
        }
    }

    /// Minimizer of `K(V) + |V − W|²_m / (2τ)`.
    pub fn prox(&self, tau: f64, w: &PotentialField) -> Result<PotentialField> {
        Ok(self.prox_detailed(tau, w)?.value)
    }

    pub fn prox_detailed(&self, tau: f64, w: &PotentialField) -> Result<ProxOutcome> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Parameter(format!("step size must be positive, got {tau}")));
        }
        self.check_dim(w.dim())?;
        if w.as_slice().iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric("prox input has non-finite entries".into()));
        }
        match &self.kind {
            ConstraintKind::BoxMean { v_minus, v_plus, v0 } => box_mean_projection(w, *v_minus, *v_plus, *v0),
            ConstraintKind::PsiBudget { psi, c } => psi_budget_projection(w, *psi, *c),
            ConstraintKind::TiltedBox { lo, hi, a, theta } => {
                if tau * theta >= 1.0 {
                    return Err(Error::Parameter(format!("tilted_box prox needs τθ < 1, got {}", tau * theta)));
                }
                let denom = 1.0 - tau * theta;
                let v = DVector::from_fn(w.dim(), |i, _| ((w.values()[i] - tau * a.at(i)) / denom).clamp(*lo, *hi));
                Ok(ProxOutcome { value: w.with_values(v), floor_active: false, multiplier: 0.0 })
            }
        }
    }

    /// A random domain point.
    pub fn sample_domain<R: Rng + ?Sized>(&self, template: &PotentialField, rng: &mut R) -> Result<PotentialField> {
        let (lo, hi) = match &self.kind {
            ConstraintKind::BoxMean { v_minus, v_plus, .. } => (*v_minus, *v_plus),
            ConstraintKind::TiltedBox { lo, hi, .. } => (*lo, *hi),
            ConstraintKind::PsiBudget { psi, c } => (0.0, psi_scale(*psi, *c)),
        };
        let raw = template.with_values(DVector::from_fn(template.dim(), |_, _| rng.random_range(lo..=hi)));
        self.project(&raw)
    }

    /// Probe set for [`subgradient_residual`]: half random domain points,
    /// half perturbations of `center` of size up to `radius`, projected back.
    pub fn probes<R: Rng + ?Sized>(
        &self,
        center: &PotentialField,
        radius: f64,
        count: usize,
        rng: &mut R,
    ) -> Result<Vec<PotentialField>> {
        let mut out = Vec::with_capacity(count);
        for n in 0..count {
            if n % 2 == 0 {
                out.push(self.sample_domain(center, rng)?);
            } else {
                let r = radius * rng.random_range(0.0..1.0f64).powi(2);
                let step = DVector::from_fn(center.dim(), |_, _| rng.random_range(-1.0..1.0));
                let p = center.with_values(center.values() + step * r);
                out.push(self.project(&p)?);
            }
        }
        Ok(out)
    }

    /// A constant field in the middle of the domain (projected onto it):
    /// the box midpoint, or the smallest power of two meeting the budget.
    pub fn central_point(&self, template: &PotentialField) -> Result<PotentialField> {
        let c = match &self.kind {
            ConstraintKind::BoxMean { v_minus, v_plus, v0 } => (0.5 * (v_minus + v_plus)).max(*v0),
            ConstraintKind::TiltedBox { lo, hi, .. } => 0.5 * (lo + hi),
            ConstraintKind::PsiBudget { psi, c } => {
                let mut s = 1.0;
                while psi.value(s) > *c {
                    s *= 2.0;
                }
                s
            }
        };
        self.project(&template.map(|_| c))
    }

    /// Metric projection onto the domain.
    fn project(&self, w: &PotentialField) -> Result<PotentialField> {
        match &self.kind {
            ConstraintKind::TiltedBox { lo, hi, .. } => Ok(w.map(|x| x.clamp(*lo, *hi))),
            _ => self.prox(1.0, w),
        }
    }
}

/// `max` over the probes of `K(V) + ⟨ξ, W − V⟩_m − (θ/2)|W − V|²_m − K(W)`.
/// A nonpositive result certifies `ξ` as a subgradient at `V` relative to
/// the probes. Probes outside the domain are ignored.
pub fn subgradient_residual(
    k: &ConstraintFunctional,
    v: &PotentialField,
    xi: &PotentialField,
    probes: &[PotentialField],
) -> Result<f64> {
    let kv = k.value(v);
    if !kv.is_finite() {
        return Err(Error::Domain("subgradient residual needs V in the domain".into()));
    }
    check_dim(v.dim(), xi.dim())?;
    let theta = k.theta();
    let mut worst = f64::NEG_INFINITY;
    for w in probes {
        let kw = k.value(w);
        if !kw.is_finite() {
            continue;
        }
        let diff = w.with_values(w.values() - v.values());
        let r = kv + xi.dot(&diff)? - 0.5 * theta * diff.norm().powi(2) - kw;
        worst = worst.max(r);
    }
    Ok(worst)
}

fn in_box(v: &PotentialField, lo: f64, hi: f64) -> bool {
    v.as_slice().iter().all(|x| (lo..=hi).contains(x))
}

fn psi_mean(psi: PsiFunction, v: &PotentialField) -> f64 {
    let w = v.space().weights();
    let total: f64 = v.as_slice().iter().zip(w).map(|(x, m)| m * psi.value(*x)).sum();
    total / v.space().total_mass()
}

/// A level `s` with `Ψ(s) ≤ c / 2`, used as the sampling range.
fn psi_scale(psi: PsiFunction, c: f64) -> f64 {
    let mut s = 1.0;
    while psi.value(s) > 0.5 * c {
        s *= 2.0;
    }
    2.0 * s
}

fn box_mean_projection(w: &PotentialField, lo: f64, hi: f64, v0: f64) -> Result<ProxOutcome> {
    let weights = w.space().weights();
    let mass = w.space().total_mass();
    let shifted = |mu: f64| -> DVector<f64> { w.values().map(|x| (x + mu).clamp(lo, hi)) };
    let mean = |v: &DVector<f64>| -> f64 { v.iter().zip(weights).map(|(x, m)| m * x).sum::<f64>() / mass };

    let clipped = shifted(0.0);
    if mean(&clipped) >= v0 {
        return Ok(ProxOutcome { value: w.with_values(clipped), floor_active: false, multiplier: 0.0 });
    }
    // mean(clip(W + μ)) is nondecreasing and reaches V⁺ ≥ v₀ at μ = V⁺ − min W
    let mut lo_mu = 0.0;
    let mut hi_mu = (hi - w.min()).max(0.0);
    if mean(&shifted(hi_mu)) < v0 {
        // only possible when v₀ = V⁺ up to rounding
        return Ok(ProxOutcome {
            value: w.with_values(DVector::from_element(w.dim(), hi)),
            floor_active: false,
            multiplier: hi_mu,
        });
    }
    for _ in 0..MAX_OUTER_ITERS {
        if hi_mu - lo_mu <= 1e-12 {
            break;
        }
        let mid = 0.5 * (lo_mu + hi_mu);
        if mid <= lo_mu || mid >= hi_mu {
            break;
        }
        if mean(&shifted(mid)) >= v0 {
            hi_mu = mid;
        } else {
            lo_mu = mid;
        }
    }
    // on the bracket the clipping pattern is (nearly) fixed; solve the
    // linear equation for μ on the pattern at the midpoint
    let mid = 0.5 * (lo_mu + hi_mu);
    let mut fixed = 0.0;
    let mut free_mass = 0.0;
    let mut free_sum = 0.0;
    for (x, m) in w.values().iter().zip(weights) {
        let y = x + mid;
        if y <= lo {
            fixed += m * lo;
        } else if y >= hi {
            fixed += m * hi;
        } else {
            free_mass += m;
            free_sum += m * x;
        }
    }
    let mut mu = hi_mu;
    if free_mass > 0.0 {
        let exact = (v0 * mass - fixed - free_sum) / free_mass;
        if exact >= 0.0 && mean(&shifted(exact)) >= v0 - FEASIBILITY_SLACK * v0.abs().max(1.0) {
            mu = exact;
        }
    }
    Ok(ProxOutcome { value: w.with_values(shifted(mu)), floor_active: false, multiplier: mu })
}

/// Root of `g(V) = V − W + μΨ'(V)` on `[floor, ∞)`; `g` is increasing.
fn psi_component(psi: PsiFunction, w: f64, mu: f64) -> Result<f64> {
    let floor = psi.floor();
    let a = w.max(floor);
    if mu == 0.0 {
        return Ok(a);
    }
    let g = |v: f64| v - w + mu * psi.derivative(v);
    if g(floor) >= 0.0 {
        return Ok(floor);
    }
    let (mut lo, mut hi) = (floor, a + mu * psi.derivative(a.max(floor)).abs());
    if g(hi) <= 0.0 {
        return Ok(hi);
    }
    let mut v = 0.5 * (lo + hi);
    for _ in 0..MAX_SCALAR_ITERS {
        let gv = g(v);
        if gv == 0.0 {
            return Ok(v);
        }
        if gv > 0.0 {
            hi = v;
        } else {
            lo = v;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(1e-300) {
            return Ok(hi);
        }
        let newton = v - gv / (1.0 + mu * psi.second_derivative(v));
        v = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
    }
    Err(Error::Numeric(format!(
        "budget prox component did not converge (W = {w}, μ = {mu}, bracket [{lo}, {hi}])"
    )))
}

fn psi_budget_projection(w: &PotentialField, psi: PsiFunction, c: f64) -> Result<ProxOutcome> {
    let solve = |mu: f64| -> Result<DVector<f64>> {
        let mut out = DVector::zeros(w.dim());
        for (o, x) in out.iter_mut().zip(w.values().iter()) {
            *o = psi_component(psi, *x, mu)?;
        }
        Ok(out)
    };
    let budget = |v: &DVector<f64>| -> f64 { psi_mean(psi, &w.with_values(v.clone())) };
    let floor_active = |v: &DVector<f64>| psi.floor() > 0.0 && v.iter().any(|x| *x <= psi.floor());

    let v = solve(0.0)?;
    if budget(&v) <= c {
        let fa = floor_active(&v);
        return Ok(ProxOutcome { value: w.with_values(v), floor_active: fa, multiplier: 0.0 });
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut v_hi = solve(hi)?;
    let mut grown = 0;
    while budget(&v_hi) > c {
        lo = hi;
        hi *= 2.0;
        v_hi = solve(hi)?;
        grown += 1;
        if grown > MAX_OUTER_ITERS {
            return Err(Error::Numeric(format!("budget multiplier bracket did not close (μ = {hi})")));
        }
    }
    for _ in 0..MAX_OUTER_ITERS {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-12 || mid <= lo || mid >= hi {
            break;
        }
        let v_mid = solve(mid)?;
        let b = budget(&v_mid);
        if b <= c {
            hi = mid;
            v_hi = v_mid;
            if c - b <= 1e-15 * c {
                break;
            }
        } else {
            lo = mid;
        }
    }
    let fa = floor_active(&v_hi);
    Ok(ProxOutcome { value: w.with_values(v_hi), floor_active: fa, multiplier: hi })
}
