//! Minimizing movement scheme for `F = H + K`.
//!
//! Each step minimizes `Φ(τ, V_prev; W) = F(W) + |W − V_prev|²_m / (2τ)`
//! with a majorize-minimize loop: at the current iterate `W` the spectral
//! part is replaced by its linearization `⟨ξ(W), ·⟩_m`, and the resulting
//! strongly convex problem is solved by the proximal map of `K`:
//!
//! ```text
//! T(W) = prox_K(τ, V_prev − τ ξ(W)).
//! ```
//!
//! Iterates are accepted only if `Φ` does not increase, so every step
//! satisfies the discrete energy inequality against `W = V_prev`. Global
//! minimality of the nonconvex step problem is not certified; the
//! fixed-point residual `|T(V_n) − V_n|_m` is reported instead.

use std::fmt;
use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::constraints::{subgradient_residual, ConstraintFunctional};
use crate::error::{check_dim, Error, Result};
use crate::forms::BilinearForm;
use crate::objectives::{phi_eval_grad, subgradient_xi, SpectralObjective, SubgradientSelection};
use crate::space::PotentialField;
use crate::spectrum::{eigensolve_with, ClusterTolerance, Spectrum};

/// Allowed increase of `Φ` when accepting an inner iterate.
pub const ACCEPT_SLACK: f64 = 1e-12;

const MIN_DAMPING: f64 = 1e-10;
const MAX_RESTARTS: usize = 3;

/// The data of a flow: operator, confining functional and objective.
#[derive(Clone, Debug)]
pub struct FlowProblem {
    pub form: BilinearForm,
    pub constraint: ConstraintFunctional,
    pub objective: SpectralObjective,
    pub cluster_tol: ClusterTolerance,
}

/// `F`, its parts and the spectral data at one potential.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub h: f64,
    pub k: f64,
    pub f: f64,
    pub spectrum: Spectrum,
    pub selection: SubgradientSelection,
}

impl FlowProblem {
    pub fn new(form: BilinearForm, constraint: ConstraintFunctional, objective: SpectralObjective) -> Result<Self> {
        let d = form.dim();
        constraint.check_dim(d)?;
        if objective.depth() > d {
            return Err(Error::Parameter(format!("objective depth {} exceeds dimension {d}", objective.depth())));
        }
        Ok(Self { form, constraint, objective, cluster_tol: ClusterTolerance::default() })
    }

    pub fn with_cluster_tol(mut self, tol: ClusterTolerance) -> Self {
        self.cluster_tol = tol;
        self
    }

    /// `λ_min = α + V_min`, a floor for every eigenvalue on the domain.
    pub fn lambda_min(&self) -> f64 {
        self.form.alpha() + self.constraint.v_min()
    }

    /// A lower bound for `F` on the domain, when the objective has one.
    pub fn lower_bound(&self) -> Option<f64> {
        Some(self.objective.lower_bound(self.lambda_min())? + self.constraint.lower_bound(self.form.space().weights()))
    }

    /// `J + 1` eigenpairs when available, so the gap after `λ_J` is known.
    fn eigen_count(&self) -> usize {
        (self.objective.depth() + 1).min(self.form.dim())
    }

    /// `F(V)`; errors when `V` is off the domain.
    pub fn evaluate(&self, v: &PotentialField) -> Result<Evaluation> {
        let k = self.constraint.value(v);
        if !k.is_finite() {
            return Err(Error::Domain(format!("potential is outside the {} domain", self.constraint.name())));
        }
        let spectrum = eigensolve_with(&self.form, v, self.eigen_count(), self.cluster_tol)?;
        let j = self.objective.depth();
        let (h, _) = phi_eval_grad(&self.objective, &spectrum.lambdas()[..j])?;
        let selection = subgradient_xi(&spectrum, &self.objective)?;
        Ok(Evaluation { h, k, f: h + k, spectrum, selection })
    }

    /// `T(W) = prox_K(τ, V_prev − τ ξ)`: the minimizer of
    /// `K + ⟨ξ, ·⟩_m + |· − V_prev|²_m / (2τ)`.
    fn linearized_step(&self, tau: f64, v_prev: &PotentialField, xi: &PotentialField) -> Result<(PotentialField, bool)> {
        let shifted = v_prev.with_values(v_prev.values() - xi.values() * tau);
        let out = self.constraint.prox_detailed(tau, &shifted)?;
        Ok((out.value, out.floor_active))
    }
}

fn phi(eval: &Evaluation, w: &PotentialField, v_prev: &PotentialField, tau: f64) -> f64 {
    let dist = w.space().dist(w.as_slice(), v_prev.as_slice());
    eval.f + dist * dist / (2.0 * tau)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InnerStatus {
    /// Fixed-point residual reached the tolerance.
    Converged,
    /// Residual above the tolerance but small enough that the decrease of Φ
    /// it promises is below the rounding error of Φ, so no further step can
    /// be told apart from noise.
    PrecisionFloor,
    /// Iteration cap hit; the residual is reported.
    IterationCap,
    /// Damping collapsed without reaching the tolerance.
    Stalled,
    /// No descent from `V_prev` or any perturbed start; `V_prev` kept.
    Stuck,
}

impl fmt::Display for InnerStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Converged => "converged",
            Self::PrecisionFloor => "precision_floor",
            Self::IterationCap => "iteration_cap",
            Self::Stalled => "stalled",
            Self::Stuck => "stuck",
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct InnerOptions {
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for InnerOptions {
    fn default() -> Self {
        Self { max_iters: 200, tol: 1e-10 }
    }
}

#[derive(Clone, Debug)]
pub struct InnerResult {
    pub v: PotentialField,
    pub eval: Evaluation,
    /// `|T(V_n) − V_n|_m` with `T` built from the selection at the last
    /// linearization point.
    pub residual: f64,
    pub iters: usize,
    pub status: InnerStatus,
    pub restarts: usize,
    pub floor_active: bool,
}

/// One step of the scheme from `v_prev`.
pub fn mm_inner_solve<R: Rng + ?Sized>(
    problem: &FlowProblem,
    tau: f64,
    v_prev: &PotentialField,
    opts: InnerOptions,
    rng: &mut R,
) -> Result<InnerResult> {
    check_tau(problem, tau)?;
    let prev_eval = problem.evaluate(v_prev)?;
    let phi_prev = prev_eval.f;
    let first = mm_from(problem, tau, v_prev, v_prev, prev_eval.clone(), phi_prev, opts)?;
    if first.status != InnerStatus::Stuck {
        return Ok(first);
    }
    // at degenerate spectra the selection can point uphill; retry from
    // nearby domain points and keep a result only if it beats V_prev
    let scale = 1e-6 * (1.0 + v_prev.as_slice().iter().fold(0.0f64, |m, x| m.max(x.abs())));
    for attempt in 1..=MAX_RESTARTS {
        let noise = DVector::from_fn(v_prev.dim(), |_, _| rng.random_range(-1.0..1.0) * scale);
        let start = problem.constraint.prox(tau, &v_prev.with_values(v_prev.values() + noise))?;
        let Ok(eval) = problem.evaluate(&start) else { continue };
        let mut out = mm_from(problem, tau, v_prev, &start, eval, phi_prev, opts)?;
        if out.status != InnerStatus::Stuck && phi(&out.eval, &out.v, v_prev, tau) <= phi_prev + ACCEPT_SLACK {
            out.restarts = attempt;
            out.iters += first.iters;
            return Ok(out);
        }
    }
    Ok(InnerResult { restarts: MAX_RESTARTS, ..first })
}

fn check_tau(problem: &FlowProblem, tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Parameter(format!("τ must be positive, got {tau}")));
    }
    if tau * problem.constraint.theta() >= 1.0 {
        return Err(Error::Parameter(format!(
            "τθ < 1 is required, got τθ = {}",
            tau * problem.constraint.theta()
        )));
    }
    Ok(())
}

fn mm_from(
    problem: &FlowProblem,
    tau: f64,
    v_prev: &PotentialField,
    start: &PotentialField,
    start_eval: Evaluation,
    phi_prev: f64,
    opts: InnerOptions,
) -> Result<InnerResult> {
    let mut w = start.clone();
    let mut eval = start_eval;
    let mut phi_w = phi(&eval, &w, v_prev, tau);
    let mut omega = 1.0;
    let mut accepted_any = false;
    let mut floor_active = false;

    for iter in 1..=opts.max_iters {
        let (target, floor) = problem.linearized_step(tau, v_prev, &eval.selection.xi)?;
        let residual = target.dist(&w)?;
        if residual <= opts.tol {
            // the prox output satisfies its optimality condition exactly, so
            // prefer it over w whenever it does not increase Φ
            if let Ok(te) = problem.evaluate(&target) {
                if phi(&te, &target, v_prev, tau) <= phi_w + ACCEPT_SLACK {
                    floor_active |= floor;
                    return Ok(InnerResult {
                        v: target,
                        eval: te,
                        residual,
                        iters: iter,
                        status: InnerStatus::Converged,
                        restarts: 0,
                        floor_active,
                    });
                }
            }
            return Ok(InnerResult {
                v: w,
                eval,
                residual,
                iters: iter,
                status: InnerStatus::Converged,
                restarts: 0,
                floor_active,
            });
        }
        let candidate = if omega == 1.0 { target } else { w.lerp(&target, omega) };
        let accepted = match problem.evaluate(&candidate) {
            Ok(ce) => {
                let phi_c = phi(&ce, &candidate, v_prev, tau);
                if phi_c <= phi_w + ACCEPT_SLACK && phi_c <= phi_prev + ACCEPT_SLACK {
                    w = candidate;
                    eval = ce;
                    phi_w = phi_c;
                    floor_active |= floor && omega == 1.0;
                    true
                } else {
                    false
                }
            }
            // rounding can push a damped point a hair outside the domain
            Err(Error::Domain(_)) => false,
            Err(e) => return Err(e),
        };
        if accepted {
            accepted_any = true;
            omega = (2.0 * omega).min(1.0);
        } else {
            // a step of length r lowers Φ by about r²/τ at best
            let noise = ACCEPT_SLACK + 16.0 * f64::EPSILON * phi_w.abs().max(1.0);
            if residual * residual <= tau * noise {
                return Ok(InnerResult {
                    v: w,
                    eval,
                    residual,
                    iters: iter,
                    status: InnerStatus::PrecisionFloor,
                    restarts: 0,
                    floor_active,
                });
            }
            omega *= 0.5;
            if omega < MIN_DAMPING {
                let status = if accepted_any { InnerStatus::Stalled } else { InnerStatus::Stuck };
                return Ok(InnerResult { v: w, eval, residual, iters: iter, status, restarts: 0, floor_active });
            }
        }
    }
    // residual at the final iterate
    let (target, _) = problem.linearized_step(tau, v_prev, &eval.selection.xi)?;
    Ok(InnerResult {
        residual: target.dist(&w)?,
        v: w,
        eval,
        iters: opts.max_iters,
        status: InnerStatus::IterationCap,
        restarts: 0,
        floor_active,
    })
}

/// `ξ_K = −(V_n − V_prev)/τ − ξ_H(V_n)`, the constraint part of the
/// stationarity relation at a step.
pub fn constraint_subgradient(eval_n: &Evaluation, v_n: &PotentialField, v_prev: &PotentialField, tau: f64) -> PotentialField {
    v_n.with_values(-(v_n.values() - v_prev.values()) / tau - eval_n.selection.xi.values())
}

/// Probe points for the stationarity residual around `center`.
pub fn stationarity_probes<R: Rng + ?Sized>(
    problem: &FlowProblem,
    center: &PotentialField,
    count: usize,
    rng: &mut R,
) -> Result<Vec<PotentialField>> {
    let radius = 0.1 * (1.0 + center.as_slice().iter().fold(0.0f64, |m, x| m.max(x.abs())));
    problem.constraint.probes(center, radius, count, rng)
}

/// Subgradient residual of `ξ_K = −(V_n − V_prev)/τ − ξ_H(V_n)` for `K`
/// at `V_n`, against `probes`. At most zero (up to rounding) when `V_n`
/// is an exact stationary point of the step problem.
pub fn stationarity_residual(
    problem: &FlowProblem,
    v_n: &PotentialField,
    v_prev: &PotentialField,
    tau: f64,
    probes: &[PotentialField],
) -> Result<f64> {
    check_dim(v_n.dim(), v_prev.dim())?;
    let eval = problem.evaluate(v_n)?;
    let xi_k = constraint_subgradient(&eval, v_n, v_prev, tau);
    subgradient_residual(&problem.constraint, v_n, &xi_k, probes)
}

#[derive(Clone, Debug)]
pub struct FlowConfig {
    pub tau: f64,
    /// Horizon `T`.
    pub horizon: f64,
    pub inner: InnerOptions,
    /// Snapshot stride for output; the trajectory itself keeps every step.
    pub record_every: usize,
    /// Probes per step for the stationarity residual (0 disables it).
    pub probes: usize,
    pub seed: u64,
}

impl FlowConfig {
    pub fn new(tau: f64, horizon: f64) -> Self {
        Self { tau, horizon, inner: InnerOptions::default(), record_every: 1, probes: 200, seed: 0 }
    }

    /// `N = ⌈T/τ⌉`, with ratios within rounding of an integer taken as
    /// that integer (so `T = 1.1, τ = 0.1` gives 11, not 12).
    pub fn steps(&self) -> usize {
        let r = self.horizon / self.tau;
        let n = if (r - r.round()).abs() <= 1e-9 * r.max(1.0) { r.round() } else { r.ceil() };
        (n as usize).max(1)
    }
}

/// Per-step scalars.
#[derive(Clone, Debug)]
pub struct StepRecord {
    pub n: usize,
    pub t: f64,
    pub f: f64,
    pub h: f64,
    pub k: f64,
    /// `λ₁, …, λ_{J+1}` (or fewer when `J = d`).
    pub lambdas: Vec<f64>,
    /// `|Vⁿ − Vⁿ⁻¹|_m / τ`.
    pub step_norm: f64,
    /// NaN at `n = 0` or when probes are disabled.
    pub stat_residual: f64,
    pub gap_ok: Option<bool>,
    pub inner_iters: usize,
    pub inner_residual: f64,
    pub inner_status: Option<InnerStatus>,
    pub restarts: usize,
    pub floor_active: bool,
    /// `F(Vⁿ) + |ΔVⁿ|²_m/(2τ) − F(Vⁿ⁻¹)`.
    pub energy_gap: f64,
}

#[derive(Clone, Debug)]
pub struct FlowTrajectory {
    pub config: FlowConfig,
    /// `V⁰, …, V^N`.
    pub states: Vec<PotentialField>,
    /// One record per state.
    pub records: Vec<StepRecord>,
    pub lower_bound: Option<f64>,
    pub wall_time: f64,
}

/// Aggregates over a trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowSummary {
    pub steps: usize,
    pub initial_f: f64,
    pub terminal_f: f64,
    /// `Σ τ |ΔVⁿ/τ|²_m`.
    pub dissipation: f64,
    /// Largest stationarity residual over all steps.
    pub max_stat_residual: f64,
    /// Largest stationarity residual over steps with a clean spectral gap.
    pub max_stat_residual_gap_ok: f64,
    /// Largest `F(Vⁿ) + |ΔVⁿ|²/(2τ) − F(Vⁿ⁻¹)`.
    pub max_energy_gap: f64,
    /// `sup F(Vⁿ) − F(V⁰)`.
    pub sup_f_excess: f64,
    pub max_inner_residual: f64,
    pub inner_warnings: usize,
    pub gap_failures: usize,
    pub floor_active: bool,
    /// `sup |Vⁿ|_m`.
    pub sup_norm: f64,
    /// `|V⁰|_m + √(2Nτ(F(V⁰) − inf F))` when `inf F` is known.
    pub norm_bound: Option<f64>,
    /// `2(F(V⁰) − inf F)` when known.
    pub dissipation_bound: Option<f64>,
    /// `F(V^N) + Σ τ|ΔV/τ|² − F(V⁰)`: the energy identity with decreasing energy.
    pub edi_residual_decreasing: f64,
    /// `F(V^N) − Σ τ|ΔV/τ|² − F(V⁰)`: the same identity with the opposite sign.
    pub edi_residual_increasing: f64,
    /// `max_t |V̄_τ(t) − V_τ(t)|_m = max_n |ΔVⁿ|_m`.
    pub interpolant_gap: f64,
}

impl FlowTrajectory {
    pub fn tau(&self) -> f64 {
        self.config.tau
    }

    pub fn final_state(&self) -> &PotentialField {
        self.states.last().expect("trajectory has V⁰")
    }

    /// Steps whose snapshot is written: 0, multiples of `record_every`,
    /// and the last one.
    pub fn snapshot_steps(&self) -> Vec<usize> {
        let n = self.states.len() - 1;
        let every = self.config.record_every.max(1);
        let mut out: Vec<usize> = (0..=n).filter(|i| i % every == 0).collect();
        if out.last() != Some(&n) {
            out.push(n);
        }
        out
    }

    /// Piecewise constant interpolant: `Vⁿ` on `(tₙ₋₁, tₙ]`, `V⁰` at 0.
    pub fn piecewise_constant(&self, t: f64) -> &PotentialField {
        let s = t / self.tau();
        let s = if (s - s.round()).abs() <= 1e-9 * s.abs().max(1.0) { s.round() } else { s.ceil() };
        let n = (s.max(0.0) as usize).min(self.states.len() - 1);
        &self.states[n]
    }

    /// Piecewise linear interpolant through `(tₙ, Vⁿ)`.
    pub fn piecewise_linear(&self, t: f64) -> PotentialField {
        let last = self.states.len() - 1;
        let s = (t / self.tau()).max(0.0);
        let s = if (s - s.round()).abs() <= 1e-9 * s.max(1.0) { s.round() } else { s };
        let n = (s.floor() as usize).min(last);
        if n == last {
            return self.states[last].clone();
        }
        self.states[n].lerp(&self.states[n + 1], s - n as f64)
    }

    pub fn summary(&self) -> FlowSummary {
        let tau = self.tau();
        let first = &self.records[0];
        let last = self.records.last().unwrap();
        let steps = &self.records[1..];
        let fold_max = |it: &mut dyn Iterator<Item = f64>| it.fold(0.0f64, |m, x| if x.is_nan() { m } else { m.max(x) });
        let dissipation: f64 = steps.iter().map(|r| tau * r.step_norm * r.step_norm).sum();
        let sup_f = self.records.iter().map(|r| r.f).fold(f64::NEG_INFINITY, f64::max);
        let sup_norm = self.states.iter().map(PotentialField::norm).fold(0.0, f64::max);
        let n_tau = steps.len() as f64 * tau;
        let norm_bound = self
            .lower_bound
            .map(|lb| self.states[0].norm() + (2.0 * n_tau * (first.f - lb).max(0.0)).sqrt());
        FlowSummary {
            steps: steps.len(),
            initial_f: first.f,
            terminal_f: last.f,
            dissipation,
            max_stat_residual: fold_max(&mut steps.iter().map(|r| r.stat_residual)),
            max_stat_residual_gap_ok: fold_max(
                &mut steps.iter().filter(|r| r.gap_ok != Some(false)).map(|r| r.stat_residual),
            ),
            max_energy_gap: steps.iter().map(|r| r.energy_gap).fold(f64::NEG_INFINITY, f64::max),
            sup_f_excess: sup_f - first.f,
            max_inner_residual: fold_max(&mut steps.iter().map(|r| r.inner_residual)),
            inner_warnings: steps
                .iter()
                .filter(|r| !matches!(r.inner_status, Some(InnerStatus::Converged | InnerStatus::PrecisionFloor)))
                .count(),
            gap_failures: steps.iter().filter(|r| r.gap_ok == Some(false)).count(),
            floor_active: self.records.iter().any(|r| r.floor_active),
            sup_norm,
            norm_bound,
            dissipation_bound: self.lower_bound.map(|lb| 2.0 * (first.f - lb)),
            edi_residual_decreasing: last.f + dissipation - first.f,
            edi_residual_increasing: last.f - dissipation - first.f,
            interpolant_gap: fold_max(&mut steps.iter().map(|r| r.step_norm * tau)),
        }
    }
}

/// Runs `N = ⌈T/τ⌉` steps from `v0`.
pub fn run_flow(problem: &FlowProblem, v0: &PotentialField, config: &FlowConfig) -> Result<FlowTrajectory> {
    run_flow_observed(problem, v0, config, |_| {})
}

/// [`run_flow`] with a callback after every step (progress reporting).
pub fn run_flow_observed(
    problem: &FlowProblem,
    v0: &PotentialField,
    config: &FlowConfig,
    mut on_step: impl FnMut(&StepRecord),
) -> Result<FlowTrajectory> {
    let start = Instant::now();
    check_tau(problem, config.tau)?;
    if !(config.horizon > 0.0 && config.horizon.is_finite()) {
        return Err(Error::Parameter(format!("horizon must be positive, got {}", config.horizon)));
    }
    check_dim(problem.form.dim(), v0.dim())?;
    if !problem.constraint.contains(v0) {
        return Err(Error::Parameter(format!("initial potential is outside the {} domain", problem.constraint.name())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let tau = config.tau;
    let mut eval = problem.evaluate(v0)?;
    let lambdas = |e: &Evaluation| e.spectrum.lambdas().to_vec();
    let mut records = vec![StepRecord {
        n: 0,
        t: 0.0,
        f: eval.f,
        h: eval.h,
        k: eval.k,
        lambdas: lambdas(&eval),
        step_norm: 0.0,
        stat_residual: f64::NAN,
        gap_ok: eval.selection.gap_ok,
        inner_iters: 0,
        inner_residual: 0.0,
        inner_status: None,
        restarts: 0,
        floor_active: false,
        energy_gap: 0.0,
    }];
    on_step(&records[0]);
    let mut states = vec![v0.clone()];
    for n in 1..=config.steps() {
        let prev = states.last().unwrap();
        let inner = mm_inner_solve(problem, tau, prev, config.inner, &mut rng)?;
        let dist = inner.v.dist(prev)?;
        let stat_residual = if config.probes > 0 {
            let probes = stationarity_probes(problem, &inner.v, config.probes, &mut rng)?;
            let xi_k = constraint_subgradient(&inner.eval, &inner.v, prev, tau);
            subgradient_residual(&problem.constraint, &inner.v, &xi_k, &probes)?
        } else {
            f64::NAN
        };
        let record = StepRecord {
            n,
            t: n as f64 * tau,
            f: inner.eval.f,
            h: inner.eval.h,
            k: inner.eval.k,
            lambdas: lambdas(&inner.eval),
            step_norm: dist / tau,
            stat_residual,
            gap_ok: inner.eval.selection.gap_ok,
            inner_iters: inner.iters,
            inner_residual: inner.residual,
            inner_status: Some(inner.status),
            restarts: inner.restarts,
            floor_active: inner.floor_active,
            energy_gap: inner.eval.f + dist * dist / (2.0 * tau) - eval.f,
        };
        on_step(&record);
        records.push(record);
        eval = inner.eval;
        states.push(inner.v);
    }
    Ok(FlowTrajectory {
        config: config.clone(),
        states,
        records,
        lower_bound: problem.lower_bound(),
        wall_time: start.elapsed().as_secs_f64(),
    })
}
