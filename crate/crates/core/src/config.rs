//! Run configuration: TOML (or JSON) text to a validated [`Instance`].
//!
//! Parsing is strict. Unknown keys are reported, and validation collects
//! every problem it finds before failing, so one pass over the file fixes
//! all of them.
//!
//! ```toml
//! seed = 7
//! out = "runs/bang_bang"
//!
//! [operator]
//! kind = "path_dirichlet"
//! n = 64
//! h = 0.015384615384615385
//!
//! [objective]
//! kind = "sum_first_k"
//! k = 1
//!
//! [constraint]
//! kind = "box_mean"
//! v_minus = -1.0
//! v_plus = 1.0
//! v0 = 0.0
//!
//! [flow]
//! tau = 10.0
//! T = 2000.0
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::constraints::{ConstraintFunctional, PsiFunction, Tilt};
use crate::error::{Error, Result};
use crate::flow::{FlowConfig, FlowProblem, InnerOptions};
use crate::forms::{build_operator, read_dense_matrix, OperatorSpec};
use crate::objectives::{GapShape, ObjectiveKind, SpectralObjective};
use crate::space::{MeasureSpace, PotentialField};
use crate::spectrum::ClusterTolerance;
use crate::verify::{Mutation, SuiteOptions};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OperatorSection {
    pub kind: Option<String>,
    pub n: Option<usize>,
    pub nx: Option<usize>,
    pub ny: Option<usize>,
    pub h: Option<f64>,
    pub coefficients: Option<Vec<f64>>,
    pub ellipticity: Option<f64>,
    pub matrix_file: Option<PathBuf>,
    pub s: Option<f64>,
    pub base: Option<Box<OperatorSection>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MeasureSection {
    /// `uniform` or `file`.
    pub kind: Option<String>,
    pub value: Option<f64>,
    pub file: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObjectiveSection {
    pub kind: Option<String>,
    pub k: Option<usize>,
    /// Depth `J`; defaults to the objective's natural depth.
    #[serde(rename = "J")]
    pub depth: Option<usize>,
    pub j: Option<usize>,
    /// `quadratic` or `power` (gap penalty).
    pub shape: Option<String>,
    pub p: Option<f64>,
    pub value: Option<f64>,
}

/// A scalar or one value per node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarOrField {
    Scalar(f64),
    Field(Vec<f64>),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConstraintSection {
    pub kind: Option<String>,
    pub v_minus: Option<f64>,
    pub v_plus: Option<f64>,
    pub v0: Option<f64>,
    /// `exp` or `power`.
    pub psi: Option<String>,
    pub beta: Option<f64>,
    pub c: Option<f64>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub a: Option<ScalarOrField>,
    pub theta: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowSection {
    pub tau: Option<f64>,
    #[serde(rename = "T")]
    pub horizon: Option<f64>,
    pub inner_max_iters: Option<usize>,
    pub inner_tol: Option<f64>,
    pub record_every: Option<usize>,
    pub probes: Option<usize>,
    pub cluster_rel_tol: Option<f64>,
    pub cluster_abs_tol: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InitialSection {
    /// `constant`, `file` or `random`.
    pub kind: Option<String>,
    pub value: Option<f64>,
    pub file: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifySection {
    pub samples: Option<usize>,
    pub rotations: Option<usize>,
    pub fd_points: Option<usize>,
    pub fd_directions: Option<usize>,
    pub mutate: Option<bool>,
    /// Overrides every check's tolerance.
    pub tolerance: Option<f64>,
    pub tau: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub operator: Option<OperatorSection>,
    pub measure: Option<MeasureSection>,
    pub objective: Option<ObjectiveSection>,
    pub constraint: Option<ConstraintSection>,
    pub flow: Option<FlowSection>,
    pub initial: Option<InitialSection>,
    pub verify: Option<VerifySection>,
}

/// Everything a run needs, built from a [`RunConfig`].
#[derive(Clone, Debug)]
pub struct Instance {
    pub config: RunConfig,
    pub problem: FlowProblem,
    pub v0: PotentialField,
    pub flow: FlowConfig,
    pub suite: SuiteOptions,
    pub out: PathBuf,
    pub seed: u64,
}

/// Reads and parses a config file; `.json` files are JSON, anything else
/// TOML. Relative paths inside are resolved against the file's directory.
pub fn parse_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let mut cfg = parse_config_str(&text, json)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    cfg.resolve_paths(dir)?;
    Ok(cfg)
}

/// Parses config text, rejecting unknown keys.
pub fn parse_config_str(text: &str, json: bool) -> Result<RunConfig> {
    let raw: Value = if json {
        serde_json::from_str(text).map_err(|e| Error::Config(vec![format!("malformed JSON: {e}")]))?
    } else {
        toml::from_str(text).map_err(|e| Error::Config(vec![format!("malformed TOML: {e}")]))?
    };
    let cfg: RunConfig =
        serde_json::from_value(raw.clone()).map_err(|e| Error::Config(vec![format!("bad value: {e}")]))?;
    // every key of the input must survive a round trip through the typed
    // config, otherwise it was not recognized
    let known = serde_json::to_value(&cfg).expect("config serializes");
    let mut unknown = Vec::new();
    collect_unknown(&raw, &known, "", &mut unknown);
    if !unknown.is_empty() {
        return Err(Error::Config(unknown.into_iter().map(|k| format!("unknown key `{k}`")).collect()));
    }
    Ok(cfg)
}

fn collect_unknown(raw: &Value, known: &Value, prefix: &str, out: &mut Vec<String>) {
    let (Value::Object(r), Value::Object(k)) = (raw, known) else { return };
    for (key, value) in r {
        let path = if prefix.is_empty() { key.clone() } else { format!("{prefix}.{key}") };
        match k.get(key) {
            None => out.push(path),
            Some(kv) => collect_unknown(value, kv, &path, out),
        }
    }
}

/// Whitespace- or comma-separated numbers; `#` starts a comment.
pub fn read_vector(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("");
        for tok in line.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
            out.push(tok.parse::<f64>().map_err(|_| {
                Error::Config(vec![format!("{}: `{tok}` is not a number", path.display())])
            })?);
        }
    }
    Ok(out)
}

struct Problems(Vec<String>);

impl Problems {
    fn push(&mut self, msg: impl Into<String>) {
        self.0.push(msg.into());
    }

    fn take<T>(&mut self, r: Result<T>, ctx: &str) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(Error::Config(list)) => {
                self.0.extend(list.into_iter().map(|m| format!("{ctx}: {m}")));
                None
            }
            Err(e) => {
                self.push(format!("{ctx}: {e}"));
                None
            }
        }
    }

    fn require<T: Copy>(&mut self, v: Option<T>, key: &str) -> Option<T> {
        if v.is_none() {
            self.push(format!("missing `{key}`"));
        }
        v
    }
}

impl RunConfig {
    fn resolve_paths(&mut self, dir: &Path) -> Result<()> {
        let fix = |p: &mut PathBuf| -> Result<()> {
            let joined = if p.is_relative() { dir.join(&*p) } else { p.clone() };
            *p = std::path::absolute(joined)?;
            Ok(())
        };
        let mut op = self.operator.as_mut();
        while let Some(o) = op {
            if let Some(p) = o.matrix_file.as_mut() {
                fix(p)?;
            }
            op = o.base.as_deref_mut();
        }
        if let Some(p) = self.measure.as_mut().and_then(|m| m.file.as_mut()) {
            fix(p)?;
        }
        if let Some(p) = self.initial.as_mut().and_then(|m| m.file.as_mut()) {
            fix(p)?;
        }
        Ok(())
    }

    /// Validates everything and builds the run objects. All problems found
    /// are returned together as [`Error::Config`].
    pub fn build(&self) -> Result<Instance> {
        let mut errs = Problems(Vec::new());
        let seed = self.seed.unwrap_or(0);

        let op = match &self.operator {
            Some(o) => operator_spec(o, "operator", &mut errs),
            None => {
                errs.push("missing [operator] section");
                None
            }
        };
        let d = op.as_ref().map(OperatorSpec::dim);
        let space = d.and_then(|d| errs.take(measure(self.measure.as_ref(), d), "measure"));
        let form = match (&op, &space) {
            (Some(op), Some(space)) => errs.take(build_operator(op, space), "operator"),
            _ => None,
        };

        let objective = match &self.objective {
            Some(o) => objective(o, &mut errs),
            None => {
                errs.push("missing [objective] section");
                None
            }
        };
        let constraint = match &self.constraint {
            Some(c) => constraint(c, d, &mut errs),
            None => {
                errs.push("missing [constraint] section");
                None
            }
        };

        let flow = self.flow.clone().unwrap_or_default();
        let tau = errs.require(flow.tau, "flow.tau");
        let horizon = errs.require(flow.horizon, "flow.T");
        if let Some(t) = tau {
            if !(t > 0.0 && t.is_finite()) {
                errs.push(format!("flow.tau must be positive, got {t}"));
            }
        }
        if let Some(t) = horizon {
            if !(t > 0.0 && t.is_finite()) {
                errs.push(format!("flow.T must be positive, got {t}"));
            }
        }
        if let (Some(t), Some(k)) = (tau, &constraint) {
            if t * k.theta() >= 1.0 {
                errs.push(format!("τθ < 1 is required, got τ = {t}, θ = {}, τθ = {}", k.theta(), t * k.theta()));
            }
        }
        let defaults = InnerOptions::default();
        let inner = InnerOptions {
            max_iters: flow.inner_max_iters.unwrap_or(defaults.max_iters),
            tol: flow.inner_tol.unwrap_or(defaults.tol),
        };
        if inner.max_iters == 0 {
            errs.push("flow.inner_max_iters must be positive");
        }
        if !(inner.tol > 0.0) {
            errs.push(format!("flow.inner_tol must be positive, got {}", inner.tol));
        }
        let dt = ClusterTolerance::default();
        let cluster_tol = errs.take(
            ClusterTolerance::new(flow.cluster_rel_tol.unwrap_or(dt.rel_tol), flow.cluster_abs_tol.unwrap_or(dt.abs_tol)),
            "flow",
        );

        if let (Some(obj), Some(d)) = (&objective, d) {
            if obj.depth() + 1 > d {
                errs.push(format!(
                    "J + 1 ≤ d is required (the gap after λ_J needs λ_(J+1)), got J = {}, d = {d}",
                    obj.depth()
                ));
            }
        }
        if let (Some(obj), Some(form), Some(k)) = (&objective, &form, &constraint) {
            let lambda_min = form.alpha() + k.v_min();
            if matches!(obj.kind(), ObjectiveKind::RootProduct) && !(lambda_min > 0.0) {
                errs.push(format!("root_product needs λ_min = α + V_min > 0, got {lambda_min}"));
            }
        }

        let v0 = match (&space, &constraint) {
            (Some(space), Some(k)) => initial(self.initial.as_ref(), space, k, seed, &mut errs),
            _ => None,
        };

        let vs = self.verify.clone().unwrap_or_default();
        let sd = SuiteOptions::default();
        let suite = SuiteOptions {
            samples: vs.samples.unwrap_or(sd.samples),
            rotations: vs.rotations.unwrap_or(sd.rotations),
            fd_points: vs.fd_points.unwrap_or(sd.fd_points),
            fd_directions: vs.fd_directions.unwrap_or(sd.fd_directions),
            mutation: Mutation(vs.mutate.unwrap_or(false)),
            tolerance: vs.tolerance,
            seed,
            tau: vs.tau.unwrap_or(sd.tau),
        };
        if let Some(k) = &constraint {
            if suite.tau * k.theta() >= 1.0 || !(suite.tau > 0.0) {
                errs.push(format!("verify.tau must be positive with τθ < 1, got {}", suite.tau));
            }
        }

        if !errs.0.is_empty() {
            return Err(Error::Config(errs.0));
        }
        let (form, objective, constraint, v0) = (form.unwrap(), objective.unwrap(), constraint.unwrap(), v0.unwrap());
        let problem = FlowProblem::new(form, constraint, objective)
            .map_err(|e| Error::Config(vec![e.to_string()]))?
            .with_cluster_tol(cluster_tol.unwrap());
        let flow = FlowConfig {
            tau: tau.unwrap(),
            horizon: horizon.unwrap(),
            inner,
            record_every: flow.record_every.unwrap_or(1).max(1),
            probes: flow.probes.unwrap_or(200),
            seed,
        };
        Ok(Instance {
            config: self.clone(),
            problem,
            v0,
            flow,
            suite,
            out: self.out.clone().unwrap_or_else(|| PathBuf::from("out")),
            seed,
        })
    }
}

fn operator_spec(o: &OperatorSection, ctx: &str, errs: &mut Problems) -> Option<OperatorSpec> {
    let kind = o.kind.as_deref().unwrap_or("");
    let key = |k: &str| format!("{ctx}.{k}");
    let n = || o.n;
    let h = o.h.unwrap_or(1.0);
    if !(h > 0.0 && h.is_finite()) {
        errs.push(format!("{} must be positive, got {h}", key("h")));
        return None;
    }
    let positive = |errs: &mut Problems, v: Option<usize>, k: &str| -> Option<usize> {
        match v {
            Some(0) => {
                errs.push(format!("{} must be positive", key(k)));
                None
            }
            None => {
                errs.push(format!("missing `{}`", key(k)));
                None
            }
            v => v,
        }
    };
    match kind {
        "path_dirichlet" => Some(OperatorSpec::PathDirichlet { n: positive(errs, n(), "n")?, h }),
        "path_neumann" => Some(OperatorSpec::PathNeumann { n: positive(errs, n(), "n")?, h }),
        "grid2d_dirichlet" => {
            let nx = positive(errs, o.nx, "nx");
            let ny = positive(errs, o.ny, "ny");
            Some(OperatorSpec::Grid2dDirichlet { nx: nx?, ny: ny?, h })
        }
        "weighted_edge" => {
            let n = positive(errs, n(), "n")?;
            let coefficients = o.coefficients.clone().unwrap_or_else(|| vec![1.0; n + 1]);
            Some(OperatorSpec::WeightedEdge { n, h, coefficients, ellipticity: o.ellipticity })
        }
        "fractional" => {
            let s = errs.require(o.s, &key("s"));
            let base = match &o.base {
                Some(b) => operator_spec(b, &key("base"), errs),
                None => {
                    errs.push(format!("missing `{}` table", key("base")));
                    None
                }
            };
            Some(OperatorSpec::Fractional { base: Box::new(base?), s: s? })
        }
        "dense" => {
            let Some(path) = &o.matrix_file else {
                errs.push(format!("missing `{}`", key("matrix_file")));
                return None;
            };
            let matrix: Option<DMatrix<f64>> = errs.take(read_dense_matrix(path), &key("matrix_file"));
            Some(OperatorSpec::Dense { matrix: matrix? })
        }
        "" => {
            errs.push(format!("missing `{}`", key("kind")));
            None
        }
        other => {
            errs.push(format!(
                "unknown {} `{other}` (expected path_dirichlet, path_neumann, grid2d_dirichlet, weighted_edge, fractional or dense)",
                key("kind")
            ));
            None
        }
    }
}

fn measure(m: Option<&MeasureSection>, d: usize) -> Result<MeasureSpace> {
    let m = m.cloned().unwrap_or_default();
    match m.kind.as_deref().unwrap_or("uniform") {
        "uniform" => MeasureSpace::uniform(d, m.value.unwrap_or(1.0)),
        "file" => {
            let path = m.file.ok_or_else(|| Error::Config(vec!["missing `file`".into()]))?;
            let w = read_vector(&path)?;
            if w.len() != d {
                return Err(Error::Config(vec![format!("{} has {} weights, operator has {d} nodes", path.display(), w.len())]));
            }
            MeasureSpace::new(w)
        }
        other => Err(Error::Config(vec![format!("unknown kind `{other}` (expected uniform or file)")])),
    }
}

fn objective(o: &ObjectiveSection, errs: &mut Problems) -> Option<SpectralObjective> {
    let kind = match o.kind.as_deref().unwrap_or("") {
        "sum_first_k" => ObjectiveKind::SumFirstK { k: errs.require(o.k, "objective.k")? },
        "elementary_symmetric_2" => ObjectiveKind::ElementarySymmetric2 { k: errs.require(o.k, "objective.k")? },
        "root_product" => ObjectiveKind::RootProduct,
        "sum_times_squares" => ObjectiveKind::SumTimesSquares,
        "gap_penalty" => {
            let j = errs.require(o.j, "objective.j");
            let shape = match o.shape.as_deref().unwrap_or("quadratic") {
                "quadratic" => Some(GapShape::Quadratic),
                "power" => errs.require(o.p, "objective.p").map(GapShape::Power),
                other => {
                    errs.push(format!("unknown objective.shape `{other}` (expected quadratic or power)"));
                    None
                }
            };
            ObjectiveKind::GapPenalty { j: j?, shape: shape? }
        }
        "constant" => ObjectiveKind::Constant { value: o.value.unwrap_or(0.0) },
        "" => {
            errs.push("missing `objective.kind`");
            return None;
        }
        other => {
            errs.push(format!(
                "unknown objective.kind `{other}` (expected sum_first_k, elementary_symmetric_2, root_product, sum_times_squares, gap_penalty or constant)"
            ));
            return None;
        }
    };
    let built = match o.depth {
        Some(j) => SpectralObjective::with_depth(kind, j),
        None => SpectralObjective::new(kind),
    };
    errs.take(built, "objective")
}

fn constraint(c: &ConstraintSection, d: Option<usize>, errs: &mut Problems) -> Option<ConstraintFunctional> {
    let built = match c.kind.as_deref().unwrap_or("") {
        "box_mean" => {
            let a = errs.require(c.v_minus, "constraint.v_minus");
            let b = errs.require(c.v_plus, "constraint.v_plus");
            let v0 = errs.require(c.v0, "constraint.v0");
            ConstraintFunctional::box_mean(a?, b?, v0?)
        }
        "psi_budget" => {
            let beta = errs.require(c.beta, "constraint.beta");
            let budget = errs.require(c.c, "constraint.c");
            let psi = match c.psi.as_deref().unwrap_or("exp") {
                "exp" => beta.map(|beta| PsiFunction::Exp { beta }),
                "power" => beta.map(|beta| PsiFunction::Power { beta }),
                other => {
                    errs.push(format!("unknown constraint.psi `{other}` (expected exp or power)"));
                    None
                }
            };
            ConstraintFunctional::psi_budget(psi?, budget?)
        }
        "tilted_box" => {
            let lo = errs.require(c.lo, "constraint.lo");
            let hi = errs.require(c.hi, "constraint.hi");
            let tilt = match c.a.clone() {
                None => Tilt::Uniform(0.0),
                Some(ScalarOrField::Scalar(a)) => Tilt::Uniform(a),
                Some(ScalarOrField::Field(a)) => {
                    if let Some(d) = d {
                        if a.len() != d {
                            errs.push(format!("constraint.a has {} entries, operator has {d} nodes", a.len()));
                            return None;
                        }
                    }
                    Tilt::Field(a)
                }
            };
            ConstraintFunctional::tilted_box(lo?, hi?, tilt, c.theta.unwrap_or(0.0))
        }
        "" => {
            errs.push("missing `constraint.kind`");
            return None;
        }
        other => {
            errs.push(format!("unknown constraint.kind `{other}` (expected box_mean, psi_budget or tilted_box)"));
            return None;
        }
    };
    errs.take(built, "constraint")
}

fn initial(
    i: Option<&InitialSection>,
    space: &MeasureSpace,
    k: &ConstraintFunctional,
    seed: u64,
    errs: &mut Problems,
) -> Option<PotentialField> {
    let template = PotentialField::zeros(space);
    let i = i.cloned().unwrap_or_default();
    let v = match i.kind.as_deref() {
        None => errs.take(k.central_point(&template), "initial"),
        Some("constant") => Some(PotentialField::constant(space, errs.require(i.value, "initial.value")?)),
        Some("file") => {
            let Some(path) = i.file else {
                errs.push("missing `initial.file`");
                return None;
            };
            let values = errs.take(read_vector(&path), "initial.file")?;
            errs.take(PotentialField::new(space, values), "initial.file")
        }
        Some("random") => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
            errs.take(k.sample_domain(&template, &mut rng), "initial")
        }
        Some(other) => {
            errs.push(format!("unknown initial.kind `{other}` (expected constant, file or random)"));
            None
        }
    }?;
    if !k.contains(&v) {
        errs.push(format!("initial potential is outside the {} domain", k.name()));
        return None;
    }
    Some(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[operator]
kind = "path_dirichlet"
n = 8

[objective]
kind = "sum_first_k"
k = 1

[constraint]
kind = "box_mean"
v_minus = -1
v_plus = 1
v0 = 0

[flow]
tau = 0.01
T = 1
"#;

    fn messages(e: Error) -> Vec<String> {
        match e {
            Error::Config(list) => list,
            other => panic!("expected a config error, got {other}"),
        }
    }

    #[test]
    fn minimal_config_is_valid() {
        let cfg = parse_config_str(MINIMAL, false).unwrap();
        let inst = cfg.build().unwrap();
        assert_eq!(inst.flow.steps(), 100);
        assert_eq!(inst.problem.form.dim(), 8);
        assert_eq!(inst.v0.as_slice(), &[0.0; 8]);
    }

    #[test]
    fn tau_theta_rejected() {
        let text = r#"
[operator]
kind = "path_dirichlet"
n = 4
[objective]
kind = "sum_first_k"
k = 1
[constraint]
kind = "tilted_box"
lo = -1
hi = 1
theta = 2
[flow]
tau = 1
T = 1
"#;
        let errs = messages(parse_config_str(text, false).unwrap().build().unwrap_err());
        assert!(errs.iter().any(|e| e.contains("τθ < 1")), "{errs:?}");
    }

    #[test]
    fn depth_equal_to_dimension_rejected() {
        let text = MINIMAL.replace("n = 8", "n = 2").replace("k = 1", "k = 2");
        let errs = messages(parse_config_str(&text, false).unwrap().build().unwrap_err());
        assert!(errs.iter().any(|e| e.contains("J + 1 ≤ d")), "{errs:?}");
    }

    #[test]
    fn all_errors_reported_together() {
        let text = r#"
[operator]
kind = "path_dirichlet"
[objective]
kind = "nope"
[constraint]
kind = "box_mean"
v_minus = 1
v_plus = 0
v0 = 0
[flow]
tau = -1
"#;
        let errs = messages(parse_config_str(text, false).unwrap().build().unwrap_err());
        assert!(errs.len() >= 5, "{errs:?}");
        assert!(errs.iter().any(|e| e.contains("operator.n")));
        assert!(errs.iter().any(|e| e.contains("objective.kind")));
        assert!(errs.iter().any(|e| e.contains("V⁻ < V⁺")));
        assert!(errs.iter().any(|e| e.contains("flow.T")));
        assert!(errs.iter().any(|e| e.contains("flow.tau")));
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = format!("bogus = 1\n{MINIMAL}\n[verify]\nsampels = 3\n");
        let errs = messages(parse_config_str(&text, false).unwrap_err());
        assert_eq!(errs, vec!["unknown key `bogus`".to_string(), "unknown key `verify.sampels`".to_string()]);
    }

    #[test]
    fn root_product_needs_positive_floor() {
        let text = MINIMAL.replace("kind = \"sum_first_k\"\nk = 1", "kind = \"root_product\"");
        let errs = messages(parse_config_str(&text, false).unwrap().build().unwrap_err());
        assert!(errs.iter().any(|e| e.contains("root_product")), "{errs:?}");
    }

    #[test]
    fn json_round_trip() {
        let cfg = parse_config_str(MINIMAL, false).unwrap();
        let json = serde_json::to_string_pretty(&cfg).unwrap();
        assert_eq!(parse_config_str(&json, true).unwrap(), cfg);
    }

    #[test]
    fn fractional_and_tilt_fields() {
        let text = r#"
[operator]
kind = "fractional"
s = 0.5
[operator.base]
kind = "path_dirichlet"
n = 3
[objective]
kind = "gap_penalty"
j = 2
J = 2
shape = "power"
p = 1.5
[constraint]
kind = "tilted_box"
lo = -1
hi = 1
a = [0.1, 0.2, 0.3]
theta = 0.5
[flow]
tau = 0.1
T = 0.3
[initial]
kind = "random"
"#;
        let inst = parse_config_str(text, false).unwrap().build().unwrap();
        assert_eq!(inst.problem.form.dim(), 3);
        assert!(inst.problem.constraint.contains(&inst.v0));
        let bad = text.replace("a = [0.1, 0.2, 0.3]", "a = [0.1]");
        assert!(parse_config_str(&bad, false).unwrap().build().is_err());
    }

    #[test]
    fn infeasible_initial_rejected() {
        let text = format!("{MINIMAL}\n[initial]\nkind = \"constant\"\nvalue = -0.5\n");
        let errs = messages(parse_config_str(&text, false).unwrap().build().unwrap_err());
        assert!(errs.iter().any(|e| e.contains("initial potential")), "{errs:?}");
    }
}
