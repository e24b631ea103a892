//! Symmetric nonnegative bilinear forms `E(u, v) = uᵀ L v` and the
//! Schrödinger form `E_V(u) = E(u) + Σ mᵢ Vᵢ uᵢ²`.
//!
//! Boundary conventions for the stencils: Dirichlet kinds act on interior
//! nodes only (boundary values are eliminated), Neumann kinds keep every
//! node. Forms are stored dense.

use std::fmt;
use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{check_dim, Error, Result};
use crate::space::{MeasureSpace, PotentialField, StateVector};

/// Relative slack used when deciding whether a computed eigenvalue is a
/// rounding-level negative number.
pub const PSD_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorKind {
    PathDirichlet,
    PathNeumann,
    Grid2dDirichlet,
    WeightedEdge,
    Fractional,
    Dense,
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::PathDirichlet => "path_dirichlet",
            Self::PathNeumann => "path_neumann",
            Self::Grid2dDirichlet => "grid2d_dirichlet",
            Self::WeightedEdge => "weighted_edge",
            Self::Fractional => "fractional",
            Self::Dense => "dense",
        };
        f.write_str(s)
    }
}

/// Recipe for a [`BilinearForm`].
#[derive(Clone, Debug, PartialEq)]
pub enum OperatorSpec {
    /// `(1/h²)·tridiag(−1, 2, −1)` on `n` interior nodes.
    PathDirichlet { n: usize, h: f64 },
    /// Path Laplacian on `n` nodes with `(1/h²)(1, −1)` boundary rows.
    PathNeumann { n: usize, h: f64 },
    /// Five-point stencil on an `nx × ny` grid of interior nodes.
    Grid2dDirichlet { nx: usize, ny: usize, h: f64 },
    /// Divergence-form path operator `Σₑ aₑ (∇ₑu)² / h²` with Dirichlet
    /// ends; `coefficients` has one entry per edge (`n + 1` of them).
    /// When `ellipticity` is given every `aₑ` must lie in
    /// `[ellipticity, 1/ellipticity]`.
    WeightedEdge { n: usize, h: f64, coefficients: Vec<f64>, ellipticity: Option<f64> },
    /// Spectral power `Lˢ` of a base form, `s ∈ (0, 1)`, taken in the
    /// m-weighted eigenbasis.
    Fractional { base: Box<OperatorSpec>, s: f64 },
    /// An explicit matrix; symmetrized and checked for semidefiniteness.
    Dense { matrix: DMatrix<f64> },
}

impl OperatorSpec {
    /// Number of nodes the form acts on.
    pub fn dim(&self) -> usize {
        match self {
            Self::PathDirichlet { n, .. } | Self::PathNeumann { n, .. } | Self::WeightedEdge { n, .. } => *n,
            Self::Grid2dDirichlet { nx, ny, .. } => nx * ny,
            Self::Fractional { base, .. } => base.dim(),
            Self::Dense { matrix } => matrix.nrows(),
        }
    }
}

/// The quadratic form `E` together with the measure it lives over.
#[derive(Clone, Debug)]
pub struct BilinearForm {
    matrix: DMatrix<f64>,
    space: MeasureSpace,
    alpha: f64,
    kind: OperatorKind,
    coordinates: Vec<Vec<f64>>,
}

impl BilinearForm {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn space(&self) -> &MeasureSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Coercivity constant: `E(u) ≥ α ⟨u, u⟩_m`.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    /// Node coordinates (one entry per node; empty inner vectors for
    /// kinds without geometry).
    pub fn coordinates(&self) -> &[Vec<f64>] {
        &self.coordinates
    }

    /// `E(u) = uᵀ L u`.
    pub fn energy(&self, u: &[f64]) -> f64 {
        let u = DVector::from_column_slice(u);
        u.dot(&(&self.matrix * &u))
    }

    /// `M^{-1/2} L M^{-1/2}`; its ordinary eigenpairs are the generalized
    /// pairs of `(L, M)` up to the `M^{1/2}` rescaling of vectors.
    pub(crate) fn reduced_matrix(&self) -> DMatrix<f64> {
        reduce(&self.matrix, &self.space)
    }
}

fn reduce(l: &DMatrix<f64>, space: &MeasureSpace) -> DMatrix<f64> {
    let s = space.sqrt_weights();
    DMatrix::from_fn(l.nrows(), l.ncols(), |i, j| l[(i, j)] / (s[i] * s[j]))
}

fn symmetric_eigen(a: DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("matrix has non-finite entries".into()));
    }
    SymmetricEigen::try_new(a, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numeric("symmetric eigensolver did not converge".into()))
}

fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

fn check_h(h: f64) -> Result<()> {
    if h.is_finite() && h > 0.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("mesh size h must be positive, got {h}")))
    }
}

fn check_n(n: usize, what: &str) -> Result<()> {
    if n == 0 {
        Err(Error::Parameter(format!("{what} must be at least 1")))
    } else {
        Ok(())
    }
}

fn path_coords(n: usize, h: f64, offset: f64) -> Vec<Vec<f64>> {
    (0..n).map(|i| vec![(i as f64 + offset) * h]).collect()
}

fn weighted_path(n: usize, h: f64, coefficients: &[f64]) -> DMatrix<f64> {
    // edge e joins node e-1 and node e; nodes -1 and n are the eliminated
    // boundary values.
    let scale = 1.0 / (h * h);
    let mut l = DMatrix::zeros(n, n);
    for (e, a) in coefficients.iter().enumerate() {
        let w = a * scale;
        let left = e.checked_sub(1);
        let right = (e < n).then_some(e);
        if let Some(i) = left {
            l[(i, i)] += w;
        }
        if let Some(j) = right {
            l[(j, j)] += w;
        }
        if let (Some(i), Some(j)) = (left, right) {
            l[(i, j)] -= w;
            l[(j, i)] -= w;
        }
    }
    l
}

fn build_matrix(spec: &OperatorSpec, space: &MeasureSpace) -> Result<(DMatrix<f64>, Vec<Vec<f64>>)> {
    match spec {
        OperatorSpec::PathDirichlet { n, h } => {
            check_n(*n, "n")?;
            check_h(*h)?;
            Ok((weighted_path(*n, *h, &vec![1.0; n + 1]), path_coords(*n, *h, 1.0)))
        }
        OperatorSpec::PathNeumann { n, h } => {
            check_n(*n, "n")?;
            check_h(*h)?;
            let scale = 1.0 / (h * h);
            let mut l = DMatrix::zeros(*n, *n);
            for e in 1..*n {
                l[(e - 1, e - 1)] += scale;
                l[(e, e)] += scale;
                l[(e - 1, e)] -= scale;
                l[(e, e - 1)] -= scale;
            }
            Ok((l, path_coords(*n, *h, 0.0)))
        }
        OperatorSpec::Grid2dDirichlet { nx, ny, h } => {
            check_n(*nx, "nx")?;
            check_n(*ny, "ny")?;
            check_h(*h)?;
            let scale = 1.0 / (h * h);
            let d = nx * ny;
            let idx = |i: usize, j: usize| i + nx * j;
            let mut l = DMatrix::zeros(d, d);
            let mut coords = Vec::with_capacity(d);
            for j in 0..*ny {
                for i in 0..*nx {
                    let p = idx(i, j);
                    coords.push(vec![(i + 1) as f64 * h, (j + 1) as f64 * h]);
                    l[(p, p)] = 4.0 * scale;
                    if i + 1 < *nx {
                        l[(p, idx(i + 1, j))] = -scale;
                        l[(idx(i + 1, j), p)] = -scale;
                    }
                    if j + 1 < *ny {
                        l[(p, idx(i, j + 1))] = -scale;
                        l[(idx(i, j + 1), p)] = -scale;
                    }
                }
            }
            Ok((l, coords))
        }
        OperatorSpec::WeightedEdge { n, h, coefficients, ellipticity } => {
            check_n(*n, "n")?;
            check_h(*h)?;
            if coefficients.len() != n + 1 {
                return Err(Error::Parameter(format!(
                    "weighted_edge on {n} nodes needs {} edge coefficients, got {}",
                    n + 1,
                    coefficients.len()
                )));
            }
            if let Some(e) = coefficients.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
                return Err(Error::Parameter(format!("edge coefficient {e} is not positive")));
            }
            if let Some(ell) = ellipticity {
                if !(*ell > 0.0 && *ell <= 1.0) {
                    return Err(Error::Parameter(format!("ellipticity must lie in (0, 1], got {ell}")));
                }
                if let Some(a) = coefficients.iter().find(|a| **a < *ell || **a > 1.0 / ell) {
                    return Err(Error::Parameter(format!(
                        "edge coefficient {a} outside [{ell}, {}]",
                        1.0 / ell
                    )));
                }
            }
            Ok((weighted_path(*n, *h, coefficients), path_coords(*n, *h, 1.0)))
        }
        OperatorSpec::Fractional { base, s } => {
            if !(*s > 0.0 && *s < 1.0) {
                return Err(Error::Parameter(format!("fractional exponent must lie in (0, 1), got {s}")));
            }
            let base = build_operator(base, space)?;
            let eig = symmetric_eigen(base.reduced_matrix())?;
            let powered = eig.eigenvalues.map(|l| l.max(0.0).powf(*s));
            let q = &eig.eigenvectors;
            let a_s = q * DMatrix::from_diagonal(&powered) * q.transpose();
            let sq = space.sqrt_weights();
            let l = DMatrix::from_fn(a_s.nrows(), a_s.ncols(), |i, j| a_s[(i, j)] * sq[i] * sq[j]);
            Ok((l, base.coordinates))
        }
        OperatorSpec::Dense { matrix } => {
            if matrix.nrows() != matrix.ncols() {
                return Err(Error::Construction(format!(
                    "dense matrix must be square, got {}x{}",
                    matrix.nrows(),
                    matrix.ncols()
                )));
            }
            check_n(matrix.nrows(), "matrix size")?;
            Ok((matrix.clone(), vec![Vec::new(); matrix.nrows()]))
        }
    }
}

/// Builds and validates the form described by `spec` over `space`.
pub fn build_operator(spec: &OperatorSpec, space: &MeasureSpace) -> Result<BilinearForm> {
    check_dim(space.dim(), spec.dim())?;
    let (raw, coordinates) = build_matrix(spec, space)?;
    let matrix = (&raw + raw.transpose()) * 0.5;

    let scale = max_abs(&matrix).max(1.0);
    let euclid_min = symmetric_eigen(matrix.clone())?.eigenvalues.min();
    if euclid_min < -PSD_TOL * scale {
        return Err(Error::Construction(format!(
            "matrix is not positive semidefinite (smallest eigenvalue {euclid_min:e})"
        )));
    }

    let kind = match spec {
        OperatorSpec::PathDirichlet { .. } => OperatorKind::PathDirichlet,
        OperatorSpec::PathNeumann { .. } => OperatorKind::PathNeumann,
        OperatorSpec::Grid2dDirichlet { .. } => OperatorKind::Grid2dDirichlet,
        OperatorSpec::WeightedEdge { .. } => OperatorKind::WeightedEdge,
        OperatorSpec::Fractional { .. } => OperatorKind::Fractional,
        OperatorSpec::Dense { .. } => OperatorKind::Dense,
    };
    let mut form = BilinearForm { matrix, space: space.clone(), alpha: 0.0, kind, coordinates };
    form.alpha = coercivity_alpha(&form)?;
    Ok(form)
}

/// Smallest generalized eigenvalue of `L u = α M u`. Values within
/// `PSD_TOL · max|L|` of zero (either sign) are rounding noise and
/// reported as exactly zero.
pub fn coercivity_alpha(form: &BilinearForm) -> Result<f64> {
    let reduced = form.reduced_matrix();
    let scale = max_abs(&reduced).max(1.0);
    let min = symmetric_eigen(reduced)?.eigenvalues.min();
    if min.abs() <= PSD_TOL * scale {
        Ok(0.0)
    } else if min > 0.0 {
        Ok(min)
    } else {
        Err(Error::Numeric(format!("form is indefinite: smallest generalized eigenvalue {min:e}")))
    }
}

/// `E_V(u) = uᵀ L u + Σ mᵢ Vᵢ uᵢ²`.
pub fn form_value(form: &BilinearForm, v: &PotentialField, u: &StateVector) -> Result<f64> {
    check_dim(form.dim(), v.dim())?;
    check_dim(form.dim(), u.dim())?;
    let m = form.space().weights();
    let potential: f64 = (0..form.dim()).map(|i| m[i] * v.as_slice()[i] * u.as_slice()[i].powi(2)).sum();
    Ok(form.energy(u.as_slice()) + potential)
}

/// Reads a square matrix stored as rows of whitespace-separated reals.
/// Blank lines and lines starting with `#` are skipped.
pub fn read_dense_matrix(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let text = std::fs::read_to_string(path.as_ref())?;
    parse_dense_matrix(&text)
}

pub fn parse_dense_matrix(text: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>().map_err(|_| {
                    Error::Construction(format!("line {}: cannot parse {tok:?} as a number", lineno + 1))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let n = rows.len();
    if n == 0 {
        return Err(Error::Construction("matrix file is empty".into()));
    }
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(Error::Construction(format!(
            "matrix row {} has {} entries, expected {n}",
            i + 1,
            r.len()
        )));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_d(n: usize, h: f64) -> BilinearForm {
        build_operator(&OperatorSpec::PathDirichlet { n, h }, &MeasureSpace::counting(n)).unwrap()
    }

    fn generalized_eigenvalues(form: &BilinearForm) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(form.reduced_matrix()).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    #[test]
    fn path_dirichlet_stencil() {
        let f = path_d(3, 1.0);
        let expected = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0]);
        assert_eq!(f.matrix(), &expected);
        assert_eq!(f.kind(), OperatorKind::PathDirichlet);
    }

    #[test]
    fn path_neumann_kernel() {
        let f = build_operator(&OperatorSpec::PathNeumann { n: 2, h: 1.0 }, &MeasureSpace::counting(2)).unwrap();
        assert_eq!(f.matrix(), &DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
        assert_eq!(f.alpha(), 0.0);

        let f = build_operator(&OperatorSpec::PathNeumann { n: 17, h: 0.1 }, &MeasureSpace::counting(17)).unwrap();
        assert_eq!(f.alpha(), 0.0);
        assert!(f.energy(&[1.0; 17]).abs() < 1e-12);
    }

    #[test]
    fn alpha_of_path_dirichlet() {
        let f = path_d(3, 1.0);
        let closed = 4.0 * (std::f64::consts::PI / 8.0).sin().powi(2);
        assert!((f.alpha() - (2.0 - 2f64.sqrt())).abs() < 1e-12);
        assert!((f.alpha() - closed).abs() < 1e-12);
    }

    #[test]
    fn alpha_of_zero_matrix() {
        let f = build_operator(&OperatorSpec::Dense { matrix: DMatrix::zeros(3, 3) }, &MeasureSpace::counting(3))
            .unwrap();
        assert_eq!(coercivity_alpha(&f).unwrap(), 0.0);
    }

    #[test]
    fn alpha_respects_weights() {
        // L = diag(2, 6), m = (1, 3): generalized eigenvalues 2 and 2.
        let s = MeasureSpace::new(vec![1.0, 3.0]).unwrap();
        let f = build_operator(
            &OperatorSpec::Dense { matrix: DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 6.0]) },
            &s,
        )
        .unwrap();
        assert!((f.alpha() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn dense_rejects_indefinite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let err = build_operator(&OperatorSpec::Dense { matrix: m }, &MeasureSpace::counting(2)).unwrap_err();
        assert!(matches!(err, Error::Construction(_)));
    }

    #[test]
    fn dense_symmetrizes() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, 0.0, 2.0]);
        let f = build_operator(&OperatorSpec::Dense { matrix: m }, &MeasureSpace::counting(2)).unwrap();
        assert_eq!(f.matrix()[(0, 1)], -0.5);
        assert_eq!(f.matrix()[(1, 0)], -0.5);
    }

    #[test]
    fn fractional_half_of_path() {
        let s = MeasureSpace::counting(3);
        let spec = OperatorSpec::Fractional {
            base: Box::new(OperatorSpec::PathDirichlet { n: 3, h: 1.0 }),
            s: 0.5,
        };
        let f = build_operator(&spec, &s).unwrap();
        let ev = generalized_eigenvalues(&f);
        let expected = [(2.0 - 2f64.sqrt()).sqrt(), 2f64.sqrt(), (2.0 + 2f64.sqrt()).sqrt()];
        for (a, b) in ev.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn fractional_near_one_recovers_base() {
        let s = MeasureSpace::new((0..10).map(|i| 0.5 + 0.1 * i as f64).collect()).unwrap();
        let base = OperatorSpec::PathDirichlet { n: 10, h: 0.5 };
        let f1 = build_operator(&base, &s).unwrap();
        let fs = build_operator(&OperatorSpec::Fractional { base: Box::new(base), s: 1.0 - 1e-10 }, &s).unwrap();
        for (a, b) in generalized_eigenvalues(&f1).iter().zip(generalized_eigenvalues(&fs)) {
            assert!((a - b).abs() <= 1e-8 * a.abs().max(1.0));
        }
    }

    #[test]
    fn fractional_rejects_bad_exponent() {
        let spec = |s| OperatorSpec::Fractional { base: Box::new(OperatorSpec::PathDirichlet { n: 3, h: 1.0 }), s };
        for s in [0.0, 1.0, -0.3, 1.5] {
            assert!(matches!(build_operator(&spec(s), &MeasureSpace::counting(3)), Err(Error::Parameter(_))));
        }
    }

    #[test]
    fn unit_edges_equal_plain_stencil() {
        let n = 9;
        let s = MeasureSpace::counting(n);
        let plain = build_operator(&OperatorSpec::PathDirichlet { n, h: 0.3 }, &s).unwrap();
        let edge = build_operator(
            &OperatorSpec::WeightedEdge { n, h: 0.3, coefficients: vec![1.0; n + 1], ellipticity: Some(0.5) },
            &s,
        )
        .unwrap();
        assert_eq!(plain.matrix(), edge.matrix());
    }

    #[test]
    fn weighted_edge_checks_ellipticity() {
        let spec = OperatorSpec::WeightedEdge {
            n: 2,
            h: 1.0,
            coefficients: vec![1.0, 3.0, 1.0],
            ellipticity: Some(0.5),
        };
        assert!(matches!(build_operator(&spec, &MeasureSpace::counting(2)), Err(Error::Parameter(_))));
    }

    #[test]
    fn grid_stencil_is_kron_sum() {
        let (nx, ny) = (3, 2);
        let f = build_operator(&OperatorSpec::Grid2dDirichlet { nx, ny, h: 1.0 }, &MeasureSpace::counting(6)).unwrap();
        // eigenvalues are sums of 1D Dirichlet eigenvalues
        let mut expected = Vec::new();
        for a in 1..=nx {
            for b in 1..=ny {
                let lx = 4.0 * (a as f64 * std::f64::consts::PI / (2.0 * (nx + 1) as f64)).sin().powi(2);
                let ly = 4.0 * (b as f64 * std::f64::consts::PI / (2.0 * (ny + 1) as f64)).sin().powi(2);
                expected.push(lx + ly);
            }
        }
        expected.sort_by(f64::total_cmp);
        for (a, b) in generalized_eigenvalues(&f).iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn form_value_examples() {
        let f = path_d(3, 1.0);
        let s = f.space().clone();
        let eig = SymmetricEigen::new(f.matrix().clone());
        let k = eig.eigenvalues.imin();
        let u = StateVector::from_vector(&s, eig.eigenvectors.column(k).into_owned()).unwrap();
        let val = form_value(&f, &PotentialField::zeros(&s), &u).unwrap();
        assert!((val - (2.0 - 2f64.sqrt())).abs() < 1e-12);

        let z = build_operator(&OperatorSpec::Dense { matrix: DMatrix::zeros(2, 2) }, &MeasureSpace::counting(2)).unwrap();
        let s2 = z.space().clone();
        let v = PotentialField::new(&s2, vec![1.0, 2.0]).unwrap();
        assert_eq!(form_value(&z, &v, &StateVector::new(&s2, vec![1.0, 0.0]).unwrap()).unwrap(), 1.0);
        assert_eq!(form_value(&z, &v, &StateVector::new(&s2, vec![0.0, 0.0]).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn form_value_shift_covariance() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let s = MeasureSpace::new((0..8).map(|_| rng.random_range(0.2..2.0)).collect()).unwrap();
        let f = build_operator(&OperatorSpec::PathDirichlet { n: 8, h: 0.7 }, &s).unwrap();
        for _ in 0..50 {
            let v = PotentialField::new(&s, (0..8).map(|_| rng.random_range(-3.0..3.0)).collect()).unwrap();
            let u = StateVector::new(&s, (0..8).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
            let c = rng.random_range(-5.0..5.0);
            let lhs = form_value(&f, &v.shifted(c), &u).unwrap();
            let rhs = form_value(&f, &v, &u).unwrap() + c * u.norm().powi(2);
            assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let f = path_d(3, 1.0);
        let s2 = MeasureSpace::counting(2);
        let err = form_value(&f, &PotentialField::zeros(&s2), &StateVector::new(&s2, vec![1.0, 0.0]).unwrap());
        assert!(matches!(err, Err(Error::Dimension { .. })));
        assert!(build_operator(&OperatorSpec::PathDirichlet { n: 3, h: 1.0 }, &s2).is_err());
    }

    #[test]
    fn parse_matrix_text() {
        let m = parse_dense_matrix("# comment\n2 -1\n\n-1 2\n").unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]));
        assert!(parse_dense_matrix("1 2\n3\n").is_err());
        assert!(parse_dense_matrix("1 x\n3 4\n").is_err());
        assert!(parse_dense_matrix("").is_err());
    }
}
