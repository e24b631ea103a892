//! The ambient Hilbert space `L²(D, m)` over a finite index set.
//!
//! Every geometric quantity in the crate (norms, gradients, proximal maps)
//! is taken in the weighted inner product `⟨u, v⟩_m = Σ mᵢ uᵢ vᵢ`. The
//! Euclidean picture is the special case `m ≡ 1`.

use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{check_dim, Error, Result};

/// Finite measure space: `d` points with positive weights.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasureSpace {
    weights: Arc<[f64]>,
}

impl MeasureSpace {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Construction("measure space needs at least one point".into()));
        }
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w > 0.0))
        {
            return Err(Error::Construction(format!(
                "weight m[{i}] = {w} is not a positive finite number"
            )));
        }
        Ok(Self { weights: weights.into() })
    }

    pub fn uniform(d: usize, weight: f64) -> Result<Self> {
        Self::new(vec![weight; d])
    }

    /// Counting measure, `m ≡ 1`.
    pub fn counting(d: usize) -> Self {
        Self::uniform(d, 1.0).expect("counting measure on a nonempty set")
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub(crate) fn dot(&self, u: &[f64], v: &[f64]) -> f64 {
        debug_assert_eq!(u.len(), self.dim());
        debug_assert_eq!(v.len(), self.dim());
        self.weights
            .iter()
            .zip(u.iter().zip(v))
            .map(|(m, (a, b))| m * a * b)
            .sum()
    }

    pub(crate) fn norm(&self, u: &[f64]) -> f64 {
        self.dot(u, u).sqrt()
    }

    pub(crate) fn dist(&self, u: &[f64], v: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(u.iter().zip(v))
            .map(|(m, (a, b))| m * (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub(crate) fn mean(&self, v: &[f64]) -> f64 {
        self.weights.iter().zip(v).map(|(m, x)| m * x).sum::<f64>() / self.total_mass()
    }

    /// `M^{1/2}` as a vector of square-rooted weights.
    pub(crate) fn sqrt_weights(&self) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.weights.iter().map(|m| m.sqrt()))
    }
}

/// A Schrödinger potential `V: D → ℝ`.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialField {
    values: DVector<f64>,
    space: MeasureSpace,
}

impl PotentialField {
    pub fn new(space: &MeasureSpace, values: Vec<f64>) -> Result<Self> {
        check_dim(space.dim(), values.len())?;
        Ok(Self { values: DVector::from_vec(values), space: space.clone() })
    }

    pub fn from_vector(space: &MeasureSpace, values: DVector<f64>) -> Result<Self> {
        check_dim(space.dim(), values.len())?;
        Ok(Self { values, space: space.clone() })
    }

    pub fn constant(space: &MeasureSpace, c: f64) -> Self {
        Self { values: DVector::from_element(space.dim(), c), space: space.clone() }
    }

    pub fn zeros(space: &MeasureSpace) -> Self {
        Self::constant(space, 0.0)
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn as_slice(&self) -> &[f64] {
        self.values.as_slice()
    }

    pub fn space(&self) -> &MeasureSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn mean(&self) -> f64 {
        self.space.mean(self.as_slice())
    }

    pub fn norm(&self) -> f64 {
        self.space.norm(self.as_slice())
    }

    pub fn min(&self) -> f64 {
        self.values.min()
    }

    /// `Vᵢ ≥ floor` for every node.
    pub fn respects_floor(&self, floor: f64) -> bool {
        self.values.iter().all(|&v| v >= floor)
    }

    pub fn dot(&self, other: &Self) -> Result<f64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self.space.dot(self.as_slice(), other.as_slice()))
    }

    pub fn dist(&self, other: &Self) -> Result<f64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self.space.dist(self.as_slice(), other.as_slice()))
    }

    pub fn shifted(&self, c: f64) -> Self {
        self.map(|v| v + c)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { values: self.values.map(f), space: self.space.clone() }
    }

    pub(crate) fn with_values(&self, values: DVector<f64>) -> Self {
        debug_assert_eq!(values.len(), self.dim());
        Self { values, space: self.space.clone() }
    }

    /// `self + t · (other − self)`.
    pub fn lerp(&self, other: &Self, t: f64) -> Self {
        self.with_values(&self.values + (&other.values - &self.values) * t)
    }
}

/// A state `u ∈ L²(D, m)`, typically an eigenfunction.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    values: DVector<f64>,
    space: MeasureSpace,
}

impl StateVector {
    pub fn new(space: &MeasureSpace, values: Vec<f64>) -> Result<Self> {
        check_dim(space.dim(), values.len())?;
        Ok(Self { values: DVector::from_vec(values), space: space.clone() })
    }

    pub fn from_vector(space: &MeasureSpace, values: DVector<f64>) -> Result<Self> {
        check_dim(space.dim(), values.len())?;
        Ok(Self { values, space: space.clone() })
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn as_slice(&self) -> &[f64] {
        self.values.as_slice()
    }

    pub fn space(&self) -> &MeasureSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.space.norm(self.as_slice())
    }

    pub fn is_normalized(&self) -> bool {
        (self.space.dot(self.as_slice(), self.as_slice()) - 1.0).abs() <= 1e-10
    }
}

/// `⟨u, v⟩_m = Σ mᵢ uᵢ vᵢ`.
pub fn inner_product(u: &StateVector, v: &StateVector, space: &MeasureSpace) -> Result<f64> {
    check_dim(space.dim(), u.dim())?;
    check_dim(space.dim(), v.dim())?;
    Ok(space.dot(u.as_slice(), v.as_slice()))
}

/// The m-average `Σ mᵢ Vᵢ / Σ mᵢ`.
pub fn weighted_mean(v: &PotentialField) -> f64 {
    v.mean()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn state(space: &MeasureSpace, v: &[f64]) -> StateVector {
        StateVector::new(space, v.to_vec()).unwrap()
    }

    #[test]
    fn inner_product_examples() {
        let s = MeasureSpace::counting(2);
        assert_eq!(inner_product(&state(&s, &[1.0, 0.0]), &state(&s, &[1.0, 0.0]), &s).unwrap(), 1.0);

        let w = MeasureSpace::new(vec![2.0, 3.0]).unwrap();
        let ip = inner_product(&state(&w, &[1.0, 1.0]), &state(&w, &[1.0, -1.0]), &w).unwrap();
        assert_eq!(ip, -1.0);

        assert_eq!(inner_product(&state(&w, &[0.0, 0.0]), &state(&w, &[4.0, 7.0]), &w).unwrap(), 0.0);
    }

    #[test]
    fn inner_product_dimension_mismatch() {
        let s2 = MeasureSpace::counting(2);
        let s3 = MeasureSpace::counting(3);
        let u = state(&s3, &[1.0, 2.0, 3.0]);
        assert!(matches!(inner_product(&u, &u, &s2), Err(Error::Dimension { .. })));
    }

    #[test]
    fn weighted_mean_examples() {
        let s = MeasureSpace::new(vec![0.5, 2.0, 1.5]).unwrap();
        assert!((weighted_mean(&PotentialField::constant(&s, 3.25)) - 3.25).abs() < 1e-15);

        let s = MeasureSpace::counting(2);
        assert_eq!(weighted_mean(&PotentialField::new(&s, vec![0.0, 2.0]).unwrap()), 1.0);

        let s = MeasureSpace::new(vec![3.0, 1.0]).unwrap();
        assert_eq!(weighted_mean(&PotentialField::new(&s, vec![1.0, 4.0]).unwrap()), 1.75);
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(MeasureSpace::new(vec![]).is_err());
        assert!(MeasureSpace::new(vec![1.0, 0.0]).is_err());
        assert!(MeasureSpace::new(vec![1.0, f64::NAN]).is_err());
    }

    proptest! {
        #[test]
        fn cauchy_schwarz(
            data in prop::collection::vec((0.01f64..10.0, -5.0f64..5.0, -5.0f64..5.0), 1..20)
        ) {
            let s = MeasureSpace::new(data.iter().map(|t| t.0).collect()).unwrap();
            let u = state(&s, &data.iter().map(|t| t.1).collect::<Vec<_>>());
            let v = state(&s, &data.iter().map(|t| t.2).collect::<Vec<_>>());
            let uv = inner_product(&u, &v, &s).unwrap();
            let uu = inner_product(&u, &u, &s).unwrap();
            let vv = inner_product(&v, &v, &s).unwrap();
            prop_assert!(uv * uv <= uu * vv * (1.0 + 1e-12) + 1e-300);
        }

        #[test]
        fn mean_invariant_under_joint_permutation(
            data in prop::collection::vec((0.01f64..10.0, -5.0f64..5.0), 1..12),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let s = MeasureSpace::new(data.iter().map(|t| t.0).collect()).unwrap();
            let v = PotentialField::new(&s, data.iter().map(|t| t.1).collect()).unwrap();
            let mut shuffled = data.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let sp = MeasureSpace::new(shuffled.iter().map(|t| t.0).collect()).unwrap();
            let vp = PotentialField::new(&sp, shuffled.iter().map(|t| t.1).collect()).unwrap();
            prop_assert!((weighted_mean(&v) - weighted_mean(&vp)).abs() <= 1e-12 * (1.0 + weighted_mean(&v).abs()));
        }
    }
}
