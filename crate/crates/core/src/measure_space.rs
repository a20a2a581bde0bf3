//! Finite measure spaces, partitions standing in for sub-σ-algebras, and the
//! conditional expectation operator.
//!
//! On a finite space every point carries strictly positive mass, so "almost
//! everywhere" statements become pointwise statements and the essential
//! range of a function is its set of attained values. A sub-σ-algebra is
//! generated by a partition of the points; its conditional expectation is
//! the weighted block average.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::tolerance::LEVEL_TOL;
use crate::Scalar;

/// `n` points with strictly positive masses `μ(x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMeasureSpace {
    weights: Arc<[f64]>,
}

impl FiniteMeasureSpace {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptySpace);
        }
        if let Some((index, &value)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w > 0.0))
        {
            return Err(Error::InvalidWeight { index, value });
        }
        Ok(Self {
            weights: weights.into(),
        })
    }

    /// `n` points of equal mass `1/n`.
    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(vec![1.0 / n as f64; n])
    }

    pub fn point_count(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `⟨f, g⟩_μ = Σ f_i · conj(g_i) · μ_i`.
    pub fn inner(&self, f: &MeasurableFunction, g: &MeasurableFunction) -> Result<Scalar> {
        self.check(f, "weighted inner product")?;
        self.check(g, "weighted inner product")?;
        Ok(f.values
            .iter()
            .zip(g.values.iter())
            .zip(self.weights.iter())
            .map(|((a, b), m)| a * b.conj() * *m)
            .sum())
    }

    pub fn norm(&self, f: &MeasurableFunction) -> Result<f64> {
        Ok(self.inner(f, f)?.re.max(0.0).sqrt())
    }

    pub(crate) fn check(&self, f: &MeasurableFunction, context: &'static str) -> Result<()> {
        if f.len() != self.point_count() {
            return Err(Error::DimensionMismatch {
                context,
                expected: self.point_count(),
                found: f.len(),
            });
        }
        Ok(())
    }
}

/// A partition of the points into atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct SubSigmaAlgebra {
    blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
}

impl SubSigmaAlgebra {
    /// Validates that `blocks` partition `{0, .., point_count - 1}`.
    /// Members of each block are sorted; block order is preserved.
    pub fn new(point_count: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut block_of = vec![usize::MAX; point_count];
        let mut sorted = Vec::with_capacity(blocks.len());
        for (b, block) in blocks.into_iter().enumerate() {
            if block.is_empty() {
                return Err(Error::InvalidPartition(format!("block {b} is empty")));
            }
            let mut block = block;
            block.sort_unstable();
            for &i in &block {
                if i >= point_count {
                    return Err(Error::InvalidPartition(format!(
                        "index {i} in block {b} is out of range for {point_count} points"
                    )));
                }
                if block_of[i] != usize::MAX {
                    return Err(Error::InvalidPartition(format!(
                        "index {i} appears more than once"
                    )));
                }
                block_of[i] = b;
            }
            sorted.push(block);
        }
        if let Some(missing) = block_of.iter().position(|&b| b == usize::MAX) {
            return Err(Error::InvalidPartition(format!(
                "index {missing} is not covered by any block"
            )));
        }
        Ok(Self {
            blocks: sorted,
            block_of,
        })
    }

    /// The full σ-algebra: one atom per point, so `E` is the identity.
    pub fn discrete(point_count: usize) -> Self {
        Self {
            blocks: (0..point_count).map(|i| vec![i]).collect(),
            block_of: (0..point_count).collect(),
        }
    }

    /// The trivial σ-algebra: a single atom.
    pub fn trivial(point_count: usize) -> Self {
        Self {
            blocks: vec![(0..point_count).collect()],
            block_of: vec![0; point_count],
        }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn point_count(&self) -> usize {
        self.block_of.len()
    }

    pub fn block_of(&self, point: usize) -> usize {
        self.block_of[point]
    }

    pub fn is_discrete(&self) -> bool {
        self.blocks.len() == self.block_of.len()
    }

    pub(crate) fn check(&self, space: &FiniteMeasureSpace) -> Result<()> {
        if self.point_count() != space.point_count() {
            return Err(Error::DimensionMismatch {
                context: "sub-σ-algebra",
                expected: space.point_count(),
                found: self.point_count(),
            });
        }
        Ok(())
    }
}

/// One complex value per point.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurableFunction {
    values: Vec<Scalar>,
}

impl MeasurableFunction {
    pub fn new(space: &FiniteMeasureSpace, values: Vec<Scalar>) -> Result<Self> {
        let f = Self::from_values(values)?;
        space.check(&f, "measurable function")?;
        Ok(f)
    }

    /// Builds a function without tying it to a space; only finiteness is checked.
    pub fn from_values(values: Vec<Scalar>) -> Result<Self> {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { values })
    }

    pub fn from_real(space: &FiniteMeasureSpace, values: &[f64]) -> Result<Self> {
        Self::new(space, values.iter().map(|&v| Scalar::new(v, 0.0)).collect())
    }

    pub fn constant(space: &FiniteMeasureSpace, c: Scalar) -> Self {
        Self {
            values: vec![c; space.point_count()],
        }
    }

    pub fn zero(space: &FiniteMeasureSpace) -> Self {
        Self::constant(space, Scalar::new(0.0, 0.0))
    }

    pub(crate) fn from_raw(values: Vec<Scalar>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[Scalar] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Scalar> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize) -> Scalar {
        self.values[i]
    }

    pub fn map(&self, op: impl Fn(Scalar) -> Scalar) -> Self {
        Self {
            values: self.values.iter().map(|&v| op(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Self, op: impl Fn(Scalar, Scalar) -> Scalar) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                context: "pointwise operation",
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(Self {
            values: self
                .values
                .iter()
                .zip(other.values.iter())
                .map(|(&a, &b)| op(a, b))
                .collect(),
        })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    pub fn abs_sq(&self) -> Self {
        self.map(|v| Scalar::new(v.norm_sqr(), 0.0))
    }

    /// Real parts as plain floats.
    pub fn re(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }
}

/// Sorted set of point indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct IndexSet(Vec<usize>);

impl IndexSet {
    pub fn from_indices(mut members: Vec<usize>) -> Self {
        members.sort_unstable();
        members.dedup();
        Self(members)
    }

    pub fn full(point_count: usize) -> Self {
        Self((0..point_count).collect())
    }

    pub fn members(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn intersection(&self, other: &Self) -> Self {
        Self(
            self.0
                .iter()
                .copied()
                .filter(|&i| other.contains(i))
                .collect(),
        )
    }

    /// Indicator vector of length `point_count`.
    pub fn indicator(&self, point_count: usize) -> Vec<bool> {
        let mut chi = vec![false; point_count];
        for &i in &self.0 {
            chi[i] = true;
        }
        chi
    }
}

/// Weighted block average: constant on each atom `B`, with value
/// `Σ_{i∈B} f_i μ_i / Σ_{i∈B} μ_i`.
pub fn conditional_expectation(
    space: &FiniteMeasureSpace,
    algebra: &SubSigmaAlgebra,
    f: &MeasurableFunction,
) -> Result<MeasurableFunction> {
    algebra.check(space)?;
    space.check(f, "conditional expectation")?;
    let mu = space.weights();
    let mut out = vec![Scalar::new(0.0, 0.0); f.len()];
    for block in algebra.blocks() {
        let mass: f64 = block.iter().map(|&i| mu[i]).sum();
        let mean: Scalar = block.iter().map(|&i| f.values[i] * (mu[i] / mass)).sum();
        for &i in block {
            out[i] = mean;
        }
    }
    Ok(MeasurableFunction::from_raw(out))
}

pub fn weighted_inner(
    space: &FiniteMeasureSpace,
    f: &MeasurableFunction,
    g: &MeasurableFunction,
) -> Result<Scalar> {
    space.inner(f, g)
}

/// `S(f) = {i : |f_i| > tol}`.
pub fn support(f: &MeasurableFunction, tol: f64) -> IndexSet {
    IndexSet(
        f.values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.norm() > tol)
            .map(|(i, _)| i)
            .collect(),
    )
}

/// `max_i |f_i|`; every point has positive mass so this is the ess sup.
pub fn ess_sup_norm(f: &MeasurableFunction) -> f64 {
    f.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Distinct attained values, merging values within `tol` of a cluster's
/// centroid. Clusters are reported in order of first appearance.
pub fn ess_range(f: &MeasurableFunction, tol: f64) -> Vec<Scalar> {
    cluster_values(f.values.iter().copied(), tol)
}

pub(crate) fn cluster_values(values: impl IntoIterator<Item = Scalar>, tol: f64) -> Vec<Scalar> {
    let mut sums: Vec<(Scalar, usize)> = Vec::new();
    for v in values {
        match sums
            .iter_mut()
            .find(|(sum, count)| (*sum / *count as f64 - v).norm() <= tol)
        {
            Some((sum, count)) => {
                *sum += v;
                *count += 1;
            }
            None => sums.push((v, 1)),
        }
    }
    sums.into_iter().map(|(s, c)| s / c as f64).collect()
}

/// `{i : |f_i − λ| ≤ tol}`.
pub fn level_set(f: &MeasurableFunction, lambda: Scalar, tol: f64) -> IndexSet {
    IndexSet(
        f.values
            .iter()
            .enumerate()
            .filter(|(_, v)| (**v - lambda).norm() <= tol)
            .map(|(i, _)| i)
            .collect(),
    )
}

/// True iff `f` varies by at most `tol` inside every block.
pub fn is_algebra_measurable(f: &MeasurableFunction, algebra: &SubSigmaAlgebra, tol: f64) -> bool {
    f.len() == algebra.point_count()
        && algebra.blocks().iter().all(|block| {
            let first = f.values[block[0]];
            block.iter().all(|&i| (f.values[i] - first).norm() <= tol)
        })
}

/// [`is_algebra_measurable`] at the default level tolerance.
pub fn is_algebra_measurable_default(f: &MeasurableFunction, algebra: &SubSigmaAlgebra) -> bool {
    is_algebra_measurable(f, algebra, LEVEL_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Scalar {
        Scalar::new(re, 0.0)
    }

    fn real(space: &FiniteMeasureSpace, v: &[f64]) -> MeasurableFunction {
        MeasurableFunction::from_real(space, v).unwrap()
    }

    #[test]
    fn expectation_equal_weight_blocks() {
        let space = FiniteMeasureSpace::new(vec![1.0; 4]).unwrap();
        let alg = SubSigmaAlgebra::new(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        let ef =
            conditional_expectation(&space, &alg, &real(&space, &[1.0, 3.0, 5.0, 7.0])).unwrap();
        assert_eq!(ef.re(), vec![2.0, 2.0, 6.0, 6.0]);
    }

    #[test]
    fn expectation_on_discrete_algebra_is_identity() {
        let space = FiniteMeasureSpace::new(vec![0.3, 1.7, 2.0]).unwrap();
        let f = MeasurableFunction::new(
            &space,
            vec![Scalar::new(1.0, -2.0), c(4.0), Scalar::new(0.0, 3.0)],
        )
        .unwrap();
        let ef = conditional_expectation(&space, &SubSigmaAlgebra::discrete(3), &f).unwrap();
        assert_eq!(ef, f);
    }

    #[test]
    fn expectation_unequal_weights() {
        let space = FiniteMeasureSpace::new(vec![1.0, 3.0]).unwrap();
        let ef = conditional_expectation(
            &space,
            &SubSigmaAlgebra::trivial(2),
            &real(&space, &[2.0, 6.0]),
        )
        .unwrap();
        assert_eq!(ef.re(), vec![5.0, 5.0]);
    }

    #[test]
    fn expectation_rejects_mismatched_function() {
        let space = FiniteMeasureSpace::new(vec![1.0; 3]).unwrap();
        let f = MeasurableFunction::from_values(vec![c(1.0); 2]).unwrap();
        let err = conditional_expectation(&space, &SubSigmaAlgebra::trivial(3), &f).unwrap_err();
        assert!(matches!(
            err,
            Error::DimensionMismatch {
                expected: 3,
                found: 2,
                ..
            }
        ));
    }

    #[test]
    fn inner_product_examples() {
        let space = FiniteMeasureSpace::new(vec![1.0, 3.0]).unwrap();
        let ones = real(&space, &[1.0, 1.0]);
        assert_eq!(space.inner(&ones, &ones).unwrap(), c(4.0));
        let e1 = real(&space, &[1.0, 0.0]);
        let e2 = real(&space, &[0.0, 1.0]);
        assert_eq!(space.inner(&e1, &e2).unwrap(), c(0.0));
        let z = MeasurableFunction::zero(&space);
        assert_eq!(space.inner(&z, &z).unwrap(), c(0.0));
    }

    #[test]
    fn invalid_spaces_and_partitions() {
        assert_eq!(FiniteMeasureSpace::new(vec![]), Err(Error::EmptySpace));
        assert!(matches!(
            FiniteMeasureSpace::new(vec![1.0, 0.0]),
            Err(Error::InvalidWeight { index: 1, .. })
        ));
        assert!(FiniteMeasureSpace::new(vec![1.0, f64::NAN]).is_err());
        assert!(SubSigmaAlgebra::new(3, vec![vec![0, 1], vec![1, 2]]).is_err());
        assert!(SubSigmaAlgebra::new(3, vec![vec![0, 1]]).is_err());
        assert!(SubSigmaAlgebra::new(3, vec![vec![0, 1, 2], vec![]]).is_err());
        assert!(SubSigmaAlgebra::new(2, vec![vec![0, 5], vec![1]]).is_err());
        assert!(MeasurableFunction::from_values(vec![Scalar::new(f64::INFINITY, 0.0)]).is_err());
    }

    #[test]
    fn support_examples() {
        let space = FiniteMeasureSpace::uniform(4).unwrap();
        assert_eq!(
            support(&real(&space, &[0.0, 0.0, 2.0, 0.0]), 0.0).members(),
            &[2]
        );
        assert!(support(&MeasurableFunction::zero(&space), 0.0).is_empty());
        let two = FiniteMeasureSpace::uniform(2).unwrap();
        assert_eq!(support(&real(&two, &[1e-15, 1.0]), 1e-12).members(), &[1]);
    }

    #[test]
    fn ess_sup_examples() {
        let space = FiniteMeasureSpace::uniform(3).unwrap();
        assert_eq!(ess_sup_norm(&real(&space, &[1.0, -3.0, 2.0])), 3.0);
        assert_eq!(ess_sup_norm(&MeasurableFunction::zero(&space)), 0.0);
        let two = FiniteMeasureSpace::uniform(2).unwrap();
        let f = MeasurableFunction::new(&two, vec![Scalar::new(3.0, 4.0), c(1.0)]).unwrap();
        assert_eq!(ess_sup_norm(&f), 5.0);
    }

    #[test]
    fn ess_range_examples() {
        let space = FiniteMeasureSpace::uniform(4).unwrap();
        assert_eq!(
            ess_range(&real(&space, &[2.0, 2.0, 5.0, 5.0]), 1e-9),
            vec![c(2.0), c(5.0)]
        );
        assert_eq!(
            ess_range(
                &MeasurableFunction::constant(&space, Scalar::new(1.0, 1.0)),
                1e-9
            ),
            vec![Scalar::new(1.0, 1.0)]
        );
        let three = FiniteMeasureSpace::uniform(3).unwrap();
        let r = ess_range(&real(&three, &[1.0, 1.0 + 1e-12, 7.0]), 1e-9);
        assert_eq!(r.len(), 2);
        assert!((r[0] - c(1.0)).norm() < 1e-11);
        assert_eq!(r[1], c(7.0));
    }

    #[test]
    fn level_set_examples() {
        let space = FiniteMeasureSpace::uniform(4).unwrap();
        let f = real(&space, &[1.0, 1.0, 2.0, 3.0]);
        assert_eq!(level_set(&f, c(1.0), 0.0).members(), &[0, 1]);
        assert!(level_set(&f, c(9.0), 0.0).is_empty());
        let two = FiniteMeasureSpace::uniform(2).unwrap();
        assert_eq!(
            level_set(&real(&two, &[1.0 + 1e-12, 5.0]), c(1.0), 1e-9).members(),
            &[0]
        );
    }

    #[test]
    fn measurability_examples() {
        let space = FiniteMeasureSpace::uniform(4).unwrap();
        let alg = SubSigmaAlgebra::new(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        assert!(is_algebra_measurable(
            &real(&space, &[2.0, 2.0, 6.0, 6.0]),
            &alg,
            0.0
        ));
        assert!(!is_algebra_measurable(
            &real(&space, &[1.0, 2.0, 6.0, 6.0]),
            &alg,
            0.0
        ));
        assert!(is_algebra_measurable(
            &real(&space, &[1.0, 2.0, 3.0, 4.0]),
            &SubSigmaAlgebra::discrete(4),
            0.0
        ));
    }

    #[test]
    fn index_set_ops() {
        let a = IndexSet::from_indices(vec![3, 1, 1, 5]);
        assert_eq!(a.members(), &[1, 3, 5]);
        let b = IndexSet::from_indices(vec![5, 0, 3]);
        assert_eq!(a.intersection(&b).members(), &[3, 5]);
        assert_eq!(a.indicator(6), vec![false, true, false, true, false, true]);
    }
}
