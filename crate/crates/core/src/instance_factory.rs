//! Discretized worked examples and seeded random instances.
//!
//! Random instances are drawn from `ChaCha8Rng::seed_from_u64(seed)` in a
//! fixed order (weights, block assignment, `u`, `w`, block constants) so a
//! seed pins an instance exactly.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::measure_space::{FiniteMeasureSpace, MeasurableFunction, SubSigmaAlgebra};
use crate::wce_operator::WceOperator;
use crate::Scalar;

/// A measure space, a partition, and the two weight functions.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub space: FiniteMeasureSpace,
    pub algebra: SubSigmaAlgebra,
    pub u: MeasurableFunction,
    pub w: MeasurableFunction,
}

impl Instance {
    pub fn new(
        space: FiniteMeasureSpace,
        algebra: SubSigmaAlgebra,
        u: MeasurableFunction,
        w: MeasurableFunction,
    ) -> Result<Self> {
        algebra.check(&space)?;
        space.check(&u, "weight u")?;
        space.check(&w, "weight w")?;
        Ok(Self {
            space,
            algebra,
            u,
            w,
        })
    }

    pub fn to_wce(&self) -> Result<WceOperator> {
        WceOperator::new(&self.space, &self.algebra, &self.u, &self.w)
    }

    pub fn to_wce_with_support_tol(&self, tol: f64) -> Result<WceOperator> {
        WceOperator::with_support_tol(&self.space, &self.algebra, &self.u, &self.w, tol)
    }

    /// Same space, algebra and `u`, with `w ≡ 1` (the operator `E M_u`).
    pub fn with_unit_w(&self) -> Self {
        Self {
            w: MeasurableFunction::constant(&self.space, Scalar::new(1.0, 0.0)),
            ..self.clone()
        }
    }

    /// Hex SHA-256 over the little-endian bit patterns of weights, blocks,
    /// `u` and `w`, truncated to 16 characters.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for m in self.space.weights() {
            hasher.update(m.to_bits().to_le_bytes());
        }
        for block in self.algebra.blocks() {
            hasher.update((block.len() as u64).to_le_bytes());
            for &i in block {
                hasher.update((i as u64).to_le_bytes());
            }
        }
        for f in [&self.u, &self.w] {
            for v in f.values() {
                hasher.update(v.re.to_bits().to_le_bytes());
                hasher.update(v.im.to_bits().to_le_bytes());
            }
        }
        let digest = hasher.finalize();
        hex::encode(&digest[..8])
    }
}

/// Recipe for an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InstanceSpec {
    ProductExample {
        nx: usize,
        ny: usize,
    },
    SymmetricExample {
        n: usize,
    },
    Random {
        seed: u64,
        points: usize,
        blocks: usize,
        complex: bool,
    },
    Proportional {
        seed: u64,
        points: usize,
        blocks: usize,
    },
    Degenerate {
        seed: u64,
        points: usize,
        blocks: usize,
    },
}

impl InstanceSpec {
    pub fn build(&self) -> Result<Instance> {
        match *self {
            Self::ProductExample { nx, ny } => product_space_example(nx, ny),
            Self::SymmetricExample { n } => symmetric_interval_example(n),
            Self::Random {
                seed,
                points,
                blocks,
                complex,
            } => random_instance(seed, points, blocks, complex),
            Self::Proportional {
                seed,
                points,
                blocks,
            } => proportional_instance(seed, points, blocks),
            Self::Degenerate {
                seed,
                points,
                blocks,
            } => degenerate_instance(seed, points, blocks),
        }
    }
}

fn real(x: f64) -> Scalar {
    Scalar::new(x, 0.0)
}

/// Midpoint grid on `[0,1]²` with uniform masses; atoms are the columns of
/// constant `x`, so `E` integrates out `y`. `u = y^{x/8}`,
/// `w = √((4+x) y)`. Point `(i, j)` has index `i·ny + j`.
pub fn product_space_example(nx: usize, ny: usize) -> Result<Instance> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidParameter(format!(
            "grid sizes must be positive, got nx={nx}, ny={ny}"
        )));
    }
    let n = nx * ny;
    let space = FiniteMeasureSpace::new(vec![1.0 / n as f64; n])?;
    let blocks = (0..nx).map(|i| (i * ny..(i + 1) * ny).collect()).collect();
    let algebra = SubSigmaAlgebra::new(n, blocks)?;
    let mut u = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    for i in 0..nx {
        let x = product_column_x(nx, i);
        for j in 0..ny {
            let y = (j as f64 + 0.5) / ny as f64;
            u.push(real(y.powf(x / 8.0)));
            w.push(real(((4.0 + x) * y).sqrt()));
        }
    }
    Instance::new(
        space.clone(),
        algebra,
        MeasurableFunction::new(&space, u)?,
        MeasurableFunction::new(&space, w)?,
    )
}

/// `x` coordinate of column `i` in [`product_space_example`].
pub fn product_column_x(nx: usize, i: usize) -> f64 {
    (i as f64 + 0.5) / nx as f64
}

/// `2n` midpoints `±x_k`, `x_k = (k + 1/2)/n`, on `[−1,1]` with masses
/// `Δx/2`; atoms are the pairs `{x_k, −x_k}` so `Ef(x) = (f(x)+f(−x))/2`.
/// `u = x² − 1`, `w ≡ 1`. Point `2k` is `x_k`, point `2k+1` is `−x_k`.
pub fn symmetric_interval_example(n: usize) -> Result<Instance> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    let dx = 1.0 / n as f64;
    let space = FiniteMeasureSpace::new(vec![dx / 2.0; 2 * n])?;
    let algebra = SubSigmaAlgebra::new(2 * n, (0..n).map(|k| vec![2 * k, 2 * k + 1]).collect())?;
    let xs = symmetric_grid(n);
    let u = xs.iter().map(|x| real(x * x - 1.0)).collect();
    Instance::new(
        space.clone(),
        algebra,
        MeasurableFunction::new(&space, u)?,
        MeasurableFunction::constant(&space, real(1.0)),
    )
}

/// Grid coordinates of [`symmetric_interval_example`], in point order.
pub fn symmetric_grid(n: usize) -> Vec<f64> {
    (0..n)
        .flat_map(|k| {
            let x = (k as f64 + 0.5) / n as f64;
            [x, -x]
        })
        .collect()
}

fn check_sizes(points: usize, blocks: usize) -> Result<()> {
    if blocks == 0 || blocks > points {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= blocks <= points, got blocks={blocks}, points={points}"
        )));
    }
    Ok(())
}

/// Weights and a surjective block assignment.
fn random_skeleton(
    rng: &mut ChaCha8Rng,
    points: usize,
    blocks: usize,
) -> Result<(FiniteMeasureSpace, SubSigmaAlgebra)> {
    let weights = (0..points).map(|_| rng.random_range(0.1..=2.0)).collect();
    let space = FiniteMeasureSpace::new(weights)?;
    let mut order: Vec<usize> = (0..points).collect();
    order.shuffle(rng);
    let mut members = vec![Vec::new(); blocks];
    for (rank, &point) in order.iter().enumerate() {
        let b = if rank < blocks {
            rank
        } else {
            rng.random_range(0..blocks)
        };
        members[b].push(point);
    }
    let algebra = SubSigmaAlgebra::new(points, members)?;
    Ok((space, algebra))
}

fn random_values(rng: &mut ChaCha8Rng, points: usize, complex: bool) -> Vec<Scalar> {
    (0..points)
        .map(|_| {
            let re = rng.random_range(-1.0..=1.0);
            let im = if complex {
                rng.random_range(-1.0..=1.0)
            } else {
                0.0
            };
            Scalar::new(re, im)
        })
        .collect()
}

/// Weights uniform in `[0.1, 2]`, a random surjective partition, and `u`,
/// `w` with components uniform in `[−1, 1]`.
pub fn random_instance(seed: u64, points: usize, blocks: usize, complex: bool) -> Result<Instance> {
    check_sizes(points, blocks)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (space, algebra) = random_skeleton(&mut rng, points, blocks)?;
    let u = random_values(&mut rng, points, complex);
    let w = random_values(&mut rng, points, complex);
    Instance::new(
        space.clone(),
        algebra,
        MeasurableFunction::new(&space, u)?,
        MeasurableFunction::new(&space, w)?,
    )
}

/// Draws complex `u` and sets `w = c_B · ū` on each block `B`, with
/// `|c_B| ∈ [0.5, 2]` and a uniform phase. Then
/// `|E(uw)|² = E|u|² E|w|²` at every point.
pub fn proportional_instance(seed: u64, points: usize, blocks: usize) -> Result<Instance> {
    check_sizes(points, blocks)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (space, algebra) = random_skeleton(&mut rng, points, blocks)?;
    let u = random_values(&mut rng, points, true);
    let constants: Vec<Scalar> = (0..blocks)
        .map(|_| {
            let r = rng.random_range(0.5..=2.0);
            let theta = rng.random_range(0.0..std::f64::consts::TAU);
            Scalar::from_polar(r, theta)
        })
        .collect();
    let w = (0..points)
        .map(|i| constants[algebra.block_of(i)] * u[i].conj())
        .collect();
    Instance::new(
        space.clone(),
        algebra,
        MeasurableFunction::new(&space, u)?,
        MeasurableFunction::new(&space, w)?,
    )
}

/// A complex [`random_instance`] with `u` zeroed on the first block and,
/// when there are at least two blocks, `w` zeroed on the last, so that
/// `E|u|²` and `E|w|²` vanish on whole atoms.
pub fn degenerate_instance(seed: u64, points: usize, blocks: usize) -> Result<Instance> {
    let base = random_instance(seed, points, blocks, true)?;
    let zero = Scalar::new(0.0, 0.0);
    let mut u = base.u.into_values();
    let mut w = base.w.into_values();
    for &i in &base.algebra.blocks()[0] {
        u[i] = zero;
    }
    if blocks > 1 {
        for &i in &base.algebra.blocks()[blocks - 1] {
            w[i] = zero;
        }
    }
    Instance::new(
        base.space.clone(),
        base.algebra,
        MeasurableFunction::new(&base.space, u)?,
        MeasurableFunction::new(&base.space, w)?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure_space::{conditional_expectation, is_algebra_measurable};
    use crate::operator_algebra::WeightedOperator;
    use crate::operator_classes::is_quasi_star_a_definitional;

    #[test]
    fn random_is_deterministic() {
        let a = random_instance(7, 12, 4, true).unwrap();
        let b = random_instance(7, 12, 4, true).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_ne!(
            a.fingerprint(),
            random_instance(8, 12, 4, true).unwrap().fingerprint()
        );
    }

    #[test]
    fn random_golden_fingerprint() {
        let inst = random_instance(42, 8, 3, true).unwrap();
        assert_eq!(inst.fingerprint(), "f9d614118dd8e528");
    }

    #[test]
    fn random_ranges_and_partition() {
        let inst = random_instance(3, 20, 5, false).unwrap();
        assert!(inst
            .space
            .weights()
            .iter()
            .all(|&m| (0.1..=2.0).contains(&m)));
        assert_eq!(inst.algebra.block_count(), 5);
        assert!(inst
            .u
            .values()
            .iter()
            .all(|v| v.im == 0.0 && v.re.abs() <= 1.0));
    }

    #[test]
    fn full_block_count_gives_identity_expectation() {
        let inst = random_instance(11, 6, 6, true).unwrap();
        assert!(inst.algebra.is_discrete());
        let e = conditional_expectation(&inst.space, &inst.algebra, &inst.u).unwrap();
        assert_eq!(e, inst.u);
    }

    #[test]
    fn invalid_sizes_rejected() {
        assert!(random_instance(0, 3, 4, true).is_err());
        assert!(random_instance(0, 3, 0, true).is_err());
        assert!(proportional_instance(0, 2, 3).is_err());
        assert!(product_space_example(0, 3).is_err());
        assert!(symmetric_interval_example(0).is_err());
    }

    #[test]
    fn proportional_has_zero_gap_and_is_quasi_star_a() {
        for seed in 0..5 {
            let w = proportional_instance(seed, 10, 3)
                .unwrap()
                .to_wce()
                .unwrap();
            assert!(w
                .cauchy_schwarz_gap()
                .values()
                .iter()
                .all(|v| v.norm() < 1e-10));
            assert!(is_quasi_star_a_definitional(&w.to_matrix(), 1e-8).unwrap());
        }
    }

    #[test]
    fn unit_constants_and_unit_u_give_expectation() {
        let space = FiniteMeasureSpace::new(vec![1.0, 2.0, 3.0]).unwrap();
        let alg = SubSigmaAlgebra::new(3, vec![vec![0, 1], vec![2]]).unwrap();
        let one = MeasurableFunction::constant(&space, real(1.0));
        // c_B = 1, u = 1 ⇒ w = ū = 1 and T = E
        let t = WceOperator::new(&space, &alg, &one, &one.conj()).unwrap();
        let e = WeightedOperator::conditional_expectation(&space, &alg).unwrap();
        assert!(t.to_matrix().max_abs_diff(&e) < 1e-15);
    }

    #[test]
    fn degenerate_zeroes_whole_blocks() {
        let inst = degenerate_instance(5, 12, 4).unwrap();
        let w = inst.to_wce().unwrap();
        assert!(!w.support_s().contains(inst.algebra.blocks()[0][0]));
        assert!(!w.support_g().contains(inst.algebra.blocks()[3][0]));
    }

    #[test]
    fn product_example_layout() {
        let inst = product_space_example(3, 4).unwrap();
        assert_eq!(inst.space.point_count(), 12);
        assert_eq!(inst.algebra.blocks()[1], vec![4, 5, 6, 7]);
        assert!((inst.space.total_mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn product_example_moments_near_formulas() {
        let nx = 8;
        let w = product_space_example(nx, 200).unwrap().to_wce().unwrap();
        for i in 0..nx {
            let x = product_column_x(nx, i);
            let p = i * 200;
            assert!((w.moments().e_abs_u2.get(p).re - 4.0 / (4.0 + x)).abs() <= 0.01);
            assert!(
                (w.moments().e_abs_u2.get(p).re * w.moments().e_abs_w2.get(p).re - 2.0).abs()
                    <= 0.02
            );
            let expected = 64.0 * (4.0 + x) / (x + 12.0).powi(2);
            assert!((w.moments().e_uw.get(p).norm_sqr() - expected).abs() <= 0.02);
        }
    }

    #[test]
    fn symmetric_example_properties() {
        let inst = symmetric_interval_example(5).unwrap();
        let odd = MeasurableFunction::from_real(&inst.space, &symmetric_grid(5)).unwrap();
        let e = conditional_expectation(&inst.space, &inst.algebra, &odd).unwrap();
        assert!(e.values().iter().all(|v| v.norm() < 1e-15));
        let eu = conditional_expectation(&inst.space, &inst.algebra, &inst.u).unwrap();
        assert_eq!(eu, inst.u);
        assert!(is_algebra_measurable(&inst.u, &inst.algebra, 0.0));
        let t = inst.to_wce().unwrap().to_matrix();
        assert!(is_quasi_star_a_definitional(&t, 1e-8).unwrap());
    }

    #[test]
    fn spec_round_trips_through_serde() {
        let spec = InstanceSpec::Random {
            seed: 1,
            points: 6,
            blocks: 2,
            complex: true,
        };
        let json = serde_json::to_string(&spec).unwrap();
        let back: InstanceSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
        assert_eq!(
            back.build().unwrap(),
            random_instance(1, 6, 2, true).unwrap()
        );
    }
}
