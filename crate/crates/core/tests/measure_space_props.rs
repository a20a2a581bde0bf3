use condexp::measure_space::{conditional_expectation, is_algebra_measurable};
use condexp::{FiniteMeasureSpace, MeasurableFunction, Scalar, SubSigmaAlgebra};
use proptest::prelude::*;

/// Weights, a partition given as a block label per point, and two functions.
fn setup() -> impl Strategy<
    Value = (
        FiniteMeasureSpace,
        SubSigmaAlgebra,
        MeasurableFunction,
        MeasurableFunction,
    ),
> {
    (1usize..24).prop_flat_map(|n| {
        (
            prop::collection::vec(0.05f64..3.0, n),
            prop::collection::vec(0usize..6, n),
            prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), n),
            prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), n),
        )
            .prop_map(move |(weights, labels, f, g)| {
                let mut blocks: Vec<Vec<usize>> = vec![Vec::new(); 6];
                for (i, &l) in labels.iter().enumerate() {
                    blocks[l].push(i);
                }
                blocks.retain(|b| !b.is_empty());
                let space = FiniteMeasureSpace::new(weights).unwrap();
                let algebra = SubSigmaAlgebra::new(n, blocks).unwrap();
                let to = |v: Vec<(f64, f64)>| {
                    MeasurableFunction::new(
                        &space,
                        v.into_iter().map(|(a, b)| Scalar::new(a, b)).collect(),
                    )
                    .unwrap()
                };
                let (f, g) = (to(f), to(g));
                (space, algebra, f, g)
            })
    })
}

fn max_diff(a: &MeasurableFunction, b: &MeasurableFunction) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn sup(f: &MeasurableFunction) -> f64 {
    f.values().iter().map(|v| v.norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn expectation_is_idempotent((space, algebra, f, _g) in setup()) {
        let ef = conditional_expectation(&space, &algebra, &f).unwrap();
        let eef = conditional_expectation(&space, &algebra, &ef).unwrap();
        prop_assert!(max_diff(&ef, &eef) <= 1e-12 * (1.0 + sup(&f)));
    }

    #[test]
    fn expectation_matches_weighted_block_mean((space, algebra, f, _g) in setup()) {
        let ef = conditional_expectation(&space, &algebra, &f).unwrap();
        prop_assert!(is_algebra_measurable(&ef, &algebra, 1e-12 * (1.0 + sup(&f))));
        let mu = space.weights();
        for block in algebra.blocks() {
            let mass: f64 = block.iter().map(|&i| mu[i]).sum();
            let mut mean = Scalar::new(0.0, 0.0);
            for &i in block {
                mean += f.get(i) * mu[i];
            }
            mean /= mass;
            for &i in block {
                prop_assert!((ef.get(i) - mean).norm() <= 1e-12 * (1.0 + sup(&f)));
            }
        }
    }

    #[test]
    fn expectation_is_self_adjoint((space, algebra, f, g) in setup()) {
        let ef = conditional_expectation(&space, &algebra, &f).unwrap();
        let eg = conditional_expectation(&space, &algebra, &g).unwrap();
        let lhs = space.inner(&ef, &g).unwrap();
        let rhs = space.inner(&f, &eg).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-11 * (1.0 + sup(&f) * sup(&g)) * space.total_mass());
    }

    #[test]
    fn expectation_is_positive((space, algebra, f, _g) in setup()) {
        let ef = conditional_expectation(&space, &algebra, &f.abs_sq()).unwrap();
        for v in ef.values() {
            prop_assert!(v.re >= 0.0 && v.im.abs() <= 1e-15);
        }
    }

    #[test]
    fn conditional_cauchy_schwarz((space, algebra, f, g) in setup()) {
        let efg = conditional_expectation(&space, &algebra, &f.mul(&g).unwrap()).unwrap();
        let ef2 = conditional_expectation(&space, &algebra, &f.abs_sq()).unwrap();
        let eg2 = conditional_expectation(&space, &algebra, &g.abs_sq()).unwrap();
        for i in 0..f.len() {
            let lhs = efg.get(i).norm_sqr();
            let rhs = ef2.get(i).re * eg2.get(i).re;
            prop_assert!(lhs <= rhs + 1e-12 * (1.0 + rhs));
        }
    }

    #[test]
    fn discrete_algebra_is_identity((space, _algebra, f, _g) in setup()) {
        let discrete = SubSigmaAlgebra::discrete(space.point_count());
        let ef = conditional_expectation(&space, &discrete, &f).unwrap();
        prop_assert!(max_diff(&ef, &f) == 0.0);
    }
}

#[test]
fn trivial_algebra_gives_the_mean() {
    let space = FiniteMeasureSpace::new(vec![1.0, 3.0]).unwrap();
    let f = MeasurableFunction::from_real(&space, &[4.0, 0.0]).unwrap();
    let ef = conditional_expectation(&space, &SubSigmaAlgebra::trivial(2), &f).unwrap();
    assert_eq!(ef.values(), &[Scalar::new(1.0, 0.0); 2]);
}

#[test]
fn invalid_inputs_are_rejected() {
    assert!(FiniteMeasureSpace::new(vec![1.0, 0.0]).is_err());
    assert!(FiniteMeasureSpace::new(vec![1.0, f64::NAN]).is_err());
    assert!(SubSigmaAlgebra::new(3, vec![vec![0, 1]]).is_err());
    assert!(SubSigmaAlgebra::new(2, vec![vec![0, 1], vec![1]]).is_err());
    let space = FiniteMeasureSpace::uniform(2).unwrap();
    let short =
        MeasurableFunction::from_real(&FiniteMeasureSpace::uniform(3).unwrap(), &[1.0; 3]).unwrap();
    assert!(conditional_expectation(&space, &SubSigmaAlgebra::discrete(2), &short).is_err());
}
