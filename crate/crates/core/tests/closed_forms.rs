mod common;

use condexp::instance_factory::{
    degenerate_instance, product_column_x, product_space_example, proportional_instance,
    random_instance, symmetric_interval_example, Instance, InstanceSpec,
};
use condexp::measure_space::{conditional_expectation, is_algebra_measurable};
use condexp::operator_algebra::{
    aluthge_numeric, gram_power, is_partial_isometry, kernel, modulus, subspace_distance,
};
use condexp::operator_classes::{
    a_class_criterion, classify, is_a_class_definitional, is_quasi_star_a_definitional,
    normality_equivalence, quasi_star_a_criteria,
};
use condexp::spectral_analysis::{
    aluthge_norm_sequence, joint_point_spectrum, numeric_point_spectrum,
    sigma_p_equals_sigma_jp_check, spectrum_report,
};
use condexp::{Tolerances, WeightedOperator};
use proptest::prelude::*;

use common::{block_constant_u, diff, min_gap};

fn tols() -> Tolerances {
    Tolerances::default()
}

/// `(seed, points, blocks)` with `1 ≤ blocks ≤ points ≤ 16`.
fn sizes() -> impl Strategy<Value = (u64, usize, usize)> {
    (any::<u64>(), 1usize..=16)
        .prop_flat_map(|(seed, points)| (Just(seed), Just(points), 1..=points.min(6)))
}

fn scale(t: &WeightedOperator) -> f64 {
    1.0 + t.norm().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn norm_matches_largest_singular_value((seed, p, b) in sizes()) {
        let w = random_instance(seed, p, b, true).unwrap().to_wce().unwrap();
        let t = w.to_matrix();
        prop_assert!((w.norm_closed_form() - t.norm().unwrap()).abs() <= 1e-8 * scale(&t));
    }

    #[test]
    fn powers_match_spectral_calculus((seed, p, b) in sizes()) {
        let w = random_instance(seed, p, b, true).unwrap().to_wce().unwrap();
        let t = w.to_matrix();
        for q in [0.5, 1.0, 2.0, 3.5] {
            prop_assert!(diff(&w.tstar_t_power(q), &gram_power(&t, q).unwrap()) <= 1e-8);
            prop_assert!(diff(&w.t_tstar_power(q), &gram_power(&t.adjoint(), q).unwrap()) <= 1e-8);
        }
    }

    #[test]
    fn polar_parts_satisfy_the_polar_identities((seed, p, b) in sizes(), degenerate in any::<bool>()) {
        let instance = if degenerate {
            degenerate_instance(seed, p, b).unwrap()
        } else {
            random_instance(seed, p, b, true).unwrap()
        };
        let w = instance.to_wce().unwrap();
        let t = w.to_matrix();
        let parts = w.polar_closed_form();
        prop_assert!(parts.isometry.compose(&parts.modulus).unwrap().sub(&t).unwrap().norm().unwrap() <= 1e-8);
        prop_assert!(is_partial_isometry(&parts.isometry, 1e-8).unwrap());
        let gap = subspace_distance(
            w.space(),
            &kernel(&parts.isometry, 1e-7).unwrap(),
            &kernel(&parts.modulus, 1e-7).unwrap(),
        ).unwrap();
        prop_assert!(gap <= 1e-8);
        prop_assert!(diff(&parts.modulus, &modulus(&t).unwrap()) <= 1e-8);
    }

    #[test]
    fn aluthge_matches_oracle_and_is_idempotent((seed, p, b) in sizes()) {
        let w = random_instance(seed, p, b, true).unwrap().to_wce().unwrap();
        let closed = w.aluthge_closed_form();
        prop_assert!(diff(&closed, &aluthge_numeric(&w.to_matrix()).unwrap()) <= 1e-8);
        prop_assert!(diff(&w.aluthge_wce().unwrap().aluthge_closed_form(), &closed) <= 1e-8);
    }

    #[test]
    fn class_criteria_are_consistent((seed, p, b) in sizes(), kind in 0u8..3) {
        let instance = match kind {
            0 => random_instance(seed, p, b, true).unwrap(),
            1 => proportional_instance(seed, p, b).unwrap(),
            _ => degenerate_instance(seed, p, b).unwrap(),
        };
        for variant in [instance.clone(), instance.with_unit_w(), block_constant_u(&instance.with_unit_w())] {
            let w = variant.to_wce().unwrap();
            for verdict in classify(&w, &tols()).unwrap() {
                prop_assert!(verdict.consistent, "{:?}: {:?}", verdict.class_name, verdict.witness);
            }
        }
    }

    #[test]
    fn unit_weight_conditions_agree((seed, p, b) in sizes(), measurable in any::<bool>()) {
        let mut instance = random_instance(seed, p, b, true).unwrap().with_unit_w();
        if measurable {
            instance = block_constant_u(&instance);
        }
        let report = normality_equivalence(&instance.to_wce().unwrap(), &tols()).unwrap();
        prop_assert!(report.consistent);
        if measurable {
            prop_assert!(report.normal && report.quasi_star_a && report.u_measurable);
        }
    }

    #[test]
    fn cauchy_schwarz_gap_is_nonnegative((seed, p, b) in sizes(), kind in 0u8..3) {
        let instance = match kind {
            0 => random_instance(seed, p, b, true).unwrap(),
            1 => proportional_instance(seed, p, b).unwrap(),
            _ => degenerate_instance(seed, p, b).unwrap(),
        };
        prop_assert!(min_gap(&instance) >= -1e-9);
    }

    #[test]
    fn spectrum_and_radius_match((seed, p, b) in sizes()) {
        let w = random_instance(seed, p, b, true).unwrap().to_wce().unwrap();
        let report = spectrum_report(&w, &tols()).unwrap();
        prop_assert!(report.hausdorff_distance <= 1e-7 * scale(&w.to_matrix()));
        let r = report.spectral_radius_closed_form;
        prop_assert!((r - report.spectral_radius_numeric).abs() <= 1e-7 * r);
    }

    #[test]
    fn joint_point_spectrum_is_contained((seed, p, b) in sizes()) {
        let t = random_instance(seed, p, b, true).unwrap().to_wce().unwrap().to_matrix();
        let thr = 1e-7 * scale(&t);
        let point = numeric_point_spectrum(&t, &tols()).unwrap();
        for z in joint_point_spectrum(&t, &tols()).unwrap() {
            prop_assert!(point.iter().any(|v| (v - z).norm() <= thr));
        }
    }

    #[test]
    fn aluthge_norms_stabilize_at_the_radius((seed, p, b) in sizes()) {
        let w = random_instance(seed, p, b, true).unwrap().to_wce().unwrap();
        let r = w.spectral_radius_closed_form();
        let norms = aluthge_norm_sequence(&w.to_matrix(), 4).unwrap();
        for n in &norms {
            prop_assert!((n - r).abs() <= 1e-8 * (1.0 + r));
        }
    }

    #[test]
    fn quasi_star_a_has_equal_point_spectra((seed, p, b) in sizes()) {
        let t = proportional_instance(seed, p, b).unwrap().to_wce().unwrap().to_matrix();
        let check = sigma_p_equals_sigma_jp_check(&t, &tols()).unwrap();
        prop_assert!(check.quasi_star_a);
        prop_assert!(check.sets_equal, "{:?}", check.counterexamples);
    }

    #[test]
    fn generators_satisfy_invariants((seed, p, b) in sizes(), kind in 0u8..4) {
        let instance = match kind {
            0 => random_instance(seed, p, b, true).unwrap(),
            1 => random_instance(seed, p, b, false).unwrap(),
            2 => proportional_instance(seed, p, b).unwrap(),
            _ => degenerate_instance(seed, p, b).unwrap(),
        };
        check_instance(&instance, p, b);
    }
}

fn check_instance(instance: &Instance, points: usize, blocks: usize) {
    assert_eq!(instance.space.point_count(), points);
    assert!(instance
        .space
        .weights()
        .iter()
        .all(|m| m.is_finite() && *m > 0.0));
    assert_eq!(instance.algebra.block_count(), blocks);
    let mut seen = vec![false; points];
    for block in instance.algebra.blocks() {
        assert!(!block.is_empty());
        for &i in block {
            assert!(!seen[i]);
            seen[i] = true;
        }
    }
    assert!(seen.iter().all(|&s| s));
    assert_eq!(instance.u.len(), points);
    assert_eq!(instance.w.len(), points);
    assert!(instance
        .u
        .values()
        .iter()
        .chain(instance.w.values())
        .all(|v| v.re.is_finite() && v.im.is_finite()));
}

#[test]
fn generic_instances_fail_the_sufficient_criteria() {
    let mut failures = 0;
    for seed in 0..50 {
        let w = random_instance(seed, 12, 3, true)
            .unwrap()
            .to_wce()
            .unwrap();
        let a = a_class_criterion(&w, &tols()).unwrap();
        let q = quasi_star_a_criteria(&w, &tols()).unwrap();
        if a.sufficient_criterion == Some(false) && q.sufficient_criterion == Some(false) {
            failures += 1;
        }
    }
    assert_eq!(failures, 50);
}

#[test]
fn proportional_instances_pass_the_sufficient_criteria() {
    for seed in 0..50 {
        let w = proportional_instance(seed, 12, 3)
            .unwrap()
            .to_wce()
            .unwrap();
        let t = w.to_matrix();
        assert_eq!(
            a_class_criterion(&w, &tols()).unwrap().sufficient_criterion,
            Some(true)
        );
        assert_eq!(
            quasi_star_a_criteria(&w, &tols())
                .unwrap()
                .sufficient_criterion,
            Some(true)
        );
        assert!(is_a_class_definitional(&t, tols().psd).unwrap());
        assert!(is_quasi_star_a_definitional(&t, tols().psd).unwrap());
    }
}

#[test]
fn symmetric_example_is_quasi_star_a_with_equal_spectra() {
    let w = symmetric_interval_example(100).unwrap().to_wce().unwrap();
    let check = sigma_p_equals_sigma_jp_check(&w.to_matrix(), &tols()).unwrap();
    assert!(check.quasi_star_a);
    assert!(check.sets_equal);
    assert_eq!(check.point_spectrum.len(), 101);
}

#[test]
fn nilpotent_operator_has_strictly_smaller_joint_spectrum() {
    let space = condexp::FiniteMeasureSpace::new(vec![1.0, 1.0]).unwrap();
    let t = WeightedOperator::from_real_rows(&space, &[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
    let check = sigma_p_equals_sigma_jp_check(&t, &tols()).unwrap();
    assert!(!check.quasi_star_a);
    assert_eq!(check.point_spectrum.len(), 1);
    assert!(check.joint_point_spectrum.is_empty());
    assert!(check.holds);
}

/// Largest error over columns of `E|u|²`, `E|w|²` and `|E(uw)|²` against
/// the continuum values.
fn moment_errors(ny: usize) -> [f64; 3] {
    let nx = 8;
    let w = product_space_example(nx, ny).unwrap().to_wce().unwrap();
    let m = w.moments();
    let mut errors = [0.0f64; 3];
    for i in 0..nx {
        let x = product_column_x(nx, i);
        let p = i * ny;
        errors[0] = errors[0].max((m.e_abs_u2.get(p).re - 4.0 / (4.0 + x)).abs());
        errors[1] = errors[1].max((m.e_abs_w2.get(p).re - (4.0 + x) / 2.0).abs());
        errors[2] =
            errors[2].max((m.e_uw.get(p).norm_sqr() - 64.0 * (4.0 + x) / (x + 12.0).powi(2)).abs());
    }
    errors
}

#[test]
fn product_moments_converge() {
    let errors: Vec<[f64; 3]> = [50, 100, 200].into_iter().map(moment_errors).collect();
    for pair in errors.windows(2) {
        // y^{x/4} has an unbounded derivative at 0, so the midpoint rule
        // loses accuracy there: order 1 + x/4.
        let ratio = pair[0][0] / pair[1][0];
        assert!((ratio - 2.0).abs() <= 0.5, "E|u|^2 ratio {ratio}");
        // The midpoint rule integrates y exactly.
        assert!(pair[0][1] <= 1e-12 && pair[1][1] <= 1e-12);
        // y^{x/8 + 1/2}: order about 1.5.
        let ratio = pair[0][2] / pair[1][2];
        assert!(
            (ratio - 2f64.powf(1.5)).abs() <= 0.5,
            "|E(uw)|^2 ratio {ratio}"
        );
    }
}

#[test]
fn example_moments_are_algebra_measurable() {
    for instance in [
        product_space_example(4, 30).unwrap(),
        symmetric_interval_example(20).unwrap(),
    ] {
        let eu = conditional_expectation(&instance.space, &instance.algebra, &instance.u).unwrap();
        assert!(is_algebra_measurable(&eu, &instance.algebra, 1e-12));
    }
}

#[test]
fn specs_build_the_same_instances() {
    let spec = InstanceSpec::Random {
        seed: 3,
        points: 9,
        blocks: 2,
        complex: true,
    };
    assert_eq!(
        spec.build().unwrap(),
        random_instance(3, 9, 2, true).unwrap()
    );
}
