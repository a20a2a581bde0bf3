#![allow(dead_code)]

use condexp::instance_factory::{
    degenerate_instance, proportional_instance, random_instance, Instance,
};
use condexp::measure_space::conditional_expectation;
use condexp::{MeasurableFunction, WeightedOperator};

/// Deterministic size draw: `1 ≤ points ≤ max_points`, `1 ≤ blocks ≤ min(max_blocks, points)`.
pub fn sizes(seed: u64, max_points: usize, max_blocks: usize) -> (usize, usize) {
    let mix = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).rotate_left(17);
    let points = 1 + (mix % max_points as u64) as usize;
    let blocks = 1 + ((mix >> 20) % max_blocks.min(points) as u64) as usize;
    (points, blocks)
}

pub fn random(seed: u64, max_points: usize, max_blocks: usize) -> Instance {
    let (p, b) = sizes(seed, max_points, max_blocks);
    random_instance(seed, p, b, true).unwrap()
}

pub fn proportional(seed: u64, max_points: usize, max_blocks: usize) -> Instance {
    let (p, b) = sizes(seed, max_points, max_blocks);
    proportional_instance(seed, p, b).unwrap()
}

pub fn degenerate(seed: u64, max_points: usize, max_blocks: usize) -> Instance {
    let (p, b) = sizes(seed, max_points, max_blocks);
    degenerate_instance(seed, p, b).unwrap()
}

/// Replaces `u` by its block averages, so `u` is measurable for the partition.
pub fn block_constant_u(instance: &Instance) -> Instance {
    let eu = conditional_expectation(&instance.space, &instance.algebra, &instance.u).unwrap();
    Instance {
        u: eu,
        ..instance.clone()
    }
}

pub fn diff(a: &WeightedOperator, b: &WeightedOperator) -> f64 {
    a.max_abs_diff(b)
}

pub fn min_gap(instance: &Instance) -> f64 {
    let w = instance.to_wce().unwrap();
    w.cauchy_schwarz_gap()
        .values()
        .iter()
        .map(|g| g.re)
        .fold(f64::INFINITY, f64::min)
}

pub fn function(values: &[(f64, f64)]) -> MeasurableFunction {
    MeasurableFunction::from_values(
        values
            .iter()
            .map(|&(re, im)| condexp::Scalar::new(re, im))
            .collect(),
    )
    .unwrap()
}
