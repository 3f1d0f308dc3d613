#![allow(dead_code)]

use rand::Rng;
use scsr_core::expr::{ptc2_random_tree, ExpressionTree, FunctionSet, ModelSpaceConfig};
use scsr_core::interval::IntervalBox;

pub fn random_tree(rng: &mut impl Rng, function_set: FunctionSet, max_length: usize, n_variables: usize) -> ExpressionTree {
    let cfg = ModelSpaceConfig::new(function_set, max_length, n_variables);
    let len = rng.gen_range(1..=max_length);
    ptc2_random_tree(&cfg, len, rng).unwrap()
}

/// Box with lower bounds in [-3, 3] and widths in [0, 3].
pub fn random_box(rng: &mut impl Rng, dims: usize) -> IntervalBox {
    let bounds: Vec<(f64, f64)> = (0..dims)
        .map(|_| {
            let lo = rng.gen_range(-3.0..3.0);
            (lo, lo + rng.gen_range(0.0..3.0))
        })
        .collect();
    IntervalBox::from_bounds(&bounds)
}

pub fn uniform_point(rng: &mut impl Rng, b: &IntervalBox) -> Vec<f64> {
    b.intervals()
        .iter()
        .map(|d| d.lo() + (d.hi() - d.lo()) * rng.gen::<f64>())
        .collect()
}
