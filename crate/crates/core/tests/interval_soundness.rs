mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scsr_core::expr::{ExpressionTree, FunctionSet};
use scsr_core::interval::{evaluate_interval, Interval, IntervalBox};

use common::{random_box, random_tree, uniform_point};

#[test]
fn enclosures_contain_sampled_values_on_unit_cube() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cube = IntervalBox::from_bounds(&[(1.0, 2.0); 3]);
    for _ in 0..1000 {
        let tree = random_tree(&mut rng, FunctionSet::F4, 30, 3);
        let enc = evaluate_interval(&tree, &cube);
        for _ in 0..1000 {
            let p = uniform_point(&mut rng, &cube);
            let v = tree.evaluate(&p);
            if v.is_finite() {
                assert!(enc.contains(v), "{} at {p:?} = {v} outside {enc:?}", tree.to_infix());
            }
        }
    }
}

#[test]
fn subtraction_of_a_variable_from_itself() {
    let tree = ExpressionTree::parse("x0 - x0", &[]).unwrap();
    let enc = evaluate_interval(&tree, &IntervalBox::from_bounds(&[(1.0, 2.0)]));
    assert!(enc.lo() <= -1.0 && enc.lo() > -1.0 - 1e-12);
    assert!(enc.hi() >= 1.0 && enc.hi() < 1.0 + 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn soundness_on_random_boxes(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tree = random_tree(&mut rng, FunctionSet::F4, 25, 3);
        let b = random_box(&mut rng, 3);
        let enc = evaluate_interval(&tree, &b);
        for _ in 0..200 {
            let p = uniform_point(&mut rng, &b);
            let v = tree.evaluate(&p);
            if v.is_finite() {
                prop_assert!(enc.contains(v), "{} at {:?} = {} outside {:?}", tree.to_infix(), p, v, enc);
            }
        }
    }

    #[test]
    fn inclusion_monotonicity(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tree = random_tree(&mut rng, FunctionSet::F4, 25, 2);
        let outer = random_box(&mut rng, 2);
        let inner: Vec<(f64, f64)> = outer
            .intervals()
            .iter()
            .map(|d| {
                let a = d.lo() + d.width() * rng.gen::<f64>();
                let b = d.lo() + d.width() * rng.gen::<f64>();
                (a.min(b), a.max(b))
            })
            .collect();
        let inner = IntervalBox::from_bounds(&inner);
        prop_assert!(inner.is_subset_of(&outer));
        let big = evaluate_interval(&tree, &outer);
        let small = evaluate_interval(&tree, &inner);
        if !small.is_undefined() {
            prop_assert!(!big.is_undefined(), "{}: {:?} vs undefined", tree.to_infix(), small);
            prop_assert!(small.is_subset_of(&big), "{}: {:?} not in {:?}", tree.to_infix(), small, big);
        }
    }

    #[test]
    fn degenerate_box_is_tight(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tree = random_tree(&mut rng, FunctionSet::F4, 20, 2);
        let p = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
        let v = tree.evaluate(&p);
        prop_assume!(v.is_finite());
        // rounding slack grows with the magnitude fed into sin and friends
        let moderate = (0..tree.len()).all(|i| {
            let sub = ExpressionTree::from_nodes(tree.subtree(i).to_vec()).unwrap();
            sub.evaluate(&p).abs() < 1e3
        });
        prop_assume!(moderate);
        let enc = evaluate_interval(&tree, &IntervalBox::new(p.iter().map(|&x| Interval::point(x)).collect()));
        prop_assert!(enc.contains(v));
        prop_assert!(enc.width() <= 1e-9 * (1.0 + v.abs()), "{}: width {}", tree.to_infix(), enc.width());
    }
}
