mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scsr_core::constraints::{is_feasible, violation, ConstraintKind, ConstraintSet, ShapeConstraint};
use scsr_core::expr::{ExpressionTree, FunctionSet, Symbol};
use scsr_core::harness::{audit_feasibility, AuditVerdict};
use scsr_core::interval::Interval;

use common::{random_box, random_tree};

fn random_constraints(rng: &mut ChaCha8Rng, dims: usize) -> ConstraintSet {
    let region = random_box(rng, dims);
    let mut cs = ConstraintSet::empty();
    let targets = [Interval::NON_NEGATIVE, Interval::NON_POSITIVE, Interval::new(-5.0, 5.0)];
    for _ in 0..rng.gen_range(1..=3) {
        let kind = match rng.gen_range(0..3) {
            0 => ConstraintKind::Image,
            1 => ConstraintKind::FirstDerivative(rng.gen_range(0..dims)),
            _ => ConstraintKind::SecondDerivative(rng.gen_range(0..dims)),
        };
        let target = targets[rng.gen_range(0..targets.len())];
        cs.push(ShapeConstraint::new(kind, target, region.clone()).unwrap());
    }
    cs
}

/// Positive combination of exp and tanh of positively weighted variables:
/// non-decreasing in every variable.
fn monotone_tree(rng: &mut ChaCha8Rng, dims: usize) -> ExpressionTree {
    let mut tree = ExpressionTree::constant(rng.gen_range(-1.0..1.0));
    for _ in 0..rng.gen_range(1..=4) {
        let var = ExpressionTree::variable(rng.gen_range(0..dims), rng.gen_range(0.1..2.0));
        let f = if rng.gen_bool(0.5) { Symbol::Exp } else { Symbol::Tanh };
        let term = ExpressionTree::binary(
            Symbol::Mul,
            ExpressionTree::constant(rng.gen_range(0.1..3.0)),
            ExpressionTree::unary(f, var),
        );
        tree = ExpressionTree::binary(Symbol::Add, tree, term);
    }
    tree
}

#[test]
fn certified_random_models_pass_the_audit() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut certified = 0;
    for pair in 0..1500 {
        let tree = random_tree(&mut rng, FunctionSet::F4, 20, 2);
        let cs = random_constraints(&mut rng, 2);
        let verdict = violation(&tree, &cs);
        assert_eq!(verdict.feasible, is_feasible(&tree, &cs));
        if !verdict.feasible {
            continue;
        }
        certified += 1;
        let audit = audit_feasibility(&tree, &cs, 5_000, &mut rng);
        assert_eq!(audit, AuditVerdict::Feasible, "pair {pair}: {}", tree.to_infix());
    }
    assert!(certified >= 200, "only {certified} certified pairs");
}

#[test]
fn monotone_constructions_are_certified_and_audited() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..20 {
        let tree = monotone_tree(&mut rng, 3);
        let region = random_box(&mut rng, 3);
        let cs = ConstraintSet::new(
            (0..3)
                .map(|j| ShapeConstraint::non_decreasing(j, region.clone()).unwrap())
                .collect(),
        );
        assert!(is_feasible(&tree, &cs), "{}", tree.to_infix());
        assert!(audit_feasibility(&tree, &cs, 100_000, &mut rng).is_feasible());
    }
}

#[test]
fn audit_finds_what_certification_rejects_on_clear_violations() {
    // sin over a full period is neither monotone nor non-negative
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let tree = ExpressionTree::parse("sin(x0)", &[]).unwrap();
    let region = scsr_core::interval::IntervalBox::from_bounds(&[(0.0, 10.0)]);
    let cs = ConstraintSet::new(vec![
        ShapeConstraint::non_negative(region.clone()),
        ShapeConstraint::non_decreasing(0, region).unwrap(),
    ]);
    assert!(!is_feasible(&tree, &cs));
    match audit_feasibility(&tree, &cs, 10_000, &mut rng) {
        AuditVerdict::Infeasible { violated } => assert_eq!(violated.len(), 2),
        AuditVerdict::Feasible => panic!("audit missed a violation"),
    }
}
