use crate::constraints::{is_feasible, violation, ConstraintSet};
use crate::data::Dataset;
use crate::expr::ExpressionTree;
use crate::metrics::{mean_and_variance, nmse_with_variance};

use super::EvaluatedIndividual;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitnessMode {
    Unconstrained,
    /// Infeasible models get the rejection sentinel. With
    /// `check_before_fitting` the certificate is computed for the tree as it
    /// was before local optimization and scaling.
    Constrained { check_before_fitting: bool },
    /// NMSE plus one penalty per constraint, no rejection.
    MultiObjective,
}

/// Least-squares `(slope, intercept)` mapping predictions onto targets.
/// Zero-variance or non-finite predictions give `(0, mean(y))`.
pub fn linear_scale(predictions: &[f64], targets: &[f64]) -> (f64, f64) {
    let (my, _) = mean_and_variance(targets);
    let (mp, vp) = mean_and_variance(predictions);
    if !(vp.is_finite() && vp > 0.0) {
        return (0.0, my);
    }
    let n = targets.len() as f64;
    let cov = predictions
        .iter()
        .zip(targets)
        .map(|(p, y)| (p - mp) * (y - my))
        .sum::<f64>()
        / n;
    let slope = cov / vp;
    let intercept = my - slope * mp;
    if slope.is_finite() && intercept.is_finite() {
        (slope, intercept)
    } else {
        (0.0, my)
    }
}

/// Scores `tree` on `data`.
///
/// `raw` is the tree before local optimization; it is only consulted for the
/// check-before-fitting constrained mode.
pub fn fitness(
    tree: ExpressionTree,
    raw: Option<&ExpressionTree>,
    data: &Dataset,
    constraints: &ConstraintSet,
    mode: FitnessMode,
    sentinel: f64,
) -> EvaluatedIndividual {
    let y = data.target();
    let (_, var_y) = mean_and_variance(y);
    let pred = tree.evaluate_batch(data.columns(), data.rows());
    let n_obj = match mode {
        FitnessMode::MultiObjective => 1 + constraints.len(),
        _ => 1,
    };
    if pred.iter().any(|p| !p.is_finite()) {
        let mut objectives = vec![f64::INFINITY; n_obj];
        objectives[0] = sentinel;
        return EvaluatedIndividual {
            tree,
            nmse_train: sentinel,
            objectives,
            feasible: false,
            scaling: (1.0, 0.0),
        };
    }
    let (a, b) = linear_scale(&pred, y);
    let scaled: Vec<f64> = pred.iter().map(|p| a * p + b).collect();
    let mut nmse = nmse_with_variance(y, &scaled, var_y).min(sentinel);
    let (feasible, objectives) = match mode {
        FitnessMode::Unconstrained => (false, vec![nmse]),
        FitnessMode::Constrained {
            check_before_fitting,
        } => {
            let ok = if check_before_fitting {
                is_feasible(raw.unwrap_or(&tree), constraints)
            } else {
                is_feasible(&tree.scaled(a, b), constraints)
            };
            if !ok {
                nmse = sentinel;
            }
            (ok, vec![nmse])
        }
        FitnessMode::MultiObjective => {
            let v = violation(&tree.scaled(a, b), constraints);
            let mut obj = Vec::with_capacity(n_obj);
            obj.push(nmse);
            obj.extend(v.penalties);
            (v.feasible, obj)
        }
    };
    EvaluatedIndividual {
        tree,
        nmse_train: nmse,
        objectives,
        feasible,
        scaling: (a, b),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::ShapeConstraint;
    use crate::expr::Symbol;
    use crate::interval::IntervalBox;
    use crate::metrics::REJECTION_SENTINEL;

    fn line_data() -> Dataset {
        let x: Vec<f64> = (0..20).map(|i| i as f64 / 19.0).collect();
        let y = x.iter().map(|v| 2.0 * v + 1.0).collect();
        Dataset::new(vec![x], y)
    }

    fn non_negative() -> ConstraintSet {
        ConstraintSet::new(vec![ShapeConstraint::non_negative(IntervalBox::from_bounds(&[(0.0, 1.0)]))])
    }

    #[test]
    fn scaling_examples() {
        let y = [1.0, 4.0, -2.0, 0.5];
        assert_eq!(linear_scale(&y, &y), (1.0, 0.0));
        let p: Vec<f64> = y.iter().map(|v| 2.0 * v + 3.0).collect();
        let (a, b) = linear_scale(&p, &y);
        assert!((a - 0.5).abs() < 1e-15 && (b + 1.5).abs() < 1e-15);
        assert_eq!(linear_scale(&[7.0; 4], &y), (0.0, 0.875));
    }

    #[test]
    fn constant_is_the_mean_predictor() {
        let d = line_data();
        let e = fitness(
            ExpressionTree::constant(5.0),
            None,
            &d,
            &non_negative(),
            FitnessMode::MultiObjective,
            REJECTION_SENTINEL,
        );
        assert!((e.nmse_train - 100.0).abs() < 1e-12);
        assert_eq!(e.objectives[1..], [0.0]);
        assert!(e.feasible);
    }

    #[test]
    fn rejection_and_scaling() {
        let d = line_data();
        let x = ExpressionTree::variable(0, -3.0);
        // -3x scales back to 2x + 1, which is feasible
        let e = fitness(
            x.clone(),
            None,
            &d,
            &non_negative(),
            FitnessMode::Constrained {
                check_before_fitting: false,
            },
            REJECTION_SENTINEL,
        );
        assert!(e.feasible && e.nmse_train < 1e-20);
        // the raw tree -3x is negative on the domain
        let e = fitness(
            x.clone(),
            Some(&x),
            &d,
            &non_negative(),
            FitnessMode::Constrained {
                check_before_fitting: true,
            },
            REJECTION_SENTINEL,
        );
        assert!(!e.feasible);
        assert_eq!(e.nmse_train, REJECTION_SENTINEL);
        // log(x - 2) is undefined on the data
        let bad = ExpressionTree::unary(
            Symbol::Log,
            ExpressionTree::binary(Symbol::Sub, x, ExpressionTree::constant(2.0)),
        );
        for mode in [FitnessMode::Unconstrained, FitnessMode::MultiObjective] {
            let e = fitness(bad.clone(), None, &d, &non_negative(), mode, REJECTION_SENTINEL);
            assert_eq!(e.nmse_train, REJECTION_SENTINEL);
            assert!(e.objectives[1..].iter().all(|p| *p == f64::INFINITY));
        }
    }
}
