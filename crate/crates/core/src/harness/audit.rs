//! Post-hoc feasibility audit by dense uniform sampling.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::constraints::{ConstraintKind, ConstraintSet, ShapeConstraint};
use crate::expr::{differentiate, ExpressionTree};
use crate::problems::Formula;

/// Absolute slack allowed beyond a target bound.
pub const AUDIT_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_AUDIT_SAMPLES: usize = 100_000;
const CHUNK: usize = 8192;

/// Something whose value and partial derivatives can be evaluated pointwise.
pub trait PointModel {
    /// The constrained quantity at each row of column-major `columns`.
    fn quantity(&self, kind: ConstraintKind, columns: &[Vec<f64>], rows: usize) -> Vec<f64>;
}

impl PointModel for ExpressionTree {
    fn quantity(&self, kind: ConstraintKind, columns: &[Vec<f64>], rows: usize) -> Vec<f64> {
        match kind {
            ConstraintKind::Image => self.evaluate_batch(columns, rows),
            ConstraintKind::FirstDerivative(j) => differentiate(self, j).evaluate_batch(columns, rows),
            ConstraintKind::SecondDerivative(j) => {
                differentiate(&differentiate(self, j), j).evaluate_batch(columns, rows)
            }
        }
    }
}

impl PointModel for Formula {
    fn quantity(&self, kind: ConstraintKind, columns: &[Vec<f64>], rows: usize) -> Vec<f64> {
        let mut point = vec![0.0; columns.len()];
        (0..rows)
            .map(|r| {
                for (p, c) in point.iter_mut().zip(columns) {
                    *p = c[r];
                }
                match kind {
                    ConstraintKind::Image => self.value(&point),
                    ConstraintKind::FirstDerivative(j) => self.partial(&point, j),
                    ConstraintKind::SecondDerivative(j) => self.second_partial(&point, j),
                }
            })
            .collect()
    }
}

/// A constraint breached at one or more sampled points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditViolation {
    /// Position in the constraint set.
    pub index: usize,
    pub kind: ConstraintKind,
    /// Number of offending samples.
    pub samples: usize,
    /// A sampled input at which the constraint is breached.
    #[serde(with = "crate::serde_util::float_vec")]
    pub witness: Vec<f64>,
    #[serde(with = "crate::serde_util::float")]
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum AuditVerdict {
    Feasible,
    Infeasible { violated: Vec<AuditViolation> },
}

impl AuditVerdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self, AuditVerdict::Feasible)
    }
}

fn breaches(c: &ShapeConstraint, v: f64) -> bool {
    !v.is_finite() || v < c.target.lo() - AUDIT_TOLERANCE || v > c.target.hi() + AUDIT_TOLERANCE
}

/// Samples `n_samples` uniform points in each constraint's region and checks
/// the model's value or partial derivative there. Non-finite values count as
/// violations.
pub fn audit_feasibility(
    model: &dyn PointModel,
    constraints: &ConstraintSet,
    n_samples: usize,
    rng: &mut impl Rng,
) -> AuditVerdict {
    let mut violated = Vec::new();
    for (index, c) in constraints.constraints().iter().enumerate() {
        let dims = c.region.dims();
        let mut hit: Option<AuditViolation> = None;
        let mut done = 0;
        while done < n_samples {
            let rows = CHUNK.min(n_samples - done);
            let columns: Vec<Vec<f64>> = c
                .region
                .intervals()
                .iter()
                .map(|d| (0..rows).map(|_| d.lo() + (d.hi() - d.lo()) * rng.gen::<f64>()).collect())
                .collect();
            let values = model.quantity(c.kind, &columns, rows);
            for (r, &v) in values.iter().enumerate() {
                if breaches(c, v) {
                    let h = hit.get_or_insert_with(|| AuditViolation {
                        index,
                        kind: c.kind,
                        samples: 0,
                        witness: (0..dims).map(|j| columns[j][r]).collect(),
                        value: v,
                    });
                    h.samples += 1;
                }
            }
            done += rows;
        }
        violated.extend(hit);
    }
    if violated.is_empty() {
        AuditVerdict::Feasible
    } else {
        AuditVerdict::Infeasible { violated }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::{Interval, IntervalBox};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn negative_constant_violates_image() {
        let dom = IntervalBox::from_bounds(&[(0.0, 1.0)]);
        let cs = ConstraintSet::from_tuple(Interval::NON_NEGATIVE, &[0], &dom).unwrap();
        let v = audit_feasibility(&ExpressionTree::constant(-1.0), &cs, 100, &mut ChaCha8Rng::seed_from_u64(0));
        match v {
            AuditVerdict::Infeasible { violated } => {
                assert_eq!(violated.len(), 1);
                assert_eq!(violated[0].kind, ConstraintKind::Image);
                assert_eq!(violated[0].samples, 100);
            }
            AuditVerdict::Feasible => panic!("expected a violation"),
        }
    }

    #[test]
    fn domain_exit_is_infeasible() {
        let dom = IntervalBox::from_bounds(&[(-1.0, 1.0)]);
        let cs = ConstraintSet::from_tuple(Interval::ENTIRE, &[0], &dom).unwrap();
        let t = ExpressionTree::unary(crate::expr::Symbol::Log, ExpressionTree::variable(0, 1.0));
        let v = audit_feasibility(&t, &cs, 1000, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(!v.is_feasible());
    }

    #[test]
    fn formula_and_tree_agree() {
        let names = vec!["a".to_string(), "b".to_string()];
        let f = Formula::parse("a*b + exp(-a)", &names).unwrap();
        let dom = IntervalBox::from_bounds(&[(1.0, 3.0), (1.0, 3.0)]);
        let t = f.to_tree(&dom).unwrap();
        let cols = vec![vec![1.0, 2.5], vec![2.0, 1.5]];
        for kind in [
            ConstraintKind::Image,
            ConstraintKind::FirstDerivative(0),
            ConstraintKind::SecondDerivative(0),
        ] {
            let a = f.quantity(kind, &cols, 2);
            let b = t.quantity(kind, &cols, 2);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
