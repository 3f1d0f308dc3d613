//! Shape constraints, pessimistic feasibility certification and soft-penalty
//! violation magnitudes.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{differentiate, ExpressionTree};
use crate::interval::{evaluate_interval_strict, Interval, IntervalBox};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstraintError {
    #[error("expected {expected} monotonicity signs, got {got}")]
    SignCount { expected: usize, got: usize },
    #[error("monotonicity sign must be -1, 0 or 1, got {0}")]
    InvalidSign(i32),
    #[error("constraint target must be a defined interval")]
    UndefinedTarget,
    #[error("constraint region is not inside the domain")]
    RegionOutsideDomain,
    #[error("variable index {index} out of range for {dims} dimensions")]
    VariableIndex { index: usize, dims: usize },
}

/// The quantity a constraint restricts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConstraintKind {
    /// The model output itself.
    Image,
    /// `d f / d x_j`
    FirstDerivative(usize),
    /// `d² f / d x_j²`
    SecondDerivative(usize),
}

impl ConstraintKind {
    pub fn variable(&self) -> Option<usize> {
        match *self {
            ConstraintKind::Image => None,
            ConstraintKind::FirstDerivative(j) | ConstraintKind::SecondDerivative(j) => Some(j),
        }
    }
}

/// `quantity(x) ∈ target` for all `x ∈ region`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeConstraint {
    pub kind: ConstraintKind,
    pub target: Interval,
    pub region: IntervalBox,
}

impl ShapeConstraint {
    pub fn new(
        kind: ConstraintKind,
        target: Interval,
        region: IntervalBox,
    ) -> Result<Self, ConstraintError> {
        if target.is_undefined() {
            return Err(ConstraintError::UndefinedTarget);
        }
        if let Some(j) = kind.variable() {
            if j >= region.dims() {
                return Err(ConstraintError::VariableIndex {
                    index: j,
                    dims: region.dims(),
                });
            }
        }
        Ok(Self {
            kind,
            target,
            region,
        })
    }

    pub fn non_negative(region: IntervalBox) -> Self {
        Self::new(ConstraintKind::Image, Interval::NON_NEGATIVE, region).unwrap()
    }

    pub fn non_decreasing(variable: usize, region: IntervalBox) -> Result<Self, ConstraintError> {
        Self::new(ConstraintKind::FirstDerivative(variable), Interval::NON_NEGATIVE, region)
    }

    pub fn non_increasing(variable: usize, region: IntervalBox) -> Result<Self, ConstraintError> {
        Self::new(ConstraintKind::FirstDerivative(variable), Interval::NON_POSITIVE, region)
    }

    pub fn convex(variable: usize, region: IntervalBox) -> Result<Self, ConstraintError> {
        Self::new(ConstraintKind::SecondDerivative(variable), Interval::NON_NEGATIVE, region)
    }

    pub fn concave(variable: usize, region: IntervalBox) -> Result<Self, ConstraintError> {
        Self::new(ConstraintKind::SecondDerivative(variable), Interval::NON_POSITIVE, region)
    }

    /// Penalty of an enclosure against this constraint's target: the sum of
    /// the lower and upper excess. Infinite target endpoints never
    /// contribute; an undefined enclosure is infinitely violated.
    pub fn penalty(&self, enclosure: Interval) -> f64 {
        if enclosure.is_undefined() {
            return f64::INFINITY;
        }
        let below = if self.target.lo().is_finite() {
            (enclosure.lo() - self.target.lo()).min(0.0).abs()
        } else {
            0.0
        };
        let above = if self.target.hi().is_finite() {
            (enclosure.hi() - self.target.hi()).max(0.0).abs()
        } else {
            0.0
        };
        below + above
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSet {
    constraints: Vec<ShapeConstraint>,
}

impl ConstraintSet {
    pub fn new(constraints: Vec<ShapeConstraint>) -> Self {
        Self { constraints }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// Expands the compact tuple notation `(range, s_1, ..., s_n)`: one image
    /// constraint plus a monotonicity constraint per nonzero sign, all over
    /// the full domain.
    pub fn from_tuple(
        range: Interval,
        signs: &[i32],
        domain: &IntervalBox,
    ) -> Result<Self, ConstraintError> {
        if signs.len() != domain.dims() {
            return Err(ConstraintError::SignCount {
                expected: domain.dims(),
                got: signs.len(),
            });
        }
        let mut constraints = vec![ShapeConstraint::new(
            ConstraintKind::Image,
            range,
            domain.clone(),
        )?];
        for (j, &s) in signs.iter().enumerate() {
            match s {
                0 => {}
                1 => constraints.push(ShapeConstraint::non_decreasing(j, domain.clone())?),
                -1 => constraints.push(ShapeConstraint::non_increasing(j, domain.clone())?),
                other => return Err(ConstraintError::InvalidSign(other)),
            }
        }
        Ok(Self { constraints })
    }

    pub fn constraints(&self) -> &[ShapeConstraint] {
        &self.constraints
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn push(&mut self, c: ShapeConstraint) {
        self.constraints.push(c);
    }

    /// Checks every region against `domain`.
    pub fn validate(&self, domain: &IntervalBox) -> Result<(), ConstraintError> {
        for c in &self.constraints {
            if !c.region.is_subset_of(domain) {
                return Err(ConstraintError::RegionOutsideDomain);
            }
            if let Some(j) = c.kind.variable() {
                if j >= domain.dims() {
                    return Err(ConstraintError::VariableIndex {
                        index: j,
                        dims: domain.dims(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// A model together with lazily computed derivative trees.
///
/// The cache is owned by the evaluator, so concurrent checks of distinct
/// models need no coordination.
pub struct ModelConstraints<'a> {
    model: &'a ExpressionTree,
    derivatives: HashMap<ConstraintKind, ExpressionTree>,
}

impl<'a> ModelConstraints<'a> {
    pub fn new(model: &'a ExpressionTree) -> Self {
        Self {
            model,
            derivatives: HashMap::new(),
        }
    }

    pub fn model(&self) -> &ExpressionTree {
        self.model
    }

    /// The tree whose values a constraint of `kind` restricts.
    pub fn quantity(&mut self, kind: ConstraintKind) -> &ExpressionTree {
        match kind {
            ConstraintKind::Image => self.model,
            ConstraintKind::FirstDerivative(j) => {
                let model = self.model;
                self.derivatives
                    .entry(kind)
                    .or_insert_with(|| differentiate(model, j))
            }
            ConstraintKind::SecondDerivative(j) => {
                if !self.derivatives.contains_key(&kind) {
                    let first = self.quantity(ConstraintKind::FirstDerivative(j)).clone();
                    self.derivatives.insert(kind, differentiate(&first, j));
                }
                &self.derivatives[&kind]
            }
        }
    }

    /// Strict enclosure: Undefined wherever a point of the region could
    /// evaluate to a non-finite value, so certification covers domain exits.
    pub fn enclosure(&mut self, c: &ShapeConstraint) -> Interval {
        evaluate_interval_strict(self.quantity(c.kind), &c.region)
    }
}

/// Interval enclosure of the quantity restricted by `c`.
pub fn evaluate_constraint(model: &ExpressionTree, c: &ShapeConstraint) -> Interval {
    ModelConstraints::new(model).enclosure(c)
}

/// Per-constraint soft penalties.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViolationVector {
    #[serde(with = "crate::serde_util::float_vec")]
    pub penalties: Vec<f64>,
    #[serde(with = "crate::serde_util::float")]
    pub total: f64,
    pub feasible: bool,
}

impl ViolationVector {
    pub fn from_penalties(penalties: Vec<f64>, any_undefined: bool) -> Self {
        let total: f64 = penalties.iter().sum();
        Self {
            feasible: total == 0.0 && !any_undefined,
            penalties,
            total,
        }
    }
}

pub fn violation(model: &ExpressionTree, cs: &ConstraintSet) -> ViolationVector {
    let mut mc = ModelConstraints::new(model);
    let mut undefined = false;
    let penalties = cs
        .constraints()
        .iter()
        .map(|c| {
            let f = mc.enclosure(c);
            undefined |= f.is_undefined();
            c.penalty(f)
        })
        .collect();
    ViolationVector::from_penalties(penalties, undefined)
}

/// Pessimistic feasibility: `true` only if every enclosure lies inside its
/// target. Stops at the first violated constraint.
pub fn is_feasible(model: &ExpressionTree, cs: &ConstraintSet) -> bool {
    let mut mc = ModelConstraints::new(model);
    cs.constraints()
        .iter()
        .all(|c| c.penalty(mc.enclosure(c)) == 0.0)
}
