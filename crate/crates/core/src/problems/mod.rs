//! Benchmark instances, data sampling and the instance file format.

mod formula;
mod sampling;

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraints::{ConstraintError, ConstraintKind, ConstraintSet, ShapeConstraint};
use crate::expr::{ExpressionTree, ParseError};
use crate::interval::{Interval, IntervalBox};

pub use formula::{ConversionError, Dual, Formula, Function, Scalar};
pub use sampling::{
    in_extrapolation_band, inject_noise, population_std, sample_dataset, DatasetSplit,
    write_csv, SamplingError, Split, MAX_DRAWS, PARTITION_SIZE,
};

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("invalid instance file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot read instance file: {0}")]
    Io(#[from] std::io::Error),
    #[error("ground truth: {0}")]
    Expression(#[from] ParseError),
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
    #[error("unknown variable `{0}` in constraint")]
    UnknownVariable(String),
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("domain of `{0}` must be a bounded, non-empty interval")]
    InvalidDomain(String),
    #[error("derivative order must be 1 or 2, got {0}")]
    DerivativeOrder(u8),
    #[error("extrapolation fraction must lie in (0, 0.5), got {0}")]
    ExtrapolationFraction(f64),
    #[error("no instance named `{0}`")]
    NotFound(String),
}

/// On-disk instance description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub name: String,
    pub variables: Vec<VariableSpec>,
    /// Infix ground truth over the variable names.
    pub expression: String,
    pub constraints: ConstraintSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extrapolation_fraction: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableSpec {
    pub name: String,
    pub domain: Interval,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConstraintSpec {
    /// Image range plus one monotonicity sign per variable, over the whole
    /// domain.
    Tuple { range: Interval, signs: Vec<i32> },
    List(Vec<ConstraintEntry>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConstraintEntry {
    Image {
        target: Interval,
        #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
        region: BTreeMap<String, Interval>,
    },
    Derivative {
        variable: String,
        #[serde(default = "first_order")]
        order: u8,
        target: Interval,
        /// Restricted variables; the rest span their full domain.
        #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
        region: BTreeMap<String, Interval>,
    },
}

fn first_order() -> u8 {
    1
}

pub const DEFAULT_EXTRAPOLATION_FRACTION: f64 = 0.1;

#[derive(Clone, Debug)]
pub struct ProblemInstance {
    spec: InstanceSpec,
    names: Vec<String>,
    domain: IntervalBox,
    ground_truth: Formula,
    constraints: ConstraintSet,
}

impl ProblemInstance {
    pub fn from_spec(spec: InstanceSpec) -> Result<Self, InstanceError> {
        let mut names: Vec<String> = Vec::new();
        for v in &spec.variables {
            if names.contains(&v.name) {
                return Err(InstanceError::DuplicateVariable(v.name.clone()));
            }
            let d = v.domain;
            if d.is_undefined() || !d.lo().is_finite() || !d.hi().is_finite() || d.lo() >= d.hi() {
                return Err(InstanceError::InvalidDomain(v.name.clone()));
            }
            names.push(v.name.clone());
        }
        let domain = IntervalBox::new(spec.variables.iter().map(|v| v.domain).collect());
        let ground_truth = Formula::parse(&spec.expression, &names)?;
        if let Some(f) = spec.extrapolation_fraction {
            if !(f > 0.0 && f < 0.5) {
                return Err(InstanceError::ExtrapolationFraction(f));
            }
        }
        let constraints = match &spec.constraints {
            ConstraintSpec::Tuple { range, signs } => {
                ConstraintSet::from_tuple(*range, signs, &domain)?
            }
            ConstraintSpec::List(entries) => {
                let index = |n: &str| {
                    names
                        .iter()
                        .position(|m| m == n)
                        .ok_or_else(|| InstanceError::UnknownVariable(n.to_string()))
                };
                let region_box = |region: &BTreeMap<String, Interval>| {
                    let mut b = domain.clone();
                    for (n, iv) in region {
                        if iv.is_undefined() {
                            return Err(InstanceError::Constraint(ConstraintError::UndefinedTarget));
                        }
                        b = b.with(index(n)?, *iv);
                    }
                    Ok(b)
                };
                let mut set = ConstraintSet::empty();
                for e in entries {
                    let c = match e {
                        ConstraintEntry::Image { target, region } => {
                            ShapeConstraint::new(ConstraintKind::Image, *target, region_box(region)?)?
                        }
                        ConstraintEntry::Derivative {
                            variable,
                            order,
                            target,
                            region,
                        } => {
                            let j = index(variable)?;
                            let kind = match order {
                                1 => ConstraintKind::FirstDerivative(j),
                                2 => ConstraintKind::SecondDerivative(j),
                                o => return Err(InstanceError::DerivativeOrder(*o)),
                            };
                            ShapeConstraint::new(kind, *target, region_box(region)?)?
                        }
                    };
                    set.push(c);
                }
                set
            }
        };
        constraints.validate(&domain)?;
        Ok(Self {
            spec,
            names,
            domain,
            ground_truth,
            constraints,
        })
    }

    pub fn from_json(src: &str) -> Result<Self, InstanceError> {
        Self::from_spec(serde_json::from_str(src)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, InstanceError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn name(&self) -> &str {
        &self.spec.name
    }

    pub fn spec(&self) -> &InstanceSpec {
        &self.spec
    }

    pub fn variable_names(&self) -> &[String] {
        &self.names
    }

    pub fn n_variables(&self) -> usize {
        self.names.len()
    }

    pub fn domain(&self) -> &IntervalBox {
        &self.domain
    }

    pub fn ground_truth(&self) -> &Formula {
        &self.ground_truth
    }

    pub fn expression(&self) -> &str {
        &self.spec.expression
    }

    /// The ground truth in the tree representation, if it has one.
    pub fn ground_truth_tree(&self) -> Result<ExpressionTree, ConversionError> {
        self.ground_truth.to_tree(&self.domain)
    }

    pub fn constraints(&self) -> &ConstraintSet {
        &self.constraints
    }

    pub fn extrapolation_fraction(&self) -> Option<f64> {
        self.spec.extrapolation_fraction
    }
}

const BUILTIN_JSON: &str = include_str!("builtin.json");

/// The sixteen benchmark instances: thirteen physics formulas with
/// whole-domain constraints and three synthetic functions with constraints
/// split at their extrema.
pub fn builtin_instances() -> &'static [ProblemInstance] {
    static REGISTRY: OnceLock<Vec<ProblemInstance>> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        let specs: Vec<InstanceSpec> =
            serde_json::from_str(BUILTIN_JSON).expect("embedded instances parse");
        specs
            .into_iter()
            .map(|s| ProblemInstance::from_spec(s).expect("embedded instance is valid"))
            .collect()
    })
}

pub fn builtin_instance(name: &str) -> Option<&'static ProblemInstance> {
    builtin_instances().iter().find(|i| i.name() == name)
}

/// A builtin by name, otherwise an instance file at that path.
pub fn resolve_instance(name_or_path: &str) -> Result<ProblemInstance, InstanceError> {
    if let Some(i) = builtin_instance(name_or_path) {
        return Ok(i.clone());
    }
    if Path::new(name_or_path).is_file() {
        return ProblemInstance::load(name_or_path);
    }
    Err(InstanceError::NotFound(name_or_path.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sixteen_builtins() {
        let all = builtin_instances();
        assert_eq!(all.len(), 16);
        let i = builtin_instance("I.6.20").unwrap();
        assert_eq!(i.variable_names(), ["sigma", "theta"]);
        assert_eq!(i.domain(), &IntervalBox::from_bounds(&[(1.0, 3.0), (1.0, 3.0)]));
        assert_eq!(i.constraints().len(), 2);
        assert_eq!(i.constraints().constraints()[0].target, Interval::NON_NEGATIVE);
        assert_eq!(
            i.constraints().constraints()[1].kind,
            ConstraintKind::FirstDerivative(1)
        );
    }

    #[test]
    fn kotanchek_region_split() {
        let k = builtin_instance("Kotanchek").unwrap();
        assert_eq!(k.domain(), &IntervalBox::from_bounds(&[(-0.2, 4.2), (-0.2, 4.2)]));
        let cs = k.constraints().constraints();
        assert_eq!(cs[0].kind, ConstraintKind::Image);
        assert_eq!(cs[0].target, Interval::new(0.0, 1.0));
        let inc = cs
            .iter()
            .find(|c| c.kind == ConstraintKind::FirstDerivative(0) && c.target == Interval::NON_NEGATIVE)
            .unwrap();
        assert_eq!(inc.region[0], Interval::new(-0.2, 1.0));
        assert_eq!(inc.region[1], Interval::new(-0.2, 4.2));
        assert_eq!(k.extrapolation_fraction(), Some(0.1));
        assert_eq!(builtin_instance("Pagie").unwrap().extrapolation_fraction(), Some(0.3));
    }

    #[test]
    fn spec_round_trip() {
        for i in builtin_instances() {
            let s = serde_json::to_string(i.spec()).unwrap();
            let j = ProblemInstance::from_json(&s).unwrap();
            assert_eq!(j.spec(), i.spec());
            assert_eq!(j.constraints(), i.constraints());
        }
    }

    #[test]
    fn rejects_bad_files() {
        let base = r#"{"name":"t","variables":[{"name":"a","domain":[0,1]}],"expression":"a"#;
        let ok = format!(r#"{base}","constraints":{{"range":[0,"inf"],"signs":[1]}}}}"#);
        assert!(ProblemInstance::from_json(&ok).is_ok());
        let bad_var = format!(r#"{base}*b","constraints":{{"range":[0,"inf"],"signs":[1]}}}}"#);
        assert!(matches!(
            ProblemInstance::from_json(&bad_var),
            Err(InstanceError::Expression(_))
        ));
        let bad_signs = format!(r#"{base}","constraints":{{"range":[0,"inf"],"signs":[1,0]}}}}"#);
        assert!(matches!(
            ProblemInstance::from_json(&bad_signs),
            Err(InstanceError::Constraint(_))
        ));
        let bad_region = format!(
            r#"{base}","constraints":[{{"kind":"derivative","variable":"a","target":[0,"inf"],"region":{{"a":[0,2]}}}}]}}"#
        );
        assert!(matches!(
            ProblemInstance::from_json(&bad_region),
            Err(InstanceError::Constraint(ConstraintError::RegionOutsideDomain))
        ));
        let unbounded = r#"{"name":"t","variables":[{"name":"a","domain":[0,"inf"]}],"expression":"a","constraints":[]}"#;
        assert!(matches!(
            ProblemInstance::from_json(unbounded),
            Err(InstanceError::InvalidDomain(_))
        ));
    }
}
