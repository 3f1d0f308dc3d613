use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constraints::{violation, ViolationVector};
use crate::data::Dataset;
use crate::evolution::{run, Algorithm, AlgorithmConfig};
use crate::expr::{ExpressionTree, FunctionSet, ModelSpaceConfig};
use crate::metrics::nmse;
use crate::problems::{sample_dataset, DatasetSplit, ProblemInstance, Split};

use super::audit::{audit_feasibility, AuditVerdict, DEFAULT_AUDIT_SAMPLES};
use super::grid::Cell;

/// Budget and evaluation settings shared by every run of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSettings {
    pub population_size: usize,
    /// `None` uses the algorithm default (500, or 50 with local optimization).
    pub generations: Option<usize>,
    pub max_evaluations: usize,
    pub local_opt_iterations: usize,
    pub paper_faithful: bool,
    /// Points per constraint for the post-hoc audit; 0 skips it.
    pub audit_samples: usize,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            population_size: 1000,
            generations: None,
            max_evaluations: 500_000,
            local_opt_iterations: 10,
            paper_faithful: false,
            audit_samples: DEFAULT_AUDIT_SAMPLES,
        }
    }
}

impl RunSettings {
    pub fn algorithm_config(&self, algorithm: Algorithm, model_space: ModelSpaceConfig, seed: u64) -> AlgorithmConfig {
        let mut c = AlgorithmConfig::new(algorithm, model_space, seed);
        c.population_size = self.population_size;
        if let Some(g) = self.generations {
            c.generations = g;
        }
        c.max_evaluations = self.max_evaluations;
        c.local_opt_iterations = self.local_opt_iterations;
        c.paper_faithful = self.paper_faithful;
        c
    }
}

/// Everything needed to reproduce one run.
#[derive(Clone, Debug)]
pub struct RunSpec {
    pub instance: ProblemInstance,
    pub algorithm: Algorithm,
    pub noise_level: f64,
    pub split: Split,
    pub cell: Cell,
    pub repetition: usize,
    /// Seeds the data sample (shared across algorithms and noise levels).
    pub data_seed: u64,
    /// Seeds the algorithm and the audit.
    pub seed: u64,
    pub settings: RunSettings,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunRole {
    /// A direct run with a fixed configuration.
    Single,
    /// One grid cell evaluated during a grid search.
    Cell,
    /// The grid winner trained again with a fresh seed.
    Retrained,
    /// The best run of the winning cell, reused as is.
    Incumbent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: String,
    pub algorithm: Algorithm,
    #[serde(with = "crate::serde_util::float")]
    pub noise_level: f64,
    pub split: Split,
    pub max_length: usize,
    pub function_set: FunctionSet,
    pub repetition: usize,
    pub data_seed: u64,
    pub seed: u64,
    pub role: RunRole,
    /// Infix form of the returned (scaled) model.
    pub model: Option<String>,
    #[serde(with = "crate::serde_util::float")]
    pub nmse_train: f64,
    #[serde(with = "crate::serde_util::float")]
    pub nmse_validation: f64,
    #[serde(with = "crate::serde_util::float")]
    pub nmse_test: f64,
    /// Interval certificate of the returned model.
    pub certified_feasible: Option<bool>,
    pub violation: Option<ViolationVector>,
    pub audit: Option<AuditVerdict>,
    pub evaluations: usize,
    #[serde(with = "crate::serde_util::float")]
    pub wall_time_secs: f64,
    pub error: Option<String>,
}

impl RunRecord {
    fn skeleton(spec: &RunSpec, role: RunRole) -> Self {
        Self {
            instance: spec.instance.name().to_string(),
            algorithm: spec.algorithm,
            noise_level: spec.noise_level,
            split: spec.split,
            max_length: spec.cell.max_length,
            function_set: spec.cell.function_set,
            repetition: spec.repetition,
            data_seed: spec.data_seed,
            seed: spec.seed,
            role,
            model: None,
            nmse_train: f64::NAN,
            nmse_validation: f64::NAN,
            nmse_test: f64::NAN,
            certified_feasible: None,
            violation: None,
            audit: None,
            evaluations: 0,
            wall_time_secs: 0.0,
            error: None,
        }
    }

    pub fn failed(spec: &RunSpec, role: RunRole, error: String) -> Self {
        let mut r = Self::skeleton(spec, role);
        r.error = Some(error);
        r
    }

    pub fn is_success(&self) -> bool {
        self.error.is_none() && self.model.is_some()
    }

    /// Re-parses the stored model.
    pub fn parsed_model(&self) -> Option<ExpressionTree> {
        self.model.as_deref().and_then(|m| ExpressionTree::parse(m, &[]).ok())
    }

    /// `Some(true)` if the audit found a violation.
    pub fn audit_infeasible(&self) -> Option<bool> {
        self.audit.as_ref().map(|a| !a.is_feasible())
    }
}

fn score(model: &ExpressionTree, data: &Dataset) -> f64 {
    nmse(data.target(), &model.evaluate_batch(data.columns(), data.rows())).unwrap_or(f64::NAN)
}

/// Samples the data for `spec` and runs it.
pub fn execute_run(spec: &RunSpec) -> RunRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.data_seed);
    match sample_dataset(&spec.instance, spec.noise_level, spec.split, &mut rng) {
        Ok(data) => execute_run_on(spec, &data, RunRole::Single),
        Err(e) => {
            let mut r = RunRecord::skeleton(spec, RunRole::Single);
            r.error = Some(format!("sampling failed: {e}"));
            r
        }
    }
}

/// Runs `spec` on already sampled data. Failures are reported in the record.
pub fn execute_run_on(spec: &RunSpec, data: &DatasetSplit, role: RunRole) -> RunRecord {
    let start = Instant::now();
    let mut rec = RunRecord::skeleton(spec, role);
    let ms = ModelSpaceConfig::new(spec.cell.function_set, spec.cell.max_length, spec.instance.n_variables());
    let config = spec.settings.algorithm_config(spec.algorithm, ms, spec.seed);
    let constraints = spec.instance.constraints();
    match run(&config, &data.train, constraints) {
        Ok(result) => {
            let model = result.best.model();
            rec.nmse_train = score(&model, &data.train);
            rec.nmse_validation = score(&model, &data.validation);
            rec.nmse_test = score(&model, &data.test);
            let v = violation(&model, constraints);
            rec.certified_feasible = Some(v.feasible);
            rec.violation = Some(v);
            if spec.settings.audit_samples > 0 {
                let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x9e37_79b9_7f4a_7c15);
                rec.audit = Some(audit_feasibility(&model, constraints, spec.settings.audit_samples, &mut rng));
            }
            rec.model = Some(model.to_infix());
            rec.evaluations = result.evaluations;
        }
        Err(e) => rec.error = Some(e.to_string()),
    }
    rec.wall_time_secs = start.elapsed().as_secs_f64();
    rec
}
