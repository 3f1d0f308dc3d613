//! The algorithm families: single-objective GP with hard constraint rejection,
//! memetic variants with parameter fitting, and multi-objective NSGA-II and
//! MOEA/D with one soft-penalty objective per constraint.

mod archive;
mod engine;
mod fitness;
mod gp;
mod local_opt;
mod moead;
mod nsga2;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraints::ConstraintSet;
use crate::data::Dataset;
use crate::expr::{ConfigError, ExpressionTree, FunctionSet, ModelSpaceConfig};

pub use archive::{crowding_distance, dominates, non_dominated_sort, select_final, ParetoArchive};
pub use engine::Engine;
pub use fitness::{fitness, linear_scale, FitnessMode};
pub use gp::run_gp;
pub use local_opt::local_optimize;
pub use moead::{
    moead_step, neighborhoods, run_moead, simplex_lattice_weights, tchebycheff, MoeadState,
};
pub use nsga2::{nsga2_step, run_nsga2};

pub use crate::metrics::REJECTION_SENTINEL;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "gp")]
    Gp,
    #[serde(rename = "gpsc")]
    GpSc,
    #[serde(rename = "gpopt")]
    GpOpt,
    #[serde(rename = "gpoptsc")]
    GpOptSc,
    #[serde(rename = "nsga2")]
    Nsga2,
    #[serde(rename = "moead")]
    Moead,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Gp,
        Algorithm::GpSc,
        Algorithm::GpOpt,
        Algorithm::GpOptSc,
        Algorithm::Nsga2,
        Algorithm::Moead,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Gp => "gp",
            Algorithm::GpSc => "gpsc",
            Algorithm::GpOpt => "gpopt",
            Algorithm::GpOptSc => "gpoptsc",
            Algorithm::Nsga2 => "nsga2",
            Algorithm::Moead => "moead",
        }
    }

    pub fn uses_local_optimization(self) -> bool {
        matches!(self, Algorithm::GpOpt | Algorithm::GpOptSc)
    }

    /// Hard rejection of infeasible models.
    pub fn is_constrained(self) -> bool {
        matches!(self, Algorithm::GpSc | Algorithm::GpOptSc)
    }

    pub fn is_multi_objective(self) -> bool {
        matches!(self, Algorithm::Nsga2 | Algorithm::Moead)
    }

    /// Whether the algorithm uses constraint information at all.
    pub fn uses_constraints(self) -> bool {
        self.is_constrained() || self.is_multi_objective()
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "gp" => Ok(Algorithm::Gp),
            "gpsc" => Ok(Algorithm::GpSc),
            "gpopt" => Ok(Algorithm::GpOpt),
            "gpoptsc" => Ok(Algorithm::GpOptSc),
            "nsga2" | "nsgaii" => Ok(Algorithm::Nsga2),
            "moead" => Ok(Algorithm::Moead),
            _ => Err(format!("unknown algorithm `{s}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoeadParams {
    pub neighborhood_size: usize,
    pub replacement_cap: usize,
}

impl Default for MoeadParams {
    fn default() -> Self {
        Self {
            neighborhood_size: 20,
            replacement_cap: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmConfig {
    pub algorithm: Algorithm,
    pub population_size: usize,
    pub generations: usize,
    pub max_evaluations: usize,
    pub tournament_size: usize,
    pub crossover_probability: f64,
    pub mutation_rate: f64,
    pub local_opt_iterations: usize,
    pub elites: usize,
    pub seed: u64,
    pub model_space: ModelSpaceConfig,
    /// Check GPOptSC feasibility before parameter fitting and scaling.
    pub paper_faithful: bool,
    pub rejection_sentinel: f64,
    /// Per-objective tolerance of the dominance relation.
    pub epsilon: f64,
    pub moead: MoeadParams,
}

impl AlgorithmConfig {
    /// Defaults: population 1000, 500 generations (50 with local
    /// optimization), at most 500 000 evaluations.
    pub fn new(algorithm: Algorithm, model_space: ModelSpaceConfig, seed: u64) -> Self {
        Self {
            algorithm,
            population_size: 1000,
            generations: if algorithm.uses_local_optimization() { 50 } else { 500 },
            max_evaluations: 500_000,
            tournament_size: 5,
            crossover_probability: 1.0,
            mutation_rate: 0.15,
            local_opt_iterations: 10,
            elites: 1,
            seed,
            model_space,
            paper_faithful: false,
            rejection_sentinel: REJECTION_SENTINEL,
            epsilon: 1e-6,
            moead: MoeadParams::default(),
        }
    }

    pub fn with_budget(mut self, population_size: usize, generations: usize) -> Self {
        self.population_size = population_size;
        self.generations = generations;
        self
    }

    /// Total fitness evaluations allowed.
    pub fn budget(&self) -> usize {
        self.generations
            .saturating_mul(self.population_size)
            .min(self.max_evaluations)
    }

    pub fn fitness_mode(&self) -> FitnessMode {
        match self.algorithm {
            Algorithm::Gp | Algorithm::GpOpt => FitnessMode::Unconstrained,
            Algorithm::GpSc => FitnessMode::Constrained {
                check_before_fitting: false,
            },
            Algorithm::GpOptSc => FitnessMode::Constrained {
                check_before_fitting: self.paper_faithful,
            },
            Algorithm::Nsga2 | Algorithm::Moead => FitnessMode::MultiObjective,
        }
    }

    pub fn validate(&self) -> Result<(), EvolutionError> {
        self.model_space.validate()?;
        let bad = |m: &str| Err(EvolutionError::InvalidConfig(m.to_string()));
        if self.population_size <= self.tournament_size {
            return bad("population size must exceed the tournament size");
        }
        if self.tournament_size == 0 {
            return bad("tournament size must be positive");
        }
        if !(0.0..=1.0).contains(&self.crossover_probability) || !(0.0..=1.0).contains(&self.mutation_rate) {
            return bad("probabilities must lie in [0, 1]");
        }
        if self.elites >= self.population_size {
            return bad("elite count must be smaller than the population");
        }
        if self.budget() < self.population_size {
            return bad("budget does not cover the initial population");
        }
        if self.algorithm == Algorithm::Moead && self.moead.neighborhood_size < 2 {
            return bad("MOEA/D neighborhood needs at least two members");
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvolutionError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid algorithm configuration: {0}")]
    InvalidConfig(String),
    #[error("training data has {data} features, model space expects {expected}")]
    FeatureMismatch { data: usize, expected: usize },
    #[error("training data needs at least two rows with non-zero target variance")]
    DegenerateData,
    #[error("no model: every evaluated individual was rejected or non-finite")]
    NoModel,
}

/// A tree with its training error, objective vector and linear scaling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedIndividual {
    /// The unscaled tree (after local optimization, if any).
    pub tree: ExpressionTree,
    #[serde(with = "crate::serde_util::float")]
    pub nmse_train: f64,
    /// NMSE, then one penalty per constraint in multi-objective mode.
    #[serde(with = "crate::serde_util::float_vec")]
    pub objectives: Vec<f64>,
    /// Certified feasible. Only determined in constrained and multi-objective
    /// modes; `false` otherwise.
    pub feasible: bool,
    /// `(slope, intercept)`
    pub scaling: (f64, f64),
}

impl EvaluatedIndividual {
    /// `intercept + slope · tree`
    pub fn model(&self) -> ExpressionTree {
        self.tree.scaled(self.scaling.0, self.scaling.1)
    }

    pub fn total_violation(&self) -> f64 {
        self.objectives.iter().skip(1).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    #[serde(with = "crate::serde_util::float")]
    pub best_nmse: f64,
    #[serde(with = "crate::serde_util::float")]
    pub median_nmse: f64,
    /// `None` when feasibility is not determined.
    pub feasible_fraction: Option<f64>,
    pub evaluations: usize,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub best: EvaluatedIndividual,
    pub log: Vec<GenerationRecord>,
    pub evaluations: usize,
}

/// Runs the configured algorithm on the training data.
pub fn run(
    config: &AlgorithmConfig,
    train: &Dataset,
    constraints: &ConstraintSet,
) -> Result<RunResult, EvolutionError> {
    match config.algorithm {
        Algorithm::Gp | Algorithm::GpSc | Algorithm::GpOpt | Algorithm::GpOptSc => {
            run_gp(config, train, constraints)
        }
        Algorithm::Nsga2 => run_nsga2(config, train, constraints),
        Algorithm::Moead => run_moead(config, train, constraints),
    }
}

/// Model space matching a dataset.
pub fn model_space_for(data: &Dataset, function_set: FunctionSet, max_length: usize) -> ModelSpaceConfig {
    ModelSpaceConfig::new(function_set, max_length, data.n_features())
}
