use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::constraints::ConstraintSet;
use crate::data::Dataset;
use crate::expr::{mutate, ptc2_random_tree, subtree_crossover, ExpressionTree};
use crate::metrics::{mean_and_variance, median};

use super::fitness::{fitness, FitnessMode};
use super::local_opt::local_optimize;
use super::{AlgorithmConfig, EvaluatedIndividual, EvolutionError, GenerationRecord};

/// Shared state of one run: the random stream, the evaluation counter and
/// the variation operators.
pub struct Engine<'a> {
    pub config: &'a AlgorithmConfig,
    pub data: &'a Dataset,
    pub constraints: &'a ConstraintSet,
    pub rng: ChaCha8Rng,
    mode: FitnessMode,
    evaluations: usize,
    history: Option<Vec<Vec<f64>>>,
}

impl<'a> Engine<'a> {
    pub fn new(
        config: &'a AlgorithmConfig,
        data: &'a Dataset,
        constraints: &'a ConstraintSet,
    ) -> Result<Self, EvolutionError> {
        config.validate()?;
        if data.n_features() != config.model_space.n_variables {
            return Err(EvolutionError::FeatureMismatch {
                data: data.n_features(),
                expected: config.model_space.n_variables,
            });
        }
        if data.rows() < 2 || mean_and_variance(data.target()).1 == 0.0 {
            return Err(EvolutionError::DegenerateData);
        }
        Ok(Self {
            config,
            data,
            constraints,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            mode: config.fitness_mode(),
            evaluations: 0,
            history: None,
        })
    }

    pub fn mode(&self) -> FitnessMode {
        self.mode
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    pub fn remaining(&self) -> usize {
        self.config.budget().saturating_sub(self.evaluations)
    }

    /// Starts keeping the objective vector of every later evaluation.
    pub fn keep_history(&mut self) {
        self.history.get_or_insert_with(Vec::new);
    }

    pub fn history(&self) -> Option<&[Vec<f64>]> {
        self.history.as_deref()
    }

    /// One fitness evaluation, preceded by local optimization for the
    /// memetic variants.
    pub fn evaluate(&mut self, tree: ExpressionTree) -> EvaluatedIndividual {
        self.evaluations += 1;
        let ind = self.score(tree);
        if let Some(h) = &mut self.history {
            h.push(ind.objectives.clone());
        }
        ind
    }

    fn score(&self, tree: ExpressionTree) -> EvaluatedIndividual {
        if self.config.algorithm.uses_local_optimization() {
            let fitted = local_optimize(&tree, self.data, self.config.local_opt_iterations);
            fitness(
                fitted,
                Some(&tree),
                self.data,
                self.constraints,
                self.mode,
                self.config.rejection_sentinel,
            )
        } else {
            fitness(
                tree,
                None,
                self.data,
                self.constraints,
                self.mode,
                self.config.rejection_sentinel,
            )
        }
    }

    /// PTC2 tree with a target length drawn uniformly from `1..=max_length`.
    pub fn random_tree(&mut self) -> ExpressionTree {
        let len = self.rng.gen_range(1..=self.config.model_space.max_length);
        ptc2_random_tree(&self.config.model_space, len, &mut self.rng)
            .expect("model space validated at construction")
    }

    pub fn initial_population(&mut self) -> Vec<EvaluatedIndividual> {
        (0..self.config.population_size)
            .map(|_| {
                let t = self.random_tree();
                self.evaluate(t)
            })
            .collect()
    }

    /// Crossover (with the configured probability, cloning `a` otherwise)
    /// followed by mutation at the configured rate.
    pub fn breed(&mut self, a: &ExpressionTree, b: &ExpressionTree) -> ExpressionTree {
        let ms = &self.config.model_space;
        let mut child = if self.rng.gen::<f64>() < self.config.crossover_probability {
            subtree_crossover(a, b, ms, &mut self.rng)
        } else {
            a.clone()
        };
        if self.rng.gen::<f64>() < self.config.mutation_rate {
            child = mutate(&child, ms, &mut self.rng);
        }
        child
    }

    pub fn record(&self, generation: usize, population: &[EvaluatedIndividual]) -> GenerationRecord {
        let nmse: Vec<f64> = population.iter().map(|i| i.nmse_train).collect();
        let checked = !matches!(self.mode, FitnessMode::Unconstrained);
        GenerationRecord {
            generation,
            best_nmse: nmse.iter().copied().fold(f64::INFINITY, f64::min),
            median_nmse: median(&nmse),
            feasible_fraction: checked.then(|| {
                population.iter().filter(|i| i.feasible).count() as f64 / population.len() as f64
            }),
            evaluations: self.evaluations,
        }
    }
}
