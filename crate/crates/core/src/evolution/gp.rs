use rand::Rng;

use crate::constraints::ConstraintSet;
use crate::data::Dataset;

use super::engine::Engine;
use super::{AlgorithmConfig, EvaluatedIndividual, EvolutionError, RunResult};

/// Tournament of `k` draws with replacement; the lowest NMSE wins and ties go
/// to the earliest draw.
pub(crate) fn tournament<R: Rng + ?Sized>(pop: &[EvaluatedIndividual], k: usize, rng: &mut R) -> usize {
    let mut best = rng.gen_range(0..pop.len());
    for _ in 1..k {
        let c = rng.gen_range(0..pop.len());
        if pop[c].nmse_train < pop[best].nmse_train {
            best = c;
        }
    }
    best
}

struct BestSoFar {
    feasible: Option<EvaluatedIndividual>,
    any: Option<EvaluatedIndividual>,
    sentinel: f64,
}

impl BestSoFar {
    fn offer(&mut self, ind: &EvaluatedIndividual) {
        if ind.nmse_train >= self.sentinel {
            return;
        }
        let better = |slot: &Option<EvaluatedIndividual>| {
            slot.as_ref().is_none_or(|b| ind.nmse_train < b.nmse_train)
        };
        if better(&self.any) {
            self.any = Some(ind.clone());
        }
        if ind.feasible && better(&self.feasible) {
            self.feasible = Some(ind.clone());
        }
    }
}

/// Generational GP with one elite. The memetic and constrained variants
/// differ only in how individuals are evaluated.
///
/// Returns the best individual by training NMSE over the whole run; in
/// constrained mode the best feasible one.
pub fn run_gp(
    config: &AlgorithmConfig,
    train: &Dataset,
    constraints: &ConstraintSet,
) -> Result<RunResult, EvolutionError> {
    let mut eng = Engine::new(config, train, constraints)?;
    let n = config.population_size;
    let mut pop = eng.initial_population();
    let mut best = BestSoFar {
        feasible: None,
        any: None,
        sentinel: config.rejection_sentinel,
    };
    pop.iter().for_each(|i| best.offer(i));
    let mut log = vec![eng.record(0, &pop)];

    for generation in 1..=config.generations {
        if eng.remaining() < n - config.elites {
            break;
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| pop[a].nmse_train.total_cmp(&pop[b].nmse_train));
        let mut next: Vec<EvaluatedIndividual> =
            order[..config.elites].iter().map(|&i| pop[i].clone()).collect();
        while next.len() < n {
            let a = tournament(&pop, config.tournament_size, &mut eng.rng);
            let b = tournament(&pop, config.tournament_size, &mut eng.rng);
            let child = eng.breed(&pop[a].tree, &pop[b].tree);
            let child = eng.evaluate(child);
            best.offer(&child);
            next.push(child);
        }
        pop = next;
        log.push(eng.record(generation, &pop));
    }

    let chosen = if config.algorithm.is_constrained() {
        best.feasible.or(best.any)
    } else {
        best.any
    };
    Ok(RunResult {
        best: chosen.ok_or(EvolutionError::NoModel)?,
        log,
        evaluations: eng.evaluations(),
    })
}
