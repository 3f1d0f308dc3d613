use rand::Rng;

use crate::constraints::ConstraintSet;
use crate::data::Dataset;

use super::archive::{crowding_distance, non_dominated_sort, select_final, ParetoArchive};
use super::engine::Engine;
use super::{AlgorithmConfig, EvaluatedIndividual, EvolutionError, RunResult};

fn objectives(pop: &[EvaluatedIndividual]) -> Vec<Vec<f64>> {
    pop.iter().map(|i| i.objectives.clone()).collect()
}

/// Rank (front index) and crowding distance per individual.
fn rank_and_crowding(pop: &[EvaluatedIndividual], eps: f64) -> (Vec<Vec<usize>>, Vec<usize>, Vec<f64>) {
    let objs = objectives(pop);
    let fronts = non_dominated_sort(&objs, eps);
    let mut rank = vec![0; pop.len()];
    let mut crowd = vec![0.0; pop.len()];
    for (r, front) in fronts.iter().enumerate() {
        let d = crowding_distance(&objs, front);
        for (&i, di) in front.iter().zip(d) {
            rank[i] = r;
            crowd[i] = di;
        }
    }
    (fronts, rank, crowd)
}

/// Keeps the best `n` of `pop` by front, then by crowding distance.
fn environmental_selection(pop: Vec<EvaluatedIndividual>, n: usize, eps: f64) -> Vec<EvaluatedIndividual> {
    let objs = objectives(&pop);
    let mut keep: Vec<usize> = Vec::with_capacity(n);
    for front in non_dominated_sort(&objs, eps) {
        if keep.len() + front.len() <= n {
            keep.extend(&front);
            continue;
        }
        let d = crowding_distance(&objs, &front);
        let mut order: Vec<usize> = (0..front.len()).collect();
        order.sort_by(|&a, &b| d[b].total_cmp(&d[a]));
        keep.extend(order.iter().take(n - keep.len()).map(|&k| front[k]));
        break;
    }
    let mut slots: Vec<Option<EvaluatedIndividual>> = pop.into_iter().map(Some).collect();
    keep.iter().map(|&i| slots[i].take().unwrap()).collect()
}

/// One generation: binary tournaments on (rank, crowding), one child per
/// population slot, then truncation of parents plus children.
pub fn nsga2_step(
    eng: &mut Engine<'_>,
    population: Vec<EvaluatedIndividual>,
    archive: Option<&mut ParetoArchive>,
) -> Vec<EvaluatedIndividual> {
    let eps = eng.config.epsilon;
    let n = population.len();
    let (_, rank, crowd) = rank_and_crowding(&population, eps);
    let pick = |rng: &mut rand_chacha::ChaCha8Rng| {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if rank[b] < rank[a] || (rank[b] == rank[a] && crowd[b] > crowd[a]) {
            b
        } else {
            a
        }
    };
    let mut children = Vec::with_capacity(n);
    for _ in 0..n {
        let a = pick(&mut eng.rng);
        let b = pick(&mut eng.rng);
        let child = eng.breed(&population[a].tree, &population[b].tree);
        children.push(eng.evaluate(child));
    }
    if let Some(ar) = archive {
        for c in &children {
            ar.insert(c.clone());
        }
    }
    let mut merged = population;
    merged.extend(children);
    environmental_selection(merged, n, eps)
}

pub fn run_nsga2(
    config: &AlgorithmConfig,
    train: &Dataset,
    constraints: &ConstraintSet,
) -> Result<RunResult, EvolutionError> {
    let mut eng = Engine::new(config, train, constraints)?;
    let n = config.population_size;
    let mut archive = ParetoArchive::new(n, config.epsilon);
    let mut pop = eng.initial_population();
    for i in &pop {
        archive.insert(i.clone());
    }
    let mut log = vec![eng.record(0, &pop)];
    for generation in 1..=config.generations {
        if eng.remaining() < n {
            break;
        }
        pop = nsga2_step(&mut eng, pop, Some(&mut archive));
        log.push(eng.record(generation, &pop));
    }
    Ok(RunResult {
        best: select_final(&archive)?,
        log,
        evaluations: eng.evaluations(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::Algorithm;
    use crate::expr::{ExpressionTree, FunctionSet, ModelSpaceConfig};
    use crate::interval::{Interval, IntervalBox};

    fn ind(obj: &[f64]) -> EvaluatedIndividual {
        EvaluatedIndividual {
            tree: ExpressionTree::constant(0.0),
            nmse_train: obj[0],
            objectives: obj.to_vec(),
            feasible: false,
            scaling: (1.0, 0.0),
        }
    }

    #[test]
    fn selection_prefers_front_then_spread() {
        let pop = vec![
            ind(&[1.0, 4.0]),
            ind(&[2.0, 3.0]),
            ind(&[2.1, 2.9]),
            ind(&[4.0, 1.0]),
            ind(&[5.0, 5.0]),
        ];
        let kept = environmental_selection(pop, 3, 1e-6);
        let n: Vec<f64> = kept.iter().map(|i| i.nmse_train).collect();
        // boundaries first, then the interior point with the larger gap
        assert_eq!(n.len(), 3);
        assert!(n.contains(&1.0) && n.contains(&4.0));
        assert!(!n.contains(&5.0));
    }

    #[test]
    fn run_is_deterministic_and_within_budget() {
        let x: Vec<f64> = (0..40).map(|i| 1.0 + i as f64 / 20.0).collect();
        let y: Vec<f64> = x.iter().map(|v| v * v).collect();
        let d = Dataset::new(vec![x], y);
        let dom = IntervalBox::from_bounds(&[(1.0, 3.0)]);
        let cs = ConstraintSet::from_tuple(Interval::NON_NEGATIVE, &[1], &dom).unwrap();
        let c = AlgorithmConfig::new(Algorithm::Nsga2, ModelSpaceConfig::new(FunctionSet::F3, 15, 1), 3)
            .with_budget(40, 10);
        let a = run_nsga2(&c, &d, &cs).unwrap();
        let b = run_nsga2(&c, &d, &cs).unwrap();
        assert_eq!(a.best, b.best);
        assert!(a.evaluations <= c.budget());
        assert_eq!(a.best.objectives.len(), 1 + cs.len());
    }
}
