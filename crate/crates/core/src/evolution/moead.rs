use rand::seq::SliceRandom;
use rand::Rng;

use crate::constraints::ConstraintSet;
use crate::data::Dataset;

use super::archive::{select_final, ParetoArchive};
use super::engine::Engine;
use super::{AlgorithmConfig, EvaluatedIndividual, EvolutionError, RunResult};

const MIN_WEIGHT: f64 = 1e-6;

fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r.min(usize::MAX as u128) as usize
}

fn compositions(total: usize, parts: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if parts == 1 {
        prefix.push(total);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for first in 0..=total {
        prefix.push(first);
        compositions(total - first, parts - 1, prefix, out);
        prefix.pop();
    }
}

/// `count` weight vectors on the `m`-simplex: the smallest simplex lattice
/// with at least `count` points, evenly subsampled. Zero components are
/// raised to 1e-6.
pub fn simplex_lattice_weights(m: usize, count: usize) -> Vec<Vec<f64>> {
    if m <= 1 {
        return vec![vec![1.0]; count];
    }
    let mut h = 1;
    while binomial(h + m - 1, m - 1) < count {
        h += 1;
    }
    let mut lattice = Vec::new();
    compositions(h, m, &mut Vec::with_capacity(m), &mut lattice);
    let len = lattice.len();
    (0..count)
        .map(|i| {
            lattice[i * len / count]
                .iter()
                .map(|&c| (c as f64 / h as f64).max(MIN_WEIGHT))
                .collect()
        })
        .collect()
}

/// The `t` nearest weight vectors (Euclidean, ties by index) of each weight,
/// itself included.
pub fn neighborhoods(weights: &[Vec<f64>], t: usize) -> Vec<Vec<usize>> {
    let t = t.min(weights.len());
    weights
        .iter()
        .map(|w| {
            let mut d: Vec<(f64, usize)> = weights
                .iter()
                .enumerate()
                .map(|(j, v)| (w.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum(), j))
                .collect();
            d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            d.into_iter().take(t).map(|(_, j)| j).collect()
        })
        .collect()
}

/// `max_k λ_k |f_k - z_k|`, where an infinite objective equal to an infinite
/// reference contributes zero.
pub fn tchebycheff(f: &[f64], lambda: &[f64], z: &[f64]) -> f64 {
    f.iter()
        .zip(lambda)
        .zip(z)
        .map(|((fk, lk), zk)| {
            let d = if fk == zk { 0.0 } else { (fk - zk).abs() };
            lk * d
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug)]
pub struct MoeadState {
    pub weights: Vec<Vec<f64>>,
    pub neighbors: Vec<Vec<usize>>,
    /// Component-wise minimum of every objective vector seen.
    pub reference: Vec<f64>,
}

impl MoeadState {
    pub fn new(config: &AlgorithmConfig, population: &[EvaluatedIndividual]) -> Self {
        let m = population[0].objectives.len();
        let weights = simplex_lattice_weights(m, population.len());
        let neighbors = neighborhoods(&weights, config.moead.neighborhood_size);
        let mut reference = vec![f64::INFINITY; m];
        for p in population {
            update_reference(&mut reference, &p.objectives);
        }
        Self {
            weights,
            neighbors,
            reference,
        }
    }
}

fn update_reference(z: &mut [f64], f: &[f64]) {
    for (zk, fk) in z.iter_mut().zip(f) {
        if *fk < *zk {
            *zk = *fk;
        }
    }
}

/// One pass over all subproblems: mate within the neighborhood, evaluate the
/// child, update the reference point and replace up to `replacement_cap`
/// neighbors whose aggregation the child strictly improves.
pub fn moead_step(
    eng: &mut Engine<'_>,
    mut population: Vec<EvaluatedIndividual>,
    state: &mut MoeadState,
    mut archive: Option<&mut ParetoArchive>,
) -> Vec<EvaluatedIndividual> {
    let cap = eng.config.moead.replacement_cap;
    for i in 0..population.len() {
        let hood = &state.neighbors[i];
        let a = hood[eng.rng.gen_range(0..hood.len())];
        let b = hood[eng.rng.gen_range(0..hood.len())];
        let child = eng.breed(&population[a].tree, &population[b].tree);
        let child = eng.evaluate(child);
        update_reference(&mut state.reference, &child.objectives);
        if let Some(ar) = archive.as_deref_mut() {
            ar.insert(child.clone());
        }
        let mut order = hood.clone();
        order.shuffle(&mut eng.rng);
        let mut replaced = 0;
        for j in order {
            if replaced == cap {
                break;
            }
            let lambda = &state.weights[j];
            let g_child = tchebycheff(&child.objectives, lambda, &state.reference);
            let g_old = tchebycheff(&population[j].objectives, lambda, &state.reference);
            if g_child < g_old {
                population[j] = child.clone();
                replaced += 1;
            }
        }
    }
    population
}

pub fn run_moead(
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
    let mut state = MoeadState::new(config, &pop);
    let mut log = vec![eng.record(0, &pop)];
    for generation in 1..=config.generations {
        if eng.remaining() < n {
            break;
        }
        pop = moead_step(&mut eng, pop, &mut state, Some(&mut archive));
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
    use crate::expr::{FunctionSet, ModelSpaceConfig};
    use crate::interval::{Interval, IntervalBox};

    fn data() -> Dataset {
        let x: Vec<f64> = (0..40).map(|i| 1.0 + i as f64 / 20.0).collect();
        let y: Vec<f64> = x.iter().map(|v| v.ln() + 0.3 * v).collect();
        Dataset::new(vec![x], y)
    }

    #[test]
    fn lattice_weights() {
        let w = simplex_lattice_weights(3, 10);
        assert_eq!(w.len(), 10);
        for v in &w {
            assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-5);
            assert!(v.iter().all(|&c| c >= MIN_WEIGHT));
        }
        // H = 3 gives exactly 10 points in three dimensions
        let mut distinct = w.clone();
        distinct.dedup();
        assert_eq!(distinct.len(), 10);
        assert_eq!(simplex_lattice_weights(2, 7).len(), 7);
        assert_eq!(simplex_lattice_weights(1, 3), vec![vec![1.0]; 3]);
    }

    #[test]
    fn neighborhoods_include_self() {
        let w = simplex_lattice_weights(2, 11);
        let nb = neighborhoods(&w, 3);
        assert_eq!(nb[0], vec![0, 1, 2]);
        assert_eq!(nb[5][0], 5);
    }

    #[test]
    fn aggregation() {
        assert_eq!(tchebycheff(&[3.0, 1.0], &[0.5, 0.5], &[1.0, 0.0]), 1.0);
        assert_eq!(tchebycheff(&[1.0, f64::INFINITY], &[0.5, 0.5], &[1.0, f64::INFINITY]), 0.0);
    }

    #[test]
    fn reference_point_is_running_minimum() {
        let d = data();
        let dom = IntervalBox::from_bounds(&[(1.0, 3.0)]);
        let cs = ConstraintSet::from_tuple(Interval::NON_NEGATIVE, &[1], &dom).unwrap();
        let c = AlgorithmConfig::new(Algorithm::Moead, ModelSpaceConfig::new(FunctionSet::F3, 15, 1), 4)
            .with_budget(30, 6);
        let mut eng = Engine::new(&c, &d, &cs).unwrap();
        eng.keep_history();
        let mut pop = eng.initial_population();
        let mut state = MoeadState::new(&c, &pop);
        for _ in 0..4 {
            pop = moead_step(&mut eng, pop, &mut state, None);
            let hist = eng.history().unwrap();
            for k in 0..state.reference.len() {
                let m = hist.iter().map(|f| f[k]).fold(f64::INFINITY, f64::min);
                assert_eq!(state.reference[k], m);
            }
        }
    }

    #[test]
    fn single_objective_never_worsens() {
        let d = data();
        let c = AlgorithmConfig::new(Algorithm::Moead, ModelSpaceConfig::new(FunctionSet::F3, 15, 1), 8)
            .with_budget(30, 8);
        let r = run_moead(&c, &d, &ConstraintSet::empty()).unwrap();
        assert!(r.log.windows(2).all(|w| w[1].best_nmse <= w[0].best_nmse));
        let empty = ConstraintSet::empty();
        let mut eng = Engine::new(&c, &d, &empty).unwrap();
        let mut pop = eng.initial_population();
        let mut state = MoeadState::new(&c, &pop);
        for _ in 0..5 {
            let before: Vec<f64> = pop.iter().map(|p| p.nmse_train).collect();
            pop = moead_step(&mut eng, pop, &mut state, None);
            assert!(pop.iter().zip(&before).all(|(p, b)| p.nmse_train <= *b));
        }
    }

    #[test]
    fn dominating_child_fills_replacement_cap() {
        let d = data();
        let c = AlgorithmConfig::new(Algorithm::Moead, ModelSpaceConfig::new(FunctionSet::F1, 5, 1), 1)
            .with_budget(10, 2);
        let empty = ConstraintSet::empty();
        let mut eng = Engine::new(&c, &d, &empty).unwrap();
        let worst = |nmse: f64| EvaluatedIndividual {
            tree: crate::expr::ExpressionTree::constant(0.0),
            nmse_train: nmse,
            objectives: vec![nmse],
            feasible: false,
            scaling: (1.0, 0.0),
        };
        // every incumbent is worse than any child a linear-ish model can reach
        let pop = vec![worst(1e9); 10];
        let mut state = MoeadState::new(&c, &pop);
        let next = moead_step(&mut eng, pop.clone(), &mut state, None);
        let replaced = next.iter().filter(|p| p.nmse_train < 1e9).count();
        assert!(replaced >= 2);
    }
}
