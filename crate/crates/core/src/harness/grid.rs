use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evolution::Algorithm;
use crate::expr::FunctionSet;
use crate::metrics::median;
use crate::problems::{sample_dataset, ProblemInstance, SamplingError, Split};

use super::derive_seed;
use super::record::{execute_run_on, RunRecord, RunRole, RunSettings, RunSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub max_length: usize,
    pub function_set: FunctionSet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub max_lengths: Vec<usize>,
    pub function_sets: Vec<FunctionSet>,
}

impl GridSpec {
    /// Tree lengths 10 to 50 in steps of 10 crossed with all function sets.
    pub fn full() -> Self {
        Self {
            max_lengths: vec![10, 20, 30, 40, 50],
            function_sets: vec![FunctionSet::F1, FunctionSet::F2, FunctionSet::F3, FunctionSet::F4],
        }
    }

    pub fn single(max_length: usize, function_set: FunctionSet) -> Self {
        Self {
            max_lengths: vec![max_length],
            function_sets: vec![function_set],
        }
    }

    /// Cells in lexicographic (length, function set) order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &max_length in &self.max_lengths {
            for &function_set in &self.function_sets {
                out.push(Cell {
                    max_length,
                    function_set,
                });
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell: Cell,
    pub runs: usize,
    pub failures: usize,
    /// Median over seeds; NaN when every run failed.
    #[serde(with = "crate::serde_util::float")]
    pub median_validation_nmse: f64,
    /// Fraction of successful runs whose model is certified feasible.
    #[serde(with = "crate::serde_util::float")]
    pub certified_fraction: f64,
}

#[derive(Clone, Debug)]
pub struct GridRequest<'a> {
    pub instance: &'a ProblemInstance,
    pub algorithm: Algorithm,
    pub noise_level: f64,
    pub split: Split,
    pub grid: GridSpec,
    pub repetition: usize,
    pub data_seed: u64,
    /// One run per seed and cell.
    pub seeds: Vec<u64>,
    pub retrain_seed: u64,
    pub settings: RunSettings,
}

#[derive(Clone, Debug)]
pub struct GridOutcome {
    pub cells: Vec<CellSummary>,
    pub best: Cell,
    /// The winning cell trained again with `retrain_seed`; for a single cell
    /// and seed, the run itself.
    pub retrained: RunRecord,
    /// The lowest-validation-NMSE run of the winning cell.
    pub incumbent: RunRecord,
    pub runs: Vec<RunRecord>,
}

#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid has no cells or no seeds")]
    Empty,
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error("every grid cell failed")]
    AllCellsFailed { cells: Vec<CellSummary>, runs: Vec<RunRecord> },
}

/// Runs every cell with every seed on one data sample and picks the cell
/// with the lowest median validation NMSE. Algorithms that use constraint
/// information only consider cells whose models are all certified feasible,
/// when such cells exist.
pub fn grid_search(req: &GridRequest<'_>) -> Result<GridOutcome, GridError> {
    let cells = req.grid.cells();
    if cells.is_empty() || req.seeds.is_empty() {
        return Err(GridError::Empty);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(req.data_seed);
    let data = sample_dataset(req.instance, req.noise_level, req.split, &mut rng)?;
    let spec = |cell: Cell, seed: u64| RunSpec {
        instance: req.instance.clone(),
        algorithm: req.algorithm,
        noise_level: req.noise_level,
        split: req.split,
        cell,
        repetition: req.repetition,
        data_seed: req.data_seed,
        seed,
        settings: req.settings.clone(),
    };

    let direct = cells.len() == 1 && req.seeds.len() == 1;
    let role = if direct { RunRole::Single } else { RunRole::Cell };
    // distinct cells get distinct random streams
    let cell_seed = |cell: Cell, seed: u64| {
        if cells.len() == 1 {
            seed
        } else {
            derive_seed(seed, &[&format!("{}:{}", cell.max_length, cell.function_set)])
        }
    };
    let mut runs = Vec::new();
    let mut summaries = Vec::new();
    for &cell in &cells {
        let recs: Vec<RunRecord> = req
            .seeds
            .iter()
            .map(|&s| execute_run_on(&spec(cell, cell_seed(cell, s)), &data, role))
            .collect();
        let ok: Vec<&RunRecord> = recs.iter().filter(|r| r.is_success()).collect();
        let val: Vec<f64> = ok.iter().map(|r| r.nmse_validation).filter(|v| !v.is_nan()).collect();
        let certified = ok.iter().filter(|r| r.certified_feasible == Some(true)).count();
        summaries.push(CellSummary {
            cell,
            runs: recs.len(),
            failures: recs.len() - ok.len(),
            median_validation_nmse: median(&val),
            certified_fraction: if ok.is_empty() {
                f64::NAN
            } else {
                certified as f64 / ok.len() as f64
            },
        });
        runs.extend(recs);
    }

    let completed: Vec<&CellSummary> = summaries
        .iter()
        .filter(|s| !s.median_validation_nmse.is_nan())
        .collect();
    if completed.is_empty() {
        return Err(GridError::AllCellsFailed {
            cells: summaries,
            runs,
        });
    }
    let fully_certified: Vec<&CellSummary> = completed
        .iter()
        .copied()
        .filter(|s| s.certified_fraction == 1.0)
        .collect();
    let pool = if req.algorithm.uses_constraints() && !fully_certified.is_empty() {
        fully_certified
    } else {
        completed
    };
    let best = pool
        .iter()
        .min_by(|a, b| a.median_validation_nmse.total_cmp(&b.median_validation_nmse))
        .unwrap()
        .cell;

    let incumbent = runs
        .iter()
        .filter(|r| r.max_length == best.max_length && r.function_set == best.function_set && r.is_success())
        .min_by(|a, b| a.nmse_validation.total_cmp(&b.nmse_validation))
        .cloned()
        .expect("winning cell has a successful run");
    let retrained = if direct {
        incumbent.clone()
    } else {
        execute_run_on(&spec(best, req.retrain_seed), &data, RunRole::Retrained)
    };
    let mut incumbent = incumbent;
    if !direct {
        incumbent.role = RunRole::Incumbent;
    }
    Ok(GridOutcome {
        cells: summaries,
        best,
        retrained,
        incumbent,
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::builtin_instance;

    fn request(grid: GridSpec, seeds: Vec<u64>) -> GridRequest<'static> {
        GridRequest {
            instance: builtin_instance("II.11.28").unwrap(),
            algorithm: Algorithm::GpSc,
            noise_level: 0.0,
            split: Split::InDomain,
            grid,
            repetition: 0,
            data_seed: 5,
            seeds,
            retrain_seed: 99,
            settings: RunSettings {
                population_size: 30,
                generations: Some(4),
                audit_samples: 0,
                ..RunSettings::default()
            },
        }
    }

    #[test]
    fn winner_is_argmin_and_deterministic() {
        let grid = GridSpec {
            max_lengths: vec![5, 15],
            function_sets: vec![FunctionSet::F1, FunctionSet::F3],
        };
        let a = grid_search(&request(grid.clone(), vec![1, 2])).unwrap();
        let b = grid_search(&request(grid, vec![1, 2])).unwrap();
        assert_eq!(a.cells, b.cells);
        assert_eq!(a.best, b.best);
        assert_eq!(a.cells.len(), 4);
        let candidates: Vec<&CellSummary> = if a.cells.iter().any(|c| c.certified_fraction == 1.0) {
            a.cells.iter().filter(|c| c.certified_fraction == 1.0).collect()
        } else {
            a.cells.iter().collect()
        };
        let min = candidates
            .iter()
            .map(|c| c.median_validation_nmse)
            .fold(f64::INFINITY, f64::min);
        let winner = a.cells.iter().find(|c| c.cell == a.best).unwrap();
        assert_eq!(winner.median_validation_nmse, min);
        assert_eq!(a.retrained.role, RunRole::Retrained);
        assert_eq!(a.retrained.seed, 99);
        assert_eq!(a.incumbent.role, RunRole::Incumbent);
    }

    #[test]
    fn single_cell_is_a_direct_run() {
        let out = grid_search(&request(GridSpec::single(15, FunctionSet::F2), vec![7])).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let data = sample_dataset(builtin_instance("II.11.28").unwrap(), 0.0, Split::InDomain, &mut rng).unwrap();
        let req = request(GridSpec::single(15, FunctionSet::F2), vec![7]);
        let direct = execute_run_on(
            &RunSpec {
                instance: req.instance.clone(),
                algorithm: req.algorithm,
                noise_level: 0.0,
                split: Split::InDomain,
                cell: Cell {
                    max_length: 15,
                    function_set: FunctionSet::F2,
                },
                repetition: 0,
                data_seed: 5,
                seed: 7,
                settings: req.settings.clone(),
            },
            &data,
            RunRole::Single,
        );
        assert_eq!(out.retrained.model, direct.model);
        assert_eq!(out.retrained.nmse_test, direct.nmse_test);
        assert_eq!(out.retrained.role, RunRole::Single);
    }
}
