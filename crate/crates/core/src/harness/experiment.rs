use std::io::{BufRead, BufWriter, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evolution::Algorithm;
use crate::expr::FunctionSet;
use crate::problems::{resolve_instance, InstanceError, ProblemInstance, Split};

use super::derive_seed;
use super::grid::{grid_search, GridError, GridRequest, GridSpec};
use super::record::{RunRecord, RunRole, RunSettings, RunSpec};
use super::tables::{infeasible_fraction_table, median_nmse_table};

/// A sweep over instances, algorithms, noise levels and repetitions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Builtin names or instance file paths.
    pub instances: Vec<String>,
    pub algorithms: Vec<Algorithm>,
    pub noise_levels: Vec<f64>,
    #[serde(default = "default_split")]
    pub split: Split,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Grid searched per repetition; a single cell means direct runs.
    #[serde(default = "default_grid")]
    pub grid: GridSpec,
    #[serde(default)]
    pub settings: RunSettings,
}

fn default_split() -> Split {
    Split::InDomain
}

fn default_repetitions() -> usize {
    30
}

fn default_grid() -> GridSpec {
    GridSpec::single(30, FunctionSet::F3)
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid record in {path}: {source}")]
    Record {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("experiment has no jobs")]
    Empty,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    /// Records in job order.
    pub records: Vec<RunRecord>,
    pub median_nmse: String,
    pub infeasible_fraction: String,
}

pub const RUNS_FILE: &str = "runs.jsonl";
pub const MEDIAN_NMSE_FILE: &str = "median_nmse.csv";
pub const INFEASIBLE_FILE: &str = "infeasible_fraction.csv";

struct Job {
    instance: usize,
    algorithm: Algorithm,
    noise_level: f64,
    repetition: usize,
}

fn run_job(config: &ExperimentConfig, instance: &ProblemInstance, job: &Job) -> Vec<RunRecord> {
    let name = instance.name();
    let rep = job.repetition.to_string();
    let noise = format!("{}", job.noise_level);
    let alg = job.algorithm.name();
    let req = GridRequest {
        instance,
        algorithm: job.algorithm,
        noise_level: job.noise_level,
        split: config.split,
        grid: config.grid.clone(),
        repetition: job.repetition,
        data_seed: derive_seed(config.master_seed, &[name, "data", &rep]),
        seeds: vec![derive_seed(config.master_seed, &[name, alg, &noise, &rep])],
        retrain_seed: derive_seed(config.master_seed, &[name, alg, &noise, "retrain", &rep]),
        settings: config.settings.clone(),
    };
    let single = config.grid.cells().len() == 1;
    match grid_search(&req) {
        Ok(out) if single => vec![out.retrained],
        Ok(out) => {
            let mut v = out.runs;
            v.push(out.incumbent);
            v.push(out.retrained);
            v
        }
        Err(e) => {
            let role = if single { RunRole::Single } else { RunRole::Retrained };
            let mut v = match e {
                GridError::AllCellsFailed { ref runs, .. } if !single => runs.clone(),
                _ => Vec::new(),
            };
            v.push(failure(config, instance, job, &req, role, &e));
            v
        }
    }
}

fn failure(
    config: &ExperimentConfig,
    instance: &ProblemInstance,
    job: &Job,
    req: &GridRequest<'_>,
    role: RunRole,
    err: &dyn std::fmt::Display,
) -> RunRecord {
    let spec = RunSpec {
        instance: instance.clone(),
        algorithm: job.algorithm,
        noise_level: job.noise_level,
        split: config.split,
        cell: config.grid.cells()[0],
        repetition: job.repetition,
        data_seed: req.data_seed,
        seed: req.seeds[0],
        settings: config.settings.clone(),
    };
    RunRecord::failed(&spec, role, err.to_string())
}

/// Runs the sweep on `workers` threads, streaming records to
/// `out_dir/runs.jsonl` as they complete, then writes the summary tables.
/// Individual run failures are recorded, never fatal.
pub fn experiment(config: &ExperimentConfig, out_dir: &Path, workers: usize) -> Result<ExperimentOutput, ExperimentError> {
    let instances: Vec<ProblemInstance> = config
        .instances
        .iter()
        .map(|n| resolve_instance(n))
        .collect::<Result<_, _>>()?;
    let mut jobs = Vec::new();
    for (i, _) in instances.iter().enumerate() {
        for &algorithm in &config.algorithms {
            for &noise_level in &config.noise_levels {
                for repetition in 0..config.repetitions {
                    jobs.push(Job {
                        instance: i,
                        algorithm,
                        noise_level,
                        repetition,
                    });
                }
            }
        }
    }
    if jobs.is_empty() || config.grid.cells().is_empty() {
        return Err(ExperimentError::Empty);
    }
    std::fs::create_dir_all(out_dir)?;
    let mut writer = BufWriter::new(std::fs::File::create(out_dir.join(RUNS_FILE))?);

    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<(usize, Vec<RunRecord>)>();
    let mut by_job: Vec<Vec<RunRecord>> = vec![Vec::new(); jobs.len()];
    let workers = workers.clamp(1, jobs.len());
    let write_result: std::io::Result<()> = std::thread::scope(|scope| {
        for _ in 0..workers {
            let tx = tx.clone();
            let (next, jobs, instances) = (&next, &jobs, &instances);
            scope.spawn(move || loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                let Some(job) = jobs.get(k) else { break };
                let inst = &instances[job.instance];
                let recs = catch_unwind(AssertUnwindSafe(|| run_job(config, inst, job))).unwrap_or_else(|p| {
                    let msg = p
                        .downcast_ref::<String>()
                        .cloned()
                        .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                        .unwrap_or_default();
                    let spec = RunSpec {
                        instance: inst.clone(),
                        algorithm: job.algorithm,
                        noise_level: job.noise_level,
                        split: config.split,
                        cell: config.grid.cells()[0],
                        repetition: job.repetition,
                        data_seed: 0,
                        seed: 0,
                        settings: config.settings.clone(),
                    };
                    vec![RunRecord::failed(&spec, RunRole::Single, format!("panic: {msg}"))]
                });
                if tx.send((k, recs)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for (k, recs) in rx {
            for r in &recs {
                serde_json::to_writer(&mut writer, r).map_err(std::io::Error::other)?;
                writer.write_all(b"\n")?;
            }
            writer.flush()?;
            by_job[k] = recs;
        }
        Ok(())
    });
    write_result?;

    let records: Vec<RunRecord> = by_job.into_iter().flatten().collect();
    let median_nmse = median_nmse_table(&records);
    let infeasible_fraction = infeasible_fraction_table(&records);
    std::fs::write(out_dir.join(MEDIAN_NMSE_FILE), &median_nmse)?;
    std::fs::write(out_dir.join(INFEASIBLE_FILE), &infeasible_fraction)?;
    Ok(ExperimentOutput {
        records,
        median_nmse,
        infeasible_fraction,
    })
}

/// Reads `runs.jsonl` from a results directory (or the file itself).
pub fn read_records(path: &Path) -> Result<Vec<RunRecord>, ExperimentError> {
    let file = if path.is_dir() { path.join(RUNS_FILE) } else { path.to_path_buf() };
    let reader = std::io::BufReader::new(std::fs::File::open(&file)?);
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| ExperimentError::Record {
            path: file.clone(),
            source,
        })?);
    }
    Ok(out)
}
