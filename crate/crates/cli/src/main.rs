use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use scsr_core::evolution::Algorithm;
use scsr_core::expr::{ExpressionTree, FunctionSet};
use scsr_core::harness::{
    audit_feasibility, experiment, grid_search, infeasible_fraction_table, median_nmse_table,
    partial_dependence_table, read_records, Cell, ExperimentConfig, GridRequest, GridSpec, RunRecord,
    RunSettings, TableStyle, DEFAULT_AUDIT_SAMPLES,
};
use scsr_core::problems::{builtin_instances, resolve_instance, sample_dataset, Split};

/// Shape-constrained symbolic regression.
///
/// Exit codes: 0 success, 1 audit found a violation, 2 usage error,
/// 3 runtime error, 4 the run itself failed (details in the record).
#[derive(Parser)]
#[command(name = "scsr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single run on one data sample; prints the run record as JSON.
    Run(RunArgs),
    /// Hyper-parameter grid over max length and function set.
    Gridsearch(GridArgs),
    /// Full sweep from a JSON config; writes runs.jsonl and summary tables.
    Experiment(ExperimentArgs),
    /// Sampling audit of a model against an instance's constraints.
    Audit(AuditArgs),
    /// Renders a summary table from a results directory.
    Table(TableArgs),
    /// Lists the built-in problem instances.
    Instances,
    /// Draws a dataset and writes train/validation/test CSV files.
    Sample(SampleArgs),
}

#[derive(Args, Clone)]
struct BudgetArgs {
    #[arg(long, default_value_t = 1000)]
    population: usize,
    /// Defaults to 500, or 50 for algorithms with local optimization.
    #[arg(long)]
    generations: Option<usize>,
    #[arg(long, default_value_t = 500_000)]
    max_evaluations: usize,
    #[arg(long, default_value_t = 10)]
    local_opt_iterations: usize,
    /// Points per constraint in the post-hoc audit (0 disables it).
    #[arg(long, default_value_t = DEFAULT_AUDIT_SAMPLES)]
    audit_samples: usize,
    /// GPOptSC checks constraints on the model before parameter fitting.
    #[arg(long)]
    paper_faithful: bool,
}

impl BudgetArgs {
    fn settings(&self) -> RunSettings {
        RunSettings {
            population_size: self.population,
            generations: self.generations,
            max_evaluations: self.max_evaluations,
            local_opt_iterations: self.local_opt_iterations,
            paper_faithful: self.paper_faithful,
            audit_samples: self.audit_samples,
        }
    }
}

#[derive(Args)]
struct DataArgs {
    /// Built-in instance name or path to an instance JSON file.
    #[arg(long)]
    instance: String,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value = "in-domain")]
    split: Split,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    algorithm: Algorithm,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Seed for the data sample; defaults to --seed.
    #[arg(long)]
    data_seed: Option<u64>,
    #[arg(long, default_value_t = 30)]
    max_length: usize,
    #[arg(long, default_value = "F3")]
    function_set: FunctionSet,
    #[command(flatten)]
    budget: BudgetArgs,
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    algorithm: Algorithm,
    /// Inclusive range `a..b` or a comma-separated list.
    #[arg(long, default_value = "1..30")]
    seeds: String,
    #[arg(long, default_value_t = 0)]
    data_seed: u64,
    /// Seed of the final retraining run; defaults to one past the last seed.
    #[arg(long)]
    retrain_seed: Option<u64>,
    #[arg(long, value_delimiter = ',', default_values_t = [10usize, 20, 30, 40, 50])]
    max_lengths: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = FunctionSet::ALL)]
    function_sets: Vec<FunctionSet>,
    #[command(flatten)]
    budget: BudgetArgs,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, env = "SCSR_WORKERS")]
    workers: Option<usize>,
}

#[derive(Args)]
struct AuditArgs {
    /// Path to a file holding an infix expression, or the expression itself.
    #[arg(long)]
    model: String,
    #[arg(long)]
    instance: String,
    #[arg(long, default_value_t = DEFAULT_AUDIT_SAMPLES)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct TableArgs {
    /// Results directory or runs.jsonl file.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value = "median-nmse")]
    style: TableStyle,
    /// Grid points per variable for partial-dependence tables.
    #[arg(long, default_value_t = 11)]
    points: usize,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().context("seed range start")?;
        let b: u64 = b.trim().trim_start_matches('=').parse().context("seed range end")?;
        if b < a {
            bail!("empty seed range `{s}`");
        }
        return Ok((a..=b).collect());
    }
    s.split(',')
        .map(|t| t.trim().parse::<u64>().with_context(|| format!("invalid seed `{t}`")))
        .collect()
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<ExitCode> {
    let instance = resolve_instance(&args.data.instance)?;
    let spec = scsr_core::harness::RunSpec {
        instance,
        algorithm: args.algorithm,
        noise_level: args.data.noise,
        split: args.data.split,
        cell: Cell {
            max_length: args.max_length,
            function_set: args.function_set,
        },
        repetition: 0,
        data_seed: args.data_seed.unwrap_or(args.seed),
        seed: args.seed,
        settings: args.budget.settings(),
    };
    let record = scsr_core::harness::execute_run(&spec);
    print_json(&record)?;
    Ok(if record.is_success() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(4)
    })
}

fn cmd_gridsearch(args: GridArgs) -> Result<ExitCode> {
    let instance = resolve_instance(&args.data.instance)?;
    let seeds = parse_seeds(&args.seeds)?;
    let retrain_seed = args
        .retrain_seed
        .unwrap_or_else(|| seeds.iter().max().map_or(0, |m| m + 1));
    let req = GridRequest {
        instance: &instance,
        algorithm: args.algorithm,
        noise_level: args.data.noise,
        split: args.data.split,
        grid: GridSpec {
            max_lengths: args.max_lengths,
            function_sets: args.function_sets,
        },
        repetition: 0,
        data_seed: args.data_seed,
        seeds,
        retrain_seed,
        settings: args.budget.settings(),
    };
    let out = grid_search(&req)?;
    print_json(&json!({
        "cells": out.cells,
        "best": out.best,
        "retrained": out.retrained,
        "incumbent": out.incumbent,
    }))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_experiment(args: ExperimentArgs) -> Result<ExitCode> {
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let config: ExperimentConfig =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", args.config.display()))?;
    let workers = args
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let out = experiment(&config, &args.out, workers)?;
    let failed = out.records.iter().filter(|r| !r.is_success()).count();
    eprintln!(
        "{} records written to {} ({failed} failed)",
        out.records.len(),
        args.out.display()
    );
    print!("{}", out.median_nmse);
    Ok(ExitCode::SUCCESS)
}

fn cmd_audit(args: AuditArgs) -> Result<ExitCode> {
    let instance = resolve_instance(&args.instance)?;
    let src = match std::fs::read_to_string(&args.model) {
        Ok(s) => s,
        Err(_) => args.model.clone(),
    };
    let tree = ExpressionTree::parse(src.trim(), instance.variable_names())
        .with_context(|| format!("parsing model `{}`", src.trim()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let verdict = audit_feasibility(&tree, instance.constraints(), args.samples, &mut rng);
    print_json(&verdict)?;
    Ok(if verdict.is_feasible() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_table(args: TableArgs) -> Result<ExitCode> {
    let records: Vec<RunRecord> = read_records(&args.input)?;
    let table = match args.style {
        TableStyle::MedianNmse => median_nmse_table(&records),
        TableStyle::InfeasibleFraction => infeasible_fraction_table(&records),
        TableStyle::PartialDependence => partial_dependence_table(&records, args.points),
    };
    print!("{table}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_sample(args: SampleArgs) -> Result<ExitCode> {
    let instance = resolve_instance(&args.data.instance)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let split = sample_dataset(&instance, args.data.noise, args.data.split, &mut rng)?;
    split.export(&args.out, &instance, args.seed)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_instances() -> Result<ExitCode> {
    for inst in builtin_instances() {
        println!(
            "{:<14} {} vars  {} constraints  {}",
            inst.name(),
            inst.n_variables(),
            inst.constraints().len(),
            inst.expression()
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Gridsearch(a) => cmd_gridsearch(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Audit(a) => cmd_audit(a),
        Command::Table(a) => cmd_table(a),
        Command::Instances => cmd_instances(),
        Command::Sample(a) => cmd_sample(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
