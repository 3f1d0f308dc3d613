use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ProblemInstance;
use crate::data::Dataset;
use crate::interval::IntervalBox;

pub const PARTITION_SIZE: usize = 100;
/// Upper bound on rejection-sampling draws for out-of-domain splits.
pub const MAX_DRAWS: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Split {
    InDomain,
    OutOfDomain,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::InDomain => "in-domain",
            Split::OutOfDomain => "out-of-domain",
        })
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "in-domain" | "in" => Ok(Split::InDomain),
            "out-of-domain" | "out" => Ok(Split::OutOfDomain),
            _ => Err(format!("unknown split `{s}` (expected in-domain or out-of-domain)")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplingError {
    #[error("noise level must be finite and non-negative, got {0}")]
    NoiseLevel(f64),
    #[error("instance `{0}` has no extrapolation fraction")]
    NoExtrapolationFraction(String),
    #[error(
        "partition quota not reached after {draws} draws (train {train}, validation {validation}, test {test})"
    )]
    QuotaUnreachable {
        draws: usize,
        train: usize,
        validation: usize,
        test: usize,
    },
    #[error("ground truth is not finite at {0:?}")]
    NonFiniteTarget(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Dataset,
    pub validation: Dataset,
    /// Noise-free.
    pub test: Dataset,
    pub noise_level: f64,
    pub split: Split,
    /// Standard deviation of the noise-free train and validation targets.
    pub sigma_y: f64,
}

/// True if any coordinate lies in the first or last `fraction` of its range.
pub fn in_extrapolation_band(point: &[f64], domain: &IntervalBox, fraction: f64) -> bool {
    point.iter().zip(domain.intervals()).any(|(&x, d)| {
        let w = d.hi() - d.lo();
        x < d.lo() + fraction * w || x > d.hi() - fraction * w
    })
}

/// Population standard deviation.
pub fn population_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}

/// Adds `N(0, std)` to every value.
pub fn inject_noise(values: &mut [f64], std: f64, rng: &mut impl Rng) {
    if std == 0.0 {
        return;
    }
    let normal = Normal::new(0.0, std).expect("finite non-negative std");
    for v in values {
        *v += normal.sample(rng);
    }
}

fn uniform_point(domain: &IntervalBox, rng: &mut impl Rng) -> Vec<f64> {
    domain
        .intervals()
        .iter()
        .map(|d| d.lo() + (d.hi() - d.lo()) * rng.gen::<f64>())
        .collect()
}

/// Draws train, validation and test partitions of 100 points each.
///
/// All input points are drawn before any noise, so for a fixed rng state the
/// inputs and the (noise-free) test targets do not depend on `noise_level`.
pub fn sample_dataset(
    instance: &ProblemInstance,
    noise_level: f64,
    split: Split,
    rng: &mut impl Rng,
) -> Result<DatasetSplit, SamplingError> {
    if !(noise_level.is_finite() && noise_level >= 0.0) {
        return Err(SamplingError::NoiseLevel(noise_level));
    }
    let domain = instance.domain();
    let mut parts: [Vec<Vec<f64>>; 3] = Default::default();
    match split {
        Split::InDomain => {
            for k in 0..3 * PARTITION_SIZE {
                parts[k / PARTITION_SIZE].push(uniform_point(domain, rng));
            }
        }
        Split::OutOfDomain => {
            let fraction = instance
                .extrapolation_fraction()
                .ok_or_else(|| SamplingError::NoExtrapolationFraction(instance.name().into()))?;
            let mut draws = 0;
            while parts.iter().any(|p| p.len() < PARTITION_SIZE) {
                if draws == MAX_DRAWS {
                    return Err(SamplingError::QuotaUnreachable {
                        draws,
                        train: parts[0].len(),
                        validation: parts[1].len(),
                        test: parts[2].len(),
                    });
                }
                draws += 1;
                let p = uniform_point(domain, rng);
                if in_extrapolation_band(&p, domain, fraction) {
                    if parts[2].len() < PARTITION_SIZE {
                        parts[2].push(p);
                    }
                } else if parts[0].len() < PARTITION_SIZE {
                    parts[0].push(p);
                } else if parts[1].len() < PARTITION_SIZE {
                    parts[1].push(p);
                }
            }
        }
    }

    let gt = instance.ground_truth();
    let mut targets: Vec<Vec<f64>> = Vec::with_capacity(3);
    for rows in &parts {
        let mut t = Vec::with_capacity(rows.len());
        for r in rows {
            let y = gt.value(r);
            if !y.is_finite() {
                return Err(SamplingError::NonFiniteTarget(r.clone()));
            }
            t.push(y);
        }
        targets.push(t);
    }
    let fit: Vec<f64> = targets[0].iter().chain(&targets[1]).copied().collect();
    let sigma_y = population_std(&fit);
    let std = noise_level.sqrt() * sigma_y;
    inject_noise(&mut targets[0], std, rng);
    inject_noise(&mut targets[1], std, rng);

    let mut datasets = parts
        .iter()
        .zip(targets)
        .map(|(rows, t)| Dataset::from_rows(rows, t));
    Ok(DatasetSplit {
        train: datasets.next().unwrap(),
        validation: datasets.next().unwrap(),
        test: datasets.next().unwrap(),
        noise_level,
        split,
        sigma_y,
    })
}

#[derive(Serialize)]
struct Metadata<'a> {
    instance: &'a str,
    variables: &'a [String],
    seed: u64,
    noise_level: f64,
    split: Split,
    sigma_y: f64,
}

impl DatasetSplit {
    /// Writes `train.csv`, `validation.csv`, `test.csv` (header `x0,...,xk,y`)
    /// and `metadata.json` into `dir`.
    pub fn export(&self, dir: &Path, instance: &ProblemInstance, seed: u64) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, data) in [
            ("train", &self.train),
            ("validation", &self.validation),
            ("test", &self.test),
        ] {
            let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join(format!("{name}.csv")))?);
            write_csv(&mut f, data)?;
            f.flush()?;
        }
        let meta = Metadata {
            instance: instance.name(),
            variables: instance.variable_names(),
            seed,
            noise_level: self.noise_level,
            split: self.split,
            sigma_y: self.sigma_y,
        };
        std::fs::write(
            dir.join("metadata.json"),
            serde_json::to_string_pretty(&meta).map_err(std::io::Error::other)? + "\n",
        )
    }
}

pub fn write_csv(out: &mut impl Write, data: &Dataset) -> std::io::Result<()> {
    let header: Vec<String> = (0..data.n_features())
        .map(|j| format!("x{j}"))
        .chain(std::iter::once("y".to_string()))
        .collect();
    writeln!(out, "{}", header.join(","))?;
    for r in 0..data.rows() {
        let mut line: Vec<String> = data.row(r).iter().map(|v| v.to_string()).collect();
        line.push(data.target()[r].to_string());
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}
