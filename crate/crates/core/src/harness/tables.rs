use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;
use std::str::FromStr;

use crate::evolution::Algorithm;
use crate::metrics::median;
use crate::problems::resolve_instance;

use super::record::{RunRecord, RunRole};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableStyle {
    MedianNmse,
    InfeasibleFraction,
    PartialDependence,
}

impl FromStr for TableStyle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "median-nmse" => Ok(TableStyle::MedianNmse),
            "infeasible-fraction" => Ok(TableStyle::InfeasibleFraction),
            "partial-dependence" => Ok(TableStyle::PartialDependence),
            _ => Err(format!(
                "unknown table style `{s}` (median-nmse, infeasible-fraction, partial-dependence)"
            )),
        }
    }
}

/// Records that represent a final result (direct runs and grid winners).
fn finals(records: &[RunRecord]) -> impl Iterator<Item = &RunRecord> {
    records
        .iter()
        .filter(|r| matches!(r.role, RunRole::Single | RunRole::Retrained))
}

fn noise_key(v: f64) -> String {
    format!("{v}")
}

/// Rows keyed by (noise, instance), one column per algorithm. Key order is
/// lexicographic so the output does not depend on record order.
fn pivot<F>(records: &[RunRecord], cell: F) -> String
where
    F: Fn(&[&RunRecord]) -> String,
{
    let algorithms: BTreeSet<Algorithm> = finals(records).map(|r| r.algorithm).collect();
    let mut groups: BTreeMap<(u64, String), BTreeMap<Algorithm, Vec<&RunRecord>>> = BTreeMap::new();
    for r in finals(records) {
        // noise levels are non-negative, so the bit pattern orders them
        groups
            .entry((r.noise_level.to_bits(), r.instance.clone()))
            .or_default()
            .entry(r.algorithm)
            .or_default()
            .push(r);
    }
    let mut out = String::from("noise,instance");
    for a in &algorithms {
        write!(out, ",{a}").unwrap();
    }
    out.push('\n');
    for ((noise, instance), by_alg) in &groups {
        write!(out, "{},{}", noise_key(f64::from_bits(*noise)), instance).unwrap();
        for a in &algorithms {
            let v = by_alg.get(a).map(|rs| cell(rs)).unwrap_or_else(|| "NA".into());
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// Median test NMSE over repetitions; failed runs are left out.
pub fn median_nmse_table(records: &[RunRecord]) -> String {
    pivot(records, |rs| {
        let v: Vec<f64> = rs
            .iter()
            .filter(|r| r.is_success() && !r.nmse_test.is_nan())
            .map(|r| r.nmse_test)
            .collect();
        if v.is_empty() {
            "NA".into()
        } else {
            format!("{:.6}", median(&v))
        }
    })
}

/// Percentage of audited models with at least one violated constraint.
pub fn infeasible_fraction_table(records: &[RunRecord]) -> String {
    pivot(records, |rs| {
        let audited: Vec<bool> = rs.iter().filter_map(|r| r.audit_infeasible()).collect();
        if audited.is_empty() {
            "NA".into()
        } else {
            let bad = audited.iter().filter(|b| **b).count();
            format!("{:.1}", 100.0 * bad as f64 / audited.len() as f64)
        }
    })
}

/// One-dimensional sweeps of every final model: each variable in turn is
/// varied over its domain while the others stay at the domain midpoint.
pub fn partial_dependence_table(records: &[RunRecord], points: usize) -> String {
    let mut out = String::from("noise,instance,algorithm,repetition,variable,x,y\n");
    let mut rows: Vec<&RunRecord> = finals(records).filter(|r| r.is_success()).collect();
    rows.sort_by(|a, b| {
        (a.noise_level.to_bits(), &a.instance, a.algorithm, a.repetition)
            .cmp(&(b.noise_level.to_bits(), &b.instance, b.algorithm, b.repetition))
    });
    let points = points.max(2);
    for r in rows {
        let (Ok(inst), Some(model)) = (resolve_instance(&r.instance), r.parsed_model()) else {
            continue;
        };
        let mid: Vec<f64> = inst.domain().intervals().iter().map(|d| d.midpoint()).collect();
        for (j, name) in inst.variable_names().iter().enumerate() {
            let d = inst.domain()[j];
            for k in 0..points {
                let mut p = mid.clone();
                p[j] = d.lo() + (d.hi() - d.lo()) * k as f64 / (points - 1) as f64;
                writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    noise_key(r.noise_level),
                    r.instance,
                    r.algorithm,
                    r.repetition,
                    name,
                    p[j],
                    model.evaluate(&p)
                )
                .unwrap();
            }
        }
    }
    out
}
