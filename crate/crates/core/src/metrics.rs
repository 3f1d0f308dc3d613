//! Error metrics.

use thiserror::Error;

/// NMSE reported for models that cannot be evaluated or were rejected.
pub const REJECTION_SENTINEL: f64 = 1e7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("length mismatch: {0} targets, {1} predictions")]
    Length(usize, usize),
    #[error("at least two points are required")]
    TooFewPoints,
    #[error("target variance is zero")]
    ZeroVariance,
}

/// Normalized mean squared error in percent, `100 · mean((y - ŷ)²) / var(y)`
/// with the population variance. Non-finite predictions give
/// [`REJECTION_SENTINEL`].
pub fn nmse(y: &[f64], yhat: &[f64]) -> Result<f64, MetricError> {
    if y.len() != yhat.len() {
        return Err(MetricError::Length(y.len(), yhat.len()));
    }
    if y.len() < 2 {
        return Err(MetricError::TooFewPoints);
    }
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if var == 0.0 {
        return Err(MetricError::ZeroVariance);
    }
    Ok(nmse_with_variance(y, yhat, var))
}

/// As [`nmse`] with a precomputed target variance and no argument checks.
pub(crate) fn nmse_with_variance(y: &[f64], yhat: &[f64], var: f64) -> f64 {
    let mut sse = 0.0;
    for (a, b) in y.iter().zip(yhat) {
        if !b.is_finite() {
            return REJECTION_SENTINEL;
        }
        sse += (a - b) * (a - b);
    }
    let v = 100.0 * sse / (y.len() as f64 * var);
    if v.is_finite() {
        v.min(REJECTION_SENTINEL)
    } else {
        REJECTION_SENTINEL
    }
}

pub(crate) fn mean_and_variance(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (mean, v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n)
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
