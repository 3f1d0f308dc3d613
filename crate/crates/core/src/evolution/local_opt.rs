use nalgebra::{DMatrix, DVector};

use crate::data::Dataset;
use crate::expr::ExpressionTree;

fn sse(tree: &ExpressionTree, data: &Dataset) -> f64 {
    tree.evaluate_batch(data.columns(), data.rows())
        .iter()
        .zip(data.target())
        .map(|(p, y)| (y - p) * (y - p))
        .sum()
}

/// Levenberg–Marquardt on the squared training residuals over all numeric
/// parameters (constants and variable weights). Structure is never changed.
/// Each iteration is one trial step, accepted or not.
pub fn local_optimize(tree: &ExpressionTree, data: &Dataset, iterations: usize) -> ExpressionTree {
    let k = tree.parameter_count();
    if k == 0 || iterations == 0 || data.is_empty() {
        return tree.clone();
    }
    let rows = data.rows();
    let mut params = tree.parameters();
    let mut current = tree.clone();
    let mut cost = sse(&current, data);
    if !cost.is_finite() {
        return tree.clone();
    }
    let mut lambda = 1e-3;
    let mut jac = current.parameter_jacobian(data.columns(), rows);
    for _ in 0..iterations {
        let j = DMatrix::from_fn(rows, k, |r, c| jac.columns[c][r]);
        let resid = DVector::from_iterator(
            rows,
            data.target().iter().zip(&jac.values).map(|(y, p)| y - p),
        );
        if j.iter().any(|v| !v.is_finite()) {
            break;
        }
        let jtj = j.transpose() * &j;
        let jtr = j.transpose() * resid;
        let mut a = jtj.clone();
        for d in 0..k {
            a[(d, d)] += lambda * (jtj[(d, d)] + 1e-12);
        }
        let step = match a.clone().cholesky() {
            Some(ch) => ch.solve(&jtr),
            None => match a.lu().solve(&jtr) {
                Some(s) => s,
                None => {
                    lambda *= 10.0;
                    continue;
                }
            },
        };
        let trial: Vec<f64> = params.iter().zip(step.iter()).map(|(p, s)| p + s).collect();
        if trial.iter().any(|v| !v.is_finite()) {
            lambda *= 10.0;
            continue;
        }
        let candidate = current.with_parameters(&trial);
        let c = sse(&candidate, data);
        if c.is_finite() && c < cost {
            params = trial;
            current = candidate;
            cost = c;
            lambda = (lambda / 10.0).max(1e-12);
            jac = current.parameter_jacobian(data.columns(), rows);
        } else {
            lambda = (lambda * 10.0).min(1e12);
        }
    }
    current
}
