use proptest::prelude::*;
use scsr_core::harness::{nmse, MetricError, REJECTION_SENTINEL};

/// Independent NMSE: Welford running variance, percent scale.
fn welford_nmse(y: &[f64], yhat: &[f64]) -> f64 {
    let (mut mean, mut m2) = (0.0, 0.0);
    for (k, &v) in y.iter().enumerate() {
        let d = v - mean;
        mean += d / (k + 1) as f64;
        m2 += d * (v - mean);
    }
    let var = m2 / y.len() as f64;
    let sse: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).sum();
    100.0 * sse / (y.len() as f64 * var)
}

#[test]
fn worked_example() {
    assert_eq!(nmse(&[0.0, 1.0, 2.0], &[0.0, 1.0, 5.0]).unwrap(), 450.0);
    assert!((welford_nmse(&[0.0, 1.0, 2.0], &[0.0, 1.0, 5.0]) - 450.0).abs() < 1e-12);
}

#[test]
fn mean_predictor_scores_one_hundred() {
    let y = [3.0, -1.0, 4.0, 1.0, -5.0, 9.0];
    let m = y.iter().sum::<f64>() / y.len() as f64;
    assert!((nmse(&y, &[m; 6]).unwrap() - 100.0).abs() < 1e-12);
}

#[test]
fn degenerate_inputs() {
    assert!(matches!(nmse(&[1.0, 1.0], &[1.0, 2.0]), Err(MetricError::ZeroVariance)));
    assert!(nmse(&[1.0, 2.0], &[1.0]).is_err());
    assert_eq!(nmse(&[1.0, 2.0], &[f64::NAN, 1.0]).unwrap(), REJECTION_SENTINEL);
}

proptest! {
    #[test]
    fn agrees_with_welford(
        pairs in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 2..200)
    ) {
        let y: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let yhat: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let want = welford_nmse(&y, &yhat);
        prop_assume!(want.is_finite() && want < REJECTION_SENTINEL);
        let got = nmse(&y, &yhat).unwrap();
        prop_assert!((got - want).abs() <= 1e-9 * want.max(1.0), "{} vs {}", got, want);
    }
}
