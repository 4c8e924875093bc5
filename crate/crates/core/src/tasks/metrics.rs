//! Accuracy and normalized error metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::ShapeMismatch(format!("{a} predictions vs {b} targets")));
    }
    if a == 0 {
        return Err(Error::ShapeMismatch("empty input".into()));
    }
    Ok(())
}

pub fn accuracy(pred: &[u8], truth: &[u8]) -> Result<f64> {
    check_len(pred.len(), truth.len())?;
    let correct = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(correct as f64 / truth.len() as f64)
}

/// `counts[truth][pred]`.
pub fn confusion_matrix(pred: &[u8], truth: &[u8]) -> Result<[[u64; 10]; 10]> {
    check_len(pred.len(), truth.len())?;
    let mut counts = [[0u64; 10]; 10];
    for (&p, &t) in pred.iter().zip(truth) {
        if p > 9 || t > 9 {
            return Err(Error::OutOfRange {
                index: 0,
                value: p.max(t) as f64,
                lo: 0.0,
                hi: 9.0,
            });
        }
        counts[t as usize][p as usize] += 1;
    }
    Ok(counts)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Population variance.
pub fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64
}

/// Mean squared error divided by the variance of the target.
pub fn nmse(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    check_len(y_hat.len(), y.len())?;
    let var = variance(y);
    if var <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let mse = y
        .iter()
        .zip(y_hat)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / y.len() as f64;
    Ok(mse / var)
}

pub fn nrmse(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    nmse(y, y_hat).map(f64::sqrt)
}

/// Evaluation summary written to `metrics.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub task_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confusion: Option<[[u64; 10]; 10]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nmse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nrmse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_nmse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_nrmse: Option<f64>,
    /// Memoryless least-squares baseline on the test split.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline_nmse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline_nrmse: Option<f64>,
    pub n_train: usize,
    pub n_test: usize,
    pub config_hash: String,
    /// Published headline numbers for the same task, kept for comparison.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paper_reference: Option<serde_json::Value>,
    pub clamp_events: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction() {
        let y = [0.1, 0.5, 0.3, 0.9];
        assert_eq!(nmse(&y, &y).unwrap(), 0.0);
        assert_eq!(nrmse(&y, &y).unwrap(), 0.0);
        assert_eq!(accuracy(&[1, 2, 3], &[1, 2, 3]).unwrap(), 1.0);
    }

    #[test]
    fn mean_predictor_scores_one() {
        let y = [0.1, 0.5, 0.3, 0.9];
        let m = y.iter().sum::<f64>() / 4.0;
        assert!((nmse(&y, &[m; 4]).unwrap() - 1.0).abs() < 1e-12);
        assert!((nrmse(&y, &[m; 4]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_variance_is_an_error() {
        assert!(matches!(nmse(&[0.2; 4], &[0.1; 4]), Err(Error::ZeroVariance)));
        assert!(matches!(
            nmse(&[0.2, 0.3], &[0.1]),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn confusion_rows_and_trace() {
        let truth = [0, 0, 1, 2, 2, 2];
        let pred = [0, 1, 1, 2, 0, 2];
        let c = confusion_matrix(&pred, &truth).unwrap();
        assert_eq!(c[0].iter().sum::<u64>(), 2);
        assert_eq!(c[2].iter().sum::<u64>(), 3);
        let trace: u64 = (0..10).map(|i| c[i][i]).sum();
        assert_eq!(trace, 4);
        assert!((accuracy(&pred, &truth).unwrap() - 4.0 / 6.0).abs() < 1e-15);
    }
}
