//! Ergodic trajectory averaging: running means of per-step test predictions
//! and the induced test-loss series.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Per-step test predictions, raw and running-averaged.
///
/// Row `t` of `averaged` is the mean of raw rows `0..=t`, maintained online
/// as `avg += (raw - avg)/(t+1)` so it stays exact even when rows are
/// recorded at a stride.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSeries {
    /// Training step each row was recorded at.
    pub steps: Vec<usize>,
    pub raw: Array2<f64>,
    pub averaged: Array2<f64>,
}

impl PredictionSeries {
    pub fn from_raw(raw: Array2<f64>) -> Self {
        let averaged = ergodic_average(&raw);
        PredictionSeries {
            steps: (0..raw.nrows()).collect(),
            raw,
            averaged,
        }
    }

    pub fn n_test(&self) -> usize {
        self.raw.ncols()
    }
}

/// Row `t` of the output is the mean of input rows `0..=t` (online update).
pub fn ergodic_average(raw: &Array2<f64>) -> Array2<f64> {
    let mut out = raw.clone();
    let n = raw.ncols();
    let mut mean = vec![0.0_f64; n];
    for (t, row) in raw.rows().into_iter().enumerate() {
        let w = 1.0 / (t as f64 + 1.0);
        for (j, &v) in row.iter().enumerate() {
            mean[j] += (v - mean[j]) * w;
            out[(t, j)] = mean[j];
        }
    }
    out
}

/// Per-step mean squared error `(1/2n_test)·Σ(ŷ - y)²`, using the raw or
/// the averaged predictions.
pub fn test_loss_series(
    series: &PredictionSeries,
    y_test: &[f64],
    averaged: bool,
) -> Result<Vec<f64>> {
    if y_test.len() != series.n_test() {
        return Err(Error::Dimension(format!(
            "prediction series has {} test points but y_test has {}",
            series.n_test(),
            y_test.len()
        )));
    }
    let mat = if averaged {
        &series.averaged
    } else {
        &series.raw
    };
    let scale = 1.0 / (2.0 * y_test.len() as f64);
    Ok(mat
        .rows()
        .into_iter()
        .map(|row| {
            row.iter()
                .zip(y_test)
                .map(|(p, y)| (p - y) * (p - y))
                .sum::<f64>()
                * scale
        })
        .collect())
}

/// Variance of a slice (population convention).
pub fn variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
}
