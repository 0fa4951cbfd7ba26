//! Threshold calibration, per-cell anomaly scoring, detection metrics and
//! imputation RMSE.
//!
//! Per-cell quantities come from all stride-1 windows covering a cell:
//! squared reconstruction errors and reconstructions are averaged over
//! the covering windows.

use alloc::vec;
use alloc::vec::Vec;

use crate::model::forward;
use crate::param::ParameterVector;
use crate::series::ClientDataset;
use crate::{Error, Result};

/// Moments of the training reconstruction errors.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorStats {
    pub mean: f64,
    /// Square root of the unbiased sample variance.
    pub std: f64,
    pub count: usize,
}

/// Anomaly threshold `E = mean + c * std` from training errors.
pub fn calibrate_threshold(train_errors: &[f64], c: f64) -> Result<(ErrorStats, f64)> {
    let n = train_errors.len();
    if n < 2 {
        return Err(Error::TooFewSamples { got: n });
    }
    let mean = train_errors.iter().sum::<f64>() / n as f64;
    let var =
        train_errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (n as f64 - 1.0);
    let std = libm::sqrt(var);
    let stats = ErrorStats { mean, std, count: n };
    Ok((stats, mean + c * std))
}

/// Per-cell reconstruction field of one client's local series, in the
/// client's standardized space. `m x t_local`, feature-major.
#[derive(Debug, Clone)]
pub struct CellField {
    pub m: usize,
    pub t_local: usize,
    /// Mean squared reconstruction error over covering windows;
    /// 0 for never-observed cells.
    pub score: Vec<f64>,
    /// Mean reconstruction over covering windows.
    pub recon: Vec<f64>,
    /// Whether the cell was observed in the input.
    pub observed: Vec<bool>,
}

impl CellField {
    pub fn cell(&self, f: usize, t: usize) -> usize {
        f * self.t_local + t
    }
}

/// Run the model over every window of the client and fold the results
/// back onto (feature, time) cells.
pub fn reconstruct_cells(model: &ParameterVector, client: &ClientDataset) -> Result<CellField> {
    if model.input_dim() != client.input_dim() {
        return Err(Error::ArchitectureMismatch {
            model_dim: model.input_dim(),
            data_dim: client.input_dim(),
        });
    }
    let m = client.features.len();
    let t_local = client.local_steps();
    let w = client.window_len;
    let cells = m * t_local;
    let mut err_sum = vec![0.0; cells];
    let mut recon_sum = vec![0.0; cells];
    let mut coverage = vec![0u32; cells];
    let mut observed = vec![false; cells];

    let (windows, masks) = client.all_windows();
    for (q, (x, mask)) in windows.iter().zip(masks.iter()).enumerate() {
        let x_hat = forward(model, x)?;
        for t in q..q + w {
            for f in 0..m {
                let pos = (t - q) * m + f;
                let cell = f * t_local + t;
                recon_sum[cell] += x_hat[pos];
                coverage[cell] += 1;
                if mask[pos] {
                    observed[cell] = true;
                    let d = x[pos] - x_hat[pos];
                    err_sum[cell] += d * d;
                }
            }
        }
    }

    let mut score = vec![0.0; cells];
    let mut recon = vec![0.0; cells];
    for i in 0..cells {
        if coverage[i] > 0 {
            recon[i] = recon_sum[i] / coverage[i] as f64;
            if observed[i] {
                score[i] = err_sum[i] / coverage[i] as f64;
            }
        }
    }
    Ok(CellField { m, t_local, score, recon, observed })
}

/// Per-cell anomaly labels: true iff the cell's averaged reconstruction
/// error exceeds `e`. Never-observed cells are labeled false.
pub fn score_points(
    model: &ParameterVector,
    client: &ClientDataset,
    e: f64,
) -> Result<Vec<bool>> {
    let field = reconstruct_cells(model, client)?;
    Ok(field
        .score
        .iter()
        .zip(&field.observed)
        .map(|(&s, &obs)| obs && s > e)
        .collect())
}

/// Confusion-matrix metrics. Precision and recall are defined as 1.0 when
/// their denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionMetrics {
    pub precision: f64,
    pub recall: f64,
    pub accuracy: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl DetectionMetrics {
    pub fn from_counts(tp: usize, fp: usize, tn: usize, fn_: usize) -> Self {
        let ratio = |num: usize, den: usize| if den == 0 { 1.0 } else { num as f64 / den as f64 };
        let total = tp + fp + tn + fn_;
        Self {
            precision: ratio(tp, tp + fp),
            recall: ratio(tp, tp + fn_),
            accuracy: ratio(tp + tn, total),
            tp,
            fp,
            tn,
            fn_,
        }
    }
}

pub fn detection_metrics(predicted: &[bool], truth: &[bool]) -> Result<DetectionMetrics> {
    if predicted.len() != truth.len() {
        return Err(Error::LengthMismatch { expected: truth.len(), got: predicted.len() });
    }
    let mut tp = 0;
    let mut fp = 0;
    let mut tn = 0;
    let mut fn_ = 0;
    for (&p, &t) in predicted.iter().zip(truth) {
        match (p, t) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    Ok(DetectionMetrics::from_counts(tp, fp, tn, fn_))
}

/// RMSE over missing cells only (`obs_mask` false), in whatever units the
/// inputs carry. Observed cells never contribute.
pub fn imputation_rmse(truth: &[f64], reconstructed: &[f64], obs_mask: &[bool]) -> Result<f64> {
    if truth.len() != reconstructed.len() || truth.len() != obs_mask.len() {
        return Err(Error::LengthMismatch { expected: truth.len(), got: reconstructed.len() });
    }
    let mut sum = 0.0;
    let mut n = 0usize;
    for ((&t, &r), &obs) in truth.iter().zip(reconstructed).zip(obs_mask) {
        if !obs {
            sum += (t - r) * (t - r);
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::NoMissingCells);
    }
    Ok(libm::sqrt(sum / n as f64))
}
