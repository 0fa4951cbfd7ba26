//! Dense autoencoder: masked reconstruction loss, analytic gradients,
//! proximal-regularized local training and gradient masking.
//!
//! Hidden layers use the rectifier, the output layer is linear, so a model
//! reconstructs real-valued standardized windows. The local objective is
//! the batch-mean masked loss plus `mu * ||theta - theta_g||^2`.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::param::{LayerSpec, ParameterVector, SparsityMask};
use crate::{Error, Result};

/// Client-side training settings for one federated round.
#[derive(Debug, Clone, PartialEq)]
pub struct ProximalConfig {
    /// Weight of the proximal pull toward the global model.
    pub mu: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl ProximalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mu < 0.0 || !self.mu.is_finite() {
            return Err(Error::InvalidParameter {
                name: "mu",
                reason: alloc::format!("must be finite and >= 0, got {}", self.mu),
            });
        }
        if self.epochs == 0 {
            return Err(Error::InvalidParameter {
                name: "epochs",
                reason: "must be >= 1".into(),
            });
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidParameter {
                name: "batch_size",
                reason: "must be >= 1".into(),
            });
        }
        if self.learning_rate.is_nan() || self.learning_rate < 0.0 || !self.learning_rate.is_finite() {
            return Err(Error::InvalidParameter {
                name: "learning_rate",
                reason: alloc::format!("must be finite and >= 0, got {}", self.learning_rate),
            });
        }
        Ok(())
    }
}

/// Glorot-uniform weights, zero biases, deterministic per seed.
pub fn init_model(input_dim: usize, layers: &LayerSpec, seed: u64) -> ParameterVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = ParameterVector::zeros(input_dim, layers);
    for l in 0..model.num_layers() {
        let (rows, cols) = model.shapes()[l];
        let bound = libm::sqrt(6.0 / (rows + cols) as f64);
        let (w, _b) = model.layer_mut(l);
        for v in w.iter_mut() {
            *v = rng.random_range(-bound..bound);
        }
    }
    model
}

fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// Activations of every layer for one input, `acts[0]` being the input.
fn forward_cached(model: &ParameterVector, x: &[f64]) -> Vec<Vec<f64>> {
    let n_layers = model.num_layers();
    let mut acts: Vec<Vec<f64>> = Vec::with_capacity(n_layers + 1);
    acts.push(x.to_vec());
    for l in 0..n_layers {
        let (rows, cols) = model.shapes()[l];
        let (w, b) = model.layer(l);
        let input = &acts[l];
        let mut out = vec![0.0; rows];
        for r in 0..rows {
            let row = &w[r * cols..(r + 1) * cols];
            let mut acc = b[r];
            for (wi, xi) in row.iter().zip(input.iter()) {
                acc += wi * xi;
            }
            out[r] = if l + 1 == n_layers { acc } else { relu(acc) };
        }
        acts.push(out);
    }
    acts
}

/// Reconstruct one window.
pub fn forward(model: &ParameterVector, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != model.input_dim() {
        return Err(Error::ArchitectureMismatch {
            model_dim: model.input_dim(),
            data_dim: x.len(),
        });
    }
    Ok(forward_cached(model, x).pop().unwrap())
}

/// Reconstruction loss over observed positions only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskedLoss {
    /// Mean squared error over observed positions (0 if none observed).
    pub value: f64,
    /// Number of observed positions that contributed.
    pub observed: usize,
}

impl MaskedLoss {
    /// True when no position was observed and the loss is vacuously zero.
    pub fn no_observed(&self) -> bool {
        self.observed == 0
    }
}

pub fn masked_loss(x: &[f64], x_hat: &[f64], mask: &[bool]) -> MaskedLoss {
    debug_assert_eq!(x.len(), x_hat.len());
    debug_assert_eq!(x.len(), mask.len());
    let mut sum = 0.0;
    let mut observed = 0usize;
    for ((&a, &b), &m) in x.iter().zip(x_hat).zip(mask) {
        if m {
            let d = a - b;
            sum += d * d;
            observed += 1;
        }
    }
    let value = if observed == 0 { 0.0 } else { sum / observed as f64 };
    MaskedLoss { value, observed }
}

/// One training sample: a window vector plus its observation mask.
pub type Sample<'a> = (&'a [f64], &'a [bool]);

/// Batch-mean masked loss plus the proximal term; the objective that
/// `gradient` differentiates.
pub fn objective(
    model: &ParameterVector,
    batch: &[Sample<'_>],
    global_ref: &ParameterVector,
    mu: f64,
) -> Result<f64> {
    if model.len() != global_ref.len() {
        return Err(Error::LengthMismatch { expected: model.len(), got: global_ref.len() });
    }
    let mut data = 0.0;
    for &(x, mask) in batch {
        let x_hat = forward(model, x)?;
        data += masked_loss(x, &x_hat, mask).value;
    }
    if !batch.is_empty() {
        data /= batch.len() as f64;
    }
    let prox: f64 = model
        .flat
        .iter()
        .zip(&global_ref.flat)
        .map(|(a, g)| (a - g) * (a - g))
        .sum();
    Ok(data + mu * prox)
}

/// Analytic gradient of `objective`. Masked positions contribute nothing
/// to the data term; the proximal term contributes `2 mu (theta - theta_g)`.
pub fn gradient(
    model: &ParameterVector,
    batch: &[Sample<'_>],
    global_ref: &ParameterVector,
    mu: f64,
) -> Result<ParameterVector> {
    if model.len() != global_ref.len() {
        return Err(Error::LengthMismatch { expected: model.len(), got: global_ref.len() });
    }
    let mut grad = model.zeros_like();
    let n_layers = model.num_layers();
    let batch_len = batch.len().max(1) as f64;

    for &(x, mask) in batch {
        if x.len() != model.input_dim() {
            return Err(Error::ArchitectureMismatch {
                model_dim: model.input_dim(),
                data_dim: x.len(),
            });
        }
        let acts = forward_cached(model, x);
        let loss = masked_loss(x, acts.last().unwrap(), mask);
        if loss.no_observed() {
            continue;
        }
        // d(mean masked mse)/d(x_hat)
        let scale = 2.0 / (loss.observed as f64 * batch_len);
        let mut delta: Vec<f64> = acts[n_layers]
            .iter()
            .zip(x)
            .zip(mask)
            .map(|((&xh, &xi), &m)| if m { scale * (xh - xi) } else { 0.0 })
            .collect();

        for l in (0..n_layers).rev() {
            let (rows, cols) = model.shapes()[l];
            let input = &acts[l];
            {
                let (gw, gb) = grad.layer_mut(l);
                for r in 0..rows {
                    let d = delta[r];
                    if d != 0.0 {
                        let row = &mut gw[r * cols..(r + 1) * cols];
                        for (gwi, &xi) in row.iter_mut().zip(input.iter()) {
                            *gwi += d * xi;
                        }
                        gb[r] += d;
                    }
                }
            }
            if l > 0 {
                let (w, _) = model.layer(l);
                let mut prev = vec![0.0; cols];
                for r in 0..rows {
                    let d = delta[r];
                    if d != 0.0 {
                        let row = &w[r * cols..(r + 1) * cols];
                        for (p, &wi) in prev.iter_mut().zip(row.iter()) {
                            *p += wi * d;
                        }
                    }
                }
                // rectifier derivative, taken from the cached activation
                for (p, &a) in prev.iter_mut().zip(input.iter()) {
                    if a <= 0.0 {
                        *p = 0.0;
                    }
                }
                delta = prev;
            }
        }
    }

    if mu != 0.0 {
        for ((g, &t), &tg) in grad.flat.iter_mut().zip(&model.flat).zip(&global_ref.flat) {
            *g += 2.0 * mu * (t - tg);
        }
    }
    Ok(grad)
}

/// Result of one client's local training pass.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: ParameterVector,
    /// Mean masked loss over the full training set after the last epoch.
    pub final_loss: f64,
}

/// Mini-batch SGD on the proximal objective. When `grad_mask` is given,
/// gradient entries at `false` positions are zeroed before every update,
/// so masked parameters are bit-identical before and after.
pub fn local_train(
    model: &ParameterVector,
    windows: &[impl AsRef<[f64]>],
    masks: &[impl AsRef<[bool]>],
    global_ref: &ParameterVector,
    cfg: &ProximalConfig,
    grad_mask: Option<&SparsityMask>,
    seed: u64,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if windows.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if windows.len() != masks.len() {
        return Err(Error::LengthMismatch { expected: windows.len(), got: masks.len() });
    }
    if let Some(m) = grad_mask {
        if m.len() != model.len() {
            return Err(Error::LengthMismatch { expected: model.len(), got: m.len() });
        }
    }

    let mut theta = model.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..windows.len()).collect();

    for _ in 0..cfg.epochs {
        shuffle(&mut order, &mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<Sample<'_>> =
                chunk.iter().map(|&i| (windows[i].as_ref(), masks[i].as_ref())).collect();
            let mut grad = gradient(&theta, &batch, global_ref, cfg.mu)?;
            if let Some(m) = grad_mask {
                for (g, &keep) in grad.flat.iter_mut().zip(&m.bits) {
                    if !keep {
                        *g = 0.0;
                    }
                }
            }
            if cfg.learning_rate != 0.0 {
                for (t, g) in theta.flat.iter_mut().zip(&grad.flat) {
                    *t -= cfg.learning_rate * g;
                }
            }
        }
    }

    let mut final_loss = 0.0;
    for (x, m) in windows.iter().zip(masks) {
        let x_hat = forward(&theta, x.as_ref())?;
        final_loss += masked_loss(x.as_ref(), &x_hat, m.as_ref()).value;
    }
    final_loss /= windows.len() as f64;

    Ok(TrainOutcome { model: theta, final_loss })
}

fn shuffle(order: &mut [usize], rng: &mut ChaCha8Rng) {
    // Fisher-Yates
    for i in (1..order.len()).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
}
