//! Server-side fusion rules: plain averaging, L1-regularized consensus
//! fusion solved by scaled-dual ADMM, mask extraction, masked averaging
//! and compression accounting.
//!
//! The consensus objective `1/2 sum_i ||theta - theta_i||^2 + lambda ||theta||_1`
//! is separable per coordinate, so its exact minimizer is the
//! soft-thresholded mean; `closed_form_sparse_fuse` computes that directly
//! and serves as the oracle for the iterative solver.

use alloc::vec;
use alloc::vec::Vec;

use crate::param::{ParameterVector, SparsityMask};
use crate::{Error, Result};

/// Settings for the ADMM compression fusion.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionConfig {
    /// Sparsity weight of the L1 term.
    pub lambda: f64,
    /// ADMM penalty parameter.
    pub b: f64,
    pub max_iters: usize,
    /// Threshold on the larger of the primal and dual residuals.
    pub tol: f64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self { lambda: 0.0, b: 1.0, max_iters: 500, tol: 1e-8 }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambda < 0.0 || self.lambda.is_nan() {
            return Err(Error::InvalidParameter {
                name: "lambda",
                reason: alloc::format!("must be >= 0, got {}", self.lambda),
            });
        }
        if self.b <= 0.0 || self.b.is_nan() {
            return Err(Error::InvalidParameter {
                name: "b",
                reason: alloc::format!("must be > 0, got {}", self.b),
            });
        }
        if self.tol <= 0.0 || self.tol.is_nan() {
            return Err(Error::InvalidParameter {
                name: "tol",
                reason: alloc::format!("must be > 0, got {}", self.tol),
            });
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter {
                name: "max_iters",
                reason: "must be >= 1".into(),
            });
        }
        Ok(())
    }
}

/// soft(x, tau) = sign(x) * max(|x| - tau, 0)
pub fn soft_threshold(x: f64, tau: f64) -> f64 {
    if x > tau {
        x - tau
    } else if x < -tau {
        x + tau
    } else {
        0.0
    }
}

fn check_models(models: &[ParameterVector]) -> Result<usize> {
    let first = models.first().ok_or(Error::EmptyModelList)?;
    for m in models {
        if m.len() != first.len() {
            return Err(Error::LengthMismatch { expected: first.len(), got: m.len() });
        }
    }
    Ok(first.len())
}

/// Coordinate-wise arithmetic mean of the local models.
pub fn average_fuse(models: &[ParameterVector]) -> Result<ParameterVector> {
    let dim = check_models(models)?;
    let n = models.len() as f64;
    let mut out = models[0].zeros_like();
    for m in models {
        for (o, &v) in out.flat.iter_mut().zip(&m.flat) {
            *o += v;
        }
    }
    for o in out.flat.iter_mut() {
        *o /= n;
    }
    let _ = dim;
    Ok(out)
}

/// Exact minimizer of the compression fusion objective: per coordinate,
/// `soft(mean(theta_i), lambda / N)`.
pub fn closed_form_sparse_fuse(models: &[ParameterVector], lambda: f64) -> Result<ParameterVector> {
    if lambda < 0.0 || lambda.is_nan() {
        return Err(Error::InvalidParameter {
            name: "lambda",
            reason: alloc::format!("must be >= 0, got {lambda}"),
        });
    }
    let mut out = average_fuse(models)?;
    let tau = lambda / models.len() as f64;
    for v in out.flat.iter_mut() {
        *v = soft_threshold(*v, tau);
    }
    Ok(out)
}

/// Iterates of the scaled-dual ADMM on the compression fusion objective.
#[derive(Debug, Clone)]
pub struct AdmmState {
    /// Consensus iterate.
    pub theta: ParameterVector,
    /// Auxiliary (exactly sparse) iterate.
    pub z: Vec<f64>,
    /// Scaled dual.
    pub u: Vec<f64>,
    /// Iterations performed.
    pub k: usize,
    sum: Vec<f64>,
    n: usize,
}

impl AdmmState {
    pub fn new(models: &[ParameterVector]) -> Result<Self> {
        let dim = check_models(models)?;
        let mut sum = vec![0.0; dim];
        for m in models {
            for (s, &v) in sum.iter_mut().zip(&m.flat) {
                *s += v;
            }
        }
        Ok(Self {
            theta: models[0].zeros_like(),
            z: vec![0.0; dim],
            u: vec![0.0; dim],
            k: 0,
            sum,
            n: models.len(),
        })
    }

    /// One ADMM sweep. Returns (primal residual, dual residual), both
    /// in the max norm.
    pub fn step(&mut self, cfg: &FusionConfig) -> (f64, f64) {
        let n_plus_b = self.n as f64 + cfg.b;
        let tau = cfg.lambda / cfg.b;
        let mut primal = 0.0f64;
        let mut dual = 0.0f64;
        for i in 0..self.z.len() {
            let theta = (self.sum[i] + cfg.b * (self.z[i] + self.u[i])) / n_plus_b;
            let z_new = soft_threshold(theta - self.u[i], tau);
            self.u[i] += z_new - theta;
            primal = primal.max((z_new - theta).abs());
            dual = dual.max(cfg.b * (z_new - self.z[i]).abs());
            self.theta.flat[i] = theta;
            self.z[i] = z_new;
        }
        self.k += 1;
        (primal, dual)
    }

    /// The compression fusion objective evaluated at the sparse iterate.
    pub fn objective_at_z(&self, models: &[ParameterVector], lambda: f64) -> f64 {
        let mut quad = 0.0;
        for m in models {
            for (&z, &t) in self.z.iter().zip(&m.flat) {
                quad += (z - t) * (z - t);
            }
        }
        let l1: f64 = self.z.iter().map(|v| v.abs()).sum();
        0.5 * quad + lambda * l1
    }
}

/// Result of the iterative compression fusion.
#[derive(Debug, Clone)]
pub struct AdmmOutcome {
    /// The sparse `z` iterate, returned as the compressed global model.
    pub model: ParameterVector,
    pub iterations: usize,
    /// Per-iteration max(primal, dual) residuals.
    pub residual_history: Vec<f64>,
    /// False when `max_iters` was reached before the tolerance.
    pub converged: bool,
}

/// Scaled-dual ADMM for the compression fusion rule. The theta-update has
/// the closed form `(sum theta_i + b (z + u)) / (N + b)`; the z-update is
/// soft-thresholding; iteration stops when both residuals drop below
/// `cfg.tol`. The returned model is the exactly sparse `z` iterate.
pub fn admm_sparse_fuse(models: &[ParameterVector], cfg: &FusionConfig) -> Result<AdmmOutcome> {
    cfg.validate()?;
    let mut state = AdmmState::new(models)?;
    let mut history = Vec::new();
    let mut converged = false;
    while state.k < cfg.max_iters {
        let (primal, dual) = state.step(cfg);
        let res = primal.max(dual);
        history.push(res);
        if res <= cfg.tol {
            converged = true;
            break;
        }
    }
    let mut model = state.theta.zeros_like();
    model.flat.copy_from_slice(&state.z);
    Ok(AdmmOutcome { model, iterations: state.k, residual_history: history, converged })
}

/// Support pattern: bit true iff |coordinate| > zero_tol.
pub fn extract_mask(model: &ParameterVector, zero_tol: f64) -> SparsityMask {
    SparsityMask { bits: model.flat.iter().map(|v| v.abs() > zero_tol).collect() }
}

/// Coordinate mean where the mask is true, exact zero elsewhere.
pub fn masked_average_fuse(
    models: &[ParameterVector],
    mask: &SparsityMask,
) -> Result<ParameterVector> {
    let dim = check_models(models)?;
    if mask.len() != dim {
        return Err(Error::LengthMismatch { expected: dim, got: mask.len() });
    }
    let mut out = average_fuse(models)?;
    for (v, &keep) in out.flat.iter_mut().zip(&mask.bits) {
        if !keep {
            *v = 0.0;
        }
    }
    Ok(out)
}

/// Fraction of coordinates with |value| <= zero_tol.
pub fn compression_rate(model: &ParameterVector, zero_tol: f64) -> f64 {
    if model.is_empty() {
        return 0.0;
    }
    let zeros = model.flat.iter().filter(|v| v.abs() <= zero_tol).count();
    zeros as f64 / model.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::init_model;
    use crate::param::LayerSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn vecs_as_models(vs: Vec<Vec<f64>>) -> Vec<ParameterVector> {
        // wrap raw coordinate vectors as single-layer bias-only shapes
        vs.into_iter()
            .map(|v| {
                let n = v.len();
                ParameterVector::from_flat(v, vec![(n / 2, 1); 1])
                    .unwrap_or_else(|_| panic!("use even lengths"))
            })
            .collect()
    }

    fn random_models(n: usize, dim_half: usize, seed: u64) -> Vec<ParameterVector> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let v: Vec<f64> = (0..dim_half * 2).map(|_| rng.random_range(-2.0..2.0)).collect();
                ParameterVector::from_flat(v, vec![(dim_half, 1)]).unwrap()
            })
            .collect()
    }

    #[test]
    fn average_fixed_point_and_symmetry() {
        let m = random_models(1, 8, 1).remove(0);
        let avg = average_fuse(&[m.clone(), m.clone(), m.clone()]).unwrap();
        assert_eq!(avg, m);
        let mut neg = m.clone();
        for v in neg.flat.iter_mut() {
            *v = -*v;
        }
        let zero = average_fuse(&[m, neg]).unwrap();
        assert!(zero.flat.iter().all(|&v| v.abs() < 1e-15));
    }

    #[test]
    fn average_matches_per_coordinate_mean() {
        let models = random_models(3, 16, 2);
        let avg = average_fuse(&models).unwrap();
        for i in 0..avg.len() {
            let mean: f64 = models.iter().map(|m| m.flat[i]).sum::<f64>() / 3.0;
            assert!((avg.flat[i] - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn average_error_contracts() {
        assert_eq!(average_fuse(&[]).unwrap_err(), Error::EmptyModelList);
        let mut models = random_models(2, 4, 3);
        models.push(random_models(1, 5, 4).remove(0));
        assert!(matches!(average_fuse(&models), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn closed_form_hand_example() {
        // three models with coordinate means (2, -0.5, 0.1, 0), lambda/N = 0.3
        let models = vecs_as_models(vec![
            vec![2.0, -0.5, 0.1, 0.0],
            vec![2.0, -0.5, 0.1, 0.0],
            vec![2.0, -0.5, 0.1, 0.0],
        ]);
        let fused = closed_form_sparse_fuse(&models, 0.9).unwrap();
        assert!((fused.flat[0] - 1.7).abs() < 1e-12);
        assert!((fused.flat[1] + 0.2).abs() < 1e-12);
        assert_eq!(fused.flat[2], 0.0);
        assert_eq!(fused.flat[3], 0.0);
    }

    #[test]
    fn closed_form_boundaries() {
        let models = random_models(4, 8, 5);
        let avg = average_fuse(&models).unwrap();
        let zero_lambda = closed_form_sparse_fuse(&models, 0.0).unwrap();
        assert_eq!(zero_lambda, avg);
        let max_mean = avg.flat.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let huge = closed_form_sparse_fuse(&models, 4.0 * max_mean + 1.0).unwrap();
        assert!(huge.flat.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn admm_matches_closed_form() {
        for (n, dim_half) in [(2usize, 5usize), (5, 50), (24, 500)] {
            for lambda_per_n in [0.0, 0.01, 0.1, 1.0] {
                let models = random_models(n, dim_half, (n + dim_half) as u64);
                let lambda = lambda_per_n * n as f64;
                let cfg = FusionConfig { lambda, ..Default::default() };
                let out = admm_sparse_fuse(&models, &cfg).unwrap();
                assert!(out.converged, "N={n} lambda={lambda} did not converge");
                let oracle = closed_form_sparse_fuse(&models, lambda).unwrap();
                for (a, o) in out.model.flat.iter().zip(&oracle.flat) {
                    assert!((a - o).abs() <= 1e-6, "N={n} lambda={lambda}: {a} vs {o}");
                }
            }
        }
    }

    #[test]
    fn admm_all_zero_models() {
        let models = vecs_as_models(vec![vec![0.0; 6], vec![0.0; 6]]);
        let cfg = FusionConfig { lambda: 0.5, ..Default::default() };
        let out = admm_sparse_fuse(&models, &cfg).unwrap();
        assert_eq!(out.iterations, 1);
        assert!(out.model.flat.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn admm_reports_non_convergence() {
        let models = random_models(3, 8, 9);
        let cfg = FusionConfig { lambda: 0.3, max_iters: 2, tol: 1e-14, b: 1.0 };
        let out = admm_sparse_fuse(&models, &cfg).unwrap();
        assert!(!out.converged);
        assert_eq!(out.iterations, 2);
        assert_eq!(out.residual_history.len(), 2);
    }

    #[test]
    fn admm_objective_monotone_at_z() {
        let models = random_models(5, 100, 11);
        let cfg = FusionConfig { lambda: 2.0, ..Default::default() };
        let mut state = AdmmState::new(&models).unwrap();
        state.step(&cfg);
        let mut prev = state.objective_at_z(&models, cfg.lambda);
        for _ in 0..60 {
            state.step(&cfg);
            let obj = state.objective_at_z(&models, cfg.lambda);
            assert!(obj <= prev + 1e-10, "objective rose: {prev} -> {obj}");
            prev = obj;
        }
    }

    #[test]
    fn admm_zeros_are_exact_and_mask_agrees() {
        let models = random_models(5, 200, 13);
        let cfg = FusionConfig { lambda: 2.5, ..Default::default() };
        let out = admm_sparse_fuse(&models, &cfg).unwrap();
        let mask = extract_mask(&out.model, 0.0);
        let mut zeros = 0;
        for (&v, &bit) in out.model.flat.iter().zip(&mask.bits) {
            assert_eq!(bit, v != 0.0);
            if !bit {
                assert_eq!(v, 0.0);
                zeros += 1;
            }
        }
        assert!(zeros > 0, "lambda should have zeroed something");
    }

    #[test]
    fn shrinkage_monotone_in_lambda() {
        let models = random_models(5, 100, 17);
        let mut prev_rate = -1.0;
        for lambda in [0.01, 0.1, 1.0, 10.0, 100.0] {
            let cfg = FusionConfig { lambda, ..Default::default() };
            let out = admm_sparse_fuse(&models, &cfg).unwrap();
            let rate = compression_rate(&out.model, 0.0);
            assert!(rate >= prev_rate);
            prev_rate = rate;
        }
    }

    #[test]
    fn mask_threshold_semantics() {
        let m = ParameterVector::from_flat(vec![1e-9, 0.5], vec![(2, 0)]).unwrap();
        let mask = extract_mask(&m, 1e-8);
        assert_eq!(mask.bits, vec![false, true]);
        let zero = m.zeros_like();
        assert_eq!(extract_mask(&zero, 0.0).support_size(), 0);
    }

    #[test]
    fn masked_average_cases() {
        let models = vecs_as_models(vec![vec![1.0, 2.0, 3.0, 4.0], vec![3.0, 0.0, -1.0, 2.0]]);
        let all = SparsityMask::all_true(4);
        assert_eq!(masked_average_fuse(&models, &all).unwrap(), average_fuse(&models).unwrap());
        let none = SparsityMask { bits: vec![false; 4] };
        assert!(masked_average_fuse(&models, &none).unwrap().flat.iter().all(|&v| v == 0.0));
        let mixed = SparsityMask { bits: vec![true, false, true, false] };
        let fused = masked_average_fuse(&models, &mixed).unwrap();
        assert_eq!(fused.flat, vec![2.0, 0.0, 1.0, 0.0]);
        // mask idempotence: support of result within the input mask
        assert!(extract_mask(&fused, 0.0).is_subset_of(&mixed));
        let short = SparsityMask { bits: vec![true; 3] };
        assert!(masked_average_fuse(&models, &short).is_err());
    }

    #[test]
    fn compression_rate_counting() {
        let dense = random_models(1, 10, 23).remove(0);
        assert_eq!(compression_rate(&dense, 0.0), 0.0);
        let layers = LayerSpec::new(vec![4]).unwrap();
        let zero = init_model(3, &layers, 1).zeros_like();
        assert_eq!(compression_rate(&zero, 0.0), 1.0);
        let mut v = vec![0.0; 1000];
        v[0] = 1.0;
        v[499] = -2.0;
        v[999] = 0.5;
        let m = ParameterVector::from_flat(v, vec![(1000, 0)]).unwrap();
        assert!((compression_rate(&m, 0.0) - 0.997).abs() < 1e-12);
    }
}
