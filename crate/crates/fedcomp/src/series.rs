//! Multivariate time-series container plus the preprocessing pipeline:
//! standardization, corruption injection, client partitioning and
//! stride-1 sliding windows.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicUsize, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Contiguous train/validation/test split, fixed in time order.
pub const TRAIN_FRACTION: f64 = 0.70;
pub const VALIDATION_FRACTION: f64 = 0.15;

/// A D-feature, T-step measurement matrix with optional observation mask
/// and anomaly labels. Stored feature-major: cell (f, t) at `f * t_len + t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
    d: usize,
    t: usize,
    pub feature_names: Vec<String>,
    obs_mask: Vec<bool>,
    anomaly_labels: Vec<bool>,
    /// Pre-injection values, kept as ground truth after anomaly injection.
    clean_values: Option<Vec<f64>>,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>, d: usize, t: usize, feature_names: Vec<String>) -> Result<Self> {
        if values.len() != d * t {
            return Err(Error::LengthMismatch { expected: d * t, got: values.len() });
        }
        if feature_names.len() != d {
            return Err(Error::LengthMismatch { expected: d, got: feature_names.len() });
        }
        Ok(Self {
            values,
            d,
            t,
            feature_names,
            obs_mask: vec![true; d * t],
            anomaly_labels: vec![false; d * t],
            clean_values: None,
        })
    }

    pub fn num_features(&self) -> usize {
        self.d
    }

    pub fn num_steps(&self) -> usize {
        self.t
    }

    pub fn value(&self, f: usize, t: usize) -> f64 {
        self.values[f * self.t + t]
    }

    pub fn observed(&self, f: usize, t: usize) -> bool {
        self.obs_mask[f * self.t + t]
    }

    pub fn is_anomaly(&self, f: usize, t: usize) -> bool {
        self.anomaly_labels[f * self.t + t]
    }

    pub fn feature_row(&self, f: usize) -> &[f64] {
        &self.values[f * self.t..(f + 1) * self.t]
    }

    pub fn obs_row(&self, f: usize) -> &[bool] {
        &self.obs_mask[f * self.t..(f + 1) * self.t]
    }

    pub fn anomaly_row(&self, f: usize) -> &[bool] {
        &self.anomaly_labels[f * self.t..(f + 1) * self.t]
    }

    /// Ground-truth value for evaluation: pre-injection for anomalies,
    /// otherwise the stored value (MCAR keeps values intact).
    pub fn ground_truth(&self, f: usize, t: usize) -> f64 {
        match &self.clean_values {
            Some(clean) => clean[f * self.t + t],
            None => self.value(f, t),
        }
    }

    pub fn missing_count(&self) -> usize {
        self.obs_mask.iter().filter(|&&m| !m).count()
    }

    pub fn anomaly_count(&self) -> usize {
        self.anomaly_labels.iter().filter(|&&a| a).count()
    }

    /// Keep only the listed features, in the given order.
    pub fn select_features(&self, features: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(features.len() * self.t);
        let mut obs = Vec::with_capacity(features.len() * self.t);
        let mut labels = Vec::with_capacity(features.len() * self.t);
        let mut names = Vec::with_capacity(features.len());
        for &f in features {
            if f >= self.d {
                return Err(Error::InvalidParameter {
                    name: "features",
                    reason: alloc::format!("index {f} out of range for {} features", self.d),
                });
            }
            values.extend_from_slice(self.feature_row(f));
            obs.extend_from_slice(self.obs_row(f));
            labels.extend_from_slice(self.anomaly_row(f));
            names.push(self.feature_names[f].clone());
        }
        Ok(Self {
            values,
            d: features.len(),
            t: self.t,
            feature_names: names,
            obs_mask: obs,
            anomaly_labels: labels,
            clean_values: self.clean_values.as_ref().map(|clean| {
                features
                    .iter()
                    .flat_map(|&f| clean[f * self.t..(f + 1) * self.t].iter().copied())
                    .collect()
            }),
        })
    }
}

/// Per-feature mean and standard deviation from the training prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Number of prefix steps the statistics were computed on.
    pub train_steps: usize,
}

impl NormalizationStats {
    pub fn destandardize(&self, f: usize, z: f64) -> f64 {
        z * self.std[f] + self.mean[f]
    }
}

/// Z-score every feature using statistics from the observed cells of the
/// training prefix. The inverse transform is recoverable from the stats.
pub fn standardize(ts: &TimeSeries, train_fraction: f64) -> Result<(TimeSeries, NormalizationStats)> {
    if !(train_fraction > 0.0 && train_fraction <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "train_fraction",
            reason: alloc::format!("must be in (0, 1], got {train_fraction}"),
        });
    }
    let prefix = libm::floor((ts.t as f64) * train_fraction) as usize;
    let prefix = prefix.clamp(1, ts.t);

    let mut mean = vec![0.0; ts.d];
    let mut std = vec![0.0; ts.d];
    for f in 0..ts.d {
        let mut sum = 0.0;
        let mut n = 0usize;
        for t in 0..prefix {
            if ts.observed(f, t) {
                sum += ts.value(f, t);
                n += 1;
            }
        }
        if n == 0 {
            return Err(Error::ZeroVariance { feature: f });
        }
        let m = sum / n as f64;
        let mut ss = 0.0;
        for t in 0..prefix {
            if ts.observed(f, t) {
                let d = ts.value(f, t) - m;
                ss += d * d;
            }
        }
        let s = libm::sqrt(ss / n as f64);
        if s <= 0.0 {
            return Err(Error::ZeroVariance { feature: f });
        }
        mean[f] = m;
        std[f] = s;
    }

    let mut out = ts.clone();
    for f in 0..ts.d {
        for t in 0..ts.t {
            out.values[f * ts.t + t] = (ts.value(f, t) - mean[f]) / std[f];
        }
        if let Some(clean) = out.clean_values.as_mut() {
            for t in 0..ts.t {
                clean[f * ts.t + t] = (clean[f * ts.t + t] - mean[f]) / std[f];
            }
        }
    }
    Ok((out, NormalizationStats { mean, std, train_steps: prefix }))
}

/// Mark each cell missing independently with probability `p`. Missing
/// cells keep their ground-truth values internally; only the mask changes.
pub fn inject_mcar(ts: &TimeSeries, p: f64, seed: u64) -> Result<TimeSeries> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::RateOutOfRange { name: "p", value: p });
    }
    if ts.obs_mask.iter().any(|&m| !m) {
        return Err(Error::AlreadyCorrupted("missing values"));
    }
    let mut out = ts.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for m in out.obs_mask.iter_mut() {
        if rng.random::<f64>() < p {
            *m = false;
        }
    }
    Ok(out)
}

/// Overwrite, per feature, a seeded random subset of `ceil(rate * T)` cells
/// with `factor * max(feature)` computed on the clean series, labeling them
/// anomalous. Clean values are retained as ground truth.
pub fn inject_anomalies(ts: &TimeSeries, rate: f64, factor: f64, seed: u64) -> Result<TimeSeries> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::RateOutOfRange { name: "rate", value: rate });
    }
    if factor <= 1.0 {
        return Err(Error::InvalidParameter {
            name: "factor",
            reason: alloc::format!("must be > 1, got {factor}"),
        });
    }
    if ts.anomaly_labels.iter().any(|&a| a) {
        return Err(Error::AlreadyCorrupted("anomaly labels"));
    }
    let mut out = ts.clone();
    out.clean_values = Some(ts.values.clone());
    let count = libm::ceil(rate * ts.t as f64) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for f in 0..ts.d {
        let max = ts.feature_row(f).iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let spike = factor * max;
        for idx in rand::seq::index::sample(&mut rng, ts.t, count) {
            out.values[f * ts.t + idx] = spike;
            out.anomaly_labels[f * ts.t + idx] = true;
        }
    }
    Ok(out)
}

/// Stride-1 windows over an `m x t_local` feature-major segment. Window `q`
/// vectorizes columns `[q, q + w - 1]` time-major: cell (f, t) lands at
/// `(t - q) * m + f`. Unobserved entries are zeroed in the window and
/// flagged in the paired mask.
pub fn make_windows(
    local_values: &[f64],
    local_obs: &[bool],
    m: usize,
    t_local: usize,
    w: usize,
) -> Result<Vec<(Vec<f64>, Vec<bool>)>> {
    if local_values.len() != m * t_local || local_obs.len() != m * t_local {
        return Err(Error::LengthMismatch { expected: m * t_local, got: local_values.len() });
    }
    if w == 0 || t_local < w {
        return Err(Error::SegmentTooShort { len: t_local, window: w });
    }
    let q_count = t_local - w + 1;
    let mut out = Vec::with_capacity(q_count);
    for q in 0..q_count {
        let mut window = Vec::with_capacity(m * w);
        let mut mask = Vec::with_capacity(m * w);
        for t in q..q + w {
            for f in 0..m {
                let observed = local_obs[f * t_local + t];
                window.push(if observed { local_values[f * t_local + t] } else { 0.0 });
                mask.push(observed);
            }
        }
        out.push((window, mask));
    }
    Ok(out)
}

/// Which split a window or time step belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Validation,
    Test,
}

/// How the series is distributed across simulated edge devices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PartitionScheme {
    /// One client owning every feature and all time steps.
    Centralized,
    /// `n` clients, each owning all features over a disjoint consecutive
    /// time segment; the last client absorbs the remainder.
    Multivariate { n_clients: usize },
    /// One client per feature, each over all time steps.
    Univariate,
}

static WINDOW_ACCESSES: AtomicUsize = AtomicUsize::new(0);

/// A client's private windowed dataset. Window contents are only
/// reachable through counted accessors so integration tests can assert
/// that server-side code never touches raw data.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientDataset {
    pub client_id: usize,
    /// Global feature indices owned by this client.
    pub features: Vec<usize>,
    /// Owned `[start, end)` range of global time steps.
    pub time_range: (usize, usize),
    pub window_len: usize,
    windows: Vec<Vec<f64>>,
    window_masks: Vec<Vec<bool>>,
    splits: Vec<Split>,
}

impl ClientDataset {
    pub fn input_dim(&self) -> usize {
        self.features.len() * self.window_len
    }

    pub fn num_windows(&self) -> usize {
        self.windows.len()
    }

    pub fn local_steps(&self) -> usize {
        self.time_range.1 - self.time_range.0
    }

    /// Local `[start, end)` ranges of the three contiguous splits.
    pub fn split_ranges(&self) -> [(Split, usize, usize); 3] {
        let t_local = self.local_steps();
        let train_end = libm::floor((t_local as f64) * TRAIN_FRACTION) as usize;
        let val_end = libm::floor((t_local as f64) * (TRAIN_FRACTION + VALIDATION_FRACTION)) as usize;
        [
            (Split::Train, 0, train_end),
            (Split::Validation, train_end, val_end),
            (Split::Test, val_end, t_local),
        ]
    }

    pub fn split_of_window(&self, q: usize) -> Split {
        self.splits[q]
    }

    /// Windows and masks of one split. Counted raw-data access.
    pub fn windows_for(&self, split: Split) -> (Vec<&[f64]>, Vec<&[bool]>) {
        WINDOW_ACCESSES.fetch_add(1, Ordering::Relaxed);
        let mut ws = Vec::new();
        let mut ms = Vec::new();
        for (i, &s) in self.splits.iter().enumerate() {
            if s == split {
                ws.push(self.windows[i].as_slice());
                ms.push(self.window_masks[i].as_slice());
            }
        }
        (ws, ms)
    }

    /// All windows in order. Counted raw-data access.
    pub fn all_windows(&self) -> (&[Vec<f64>], &[Vec<bool>]) {
        WINDOW_ACCESSES.fetch_add(1, Ordering::Relaxed);
        (&self.windows, &self.window_masks)
    }

    /// Total number of raw-data accesses across all clients since start.
    pub fn window_access_count() -> usize {
        WINDOW_ACCESSES.load(Ordering::Relaxed)
    }
}

/// Split the series into per-client windowed datasets.
pub fn partition(ts: &TimeSeries, scheme: &PartitionScheme, w: usize) -> Result<Vec<ClientDataset>> {
    let assignments: Vec<(Vec<usize>, (usize, usize))> = match scheme {
        PartitionScheme::Centralized => {
            vec![((0..ts.num_features()).collect(), (0, ts.num_steps()))]
        }
        PartitionScheme::Multivariate { n_clients } => {
            if *n_clients < 1 {
                return Err(Error::InvalidParameter {
                    name: "n_clients",
                    reason: "must be >= 1".into(),
                });
            }
            let base = ts.num_steps() / n_clients;
            if base == 0 {
                return Err(Error::SegmentTooShort { len: ts.num_steps(), window: w });
            }
            (0..*n_clients)
                .map(|i| {
                    let start = i * base;
                    let end = if i + 1 == *n_clients { ts.num_steps() } else { (i + 1) * base };
                    ((0..ts.num_features()).collect(), (start, end))
                })
                .collect()
        }
        PartitionScheme::Univariate => (0..ts.num_features())
            .map(|f| (vec![f], (0, ts.num_steps())))
            .collect(),
    };

    let mut clients = Vec::with_capacity(assignments.len());
    for (client_id, (features, (start, end))) in assignments.into_iter().enumerate() {
        let t_local = end - start;
        let m = features.len();
        let mut local_values = Vec::with_capacity(m * t_local);
        let mut local_obs = Vec::with_capacity(m * t_local);
        for &f in &features {
            local_values.extend_from_slice(&ts.feature_row(f)[start..end]);
            local_obs.extend_from_slice(&ts.obs_row(f)[start..end]);
        }
        let pairs = make_windows(&local_values, &local_obs, m, t_local, w)?;

        let train_end = libm::floor((t_local as f64) * TRAIN_FRACTION) as usize;
        let val_end = libm::floor((t_local as f64) * (TRAIN_FRACTION + VALIDATION_FRACTION)) as usize;
        let mut windows = Vec::with_capacity(pairs.len());
        let mut window_masks = Vec::with_capacity(pairs.len());
        let mut splits = Vec::with_capacity(pairs.len());
        for (q, (window, mask)) in pairs.into_iter().enumerate() {
            let end_idx = q + w - 1;
            splits.push(if end_idx < train_end {
                Split::Train
            } else if end_idx < val_end {
                Split::Validation
            } else {
                Split::Test
            });
            windows.push(window);
            window_masks.push(mask);
        }

        clients.push(ClientDataset {
            client_id,
            features,
            time_range: (start, end),
            window_len: w,
            windows,
            window_masks,
            splits,
        });
    }
    Ok(clients)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn names(d: usize) -> Vec<String> {
        (0..d).map(|f| alloc::format!("f{f}")).collect()
    }

    fn ramp_series(d: usize, t: usize) -> TimeSeries {
        let values: Vec<f64> =
            (0..d * t).map(|i| (i as f64) * 0.37 + ((i * i) % 13) as f64 * 0.11).collect();
        TimeSeries::new(values, d, t, names(d)).unwrap()
    }

    #[test]
    fn shape_invariants() {
        let ts = ramp_series(3, 5);
        assert_eq!(ts.num_features(), 3);
        assert_eq!(ts.num_steps(), 5);
        assert_eq!(ts.missing_count(), 0);
        assert_eq!(ts.anomaly_count(), 0);
        assert!(TimeSeries::new(vec![0.0; 7], 2, 4, names(2)).is_err());
    }

    #[test]
    fn standardize_moments() {
        // feature engineered to have mean 10, std 2 on the train prefix
        let t = 100;
        let prefix = 70;
        let mut values = vec![0.0; t];
        for (i, v) in values.iter_mut().enumerate() {
            *v = 10.0 + 2.0 * if i % 2 == 0 { 1.0 } else { -1.0 };
        }
        let ts = TimeSeries::new(values, 1, t, names(1)).unwrap();
        let (std_ts, stats) = standardize(&ts, 0.70).unwrap();
        assert_eq!(stats.train_steps, prefix);
        let mut mean = 0.0;
        for i in 0..prefix {
            mean += std_ts.value(0, i);
        }
        mean /= prefix as f64;
        let mut var = 0.0;
        for i in 0..prefix {
            var += (std_ts.value(0, i) - mean) * (std_ts.value(0, i) - mean);
        }
        var /= prefix as f64;
        assert!(mean.abs() < 1e-9);
        assert!((libm::sqrt(var) - 1.0).abs() < 1e-9);
        assert!((stats.mean[0] - 10.0).abs() < 1e-9);
        assert!((stats.std[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn standardize_idempotent_on_standardized_input() {
        let ts = ramp_series(2, 200);
        let (once, _) = standardize(&ts, 0.7).unwrap();
        let (twice, stats) = standardize(&once, 0.7).unwrap();
        // second pass finds mean ~0, std ~1, so values barely move
        for f in 0..2 {
            assert!(stats.mean[f].abs() < 1e-9);
            assert!((stats.std[f] - 1.0).abs() < 1e-9);
            for t in 0..200 {
                assert!((once.value(f, t) - twice.value(f, t)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn standardize_rejects_constant_feature() {
        let ts = TimeSeries::new(vec![5.0; 50], 1, 50, names(1)).unwrap();
        assert_eq!(standardize(&ts, 0.7).unwrap_err(), Error::ZeroVariance { feature: 0 });
    }

    #[test]
    fn window_boundary_cases() {
        let vals = vec![1.0, 2.0, 3.0];
        let obs = vec![true; 3];
        let one = make_windows(&vals, &obs, 1, 3, 3).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].0, vals);
        assert!(make_windows(&vals, &obs, 1, 3, 4).is_err());
    }

    #[test]
    fn window_count_formula() {
        let t = 19_000;
        let vals = vec![0.5; t];
        let obs = vec![true; t];
        let ws = make_windows(&vals, &obs, 1, t, 50).unwrap();
        assert_eq!(ws.len(), 18_951);
        assert!(ws.iter().all(|(w, _)| w.len() == 50));
    }

    #[test]
    fn window_multifeature_by_hand() {
        // m=2, t_local=4, w=3 -> 2 windows of length 6
        let vals = vec![
            1.0, 2.0, 3.0, 4.0, // feature 0
            10.0, 20.0, 30.0, 40.0, // feature 1
        ];
        let obs = vec![true; 8];
        let ws = make_windows(&vals, &obs, 2, 4, 3).unwrap();
        assert_eq!(ws.len(), 2);
        assert_eq!(ws[0].0, vec![1.0, 10.0, 2.0, 20.0, 3.0, 30.0]);
        assert_eq!(ws[1].0, vec![2.0, 20.0, 3.0, 30.0, 4.0, 40.0]);
    }

    #[test]
    fn windows_zero_missing_positions() {
        let vals = vec![1.0, 2.0, 3.0];
        let obs = vec![true, false, true];
        let ws = make_windows(&vals, &obs, 1, 3, 3).unwrap();
        assert_eq!(ws[0].0, vec![1.0, 0.0, 3.0]);
        assert_eq!(ws[0].1, vec![true, false, true]);
    }

    #[test]
    fn window_reconstruction_via_overlap_average() {
        let ts = ramp_series(2, 40);
        let obs = vec![true; 80];
        let mut vals = Vec::new();
        for f in 0..2 {
            vals.extend_from_slice(ts.feature_row(f));
        }
        let w = 5;
        let ws = make_windows(&vals, &obs, 2, 40, w).unwrap();
        let mut acc = vec![0.0; 80];
        let mut cnt = vec![0usize; 80];
        for (q, (window, _)) in ws.iter().enumerate() {
            for t in q..q + w {
                for f in 0..2 {
                    acc[f * 40 + t] += window[(t - q) * 2 + f];
                    cnt[f * 40 + t] += 1;
                }
            }
        }
        for i in 0..80 {
            assert!((acc[i] / cnt[i] as f64 - vals[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn mcar_boundaries_and_determinism() {
        let ts = ramp_series(4, 25);
        let same = inject_mcar(&ts, 0.0, 1).unwrap();
        assert_eq!(same.missing_count(), 0);
        let all = inject_mcar(&ts, 1.0, 1).unwrap();
        assert_eq!(all.missing_count(), 100);
        let a = inject_mcar(&ts, 0.3, 42).unwrap();
        let b = inject_mcar(&ts, 0.3, 42).unwrap();
        assert_eq!(a, b);
        assert!(inject_mcar(&ts, 1.5, 1).is_err());
        assert!(inject_mcar(&a, 0.3, 1).is_err());
        // values retained under the mask
        for f in 0..4 {
            for t in 0..25 {
                assert_eq!(a.value(f, t), ts.value(f, t));
            }
        }
    }

    #[test]
    fn mcar_rate_concentrates() {
        // D*T = 10_000, +-1% of p across 5 seeds
        let ts = ramp_series(10, 1000);
        for seed in 0..5u64 {
            let injected = inject_mcar(&ts, 0.3, seed).unwrap();
            let frac = injected.missing_count() as f64 / 10_000.0;
            assert!((frac - 0.3).abs() <= 0.01, "seed {seed}: {frac}");
        }
    }

    #[test]
    fn anomaly_injection_by_hand() {
        let t = 20;
        let mut values = vec![0.0; t];
        for (i, v) in values.iter_mut().enumerate() {
            *v = (i as f64) * 0.2; // max 3.8
        }
        values[7] = 5.0; // feature max
        let ts = TimeSeries::new(values, 1, t, names(1)).unwrap();
        let out = inject_anomalies(&ts, 0.1, 3.0, 5).unwrap();
        assert_eq!(out.anomaly_count(), 2); // ceil(0.1 * 20)
        for i in 0..t {
            if out.is_anomaly(0, i) {
                assert_eq!(out.value(0, i), 15.0);
                assert_eq!(out.ground_truth(0, i), ts.value(0, i));
            } else {
                assert_eq!(out.value(0, i), ts.value(0, i));
            }
        }
    }

    #[test]
    fn anomaly_boundaries() {
        let ts = ramp_series(2, 10);
        let none = inject_anomalies(&ts, 0.0, 3.0, 1).unwrap();
        assert_eq!(none.anomaly_count(), 0);
        assert_eq!(none.value(1, 3), ts.value(1, 3));
        let all = inject_anomalies(&ts, 1.0, 3.0, 1).unwrap();
        assert_eq!(all.anomaly_count(), 20);
        assert!(inject_anomalies(&ts, -0.1, 3.0, 1).is_err());
        assert!(inject_anomalies(&ts, 0.1, 0.5, 1).is_err());
        assert!(inject_anomalies(&all, 0.1, 3.0, 1).is_err());
        let a = inject_anomalies(&ts, 0.3, 3.0, 7).unwrap();
        let b = inject_anomalies(&ts, 0.3, 3.0, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn partition_schemes() {
        let ts = ramp_series(6, 300);
        let w = 10;
        let central = partition(&ts, &PartitionScheme::Centralized, w).unwrap();
        assert_eq!(central.len(), 1);
        assert_eq!(central[0].features.len(), 6);
        assert_eq!(central[0].input_dim(), 60);

        let multi = partition(&ts, &PartitionScheme::Multivariate { n_clients: 4 }, w).unwrap();
        assert_eq!(multi.len(), 4);
        for c in &multi[..3] {
            assert_eq!(c.local_steps(), 75);
        }
        assert_eq!(multi[3].local_steps(), 75);
        // time segments disjoint and covering
        let mut covered = 0;
        for c in &multi {
            assert_eq!(c.time_range.0, covered);
            covered = c.time_range.1;
        }
        assert_eq!(covered, 300);

        let uni = partition(&ts, &PartitionScheme::Univariate, w).unwrap();
        assert_eq!(uni.len(), 6);
        let mut all_features: Vec<usize> = uni.iter().flat_map(|c| c.features.clone()).collect();
        all_features.sort_unstable();
        assert_eq!(all_features, (0..6).collect::<Vec<_>>());
        for c in &uni {
            assert_eq!(c.num_windows(), 300 - w + 1);
            assert_eq!(c.input_dim(), w);
        }

        assert!(partition(&ts, &PartitionScheme::Multivariate { n_clients: 0 }, w).is_err());
    }

    #[test]
    fn multivariate_remainder_goes_to_last_client() {
        let ts = ramp_series(2, 103);
        let parts = partition(&ts, &PartitionScheme::Multivariate { n_clients: 4 }, 5).unwrap();
        assert_eq!(parts[0].local_steps(), 25);
        assert_eq!(parts[3].local_steps(), 28);
    }

    #[test]
    fn split_designation_is_contiguous() {
        let ts = ramp_series(1, 200);
        let parts = partition(&ts, &PartitionScheme::Univariate, 10).unwrap();
        let c = &parts[0];
        let mut seen_val = false;
        let mut seen_test = false;
        for q in 0..c.num_windows() {
            match c.split_of_window(q) {
                Split::Train => assert!(!seen_val && !seen_test),
                Split::Validation => {
                    seen_val = true;
                    assert!(!seen_test);
                }
                Split::Test => seen_test = true,
            }
        }
        assert!(seen_val && seen_test);
        let (train_ws, train_ms) = c.windows_for(Split::Train);
        assert_eq!(train_ws.len(), train_ms.len());
        assert!(!train_ws.is_empty());
        // train windows end strictly inside the train range
        let ranges = c.split_ranges();
        assert_eq!(ranges[0], (Split::Train, 0, 140));
        assert_eq!(ranges[1], (Split::Validation, 140, 170));
        assert_eq!(ranges[2], (Split::Test, 170, 200));
    }

    #[test]
    fn feature_selection() {
        let ts = ramp_series(4, 10);
        let sel = ts.select_features(&[2, 0]).unwrap();
        assert_eq!(sel.num_features(), 2);
        assert_eq!(sel.feature_row(0), ts.feature_row(2));
        assert_eq!(sel.feature_names[1], "f0".to_string());
        assert!(ts.select_features(&[9]).is_err());
    }
}
