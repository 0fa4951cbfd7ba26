//! End-to-end experiment pipeline: data loading, corruption injection,
//! standardization, partitioning, federated training and task evaluation.

use std::path::Path;
use std::time::Instant;

use fedcomp::eval::{
    calibrate_threshold, detection_metrics, imputation_rmse, reconstruct_cells, DetectionMetrics,
};
use fedcomp::fusion::{compression_rate, extract_mask};
use fedcomp::orchestrator::{run_federation, FederationTopology, Stage};
use fedcomp::param::param_count;
use fedcomp::series::{
    inject_anomalies, inject_mcar, partition, standardize, ClientDataset, NormalizationStats,
    TimeSeries, TRAIN_FRACTION,
};
use fedcomp::synth::{generate_synthetic, SyntheticSpec};
use fedcomp::{LayerSpec, ParameterVector};

use crate::checkpoint::{save_checkpoint, CheckpointMeta};
use crate::config::ExperimentConfig;
use crate::csvio::load_csv;
use crate::error::{CliError, CliResult};
use crate::parallel::RayonPool;
use crate::report::{ExperimentReport, RoundRow, TaskMetrics, Timings};

/// Everything derived from the config before training starts.
pub struct PreparedExperiment {
    /// Corrupted series in physical units.
    pub raw: TimeSeries,
    /// Corrupted series after z-scoring; what clients train on.
    pub standardized: TimeSeries,
    pub stats: NormalizationStats,
    pub clients: Vec<ClientDataset>,
    pub layers: LayerSpec,
}

const MCAR_SEED_SALT: u64 = 0x6d63_6172;
const ANOMALY_SEED_SALT: u64 = 0x616e_6f6d;

/// Load the dataset named by the config, without corruption.
pub fn load_dataset(cfg: &ExperimentConfig) -> CliResult<TimeSeries> {
    match (&cfg.dataset.csv, &cfg.dataset.synthetic) {
        (Some(csv), None) => load_csv(csv),
        (None, Some(syn)) => {
            let spec =
                SyntheticSpec::correlated(syn.features, syn.steps, syn.noise_std, cfg.seed);
            generate_synthetic(&spec).map_err(|e| CliError::Validation(e.to_string()))
        }
        _ => Err(CliError::Validation("dataset: exactly one source required".to_string())),
    }
}

pub fn prepare(cfg: &ExperimentConfig) -> CliResult<PreparedExperiment> {
    cfg.validate()?;
    let clean = load_dataset(cfg)?;
    let raw = match cfg.corruption.task.as_str() {
        "imputation" => inject_mcar(&clean, cfg.corruption.rate, cfg.seed ^ MCAR_SEED_SALT)
            .map_err(|e| CliError::Validation(e.to_string()))?,
        "anomaly" => inject_anomalies(
            &clean,
            cfg.corruption.rate,
            cfg.corruption.factor,
            cfg.seed ^ ANOMALY_SEED_SALT,
        )
        .map_err(|e| CliError::Validation(e.to_string()))?,
        other => {
            return Err(CliError::Validation(format!("corruption.task: unknown task {other:?}")))
        }
    };
    let (standardized, stats) =
        standardize(&raw, TRAIN_FRACTION).map_err(|e| CliError::Validation(e.to_string()))?;
    let clients = partition(&standardized, &cfg.partition_scheme(), cfg.w)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let layers =
        LayerSpec::new(cfg.layers.clone()).map_err(|e| CliError::Validation(e.to_string()))?;
    Ok(PreparedExperiment { raw, standardized, stats, clients, layers })
}

/// Train the federation described by the config on prepared data.
pub fn train(
    cfg: &ExperimentConfig,
    prepared: &PreparedExperiment,
    checkpoint_dir: Option<&Path>,
) -> CliResult<(ParameterVector, Vec<RoundRow>)> {
    let topo = FederationTopology::uniform(
        prepared.clients.clone(),
        cfg.proximal_config(),
        prepared.layers.clone(),
        cfg.scheme.clone(),
    )?;
    let seq = topo.into_pool(cfg.seed);
    let pool = RayonPool { clients: seq.clients, base_seed: seq.base_seed };

    let mut ckpt_err: Option<CliError> = None;
    let mut hook = |record: &fedcomp::orchestrator::RoundRecord,
                    global: &ParameterVector,
                    mask: Option<&fedcomp::SparsityMask>|
     -> fedcomp::Result<()> {
        if let Some(dir) = checkpoint_dir {
            let meta = CheckpointMeta {
                stage: match record.stage {
                    Stage::Compression => "compression".to_string(),
                    Stage::Finetune => "finetune".to_string(),
                },
                round: record.round,
                compression_rate: record.compression_rate,
                support: mask.map(|m| m.bits.clone()),
            };
            if let Err(e) = save_checkpoint(dir, &meta, global) {
                ckpt_err = Some(e);
                return Err(fedcomp::Error::InvalidParameter {
                    name: "checkpoint",
                    reason: "write failed".to_string(),
                });
            }
        }
        Ok(())
    };

    let outcome = run_federation(
        &pool,
        &prepared.layers,
        &cfg.round_schedule(),
        &cfg.fusion_config(),
        cfg.seed,
        Some(&mut hook),
    );
    if let Some(e) = ckpt_err {
        return Err(e);
    }
    let outcome = outcome?;
    let rounds = outcome.records.iter().map(RoundRow::from_record).collect();
    Ok((outcome.global, rounds))
}

/// Task evaluation of a trained global model on prepared data.
pub fn evaluate(
    cfg: &ExperimentConfig,
    global: &ParameterVector,
    prepared: &PreparedExperiment,
) -> CliResult<TaskMetrics> {
    match cfg.corruption.task.as_str() {
        "imputation" => evaluate_imputation(global, prepared),
        "anomaly" => evaluate_anomaly(cfg, global, prepared),
        other => Err(CliError::Validation(format!("corruption.task: unknown task {other:?}"))),
    }
}

/// RMSE over all missing cells, in the units of the input data.
fn evaluate_imputation(
    global: &ParameterVector,
    prepared: &PreparedExperiment,
) -> CliResult<TaskMetrics> {
    let mut truth = Vec::new();
    let mut recon = Vec::new();
    let mut obs = Vec::new();
    for client in &prepared.clients {
        let field = reconstruct_cells(global, client)?;
        let (lo, _) = client.time_range;
        for (fl, &f) in client.features.iter().enumerate() {
            for tl in 0..client.local_steps() {
                truth.push(prepared.raw.ground_truth(f, lo + tl));
                recon.push(prepared.stats.destandardize(f, field.recon[field.cell(fl, tl)]));
                obs.push(prepared.raw.observed(f, lo + tl));
            }
        }
    }
    let rmse = imputation_rmse(&truth, &recon, &obs)?;
    let missing_cells = obs.iter().filter(|&&o| !o).count();
    Ok(TaskMetrics::Imputation { rmse, missing_cells })
}

/// One client's cell-level scores and labels, split by time range.
struct ClientScores {
    train_scores: Vec<f64>,
    /// (score, is_anomaly) per validation cell.
    validation: Vec<(f64, bool)>,
    /// (score, is_anomaly) per test cell.
    test: Vec<(f64, bool)>,
}

fn collect_scores(
    global: &ParameterVector,
    prepared: &PreparedExperiment,
) -> CliResult<Vec<ClientScores>> {
    let mut out = Vec::with_capacity(prepared.clients.len());
    for client in &prepared.clients {
        let field = reconstruct_cells(global, client)?;
        let (lo, _) = client.time_range;
        let ranges = client.split_ranges();
        let mut scores = ClientScores {
            train_scores: Vec::new(),
            validation: Vec::new(),
            test: Vec::new(),
        };
        for (split, start, end) in ranges {
            for (fl, &f) in client.features.iter().enumerate() {
                for tl in start..end {
                    if !field.observed[field.cell(fl, tl)] {
                        continue;
                    }
                    let s = field.score[field.cell(fl, tl)];
                    let label = prepared.standardized.is_anomaly(f, lo + tl);
                    match split {
                        fedcomp::series::Split::Train => scores.train_scores.push(s),
                        fedcomp::series::Split::Validation => scores.validation.push((s, label)),
                        fedcomp::series::Split::Test => scores.test.push((s, label)),
                    }
                }
            }
        }
        out.push(scores);
    }
    Ok(out)
}

/// Per-client thresholds `E = mean + c * std` over training-cell scores;
/// `c` is chosen from the config grid by pooled validation accuracy, and
/// the reported confusion matrix comes from the pooled test cells.
fn evaluate_anomaly(
    cfg: &ExperimentConfig,
    global: &ParameterVector,
    prepared: &PreparedExperiment,
) -> CliResult<TaskMetrics> {
    let per_client = collect_scores(global, prepared)?;

    let metrics_at = |c: f64, pick: fn(&ClientScores) -> &[(f64, bool)]| -> CliResult<DetectionMetrics> {
        let mut predicted = Vec::new();
        let mut truth = Vec::new();
        for scores in &per_client {
            let (_, e) = calibrate_threshold(&scores.train_scores, c)?;
            for &(s, label) in pick(scores) {
                predicted.push(s > e);
                truth.push(label);
            }
        }
        Ok(detection_metrics(&predicted, &truth)?)
    };

    let mut best: Option<(f64, f64)> = None; // (accuracy, c)
    for &c in &cfg.corruption.c_grid {
        let m = metrics_at(c, |s| &s.validation)?;
        let better = match best {
            None => true,
            Some((acc, _)) => m.accuracy > acc,
        };
        if better {
            best = Some((m.accuracy, c));
        }
    }
    let (_, chosen_c) = best.ok_or_else(|| {
        CliError::Validation("corruption.c_grid: at least one candidate required".to_string())
    })?;

    let m = metrics_at(chosen_c, |s| &s.test)?;
    Ok(TaskMetrics::Anomaly {
        precision: m.precision,
        recall: m.recall,
        accuracy: m.accuracy,
        chosen_c,
        tp: m.tp,
        fp: m.fp,
        tn: m.tn,
        fn_: m.fn_,
    })
}

/// Full pipeline; returns the report, wall-clock timings and the final
/// global model.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    checkpoint_dir: Option<&Path>,
) -> CliResult<(ExperimentReport, Timings, ParameterVector)> {
    let t0 = Instant::now();
    let prepared = prepare(cfg)?;
    let t1 = Instant::now();
    let (global, rounds) = train(cfg, &prepared, checkpoint_dir)?;
    let t2 = Instant::now();
    let metrics = evaluate(cfg, &global, &prepared)?;
    let t3 = Instant::now();

    let input_dim = prepared.clients[0].input_dim();
    let total = param_count(input_dim, &prepared.layers);
    let nonzero = extract_mask(&global, 0.0).support_size();
    let report = ExperimentReport {
        config: cfg.clone(),
        num_clients: prepared.clients.len(),
        input_dim,
        rounds,
        metrics,
        param_count: total,
        nonzero_count: nonzero,
        compression_rate: compression_rate(&global, 0.0),
    };
    let timings = Timings {
        data_seconds: (t1 - t0).as_secs_f64(),
        federation_seconds: (t2 - t1).as_secs_f64(),
        evaluation_seconds: (t3 - t2).as_secs_f64(),
        total_seconds: (t3 - t0).as_secs_f64(),
    };
    Ok((report, timings, global))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_imputation_config() -> ExperimentConfig {
        ExperimentConfig::from_toml_str(
            "seed = 3\nw = 10\nlayers = [8, 4, 8]\n\
             [dataset.synthetic]\nfeatures = 3\nsteps = 150\nnoise_std = 0.05\n\
             [schedule]\ncompression_rounds = 2\nfinetune_rounds = 1\n\
             [fusion]\nlambda = 0.05\n\
             [training]\nepochs = 2\nlearning_rate = 0.01\nbatch_size = 16\nmu = 0.01\n\
             [corruption]\ntask = \"imputation\"\nrate = 0.2\n",
        )
        .unwrap()
    }

    #[test]
    fn imputation_pipeline_produces_consistent_report() {
        let cfg = tiny_imputation_config();
        let (report, _, global) = run_experiment(&cfg, None).unwrap();
        assert_eq!(report.num_clients, 3);
        assert_eq!(report.input_dim, 10);
        assert_eq!(report.rounds.len(), 3);
        // invariant: compression rate consistent with nonzero/total counts
        let expect = (report.param_count - report.nonzero_count) as f64
            / report.param_count as f64;
        assert!((report.compression_rate - expect).abs() < 1e-15);
        assert_eq!(global.len(), report.param_count);
        match report.metrics {
            TaskMetrics::Imputation { rmse, missing_cells } => {
                assert!(rmse.is_finite() && rmse >= 0.0);
                assert!(missing_cells > 0);
            }
            _ => panic!("wrong task"),
        }
    }

    #[test]
    fn anomaly_pipeline_reports_confusion_totals() {
        let mut cfg = tiny_imputation_config();
        cfg.corruption.task = "anomaly".to_string();
        cfg.corruption.rate = 0.1;
        cfg.corruption.c_grid = vec![1.0, 3.0];
        let (report, _, _) = run_experiment(&cfg, None).unwrap();
        match report.metrics {
            TaskMetrics::Anomaly { tp, fp, tn, fn_, chosen_c, .. } => {
                assert!(tp + fp + tn + fn_ > 0);
                assert!(cfg.corruption.c_grid.contains(&chosen_c));
            }
            _ => panic!("wrong task"),
        }
    }

    #[test]
    fn experiment_is_deterministic() {
        let cfg = tiny_imputation_config();
        let (a, _, ga) = run_experiment(&cfg, None).unwrap();
        let (b, _, gb) = run_experiment(&cfg, None).unwrap();
        assert_eq!(a, b);
        assert_eq!(ga.flat, gb.flat);
    }

    #[test]
    fn checkpoints_written_each_round() {
        let cfg = tiny_imputation_config();
        let dir = tempfile::tempdir().unwrap();
        let (_, _, global) = run_experiment(&cfg, Some(dir.path())).unwrap();
        let (meta, model) = crate::checkpoint::load_checkpoint(dir.path()).unwrap();
        // last checkpoint is the final fine-tune round
        assert_eq!(meta.stage, "finetune");
        assert_eq!(meta.round, 1);
        assert_eq!(model.flat, global.flat);
        assert!(meta.support.is_some());
    }
}
