//! Experiment report: structured JSON, a flat per-round CSV and a
//! human-readable summary table. Timings go to a separate file so the
//! main artifacts are byte-identical across runs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use fedcomp::orchestrator::{RoundRecord, Stage};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRow {
    pub round: usize,
    pub stage: String,
    pub compression_rate: f64,
    pub client_losses: Vec<f64>,
    pub mean_train_loss: f64,
    pub mean_validation_loss: f64,
    pub fusion_iterations: usize,
    pub fusion_converged: bool,
}

impl RoundRow {
    pub fn from_record(r: &RoundRecord) -> Self {
        let n = r.client_losses.len().max(1) as f64;
        Self {
            round: r.round,
            stage: match r.stage {
                Stage::Compression => "compression".to_string(),
                Stage::Finetune => "finetune".to_string(),
            },
            compression_rate: r.compression_rate,
            client_losses: r.client_losses.clone(),
            mean_train_loss: r.client_losses.iter().sum::<f64>() / n,
            mean_validation_loss: r.mean_validation_loss,
            fusion_iterations: r.fusion_iterations,
            fusion_converged: r.fusion_converged,
        }
    }
}

/// Final task metrics; which variant is present depends on the task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum TaskMetrics {
    Imputation {
        /// RMSE over missing cells in the units of the input data.
        rmse: f64,
        missing_cells: usize,
    },
    Anomaly {
        precision: f64,
        recall: f64,
        accuracy: f64,
        /// Threshold multiplier chosen on the validation split.
        chosen_c: f64,
        tp: usize,
        fp: usize,
        tn: usize,
        fn_: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    /// Every effective parameter, defaults included.
    pub config: ExperimentConfig,
    pub num_clients: usize,
    pub input_dim: usize,
    pub rounds: Vec<RoundRow>,
    pub metrics: TaskMetrics,
    pub param_count: usize,
    pub nonzero_count: usize,
    pub compression_rate: f64,
}

/// Wall-clock timings, written separately from the deterministic files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Timings {
    pub data_seconds: f64,
    pub federation_seconds: f64,
    pub evaluation_seconds: f64,
    pub total_seconds: f64,
}

pub const REPORT_FILE: &str = "report.json";
pub const ROUNDS_FILE: &str = "rounds.csv";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const TIMINGS_FILE: &str = "timings.json";

/// Write report.json, rounds.csv and summary.txt (all deterministic)
/// plus timings.json.
pub fn emit_report(report: &ExperimentReport, timings: &Timings, dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir)?;

    let json = serde_json::to_string_pretty(report)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    std::fs::write(dir.join(REPORT_FILE), json + "\n")?;

    let mut w = csv::Writer::from_path(dir.join(ROUNDS_FILE))?;
    w.write_record([
        "round",
        "stage",
        "compression_rate",
        "mean_train_loss",
        "mean_validation_loss",
        "fusion_iterations",
        "fusion_converged",
    ])
    .map_err(|e| CliError::Runtime(e.to_string()))?;
    for r in &report.rounds {
        w.write_record([
            r.round.to_string(),
            r.stage.clone(),
            format!("{}", r.compression_rate),
            format!("{}", r.mean_train_loss),
            format!("{}", r.mean_validation_loss),
            r.fusion_iterations.to_string(),
            r.fusion_converged.to_string(),
        ])
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    w.flush()?;

    std::fs::write(dir.join(SUMMARY_FILE), summary_text(report))?;

    let tjson = serde_json::to_string_pretty(timings)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    std::fs::write(dir.join(TIMINGS_FILE), tjson + "\n")?;
    Ok(())
}

pub fn parse_report(dir: &Path) -> CliResult<ExperimentReport> {
    let text = std::fs::read_to_string(dir.join(REPORT_FILE))?;
    serde_json::from_str(&text).map_err(|e| CliError::Runtime(e.to_string()))
}

/// Human-readable table mirroring the usual result layout:
/// scheme, parameter counts, compression rate, then task metrics.
fn summary_text(report: &ExperimentReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<14} {:>10} {:>12} {:>15}",
        "Scheme", "No. Para.", "Nonzero", "Compress. rate"
    ));
    let metric_cols: Vec<(String, String)> = match &report.metrics {
        TaskMetrics::Anomaly { precision, recall, accuracy, chosen_c, .. } => vec![
            ("Precision".to_string(), format!("{precision:.4}")),
            ("Recall".to_string(), format!("{recall:.4}")),
            ("Accuracy".to_string(), format!("{accuracy:.4}")),
            ("c".to_string(), format!("{chosen_c}")),
        ],
        TaskMetrics::Imputation { rmse, missing_cells } => vec![
            ("RMSE".to_string(), format!("{rmse:.6}")),
            ("Missing".to_string(), missing_cells.to_string()),
        ],
    };
    for (name, _) in &metric_cols {
        out.push_str(&format!(" {:>10}", name));
    }
    out.push('\n');
    out.push_str(&format!(
        "{:<14} {:>10} {:>12} {:>14.2}%",
        report.config.scheme,
        report.param_count,
        report.nonzero_count,
        report.compression_rate * 100.0
    ));
    for (_, value) in &metric_cols {
        out.push_str(&format!(" {:>10}", value));
    }
    out.push('\n');
    out.push_str(&format!(
        "\nclients: {}, input dim: {}, rounds: {}\n",
        report.num_clients,
        report.input_dim,
        report.rounds.len()
    ));
    out
}
