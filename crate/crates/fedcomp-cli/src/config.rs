//! TOML experiment configuration: parsing, defaulting and exhaustive
//! validation. Unknown keys are rejected; range violations are collected
//! and reported together with their field paths.

use std::path::Path;

use serde::{Deserialize, Serialize};

use fedcomp::fusion::FusionConfig;
use fedcomp::model::ProximalConfig;
use fedcomp::orchestrator::RoundSchedule;
use fedcomp::series::PartitionScheme;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    #[serde(default = "default_scheme")]
    pub scheme: String,
    /// Required iff `scheme = "multivariate"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_clients: Option<usize>,
    /// Window length.
    #[serde(default = "default_w")]
    pub w: usize,
    /// Hidden-layer widths of the autoencoder.
    #[serde(default = "default_layers")]
    pub layers: Vec<usize>,
    #[serde(default)]
    pub schedule: ScheduleSection,
    #[serde(default)]
    pub fusion: FusionSection,
    #[serde(default)]
    pub training: TrainingSection,
    #[serde(default)]
    pub corruption: CorruptionSection,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DatasetSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<CsvSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticSource>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvSource {
    pub path: String,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    #[serde(default = "default_true")]
    pub has_header: bool,
    /// Optional subset of feature columns to keep, in order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSource {
    pub features: usize,
    pub steps: usize,
    #[serde(default = "default_noise")]
    pub noise_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleSection {
    pub compression_rounds: usize,
    pub finetune_rounds: usize,
    pub compression_rate_target: f64,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        Self { compression_rounds: 30, finetune_rounds: 10, compression_rate_target: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FusionSection {
    pub lambda: f64,
    pub b: f64,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for FusionSection {
    fn default() -> Self {
        let d = FusionConfig::default();
        Self { lambda: d.lambda, b: d.b, tol: d.tol, max_iters: d.max_iters }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingSection {
    pub mu: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl Default for TrainingSection {
    fn default() -> Self {
        Self { mu: 0.001, epochs: 30, learning_rate: 1e-3, batch_size: 32 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorruptionSection {
    /// "imputation" or "anomaly".
    pub task: String,
    /// MCAR probability or anomaly rate, depending on the task.
    pub rate: f64,
    /// Spike magnitude as a multiple of the per-feature maximum
    /// (anomaly task only).
    pub factor: f64,
    /// Candidate threshold multipliers, tuned on the validation split
    /// (anomaly task only).
    pub c_grid: Vec<f64>,
}

impl Default for CorruptionSection {
    fn default() -> Self {
        Self {
            task: "imputation".to_string(),
            rate: 0.1,
            factor: 3.0,
            c_grid: vec![0.5, 1.0, 2.0, 3.0, 4.0, 5.0],
        }
    }
}

fn default_scheme() -> String {
    "univariate".to_string()
}
fn default_w() -> usize {
    50
}
fn default_layers() -> Vec<usize> {
    vec![64, 32, 32, 64]
}
fn default_delimiter() -> char {
    ','
}
fn default_true() -> bool {
    true
}
fn default_noise() -> f64 {
    0.1
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> CliResult<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(s).map_err(|e| CliError::Validation(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Validation(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::from_toml_str(&text)
    }

    /// Collect every range violation; error lists them all with field paths.
    pub fn validate(&self) -> CliResult<()> {
        let mut bad = Vec::new();

        match (&self.dataset.csv, &self.dataset.synthetic) {
            (None, None) => bad.push("dataset: exactly one source required, got none".to_string()),
            (Some(_), Some(_)) => {
                bad.push("dataset: exactly one source required, got both csv and synthetic"
                    .to_string());
            }
            (Some(csv), None) => {
                if csv.path.is_empty() {
                    bad.push("dataset.csv.path: must not be empty".to_string());
                }
                if !csv.delimiter.is_ascii() {
                    bad.push("dataset.csv.delimiter: must be an ASCII character".to_string());
                }
            }
            (None, Some(syn)) => {
                if syn.features == 0 {
                    bad.push("dataset.synthetic.features: must be >= 1".to_string());
                }
                if syn.steps < self.w {
                    bad.push(format!(
                        "dataset.synthetic.steps: must be >= w, got {} < {}",
                        syn.steps, self.w
                    ));
                }
                if syn.noise_std < 0.0 || syn.noise_std.is_nan() {
                    bad.push(format!(
                        "dataset.synthetic.noise_std: must be >= 0, got {}",
                        syn.noise_std
                    ));
                }
            }
        }

        match self.scheme.as_str() {
            "centralized" | "univariate" => {
                if self.n_clients.is_some() {
                    bad.push(format!(
                        "n_clients: only valid with scheme = \"multivariate\", scheme is \"{}\"",
                        self.scheme
                    ));
                }
            }
            "multivariate" => match self.n_clients {
                None => bad.push("n_clients: required for scheme = \"multivariate\"".to_string()),
                Some(0) => bad.push("n_clients: must be >= 1".to_string()),
                Some(_) => {}
            },
            other => bad.push(format!(
                "scheme: must be one of centralized|multivariate|univariate, got \"{other}\""
            )),
        }

        if self.w == 0 {
            bad.push("w: must be >= 1".to_string());
        }
        if self.layers.is_empty() {
            bad.push("layers: at least one hidden layer required".to_string());
        }
        if self.layers.contains(&0) {
            bad.push("layers: all widths must be >= 1".to_string());
        }

        if self.schedule.compression_rounds == 0 {
            bad.push("schedule.compression_rounds: must be >= 1".to_string());
        }
        if !(0.0..=1.0).contains(&self.schedule.compression_rate_target) {
            bad.push(format!(
                "schedule.compression_rate_target: must be in [0, 1], got {}",
                self.schedule.compression_rate_target
            ));
        }

        if self.fusion.lambda < 0.0 || self.fusion.lambda.is_nan() {
            bad.push(format!("fusion.lambda: must be >= 0, got {}", self.fusion.lambda));
        }
        if self.fusion.b <= 0.0 || self.fusion.b.is_nan() {
            bad.push(format!("fusion.b: must be > 0, got {}", self.fusion.b));
        }
        if self.fusion.tol <= 0.0 || self.fusion.tol.is_nan() {
            bad.push(format!("fusion.tol: must be > 0, got {}", self.fusion.tol));
        }
        if self.fusion.max_iters == 0 {
            bad.push("fusion.max_iters: must be >= 1".to_string());
        }

        if self.training.mu < 0.0 || self.training.mu.is_nan() {
            bad.push(format!("training.mu: must be >= 0, got {}", self.training.mu));
        }
        if self.training.epochs == 0 {
            bad.push("training.epochs: must be >= 1".to_string());
        }
        if self.training.learning_rate <= 0.0 || self.training.learning_rate.is_nan() {
            bad.push(format!(
                "training.learning_rate: must be > 0, got {}",
                self.training.learning_rate
            ));
        }
        if self.training.batch_size == 0 {
            bad.push("training.batch_size: must be >= 1".to_string());
        }

        match self.corruption.task.as_str() {
            "imputation" => {
                if !(0.0..=1.0).contains(&self.corruption.rate) {
                    bad.push(format!(
                        "corruption.rate: must be in [0, 1], got {}",
                        self.corruption.rate
                    ));
                }
            }
            "anomaly" => {
                if !(0.0..=1.0).contains(&self.corruption.rate) {
                    bad.push(format!(
                        "corruption.rate: must be in [0, 1], got {}",
                        self.corruption.rate
                    ));
                }
                if self.corruption.factor <= 1.0 || self.corruption.factor.is_nan() {
                    bad.push(format!(
                        "corruption.factor: must be > 1, got {}",
                        self.corruption.factor
                    ));
                }
                if self.corruption.c_grid.is_empty() {
                    bad.push("corruption.c_grid: at least one candidate required".to_string());
                }
            }
            other => bad.push(format!(
                "corruption.task: must be imputation or anomaly, got \"{other}\""
            )),
        }

        if bad.is_empty() {
            Ok(())
        } else {
            Err(CliError::Validation(bad.join("\n")))
        }
    }

    pub fn partition_scheme(&self) -> PartitionScheme {
        match self.scheme.as_str() {
            "centralized" => PartitionScheme::Centralized,
            "multivariate" => {
                PartitionScheme::Multivariate { n_clients: self.n_clients.unwrap_or(1) }
            }
            _ => PartitionScheme::Univariate,
        }
    }

    pub fn fusion_config(&self) -> FusionConfig {
        FusionConfig {
            lambda: self.fusion.lambda,
            b: self.fusion.b,
            tol: self.fusion.tol,
            max_iters: self.fusion.max_iters,
        }
    }

    pub fn proximal_config(&self) -> ProximalConfig {
        ProximalConfig {
            mu: self.training.mu,
            epochs: self.training.epochs,
            learning_rate: self.training.learning_rate,
            batch_size: self.training.batch_size,
        }
    }

    pub fn round_schedule(&self) -> RoundSchedule {
        RoundSchedule {
            compression_rounds: self.schedule.compression_rounds,
            finetune_rounds: self.schedule.finetune_rounds,
            compression_rate_target: self.schedule.compression_rate_target,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = ExperimentConfig::from_toml_str(
            "[dataset.synthetic]\nfeatures = 4\nsteps = 200\n",
        )
        .unwrap();
        assert_eq!(cfg.w, 50);
        assert_eq!(cfg.layers, vec![64, 32, 32, 64]);
        assert_eq!(cfg.scheme, "univariate");
        assert_eq!(cfg.schedule.compression_rounds, 30);
        assert_eq!(cfg.training.epochs, 30);
        assert_eq!(cfg.training.learning_rate, 1e-3);
        assert_eq!(cfg.seed, 0);
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = ExperimentConfig::from_toml_str(
            "[dataset.synthetic]\nfeatures = 4\nsteps = 200\nwindow = 10\n",
        )
        .unwrap_err();
        assert!(matches!(err, CliError::Validation(_)));
        assert!(err.to_string().contains("window"));
    }

    #[test]
    fn zero_window_names_field() {
        let err = ExperimentConfig::from_toml_str(
            "w = 0\n[dataset.synthetic]\nfeatures = 4\nsteps = 200\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("w: must be >= 1"));
    }

    #[test]
    fn violations_are_listed_exhaustively() {
        let err = ExperimentConfig::from_toml_str(
            "w = 0\nscheme = \"weird\"\n[dataset.synthetic]\nfeatures = 0\nsteps = 200\n\
             [training]\nepochs = 0\nlearning_rate = -1.0\n",
        )
        .unwrap_err();
        let msg = err.to_string();
        for needle in [
            "w: must be >= 1",
            "scheme: must be one of",
            "dataset.synthetic.features: must be >= 1",
            "training.epochs: must be >= 1",
            "training.learning_rate: must be > 0",
        ] {
            assert!(msg.contains(needle), "missing {needle:?} in {msg}");
        }
    }

    #[test]
    fn reference_settings_accepted_verbatim() {
        let cfg = ExperimentConfig::from_toml_str(
            "w = 50\n\
             [dataset.synthetic]\nfeatures = 24\nsteps = 19000\n\
             [schedule]\ncompression_rounds = 30\n\
             [training]\nepochs = 30\nlearning_rate = 1e-3\n",
        )
        .unwrap();
        assert_eq!(cfg.w, 50);
        assert_eq!(cfg.schedule.compression_rounds, 30);
        assert_eq!(cfg.training.epochs, 30);
        assert_eq!(cfg.training.learning_rate, 1e-3);
    }

    #[test]
    fn exactly_one_dataset_source() {
        let err = ExperimentConfig::from_toml_str(
            "[dataset.synthetic]\nfeatures = 4\nsteps = 200\n\
             [dataset.csv]\npath = \"x.csv\"\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("exactly one source"));
        let err = ExperimentConfig::from_toml_str("[dataset]\n").unwrap_err();
        assert!(err.to_string().contains("got none"));
    }

    #[test]
    fn multivariate_needs_client_count() {
        let err = ExperimentConfig::from_toml_str(
            "scheme = \"multivariate\"\n[dataset.synthetic]\nfeatures = 4\nsteps = 200\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("n_clients: required"));
        let cfg = ExperimentConfig::from_toml_str(
            "scheme = \"multivariate\"\nn_clients = 3\n\
             [dataset.synthetic]\nfeatures = 4\nsteps = 200\n",
        )
        .unwrap();
        assert_eq!(
            cfg.partition_scheme(),
            PartitionScheme::Multivariate { n_clients: 3 }
        );
    }

    #[test]
    fn config_round_trips_through_toml() {
        let cfg = ExperimentConfig::from_toml_str(
            "seed = 7\n[dataset.synthetic]\nfeatures = 4\nsteps = 200\n\
             [fusion]\nlambda = 0.25\n",
        )
        .unwrap();
        let text = toml::to_string(&cfg).unwrap();
        let back = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(back, cfg);
    }
}
