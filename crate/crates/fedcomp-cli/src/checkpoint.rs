//! Per-round checkpoints: the current global model in its binary format
//! plus a small JSON sidecar with stage, round and the frozen support.

use std::path::Path;

use serde::{Deserialize, Serialize};

use fedcomp::{ParameterVector, SparsityMask};

use crate::error::{CliError, CliResult};

pub const MODEL_FILE: &str = "global.fpv";
pub const META_FILE: &str = "checkpoint.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub stage: String,
    pub round: usize,
    pub compression_rate: f64,
    /// Frozen support during fine-tuning; absent in the compression stage.
    pub support: Option<Vec<bool>>,
}

pub fn save_checkpoint(
    dir: &Path,
    meta: &CheckpointMeta,
    model: &ParameterVector,
) -> CliResult<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(MODEL_FILE), model.to_bytes())?;
    let json =
        serde_json::to_string_pretty(meta).map_err(|e| CliError::Runtime(e.to_string()))?;
    std::fs::write(dir.join(META_FILE), json + "\n")?;
    Ok(())
}

pub fn load_checkpoint(dir: &Path) -> CliResult<(CheckpointMeta, ParameterVector)> {
    let meta: CheckpointMeta =
        serde_json::from_str(&std::fs::read_to_string(dir.join(META_FILE))?)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    let model = load_model(&dir.join(MODEL_FILE))?;
    Ok((meta, model))
}

pub fn load_model(path: &Path) -> CliResult<ParameterVector> {
    let bytes = std::fs::read(path)?;
    ParameterVector::from_bytes(&bytes)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

pub fn mask_from_meta(meta: &CheckpointMeta) -> Option<SparsityMask> {
    meta.support.as_ref().map(|bits| SparsityMask { bits: bits.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use fedcomp::model::init_model;
    use fedcomp::LayerSpec;

    #[test]
    fn checkpoint_round_trips() {
        let layers = LayerSpec::new(vec![4, 3, 4]).unwrap();
        let model = init_model(5, &layers, 11);
        let meta = CheckpointMeta {
            stage: "finetune".to_string(),
            round: 3,
            compression_rate: 0.4,
            support: Some(model.flat.iter().map(|&v| v != 0.0).collect()),
        };
        let dir = tempfile::tempdir().unwrap();
        save_checkpoint(dir.path(), &meta, &model).unwrap();
        let (m2, model2) = load_checkpoint(dir.path()).unwrap();
        assert_eq!(m2, meta);
        assert_eq!(model2, model);
        assert_eq!(mask_from_meta(&meta).unwrap().len(), model.len());
    }

    #[test]
    fn corrupt_model_file_is_a_validation_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.fpv");
        std::fs::write(&p, b"garbage").unwrap();
        let err = load_model(&p).unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }
}
