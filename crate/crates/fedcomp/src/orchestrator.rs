//! Two-stage federated driver: a compression stage (proximal local
//! training + ADMM fusion, up to M rounds or until the target compression
//! rate is reached) followed by a masked fine-tuning stage (J rounds of
//! gradient-masked training + masked averaging that never revives zeros).
//!
//! Transport is an in-process, round-tagged message exchange behind the
//! [`ClientPool`] trait; a parallel pool can be plugged in without
//! touching the protocol logic.

use alloc::vec::Vec;

use crate::fusion::{self, FusionConfig};
use crate::model::{local_train, ProximalConfig};
use crate::param::{LayerSpec, ParameterVector, SparsityMask};
use crate::series::{ClientDataset, Split};
use crate::{Error, Result};

/// Round counts and the gate between the two stages.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundSchedule {
    /// Hard cap on compression-stage communication rounds.
    pub compression_rounds: usize,
    /// Fine-tuning rounds.
    pub finetune_rounds: usize,
    /// Compression stage exits early once the global compression rate
    /// reaches this value.
    pub compression_rate_target: f64,
}

impl RoundSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.compression_rounds == 0 {
            return Err(Error::InvalidParameter {
                name: "compression_rounds",
                reason: "must be >= 1".into(),
            });
        }
        if !(0.0..=1.0).contains(&self.compression_rate_target) {
            return Err(Error::RateOutOfRange {
                name: "compression_rate_target",
                value: self.compression_rate_target,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Compression,
    Finetune,
}

/// Identifies one broadcast-train-aggregate cycle; carried on every
/// message so fusion provably uses models from its own round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundTag {
    pub stage: Stage,
    /// 1-based round index within the stage.
    pub round: usize,
}

/// One client's reply for a round.
#[derive(Debug, Clone)]
pub struct ClientUpdate {
    pub client_id: usize,
    pub tag: RoundTag,
    pub model: ParameterVector,
    pub train_loss: f64,
    pub validation_loss: f64,
}

/// Per-round ledger entry.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    pub stage: Stage,
    pub compression_rate: f64,
    pub client_losses: Vec<f64>,
    pub mean_validation_loss: f64,
    pub fusion_iterations: usize,
    pub fusion_converged: bool,
}

/// A simulated edge device: private windowed data plus its training
/// settings. Raw windows never leave this object; only trained models do.
#[derive(Debug, Clone)]
pub struct Client {
    pub data: ClientDataset,
    pub cfg: ProximalConfig,
}

impl Client {
    pub fn id(&self) -> usize {
        self.data.client_id
    }

    pub fn train(
        &self,
        tag: RoundTag,
        global: &ParameterVector,
        grad_mask: Option<&SparsityMask>,
        seed: u64,
    ) -> Result<ClientUpdate> {
        let (windows, masks) = self.data.windows_for(Split::Train);
        let outcome = local_train(global, &windows, &masks, global, &self.cfg, grad_mask, seed)?;
        let (val_windows, val_masks) = self.data.windows_for(Split::Validation);
        let mut val_loss = 0.0;
        for (x, m) in val_windows.iter().zip(&val_masks) {
            let x_hat = crate::model::forward(&outcome.model, x)?;
            val_loss += crate::model::masked_loss(x, &x_hat, m).value;
        }
        if !val_windows.is_empty() {
            val_loss /= val_windows.len() as f64;
        }
        Ok(ClientUpdate {
            client_id: self.id(),
            tag,
            model: outcome.model,
            train_loss: outcome.final_loss,
            validation_loss: val_loss,
        })
    }
}

/// Per-client seed for one round, derived so that a full run is a pure
/// function of the base seed.
pub fn derive_client_seed(base: u64, tag: RoundTag, client_id: usize) -> u64 {
    let stage_bit = match tag.stage {
        Stage::Compression => 0u64,
        Stage::Finetune => 1u64,
    };
    let mut x = base
        ^ (client_id as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
        ^ (tag.round as u64).wrapping_mul(0xbf58_476d_1ce4_e5b9)
        ^ stage_bit.wrapping_mul(0x94d0_49bb_1331_11eb);
    // splitmix64 finalizer
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// In-process transport: broadcast a round-tagged global model, collect
/// exactly one tagged update per client.
pub trait ClientPool {
    fn num_clients(&self) -> usize;
    fn input_dim(&self) -> usize;
    fn run_round(
        &self,
        tag: RoundTag,
        global: &ParameterVector,
        grad_mask: Option<&SparsityMask>,
    ) -> Result<Vec<ClientUpdate>>;
}

/// Single-threaded pool; clients train one after another.
#[derive(Debug, Clone)]
pub struct SequentialPool {
    pub clients: Vec<Client>,
    pub base_seed: u64,
}

impl ClientPool for SequentialPool {
    fn num_clients(&self) -> usize {
        self.clients.len()
    }

    fn input_dim(&self) -> usize {
        self.clients.first().map(|c| c.data.input_dim()).unwrap_or(0)
    }

    fn run_round(
        &self,
        tag: RoundTag,
        global: &ParameterVector,
        grad_mask: Option<&SparsityMask>,
    ) -> Result<Vec<ClientUpdate>> {
        self.clients
            .iter()
            .map(|c| {
                let seed = derive_client_seed(self.base_seed, tag, c.id());
                c.train(tag, global, grad_mask, seed).map_err(|e| Error::ClientFailed {
                    client_id: c.id(),
                    round: tag.round,
                    cause: alloc::boxed::Box::new(e),
                })
            })
            .collect()
    }
}

/// The federation as handed to the driver: datasets, per-client training
/// settings and the shared architecture.
#[derive(Debug, Clone)]
pub struct FederationTopology {
    pub clients: Vec<ClientDataset>,
    pub configs: Vec<ProximalConfig>,
    pub layers: LayerSpec,
    pub scheme_name: alloc::string::String,
}

impl FederationTopology {
    /// Uniform training settings for every client.
    pub fn uniform(
        clients: Vec<ClientDataset>,
        cfg: ProximalConfig,
        layers: LayerSpec,
        scheme_name: alloc::string::String,
    ) -> Result<Self> {
        let configs = alloc::vec![cfg; clients.len()];
        let topo = Self { clients, configs, layers, scheme_name };
        topo.validate()?;
        Ok(topo)
    }

    pub fn validate(&self) -> Result<()> {
        if self.clients.is_empty() {
            return Err(Error::InvalidParameter {
                name: "topology",
                reason: "at least one client required".into(),
            });
        }
        if self.configs.len() != self.clients.len() {
            return Err(Error::LengthMismatch {
                expected: self.clients.len(),
                got: self.configs.len(),
            });
        }
        let dim = self.clients[0].input_dim();
        for c in &self.clients {
            if c.input_dim() != dim {
                return Err(Error::ArchitectureMismatch {
                    model_dim: dim,
                    data_dim: c.input_dim(),
                });
            }
        }
        for cfg in &self.configs {
            cfg.validate()?;
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.clients[0].input_dim()
    }

    pub fn into_pool(self, base_seed: u64) -> SequentialPool {
        let clients = self
            .clients
            .into_iter()
            .zip(self.configs)
            .map(|(data, cfg)| Client { data, cfg })
            .collect();
        SequentialPool { clients, base_seed }
    }
}

/// Observer invoked after every fused round; the CLI uses it for
/// checkpointing.
pub type RoundHook<'a> =
    &'a mut dyn FnMut(&RoundRecord, &ParameterVector, Option<&SparsityMask>) -> Result<()>;

/// Result of one stage.
#[derive(Debug, Clone)]
pub struct StageOutcome {
    pub global: ParameterVector,
    pub records: Vec<RoundRecord>,
}

fn check_barrier(updates: &[ClientUpdate], tag: RoundTag, expected: usize) -> Result<()> {
    if updates.len() != expected {
        return Err(Error::LengthMismatch { expected, got: updates.len() });
    }
    for u in updates {
        if u.tag != tag {
            return Err(Error::InvalidParameter {
                name: "round_tag",
                reason: alloc::format!(
                    "client {} answered round {:?} with a model from round {:?}",
                    u.client_id,
                    tag,
                    u.tag
                ),
            });
        }
    }
    Ok(())
}

fn record_from(
    tag: RoundTag,
    updates: &[ClientUpdate],
    global: &ParameterVector,
    fusion_iterations: usize,
    fusion_converged: bool,
) -> RoundRecord {
    let n = updates.len().max(1) as f64;
    RoundRecord {
        round: tag.round,
        stage: tag.stage,
        compression_rate: fusion::compression_rate(global, 0.0),
        client_losses: updates.iter().map(|u| u.train_loss).collect(),
        mean_validation_loss: updates.iter().map(|u| u.validation_loss).sum::<f64>() / n,
        fusion_iterations,
        fusion_converged,
    }
}

/// Compression stage: broadcast, proximal local training (no gradient
/// mask), ADMM sparse fusion. Stops at the round cap or as soon as the
/// fused model reaches the target compression rate.
pub fn run_compression_stage(
    pool: &dyn ClientPool,
    initial_global: ParameterVector,
    schedule: &RoundSchedule,
    fusion_cfg: &FusionConfig,
    mut hook: Option<RoundHook<'_>>,
) -> Result<StageOutcome> {
    schedule.validate()?;
    fusion_cfg.validate()?;
    let n = pool.num_clients();
    let mut global = initial_global;
    let mut records = Vec::new();
    for m in 1..=schedule.compression_rounds {
        let tag = RoundTag { stage: Stage::Compression, round: m };
        let updates = pool.run_round(tag, &global, None)?;
        check_barrier(&updates, tag, n)?;
        let models: Vec<ParameterVector> = updates.iter().map(|u| u.model.clone()).collect();
        let outcome = fusion::admm_sparse_fuse(&models, fusion_cfg)?;
        global = outcome.model;
        let record = record_from(tag, &updates, &global, outcome.iterations, outcome.converged);
        let gate_met = record.compression_rate >= schedule.compression_rate_target;
        if let Some(h) = hook.as_mut() {
            h(&record, &global, None)?;
        }
        records.push(record);
        if gate_met {
            break;
        }
    }
    Ok(StageOutcome { global, records })
}

/// Fine-tuning stage: the support of the incoming global model is frozen;
/// clients train with gradient masks and the server averages only inside
/// the support, so zeroed coordinates stay exactly zero.
pub fn run_finetune_stage(
    pool: &dyn ClientPool,
    global: ParameterVector,
    schedule: &RoundSchedule,
    mut hook: Option<RoundHook<'_>>,
) -> Result<StageOutcome> {
    let n = pool.num_clients();
    let mask = fusion::extract_mask(&global, 0.0);
    let mut global = global;
    let mut records = Vec::new();
    for j in 1..=schedule.finetune_rounds {
        let tag = RoundTag { stage: Stage::Finetune, round: j };
        let updates = pool.run_round(tag, &global, Some(&mask))?;
        check_barrier(&updates, tag, n)?;
        let models: Vec<ParameterVector> = updates.iter().map(|u| u.model.clone()).collect();
        let fused = fusion::masked_average_fuse(&models, &mask)?;
        debug_assert!(fusion::extract_mask(&fused, 0.0).is_subset_of(&mask));
        global = fused;
        let record = record_from(tag, &updates, &global, 0, true);
        if let Some(h) = hook.as_mut() {
            h(&record, &global, Some(&mask))?;
        }
        records.push(record);
    }
    Ok(StageOutcome { global, records })
}

/// Both stages end to end, starting from a seeded initialization.
pub fn run_federation(
    pool: &dyn ClientPool,
    layers: &LayerSpec,
    schedule: &RoundSchedule,
    fusion_cfg: &FusionConfig,
    seed: u64,
    mut hook: Option<RoundHook<'_>>,
) -> Result<StageOutcome> {
    let initial = crate::model::init_model(pool.input_dim(), layers, seed);
    let compression = run_compression_stage(
        pool,
        initial,
        schedule,
        fusion_cfg,
        hook.as_mut().map(|h| h as RoundHook<'_>),
    )?;
    let mut records = compression.records;
    let finetune = run_finetune_stage(pool, compression.global, schedule, hook)?;
    records.extend(finetune.records);
    Ok(StageOutcome { global: finetune.global, records })
}
