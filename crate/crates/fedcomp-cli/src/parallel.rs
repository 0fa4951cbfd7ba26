//! Rayon-backed client pool. Clients train concurrently; updates are
//! collected in client order, so results are identical to the sequential
//! pool regardless of thread count.

use rayon::prelude::*;

use fedcomp::orchestrator::{derive_client_seed, Client, ClientPool, ClientUpdate, RoundTag};
use fedcomp::{Error, ParameterVector, Result, SparsityMask};

pub struct RayonPool {
    pub clients: Vec<Client>,
    pub base_seed: u64,
}

impl ClientPool for RayonPool {
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
            .par_iter()
            .map(|c| {
                let seed = derive_client_seed(self.base_seed, tag, c.id());
                c.train(tag, global, grad_mask, seed).map_err(|e| Error::ClientFailed {
                    client_id: c.id(),
                    round: tag.round,
                    cause: Box::new(e),
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use fedcomp::fusion::FusionConfig;
    use fedcomp::model::ProximalConfig;
    use fedcomp::orchestrator::{run_federation, FederationTopology, RoundSchedule, SequentialPool};
    use fedcomp::series::{partition, standardize, PartitionScheme};
    use fedcomp::synth::{generate_synthetic, SyntheticSpec};
    use fedcomp::LayerSpec;

    #[test]
    fn parallel_matches_sequential_bit_for_bit() {
        let spec = SyntheticSpec::correlated(4, 100, 0.05, 17);
        let ts = generate_synthetic(&spec).unwrap();
        let (ts, _) = standardize(&ts, 0.7).unwrap();
        let clients = partition(&ts, &PartitionScheme::Univariate, 10).unwrap();
        let layers = LayerSpec::new(vec![8, 4, 8]).unwrap();
        let cfg = ProximalConfig { mu: 0.01, epochs: 2, learning_rate: 0.01, batch_size: 16 };
        let topo = FederationTopology::uniform(
            clients,
            cfg,
            layers.clone(),
            "univariate".to_string(),
        )
        .unwrap();
        let schedule = RoundSchedule {
            compression_rounds: 2,
            finetune_rounds: 2,
            compression_rate_target: 1.0,
        };
        let fusion = FusionConfig { lambda: 0.05, ..Default::default() };

        let seq_pool: SequentialPool = topo.clone().into_pool(5);
        let par_pool = RayonPool { clients: seq_pool.clients.clone(), base_seed: 5 };
        let a = run_federation(&seq_pool, &layers, &schedule, &fusion, 9, None).unwrap();
        let b = run_federation(&par_pool, &layers, &schedule, &fusion, 9, None).unwrap();
        assert_eq!(a.global.flat, b.global.flat);
        assert_eq!(a.records, b.records);
    }
}
