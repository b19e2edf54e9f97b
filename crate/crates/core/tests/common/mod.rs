#![allow(dead_code)]

use cellfree::channel::ChannelSampler;
use cellfree::combining::{cmmse_via_lemma, gsli_combiners, lmmse_combiners, XiBarTable};
use cellfree::estimation::{
    assign_pilots, compute_estimation_statistics, estimate_channels, synthesize_pilot_observation,
    ChannelEstimateBlock, EstimationStatistics, PilotAssignment,
};
use cellfree::rng::{stream, Purpose};
use cellfree::{ChannelModel, ChannelRealization, CombinerSet, Scheme, Setup, SimulationConfig};

/// One setup with everything needed to push blocks through the chain.
pub struct Pipeline {
    pub cfg: SimulationConfig,
    pub setup: Setup,
    pub pilots: PilotAssignment,
    pub stats: EstimationStatistics,
    pub sampler: ChannelSampler,
    pub xi: XiBarTable,
    pub seed: u64,
}

impl Pipeline {
    pub fn new(cfg: SimulationConfig, setup_index: u64) -> Self {
        let setup = cellfree::scenario::generate_setup(&cfg, setup_index).unwrap();
        let pilots = assign_pilots(
            cfg.ues,
            cfg.tau_p,
            cfg.pilot_policy,
            &mut stream(cfg.seeds.setup_seed, setup_index, 0, Purpose::Pilots),
        );
        let stats = compute_estimation_statistics(&setup.links, &pilots, &cfg).unwrap();
        let xi = XiBarTable::new(cfg.channel_model, &stats, &setup.links, &pilots).unwrap();
        let sampler = ChannelSampler::new(&setup.links).unwrap();
        Self {
            seed: 1000 + setup_index,
            cfg,
            setup,
            pilots,
            stats,
            sampler,
            xi,
        }
    }

    pub fn block(&self, b: u64) -> (ChannelRealization, ChannelEstimateBlock) {
        let r = self.sampler.sample(
            self.cfg.channel_model,
            &mut stream(self.seed, 0, b, Purpose::Channel),
        );
        let obs = synthesize_pilot_observation(
            &r,
            &self.pilots,
            &self.cfg,
            Some(&mut stream(self.seed, 0, b, Purpose::PilotNoise)),
        );
        let est = estimate_channels(&obs, &r, &self.stats, &self.pilots);
        (r, est)
    }

    pub fn combiners(&self, scheme: Scheme, est: &ChannelEstimateBlock) -> CombinerSet {
        match scheme {
            Scheme::Cmmse => cmmse_via_lemma(est, &self.stats).unwrap(),
            Scheme::LmmseLsfd => lmmse_combiners(est, &self.stats).unwrap(),
            Scheme::GsliLsfd => gsli_combiners(est, &self.stats, &self.xi).unwrap(),
        }
    }
}

pub fn config(
    model: ChannelModel,
    aps: usize,
    ues: usize,
    antennas: usize,
    tau_p: usize,
) -> SimulationConfig {
    SimulationConfig {
        aps,
        ues,
        antennas,
        tau_p,
        channel_model: model,
        ..SimulationConfig::default()
    }
}
