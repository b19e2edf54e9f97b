//! Fixtures shared by the benchmarks.

use cellfree::channel::ChannelSampler;
use cellfree::combining::XiBarTable;
use cellfree::estimation::{
    assign_pilots, compute_estimation_statistics, estimate_channels, synthesize_pilot_observation,
    ChannelEstimateBlock, EstimationStatistics, PilotAssignment,
};
use cellfree::rng::{stream, Purpose};
use cellfree::scenario::generate_setup;
use cellfree::{ChannelModel, ChannelRealization, Setup, SimulationConfig};

/// One setup of the given size with its statistics and `Xi-bar` table.
pub struct Fixture {
    pub cfg: SimulationConfig,
    pub setup: Setup,
    pub pilots: PilotAssignment,
    pub stats: EstimationStatistics,
    pub sampler: ChannelSampler,
    pub xi: XiBarTable,
}

impl Fixture {
    pub fn new(model: ChannelModel, aps: usize, ues: usize, antennas: usize) -> Self {
        let cfg = SimulationConfig {
            aps,
            ues,
            antennas,
            p_dl_total_mw: 200.0 * ues as f64,
            channel_model: model,
            ..SimulationConfig::default()
        };
        let setup = generate_setup(&cfg, 0).expect("valid benchmark config");
        let pilots = assign_pilots(
            ues,
            cfg.tau_p,
            cfg.pilot_policy,
            &mut stream(1, 0, 0, Purpose::Pilots),
        );
        let stats = compute_estimation_statistics(&setup.links, &pilots, &cfg).expect("statistics");
        let xi = XiBarTable::new(model, &stats, &setup.links, &pilots).expect("xi table");
        let sampler = ChannelSampler::new(&setup.links).expect("channel factors");
        Self {
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
            &mut stream(2, 0, b, Purpose::Channel),
        );
        let obs = synthesize_pilot_observation(
            &r,
            &self.pilots,
            &self.cfg,
            Some(&mut stream(2, 0, b, Purpose::PilotNoise)),
        );
        let est = estimate_channels(&obs, &r, &self.stats, &self.pilots);
        (r, est)
    }
}
