//! Monte Carlo evaluation of distributed MMSE beamforming in cell-free
//! massive MIMO networks.
//!
//! The crate is organised the way one simulated coherence block flows through
//! the network:
//!
//! * [`scenario`] draws AP/UE geometry and the large-scale statistics of every
//!   AP-UE link (pathloss, Rician factor, LoS array response, spatial
//!   correlation).
//! * [`channel`] samples small-scale channel realizations for the correlated
//!   Rician (with or without LoS phase-shifts) and correlated Rayleigh models.
//! * [`estimation`] assigns pilots, synthesizes despread pilot observations and
//!   computes phase-aware MMSE channel estimates together with their per-setup
//!   statistics.
//! * [`combining`] builds centralized MMSE, local MMSE and GSLI-MMSE combiners,
//!   the latter replacing the instantaneous cross-terms of the other APs with
//!   their closed-form averages.
//! * [`lsfd`] fuses per-AP soft estimates with large-scale fading decoding.
//! * [`link`] evaluates use-and-then-forget SINRs for centralized uplink and
//!   duality-based downlink precoding.
//! * [`experiment`] orchestrates sweeps and writes result files.

pub mod channel;
pub mod combining;
pub mod error;
pub mod estimation;
pub mod experiment;
pub mod linalg;
pub mod link;
pub mod lsfd;
pub mod rng;
pub mod scenario;
pub mod table;

pub use channel::{ChannelRealization, ChannelSampler};
pub use combining::{CombinerSet, EffectiveGains, Scheme, XiBarTable};
pub use error::{Error, Result};
pub use estimation::{
    ChannelEstimateBlock, EstimationStatistics, PilotAssignment, PilotObservation, PilotPolicy,
};
pub use experiment::{ExperimentConfig, ResultRecord};
pub use linalg::{CMat, CVec};
pub use link::{PrecoderSet, UatfAccumulator, UatfStatistics};
pub use lsfd::{LsfdAccumulator, LsfdStatistics};
pub use scenario::{ChannelModel, LinkStatistics, Scenario, Setup, SimulationConfig};
pub use table::LinkTable;

pub use num_complex::Complex64;

/// Outcome of a SINR evaluation.
///
/// `degenerate` is set when the Monte Carlo denominator was not positive and
/// had to be floored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sinr {
    pub value: f64,
    pub degenerate: bool,
}

impl Sinr {
    /// Spectral efficiency `prelog * log2(1 + SINR)` in bit/s/Hz.
    pub fn spectral_efficiency(&self, prelog: f64) -> f64 {
        prelog * (1.0 + self.value).log2()
    }
}
