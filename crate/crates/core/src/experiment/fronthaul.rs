use crate::combining::Scheme;
use crate::scenario::SimulationConfig;

/// Complex scalars each AP sends to the CPU.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FronthaulLoad {
    pub per_block_scalars: usize,
    pub per_setup_scalars: usize,
}

/// Per-AP upload volume of a scheme.
///
/// * `cmmse`: the `N tau_p` despread pilot scalars of every block; the CPU
///   estimates centrally.
/// * `gsli_lsfd`: `K` soft estimates per block plus the `K x K` statistics
///   table once per setup.
/// * `lmmse_lsfd`: `K` soft estimates per block.
pub fn fronthaul_load(config: &SimulationConfig, scheme: Scheme) -> FronthaulLoad {
    let (n, k, tau_p) = (config.antennas, config.ues, config.tau_p);
    match scheme {
        Scheme::Cmmse => FronthaulLoad {
            per_block_scalars: n * tau_p,
            per_setup_scalars: 0,
        },
        Scheme::GsliLsfd => FronthaulLoad {
            per_block_scalars: k,
            per_setup_scalars: k * k,
        },
        Scheme::LmmseLsfd => FronthaulLoad {
            per_block_scalars: k,
            per_setup_scalars: 0,
        },
    }
}
