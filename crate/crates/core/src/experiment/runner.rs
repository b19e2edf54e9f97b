use std::ops::Range;

use rayon::prelude::*;

use super::config::{ExperimentConfig, LinkDirection};
use crate::channel::{ChannelRealization, ChannelSampler};
use crate::combining::{
    cmmse_via_lemma, gsli_combiners, lmmse_combiners, EffectiveGains, Scheme, XiBarTable,
};
use crate::error::{Error, Result};
use crate::estimation::{
    assign_pilots, compute_estimation_statistics, estimate_channels, synthesize_pilot_observation,
    ChannelEstimateBlock, EstimationStatistics, PilotAssignment,
};
use crate::link::{
    allocate_dl_power, downlink_sinr, uatf_sinr_centralized, DownlinkAccumulator,
    PrecoderNormAccumulator, PrecoderStatistics, UatfAccumulator,
};
use crate::lsfd::{lsfd_sinr, optimal_weights, LsfdAccumulator};
use crate::rng::{self, Purpose};
use crate::scenario::{generate_setup, ChannelModel, Setup, SimulationConfig};
use crate::Sinr;

/// Blocks per work unit. Fixed so that the merge tree, and therefore every
/// floating-point sum, is independent of the number of workers.
const BLOCK_CHUNK: u64 = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Flag {
    DegenerateDenominator,
    RegularizedSolve,
    Unserved,
    Failed,
}

impl Flag {
    pub fn name(self) -> &'static str {
        match self {
            Self::DegenerateDenominator => "degenerate_denominator",
            Self::RegularizedSolve => "regularized_solve",
            Self::Unserved => "unserved",
            Self::Failed => "failed",
        }
    }
}

/// SE of one UE in one (setup, sweep point, scheme, model, link) cell.
///
/// Failure rows have no UE index, zero SE and the `failed` flag.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub setup: u64,
    pub sweep_value: usize,
    pub scheme: Scheme,
    pub model: ChannelModel,
    pub link: LinkDirection,
    pub ue: Option<usize>,
    pub se: f64,
    pub flags: Vec<Flag>,
}

impl ResultRecord {
    pub fn failed(&self) -> bool {
        self.flags.contains(&Flag::Failed)
    }
}

/// Per-cell information that does not go into the result table.
#[derive(Debug, Clone, PartialEq)]
pub struct CellDiagnostics {
    pub sweep_value: usize,
    pub setup: u64,
    pub model: ChannelModel,
    /// `(scheme, max_m sum_k mu_mk^2 E{||ḡ_mk||^2} / p_m)` for each downlink scheme.
    pub downlink_power_ratio: Vec<(Scheme, f64)>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub records: Vec<ResultRecord>,
    pub diagnostics: Vec<CellDiagnostics>,
}

impl ExperimentOutput {
    pub fn has_failures(&self) -> bool {
        self.records.iter().any(ResultRecord::failed)
    }
}

/// State shared by all blocks of one (sweep point, setup, model) cell.
pub(crate) struct Cell<'a> {
    pub sim: SimulationConfig,
    pub setup_index: u64,
    pub setup: Setup,
    pub schemes: &'a [Scheme],
    pub pilots: PilotAssignment,
    pub stats: EstimationStatistics,
    pub sampler: ChannelSampler,
    pub xi: Option<XiBarTable>,
}

pub(crate) struct BlockOutput {
    pub gains: Vec<EffectiveGains>,
    pub regularized: Vec<bool>,
}

impl<'a> Cell<'a> {
    /// Large-scale statistics, pilots and (if GSLI is requested) the
    /// `Xi-bar` table of one setup.
    pub fn new(sim: SimulationConfig, setup_index: u64, schemes: &'a [Scheme]) -> Result<Self> {
        let setup = generate_setup(&sim, setup_index)?;
        let pilots = assign_pilots(
            sim.ues,
            sim.tau_p,
            sim.pilot_policy,
            &mut rng::stream(sim.seeds.setup_seed, setup_index, 0, Purpose::Pilots),
        );
        let stats = compute_estimation_statistics(&setup.links, &pilots, &sim)?;
        let xi = schemes
            .contains(&Scheme::GsliLsfd)
            .then(|| XiBarTable::new(sim.channel_model, &stats, &setup.links, &pilots))
            .transpose()?;
        Ok(Self {
            sampler: ChannelSampler::new(&setup.links)?,
            sim,
            setup_index,
            setup,
            schemes,
            pilots,
            stats,
            xi,
        })
    }

    /// Channel realization and estimates of block `b`.
    pub fn estimates(&self, b: u64) -> (ChannelRealization, ChannelEstimateBlock) {
        let seed = self.sim.seeds.channel_seed;
        let realization = self.sampler.sample(
            self.sim.channel_model,
            &mut rng::stream(seed, self.setup_index, b, Purpose::Channel),
        );
        let mut noise = rng::stream(seed, self.setup_index, b, Purpose::PilotNoise);
        let obs =
            synthesize_pilot_observation(&realization, &self.pilots, &self.sim, Some(&mut noise));
        let est = estimate_channels(&obs, &realization, &self.stats, &self.pilots);
        (realization, est)
    }

    pub fn block(&self, b: u64) -> Result<BlockOutput> {
        let (realization, est) = self.estimates(b);
        let mut gains = Vec::with_capacity(self.schemes.len());
        let mut regularized = Vec::with_capacity(self.schemes.len());
        for scheme in self.schemes {
            let combiners = match scheme {
                Scheme::Cmmse => cmmse_via_lemma(&est, &self.stats)?,
                Scheme::LmmseLsfd => lmmse_combiners(&est, &self.stats)?,
                Scheme::GsliLsfd => {
                    gsli_combiners(&est, &self.stats, self.xi.as_ref().expect("xi table built"))?
                }
            };
            gains.push(combiners.effective_gains(&realization));
            regularized.push(combiners.regularized);
        }
        Ok(BlockOutput { gains, regularized })
    }
}

/// Folds `blocks` in fixed-size chunks on the current rayon pool and merges
/// the chunk results in chunk order.
pub(crate) fn fold_blocks<A, I, S, M>(blocks: Range<u64>, init: I, step: S, merge: M) -> Result<A>
where
    A: Send,
    I: Fn() -> A + Sync,
    S: Fn(&mut A, u64) -> Result<()> + Sync,
    M: Fn(&mut A, A),
{
    let n = blocks.end - blocks.start;
    let chunks = n.div_ceil(BLOCK_CHUNK);
    let parts: Vec<Result<A>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = init();
            let lo = blocks.start + c * BLOCK_CHUNK;
            let hi = (lo + BLOCK_CHUNK).min(blocks.end);
            for b in lo..hi {
                step(&mut acc, b)?;
            }
            Ok(acc)
        })
        .collect();
    let mut total = init();
    for part in parts {
        merge(&mut total, part?);
    }
    Ok(total)
}

enum UplinkAcc {
    Lsfd(LsfdAccumulator),
    Uatf(UatfAccumulator),
}

impl UplinkAcc {
    fn new(scheme: Scheme, aps: usize, ues: usize) -> Self {
        if scheme.is_distributed() {
            Self::Lsfd(LsfdAccumulator::new(aps, ues))
        } else {
            Self::Uatf(UatfAccumulator::new(ues))
        }
    }

    fn add(&mut self, g: &EffectiveGains) {
        match self {
            Self::Lsfd(a) => a.add(g),
            Self::Uatf(a) => a.add(g),
        }
    }

    fn merge(&mut self, other: &Self) {
        match (self, other) {
            (Self::Lsfd(a), Self::Lsfd(b)) => a.merge(b),
            (Self::Uatf(a), Self::Uatf(b)) => a.merge(b),
            _ => unreachable!("accumulator kinds match per scheme"),
        }
    }
}

struct EvalAcc {
    uplink: Vec<Option<UplinkAcc>>,
    downlink: Vec<Option<DownlinkAccumulator>>,
    regularized: Vec<bool>,
}

struct CellOutput {
    records: Vec<ResultRecord>,
    power_ratio: Vec<(Scheme, f64)>,
}

fn sinr_flags(sinr: Sinr, regularized: bool) -> Vec<Flag> {
    let mut flags = Vec::new();
    if sinr.degenerate {
        flags.push(Flag::DegenerateDenominator);
    }
    if regularized {
        flags.push(Flag::RegularizedSolve);
    }
    flags
}

fn evaluate_cell(
    cfg: &ExperimentConfig,
    sweep_value: usize,
    setup_index: u64,
    model: ChannelModel,
) -> Result<CellOutput> {
    let mut sim = cfg.simulation_at(sweep_value);
    sim.channel_model = model;
    let schemes = &cfg.experiment.schemes;
    let links = &cfg.experiment.links;
    let (aps, ues) = (sim.aps, sim.ues);

    let cell = Cell::new(sim, setup_index, schemes)?;
    let n_blocks = cfg.n_blocks() as u64;
    let want_ul = links.contains(&LinkDirection::Uplink);
    let want_dl = links.contains(&LinkDirection::Downlink);

    // Warm-up on fresh blocks: E{||ḡ_mk||^2} for the power factors.
    let precoders: Vec<PrecoderStatistics> = if want_dl {
        let warm = n_blocks..n_blocks + cfg.experiment.warmup_blocks as u64;
        let norms = fold_blocks(
            warm,
            || vec![PrecoderNormAccumulator::new(aps, ues); schemes.len()],
            |acc, b| {
                let out = cell.block(b)?;
                for (a, g) in acc.iter_mut().zip(&out.gains) {
                    a.add(g);
                }
                Ok(())
            },
            |total, part| {
                for (a, b) in total.iter_mut().zip(&part) {
                    a.merge(b);
                }
            },
        )?;
        let allocation = allocate_dl_power(
            &cell.setup.links,
            cell.sim.p_dl_total_mw,
            cfg.experiment.dl_power_policy,
        );
        norms
            .iter()
            .map(|n| PrecoderStatistics::new(n.finish(), allocation.clone()))
            .collect()
    } else {
        Vec::new()
    };

    let eval = fold_blocks(
        0..n_blocks,
        || EvalAcc {
            uplink: schemes
                .iter()
                .map(|&s| want_ul.then(|| UplinkAcc::new(s, aps, ues)))
                .collect(),
            downlink: schemes
                .iter()
                .map(|_| want_dl.then(|| DownlinkAccumulator::new(ues)))
                .collect(),
            regularized: vec![false; schemes.len()],
        },
        |acc, b| {
            let out = cell.block(b)?;
            for (i, g) in out.gains.iter().enumerate() {
                if let Some(u) = acc.uplink[i].as_mut() {
                    u.add(g);
                }
                if let Some(d) = acc.downlink[i].as_mut() {
                    d.add(g, &precoders[i].mu);
                }
                acc.regularized[i] |= out.regularized[i];
            }
            Ok(())
        },
        |total, part| {
            for (a, b) in total.uplink.iter_mut().zip(&part.uplink) {
                if let (Some(a), Some(b)) = (a.as_mut(), b.as_ref()) {
                    a.merge(b);
                }
            }
            for (a, b) in total.downlink.iter_mut().zip(&part.downlink) {
                if let (Some(a), Some(b)) = (a.as_mut(), b.as_ref()) {
                    a.merge(b);
                }
            }
            for (a, b) in total.regularized.iter_mut().zip(&part.regularized) {
                *a |= b;
            }
        },
    )?;

    let powers = &cell.stats.powers;
    let noise = cell.stats.noise;
    let mut records = Vec::new();
    let mut power_ratio = Vec::new();
    let record = |scheme, link, ue, se, flags| ResultRecord {
        setup: setup_index,
        sweep_value,
        scheme,
        model,
        link,
        ue: Some(ue),
        se,
        flags,
    };
    for (i, &scheme) in schemes.iter().enumerate() {
        for &link in links {
            match link {
                LinkDirection::Uplink => match eval.uplink[i].as_ref().expect("uplink accumulated")
                {
                    UplinkAcc::Uatf(acc) => {
                        let st = acc.finish();
                        for k in 0..ues {
                            let s = uatf_sinr_centralized(&st, powers, noise, k);
                            let flags = sinr_flags(s, eval.regularized[i]);
                            records.push(record(
                                scheme,
                                link,
                                k,
                                s.spectral_efficiency(cell.sim.uplink_prelog()),
                                flags,
                            ));
                        }
                    }
                    UplinkAcc::Lsfd(acc) => {
                        let st = acc.finish();
                        let w = optimal_weights(&st, powers, noise);
                        for k in 0..ues {
                            let s =
                                lsfd_sinr(&st, &w.weights[k], powers, noise, k).unwrap_or(Sinr {
                                    value: 0.0,
                                    degenerate: true,
                                });
                            let flags = sinr_flags(s, eval.regularized[i] || w.regularized[k]);
                            records.push(record(
                                scheme,
                                link,
                                k,
                                s.spectral_efficiency(cell.sim.uplink_prelog()),
                                flags,
                            ));
                        }
                    }
                },
                LinkDirection::Downlink => {
                    let st = eval.downlink[i]
                        .as_ref()
                        .expect("downlink accumulated")
                        .finish();
                    let pre = &precoders[i];
                    for k in 0..ues {
                        let s = downlink_sinr(&st, noise, k);
                        let mut flags = sinr_flags(s, eval.regularized[i]);
                        if pre.unserved[k] {
                            flags.push(Flag::Unserved);
                        }
                        records.push(record(
                            scheme,
                            link,
                            k,
                            s.spectral_efficiency(cell.sim.downlink_prelog()),
                            flags,
                        ));
                    }
                    let ratio = (0..aps)
                        .map(|m| pre.power_used(m) / cell.sim.p_dl_total_mw)
                        .fold(0.0, f64::max);
                    power_ratio.push((scheme, ratio));
                }
            }
        }
    }
    Ok(CellOutput {
        records,
        power_ratio,
    })
}

/// Runs every (sweep point, setup, model) cell on the current rayon pool.
///
/// Output order is sweep point, setup, model, scheme, link, UE, whatever the
/// number of workers.
pub fn run_experiment_detailed(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let mut cells = Vec::new();
    for v in cfg.sweep_points() {
        for s in 0..cfg.n_setups() as u64 {
            for &model in &cfg.experiment.models {
                cells.push((v, s, model));
            }
        }
    }
    let results: Vec<(Vec<ResultRecord>, CellDiagnostics)> = cells
        .into_par_iter()
        .map(|(v, s, model)| match evaluate_cell(cfg, v, s, model) {
            Ok(out) => (
                out.records,
                CellDiagnostics {
                    sweep_value: v,
                    setup: s,
                    model,
                    downlink_power_ratio: out.power_ratio,
                    error: None,
                },
            ),
            Err(e) => {
                let mut rows = Vec::new();
                for &scheme in &cfg.experiment.schemes {
                    for &link in &cfg.experiment.links {
                        rows.push(ResultRecord {
                            setup: s,
                            sweep_value: v,
                            scheme,
                            model,
                            link,
                            ue: None,
                            se: 0.0,
                            flags: vec![Flag::Failed],
                        });
                    }
                }
                let diag = CellDiagnostics {
                    sweep_value: v,
                    setup: s,
                    model,
                    downlink_power_ratio: Vec::new(),
                    error: Some(e.to_string()),
                };
                (rows, diag)
            }
        })
        .collect();
    let mut out = ExperimentOutput {
        records: Vec::new(),
        diagnostics: Vec::new(),
    };
    for (rows, diag) in results {
        out.records.extend(rows);
        out.diagnostics.push(diag);
    }
    Ok(out)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    run_experiment_detailed(cfg).map(|o| o.records)
}

/// Runs on a dedicated pool of `threads` workers.
pub fn run_experiment_with_threads(
    cfg: &ExperimentConfig,
    threads: usize,
) -> Result<ExperimentOutput> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::config("threads", e.to_string()))?;
    pool.install(|| run_experiment_detailed(cfg))
}
