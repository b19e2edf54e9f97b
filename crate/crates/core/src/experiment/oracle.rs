//! Monte Carlo checks of the closed-form `Xi-bar` statistics and of LSFD
//! weight optimality, shared by the CLI `oracle` command and the tests.

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

use super::runner::{fold_blocks, Cell};
use crate::combining::{instantaneous_xi, Scheme};
use crate::error::Result;
use crate::linalg::{CMat, CVec};
use crate::lsfd::{lsfd_sinr, optimal_sinr, optimal_weights, LsfdAccumulator};
use crate::rng::{self, Purpose};
use crate::scenario::{ChannelModel, SimulationConfig};

/// `M = 4, N = 2, K = 8, tau_p = 2` network used for the `Xi-bar` check.
pub fn xibar_config(model: ChannelModel) -> SimulationConfig {
    SimulationConfig {
        aps: 4,
        ues: 8,
        antennas: 2,
        tau_p: 2,
        p_dl_total_mw: 8.0 * 200.0,
        channel_model: model,
        ..SimulationConfig::default()
    }
}

/// `M = 10, N = 2, K = 5` network used for the LSFD check.
pub fn lsfd_config(model: ChannelModel) -> SimulationConfig {
    SimulationConfig {
        aps: 10,
        ues: 5,
        antennas: 2,
        p_dl_total_mw: 5.0 * 200.0,
        channel_model: model,
        ..SimulationConfig::default()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct XiBarCheck {
    pub model: ChannelModel,
    pub blocks: usize,
    pub entries: usize,
    /// Largest `|closed form - sample mean|` in standard errors.
    pub max_z: f64,
    /// Largest relative error among entries above 1% of the largest entry.
    pub max_rel: f64,
    pub z_limit: f64,
    pub rel_limit: f64,
}

impl XiBarCheck {
    pub fn passed(&self) -> bool {
        self.max_z <= self.z_limit && self.max_rel <= self.rel_limit
    }
}

#[derive(Clone)]
struct XiSums {
    sum: Vec<CMat>,
    sum_sq: Vec<nalgebra::DMatrix<f64>>,
    count: usize,
}

/// Compares the closed-form `Xi-bar_m` of every AP of setup `setup_index`
/// with the sample mean of `Ĥ_m^H W_m^{-1} Ĥ_m` over `blocks` blocks.
pub fn check_xibar(sim: &SimulationConfig, setup_index: u64, blocks: usize) -> Result<XiBarCheck> {
    let schemes = [Scheme::GsliLsfd];
    let cell = Cell::new(sim.clone(), setup_index, &schemes)?;
    let (aps, ues) = (sim.aps, sim.ues);
    let sums = fold_blocks(
        0..blocks as u64,
        || XiSums {
            sum: vec![CMat::zeros(ues, ues); aps],
            sum_sq: vec![nalgebra::DMatrix::zeros(ues, ues); aps],
            count: 0,
        },
        |acc, b| {
            let (_, est) = cell.estimates(b);
            for m in 0..aps {
                let xi = instantaneous_xi(&est, &cell.stats, m);
                acc.sum[m] += &xi;
                acc.sum_sq[m] += xi.map(|z| z.norm_sqr());
            }
            acc.count += 1;
            Ok(())
        },
        |total, part| {
            for m in 0..aps {
                total.sum[m] += &part.sum[m];
                total.sum_sq[m] += &part.sum_sq[m];
            }
            total.count += part.count;
        },
    )?;
    let table = cell.xi.as_ref().expect("xi table built");
    let n = sums.count as f64;
    let mut max_z: f64 = 0.0;
    let mut max_rel: f64 = 0.0;
    let mut entries = 0;
    for m in 0..aps {
        let closed = &table.per_ap[m];
        let largest = closed.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for k in 0..ues {
            for l in 0..ues {
                let mean = sums.sum[m][(k, l)] / n;
                let var = (sums.sum_sq[m][(k, l)] / n - mean.norm_sqr()).max(0.0);
                let se = (var / (n - 1.0)).sqrt();
                let diff = (closed[(k, l)] - mean).norm();
                let z = if se > 0.0 {
                    diff / se
                } else if diff <= 1e-12 * largest.max(f64::MIN_POSITIVE) {
                    0.0
                } else {
                    f64::INFINITY
                };
                max_z = max_z.max(z);
                let magnitude = closed[(k, l)].norm();
                if magnitude > 0.01 * largest {
                    max_rel = max_rel.max(diff / magnitude);
                }
                entries += 1;
            }
        }
    }
    Ok(XiBarCheck {
        model: sim.channel_model,
        blocks,
        entries,
        max_z,
        max_rel,
        z_limit: 5.0,
        rel_limit: 0.02,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LsfdCheck {
    pub scheme: Scheme,
    pub model: ChannelModel,
    pub setups: usize,
    pub trials: usize,
    /// Random weight vectors that beat the optimal weights.
    pub violations: usize,
    /// Largest `SINR(a) / SINR(a*)` over all random `a`.
    pub worst_ratio: f64,
    /// Largest relative gap between the quotient SINR at `a*` and `p_k E{d}^H a*`.
    pub max_identity_error: f64,
}

impl LsfdCheck {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.max_identity_error <= 1e-8
    }
}

fn random_unit(rng: &mut impl rand::Rng, n: usize) -> CVec {
    let v = CVec::from_fn(n, |_, _| {
        Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    });
    let norm = v.norm();
    v / Complex64::new(norm, 0.0)
}

/// Estimates LSFD statistics of `scheme` on `setups` setups and checks that
/// no random unit-norm weight vector beats the optimal weights.
pub fn check_lsfd_optimality(
    sim: &SimulationConfig,
    scheme: Scheme,
    setups: usize,
    blocks: usize,
    trials: usize,
) -> Result<LsfdCheck> {
    let schemes = [scheme];
    let mut check = LsfdCheck {
        scheme,
        model: sim.channel_model,
        setups,
        trials,
        violations: 0,
        worst_ratio: 0.0,
        max_identity_error: 0.0,
    };
    for s in 0..setups as u64 {
        let cell = Cell::new(sim.clone(), s, &schemes)?;
        let acc = fold_blocks(
            0..blocks as u64,
            || LsfdAccumulator::new(sim.aps, sim.ues),
            |acc, b| {
                acc.add(&cell.block(b)?.gains[0]);
                Ok(())
            },
            |total, part| total.merge(&part),
        )?;
        let stats = acc.finish();
        let (powers, noise) = (&cell.stats.powers, cell.stats.noise);
        let w = optimal_weights(&stats, powers, noise);
        let mut rng = rng::stream(sim.seeds.channel_seed, s, 0, Purpose::Oracle);
        for k in 0..sim.ues {
            let best = lsfd_sinr(&stats, &w.weights[k], powers, noise, k)?.value;
            let closed = optimal_sinr(&stats, &w.weights[k], powers, k);
            let identity_error = (best - closed).abs() / closed.abs().max(f64::MIN_POSITIVE);
            check.max_identity_error = check.max_identity_error.max(identity_error);
            for _ in 0..trials {
                let a = random_unit(&mut rng, sim.aps);
                let sinr = lsfd_sinr(&stats, &a, powers, noise, k)?.value;
                let ratio = sinr / best;
                check.worst_ratio = check.worst_ratio.max(ratio);
                if sinr > best * (1.0 + 1e-12) {
                    check.violations += 1;
                }
            }
        }
    }
    Ok(check)
}

/// One line of the oracle suite report.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Runs the `Xi-bar` check for every model and the LSFD check for every
/// scheme and model. `xi_blocks` and `lsfd_blocks` set the sample sizes.
pub fn run_suite(xi_blocks: usize, lsfd_blocks: usize) -> Result<Vec<OracleResult>> {
    let mut out = Vec::new();
    for model in ChannelModel::ALL {
        let c = check_xibar(&xibar_config(model), 0, xi_blocks)?;
        out.push(OracleResult {
            name: format!("xibar/{}", model.name()),
            passed: c.passed(),
            detail: format!(
                "{} entries, {} blocks, max z {:.2} (limit {}), max rel {:.4} (limit {})",
                c.entries, c.blocks, c.max_z, c.z_limit, c.max_rel, c.rel_limit
            ),
        });
    }
    for model in ChannelModel::ALL {
        for scheme in Scheme::ALL {
            let c = check_lsfd_optimality(&lsfd_config(model), scheme, 5, lsfd_blocks, 100)?;
            out.push(OracleResult {
                name: format!("lsfd/{}/{}", scheme.name(), model.name()),
                passed: c.passed(),
                detail: format!(
                    "{} violations in {} draws, worst ratio {:.6}, identity error {:.2e}",
                    c.violations,
                    c.trials * c.setups * lsfd_config(model).ues,
                    c.worst_ratio,
                    c.max_identity_error
                ),
            });
        }
    }
    Ok(out)
}
