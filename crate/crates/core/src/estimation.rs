//! Pilot assignment and phase-aware MMSE channel estimation.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::linalg::{c, hermitian_inverse, identity, CMat, CVec};
use crate::scenario::{LinkStatistics, SimulationConfig};
use crate::table::LinkTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PilotPolicy {
    /// UE `k` (zero based) uses pilot `k mod tau_p`.
    RoundRobin,
    /// Every UE picks a pilot uniformly at random.
    Random,
}

/// Pilot index of every UE and the resulting co-pilot sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PilotAssignment {
    pub tau_p: usize,
    /// Zero-based pilot index of each UE.
    pub pilot_of: Vec<usize>,
    /// `copilots[k]` lists, ascending, every UE sharing UE `k`'s pilot (including `k`).
    pub copilots: Vec<Vec<usize>>,
}

impl PilotAssignment {
    pub fn from_pilots(tau_p: usize, pilot_of: Vec<usize>) -> Self {
        assert!(
            pilot_of.iter().all(|&t| t < tau_p),
            "pilot index out of range"
        );
        let copilots = pilot_of
            .iter()
            .map(|&t| {
                pilot_of
                    .iter()
                    .enumerate()
                    .filter(|&(_, &s)| s == t)
                    .map(|(l, _)| l)
                    .collect()
            })
            .collect();
        Self {
            tau_p,
            pilot_of,
            copilots,
        }
    }

    pub fn shares_pilot(&self, k: usize, l: usize) -> bool {
        self.pilot_of[k] == self.pilot_of[l]
    }

    /// UEs transmitting pilot `t`.
    pub fn users_of(&self, t: usize) -> impl Iterator<Item = usize> + '_ {
        self.pilot_of
            .iter()
            .enumerate()
            .filter(move |&(_, &s)| s == t)
            .map(|(l, _)| l)
    }
}

pub fn assign_pilots(
    ues: usize,
    tau_p: usize,
    policy: PilotPolicy,
    rng: &mut impl Rng,
) -> PilotAssignment {
    assert!(tau_p >= 1, "tau_p must be at least 1");
    let pilots = match policy {
        PilotPolicy::RoundRobin => (0..ues).map(|k| k % tau_p).collect(),
        PilotPolicy::Random => (0..ues).map(|_| rng.random_range(0..tau_p)).collect(),
    };
    PilotAssignment::from_pilots(tau_p, pilots)
}

/// Per-setup statistics of the channel estimates.
#[derive(Debug, Clone)]
pub struct EstimationStatistics {
    pub powers: Vec<f64>,
    pub noise: f64,
    pub tau_p: usize,
    /// `Psi_mk = sum_{l in P_k} p_l tau_p R_ml + sigma^2 I`.
    pub psi: LinkTable<CMat>,
    pub psi_inv: LinkTable<CMat>,
    /// `R_mk Psi_mk^{-1}`.
    pub r_psi_inv: LinkTable<CMat>,
    /// Covariance of the estimate around its mean, `p_k tau_p R Psi^{-1} R`.
    pub rhat: LinkTable<CMat>,
    /// Estimation error covariance `R - Rhat`.
    pub error_cov: LinkTable<CMat>,
    /// `W_m = sum_l p_l C_ml + sigma^2 I`.
    pub w: Vec<CMat>,
    pub w_inv: Vec<CMat>,
    /// `sqrt(p_k) R_mk Psi_mk^{-1}`, the estimator gain.
    gain: LinkTable<CMat>,
}

impl EstimationStatistics {
    pub fn aps(&self) -> usize {
        self.w.len()
    }

    pub fn ues(&self) -> usize {
        self.powers.len()
    }

    pub fn antennas(&self) -> usize {
        self.w[0].nrows()
    }

    pub fn gain(&self, m: usize, k: usize) -> &CMat {
        &self.gain[(m, k)]
    }
}

/// Splits `r` into `(r - c, c')` with `c'` within a few ulps of `c` and the
/// two parts adding back to `r` exactly in floating point.
fn split(r: f64, c: f64) -> (f64, f64) {
    let mut candidates = [c; 9];
    let (mut up, mut down) = (c, c);
    for pair in candidates[1..].chunks_mut(2) {
        up = up.next_up();
        down = down.next_down();
        pair[0] = up;
        pair[1] = down;
    }
    for c in candidates {
        if let Some(x) = complement(r, c) {
            return (x, c);
        }
    }
    (r - c, c)
}

/// `x` with `x + c == r` in floating point, if one exists near `r - c`.
fn complement(r: f64, c: f64) -> Option<f64> {
    let x = r - c;
    if x + c == r {
        return Some(x);
    }
    if !x.is_finite() {
        return None;
    }
    // fl(x + c) is monotone in x: bisect for the smallest x reaching r.
    let step = 4.0 * (r.abs().max(c.abs()) * f64::EPSILON).max(f64::MIN_POSITIVE);
    let (mut lo, mut hi) = (x - step, x + step);
    for _ in 0..200 {
        let mid = lo + (hi - lo) / 2.0;
        if mid <= lo || mid >= hi {
            break;
        }
        if mid + c < r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (hi + c == r).then_some(hi)
}

pub fn compute_estimation_statistics(
    links: &LinkTable<LinkStatistics>,
    assignment: &PilotAssignment,
    config: &SimulationConfig,
) -> Result<EstimationStatistics> {
    let (aps, ues) = (links.aps(), links.ues());
    let n = config.antennas;
    let powers = config.ue_powers();
    let noise = config.noise_mw();
    let tau_p = config.tau_p as f64;

    let psi = LinkTable::from_fn(aps, ues, |m, k| {
        let mut psi = identity(n).scale(noise);
        for &l in &assignment.copilots[k] {
            psi += links[(m, l)].correlation.scale(powers[l] * tau_p);
        }
        psi
    });
    let psi_inv = LinkTable::try_from_fn(aps, ues, |m, k| {
        hermitian_inverse(&psi[(m, k)]).ok_or(Error::Solve {
            what: "pilot covariance Psi",
            ap: m,
            ue: Some(k),
        })
    })?;
    let r_psi_inv = LinkTable::from_fn(aps, ues, |m, k| {
        &links[(m, k)].correlation * &psi_inv[(m, k)]
    });
    let gain = LinkTable::from_fn(aps, ues, |m, k| r_psi_inv[(m, k)].scale(powers[k].sqrt()));

    let mut rhat = LinkTable::from_fn(aps, ues, |m, k| {
        (&r_psi_inv[(m, k)] * &links[(m, k)].correlation).scale(powers[k] * tau_p)
    });
    let mut error_cov =
        LinkTable::from_fn(aps, ues, |m, k| &links[(m, k)].correlation - &rhat[(m, k)]);
    for m in 0..aps {
        for k in 0..ues {
            let r = &links[(m, k)].correlation;
            let (h, c) = (&mut rhat[(m, k)], &mut error_cov[(m, k)]);
            for ((h, c), r) in h.iter_mut().zip(c.iter_mut()).zip(r.iter()) {
                let (hr, cr) = split(r.re, c.re);
                let (hi, ci) = split(r.im, c.im);
                *h = Complex64::new(hr, hi);
                *c = Complex64::new(cr, ci);
            }
        }
    }

    let mut w = Vec::with_capacity(aps);
    let mut w_inv = Vec::with_capacity(aps);
    for m in 0..aps {
        let mut wm = identity(n).scale(noise);
        for l in 0..ues {
            wm += error_cov[(m, l)].scale(powers[l]);
        }
        let inv = hermitian_inverse(&wm).ok_or(Error::Solve {
            what: "W",
            ap: m,
            ue: None,
        })?;
        w.push(wm);
        w_inv.push(inv);
    }

    Ok(EstimationStatistics {
        powers,
        noise,
        tau_p: config.tau_p,
        psi,
        psi_inv,
        r_psi_inv,
        rhat,
        error_cov,
        w,
        w_inv,
        gain,
    })
}

/// Despread pilot signals of one block.
///
/// UEs sharing a pilot observe the same despread signal, so the observation is
/// stored once per `(AP, pilot)`: column `t` of `received[m]` is the signal of
/// pilot `t` at AP `m`, and likewise for the LoS mean `los_mean`.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotObservation {
    pub received: Vec<CMat>,
    pub los_mean: Vec<CMat>,
    pilot_of: Vec<usize>,
}

impl PilotObservation {
    /// `y^p_mk`.
    pub fn y(&self, m: usize, k: usize) -> CVec {
        self.received[m].column(self.pilot_of[k]).into_owned()
    }

    /// `ȳ^p_mk`.
    pub fn ybar(&self, m: usize, k: usize) -> CVec {
        self.los_mean[m].column(self.pilot_of[k]).into_owned()
    }
}

/// Synthesizes the despread pilot observation of a block.
///
/// One noise vector `CN(0, tau_p sigma^2 I)` is drawn per `(AP, pilot)`;
/// passing `None` for the generator gives the noiseless observation.
pub fn synthesize_pilot_observation<R: Rng>(
    realization: &ChannelRealization,
    assignment: &PilotAssignment,
    config: &SimulationConfig,
    rng: Option<&mut R>,
) -> PilotObservation {
    let n = realization.channels[0].nrows();
    let tau_p = config.tau_p;
    let powers = config.ue_powers();
    let noise_std = (tau_p as f64 * config.noise_mw()).sqrt() * FRAC_1_SQRT_2;
    let mut rng = rng;
    let mut received = Vec::with_capacity(realization.aps());
    let mut los_mean = Vec::with_capacity(realization.aps());
    for m in 0..realization.aps() {
        let mut y = CMat::zeros(n, tau_p);
        let mut ybar = CMat::zeros(n, tau_p);
        for t in 0..tau_p {
            let mut col = CVec::zeros(n);
            let mut mean = CVec::zeros(n);
            for l in assignment.users_of(t) {
                let a = c(powers[l].sqrt() * tau_p as f64);
                col += realization.channels[m].column(l) * a;
                mean += realization.los[m].column(l) * a;
            }
            if let Some(rng) = rng.as_deref_mut() {
                for z in col.iter_mut() {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    *z += Complex64::new(re, im) * noise_std;
                }
            }
            y.set_column(t, &col);
            ybar.set_column(t, &mean);
        }
        received.push(y);
        los_mean.push(ybar);
    }
    PilotObservation {
        received,
        los_mean,
        pilot_of: assignment.pilot_of.clone(),
    }
}

/// Local channel estimates of one block, `N x K` per AP (column `k` is `ĥ_mk`).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimateBlock {
    pub estimates: Vec<CMat>,
}

impl ChannelEstimateBlock {
    pub fn aps(&self) -> usize {
        self.estimates.len()
    }

    pub fn hhat(&self, m: usize, k: usize) -> CVec {
        self.estimates[m].column(k).into_owned()
    }

    /// Estimation errors `h - ĥ`, same layout as the estimates.
    pub fn errors(&self, realization: &ChannelRealization) -> Vec<CMat> {
        realization
            .channels
            .iter()
            .zip(&self.estimates)
            .map(|(h, e)| h - e)
            .collect()
    }

    /// Stacked `MN x K` estimate matrix.
    pub fn stacked(&self) -> CMat {
        crate::linalg::vstack(&self.estimates)
    }
}

/// Phase-aware MMSE estimate
/// `ĥ_mk = h̄_mk e^{j theta_mk} + sqrt(p_k) R_mk Psi_mk^{-1} (y_mk - ȳ_mk)`.
///
/// The estimator is given the LoS phases of the block through `realization`.
pub fn estimate_channels(
    observation: &PilotObservation,
    realization: &ChannelRealization,
    stats: &EstimationStatistics,
    assignment: &PilotAssignment,
) -> ChannelEstimateBlock {
    let (aps, ues, n) = (stats.aps(), stats.ues(), stats.antennas());
    let estimates = (0..aps)
        .map(|m| {
            let centered = &observation.received[m] - &observation.los_mean[m];
            let mut est = CMat::zeros(n, ues);
            for k in 0..ues {
                let innovation = centered.column(assignment.pilot_of[k]);
                let v = realization.los[m].column(k) + stats.gain(m, k) * innovation;
                est.set_column(k, &v);
            }
            est
        })
        .collect();
    ChannelEstimateBlock { estimates }
}
