//! Per-block small-scale channel realizations.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{psd_sqrt, CMat, CVec};
use crate::scenario::{ChannelModel, LinkStatistics};
use crate::table::LinkTable;

/// Channels of one coherence block.
///
/// Per AP `m` the channels are stored as `N x K` matrices whose column `k` is
/// `h_mk`. The rotated LoS part and the NLoS part are kept separately so that
/// `h_mk = los_mk + nlos_mk` holds exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub model: ChannelModel,
    pub channels: Vec<CMat>,
    /// `h̄_mk e^{j theta_mk}`.
    pub los: Vec<CMat>,
    pub nlos: Vec<CMat>,
    pub phases: LinkTable<f64>,
}

impl ChannelRealization {
    pub fn aps(&self) -> usize {
        self.channels.len()
    }

    pub fn ues(&self) -> usize {
        self.phases.ues()
    }

    pub fn h(&self, m: usize, k: usize) -> CVec {
        self.channels[m].column(k).into_owned()
    }

    /// Stacked `MN` channel of UE `k`.
    pub fn stacked(&self, k: usize) -> CVec {
        let n = self.channels[0].nrows();
        CVec::from_fn(self.aps() * n, |i, _| self.channels[i / n][(i % n, k)])
    }
}

/// Square roots of all correlation matrices of a setup, computed once.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    antennas: usize,
    los: LinkTable<CVec>,
    sqrt_corr: LinkTable<CMat>,
}

impl ChannelSampler {
    pub fn new(links: &LinkTable<LinkStatistics>) -> Result<Self> {
        let sqrt_corr = LinkTable::try_from_fn(links.aps(), links.ues(), |m, k| {
            psd_sqrt(&links[(m, k)].correlation).map_err(|reason| Error::Factorization {
                ap: m,
                ue: k,
                reason,
            })
        })?;
        let antennas = links[(0, 0)].los.len();
        Ok(Self {
            antennas,
            los: links.map(|l| l.los.clone()),
            sqrt_corr,
        })
    }

    /// Draws one block. Links are sampled in AP-major order; for each link the
    /// LoS phase (when random) is drawn before the NLoS vector.
    pub fn sample(&self, model: ChannelModel, rng: &mut impl Rng) -> ChannelRealization {
        let (aps, ues, n) = (self.los.aps(), self.los.ues(), self.antennas);
        let mut channels = Vec::with_capacity(aps);
        let mut los_all = Vec::with_capacity(aps);
        let mut nlos_all = Vec::with_capacity(aps);
        let mut phases = LinkTable::from_fn(aps, ues, |_, _| 0.0);
        for m in 0..aps {
            let mut h = CMat::zeros(n, ues);
            let mut los = CMat::zeros(n, ues);
            let mut nlos = CMat::zeros(n, ues);
            for k in 0..ues {
                let theta = match model {
                    ChannelModel::RicianPs => rng.random_range(-PI..=PI),
                    _ => 0.0,
                };
                phases[(m, k)] = theta;
                let z = CVec::from_fn(n, |_, _| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Complex64::new(re, im) * FRAC_1_SQRT_2
                });
                let check = &self.sqrt_corr[(m, k)] * z;
                let rotated = if model.has_los() {
                    &self.los[(m, k)] * Complex64::from_polar(1.0, theta)
                } else {
                    CVec::zeros(n)
                };
                h.set_column(k, &(&rotated + &check));
                los.set_column(k, &rotated);
                nlos.set_column(k, &check);
            }
            channels.push(h);
            los_all.push(los);
            nlos_all.push(nlos);
        }
        ChannelRealization {
            model,
            channels,
            los: los_all,
            nlos: nlos_all,
            phases,
        }
    }
}

/// One-shot sampling; factors the correlation matrices on every call.
pub fn sample_channel(
    links: &LinkTable<LinkStatistics>,
    model: ChannelModel,
    rng: &mut impl Rng,
) -> Result<ChannelRealization> {
    Ok(ChannelSampler::new(links)?.sample(model, rng))
}
