//! Use-and-then-forget SINRs: centralized uplink and duality-based downlink.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::combining::{CombinerSet, EffectiveGains, Scheme};
use crate::linalg::{CMat, ZERO};
use crate::scenario::LinkStatistics;
use crate::table::LinkTable;
use crate::Sinr;

const DENOMINATOR_FLOOR: f64 = 1e-30;

fn floored(num: f64, den: f64) -> Sinr {
    if den > 0.0 && den.is_finite() {
        Sinr {
            value: num / den,
            degenerate: false,
        }
    } else {
        Sinr {
            value: (num / DENOMINATOR_FLOOR).max(0.0),
            degenerate: true,
        }
    }
}

/// Sums for the centralized uplink bound.
#[derive(Debug, Clone, PartialEq)]
pub struct UatfAccumulator {
    ues: usize,
    sum_signal: Vec<Complex64>,
    /// `[k * K + l]`: sum of `|v_k^H h_l|^2`.
    sum_second: Vec<f64>,
    sum_norm: Vec<f64>,
    count: usize,
}

impl UatfAccumulator {
    pub fn new(ues: usize) -> Self {
        Self {
            ues,
            sum_signal: vec![ZERO; ues],
            sum_second: vec![0.0; ues * ues],
            sum_norm: vec![0.0; ues],
            count: 0,
        }
    }

    /// Adds one block; the stacked products are summed over the APs.
    pub fn add(&mut self, gains: &EffectiveGains) {
        let ues = self.ues;
        for k in 0..ues {
            for l in 0..ues {
                let u: Complex64 = gains.gains.iter().map(|g| g[(k, l)]).sum();
                if k == l {
                    self.sum_signal[k] += u;
                }
                self.sum_second[k * ues + l] += u.norm_sqr();
            }
            self.sum_norm[k] += gains.norms.iter().map(|n| n[k]).sum::<f64>();
        }
        self.count += 1;
    }

    pub fn merge(&mut self, other: &Self) {
        for (a, b) in self.sum_signal.iter_mut().zip(&other.sum_signal) {
            *a += b;
        }
        for (a, b) in self.sum_second.iter_mut().zip(&other.sum_second) {
            *a += b;
        }
        for (a, b) in self.sum_norm.iter_mut().zip(&other.sum_norm) {
            *a += b;
        }
        self.count += other.count;
    }

    pub fn finish(&self) -> UatfStatistics {
        assert!(self.count > 0, "UatF statistics need at least one block");
        let inv = 1.0 / self.count as f64;
        let ues = self.ues;
        UatfStatistics {
            mean_signal: self.sum_signal.iter().map(|z| z * inv).collect(),
            second_moments: (0..ues)
                .map(|k| {
                    (0..ues)
                        .map(|l| self.sum_second[k * ues + l] * inv)
                        .collect()
                })
                .collect(),
            mean_norm2: self.sum_norm.iter().map(|v| v * inv).collect(),
            samples: self.count,
        }
    }
}

/// Expectations entering the centralized uplink bound.
#[derive(Debug, Clone, PartialEq)]
pub struct UatfStatistics {
    /// `E{v_k^H h_k}`.
    pub mean_signal: Vec<Complex64>,
    /// `second_moments[k][l] = E{|v_k^H h_l|^2}`.
    pub second_moments: Vec<Vec<f64>>,
    /// `E{||v_k||^2}`.
    pub mean_norm2: Vec<f64>,
    pub samples: usize,
}

/// `p_k |E{v_k^H h_k}|^2 / (sum_l p_l E{|v_k^H h_l|^2} - p_k |E{v_k^H h_k}|^2 + sigma^2 E{||v_k||^2})`.
pub fn uatf_sinr_centralized(stats: &UatfStatistics, powers: &[f64], noise: f64, k: usize) -> Sinr {
    let signal = powers[k] * stats.mean_signal[k].norm_sqr();
    let total: f64 = stats.second_moments[k]
        .iter()
        .zip(powers)
        .map(|(s, p)| p * s)
        .sum();
    floored(signal, total - signal + noise * stats.mean_norm2[k])
}

/// Unnormalized downlink precoders `ḡ_mk`, column `k` of `per_ap[m]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSet {
    pub scheme: Scheme,
    pub per_ap: Vec<CMat>,
}

/// Duality: `ḡ_mk = v_mk`.
pub fn precoder_from_combiner(combiners: &CombinerSet) -> PrecoderSet {
    PrecoderSet {
        scheme: combiners.scheme,
        per_ap: combiners.per_ap.clone(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerPolicy {
    /// `p_mk = p_m / K`.
    Equal,
    /// `p_mk = p_m beta_mk / sum_l beta_ml`.
    Proportional,
}

/// Splits the per-AP budget `p_m` among the UEs.
pub fn allocate_dl_power(
    links: &LinkTable<LinkStatistics>,
    p_m: f64,
    policy: PowerPolicy,
) -> LinkTable<f64> {
    let ues = links.ues();
    match policy {
        PowerPolicy::Equal => LinkTable::from_fn(links.aps(), ues, |_, _| p_m / ues as f64),
        PowerPolicy::Proportional => {
            let totals: Vec<f64> = (0..links.aps())
                .map(|m| links.ap(m).iter().map(|l| l.beta).sum())
                .collect();
            LinkTable::from_fn(links.aps(), ues, |m, k| {
                p_m * links[(m, k)].beta / totals[m]
            })
        }
    }
}

/// Warm-up sums of `||ḡ_mk||^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderNormAccumulator {
    sums: LinkTable<f64>,
    count: usize,
}

impl PrecoderNormAccumulator {
    pub fn new(aps: usize, ues: usize) -> Self {
        Self {
            sums: LinkTable::from_fn(aps, ues, |_, _| 0.0),
            count: 0,
        }
    }

    pub fn add(&mut self, gains: &EffectiveGains) {
        for (m, norms) in gains.norms.iter().enumerate() {
            for (k, v) in norms.iter().enumerate() {
                self.sums[(m, k)] += v;
            }
        }
        self.count += 1;
    }

    pub fn merge(&mut self, other: &Self) {
        for m in 0..self.sums.aps() {
            for k in 0..self.sums.ues() {
                self.sums[(m, k)] += other.sums[(m, k)];
            }
        }
        self.count += other.count;
    }

    /// `E{||ḡ_mk||^2}` estimates.
    pub fn finish(&self) -> LinkTable<f64> {
        assert!(self.count > 0, "warm-up needs at least one block");
        let inv = 1.0 / self.count as f64;
        self.sums.map(|s| s * inv)
    }
}

/// Power factors `mu_mk` with the warm-up norms they were derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderStatistics {
    pub mean_norm2: LinkTable<f64>,
    pub allocation: LinkTable<f64>,
    pub mu: LinkTable<f64>,
    /// UEs no AP transmits to because every warm-up norm was zero.
    pub unserved: Vec<bool>,
}

impl PrecoderStatistics {
    /// `mu_mk = sqrt(p_mk / E{||ḡ_mk||^2})`, zero where the precoder was never excited.
    pub fn new(mean_norm2: LinkTable<f64>, allocation: LinkTable<f64>) -> Self {
        let (aps, ues) = (mean_norm2.aps(), mean_norm2.ues());
        let mu = LinkTable::from_fn(aps, ues, |m, k| {
            let e = mean_norm2[(m, k)];
            if e > 0.0 && e.is_finite() {
                (allocation[(m, k)] / e).sqrt()
            } else {
                0.0
            }
        });
        let unserved = (0..ues)
            .map(|k| (0..aps).all(|m| mu[(m, k)] == 0.0))
            .collect();
        Self {
            mean_norm2,
            allocation,
            mu,
            unserved,
        }
    }

    /// `sum_k mu_mk^2 E{||ḡ_mk||^2}` for AP `m`.
    pub fn power_used(&self, m: usize) -> f64 {
        (0..self.mu.ues())
            .map(|k| self.mu[(m, k)].powi(2) * self.mean_norm2[(m, k)])
            .sum()
    }
}

/// Sums for the downlink bound.
#[derive(Debug, Clone, PartialEq)]
pub struct DownlinkAccumulator {
    ues: usize,
    /// `sum_m g_mk^H h_mk`.
    sum_signal: Vec<Complex64>,
    /// `[k * K + l]`: sum of `|sum_m g_ml^H h_mk|^2`.
    sum_second: Vec<f64>,
    count: usize,
}

impl DownlinkAccumulator {
    pub fn new(ues: usize) -> Self {
        Self {
            ues,
            sum_signal: vec![ZERO; ues],
            sum_second: vec![0.0; ues * ues],
            count: 0,
        }
    }

    /// `gains` are the uplink products `v_ml^H h_mk`, reused through duality.
    pub fn add(&mut self, gains: &EffectiveGains, mu: &LinkTable<f64>) {
        let ues = self.ues;
        for k in 0..ues {
            for l in 0..ues {
                let c: Complex64 = gains
                    .gains
                    .iter()
                    .enumerate()
                    .map(|(m, g)| g[(l, k)] * mu[(m, l)])
                    .sum();
                if k == l {
                    self.sum_signal[k] += c;
                }
                self.sum_second[k * ues + l] += c.norm_sqr();
            }
        }
        self.count += 1;
    }

    pub fn merge(&mut self, other: &Self) {
        for (a, b) in self.sum_signal.iter_mut().zip(&other.sum_signal) {
            *a += b;
        }
        for (a, b) in self.sum_second.iter_mut().zip(&other.sum_second) {
            *a += b;
        }
        self.count += other.count;
    }

    pub fn finish(&self) -> DownlinkStatistics {
        assert!(
            self.count > 0,
            "downlink statistics need at least one block"
        );
        let inv = 1.0 / self.count as f64;
        let ues = self.ues;
        DownlinkStatistics {
            mean_signal: self.sum_signal.iter().map(|z| z * inv).collect(),
            second_moments: (0..ues)
                .map(|k| {
                    (0..ues)
                        .map(|l| self.sum_second[k * ues + l] * inv)
                        .collect()
                })
                .collect(),
            samples: self.count,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DownlinkStatistics {
    /// `E{sum_m g_mk^H h_mk}`.
    pub mean_signal: Vec<Complex64>,
    /// `second_moments[k][l] = E{|sum_m g_ml^H h_mk|^2}`.
    pub second_moments: Vec<Vec<f64>>,
    pub samples: usize,
}

/// `|E{sum_m g_mk^H h_mk}|^2 / (sum_l E{|sum_m g_ml^H h_mk|^2} - |E{.}|^2 + sigma^2)`.
pub fn downlink_sinr(stats: &DownlinkStatistics, noise: f64, k: usize) -> Sinr {
    let signal = stats.mean_signal[k].norm_sqr();
    let total: f64 = stats.second_moments[k].iter().sum();
    floored(signal, total - signal + noise)
}
