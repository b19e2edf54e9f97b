//! Large-scale fading decoding: Monte Carlo fusion statistics, optimal
//! weights and the resulting SINR.

use crate::combining::EffectiveGains;
use crate::error::{Error, Result};
use crate::linalg::{c, hermitian_part, hermitian_solve, identity, CMat, CVec, ZERO};
use crate::Sinr;

/// Running sums over blocks; a mergeable monoid.
#[derive(Debug, Clone, PartialEq)]
pub struct LsfdAccumulator {
    aps: usize,
    ues: usize,
    /// `[k * M + m]`: sum of `v_mk^H h_mk`.
    sum_d: Vec<num_complex::Complex64>,
    /// `[((k * K + l) * M + n) * M + m]`: sum of `conj(v_mk^H h_ml) (v_nk^H h_nl)`.
    sum_theta: Vec<num_complex::Complex64>,
    /// `[k * M + m]`: sum of `||v_mk||^2`.
    sum_norm: Vec<f64>,
    count: usize,
}

impl LsfdAccumulator {
    pub fn new(aps: usize, ues: usize) -> Self {
        Self {
            aps,
            ues,
            sum_d: vec![ZERO; ues * aps],
            sum_theta: vec![ZERO; ues * ues * aps * aps],
            sum_norm: vec![0.0; ues * aps],
            count: 0,
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn add(&mut self, gains: &EffectiveGains) {
        let (aps, ues) = (self.aps, self.ues);
        debug_assert_eq!(gains.gains.len(), aps);
        let mut u = vec![ZERO; aps];
        for k in 0..ues {
            for m in 0..aps {
                self.sum_d[k * aps + m] += gains.gains[m][(k, k)];
                self.sum_norm[k * aps + m] += gains.norms[m][k];
            }
            for l in 0..ues {
                for (m, um) in u.iter_mut().enumerate() {
                    *um = gains.gains[m][(k, l)];
                }
                let base = (k * ues + l) * aps * aps;
                for n in 0..aps {
                    let row = &mut self.sum_theta[base + n * aps..base + (n + 1) * aps];
                    let un = u[n];
                    for (slot, um) in row.iter_mut().zip(&u) {
                        *slot += um.conj() * un;
                    }
                }
            }
        }
        self.count += 1;
    }

    pub fn merge(&mut self, other: &Self) {
        assert_eq!((self.aps, self.ues), (other.aps, other.ues));
        for (a, b) in self.sum_d.iter_mut().zip(&other.sum_d) {
            *a += b;
        }
        for (a, b) in self.sum_theta.iter_mut().zip(&other.sum_theta) {
            *a += b;
        }
        for (a, b) in self.sum_norm.iter_mut().zip(&other.sum_norm) {
            *a += b;
        }
        self.count += other.count;
    }

    /// Sample means. `Theta` is symmetrized to its Hermitian part.
    ///
    /// Panics if no block was accumulated.
    pub fn finish(&self) -> LsfdStatistics {
        assert!(self.count > 0, "LSFD statistics need at least one block");
        let (aps, ues) = (self.aps, self.ues);
        let inv = 1.0 / self.count as f64;
        let mean_d = (0..ues)
            .map(|k| CVec::from_fn(aps, |m, _| self.sum_d[k * aps + m] * inv))
            .collect();
        let theta = (0..ues)
            .map(|k| {
                (0..ues)
                    .map(|l| {
                        let base = (k * ues + l) * aps * aps;
                        let raw = CMat::from_fn(aps, aps, |n, m| {
                            self.sum_theta[base + n * aps + m] * inv
                        });
                        hermitian_part(&raw)
                    })
                    .collect()
            })
            .collect();
        let norms = (0..ues)
            .map(|k| (0..aps).map(|m| self.sum_norm[k * aps + m] * inv).collect())
            .collect();
        LsfdStatistics {
            mean_d,
            theta,
            norms,
            samples: self.count,
        }
    }
}

/// Monte Carlo estimates of the LSFD expectations.
#[derive(Debug, Clone, PartialEq)]
pub struct LsfdStatistics {
    /// `E{d_kk}` per UE, length `M`.
    pub mean_d: Vec<CVec>,
    /// `theta[k][l]`, `M x M`, entry `(n, m) = E{conj(v_mk^H h_ml) v_nk^H h_nl}`.
    pub theta: Vec<Vec<CMat>>,
    /// Diagonal of `D_k`: `E{||v_mk||^2}` per AP.
    pub norms: Vec<Vec<f64>>,
    pub samples: usize,
}

impl LsfdStatistics {
    pub fn ues(&self) -> usize {
        self.mean_d.len()
    }

    /// `sum_l p_l Theta_kl - p_k E{d_kk} E{d_kk}^H + sigma^2 D_k`.
    pub fn interference_matrix(&self, powers: &[f64], noise: f64, k: usize) -> CMat {
        let aps = self.mean_d[k].len();
        let mut a = CMat::zeros(aps, aps);
        for (l, theta) in self.theta[k].iter().enumerate() {
            a += theta.scale(powers[l]);
        }
        let d = &self.mean_d[k];
        a -= (d * d.adjoint()).scale(powers[k]);
        for m in 0..aps {
            a[(m, m)] += c(noise * self.norms[k][m]);
        }
        hermitian_part(&a)
    }
}

/// Optimal LSFD weights of every UE.
#[derive(Debug, Clone, PartialEq)]
pub struct LsfdWeights {
    pub weights: Vec<CVec>,
    /// Set for UEs whose interference matrix needed diagonal loading.
    pub regularized: Vec<bool>,
}

/// `a_k* = (sum_l p_l Theta_kl - p_k E{d}E{d}^H + sigma^2 D_k)^{-1} E{d_kk}`.
pub fn optimal_weights(stats: &LsfdStatistics, powers: &[f64], noise: f64) -> LsfdWeights {
    let mut weights = Vec::with_capacity(stats.ues());
    let mut regularized = Vec::with_capacity(stats.ues());
    for k in 0..stats.ues() {
        let a = stats.interference_matrix(powers, noise, k);
        let rhs = CMat::from_column_slice(a.nrows(), 1, stats.mean_d[k].as_slice());
        let (x, loaded) = match hermitian_solve(a.clone(), &rhs) {
            Some(x) => (x, false),
            None => {
                let aps = a.nrows();
                let load = (1e-12 * a.trace().re.abs() / aps as f64).max(f64::MIN_POSITIVE);
                let x = hermitian_solve(a + identity(aps).scale(load), &rhs)
                    .unwrap_or_else(|| CMat::zeros(aps, 1));
                (x, true)
            }
        };
        weights.push(x.column(0).into_owned());
        regularized.push(loaded);
    }
    LsfdWeights {
        weights,
        regularized,
    }
}

/// LSFD SINR of UE `k` for weights `a`:
/// `p_k |a^H E{d_kk}|^2 / a^H (sum_l p_l Theta_kl - p_k E{d}E{d}^H + sigma^2 D_k) a`.
pub fn lsfd_sinr(
    stats: &LsfdStatistics,
    a: &CVec,
    powers: &[f64],
    noise: f64,
    k: usize,
) -> Result<Sinr> {
    if a.iter().all(|z| z.norm() == 0.0) {
        return Err(Error::ZeroWeights(k));
    }
    let num = powers[k] * a.dotc(&stats.mean_d[k]).norm_sqr();
    let den = a
        .dotc(&(stats.interference_matrix(powers, noise, k) * a))
        .re;
    Ok(if den > 0.0 && den.is_finite() {
        Sinr {
            value: num / den,
            degenerate: false,
        }
    } else {
        Sinr {
            value: 0.0,
            degenerate: true,
        }
    })
}

/// `p_k E{d_kk}^H a_k*`, the SINR attained by the optimal weights.
pub fn optimal_sinr(stats: &LsfdStatistics, a_opt: &CVec, powers: &[f64], k: usize) -> f64 {
    powers[k] * stats.mean_d[k].dotc(a_opt).re
}
