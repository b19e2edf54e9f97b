//! Centralized, local and GSLI-MMSE combiners.
//!
//! All three schemes are MMSE-type. Writing the centralized combiner with the
//! matrix inversion lemma exposes, for AP `m`, the instantaneous cross-terms
//! `Xi_m' = Ĥ_m'^H W_m'^{-1} Ĥ_m'` of every other AP. GSLI-MMSE replaces their
//! sum by its average, which only changes when the setup changes.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::estimation::{ChannelEstimateBlock, EstimationStatistics, PilotAssignment};
use crate::linalg::{
    block_diagonal, c, general_solve, hermitian_inverse, hermitian_part, hermitian_residual,
    hermitian_solve, identity, trace_of_product, vstack, CMat, ZERO,
};
use crate::scenario::{ChannelModel, LinkStatistics};
use crate::table::LinkTable;

/// Processing scheme under evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Centralized MMSE combining at the CPU.
    Cmmse,
    /// Local MMSE combining at each AP, fused with LSFD.
    LmmseLsfd,
    /// GSLI-MMSE combining at each AP, fused with LSFD.
    GsliLsfd,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Self::Cmmse, Self::LmmseLsfd, Self::GsliLsfd];

    pub fn name(self) -> &'static str {
        match self {
            Self::Cmmse => "cmmse",
            Self::LmmseLsfd => "lmmse_lsfd",
            Self::GsliLsfd => "gsli_lsfd",
        }
    }

    pub fn is_distributed(self) -> bool {
        !matches!(self, Self::Cmmse)
    }
}

/// Combining vectors of one block. Column `k` of `per_ap[m]` is `v_mk`.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinerSet {
    pub scheme: Scheme,
    pub per_ap: Vec<CMat>,
    /// Stacked `MN x K` combiners, present for the centralized scheme.
    pub stacked: Option<CMat>,
    /// Set when a GSLI inner solve needed diagonal loading.
    pub regularized: bool,
}

impl CombinerSet {
    fn distributed(scheme: Scheme, per_ap: Vec<CMat>, regularized: bool) -> Self {
        Self {
            scheme,
            per_ap,
            stacked: None,
            regularized,
        }
    }

    fn centralized(per_ap: Vec<CMat>) -> Self {
        let stacked = vstack(&per_ap);
        Self {
            scheme: Scheme::Cmmse,
            per_ap,
            stacked: Some(stacked),
            regularized: false,
        }
    }

    /// Inner products `v_mk^H h_ml` and norms `||v_mk||^2` against the true channels.
    pub fn effective_gains(&self, realization: &ChannelRealization) -> EffectiveGains {
        let gains = self
            .per_ap
            .iter()
            .zip(&realization.channels)
            .map(|(v, h)| v.ad_mul(h))
            .collect();
        let norms = self
            .per_ap
            .iter()
            .map(|v| v.column_iter().map(|col| col.norm_squared()).collect())
            .collect();
        EffectiveGains { gains, norms }
    }
}

/// Per-AP effective gains of one block.
///
/// `gains[m][(k, l)] = v_mk^H h_ml` and `norms[m][k] = ||v_mk||^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveGains {
    pub gains: Vec<CMat>,
    pub norms: Vec<Vec<f64>>,
}

fn inverse_powers(stats: &EstimationStatistics) -> CMat {
    CMat::from_diagonal(
        &stats
            .powers
            .iter()
            .map(|&p| c(1.0 / p))
            .collect::<Vec<_>>()
            .into(),
    )
}

fn power_diag(stats: &EstimationStatistics) -> CMat {
    CMat::from_diagonal(
        &stats
            .powers
            .iter()
            .map(|&p| c(p))
            .collect::<Vec<_>>()
            .into(),
    )
}

fn split_rows(stacked: &CMat, block: usize) -> Vec<CMat> {
    (0..stacked.nrows() / block)
        .map(|m| stacked.rows(m * block, block).into_owned())
        .collect()
}

/// Centralized MMSE: `v_k = p_k (sum_l p_l (ĥ_l ĥ_l^H + C_l) + sigma^2 I)^{-1} ĥ_k`,
/// solved directly in dimension `MN`.
pub fn cmmse_combiner(
    estimates: &ChannelEstimateBlock,
    stats: &EstimationStatistics,
) -> Result<CombinerSet> {
    let h = estimates.stacked();
    let hp = &h * power_diag(stats);
    let a = &hp * h.adjoint() + block_diagonal(&stats.w);
    let v = hermitian_solve(a, &hp).ok_or(Error::Solve {
        what: "centralized MMSE matrix",
        ap: 0,
        ue: None,
    })?;
    Ok(CombinerSet::centralized(split_rows(&v, stats.antennas())))
}

/// Centralized MMSE through the matrix inversion lemma,
/// `v_k = p_k W^{-1} Ĥ (Ĥ^H W^{-1} Ĥ + P^{-1})^{-1} P^{-1} e_k`.
///
/// `W` is block diagonal, so the only inverse formed per block is `K x K`.
pub fn cmmse_via_lemma(
    estimates: &ChannelEstimateBlock,
    stats: &EstimationStatistics,
) -> Result<CombinerSet> {
    let whs: Vec<CMat> = estimates
        .estimates
        .iter()
        .zip(&stats.w_inv)
        .map(|(h, w_inv)| w_inv * h)
        .collect();
    let mut g = inverse_powers(stats);
    for (h, wh) in estimates.estimates.iter().zip(&whs) {
        g += h.ad_mul(wh);
    }
    let g_inv = hermitian_inverse(&hermitian_part(&g)).ok_or(Error::Solve {
        what: "centralized K x K matrix",
        ap: 0,
        ue: None,
    })?;
    // p_k P^{-1} e_k = e_k
    let per_ap = whs.iter().map(|wh| wh * &g_inv).collect();
    Ok(CombinerSet::centralized(per_ap))
}

/// Local MMSE at AP `m`: `v_mk = p_k (sum_l p_l (ĥ_ml ĥ_ml^H + C_ml) + sigma^2 I)^{-1} ĥ_mk`.
pub fn lmmse_combiner(
    estimates: &ChannelEstimateBlock,
    stats: &EstimationStatistics,
    m: usize,
) -> Result<CMat> {
    let h = &estimates.estimates[m];
    let hp = h * power_diag(stats);
    let a = &hp * h.adjoint() + &stats.w[m];
    hermitian_solve(a, &hp).ok_or(Error::Solve {
        what: "local MMSE matrix",
        ap: m,
        ue: None,
    })
}

pub fn lmmse_combiners(
    estimates: &ChannelEstimateBlock,
    stats: &EstimationStatistics,
) -> Result<CombinerSet> {
    let per_ap = (0..stats.aps())
        .map(|m| lmmse_combiner(estimates, stats, m))
        .collect::<Result<_>>()?;
    Ok(CombinerSet::distributed(Scheme::LmmseLsfd, per_ap, false))
}

/// Realized cross-term `Xi_m = Ĥ_m^H W_m^{-1} Ĥ_m` of one block.
pub fn instantaneous_xi(
    estimates: &ChannelEstimateBlock,
    stats: &EstimationStatistics,
    m: usize,
) -> CMat {
    let h = &estimates.estimates[m];
    h.ad_mul(&(&stats.w_inv[m] * h))
}

/// Closed-form average of `Xi_m'` for the given channel model.
///
/// For co-pilot UEs `l in P_k` the NLoS part contributes
/// `sqrt(p_k p_l) tau_p tr(R_m'l Psi_m'k^{-1} R_m'k W_m'^{-1})`. The LoS part
/// `h̄_m'k^H W_m'^{-1} h̄_m'l` survives for every pair when the LoS phase is
/// fixed, only on the diagonal when it is random, and vanishes under
/// Rayleigh fading.
pub fn xibar(
    model: ChannelModel,
    stats: &EstimationStatistics,
    links: &LinkTable<LinkStatistics>,
    assignment: &PilotAssignment,
    ap: usize,
) -> CMat {
    let ues = stats.ues();
    let w_inv = &stats.w_inv[ap];
    let tau_p = stats.tau_p as f64;
    // Psi_k^{-1} R_k W^{-1}
    let right: Vec<CMat> = (0..ues)
        .map(|k| &stats.psi_inv[(ap, k)] * &links[(ap, k)].correlation * w_inv)
        .collect();
    let los_w: Vec<_> = (0..ues).map(|l| w_inv * &links[(ap, l)].los).collect();

    let mut xi = CMat::zeros(ues, ues);
    for k in 0..ues {
        for l in k..ues {
            let mut v = ZERO;
            if assignment.shares_pilot(k, l) {
                let scale = (stats.powers[k] * stats.powers[l]).sqrt() * tau_p;
                v += trace_of_product(&links[(ap, l)].correlation, &right[k]) * scale;
            }
            let los_term = match model {
                ChannelModel::RicianFixed => true,
                ChannelModel::RicianPs => k == l,
                ChannelModel::Rayleigh => false,
            };
            if los_term {
                v += links[(ap, k)].los.dotc(&los_w[l]);
            }
            if k == l {
                v.im = 0.0;
            }
            xi[(k, l)] = v;
            xi[(l, k)] = v.conj();
        }
    }
    xi
}

/// `Xi-bar` of every AP, the per-AP sums over the other APs and the cached
/// GSLI weightings `(S_m + P^{-1})^{-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct XiBarTable {
    pub per_ap: Vec<CMat>,
    /// `partial[m] = sum_{m' != m} per_ap[m']`.
    pub partial: Vec<CMat>,
    /// `weights[m] = (partial[m] + P^{-1})^{-1}`.
    pub weights: Vec<CMat>,
    /// Set where computing `weights[m]` needed diagonal loading.
    pub regularized: Vec<bool>,
}

impl XiBarTable {
    pub fn new(
        model: ChannelModel,
        stats: &EstimationStatistics,
        links: &LinkTable<LinkStatistics>,
        assignment: &PilotAssignment,
    ) -> Result<Self> {
        let per_ap: Vec<CMat> = (0..stats.aps())
            .map(|m| xibar(model, stats, links, assignment, m))
            .collect();
        Self::from_per_ap(per_ap, stats)
    }

    /// Builds the table from arbitrary per-AP terms, e.g. realized `Xi_m`.
    pub fn from_per_ap(per_ap: Vec<CMat>, stats: &EstimationStatistics) -> Result<Self> {
        let ues = per_ap.first().map_or(0, |x| x.nrows());
        let partial: Vec<CMat> = (0..per_ap.len())
            .map(|m| {
                let mut s = CMat::zeros(ues, ues);
                for (other, x) in per_ap.iter().enumerate() {
                    if other != m {
                        s += x;
                    }
                }
                s
            })
            .collect();
        let p_inv = inverse_powers(stats);
        let mut weights = Vec::with_capacity(partial.len());
        let mut regularized = Vec::with_capacity(partial.len());
        for (m, s) in partial.iter().enumerate() {
            let (w, r) = regularized_inverse(&(s + &p_inv)).ok_or(Error::Solve {
                what: "GSLI statistics matrix",
                ap: m,
                ue: None,
            })?;
            weights.push(w);
            regularized.push(r);
        }
        Ok(Self {
            per_ap,
            partial,
            weights,
            regularized,
        })
    }
}

/// Inverse with a Hermitian fast path, a general fallback and, as a last
/// resort, diagonal loading. The flag reports the loading.
fn regularized_inverse(g: &CMat) -> Option<(CMat, bool)> {
    let k = g.nrows();
    if hermitian_residual(g) <= 1e-10 {
        if let Some(inv) = hermitian_inverse(&hermitian_part(g)) {
            return Some((inv, false));
        }
    }
    if let Some(inv) = general_solve(g.clone(), &identity(k)) {
        return Some((inv, false));
    }
    let load = 1e-12 * g.trace().norm() / k as f64;
    let loaded = g + identity(k).scale(load.max(f64::MIN_POSITIVE));
    general_solve(loaded, &identity(k)).map(|inv| (inv, true))
}

/// `v_m = (Ĥ_m Q_m Ĥ_m^H + W_m)^{-1} Ĥ_m Q_m` for a cached weighting `Q_m`.
fn gsli_weighted(
    estimates: &ChannelEstimateBlock,
    stats: &EstimationStatistics,
    q: &CMat,
    m: usize,
) -> Result<CMat> {
    let h = &estimates.estimates[m];
    let hq = h * q;
    let a = &hq * h.adjoint() + &stats.w[m];
    hermitian_solve(a, &hq).ok_or(Error::Solve {
        what: "GSLI matrix",
        ap: m,
        ue: None,
    })
}

/// GSLI-MMSE at AP `m` with the statistical cross-term sum `s_m`:
/// `v_mk = p_k W_m^{-1} Ĥ_m (Ĥ_m^H W_m^{-1} Ĥ_m + S_m + P^{-1})^{-1} P^{-1} e_k`.
///
/// Evaluated in the equivalent `N x N` form
/// `(Ĥ_m Q_m Ĥ_m^H + W_m)^{-1} Ĥ_m Q_m` with `Q_m = (S_m + P^{-1})^{-1}`,
/// which reduces to local MMSE when `S_m = 0`. Returns the `N x K` combiners
/// and whether forming `Q_m` was regularized.
pub fn gsli_combiner(
    estimates: &ChannelEstimateBlock,
    stats: &EstimationStatistics,
    s_m: &CMat,
    m: usize,
) -> Result<(CMat, bool)> {
    let (q, regularized) =
        regularized_inverse(&(s_m + inverse_powers(stats))).ok_or(Error::Solve {
            what: "GSLI statistics matrix",
            ap: m,
            ue: None,
        })?;
    Ok((gsli_weighted(estimates, stats, &q, m)?, regularized))
}

/// GSLI-MMSE at every AP using the weightings cached in `table`.
pub fn gsli_combiners(
    estimates: &ChannelEstimateBlock,
    stats: &EstimationStatistics,
    table: &XiBarTable,
) -> Result<CombinerSet> {
    let per_ap = (0..stats.aps())
        .map(|m| gsli_weighted(estimates, stats, &table.weights[m], m))
        .collect::<Result<_>>()?;
    let regularized = table.regularized.iter().any(|&r| r);
    Ok(CombinerSet::distributed(
        Scheme::GsliLsfd,
        per_ap,
        regularized,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelSampler;
    use crate::estimation::{
        assign_pilots, compute_estimation_statistics, estimate_channels,
        synthesize_pilot_observation, PilotPolicy,
    };
    use crate::linalg::{relative_error, CVec};
    use crate::rng::{stream, Purpose};
    use crate::scenario::{generate_setup, SimulationConfig};

    /// Unit noise and power; every link has NLoS gain `beta` and no LoS.
    fn unit_config(aps: usize, ues: usize, antennas: usize) -> SimulationConfig {
        SimulationConfig {
            aps,
            ues,
            antennas,
            noise_dbm: 0.0,
            p_ul_mw: 1.0,
            ..SimulationConfig::default()
        }
    }

    fn flat_links(aps: usize, ues: usize, antennas: usize, beta: f64) -> LinkTable<LinkStatistics> {
        LinkTable::from_fn(aps, ues, |_, _| LinkStatistics {
            distance_m: 1.0,
            beta,
            kappa: 0.0,
            beta_los: 0.0,
            beta_nlos: beta,
            nominal_angle_rad: 0.0,
            los: CVec::zeros(antennas),
            correlation: identity(antennas).scale(beta),
        })
    }

    fn scalar_stats(
        aps: usize,
        beta: f64,
    ) -> (
        EstimationStatistics,
        PilotAssignment,
        LinkTable<LinkStatistics>,
    ) {
        let cfg = unit_config(aps, 1, 1);
        let links = flat_links(aps, 1, 1, beta);
        let a = PilotAssignment::from_pilots(1, vec![0]);
        (
            compute_estimation_statistics(&links, &a, &cfg).unwrap(),
            a,
            links,
        )
    }

    fn ones(aps: usize) -> ChannelEstimateBlock {
        ChannelEstimateBlock {
            estimates: vec![CMat::from_element(1, 1, c(1.0)); aps],
        }
    }

    struct Instance {
        links: LinkTable<LinkStatistics>,
        pilots: PilotAssignment,
        stats: EstimationStatistics,
        est: ChannelEstimateBlock,
        realization: ChannelRealization,
    }

    fn instance(
        model: ChannelModel,
        aps: usize,
        antennas: usize,
        ues: usize,
        tau_p: usize,
        block: u64,
    ) -> Instance {
        let cfg = SimulationConfig {
            aps,
            ues,
            antennas,
            tau_p,
            channel_model: model,
            ..SimulationConfig::default()
        };
        let setup = generate_setup(&cfg, 3).unwrap();
        let pilots = assign_pilots(
            ues,
            tau_p,
            PilotPolicy::RoundRobin,
            &mut stream(1, 3, 0, Purpose::Pilots),
        );
        let stats = compute_estimation_statistics(&setup.links, &pilots, &cfg).unwrap();
        let realization = ChannelSampler::new(&setup.links)
            .unwrap()
            .sample(model, &mut stream(2, 3, block, Purpose::Channel));
        let obs = synthesize_pilot_observation(
            &realization,
            &pilots,
            &cfg,
            Some(&mut stream(2, 3, block, Purpose::PilotNoise)),
        );
        let est = estimate_channels(&obs, &realization, &stats, &pilots);
        Instance {
            links: setup.links,
            pilots,
            stats,
            est,
            realization,
        }
    }

    #[test]
    fn cmmse_scalar_without_error() {
        let cfg = unit_config(1, 1, 2);
        let links = flat_links(1, 1, 2, 0.0);
        let a = PilotAssignment::from_pilots(1, vec![0]);
        let stats = compute_estimation_statistics(&links, &a, &cfg).unwrap();
        let e1 = CMat::from_column_slice(2, 1, &[c(1.0), c(0.0)]);
        let est = ChannelEstimateBlock {
            estimates: vec![e1.clone()],
        };
        let v = cmmse_combiner(&est, &stats).unwrap();
        assert!(relative_error(&v.per_ap[0], &e1.scale(0.5)) <= 1e-15);
    }

    #[test]
    fn scalar_lemma_and_local() {
        let (stats, _, _) = scalar_stats(1, 1.0);
        let est = ones(1);
        let lemma = cmmse_via_lemma(&est, &stats).unwrap();
        let local = lmmse_combiner(&est, &stats, 0).unwrap();
        assert!((lemma.per_ap[0][(0, 0)].re - 0.4).abs() < 1e-15);
        assert!((local[(0, 0)].re - 0.4).abs() < 1e-15);
    }

    #[test]
    fn scalar_xibar_rayleigh() {
        let (stats, a, links) = scalar_stats(1, 1.0);
        let xi = xibar(ChannelModel::Rayleigh, &stats, &links, &a, 0);
        assert!((xi[(0, 0)] - c(1.0 / 3.0)).norm() < 1e-15);
    }

    #[test]
    fn scalar_gsli() {
        for aps in [1, 2, 5] {
            let (stats, a, links) = scalar_stats(aps, 1.0);
            let table = XiBarTable::new(ChannelModel::Rayleigh, &stats, &links, &a).unwrap();
            let v = gsli_combiners(&ones(aps), &stats, &table).unwrap();
            let expected = (1.0 / 1.5) / (1.0 / 1.5 + (aps as f64 - 1.0) / 3.0 + 1.0);
            for m in 0..aps {
                assert!((v.per_ap[m][(0, 0)].re - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn centralized_routes_agree() {
        for model in ChannelModel::ALL {
            let inst = instance(model, 3, 2, 4, 2, 0);
            let direct = cmmse_combiner(&inst.est, &inst.stats).unwrap();
            let lemma = cmmse_via_lemma(&inst.est, &inst.stats).unwrap();
            let (d, l) = (direct.stacked.unwrap(), lemma.stacked.unwrap());
            assert!(relative_error(&d, &l) <= 1e-10, "{model:?}");
            for (m, block) in lemma.per_ap.iter().enumerate() {
                assert_eq!(*block, l.rows(m * 2, 2).into_owned());
            }
        }
    }

    #[test]
    fn gsli_with_realized_terms_is_centralized() {
        for model in ChannelModel::ALL {
            let inst = instance(model, 4, 2, 5, 2, 1);
            let lemma = cmmse_via_lemma(&inst.est, &inst.stats).unwrap();
            let xi: Vec<CMat> = (0..4)
                .map(|m| instantaneous_xi(&inst.est, &inst.stats, m))
                .collect();
            let realized = XiBarTable::from_per_ap(xi, &inst.stats).unwrap();
            for m in 0..4 {
                let (v, _) =
                    gsli_combiner(&inst.est, &inst.stats, &realized.partial[m], m).unwrap();
                assert!(relative_error(&v, &lemma.per_ap[m]) <= 1e-10);
            }
        }
    }

    #[test]
    fn single_ap_collapses_to_local() {
        for model in ChannelModel::ALL {
            let inst = instance(model, 1, 3, 4, 2, 2);
            let table = XiBarTable::new(model, &inst.stats, &inst.links, &inst.pilots).unwrap();
            assert_eq!(table.partial[0], CMat::zeros(4, 4));
            let g = gsli_combiners(&inst.est, &inst.stats, &table).unwrap();
            let l = lmmse_combiners(&inst.est, &inst.stats).unwrap();
            let cm = cmmse_combiner(&inst.est, &inst.stats).unwrap();
            assert!(relative_error(&g.per_ap[0], &l.per_ap[0]) <= 1e-12);
            assert!(relative_error(&cm.per_ap[0], &l.per_ap[0]) <= 1e-12);
        }
    }

    #[test]
    fn local_direction_is_scale_invariant() {
        let inst = instance(ChannelModel::RicianFixed, 2, 3, 3, 1, 0);
        let base = unit_config(2, 3, 3);
        let scaled = SimulationConfig {
            p_ul_mw: 7.0,
            noise_dbm: 10.0 * 7f64.log10(),
            ..base.clone()
        };
        let a = PilotAssignment::from_pilots(1, vec![0, 0, 0]);
        let s1 = compute_estimation_statistics(&inst.links, &a, &base).unwrap();
        let s2 = compute_estimation_statistics(&inst.links, &a, &scaled).unwrap();
        let v1 = lmmse_combiners(&inst.est, &s1).unwrap();
        let v2 = lmmse_combiners(&inst.est, &s2).unwrap();
        for (a, b) in v1.per_ap.iter().zip(&v2.per_ap) {
            for (x, y) in a.column_iter().zip(b.column_iter()) {
                let (x, y) = (x.normalize(), y.normalize());
                assert!((x - y).norm() <= 1e-9);
            }
        }
    }

    #[test]
    fn zero_estimate_gives_zero_combiner() {
        let mut inst = instance(ChannelModel::Rayleigh, 2, 2, 3, 3, 0);
        for h in &mut inst.est.estimates {
            h.column_mut(1).fill(ZERO);
        }
        let table = XiBarTable::new(
            ChannelModel::Rayleigh,
            &inst.stats,
            &inst.links,
            &inst.pilots,
        )
        .unwrap();
        for set in [
            cmmse_combiner(&inst.est, &inst.stats).unwrap(),
            cmmse_via_lemma(&inst.est, &inst.stats).unwrap(),
            lmmse_combiners(&inst.est, &inst.stats).unwrap(),
            gsli_combiners(&inst.est, &inst.stats, &table).unwrap(),
        ] {
            for v in &set.per_ap {
                assert!(
                    v.column(1).iter().all(|z| z.norm() == 0.0),
                    "{:?}",
                    set.scheme
                );
            }
        }
    }

    #[test]
    fn xibar_structure() {
        let inst = instance(ChannelModel::RicianPs, 3, 2, 6, 2, 0);
        for model in ChannelModel::ALL {
            let table = XiBarTable::new(model, &inst.stats, &inst.links, &inst.pilots).unwrap();
            for x in &table.per_ap {
                assert_eq!(x, &x.adjoint());
                for k in 0..6 {
                    for l in 0..6 {
                        if model != ChannelModel::RicianFixed && !inst.pilots.shares_pilot(k, l) {
                            assert_eq!(x[(k, l)], ZERO);
                        }
                    }
                }
            }
        }
        let orthogonal = instance(ChannelModel::Rayleigh, 2, 2, 4, 4, 0);
        let table = XiBarTable::new(
            ChannelModel::Rayleigh,
            &orthogonal.stats,
            &orthogonal.links,
            &orthogonal.pilots,
        )
        .unwrap();
        for x in &table.per_ap {
            assert!((0..4).all(|k| (0..4).all(|l| k == l || x[(k, l)] == ZERO)));
        }
    }

    #[test]
    fn effective_gains_match_products() {
        let inst = instance(ChannelModel::RicianFixed, 2, 2, 3, 1, 0);
        let v = lmmse_combiners(&inst.est, &inst.stats).unwrap();
        let g = v.effective_gains(&inst.realization);
        for m in 0..2 {
            for k in 0..3 {
                for l in 0..3 {
                    let expected = v.per_ap[m].column(k).dotc(&inst.realization.h(m, l));
                    assert!(
                        (g.gains[m][(k, l)] - expected).norm()
                            <= 1e-12 * expected.norm().max(1e-300)
                    );
                }
                assert!(
                    (g.norms[m][k] - v.per_ap[m].column(k).norm_squared()).abs()
                        <= 1e-15 * g.norms[m][k]
                );
            }
        }
    }
}
