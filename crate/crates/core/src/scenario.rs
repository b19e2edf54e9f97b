//! Network geometry and large-scale link statistics.
//!
//! A *setup* fixes AP and UE positions and, for every AP-UE pair, the
//! pathloss, Rician factor, LoS array response and NLoS spatial correlation
//! matrix. All small-scale realizations of a setup share these statistics.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::PilotPolicy;
use crate::linalg::{CMat, CVec};
use crate::rng::{self, Purpose};
use crate::table::LinkTable;

/// Which of the three small-scale fading models is simulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum ChannelModel {
    /// Correlated Rician fading with a uniformly random LoS phase per block.
    RicianPs,
    /// Correlated Rician fading with a fixed (tracked) LoS phase.
    RicianFixed,
    /// Correlated Rayleigh fading, no LoS component.
    Rayleigh,
}

impl ChannelModel {
    pub const ALL: [ChannelModel; 3] = [Self::RicianPs, Self::RicianFixed, Self::Rayleigh];

    pub fn name(self) -> &'static str {
        match self {
            Self::RicianPs => "rician_ps",
            Self::RicianFixed => "rician_fixed",
            Self::Rayleigh => "rayleigh",
        }
    }

    pub fn has_los(self) -> bool {
        !matches!(self, Self::Rayleigh)
    }
}

/// Distance-dependent Rician factor `kappa[dB] = intercept_db - slope_db_per_m * d_2d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RicianFactorModel {
    pub intercept_db: f64,
    pub slope_db_per_m: f64,
}

impl Default for RicianFactorModel {
    fn default() -> Self {
        Self {
            intercept_db: 13.0,
            slope_db_per_m: 0.03,
        }
    }
}

impl RicianFactorModel {
    pub fn kappa(&self, distance_2d_m: f64) -> f64 {
        let db = self.intercept_db - self.slope_db_per_m * distance_2d_m;
        10f64.powf(db / 10.0).max(0.0)
    }
}

/// `beta[dB] = intercept_db - slope_db * log10(d_3d / 1 m) + F`, `F ~ N(0, shadowing_std_db^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathlossModel {
    pub intercept_db: f64,
    pub slope_db: f64,
    pub shadowing_std_db: f64,
    pub ap_height_m: f64,
}

impl Default for PathlossModel {
    fn default() -> Self {
        Self {
            intercept_db: -30.5,
            slope_db: 36.7,
            shadowing_std_db: 4.0,
            ap_height_m: 10.0,
        }
    }
}

impl PathlossModel {
    /// Pathloss in dB without shadowing.
    pub fn mean_db(&self, distance_2d_m: f64) -> f64 {
        let d3 = distance_2d_m.hypot(self.ap_height_m).max(1.0);
        self.intercept_db - self.slope_db * d3.log10()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    pub setup_seed: u64,
    pub channel_seed: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Self {
            setup_seed: 1,
            channel_seed: 2,
        }
    }
}

/// Physical and Monte Carlo parameters of one simulated network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    /// Number of APs `M`.
    pub aps: usize,
    /// Number of single-antenna UEs `K`.
    pub ues: usize,
    /// Antennas per AP `N`.
    pub antennas: usize,
    pub area_side_m: f64,
    pub tau_c: usize,
    pub tau_p: usize,
    /// Uplink data symbols per block; `tau_c - tau_p` when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_u: Option<usize>,
    /// Downlink data symbols per block; `tau_c - tau_p` when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_d: Option<usize>,
    /// Uplink transmit power of every UE.
    pub p_ul_mw: f64,
    /// Downlink power budget of every AP.
    pub p_dl_total_mw: f64,
    pub noise_dbm: f64,
    pub bandwidth_hz: f64,
    pub channel_model: ChannelModel,
    pub asd_deg: f64,
    pub antenna_spacing_wavelengths: f64,
    pub pilot_policy: PilotPolicy,
    /// Reserved; wrap-around topologies are not implemented.
    pub wrap_around: bool,
    pub rician: RicianFactorModel,
    pub pathloss: PathlossModel,
    pub seeds: Seeds,
    pub n_setups: usize,
    pub n_channel_realizations: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        let ues = 10;
        Self {
            aps: 20,
            ues,
            antennas: 2,
            area_side_m: 1000.0,
            tau_c: 200,
            tau_p: 1,
            tau_u: None,
            tau_d: None,
            p_ul_mw: 200.0,
            p_dl_total_mw: 200.0 * ues as f64,
            noise_dbm: -94.0,
            bandwidth_hz: 20e6,
            channel_model: ChannelModel::RicianFixed,
            asd_deg: 15.0,
            antenna_spacing_wavelengths: 0.5,
            pilot_policy: PilotPolicy::RoundRobin,
            wrap_around: false,
            rician: RicianFactorModel::default(),
            pathloss: PathlossModel::default(),
            seeds: Seeds::default(),
            n_setups: 50,
            n_channel_realizations: 500,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        fn positive(field: &str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(
                    field,
                    format!("must be positive and finite, got {v}"),
                ))
            }
        }
        for (field, v) in [
            ("aps", self.aps),
            ("ues", self.ues),
            ("antennas", self.antennas),
            ("tau_p", self.tau_p),
            ("n_setups", self.n_setups),
            ("n_channel_realizations", self.n_channel_realizations),
        ] {
            if v == 0 {
                return Err(Error::config(field, "must be at least 1"));
            }
        }
        if self.tau_p > self.tau_c {
            return Err(Error::config("tau_p", "must not exceed tau_c"));
        }
        if self.uplink_symbols() + self.tau_p > self.tau_c {
            return Err(Error::config(
                "tau_u",
                "tau_u + tau_p must not exceed tau_c",
            ));
        }
        if self.downlink_symbols() + self.tau_p > self.tau_c {
            return Err(Error::config(
                "tau_d",
                "tau_d + tau_p must not exceed tau_c",
            ));
        }
        positive("area_side_m", self.area_side_m)?;
        positive("p_ul_mw", self.p_ul_mw)?;
        positive("p_dl_total_mw", self.p_dl_total_mw)?;
        positive("bandwidth_hz", self.bandwidth_hz)?;
        positive("asd_deg", self.asd_deg)?;
        positive(
            "antenna_spacing_wavelengths",
            self.antenna_spacing_wavelengths,
        )?;
        if !self.noise_dbm.is_finite() {
            return Err(Error::config("noise_dbm", "must be finite"));
        }
        if !(self.pathloss.shadowing_std_db >= 0.0 && self.pathloss.shadowing_std_db.is_finite()) {
            return Err(Error::config(
                "pathloss.shadowing_std_db",
                "must be non-negative",
            ));
        }
        if !(self.pathloss.ap_height_m >= 0.0 && self.pathloss.ap_height_m.is_finite()) {
            return Err(Error::config(
                "pathloss.ap_height_m",
                "must be non-negative",
            ));
        }
        if !self.pathloss.intercept_db.is_finite() || !self.pathloss.slope_db.is_finite() {
            return Err(Error::config("pathloss", "coefficients must be finite"));
        }
        if !self.rician.intercept_db.is_finite() || !self.rician.slope_db_per_m.is_finite() {
            return Err(Error::config("rician", "coefficients must be finite"));
        }
        if self.wrap_around {
            return Err(Error::config(
                "wrap_around",
                "is reserved and must be false",
            ));
        }
        Ok(())
    }

    /// Noise power `sigma^2` in mW.
    pub fn noise_mw(&self) -> f64 {
        10f64.powf(self.noise_dbm / 10.0)
    }

    /// Uplink transmit powers of all UEs.
    pub fn ue_powers(&self) -> Vec<f64> {
        vec![self.p_ul_mw; self.ues]
    }

    pub fn uplink_symbols(&self) -> usize {
        self.tau_u.unwrap_or(self.tau_c.saturating_sub(self.tau_p))
    }

    pub fn downlink_symbols(&self) -> usize {
        self.tau_d.unwrap_or(self.tau_c.saturating_sub(self.tau_p))
    }

    pub fn uplink_prelog(&self) -> f64 {
        self.uplink_symbols() as f64 / self.tau_c as f64
    }

    pub fn downlink_prelog(&self) -> f64 {
        self.downlink_symbols() as f64 / self.tau_c as f64
    }
}

/// 2-D positions of all APs and UEs of one setup, in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub ap_positions: Vec<[f64; 2]>,
    pub ue_positions: Vec<[f64; 2]>,
}

/// Large-scale state of one AP-UE link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkStatistics {
    pub distance_m: f64,
    /// Total channel gain (linear).
    pub beta: f64,
    /// Rician factor (linear); zero for Rayleigh fading.
    pub kappa: f64,
    pub beta_los: f64,
    pub beta_nlos: f64,
    pub nominal_angle_rad: f64,
    /// LoS component, `sqrt(beta_los)` times the array response.
    pub los: CVec,
    /// NLoS spatial correlation matrix, trace `N * beta_nlos`.
    pub correlation: CMat,
}

/// Geometry plus per-link statistics, frozen for all blocks of the setup.
#[derive(Debug, Clone, PartialEq)]
pub struct Setup {
    pub scenario: Scenario,
    pub links: LinkTable<LinkStatistics>,
}

/// Splits `beta` into LoS and NLoS power for Rician factor `kappa`.
pub fn rician_split(beta: f64, kappa: f64) -> (f64, f64) {
    let beta_nlos = beta / (1.0 + kappa);
    // complement, so los + nlos == beta
    let beta_los = beta - beta_nlos;
    (beta_los, beta_nlos)
}

/// Uniform linear array response, unit-modulus entries.
pub fn array_response(angle_rad: f64, antennas: usize, spacing: f64) -> CVec {
    CVec::from_fn(antennas, |n, _| {
        Complex64::from_polar(1.0, 2.0 * PI * spacing * n as f64 * angle_rad.sin())
    })
}

/// Gaussian local scattering correlation matrix of a ULA.
///
/// Element `(a, b)` is
/// `beta_nlos * exp(j 2 pi s (a-b) sin(phi)) * exp(-(asd^2 / 2) (2 pi s (a-b) cos(phi))^2)`.
pub fn local_scattering_correlation(
    nominal_angle_rad: f64,
    asd_rad: f64,
    antennas: usize,
    spacing: f64,
    beta_nlos: f64,
) -> CMat {
    let mut r = CMat::zeros(antennas, antennas);
    for a in 0..antennas {
        r[(a, a)] = Complex64::new(beta_nlos, 0.0);
        for b in 0..a {
            let dist = 2.0 * PI * spacing * (a - b) as f64;
            let phase = dist * nominal_angle_rad.sin();
            let spread = dist * nominal_angle_rad.cos();
            let amp = beta_nlos * (-(asd_rad * asd_rad / 2.0) * spread * spread).exp();
            let v = Complex64::from_polar(amp, phase);
            r[(a, b)] = v;
            r[(b, a)] = v.conj();
        }
    }
    r
}

fn uniform_positions(rng: &mut impl Rng, count: usize, side: f64) -> Vec<[f64; 2]> {
    (0..count)
        .map(|_| [rng.random::<f64>() * side, rng.random::<f64>() * side])
        .collect()
}

/// Draws the geometry and link statistics of setup `setup_index`.
///
/// Positions and shadowing only depend on `(setup_seed, setup_index)`, so the
/// three channel models see the same network for the same index.
pub fn generate_setup(config: &SimulationConfig, setup_index: u64) -> Result<Setup> {
    config.validate()?;
    let seed = config.seeds.setup_seed;
    let side = config.area_side_m;
    let ue_positions = uniform_positions(
        &mut rng::stream(seed, setup_index, 0, Purpose::UePositions),
        config.ues,
        side,
    );
    let ap_positions = uniform_positions(
        &mut rng::stream(seed, setup_index, 0, Purpose::ApPositions),
        config.aps,
        side,
    );

    let shadowing = Normal::new(0.0, config.pathloss.shadowing_std_db)
        .map_err(|e| Error::config("pathloss.shadowing_std_db", e.to_string()))?;
    let mut shadow_rng = rng::stream(seed, setup_index, 0, Purpose::Shadowing);
    let asd = config.asd_deg.to_radians();
    let spacing = config.antenna_spacing_wavelengths;
    let n = config.antennas;

    let links = LinkTable::from_fn(config.aps, config.ues, |m, k| {
        let [ax, ay] = ap_positions[m];
        let [ux, uy] = ue_positions[k];
        let (dx, dy) = (ux - ax, uy - ay);
        let distance = dx.hypot(dy);
        let angle = dy.atan2(dx);
        let shadow_db = shadowing.sample(&mut shadow_rng);
        let beta = 10f64.powf((config.pathloss.mean_db(distance) + shadow_db) / 10.0);
        let kappa = if config.channel_model.has_los() {
            config.rician.kappa(distance)
        } else {
            0.0
        };
        let (beta_los, beta_nlos) = if kappa == 0.0 {
            (0.0, beta)
        } else {
            rician_split(beta, kappa)
        };
        let los = if beta_los > 0.0 {
            array_response(angle, n, spacing).scale(beta_los.sqrt())
        } else {
            CVec::zeros(n)
        };
        LinkStatistics {
            distance_m: distance,
            beta,
            kappa,
            beta_los,
            beta_nlos,
            nominal_angle_rad: angle,
            los,
            correlation: local_scattering_correlation(angle, asd, n, spacing, beta_nlos),
        }
    });

    Ok(Setup {
        scenario: Scenario {
            ap_positions,
            ue_positions,
        },
        links,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_eigenvalues, hermitian_residual, real_trace};

    fn small_config(model: ChannelModel) -> SimulationConfig {
        SimulationConfig {
            aps: 6,
            ues: 5,
            antennas: 4,
            channel_model: model,
            ..SimulationConfig::default()
        }
    }

    /// Element formula evaluated independently of the matrix builder.
    fn element(a: usize, b: usize, phi: f64, asd: f64, s: f64, beta: f64) -> Complex64 {
        let d = a as f64 - b as f64;
        let first = Complex64::new(0.0, 2.0 * PI * s * d * phi.sin()).exp();
        let x = 2.0 * PI * s * d * phi.cos();
        first * (beta * (-(asd.powi(2) / 2.0) * x * x).exp())
    }

    #[test]
    fn correlation_matches_element_formula() {
        let (phi, asd) = (30f64.to_radians(), 15f64.to_radians());
        let r = local_scattering_correlation(phi, asd, 4, 0.5, 1.0);
        for a in 0..4 {
            for b in 0..4 {
                let want = element(a, b, phi, asd, 0.5, 1.0);
                assert!((r[(a, b)] - want).norm() < 1e-12, "({a},{b})");
            }
        }
    }

    #[test]
    fn correlation_diagonal_is_beta() {
        let r = local_scattering_correlation(1.1, 0.3, 1, 0.5, 2.5);
        assert_eq!(r[(0, 0)], Complex64::new(2.5, 0.0));
        let r = local_scattering_correlation(-0.4, 0.2, 6, 0.5, 0.7);
        assert!(r.diagonal().iter().all(|z| *z == Complex64::new(0.7, 0.0)));
    }

    #[test]
    fn rician_split_cases() {
        assert_eq!(rician_split(3.0, 0.0), (0.0, 3.0));
        assert_eq!(rician_split(2.0, 1.0), (1.0, 1.0));
        let (los, nlos) = rician_split(5.0, 1e12);
        assert!(los / 5.0 >= 1.0 - 1e-12);
        assert_eq!(los + nlos, 5.0);
    }

    #[test]
    fn setup_is_deterministic_and_inside_area() {
        let cfg = small_config(ChannelModel::RicianFixed);
        let a = generate_setup(&cfg, 3).unwrap();
        let b = generate_setup(&cfg, 3).unwrap();
        assert_eq!(a, b);
        for p in a
            .scenario
            .ap_positions
            .iter()
            .chain(&a.scenario.ue_positions)
        {
            assert!((0.0..=1000.0).contains(&p[0]) && (0.0..=1000.0).contains(&p[1]));
        }
        assert_eq!(a.scenario.ap_positions.len(), 6);
        assert_eq!(a.scenario.ue_positions.len(), 5);
        let c = generate_setup(&cfg, 4).unwrap();
        assert_ne!(a.scenario.ap_positions, c.scenario.ap_positions);
        assert_ne!(a.scenario.ue_positions, c.scenario.ue_positions);
    }

    #[test]
    fn link_statistics_invariants() {
        for model in ChannelModel::ALL {
            let cfg = small_config(model);
            let setup = generate_setup(&cfg, 0).unwrap();
            for (_, link) in setup.links.iter() {
                let n = cfg.antennas as f64;
                let r = &link.correlation;
                assert!(hermitian_residual(r) <= 1e-12);
                let tr = real_trace(r);
                assert!(hermitian_eigenvalues(r)[0] >= -1e-10 * tr / n);
                assert!(((tr - n * link.beta_nlos) / tr).abs() <= 1e-9);
                assert_eq!(link.beta_los + link.beta_nlos, link.beta);
                if model == ChannelModel::Rayleigh {
                    assert!(link.los.iter().all(|z| *z == Complex64::new(0.0, 0.0)));
                    assert_eq!(link.beta_nlos, link.beta);
                } else {
                    let los2 = link.los.norm_squared();
                    assert!(((los2 - n * link.beta_los) / los2).abs() <= 1e-9);
                    for z in link.los.iter() {
                        assert!(
                            (z.norm() - link.beta_los.sqrt()).abs()
                                <= 1e-12 * link.beta_los.sqrt().max(1.0)
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn models_share_geometry() {
        let a = generate_setup(&small_config(ChannelModel::RicianPs), 1).unwrap();
        let b = generate_setup(&small_config(ChannelModel::Rayleigh), 1).unwrap();
        assert_eq!(a.scenario, b.scenario);
        assert_eq!(a.links[(2, 3)].beta, b.links[(2, 3)].beta);
    }

    #[test]
    fn invalid_config_names_field() {
        let cfg = SimulationConfig {
            tau_u: Some(200),
            ..SimulationConfig::default()
        };
        let err = generate_setup(&cfg, 0).unwrap_err().to_string();
        assert!(err.contains("tau_u"), "{err}");
        let cfg = SimulationConfig {
            asd_deg: 0.0,
            ..SimulationConfig::default()
        };
        assert!(cfg.validate().unwrap_err().to_string().contains("asd_deg"));
        let cfg = SimulationConfig {
            aps: 0,
            ..SimulationConfig::default()
        };
        assert!(cfg.validate().unwrap_err().to_string().contains("aps"));
    }
}
