use serde::{Deserialize, Serialize};

use crate::combining::Scheme;
use crate::error::{Error, Result};
use crate::link::PowerPolicy;
use crate::scenario::{ChannelModel, SimulationConfig};

/// Parameter swept across the experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    /// Number of APs.
    #[serde(rename = "M")]
    Aps,
    /// Antennas per AP.
    #[serde(rename = "N")]
    Antennas,
    #[serde(rename = "none")]
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkDirection {
    Uplink,
    Downlink,
}

impl LinkDirection {
    pub fn name(self) -> &'static str {
        match self {
            Self::Uplink => "uplink",
            Self::Downlink => "downlink",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub sweep_axis: SweepAxis,
    pub sweep_values: Vec<usize>,
    pub schemes: Vec<Scheme>,
    pub links: Vec<LinkDirection>,
    pub models: Vec<ChannelModel>,
    /// Blocks used to estimate the precoder norms before the downlink pass.
    pub warmup_blocks: usize,
    pub dl_power_policy: PowerPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
}

/// Complete experiment description. Parsed from TOML on top of a [`Profile`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub simulation: SimulationConfig,
    pub experiment: SweepConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// Small network that runs in minutes.
    Desk,
    /// Network sizes of the published figures; slow.
    Paper,
}

impl Profile {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Self::Desk),
            "paper" => Ok(Self::Paper),
            other => Err(Error::config(
                "profile",
                format!("unknown profile `{other}`"),
            )),
        }
    }

    pub fn config(self) -> ExperimentConfig {
        match self {
            Self::Desk => ExperimentConfig {
                simulation: SimulationConfig::default(),
                experiment: SweepConfig {
                    sweep_axis: SweepAxis::Aps,
                    sweep_values: vec![10, 20, 40],
                    schemes: Scheme::ALL.to_vec(),
                    links: vec![LinkDirection::Uplink, LinkDirection::Downlink],
                    models: ChannelModel::ALL.to_vec(),
                    warmup_blocks: 500,
                    dl_power_policy: PowerPolicy::Proportional,
                },
                output: OutputConfig {
                    dir: "results".into(),
                },
            },
            Self::Paper => {
                let ues = 40;
                ExperimentConfig {
                    simulation: SimulationConfig {
                        aps: 80,
                        ues,
                        antennas: 4,
                        p_dl_total_mw: 200.0 * ues as f64,
                        n_setups: 20,
                        n_channel_realizations: 1000,
                        ..SimulationConfig::default()
                    },
                    experiment: SweepConfig {
                        sweep_axis: SweepAxis::Aps,
                        sweep_values: vec![20, 40, 60, 80, 100],
                        schemes: Scheme::ALL.to_vec(),
                        links: vec![LinkDirection::Uplink, LinkDirection::Downlink],
                        models: ChannelModel::ALL.to_vec(),
                        warmup_blocks: 500,
                        dl_power_policy: PowerPolicy::Proportional,
                    },
                    output: OutputConfig {
                        dir: "results".into(),
                    },
                }
            }
        }
    }
}

fn merge(base: &mut toml::Table, user: toml::Table, path: &str) -> Result<()> {
    for (key, value) in user {
        let full = if path.is_empty() {
            key.clone()
        } else {
            format!("{path}.{key}")
        };
        match (base.get_mut(&key), value) {
            (None, _) => return Err(Error::config(full, "is not a known key")),
            (Some(toml::Value::Table(b)), toml::Value::Table(u)) => merge(b, u, &full)?,
            (Some(toml::Value::Table(_)), _) => {
                return Err(Error::config(full, "must be a table"));
            }
            (Some(slot), v) => *slot = v,
        }
    }
    Ok(())
}

impl ExperimentConfig {
    /// Parses `key = value` TOML on top of `profile`. Keys absent from the
    /// text keep their profile value; unknown keys are rejected.
    pub fn from_toml_str(text: &str, profile: Profile) -> Result<Self> {
        let user: toml::Table = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let mut base =
            toml::Table::try_from(profile.config()).map_err(|e| Error::Parse(e.to_string()))?;
        merge(&mut base, user, "")?;
        let cfg: Self = toml::Value::Table(base)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("experiment config serializes")
    }

    pub fn n_setups(&self) -> usize {
        self.simulation.n_setups
    }

    pub fn n_blocks(&self) -> usize {
        self.simulation.n_channel_realizations
    }

    /// Sweep points; a single point (the configured `M`) when not sweeping.
    pub fn sweep_points(&self) -> Vec<usize> {
        match self.experiment.sweep_axis {
            SweepAxis::None => vec![self.simulation.aps],
            _ => self.experiment.sweep_values.clone(),
        }
    }

    /// Simulation parameters at one sweep point.
    pub fn simulation_at(&self, value: usize) -> SimulationConfig {
        let mut sim = self.simulation.clone();
        match self.experiment.sweep_axis {
            SweepAxis::Aps => sim.aps = value,
            SweepAxis::Antennas => sim.antennas = value,
            SweepAxis::None => {}
        }
        sim
    }

    pub fn validate(&self) -> Result<()> {
        self.simulation.validate()?;
        let e = &self.experiment;
        if e.sweep_axis != SweepAxis::None {
            if e.sweep_values.is_empty() {
                return Err(Error::config(
                    "experiment.sweep_values",
                    "must not be empty",
                ));
            }
            if e.sweep_values.contains(&0) {
                return Err(Error::config(
                    "experiment.sweep_values",
                    "must be positive integers",
                ));
            }
        }
        if e.schemes.is_empty() {
            return Err(Error::config(
                "experiment.schemes",
                "needs at least one scheme",
            ));
        }
        if e.links.is_empty() {
            return Err(Error::config("experiment.links", "needs at least one link"));
        }
        if e.models.is_empty() {
            return Err(Error::config(
                "experiment.models",
                "needs at least one model",
            ));
        }
        if e.links.contains(&LinkDirection::Downlink) && e.warmup_blocks == 0 {
            return Err(Error::config(
                "experiment.warmup_blocks",
                "must be at least 1 for downlink",
            ));
        }
        Ok(())
    }

    /// Applies `CELLFREE_SETUP_SEED` / `CELLFREE_CHANNEL_SEED` style overrides.
    pub fn apply_seed_overrides(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<()> {
        for (var, slot) in [
            ("CELLFREE_SETUP_SEED", &mut self.simulation.seeds.setup_seed),
            (
                "CELLFREE_CHANNEL_SEED",
                &mut self.simulation.seeds.channel_seed,
            ),
        ] {
            if let Some(v) = lookup(var) {
                *slot = v
                    .trim()
                    .parse()
                    .map_err(|_| Error::config(var, format!("`{v}` is not an unsigned integer")))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_profile() {
        let cfg = ExperimentConfig::from_toml_str("", Profile::Desk).unwrap();
        assert_eq!(cfg, Profile::Desk.config());
    }

    #[test]
    fn overrides_nested_keys() {
        let text = r#"
[simulation]
aps = 7
channel_model = "rayleigh"
pathloss.shadowing_std_db = 0.0

[experiment]
sweep_axis = "N"
sweep_values = [1, 2]
schemes = ["gsli_lsfd"]
"#;
        let cfg = ExperimentConfig::from_toml_str(text, Profile::Desk).unwrap();
        assert_eq!(cfg.simulation.aps, 7);
        assert_eq!(cfg.simulation.channel_model, ChannelModel::Rayleigh);
        assert_eq!(cfg.simulation.pathloss.shadowing_std_db, 0.0);
        assert_eq!(cfg.experiment.sweep_axis, SweepAxis::Antennas);
        assert_eq!(cfg.experiment.schemes, vec![Scheme::GsliLsfd]);
        assert_eq!(cfg.simulation_at(2).antennas, 2);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = ExperimentConfig::from_toml_str("[simulation]\nbogus = 1\n", Profile::Desk)
            .unwrap_err();
        assert!(err.to_string().contains("simulation.bogus"), "{err}");
        let err = ExperimentConfig::from_toml_str("[pathloss]\n", Profile::Desk).unwrap_err();
        assert!(err.to_string().contains("pathloss"), "{err}");
    }

    #[test]
    fn invalid_values_rejected() {
        let err = ExperimentConfig::from_toml_str("[simulation]\ntau_p = 0\n", Profile::Desk)
            .unwrap_err();
        assert!(err.to_string().contains("tau_p"));
        let err = ExperimentConfig::from_toml_str("[experiment]\nschemes = []\n", Profile::Desk)
            .unwrap_err();
        assert!(err.to_string().contains("schemes"));
        let err =
            ExperimentConfig::from_toml_str("[experiment]\nsweep_values = [0]\n", Profile::Desk)
                .unwrap_err();
        assert!(err.to_string().contains("sweep_values"));
        assert!(
            ExperimentConfig::from_toml_str("[simulation]\naps = \"x\"\n", Profile::Desk).is_err()
        );
    }

    #[test]
    fn roundtrips_through_toml() {
        let cfg = Profile::Paper.config();
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string(), Profile::Desk).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn seed_overrides() {
        let mut cfg = Profile::Desk.config();
        cfg.apply_seed_overrides(|k| (k == "CELLFREE_CHANNEL_SEED").then(|| "99".to_string()))
            .unwrap();
        assert_eq!(cfg.simulation.seeds.channel_seed, 99);
        assert!(cfg.apply_seed_overrides(|_| Some("x".into())).is_err());
    }
}
