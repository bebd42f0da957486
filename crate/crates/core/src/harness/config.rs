use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::brpc::BrpcConfig;
use crate::channel::ChannelModel;
use crate::error::{Error, Result};
use crate::game::{EfficiencyModel, GameParams};
use crate::rake::RakeConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// One `(N_c, N_f, L, K)` combination of a q-statistic table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableCell {
    pub chips: usize,
    pub frames: usize,
    pub paths: usize,
    pub users: usize,
}

/// Frame split of a fixed processing gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameSplit {
    pub chips: usize,
    pub frames: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    /// Spread of `h_sp·p*` across users at equilibrium; one cell per entry,
    /// or the scenario parameters alone when `cells` is absent.
    TableQ {
        #[serde(default)]
        cells: Option<Vec<TableCell>>,
    },
    /// Equilibrium utility against channel gain, with the large-system line.
    UtilityVsGain {
        #[serde(default)]
        variants: Option<Vec<FrameSplit>>,
    },
    /// `γ*` against the self-interference ratio `Γ`, no randomness.
    GammaStarCurve {
        #[serde(default = "defaults::db_min")]
        db_min: f64,
        #[serde(default = "defaults::db_max")]
        db_max: f64,
        #[serde(default = "defaults::points")]
        points: usize,
    },
    /// Probability that some user ends at `p_max`, for every frame count in
    /// `nf_min..=nf_max` on shared channel draws.
    OutageVsNf { nf_min: usize, nf_max: usize },
    /// Equilibrium against the balanced social optimum; `N_c = round(ρ·L)`.
    NeVsSocial { rho_values: Vec<f64> },
    /// Plain equilibrium runs; `trace` writes the sweep history of trial 0.
    Custom {
        #[serde(default)]
        trace: bool,
    },
}

mod defaults {
    pub fn db_min() -> f64 {
        0.0
    }
    pub fn db_max() -> f64 {
        40.0
    }
    pub fn points() -> usize {
        161
    }
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::TableQ { .. } => "table_q",
            Experiment::UtilityVsGain { .. } => "utility_vs_gain",
            Experiment::GammaStarCurve { .. } => "gamma_star_curve",
            Experiment::OutageVsNf { .. } => "outage_vs_nf",
            Experiment::NeVsSocial { .. } => "ne_vs_social",
            Experiment::Custom { .. } => "custom",
        }
    }

    /// Experiment `kind` with its default settings, for command-line overrides.
    pub fn with_defaults(kind: &str, params: &GameParams) -> Result<Self> {
        Ok(match kind {
            "table_q" => Experiment::TableQ { cells: None },
            "utility_vs_gain" => Experiment::UtilityVsGain { variants: None },
            "gamma_star_curve" => Experiment::GammaStarCurve {
                db_min: defaults::db_min(),
                db_max: defaults::db_max(),
                points: defaults::points(),
            },
            "outage_vs_nf" => Experiment::OutageVsNf {
                nf_min: 5,
                nf_max: params.frames.max(12),
            },
            "ne_vs_social" => Experiment::NeVsSocial {
                rho_values: vec![0.2, 0.5, 1.0, 2.0, 5.0],
            },
            "custom" => Experiment::Custom { trace: false },
            other => {
                return Err(Error::config(
                    "experiment.kind",
                    format!(
                        "unknown experiment `{other}` (expected table_q, utility_vs_gain, \
                         gamma_star_curve, outage_vs_nf, ne_vs_social or custom)"
                    ),
                ))
            }
        })
    }

    fn validate(&self, params: &GameParams) -> Result<()> {
        match self {
            Experiment::TableQ { cells: Some(cells) } => {
                if cells.is_empty() {
                    return Err(Error::config("experiment.cells", "must not be empty"));
                }
                for c in cells {
                    if c.chips == 0 || c.frames == 0 || c.paths == 0 || c.users == 0 {
                        return Err(Error::config("experiment.cells", "every entry must be at least 1"));
                    }
                }
            }
            Experiment::UtilityVsGain { variants: Some(v) } => {
                if v.is_empty() || v.iter().any(|s| s.chips == 0 || s.frames == 0) {
                    return Err(Error::config("experiment.variants", "need non-empty positive splits"));
                }
            }
            Experiment::GammaStarCurve { db_min, db_max, points } => {
                if !(db_min.is_finite() && db_max.is_finite() && db_min < db_max) {
                    return Err(Error::config("experiment.db_min", "need finite db_min < db_max"));
                }
                if *points < 2 {
                    return Err(Error::config("experiment.points", "must be at least 2"));
                }
            }
            Experiment::OutageVsNf { nf_min, nf_max } => {
                if *nf_min == 0 || nf_min > nf_max {
                    return Err(Error::config("experiment.nf_min", "need 1 <= nf_min <= nf_max"));
                }
            }
            Experiment::NeVsSocial { rho_values } => {
                if rho_values.is_empty() {
                    return Err(Error::config("experiment.rho_values", "must not be empty"));
                }
                for &rho in rho_values {
                    if !(rho > 0.0 && rho.is_finite()) || (rho * params.paths as f64).round() < 1.0 {
                        return Err(Error::config(
                            "experiment.rho_values",
                            format!("ρ = {rho} gives no chip positions for {} paths", params.paths),
                        ));
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }
}

fn default_trials() -> u64 {
    1000
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

fn default_rake() -> RakeConfig {
    RakeConfig::ARake
}

/// A complete experiment description, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    /// Stem of every output file.
    pub name: String,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub experiment: Experiment,
    pub params: GameParams,
    #[serde(default)]
    pub channel: ChannelModel,
    #[serde(default = "default_rake")]
    pub rake: RakeConfig,
    #[serde(default)]
    pub brpc: BrpcConfig,
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::config(
                "schema_version",
                format!("unsupported version {} (this build reads {SCHEMA_VERSION})", self.schema_version),
            ));
        }
        if self.name.is_empty()
            || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c))
        {
            return Err(Error::config("name", "must be non-empty and use only [A-Za-z0-9._-]"));
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        self.params.validate()?;
        self.channel.validate(&self.params)?;
        self.rake.validate(self.params.paths)?;
        self.brpc.validate()?;
        self.experiment.validate(&self.params)
    }

    pub fn efficiency(&self) -> EfficiencyModel {
        EfficiencyModel::packet_exp(self.params.packet_bits)
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form; the
    /// output directory does not take part.
    pub fn hash(&self) -> String {
        let mut canon = self.clone();
        canon.output_dir = PathBuf::new();
        let json = serde_json::to_string(&canon).expect("scenario serializes");
        let digest = Sha256::digest(json.as_bytes());
        hex::encode(digest)[..16].to_string()
    }
}
