//! TOML run configuration.
//!
//! ```toml
//! seed = 1
//! draws = 1000
//!
//! # Cartesian product of study axes; used when `scenarios` is absent.
//! [matrix]
//! failed = [[], [15], [7, 9], [7, 8, 9, 10]]
//! res_deg = [0.5, 1.5, 5.0]
//! steer_deg = [0.0, 45.0]
//! depointing_deg = [0.0, 1.0, 3.0]
//! sigma_db = [0.0, 1.0, 2.0]
//! physical_rotation = true
//!
//! # Or an explicit list, which replaces the matrix:
//! # [[scenarios]]
//! # failed = [15]
//! # res_deg = 5.0
//! # sigma_db = 1.0
//! ```
//!
//! Every field has a default; an empty file reproduces the full study.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::scenario::{
    RotationMode, Scenario, STUDY_DEPOINTING_DEG, STUDY_FAILURE_SETS, STUDY_RESOLUTIONS_DEG,
    STUDY_SIGMA_DB, STUDY_STEERING_DEG,
};
use crate::error::{Error, Result};
use crate::uncertainty::DEFAULT_DRAWS;

fn default_seed() -> u64 {
    1
}

fn default_draws() -> usize {
    DEFAULT_DRAWS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixConfig {
    /// Base seed; each scenario's seed is derived from it and the scenario id.
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_draws")]
    pub draws: usize,
    #[serde(default)]
    pub matrix: MatrixAxes,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenarios: Option<Vec<ScenarioEntry>>,
}

impl Default for MatrixConfig {
    fn default() -> Self {
        Self {
            seed: default_seed(),
            draws: default_draws(),
            matrix: MatrixAxes::default(),
            scenarios: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatrixAxes {
    pub failed: Vec<Vec<usize>>,
    pub res_deg: Vec<f64>,
    pub steer_deg: Vec<f64>,
    pub depointing_deg: Vec<f64>,
    pub sigma_db: Vec<f64>,
    /// Also run every steered angle with physical rotation (no depointing,
    /// no ripple), for comparing the two rotation modes.
    pub physical_rotation: bool,
    pub extension: bool,
}

impl Default for MatrixAxes {
    fn default() -> Self {
        Self {
            failed: STUDY_FAILURE_SETS.iter().map(|s| s.to_vec()).collect(),
            res_deg: STUDY_RESOLUTIONS_DEG.to_vec(),
            steer_deg: STUDY_STEERING_DEG.to_vec(),
            depointing_deg: STUDY_DEPOINTING_DEG.to_vec(),
            sigma_db: STUDY_SIGMA_DB.to_vec(),
            physical_rotation: true,
            extension: false,
        }
    }
}

/// A scenario as written in a config file. Seed and draws fall back to the
/// config-level values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioEntry {
    #[serde(default)]
    pub failed: Vec<usize>,
    pub res_deg: f64,
    #[serde(default)]
    pub steer_deg: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<RotationMode>,
    #[serde(default)]
    pub depointing_deg: f64,
    #[serde(default)]
    pub sigma_db: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub draws: Option<usize>,
    #[serde(default)]
    pub extension: bool,
}

impl MatrixConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn finish(&self, mut s: Scenario, seed: Option<u64>) -> Scenario {
        s.seed = seed.unwrap_or_else(|| s.derived_seed(self.seed));
        s
    }

    /// The validated scenario list, in a fixed order.
    pub fn scenarios(&self) -> Result<Vec<Scenario>> {
        let out = match &self.scenarios {
            Some(list) => list
                .iter()
                .map(|e| {
                    let s = Scenario {
                        failed: e.failed.clone(),
                        res_deg: e.res_deg,
                        steer_deg: e.steer_deg,
                        rotation: e.rotation,
                        depointing_deg: e.depointing_deg,
                        sigma_db: e.sigma_db,
                        seed: 0,
                        draws: e.draws.unwrap_or(self.draws),
                        extension: e.extension,
                    };
                    self.finish(s, e.seed)
                })
                .collect::<Vec<_>>(),
            None => self.expand_matrix(),
        };
        for s in &out {
            s.validate()?;
        }
        let mut ids: Vec<String> = out.iter().map(Scenario::id).collect();
        ids.sort();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("scenario {} listed twice", w[0])));
        }
        Ok(out)
    }

    fn expand_matrix(&self) -> Vec<Scenario> {
        let m = &self.matrix;
        let mut out = Vec::new();
        let base = |failed: &Vec<usize>, res: f64| Scenario {
            failed: failed.clone(),
            draws: self.draws,
            extension: m.extension,
            ..Scenario::healthy(res)
        };
        for &res in &m.res_deg {
            for &steer in &m.steer_deg {
                for &dep in &m.depointing_deg {
                    for &sigma in &m.sigma_db {
                        for failed in &m.failed {
                            let s = Scenario {
                                steer_deg: steer,
                                rotation: (steer != 0.0).then_some(RotationMode::Postproc),
                                depointing_deg: dep,
                                sigma_db: sigma,
                                ..base(failed, res)
                            };
                            out.push(self.finish(s, None));
                        }
                    }
                }
            }
            if m.physical_rotation {
                for &steer in m.steer_deg.iter().filter(|s| **s != 0.0) {
                    for failed in &m.failed {
                        let s = Scenario {
                            steer_deg: steer,
                            rotation: Some(RotationMode::Physical),
                            ..base(failed, res)
                        };
                        out.push(self.finish(s, None));
                    }
                }
            }
        }
        out
    }
}
