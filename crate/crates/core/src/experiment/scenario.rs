use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{build_ura, Direction, Rotation};
use crate::metrics::{cvrp_trace, CvrpTrace};
use crate::pattern::{
    steering_weights, synthesize_eirp, trp_after_failures, EirpPattern, ElementPattern,
    ExcitationWeights,
};
use crate::sphere::{rotate_pattern_postproc, AngularGrid};
use crate::uncertainty::{monte_carlo_cvrp, CvrpCI, RippleSpec, DEFAULT_DRAWS};

/// TRP of the healthy array, dBm.
pub const TRP_BASE_DBM: f64 = 15.0;
/// Azimuth (from +x) of the steered beam. Together with a clockwise
/// compensation about y this brings the beam onto +z.
pub const STEER_PHI_DEG: f64 = 180.0;

pub const STUDY_FAILURE_SETS: [&[usize]; 4] = [&[], &[15], &[7, 9], &[7, 8, 9, 10]];
pub const STUDY_RESOLUTIONS_DEG: [f64; 3] = [0.5, 1.5, 5.0];
pub const STUDY_STEERING_DEG: [f64; 2] = [0.0, 45.0];
pub const STUDY_DEPOINTING_DEG: [f64; 3] = [0.0, 1.0, 3.0];
pub const STUDY_SIGMA_DB: [f64; 3] = [0.0, 1.0, 2.0];

/// How a steered pattern is brought back onto +z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RotationMode {
    /// Rotate the array itself before synthesis (error-free alignment).
    Physical,
    /// Resample the synthesized pattern with bilinear interpolation.
    #[serde(alias = "postprocessing")]
    Postproc,
}

fn default_draws() -> usize {
    DEFAULT_DRAWS
}

/// One cell of the experiment matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// 1-based indices of switched-off elements.
    #[serde(default)]
    pub failed: Vec<usize>,
    pub res_deg: f64,
    /// 0 for broadside; otherwise the steering angle from +z.
    #[serde(default)]
    pub steer_deg: f64,
    /// Required to be absent for broadside; defaults to post-processing when steered.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<RotationMode>,
    #[serde(default)]
    pub depointing_deg: f64,
    #[serde(default)]
    pub sigma_db: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_draws")]
    pub draws: usize,
    /// Allows values outside the study's enumerated sets.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub extension: bool,
}

fn in_set(v: f64, set: &[f64]) -> bool {
    set.iter().any(|s| (s - v).abs() < 1e-12)
}

fn num(v: f64) -> String {
    format!("{v}")
}

impl Scenario {
    /// Broadside, no failures, no errors.
    pub fn healthy(res_deg: f64) -> Self {
        Self {
            failed: Vec::new(),
            res_deg,
            steer_deg: 0.0,
            rotation: None,
            depointing_deg: 0.0,
            sigma_db: 0.0,
            seed: 0,
            draws: DEFAULT_DRAWS,
            extension: false,
        }
    }

    pub fn is_steered(&self) -> bool {
        self.steer_deg != 0.0
    }

    /// Effective rotation mode: `None` for broadside.
    pub fn rotation_mode(&self) -> Option<RotationMode> {
        if self.is_steered() {
            Some(self.rotation.unwrap_or(RotationMode::Postproc))
        } else {
            None
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let (false, Some(mode)) = (self.is_steered(), self.rotation) {
            return Err(Error::validation(format!(
                "rotation mode {mode:?} given for a broadside scenario"
            )));
        }
        let n_el = crate::geometry::URA_ROWS * crate::geometry::URA_COLS;
        let mut seen = std::collections::BTreeSet::new();
        for &i in &self.failed {
            if i == 0 || i > n_el {
                return Err(Error::validation(format!("failed element {i} outside 1..={n_el}")));
            }
            if !seen.insert(i) {
                return Err(Error::validation(format!("failed element {i} listed twice")));
            }
        }
        if !(0.0..180.0).contains(&self.steer_deg) {
            return Err(Error::validation(format!("steering angle {} outside [0, 180)", self.steer_deg)));
        }
        if !self.depointing_deg.is_finite() {
            return Err(Error::validation("depointing must be finite"));
        }
        AngularGrid::uniform(self.res_deg)?;
        RippleSpec::new(self.sigma_db, self.draws, self.seed)?;

        if !self.extension {
            let mut sorted = self.failed.clone();
            sorted.sort_unstable();
            let checks = [
                (STUDY_FAILURE_SETS.contains(&sorted.as_slice()), "failure set"),
                (in_set(self.res_deg, &STUDY_RESOLUTIONS_DEG), "resolution"),
                (in_set(self.steer_deg, &STUDY_STEERING_DEG), "steering angle"),
                (in_set(self.depointing_deg, &STUDY_DEPOINTING_DEG), "depointing"),
                (in_set(self.sigma_db, &STUDY_SIGMA_DB), "ripple sigma"),
            ];
            if let Some((_, what)) = checks.iter().find(|(ok, _)| !ok) {
                return Err(Error::validation(format!(
                    "{what} of scenario {} is outside the study set (mark it as an extension run)",
                    self.id()
                )));
            }
        }
        Ok(())
    }

    /// Stable identifier, also used as the result file stem.
    pub fn id(&self) -> String {
        let mut failed = self.failed.clone();
        failed.sort_unstable();
        let fe = if failed.is_empty() {
            "0".to_string()
        } else {
            failed.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("-")
        };
        let steer = match self.rotation_mode() {
            None => "broadside".to_string(),
            Some(RotationMode::Physical) => format!("steer{}phys", num(self.steer_deg)),
            Some(RotationMode::Postproc) => format!("steer{}post", num(self.steer_deg)),
        };
        format!(
            "fe{fe}_res{}_{steer}_dep{}_sig{}",
            num(self.res_deg),
            num(self.depointing_deg),
            num(self.sigma_db)
        )
    }

    /// Golden-device counterpart: same resolution and steering, no failures,
    /// no depointing, no ripple.
    pub fn reference(&self) -> Self {
        Self {
            failed: Vec::new(),
            depointing_deg: 0.0,
            sigma_db: 0.0,
            rotation: self.rotation_mode(),
            ..self.clone()
        }
    }

    /// Seed derived from a base seed and the scenario id.
    pub fn derived_seed(&self, base: u64) -> u64 {
        let mut h = Sha256::new();
        h.update(base.to_le_bytes());
        h.update(self.id().as_bytes());
        let d = h.finalize();
        u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
    }

    pub fn grid(&self) -> Result<AngularGrid> {
        AngularGrid::uniform(self.res_deg)
    }

    pub fn trp_dbm(&self) -> Result<f64> {
        trp_after_failures(
            TRP_BASE_DBM,
            crate::geometry::URA_ROWS * crate::geometry::URA_COLS,
            self.failed.len(),
        )
    }

    /// The error-free pattern as measured: depointing and steering applied,
    /// main lobe brought onto +z by the scenario's rotation mode.
    pub fn pattern(&self) -> Result<EirpPattern> {
        let p = self.synthesized_pattern()?;
        Ok(match self.rotation_mode() {
            Some(RotationMode::Postproc) => rotate_pattern_postproc(&p, Rotation::y_clockwise(self.steer_deg)),
            _ => p,
        })
    }

    /// The pattern straight out of synthesis, before any post-processing
    /// rotation.
    pub fn synthesized_pattern(&self) -> Result<EirpPattern> {
        self.validate()?;
        let base = build_ura();
        let weights = if self.is_steered() {
            steering_weights(&base, Direction::new(self.steer_deg, STEER_PHI_DEG)?)
        } else {
            ExcitationWeights::uniform(base.len())
        }
        .with_failures(&self.failed)?;
        let trp = self.trp_dbm()?;

        // weights stay nominal: the array is rotated after being steered
        let mut geom = base.rotated(Rotation::y_clockwise(self.depointing_deg));
        if self.rotation_mode() == Some(RotationMode::Physical) {
            geom = geom.rotated(Rotation::y_clockwise(self.steer_deg));
        }
        synthesize_eirp(&geom, &weights, ElementPattern::default(), &self.grid()?, trp)
    }

    pub fn ripple(&self) -> Result<RippleSpec> {
        RippleSpec::new(self.sigma_db, self.draws, self.seed)
    }

    /// CVRP confidence intervals over the standard sweep.
    pub fn confidence_intervals(&self) -> Result<CvrpCI> {
        Ok(monte_carlo_cvrp(&self.pattern()?, &self.ripple()?))
    }

    /// Deterministic CVRP trace (no ripple).
    pub fn trace(&self) -> Result<CvrpTrace> {
        Ok(cvrp_trace(&self.pattern()?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::mw_to_dbm;
    use approx::assert_abs_diff_eq;

    fn steered(mode: RotationMode) -> Scenario {
        Scenario {
            steer_deg: 45.0,
            rotation: Some(mode),
            ..Scenario::healthy(5.0)
        }
    }

    #[test]
    fn ids_are_readable_and_distinct() {
        let s = Scenario {
            failed: vec![9, 7],
            sigma_db: 1.0,
            depointing_deg: 3.0,
            ..Scenario::healthy(1.5)
        };
        assert_eq!(s.id(), "fe7-9_res1.5_broadside_dep3_sig1");
        assert_eq!(steered(RotationMode::Physical).id(), "fe0_res5_steer45phys_dep0_sig0");
        assert_eq!(steered(RotationMode::Postproc).id(), "fe0_res5_steer45post_dep0_sig0");
        let implicit = Scenario {
            steer_deg: 45.0,
            ..Scenario::healthy(5.0)
        };
        assert_eq!(implicit.id(), steered(RotationMode::Postproc).id());
    }

    #[test]
    fn physical_broadside_is_rejected() {
        let s = Scenario {
            rotation: Some(RotationMode::Physical),
            ..Scenario::healthy(5.0)
        };
        assert!(matches!(s.validate(), Err(Error::Validation(_))));
        assert!(s.pattern().is_err());
    }

    #[test]
    fn off_study_values_need_extension_flag() {
        let mut s = Scenario {
            res_deg: 2.0,
            ..Scenario::healthy(2.0)
        };
        assert!(s.validate().is_err());
        s.extension = true;
        s.validate().unwrap();
        let s = Scenario {
            failed: vec![1],
            ..Scenario::healthy(5.0)
        };
        assert!(s.validate().is_err());
        let s = Scenario {
            failed: vec![7, 7],
            extension: true,
            ..Scenario::healthy(5.0)
        };
        assert!(s.validate().is_err());
        let s = Scenario {
            failed: vec![17],
            extension: true,
            ..Scenario::healthy(5.0)
        };
        assert!(s.validate().is_err());
    }

    #[test]
    fn full_sphere_reports_failure_trp() {
        for (set, want) in [(vec![], 15.0), (vec![7, 9], 14.42)] {
            let s = Scenario {
                failed: set,
                ..Scenario::healthy(5.0)
            };
            let tr = s.trace().unwrap();
            assert_abs_diff_eq!(mw_to_dbm(tr.at(180.0).unwrap()).unwrap(), want, epsilon = 0.005);
        }
    }

    #[test]
    fn physical_rotation_puts_beam_on_zenith() {
        let p = steered(RotationMode::Physical).pattern().unwrap();
        let (t, _) = p.argmax();
        assert!(t <= 5.0, "peak at {t}");
    }

    #[test]
    fn reference_drops_failures_and_errors() {
        let s = Scenario {
            failed: vec![15],
            depointing_deg: 3.0,
            sigma_db: 2.0,
            steer_deg: 45.0,
            ..Scenario::healthy(1.5)
        };
        let r = s.reference();
        assert!(r.failed.is_empty());
        assert_eq!(r.depointing_deg, 0.0);
        assert_eq!(r.sigma_db, 0.0);
        assert_eq!(r.rotation_mode(), Some(RotationMode::Postproc));
        assert_eq!(r.res_deg, 1.5);
    }

    #[test]
    fn derived_seeds_differ_per_scenario() {
        let a = Scenario::healthy(5.0);
        let b = Scenario {
            failed: vec![15],
            ..Scenario::healthy(5.0)
        };
        assert_ne!(a.derived_seed(1), b.derived_seed(1));
        assert_ne!(a.derived_seed(1), a.derived_seed(2));
        assert_eq!(a.derived_seed(1), a.derived_seed(1));
    }
}
