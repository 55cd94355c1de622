//! Reference differencing and CI-overlap distinguishability between failure
//! cases.
//!
//! Disjointness is decided on the linear-mW intervals. dB values are only
//! for reporting; bounds at or below zero mW have no dB value and are
//! reported at a floor instead.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::{RotationMode, Scenario};
use crate::metrics::CvrpTrace;
use crate::uncertainty::{CiPoint, CvrpCI};
use crate::units::{mw_to_dbm, mw_to_dbm_floored, DEFAULT_DBM_FLOOR};

/// A closed interval in mW.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Self {
        Self { lower, upper }
    }
}

impl From<&CiPoint> for Interval {
    fn from(p: &CiPoint) -> Self {
        Self::new(p.lower_mw, p.upper_mw)
    }
}

/// True when the intervals share no point. Touching endpoints overlap.
pub fn cis_disjoint(a: Interval, b: Interval) -> bool {
    a.lower.max(b.lower) > a.upper.min(b.upper)
}

/// Golden-device CVRP trace: no failures, no depointing, no ripple, at the
/// given resolution and steering. `rotation` is ignored for broadside.
pub fn reference_trace(res_deg: f64, steer_deg: f64, rotation: Option<RotationMode>) -> Result<CvrpTrace> {
    let s = Scenario {
        steer_deg,
        rotation: if steer_deg == 0.0 { None } else { rotation },
        ..Scenario::healthy(res_deg)
    };
    s.trace()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffPoint {
    pub theta_fov_deg: f64,
    pub mean_diff_db: f64,
    pub upper_diff_db: f64,
    pub lower_diff_db: f64,
    /// The CI lower bound was not positive and `lower_diff_db` uses the floor.
    pub lower_below_floor: bool,
}

/// Case quantity in dBm minus reference CVRP in dBm, per θ_FoV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferenceTrace {
    pub points: Vec<DiffPoint>,
}

pub fn difference_trace(ci: &CvrpCI, reference: &CvrpTrace) -> Result<DifferenceTrace> {
    difference_trace_with_floor(ci, reference, DEFAULT_DBM_FLOOR)
}

pub fn difference_trace_with_floor(ci: &CvrpCI, reference: &CvrpTrace, floor_dbm: f64) -> Result<DifferenceTrace> {
    if ci.len() != reference.len()
        || ci
            .points
            .iter()
            .zip(&reference.theta_fov_deg)
            .any(|(p, t)| (p.theta_fov_deg - t).abs() > 1e-9)
    {
        return Err(Error::validation("CI and reference use different theta_fov sweeps"));
    }
    let points = ci
        .points
        .iter()
        .zip(&reference.cvrp_mw)
        .map(|(p, &r)| {
            let r_db = mw_to_dbm(r).ok_or_else(|| {
                Error::validation(format!("reference CVRP {r} mW at {} deg is not positive", p.theta_fov_deg))
            })?;
            let lower_below_floor = mw_to_dbm(p.lower_mw).is_none_or(|v| v < floor_dbm);
            Ok(DiffPoint {
                theta_fov_deg: p.theta_fov_deg,
                mean_diff_db: mw_to_dbm_floored(p.mean_mw, floor_dbm) - r_db,
                upper_diff_db: mw_to_dbm_floored(p.upper_mw, floor_dbm) - r_db,
                lower_diff_db: mw_to_dbm_floored(p.lower_mw, floor_dbm) - r_db,
                lower_below_floor,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DifferenceTrace { points })
}

/// Pairwise distinguishability of labelled cases at each θ_FoV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminationMatrix {
    pub labels: Vec<String>,
    pub theta_fov_deg: Vec<f64>,
    /// `flags[a][b][k]`: cases a and b have disjoint CIs at `theta_fov_deg[k]`.
    flags: Vec<Vec<Vec<bool>>>,
}

impl DiscriminationMatrix {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn pair(&self, a: usize, b: usize) -> &[bool] {
        &self.flags[a][b]
    }

    pub fn distinguishable(&self, a: usize, b: usize, theta_fov_deg: f64) -> Option<bool> {
        let k = self
            .theta_fov_deg
            .iter()
            .position(|t| (t - theta_fov_deg).abs() < 1e-9)?;
        Some(self.flags[a][b][k])
    }

    /// All unordered pairs (a < b).
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.len();
        (0..n).flat_map(move |a| ((a + 1)..n).map(move |b| (a, b)))
    }
}

pub fn discrimination_matrix(cases: &[(String, CvrpCI)]) -> Result<DiscriminationMatrix> {
    let sweep = cases.first().map(|(_, ci)| ci.theta_fov_deg()).unwrap_or_default();
    for (label, ci) in cases {
        let t = ci.theta_fov_deg();
        if t.len() != sweep.len() || t.iter().zip(&sweep).any(|(a, b)| (a - b).abs() > 1e-9) {
            return Err(Error::validation(format!("case {label} uses a different theta_fov sweep")));
        }
    }
    let flags = cases
        .iter()
        .map(|(_, a)| {
            cases
                .iter()
                .map(|(_, b)| {
                    a.points
                        .iter()
                        .zip(&b.points)
                        .map(|(pa, pb)| cis_disjoint(pa.into(), pb.into()))
                        .collect()
                })
                .collect()
        })
        .collect();
    Ok(DiscriminationMatrix {
        labels: cases.iter().map(|(l, _)| l.clone()).collect(),
        theta_fov_deg: sweep,
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::cvrp_trace;
    use crate::pattern::EirpPattern;
    use crate::sphere::AngularGrid;
    use crate::units::dbm_to_mw;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn disjointness_examples() {
        assert!(cis_disjoint(Interval::new(1.0, 2.0), Interval::new(3.0, 4.0)));
        assert!(!cis_disjoint(Interval::new(1.0, 3.0), Interval::new(2.0, 4.0)));
        assert!(!cis_disjoint(Interval::new(1.0, 2.0), Interval::new(2.0, 3.0)));
        assert!(cis_disjoint(Interval::new(3.0, 4.0), Interval::new(1.0, 2.0)));
    }

    #[test]
    fn reference_traces_end_at_trp() {
        let fine = reference_trace(0.5, 0.0, None).unwrap();
        let coarse = reference_trace(5.0, 0.0, None).unwrap();
        assert_abs_diff_eq!(fine.at(180.0).unwrap(), 31.6228, epsilon = 1e-4);
        assert_abs_diff_eq!(fine.at(180.0).unwrap(), coarse.at(180.0).unwrap(), epsilon = 1e-12);
        let steered = reference_trace(5.0, 45.0, Some(RotationMode::Postproc)).unwrap();
        let direct = Scenario {
            steer_deg: 45.0,
            ..Scenario::healthy(5.0)
        }
        .trace()
        .unwrap();
        assert_eq!(steered, direct);
    }

    #[test]
    fn self_difference_is_zero() {
        let tr = reference_trace(5.0, 0.0, None).unwrap();
        let d = difference_trace(&CvrpCI::exact(&tr), &tr).unwrap();
        for p in &d.points {
            assert_eq!(p.mean_diff_db, 0.0);
            assert_eq!(p.upper_diff_db, 0.0);
            assert_eq!(p.lower_diff_db, 0.0);
        }
    }

    #[test]
    fn isotropic_trp_offset() {
        let g = AngularGrid::uniform(5.0).unwrap();
        let case = cvrp_trace(&EirpPattern::isotropic(g, 14.72));
        let reference = cvrp_trace(&EirpPattern::isotropic(g, 15.0));
        let d = difference_trace(&CvrpCI::exact(&case), &reference).unwrap();
        for p in &d.points {
            assert_abs_diff_eq!(p.mean_diff_db, -0.28, epsilon = 1e-9);
        }
    }

    #[test]
    fn non_positive_lower_bound_uses_floor() {
        let reference = CvrpTrace {
            theta_fov_deg: vec![0.0],
            cvrp_mw: vec![dbm_to_mw(0.0)],
        };
        let ci = CvrpCI {
            points: vec![CiPoint::new(0.0, 1.0, 1.0)],
        };
        let d = difference_trace(&ci, &reference).unwrap();
        assert!(d.points[0].lower_below_floor);
        assert_eq!(d.points[0].lower_diff_db, DEFAULT_DBM_FLOOR);
    }

    #[test]
    fn mismatched_sweeps_rejected() {
        let tr = reference_trace(5.0, 0.0, None).unwrap();
        let short = CvrpCI {
            points: vec![CiPoint::new(0.0, 1.0, 0.0)],
        };
        assert!(difference_trace(&short, &tr).is_err());
        let full = CvrpCI::exact(&tr);
        assert!(discrimination_matrix(&[("a".into(), full), ("b".into(), short)]).is_err());
    }

    #[test]
    fn distinct_zero_width_cases_are_separable() {
        let g = AngularGrid::uniform(5.0).unwrap();
        let a = CvrpCI::exact(&cvrp_trace(&EirpPattern::isotropic(g, 15.0)));
        let b = CvrpCI::exact(&cvrp_trace(&EirpPattern::isotropic(g, 14.0)));
        let m = discrimination_matrix(&[("0".into(), a.clone()), ("1".into(), b), ("0bis".into(), a)]).unwrap();
        assert!(m.pair(0, 1).iter().all(|&f| f));
        assert!(m.pair(1, 0).iter().all(|&f| f));
        // identical zero-width intervals touch, so they overlap
        assert!(m.pair(0, 2).iter().all(|&f| !f));
        assert_eq!(m.distinguishable(0, 1, 90.0), Some(true));
        assert_eq!(m.pairs().count(), 3);
        assert_eq!(m.index_of("1"), Some(1));
    }

    fn interval() -> impl Strategy<Value = Interval> {
        (-100.0f64..100.0, 0.0f64..50.0).prop_map(|(lo, w)| Interval::new(lo, lo + w))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn disjointness_symmetric(a in interval(), b in interval()) {
            prop_assert_eq!(cis_disjoint(a, b), cis_disjoint(b, a));
            prop_assert!(!cis_disjoint(a, a));
        }

        #[test]
        fn shrinking_keeps_separation(m1 in -100.0f64..100.0, m2 in -100.0f64..100.0,
                                      h1 in 0.0f64..30.0, h2 in 0.0f64..30.0, f in 0.0f64..=1.0) {
            let wide = cis_disjoint(Interval::new(m1 - h1, m1 + h1), Interval::new(m2 - h2, m2 + h2));
            let narrow = cis_disjoint(Interval::new(m1 - f * h1, m1 + f * h1), Interval::new(m2 - f * h2, m2 + f * h2));
            prop_assert!(!wide || narrow);
        }
    }
}
