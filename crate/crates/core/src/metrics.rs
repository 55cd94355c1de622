//! CVRP, PRP and TRP figures of merit.
//!
//! CVRP divides the masked quadrature by the cap area; PRP divides by the
//! whole sphere. By default the cap area is the quadrature weight of the cap
//! itself ([`CapArea::Quadrature`]), so a constant pattern has a constant
//! CVRP on any grid and CVRP(180°) is exactly the synthesized TRP.

use serde::{Deserialize, Serialize};

use crate::pattern::EirpPattern;
use crate::sphere::{quadrature_from_rings, quadrature_sum, ring_sums, AngularGrid, FovMask};

/// Polar FoV step of the standard sweep, in degrees.
pub const SWEEP_STEP_DEG: f64 = 10.0;
/// Number of FoV values in the standard sweep (0°, 10°, …, 180°).
pub const SWEEP_LEN: usize = 19;

/// The standard sweep of θ_FoV values.
pub fn fov_sweep() -> Vec<f64> {
    (0..SWEEP_LEN).map(|k| k as f64 * SWEEP_STEP_DEG).collect()
}

/// How the cap area A in the CVRP denominator is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CapArea {
    /// Same quadrature as the numerator applied to a unit pattern.
    #[default]
    Quadrature,
    /// 2π(1 − cos θ_FoV); 4π at 180°.
    Analytic,
}

impl CapArea {
    pub fn area(self, grid: &AngularGrid, mask: FovMask) -> f64 {
        match self {
            CapArea::Quadrature => grid.cap_weight(mask.theta_fov_deg()),
            CapArea::Analytic => mask.area(),
        }
    }

    fn sphere(self, grid: &AngularGrid) -> f64 {
        self.area(grid, FovMask::full_sphere())
    }
}

/// CVRP in mW for one cap. θ_FoV = 0 reads the +z pole node.
pub fn cvrp(p: &EirpPattern, mask: FovMask) -> f64 {
    cvrp_with(p, mask, CapArea::default())
}

pub fn cvrp_with(p: &EirpPattern, mask: FovMask, area: CapArea) -> f64 {
    let g = p.grid();
    if g.last_ring_in_cap(mask.theta_fov_deg()) == 0 {
        return p.zenith();
    }
    quadrature_sum(p, mask) / area.area(g, mask)
}

/// PRP in mW: the masked quadrature normalized by the full sphere.
pub fn prp(p: &EirpPattern, mask: FovMask) -> f64 {
    prp_with(p, mask, CapArea::default())
}

pub fn prp_with(p: &EirpPattern, mask: FovMask, area: CapArea) -> f64 {
    quadrature_sum(p, mask) / area.sphere(p.grid())
}

/// Discrete TRP in mW (CVRP of the full sphere).
pub fn trp_mw(p: &EirpPattern) -> f64 {
    cvrp(p, FovMask::full_sphere())
}

/// CVRP over the standard θ_FoV sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvrpTrace {
    pub theta_fov_deg: Vec<f64>,
    pub cvrp_mw: Vec<f64>,
}

impl CvrpTrace {
    pub fn len(&self) -> usize {
        self.cvrp_mw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cvrp_mw.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.theta_fov_deg.iter().copied().zip(self.cvrp_mw.iter().copied())
    }

    /// Value at a given θ_FoV, if it is part of the sweep.
    pub fn at(&self, theta_fov_deg: f64) -> Option<f64> {
        self.iter()
            .find(|(t, _)| (t - theta_fov_deg).abs() < 1e-9)
            .map(|(_, v)| v)
    }
}

/// CVRP for every θ_FoV in `sweep`, from one pass over the pattern.
pub(crate) fn cvrp_values(
    grid: &AngularGrid,
    rings: &[f64],
    zenith: f64,
    sweep: &[f64],
    area: CapArea,
) -> Vec<f64> {
    sweep
        .iter()
        .map(|&t| {
            if grid.last_ring_in_cap(t) == 0 {
                zenith
            } else {
                let mask = FovMask::new(t).expect("sweep values lie in [0, 180]");
                quadrature_from_rings(grid, rings, t) / area.area(grid, mask)
            }
        })
        .collect()
}

pub fn cvrp_trace(p: &EirpPattern) -> CvrpTrace {
    cvrp_trace_with(p, CapArea::default())
}

pub fn cvrp_trace_with(p: &EirpPattern, area: CapArea) -> CvrpTrace {
    let sweep = fov_sweep();
    let cvrp_mw = cvrp_values(p.grid(), &ring_sums(p), p.zenith(), &sweep, area);
    CvrpTrace {
        theta_fov_deg: sweep,
        cvrp_mw,
    }
}
