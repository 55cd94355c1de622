//! Regular (θ, φ) grids, the masked quadrature behind CVRP, bilinear
//! resampling and post-processing rotation of sampled patterns.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Direction, Rotation, Vec3};
use crate::pattern::EirpPattern;

/// Snap tolerance, in grid steps, for treating a coordinate as on a node.
const NODE_SNAP: f64 = 1e-9;

/// A regular grid with θ_i = i·Δθ (i = 0..=N) and φ_j = j·Δφ (j = 0..M).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularGrid {
    dtheta_deg: f64,
    dphi_deg: f64,
    n_theta: usize,
    n_phi: usize,
}

fn integer_division(total: f64, step: f64, what: &str) -> Result<usize> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::validation(format!("{what} step must be positive, got {step}")));
    }
    let n = total / step;
    let rounded = n.round();
    if rounded < 1.0 || (n - rounded).abs() > 1e-9 * rounded.max(1.0) {
        return Err(Error::validation(format!(
            "{what} step {step} deg does not divide {total} deg"
        )));
    }
    Ok(rounded as usize)
}

impl AngularGrid {
    pub fn new(dtheta_deg: f64, dphi_deg: f64) -> Result<Self> {
        let n_theta = integer_division(180.0, dtheta_deg, "theta")?;
        let n_phi = integer_division(360.0, dphi_deg, "phi")?;
        if n_theta < 2 {
            return Err(Error::validation("theta grid needs at least one interior ring"));
        }
        Ok(Self {
            dtheta_deg,
            dphi_deg,
            n_theta,
            n_phi,
        })
    }

    /// Same step in θ and φ.
    pub fn uniform(step_deg: f64) -> Result<Self> {
        Self::new(step_deg, step_deg)
    }

    pub fn dtheta_deg(&self) -> f64 {
        self.dtheta_deg
    }

    pub fn dphi_deg(&self) -> f64 {
        self.dphi_deg
    }

    /// N: index of the θ = 180° ring.
    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    /// M: samples per ring.
    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    /// Rows stored (N + 1, poles included).
    pub fn rows(&self) -> usize {
        self.n_theta + 1
    }

    pub fn len(&self) -> usize {
        self.rows() * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn theta_deg(&self, i: usize) -> f64 {
        i as f64 * self.dtheta_deg
    }

    pub fn phi_deg(&self, j: usize) -> f64 {
        j as f64 * self.dphi_deg
    }

    pub fn sin_theta(&self, i: usize) -> f64 {
        if i == 0 || i == self.n_theta {
            0.0
        } else {
            self.theta_deg(i).to_radians().sin()
        }
    }

    /// ΔφΔθ in steradians (radians squared).
    pub fn cell_solid_angle(&self) -> f64 {
        self.dtheta_deg.to_radians() * self.dphi_deg.to_radians()
    }

    /// Unit vector of node (i, j). Pole rows map exactly to ±z.
    pub fn node_vector(&self, i: usize, j: usize) -> Vec3 {
        if i == 0 {
            return Vec3::z();
        }
        if i == self.n_theta {
            return -Vec3::z();
        }
        let (st, ct) = self.theta_deg(i).to_radians().sin_cos();
        let (sp, cp) = self.phi_deg(j).to_radians().sin_cos();
        Vec3::new(st * cp, st * sp, ct)
    }

    /// Highest interior ring index whose θ lies inside a cap of `theta_fov_deg`.
    /// Rings exactly on the boundary are inside. Returns 0 when no interior
    /// ring qualifies.
    pub fn last_ring_in_cap(&self, theta_fov_deg: f64) -> usize {
        let k = (theta_fov_deg / self.dtheta_deg + NODE_SNAP).floor();
        if k < 1.0 {
            0
        } else {
            (k as usize).min(self.n_theta - 1)
        }
    }

    /// Quadrature weight sum of a cap: ΔφΔθ·M·Σ sin θ_i over the cap's
    /// interior rings. This is the discrete counterpart of 2π(1 − cos θ_FoV)
    /// and equals the full-sphere weight at 180°.
    pub fn cap_weight(&self, theta_fov_deg: f64) -> f64 {
        let k = self.last_ring_in_cap(theta_fov_deg);
        let s: f64 = (1..=k).map(|i| self.sin_theta(i)).sum();
        self.cell_solid_angle() * self.n_phi as f64 * s
    }

    /// Discrete analogue of 4π.
    pub fn full_sphere_weight(&self) -> f64 {
        self.cap_weight(180.0)
    }
}

/// A polar cap centred on +z. φ_FoV is always the full 360°.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FovMask {
    theta_fov_deg: f64,
}

impl FovMask {
    pub fn new(theta_fov_deg: f64) -> Result<Self> {
        if !(0.0..=180.0).contains(&theta_fov_deg) {
            return Err(Error::validation(format!(
                "theta_fov {theta_fov_deg} deg outside [0, 180]"
            )));
        }
        Ok(Self { theta_fov_deg })
    }

    pub fn full_sphere() -> Self {
        Self { theta_fov_deg: 180.0 }
    }

    pub fn theta_fov_deg(&self) -> f64 {
        self.theta_fov_deg
    }

    pub fn phi_fov_deg(&self) -> f64 {
        360.0
    }

    /// Analytic cap area 2π(1 − cos θ_FoV) in steradians.
    pub fn area(&self) -> f64 {
        if self.theta_fov_deg >= 180.0 {
            4.0 * PI
        } else {
            2.0 * PI * (1.0 - self.theta_fov_deg.to_radians().cos())
        }
    }
}

/// Σ_j value(i, j) for every stored ring.
pub(crate) fn ring_sums(p: &EirpPattern) -> Vec<f64> {
    p.values().rows().into_iter().map(|r| r.sum()).collect()
}

/// Masked quadrature from precomputed ring sums.
pub(crate) fn quadrature_from_rings(grid: &AngularGrid, rings: &[f64], theta_fov_deg: f64) -> f64 {
    let k = grid.last_ring_in_cap(theta_fov_deg);
    let s: f64 = (1..=k).map(|i| rings[i] * grid.sin_theta(i)).sum();
    grid.cell_solid_angle() * s
}

/// ΔφΔθ Σ_{i=1}^{N−1} Σ_j EIRP_masked(θ_i, φ_j) sin θ_i, in mW·sr.
/// Values outside [0, θ_FoV] count as zero; the poles never contribute.
pub fn quadrature_sum(p: &EirpPattern, mask: FovMask) -> f64 {
    quadrature_from_rings(p.grid(), &ring_sums(p), mask.theta_fov_deg())
}

fn snapped(t: f64) -> f64 {
    let r = t.round();
    if (t - r).abs() < NODE_SNAP {
        r
    } else {
        t
    }
}

/// Bilinear interpolation of linear-scale values in (θ, φ).
///
/// φ wraps periodically. Pole rows are single-valued: the j = 0 sample
/// stands for the whole row.
pub fn bilinear_sample(p: &EirpPattern, d: Direction) -> f64 {
    let g = p.grid();
    let n = g.n_theta();
    let m = g.n_phi();
    let v = p.values();

    let t = snapped(d.theta_deg() / g.dtheta_deg());
    let i0 = (t.floor() as usize).min(n - 1);
    let ft = t - i0 as f64;

    let s = snapped(d.phi_deg() / g.dphi_deg());
    let j0f = s.floor();
    let fs = s - j0f;
    let j0 = (j0f as usize) % m;
    let j1 = (j0 + 1) % m;

    let ring = |i: usize| -> f64 {
        if i == 0 || i == n {
            v[[i, 0]]
        } else if fs == 0.0 {
            v[[i, j0]]
        } else {
            (1.0 - fs) * v[[i, j0]] + fs * v[[i, j1]]
        }
    };

    if ft == 0.0 {
        ring(i0)
    } else {
        (1.0 - ft) * ring(i0) + ft * ring(i0 + 1)
    }
}

/// Resamples `p` so that out(u) = p(R⁻¹u) on the same grid. TRP metadata is
/// carried over unchanged.
pub fn rotate_pattern_postproc(p: &EirpPattern, rot: Rotation) -> EirpPattern {
    let g = *p.grid();
    let inv = rot.inverse().matrix();
    let m = g.n_phi();
    let mut out = ndarray::Array2::<f64>::zeros((g.rows(), m));
    out.axis_iter_mut(ndarray::Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(i, mut row)| {
            for j in 0..m {
                let src = inv * g.node_vector(i, j);
                row[j] = bilinear_sample(p, Direction::from_vector(&src));
            }
        });
    EirpPattern::from_parts(g, out, p.trp_dbm())
}
