//! Ripple-error model and Monte Carlo confidence intervals for CVRP.
//!
//! Every grid sample is scaled by (1 + g), g ~ N(0, σ_lin²), independently per
//! sample and per draw. Draw `k` uses its own ChaCha8 stream (`seed`, stream
//! `k`) and visits the grid in θ-major order, so a draw is reproducible on its
//! own and serial or parallel runs agree bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{cvrp_trace_with, cvrp_values, fov_sweep, CapArea, CvrpTrace};
use crate::pattern::EirpPattern;

/// σ_lin per dB of ripple.
pub const RIPPLE_LIN_PER_DB: f64 = 0.23;
/// Two-sided 95% t-score for 999 degrees of freedom, as used for the CIs.
pub const T_SCORE_95: f64 = 1.962;
/// Monte Carlo draws per scenario in the study.
pub const DEFAULT_DRAWS: usize = 1000;

/// Linear ripple standard deviation for a ripple specified in dB.
pub fn sigma_lin(sigma_db: f64) -> Result<f64> {
    if !(sigma_db >= 0.0 && sigma_db.is_finite()) {
        return Err(Error::validation(format!(
            "ripple sigma must be a non-negative dB value, got {sigma_db}"
        )));
    }
    Ok(RIPPLE_LIN_PER_DB * sigma_db)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RippleSpec {
    sigma_db: f64,
    sigma_lin: f64,
    draws: usize,
    seed: u64,
}

impl RippleSpec {
    pub fn new(sigma_db: f64, draws: usize, seed: u64) -> Result<Self> {
        let sigma_lin = sigma_lin(sigma_db)?;
        if draws < 2 {
            return Err(Error::validation(format!("need at least 2 draws, got {draws}")));
        }
        Ok(Self {
            sigma_db,
            sigma_lin,
            draws,
            seed,
        })
    }

    pub fn sigma_db(&self) -> f64 {
        self.sigma_db
    }

    pub fn sigma_lin(&self) -> f64 {
        self.sigma_lin
    }

    pub fn draws(&self) -> usize {
        self.draws
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn rng(&self, draw_index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(draw_index as u64);
        rng
    }
}

/// One distorted copy of `p`. Negative samples are kept.
pub fn perturb_pattern(p: &EirpPattern, spec: &RippleSpec, draw_index: usize) -> EirpPattern {
    let mut rng = spec.rng(draw_index);
    let s = spec.sigma_lin;
    let values = p.values().mapv(|v| {
        let g: f64 = StandardNormal.sample(&mut rng);
        v * (1.0 + s * g)
    });
    p.map_values(values)
}

/// Confidence interval of the CVRP at one θ_FoV, all in mW.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiPoint {
    pub theta_fov_deg: f64,
    pub mean_mw: f64,
    pub sigma_hat_mw: f64,
    pub lower_mw: f64,
    pub upper_mw: f64,
}

impl CiPoint {
    pub fn new(theta_fov_deg: f64, mean_mw: f64, sigma_hat_mw: f64) -> Self {
        let half = T_SCORE_95 * sigma_hat_mw;
        Self {
            theta_fov_deg,
            mean_mw,
            sigma_hat_mw,
            lower_mw: mean_mw - half,
            upper_mw: mean_mw + half,
        }
    }

    pub fn half_width(&self) -> f64 {
        T_SCORE_95 * self.sigma_hat_mw
    }
}

/// Per-θ_FoV CVRP confidence intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvrpCI {
    pub points: Vec<CiPoint>,
}

impl CvrpCI {
    /// Zero-width intervals around a deterministic trace.
    pub fn exact(trace: &CvrpTrace) -> Self {
        Self {
            points: trace.iter().map(|(t, v)| CiPoint::new(t, v, 0.0)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn theta_fov_deg(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.theta_fov_deg).collect()
    }

    pub fn at(&self, theta_fov_deg: f64) -> Option<&CiPoint> {
        self.points
            .iter()
            .find(|p| (p.theta_fov_deg - theta_fov_deg).abs() < 1e-9)
    }
}

/// CVRP of every draw over the standard sweep, in draw order.
pub fn monte_carlo_samples(p: &EirpPattern, spec: &RippleSpec) -> Vec<Vec<f64>> {
    monte_carlo_samples_with(p, spec, CapArea::default())
}

fn monte_carlo_samples_with(p: &EirpPattern, spec: &RippleSpec, area: CapArea) -> Vec<Vec<f64>> {
    let grid = *p.grid();
    let sweep = fov_sweep();
    let s = spec.sigma_lin;
    (0..spec.draws)
        .into_par_iter()
        .map(|k| {
            // same visiting order as perturb_pattern
            let mut rng = spec.rng(k);
            let mut zenith = 0.0;
            let mut rings = Vec::with_capacity(grid.rows());
            for (i, row) in p.values().rows().into_iter().enumerate() {
                let mut sum = 0.0;
                for (j, &v) in row.iter().enumerate() {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    let x = v * (1.0 + s * g);
                    if i == 0 && j == 0 {
                        zenith = x;
                    }
                    sum += x;
                }
                rings.push(sum);
            }
            cvrp_values(&grid, &rings, zenith, &sweep, area)
        })
        .collect()
}

pub fn monte_carlo_cvrp(p: &EirpPattern, spec: &RippleSpec) -> CvrpCI {
    monte_carlo_cvrp_with(p, spec, CapArea::default())
}

/// Mean and sample standard deviation (divisor draws − 1) of the CVRP over
/// `spec.draws` distorted patterns, with CI = mean ± 1.962·σ̂.
pub fn monte_carlo_cvrp_with(p: &EirpPattern, spec: &RippleSpec, area: CapArea) -> CvrpCI {
    if spec.sigma_lin == 0.0 {
        return CvrpCI::exact(&cvrp_trace_with(p, area));
    }
    let samples = monte_carlo_samples_with(p, spec, area);
    let n = samples.len() as f64;
    let points = fov_sweep()
        .into_iter()
        .enumerate()
        .map(|(k, t)| {
            let mean = samples.iter().map(|s| s[k]).sum::<f64>() / n;
            let var = samples.iter().map(|s| (s[k] - mean).powi(2)).sum::<f64>() / (n - 1.0);
            CiPoint::new(t, mean, var.sqrt())
        })
        .collect();
    CvrpCI { points }
}
