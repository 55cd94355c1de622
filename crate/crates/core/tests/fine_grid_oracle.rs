//! Broadside and steered patterns checked against a brute-force evaluation of
//! the array on a 0.1° grid with its own trapezoidal integration.

use std::f64::consts::{PI, TAU};

use cvrp_core::experiment::Scenario;
use cvrp_core::metrics::cvrp_trace;
use cvrp_core::units::{dbm_to_mw, mw_to_dbm};
use num_complex::Complex64;
use rayon::prelude::*;

const STEP_DEG: f64 = 0.1;

/// 2×8 lattice, 0.5λ pitch, long axis along x, cosine elements facing +z.
fn intensity(theta: f64, phi: f64, steer: Option<(f64, f64)>) -> f64 {
    let u = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
    if u[2] <= 0.0 {
        return 0.0;
    }
    let us = steer.map(|(t, p)| [t.sin() * p.cos(), t.sin() * p.sin(), t.cos()]);
    let mut sum = Complex64::new(0.0, 0.0);
    for col in 0..8 {
        for row in 0..2 {
            let x = (col as f64 - 3.5) * 0.5;
            let y = (row as f64 - 0.5) * 0.5;
            let mut phase = x * u[0] + y * u[1];
            if let Some(s) = us {
                phase -= x * s[0] + y * s[1];
            }
            sum += Complex64::from_polar(1.0, TAU * phase);
        }
    }
    sum.norm_sqr() * u[2] * u[2]
}

/// Continuous-limit CVRP trace in dBm: trapezoidal integration on a 0.1°
/// grid, analytic cap areas.
fn continuous_trace(trp_dbm: f64) -> Vec<f64> {
    let n_theta = (180.0 / STEP_DEG).round() as usize;
    let n_phi = (360.0 / STEP_DEG).round() as usize;
    let dt = STEP_DEG.to_radians();
    let rings: Vec<f64> = (0..=n_theta)
        .into_par_iter()
        .map(|i| {
            let theta = i as f64 * dt;
            let s: f64 = (0..n_phi).map(|j| intensity(theta, j as f64 * dt, None)).sum();
            s * dt * theta.sin()
        })
        .collect();
    let cumulative = |last: usize| -> f64 { (1..=last).map(|i| 0.5 * (rings[i - 1] + rings[i]) * dt).sum() };
    let scale = dbm_to_mw(trp_dbm) * 4.0 * PI / cumulative(n_theta);
    let mut out = vec![mw_to_dbm(intensity(0.0, 0.0, None) * scale).unwrap()];
    for k in 1..=18 {
        let theta_fov = k as f64 * 10.0;
        let last = (theta_fov / STEP_DEG).round() as usize;
        let area = TAU * (1.0 - theta_fov.to_radians().cos());
        out.push(mw_to_dbm(cumulative(last) * scale / area).unwrap());
    }
    out
}

/// The ring-sum rule on a `step` grid (interior rings up to and including
/// the cap edge, sin θ weights), computed from scratch.
fn ring_rule_trace(step: f64, trp_dbm: f64) -> Vec<f64> {
    let n_theta = (180.0 / step).round() as usize;
    let n_phi = (360.0 / step).round() as usize;
    let d = step.to_radians();
    let ring = |i: usize| -> (f64, f64) {
        let theta = i as f64 * d;
        let s: f64 = (0..n_phi).map(|j| intensity(theta, j as f64 * d, None)).sum();
        (s * theta.sin(), n_phi as f64 * theta.sin())
    };
    let rings: Vec<(f64, f64)> = (1..n_theta).map(ring).collect();
    let sums = |last: usize| rings[..last].iter().fold((0.0, 0.0), |a, r| (a.0 + r.0, a.1 + r.1));
    let (all, all_w) = sums(n_theta - 1);
    let scale = dbm_to_mw(trp_dbm) * all_w / all;
    let mut out = vec![mw_to_dbm(intensity(0.0, 0.0, None) * scale).unwrap()];
    for k in 1..=18 {
        let last = ((k as f64 * 10.0) / step + 1e-9).floor() as usize;
        let (num, w) = sums(last.min(n_theta - 1));
        out.push(mw_to_dbm(num * scale / w).unwrap());
    }
    out
}

#[test]
fn broadside_trace_matches_independent_ring_rule() {
    for res in [0.5, 1.5, 5.0] {
        let want = ring_rule_trace(res, 15.0);
        let tr = cvrp_trace(&Scenario::healthy(res).pattern().unwrap());
        for ((t, v), w) in tr.iter().zip(&want) {
            let got = mw_to_dbm(v).unwrap();
            assert!((got - w).abs() < 1e-9, "res {res}, theta_fov {t}: {got} vs {w}");
        }
    }
}

#[test]
fn finer_grids_converge_to_the_continuous_trace() {
    let limit = continuous_trace(15.0);
    let error = |res: f64| -> Vec<f64> {
        let tr = cvrp_trace(&Scenario::healthy(res).pattern().unwrap());
        tr.cvrp_mw.iter().zip(&limit).map(|(v, w)| (mw_to_dbm(*v).unwrap() - w).abs()).collect()
    };
    let (fine, coarse) = (error(0.5), error(5.0));
    for k in 1..19 {
        assert!(fine[k] < 0.1, "theta_fov {}: 0.5 deg grid off by {} dB", k * 10, fine[k]);
        assert!(fine[k] <= coarse[k] + 1e-12, "theta_fov {}: {} vs {}", k * 10, fine[k], coarse[k]);
    }
    // the pole node is exact up to normalization
    assert!(fine[0] < 0.01);
}

#[test]
fn steered_peak_matches_fine_cut() {
    let steer = (45f64.to_radians(), PI);
    let best = (0..=9000)
        .map(|k| k as f64 * 0.01)
        .max_by(|a, b| {
            intensity(a.to_radians(), PI, Some(steer)).total_cmp(&intensity(b.to_radians(), PI, Some(steer)))
        })
        .unwrap();
    let s = Scenario {
        steer_deg: 45.0,
        ..Scenario::healthy(0.5)
    };
    let (theta, phi) = s.synthesized_pattern().unwrap().argmax();
    assert!((theta - best).abs() <= 0.5, "peak at {theta}, fine cut {best}");
    assert_eq!(phi, 180.0);
}
