//! Total-EIRP pattern synthesis: element pattern × array factor with
//! steering and on-off failures, normalized to a prescribed TRP.

use std::collections::BTreeSet;
use std::f64::consts::TAU;

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{ArrayGeometry, Direction, Vec3};
use crate::sphere::{quadrature_sum, AngularGrid, FovMask};
use crate::units::dbm_to_mw;

/// Radiation pattern of a single element, as a real field amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ElementPattern {
    /// cos^a(α)·cos^b(β), with α the azimuth-like and β the elevation-like
    /// angle in the element frame. Zero at and behind the element plane.
    Cosine { a: f64, b: f64 },
    Isotropic,
}

impl Default for ElementPattern {
    /// The study's cosine element with power [1, 1].
    fn default() -> Self {
        ElementPattern::Cosine { a: 1.0, b: 1.0 }
    }
}

impl ElementPattern {
    /// Field amplitude toward unit vector `u` for an element facing `normal`.
    ///
    /// The element frame uses the component of +y orthogonal to the normal as
    /// its elevation axis (falling back to +x when the normal lies along y).
    /// For exponents [1, 1] the product reduces to max(0, u·n).
    pub fn field(&self, u: &Vec3, normal: &Vec3) -> f64 {
        match *self {
            ElementPattern::Isotropic => 1.0,
            ElementPattern::Cosine { a, b } => {
                let along = u.dot(normal);
                if along <= 0.0 {
                    return 0.0;
                }
                let mut elev_axis = Vec3::y() - normal * normal.y;
                if elev_axis.norm() < 1e-9 {
                    elev_axis = Vec3::x() - normal * normal.x;
                }
                let elev_axis = elev_axis.normalize();
                let az_axis = elev_axis.cross(normal);
                let across = u.dot(&az_axis);
                let sin_el = u.dot(&elev_axis).clamp(-1.0, 1.0);
                let cos_el = (1.0 - sin_el * sin_el).max(0.0).sqrt();
                let horiz = along.hypot(across);
                let cos_az = if horiz > 0.0 { along / horiz } else { 0.0 };
                cos_az.powf(a) * cos_el.powf(b)
            }
        }
    }
}

/// Complex excitation per element plus the set of elements switched off.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcitationWeights {
    weights: Vec<Complex64>,
    failed: BTreeSet<usize>,
}

impl ExcitationWeights {
    /// Equal-phase, unit-magnitude weights.
    pub fn uniform(n: usize) -> Self {
        Self {
            weights: vec![Complex64::new(1.0, 0.0); n],
            failed: BTreeSet::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[Complex64] {
        &self.weights
    }

    /// 1-based weight.
    pub fn weight(&self, index: usize) -> Option<Complex64> {
        index.checked_sub(1).and_then(|i| self.weights.get(i)).copied()
    }

    pub fn failed(&self) -> &BTreeSet<usize> {
        &self.failed
    }

    /// Zeroes the listed 1-based elements. Other weights are untouched.
    pub fn with_failures(mut self, failed: &[usize]) -> Result<Self> {
        for &idx in failed {
            if idx == 0 || idx > self.weights.len() {
                return Err(Error::validation(format!(
                    "failed element index {idx} outside 1..={}",
                    self.weights.len()
                )));
            }
        }
        for &idx in failed {
            self.weights[idx - 1] = Complex64::new(0.0, 0.0);
            self.failed.insert(idx);
        }
        Ok(self)
    }
}

pub fn apply_failures(w: ExcitationWeights, failed: &[usize]) -> Result<ExcitationWeights> {
    w.with_failures(failed)
}

/// Phase-only steering: w_n = exp(−j·2π·r_n·u_steer), positions in wavelengths.
pub fn steering_weights(geom: &ArrayGeometry, steer: Direction) -> ExcitationWeights {
    let u = steer.to_vector();
    ExcitationWeights {
        weights: geom
            .positions()
            .iter()
            .map(|r| Complex64::from_polar(1.0, -TAU * r.dot(&u)))
            .collect(),
        failed: BTreeSet::new(),
    }
}

/// Predicted TRP after `n_fe` of `n_el` elements switch off, assuming output
/// power scales with the number of working elements.
pub fn trp_after_failures(trp_base_dbm: f64, n_el: usize, n_fe: usize) -> Result<f64> {
    if n_el == 0 || n_fe >= n_el {
        return Err(Error::Domain(format!(
            "cannot lose {n_fe} of {n_el} elements and keep a finite TRP"
        )));
    }
    Ok(trp_base_dbm + 10.0 * ((n_el - n_fe) as f64 / n_el as f64).log10())
}

/// Sampled total EIRP (linear mW) on an [`AngularGrid`], rows indexed by θ.
#[derive(Debug, Clone, PartialEq)]
pub struct EirpPattern {
    grid: AngularGrid,
    values: Array2<f64>,
    trp_dbm: f64,
}

impl EirpPattern {
    /// Wraps raw samples. `values` must have shape (N + 1, M).
    pub fn new(grid: AngularGrid, values: Array2<f64>, trp_dbm: f64) -> Result<Self> {
        if values.dim() != (grid.rows(), grid.n_phi()) {
            return Err(Error::validation(format!(
                "pattern shape {:?} does not match grid {}x{}",
                values.dim(),
                grid.rows(),
                grid.n_phi()
            )));
        }
        Ok(Self::from_parts(grid, values, trp_dbm))
    }

    pub(crate) fn from_parts(grid: AngularGrid, values: Array2<f64>, trp_dbm: f64) -> Self {
        debug_assert_eq!(values.dim(), (grid.rows(), grid.n_phi()));
        Self {
            grid,
            values,
            trp_dbm,
        }
    }

    /// Constant pattern whose level equals the given TRP (0 dBi everywhere).
    pub fn isotropic(grid: AngularGrid, trp_dbm: f64) -> Self {
        let v = dbm_to_mw(trp_dbm);
        Self::from_parts(grid, Array2::from_elem((grid.rows(), grid.n_phi()), v), trp_dbm)
    }

    pub fn grid(&self) -> &AngularGrid {
        &self.grid
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn trp_dbm(&self) -> f64 {
        self.trp_dbm
    }

    /// EIRP at the +z pole node.
    pub fn zenith(&self) -> f64 {
        self.values[[0, 0]]
    }

    /// Grid node with the largest value, as (θ, φ) in degrees.
    pub fn argmax(&self) -> (f64, f64) {
        let (mut best, mut at) = (f64::NEG_INFINITY, (0, 0));
        for ((i, j), &v) in self.values.indexed_iter() {
            if v > best {
                best = v;
                at = (i, j);
            }
        }
        (self.grid.theta_deg(at.0), self.grid.phi_deg(at.1))
    }

    pub(crate) fn map_values(&self, values: Array2<f64>) -> Self {
        Self::from_parts(self.grid, values, self.trp_dbm)
    }
}

/// Raw array intensity |Σ w_n f_n(u) e^{+j2π r_n·u}|² on the grid.
fn raw_intensity(
    geom: &ArrayGeometry,
    w: &ExcitationWeights,
    ep: ElementPattern,
    grid: &AngularGrid,
) -> Array2<f64> {
    let mut out = Array2::<f64>::zeros((grid.rows(), grid.n_phi()));
    let elems: Vec<_> = geom
        .positions()
        .iter()
        .zip(geom.normals())
        .zip(w.weights())
        .filter(|(_, w)| w.norm_sqr() > 0.0)
        .map(|((r, n), w)| (*r, *n, *w))
        .collect();
    out.axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(i, mut row)| {
            for j in 0..grid.n_phi() {
                let u = grid.node_vector(i, j);
                let field: Complex64 = elems
                    .iter()
                    .map(|(r, n, w)| w * ep.field(&u, n) * Complex64::from_polar(1.0, TAU * r.dot(&u)))
                    .sum();
                row[j] = field.norm_sqr();
            }
        });
    out
}

/// Synthesizes the EIRP pattern and scales it so that the full-sphere
/// quadrature on this same grid, divided by the grid's discrete sphere
/// weight, equals `trp_dbm` in mW.
pub fn synthesize_eirp(
    geom: &ArrayGeometry,
    w: &ExcitationWeights,
    ep: ElementPattern,
    grid: &AngularGrid,
    trp_dbm: f64,
) -> Result<EirpPattern> {
    if !trp_dbm.is_finite() {
        return Err(Error::validation("trp_dbm must be finite"));
    }
    if w.len() != geom.len() {
        return Err(Error::validation(format!(
            "{} weights for {} elements",
            w.len(),
            geom.len()
        )));
    }
    let raw = EirpPattern::from_parts(*grid, raw_intensity(geom, w, ep, grid), trp_dbm);
    let total = quadrature_sum(&raw, FovMask::full_sphere());
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::DegeneratePattern(
            "no radiated power (all weights zero?)".into(),
        ));
    }
    let scale = dbm_to_mw(trp_dbm) * grid.full_sphere_weight() / total;
    let values = &raw.values * scale;
    Ok(raw.map_values(values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_ura, Rotation};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    #[test]
    fn trp_table() {
        assert_abs_diff_eq!(trp_after_failures(15.0, 16, 0).unwrap(), 15.0);
        assert_abs_diff_eq!(trp_after_failures(15.0, 16, 1).unwrap(), 14.72, epsilon = 0.005);
        assert_abs_diff_eq!(trp_after_failures(15.0, 16, 2).unwrap(), 14.42, epsilon = 0.005);
        assert_abs_diff_eq!(trp_after_failures(15.0, 16, 4).unwrap(), 13.75, epsilon = 0.005);
        assert!(matches!(trp_after_failures(15.0, 16, 16), Err(Error::Domain(_))));
        assert!(trp_after_failures(15.0, 16, 17).is_err());
    }

    #[test]
    fn trp_strictly_decreasing() {
        let v: Vec<f64> = (0..16).map(|k| trp_after_failures(15.0, 16, k).unwrap()).collect();
        assert!(v.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn broadside_steering_is_flat() {
        let w = steering_weights(&build_ura(), Direction::zenith());
        for x in w.weights() {
            assert_abs_diff_eq!(x.re, 1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(x.im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn steering_phase_step_between_columns() {
        let g = build_ura();
        let w = steering_weights(&g, Direction::new(45.0, 0.0).unwrap());
        // element 3 is the next column after element 1
        let step = (w.weight(3).unwrap() / w.weight(1).unwrap()).arg();
        assert_abs_diff_eq!(step, -2.2214, epsilon = 1e-4);
        // rows share a phase when steering in the xz plane
        let same = (w.weight(2).unwrap() / w.weight(1).unwrap()).arg();
        assert_abs_diff_eq!(same, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn steered_beam_peak_near_steer_direction() {
        let g = build_ura();
        let grid = AngularGrid::uniform(5.0).unwrap();
        let w = steering_weights(&g, Direction::new(45.0, 0.0).unwrap());
        let p = synthesize_eirp(&g, &w, ElementPattern::default(), &grid, 15.0).unwrap();
        let (t, f) = p.argmax();
        assert!((t - 45.0).abs() <= 5.0, "peak theta {t}");
        assert_eq!(f, 0.0);
    }

    #[test]
    fn failures_zero_weights() {
        let w = ExcitationWeights::uniform(16);
        assert_eq!(w.clone().with_failures(&[]).unwrap(), w);
        let f = apply_failures(w.clone(), &[15]).unwrap();
        assert_eq!(f.weight(15).unwrap(), Complex64::new(0.0, 0.0));
        assert_eq!(f.weights().iter().filter(|x| x.norm() == 1.0).count(), 15);
        let f = apply_failures(w.clone(), &[7, 8, 9, 10]).unwrap();
        assert_eq!(f.weights().iter().filter(|x| x.norm() == 0.0).count(), 4);
        assert_eq!(f.failed().iter().copied().collect::<Vec<_>>(), vec![7, 8, 9, 10]);
        assert!(apply_failures(w.clone(), &[0]).is_err());
        assert!(apply_failures(w, &[17]).is_err());
    }

    #[test]
    fn isotropic_single_element_is_flat() {
        let grid = AngularGrid::uniform(5.0).unwrap();
        let p = synthesize_eirp(
            &ArrayGeometry::single(),
            &ExcitationWeights::uniform(1),
            ElementPattern::Isotropic,
            &grid,
            15.0,
        )
        .unwrap();
        for v in p.values() {
            assert_relative_eq!(*v, 31.6228, max_relative = 2e-6);
        }
    }

    #[test]
    fn all_failed_is_degenerate() {
        let g = build_ura();
        let all: Vec<usize> = (1..=16).collect();
        let w = ExcitationWeights::uniform(16).with_failures(&all).unwrap();
        let grid = AngularGrid::uniform(5.0).unwrap();
        let err = synthesize_eirp(&g, &w, ElementPattern::default(), &grid, 15.0).unwrap_err();
        assert!(matches!(err, Error::DegeneratePattern(_)));
    }

    #[test]
    fn broadside_peak_at_zenith() {
        let g = build_ura();
        let grid = AngularGrid::uniform(0.5).unwrap();
        let p = synthesize_eirp(&g, &ExcitationWeights::uniform(16), ElementPattern::default(), &grid, 15.0).unwrap();
        assert_eq!(p.argmax().0, 0.0);
    }

    #[test]
    fn broadside_symmetries() {
        let g = build_ura();
        let grid = AngularGrid::uniform(1.5).unwrap();
        let p = synthesize_eirp(&g, &ExcitationWeights::uniform(16), ElementPattern::default(), &grid, 15.0).unwrap();
        let m = grid.n_phi();
        let v = p.values();
        let peak = v.iter().cloned().fold(0.0, f64::max);
        for i in 0..grid.rows() {
            for j in 0..m {
                let mirror = v[[i, (m - j) % m]];
                let half_turn = v[[i, (j + m / 2) % m]];
                assert!((v[[i, j]] - mirror).abs() <= 1e-9 * peak);
                assert!((v[[i, j]] - half_turn).abs() <= 1e-9 * peak);
            }
        }
    }

    #[test]
    fn cosine_field_is_projection_for_unit_powers() {
        let ep = ElementPattern::default();
        let n = Rotation::y_clockwise(20.0).apply(&Vec3::z());
        let u = Direction::new(50.0, 70.0).unwrap().to_vector();
        assert_relative_eq!(ep.field(&u, &n), u.dot(&n), max_relative = 1e-12);
        assert_eq!(ep.field(&Vec3::new(1.0, 0.0, 0.0), &Vec3::z()), 0.0);
        assert_eq!(ep.field(&-Vec3::z(), &Vec3::z()), 0.0);
        assert_eq!(ep.field(&Vec3::z(), &Vec3::z()), 1.0);
    }

    #[test]
    fn cosine_field_with_other_exponents() {
        let ep = ElementPattern::Cosine { a: 2.0, b: 1.0 };
        // in the xz plane the elevation angle is zero: field = cos^2(theta)
        let u = Direction::new(30.0, 0.0).unwrap().to_vector();
        assert_relative_eq!(ep.field(&u, &Vec3::z()), 0.75, max_relative = 1e-12);
        // in the yz plane the azimuth angle is zero: field = cos(theta)
        let u = Direction::new(30.0, 90.0).unwrap().to_vector();
        assert_relative_eq!(ep.field(&u, &Vec3::z()), 30f64.to_radians().cos(), max_relative = 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn element_field_bounded(theta in 0.0f64..=180.0, phi in 0.0f64..360.0, tilt in -90.0f64..90.0,
                                 a in 0.5f64..3.0, b in 0.5f64..3.0) {
            let n = Rotation::y_clockwise(tilt).apply(&Vec3::z());
            let u = Direction::new(theta, phi).unwrap().to_vector();
            for ep in [ElementPattern::default(), ElementPattern::Cosine { a, b }] {
                let f = ep.field(&u, &n);
                prop_assert!((0.0..=1.0 + 1e-12).contains(&f));
            }
        }
    }
}
