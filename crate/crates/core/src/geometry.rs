//! Array lattice, rigid rotations and spherical-direction conventions.
//!
//! Positions are in wavelengths. Directions use θ measured from +z and an
//! azimuth φ measured from +x toward +y.
//!
//! Rotations follow one sign convention for every axis: a positive angle is
//! a right-handed rotation about the axis. About y this turns +z toward +x,
//! which is the sense called "clockwise" throughout the study (a 45° turn
//! about y brings a beam tilted 45° toward −x back onto +z).

use nalgebra::{Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Rows of the study array (elements per column).
pub const URA_ROWS: usize = 2;
/// Columns of the study array.
pub const URA_COLS: usize = 8;
/// Lattice pitch in wavelengths.
pub const URA_SPACING: f64 = 0.5;

/// Element positions and normals of a planar rectangular array.
///
/// Elements are indexed from 1, column-major with `rows` elements per column:
/// indices 1..=rows fill the first column (most negative x), and so on. For
/// the 2×8 study array this puts {7, 8, 9, 10} in the central 2×2 block and
/// 15 on the +x edge.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    positions: Vec<Vec3>,
    normals: Vec<Vec3>,
    rows: usize,
    cols: usize,
    spacing: f64,
}

impl ArrayGeometry {
    /// A `rows`×`cols` lattice in the xy-plane, centred on the origin, with all
    /// normals along +z. Columns run along x, rows along y.
    pub fn lattice(rows: usize, cols: usize, spacing: f64) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::validation("lattice needs at least one row and one column"));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::validation(format!("lattice spacing must be positive, got {spacing}")));
        }
        let x0 = (cols as f64 - 1.0) / 2.0;
        let y0 = (rows as f64 - 1.0) / 2.0;
        let mut positions = Vec::with_capacity(rows * cols);
        for col in 0..cols {
            for row in 0..rows {
                positions.push(Vec3::new(
                    (col as f64 - x0) * spacing,
                    (row as f64 - y0) * spacing,
                    0.0,
                ));
            }
        }
        let normals = vec![Vec3::z(); rows * cols];
        Ok(Self {
            positions,
            normals,
            rows,
            cols,
            spacing,
        })
    }

    /// A single element at the origin facing +z.
    pub fn single() -> Self {
        Self::lattice(1, 1, 1.0).expect("1x1 lattice is valid")
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn normals(&self) -> &[Vec3] {
        &self.normals
    }

    /// Position of the element with 1-based `index`.
    pub fn position(&self, index: usize) -> Option<Vec3> {
        index.checked_sub(1).and_then(|i| self.positions.get(i)).copied()
    }

    /// Rotates every position and normal by the same rigid rotation.
    pub fn rotated(&self, rot: Rotation) -> Self {
        let m = rot.matrix();
        Self {
            positions: self.positions.iter().map(|p| m * p).collect(),
            normals: self.normals.iter().map(|n| m * n).collect(),
            ..*self
        }
    }
}

/// The 2×8, half-wavelength study array.
pub fn build_ura() -> ArrayGeometry {
    ArrayGeometry::lattice(URA_ROWS, URA_COLS, URA_SPACING).expect("study lattice is valid")
}

pub fn rotate_geometry(geom: &ArrayGeometry, rot: Rotation) -> ArrayGeometry {
    geom.rotated(rot)
}

/// A direction on the unit sphere, in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    theta_deg: f64,
    phi_deg: f64,
}

impl Direction {
    /// `theta_deg` must lie in [0, 180]; `phi_deg` is wrapped into [0, 360).
    pub fn new(theta_deg: f64, phi_deg: f64) -> Result<Self> {
        if !(0.0..=180.0).contains(&theta_deg) {
            return Err(Error::validation(format!("theta {theta_deg} deg outside [0, 180]")));
        }
        if !phi_deg.is_finite() {
            return Err(Error::validation("phi must be finite"));
        }
        let mut phi = phi_deg.rem_euclid(360.0);
        if phi >= 360.0 {
            phi = 0.0;
        }
        Ok(Self {
            theta_deg,
            phi_deg: phi,
        })
    }

    pub fn zenith() -> Self {
        Self {
            theta_deg: 0.0,
            phi_deg: 0.0,
        }
    }

    pub fn theta_deg(&self) -> f64 {
        self.theta_deg
    }

    pub fn phi_deg(&self) -> f64 {
        self.phi_deg
    }

    pub fn to_vector(&self) -> Vec3 {
        direction_to_vector(*self)
    }

    /// Inverse of [`direction_to_vector`]. The input need not be normalized.
    pub fn from_vector(v: &Vec3) -> Self {
        let n = v.norm();
        let z = (v.z / n).clamp(-1.0, 1.0);
        let theta = z.acos().to_degrees();
        let phi = v.y.atan2(v.x).to_degrees().rem_euclid(360.0);
        Self {
            theta_deg: theta,
            phi_deg: if phi >= 360.0 { 0.0 } else { phi },
        }
    }
}

pub fn direction_to_vector(d: Direction) -> Vec3 {
    let (st, ct) = d.theta_deg.to_radians().sin_cos();
    let (sp, cp) = d.phi_deg.to_radians().sin_cos();
    Vec3::new(st * cp, st * sp, ct)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    fn unit(self) -> Unit<Vec3> {
        match self {
            Axis::X => Vec3::x_axis(),
            Axis::Y => Vec3::y_axis(),
            Axis::Z => Vec3::z_axis(),
        }
    }
}

/// Rotation about a coordinate axis. Positive angles are right-handed; about
/// y this is the "clockwise" sense that carries +z toward +x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rotation {
    pub axis: Axis,
    pub angle_deg: f64,
}

impl Rotation {
    pub fn new(axis: Axis, angle_deg: f64) -> Self {
        Self { axis, angle_deg }
    }

    pub fn identity() -> Self {
        Self::new(Axis::Y, 0.0)
    }

    /// Clockwise rotation about y by `angle_deg` (+z toward +x).
    pub fn y_clockwise(angle_deg: f64) -> Self {
        Self::new(Axis::Y, angle_deg)
    }

    pub fn inverse(&self) -> Self {
        Self::new(self.axis, -self.angle_deg)
    }

    pub fn matrix(&self) -> Rotation3<f64> {
        Rotation3::from_axis_angle(&self.axis.unit(), self.angle_deg.to_radians())
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.matrix() * v
    }
}
