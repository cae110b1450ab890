//! Spherical coordinates and the unit-sphere/Cartesian conversions.
//!
//! World space is right-handed with +z pointing straight up. A viewing
//! direction is `(azimuth, zenith)` in degrees: azimuth is measured
//! counter-clockwise from +x in the x-y plane and lies in `[0, 360)`,
//! zenith is the angle from +z and lies in `[0, 180]`.

use crate::error::{Error, Result};

/// A direction on the unit sphere in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalDirection {
    azimuth: f64,
    zenith: f64,
}

impl SphericalDirection {
    /// Builds a direction, normalizing azimuth into `[0, 360)`.
    ///
    /// Zenith outside `[0, 180]` is rejected, not clamped.
    pub fn new(azimuth_deg: f64, zenith_deg: f64) -> Result<Self> {
        if !azimuth_deg.is_finite() || !zenith_deg.is_finite() {
            return Err(Error::Domain(format!(
                "non-finite spherical coordinates ({azimuth_deg}, {zenith_deg})"
            )));
        }
        if !(0.0..=180.0).contains(&zenith_deg) {
            return Err(Error::Domain(format!(
                "zenith {zenith_deg} outside [0, 180]"
            )));
        }
        Ok(Self {
            azimuth: azimuth_deg.rem_euclid(360.0),
            zenith: zenith_deg,
        })
    }

    pub fn azimuth_deg(&self) -> f64 {
        self.azimuth
    }

    pub fn zenith_deg(&self) -> f64 {
        self.zenith
    }
}

/// A 3-vector; unit-norm when used as a direction.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(&self, other: &Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalized(&self) -> Result<Vec3> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::Domain("cannot normalize zero vector".into()));
        }
        Ok(Vec3::new(self.x / n, self.y / n, self.z / n))
    }

    pub fn scale(&self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn add(&self, other: &Vec3) -> Vec3 {
        Vec3::new(self.x + other.x, self.y + other.y, self.z + other.z)
    }

    pub fn sub(&self, other: &Vec3) -> Vec3 {
        Vec3::new(self.x - other.x, self.y - other.y, self.z - other.z)
    }
}

/// Converts a spherical direction to the unit vector
/// `(sin θ cos φ, sin θ sin φ, cos θ)`.
///
/// Zenith 0 maps to +z; azimuth runs counter-clockwise from +x.
pub fn dir_from_spherical(s: SphericalDirection) -> Vec3 {
    let az = s.azimuth_deg().to_radians();
    let zen = s.zenith_deg().to_radians();
    let (sin_zen, cos_zen) = (zen.sin(), zen.cos());
    Vec3::new(sin_zen * az.cos(), sin_zen * az.sin(), cos_zen)
}

/// Inverse of [`dir_from_spherical`]; `v` need not be unit length.
///
/// At the poles the azimuth is defined as 0. Errors on the zero vector.
pub fn spherical_from_dir(v: Vec3) -> Result<SphericalDirection> {
    let n = v.norm();
    if n == 0.0 || !n.is_finite() {
        return Err(Error::Domain(
            "cannot derive direction from zero vector".into(),
        ));
    }
    let zenith = (v.z / n).clamp(-1.0, 1.0).acos().to_degrees();
    let azimuth = if v.x == 0.0 && v.y == 0.0 {
        0.0
    } else {
        v.y.atan2(v.x).to_degrees()
    };
    SphericalDirection::new(azimuth, zenith)
}
