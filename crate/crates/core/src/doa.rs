//! Directions of arrival on the unit sphere.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Elevation is measured from +z, azimuth from +x towards +y.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DoaDegrees", into = "DoaDegrees")]
pub struct Doa {
    /// Elevation in radians, `[0, π]`.
    pub elevation: f64,
    /// Azimuth in radians, `[-π, π]`.
    pub azimuth: f64,
}

/// On-disk representation of a [`Doa`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoaDegrees {
    pub az_deg: f64,
    pub el_deg: f64,
}

impl TryFrom<DoaDegrees> for Doa {
    type Error = Error;

    fn try_from(d: DoaDegrees) -> Result<Self> {
        Doa::from_degrees(d.el_deg, d.az_deg)
    }
}

impl From<Doa> for DoaDegrees {
    fn from(d: Doa) -> Self {
        DoaDegrees {
            az_deg: d.azimuth.to_degrees(),
            el_deg: d.elevation.to_degrees(),
        }
    }
}

impl Doa {
    pub fn new(elevation: f64, azimuth: f64) -> Result<Self> {
        const TOL: f64 = 1e-12;
        if !elevation.is_finite() || !azimuth.is_finite() {
            return Err(Error::Contract("non-finite direction".into()));
        }
        if !(-TOL..=PI + TOL).contains(&elevation) {
            return Err(Error::Contract(format!(
                "elevation {elevation} outside [0, pi]"
            )));
        }
        if !(-PI - TOL..=PI + TOL).contains(&azimuth) {
            return Err(Error::Contract(format!("azimuth {azimuth} outside [-pi, pi]")));
        }
        Ok(Doa {
            elevation: elevation.clamp(0.0, PI),
            azimuth: azimuth.clamp(-PI, PI),
        })
    }

    pub fn from_degrees(el_deg: f64, az_deg: f64) -> Result<Self> {
        Doa::new(el_deg.to_radians(), az_deg.to_radians())
    }

    pub fn unit_vector(&self) -> [f64; 3] {
        doa_unit_vector(*self)
    }

    /// Great-circle angle to `other`, in radians.
    pub fn angular_distance(&self, other: &Doa) -> f64 {
        let a = self.unit_vector();
        let b = other.unit_vector();
        let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        dot.clamp(-1.0, 1.0).acos()
    }
}

/// `u(p) = [sin φ cos θ, sin φ sin θ, cos φ]`.
pub fn doa_unit_vector(p: Doa) -> [f64; 3] {
    let (se, ce) = p.elevation.sin_cos();
    let (sa, ca) = p.azimuth.sin_cos();
    [se * ca, se * sa, ce]
}

/// Absolute circular difference of two angles, in `[0, π]`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// Degrees variant of [`circular_distance`], in `[0, 180]`.
pub fn circular_distance_deg(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}
