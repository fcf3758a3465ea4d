use serde::{Deserialize, Serialize};

use crate::doa::{circular_distance_deg, Doa};
use crate::error::{Error, Result};

/// Uniform elevation x azimuth grid. Rows are elevations, columns azimuths;
/// the flat index is row-major (`el * n_az + az`). Azimuth is circular: the
/// first and last columns are adjacent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoaGrid {
    el_start_deg: f64,
    el_step_deg: f64,
    n_el: usize,
    az_start_deg: f64,
    az_step_deg: f64,
    n_az: usize,
}

impl Default for DoaGrid {
    fn default() -> Self {
        DoaGrid::with_step(5.0).expect("5 degree grid is valid")
    }
}

const ANGLE_TOL: f64 = 1e-9;

impl DoaGrid {
    pub fn new(el_start_deg: f64, el_step_deg: f64, n_el: usize, az_start_deg: f64, az_step_deg: f64, n_az: usize) -> Result<Self> {
        let bad = |m: &str| Err(Error::GridMismatch(m.to_string()));
        if ![el_start_deg, el_step_deg, az_start_deg, az_step_deg].iter().all(|v| v.is_finite()) {
            return bad("non-finite grid parameter");
        }
        if n_el == 0 || n_az == 0 || el_step_deg <= 0.0 || az_step_deg <= 0.0 {
            return bad("empty grid or non-positive step");
        }
        if n_el.checked_mul(n_az).is_none_or(|n| n > 1 << 24) {
            return bad("grid too large");
        }
        let el_end = el_start_deg + el_step_deg * (n_el - 1) as f64;
        if el_start_deg < -ANGLE_TOL || el_end > 180.0 + ANGLE_TOL {
            return bad("elevations must lie in [0, 180]");
        }
        if ((n_az as f64) * az_step_deg - 360.0).abs() > 1e-6 {
            return bad("azimuth samples must cover the full circle");
        }
        if !(-180.0 - ANGLE_TOL..=180.0 + ANGLE_TOL).contains(&az_start_deg)
            || az_start_deg + az_step_deg * (n_az - 1) as f64 > 180.0 + ANGLE_TOL
        {
            return bad("azimuths must lie in [-180, 180]");
        }
        Ok(DoaGrid { el_start_deg, el_step_deg, n_el, az_start_deg, az_step_deg, n_az })
    }

    /// Cell-centred elevations `step/2, 3 step/2, ...` and azimuths starting at -180.
    pub fn with_step(step_deg: f64) -> Result<Self> {
        if !(step_deg > 0.0) {
            return Err(Error::GridMismatch("step must be positive".into()));
        }
        let n_el = (180.0 / step_deg).round() as usize;
        let n_az = (360.0 / step_deg).round() as usize;
        DoaGrid::new(step_deg / 2.0, step_deg, n_el, -180.0, step_deg, n_az)
    }

    pub fn n_el(&self) -> usize {
        self.n_el
    }
    pub fn n_az(&self) -> usize {
        self.n_az
    }
    pub fn len(&self) -> usize {
        self.n_el * self.n_az
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn el_start_deg(&self) -> f64 {
        self.el_start_deg
    }
    pub fn el_step_deg(&self) -> f64 {
        self.el_step_deg
    }
    pub fn az_start_deg(&self) -> f64 {
        self.az_start_deg
    }
    pub fn az_step_deg(&self) -> f64 {
        self.az_step_deg
    }

    pub fn index(&self, el: usize, az: usize) -> usize {
        el * self.n_az + az
    }
    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index / self.n_az, index % self.n_az)
    }
    pub fn elevation_deg(&self, el: usize) -> f64 {
        self.el_start_deg + self.el_step_deg * el as f64
    }
    pub fn azimuth_deg(&self, az: usize) -> f64 {
        self.az_start_deg + self.az_step_deg * az as f64
    }

    pub fn doa(&self, index: usize) -> Doa {
        let (i, j) = self.coords(index);
        Doa::from_degrees(self.elevation_deg(i), self.azimuth_deg(j)).expect("grid nodes are valid directions")
    }

    pub fn unit_vectors(&self) -> Vec<[f64; 3]> {
        (0..self.len()).map(|g| self.doa(g).unit_vector()).collect()
    }

    /// 4-connected neighbours: north/south without pole identification,
    /// east/west with azimuth wrap-around.
    pub fn neighbors(&self, index: usize) -> impl Iterator<Item = usize> + '_ {
        let (i, j) = self.coords(index);
        let north = (i > 0).then(|| self.index(i - 1, j));
        let south = (i + 1 < self.n_el).then(|| self.index(i + 1, j));
        let west = (self.n_az > 1).then(|| self.index(i, (j + self.n_az - 1) % self.n_az));
        let east = (self.n_az > 2).then(|| self.index(i, (j + 1) % self.n_az));
        [north, south, west, east].into_iter().flatten()
    }

    /// Nearest node by great-circle angle; ties go to the lower index.
    pub fn nearest(&self, p: &Doa) -> usize {
        let u = p.unit_vector();
        let mut best = (f64::NEG_INFINITY, 0);
        for g in 0..self.len() {
            let v = self.doa(g).unit_vector();
            let dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
            if dot > best.0 {
                best = (dot, g);
            }
        }
        best.1
    }

    /// Index of `p` if it coincides with a grid node.
    pub fn exact_index(&self, p: &Doa) -> Option<usize> {
        let el = (p.elevation.to_degrees() - self.el_start_deg) / self.el_step_deg;
        let az = (p.azimuth.to_degrees() - self.az_start_deg).rem_euclid(360.0) / self.az_step_deg;
        let (ei, ai) = (el.round(), az.round());
        if (el - ei).abs() * self.el_step_deg > ANGLE_TOL * 1e3 || ei < 0.0 || ei >= self.n_el as f64 {
            return None;
        }
        let ai = (ai as usize) % self.n_az;
        let az_err = circular_distance_deg(self.azimuth_deg(ai), p.azimuth.to_degrees());
        if az_err > ANGLE_TOL * 1e3 {
            return None;
        }
        Some(self.index(ei as usize, ai))
    }

    /// Same sampling as `other`, up to floating tolerance.
    pub fn matches(&self, other: &DoaGrid) -> bool {
        self.n_el == other.n_el
            && self.n_az == other.n_az
            && (self.el_start_deg - other.el_start_deg).abs() < 1e-9
            && (self.el_step_deg - other.el_step_deg).abs() < 1e-9
            && (self.az_start_deg - other.az_start_deg).abs() < 1e-9
            && (self.az_step_deg - other.az_step_deg).abs() < 1e-9
    }
}
