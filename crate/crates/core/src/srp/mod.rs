//! Steered response power with phase transform over a direction grid.

mod grid;
mod map;
mod mapfile;

pub use grid::DoaGrid;
pub use map::{normalize_map, LikelihoodMap, MapScale};
pub use mapfile::{decode_maps, encode_maps, export_map_sequence, import_map_sequence, MapRecord};

use std::ops::Range;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::doa::Doa;
use crate::error::{Error, Result};
use crate::scene::Vec3;
use crate::spectral::{mic_pairs, PairCrossSpectrum};

/// Time difference of arrival `(m - m')·u(p) / c` for a far-field source at `p`.
pub fn expected_tdoa(m: &Vec3, m2: &Vec3, p: &Doa, c: f64) -> f64 {
    let u = p.unit_vector();
    ((m[0] - m2[0]) * u[0] + (m[1] - m2[1]) * u[1] + (m[2] - m2[2]) * u[2]) / c
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SrpConfig {
    pub band_hz: [f64; 2],
    pub speed_of_sound: f64,
}

impl Default for SrpConfig {
    fn default() -> Self {
        SrpConfig { band_hz: [100.0, 4000.0], speed_of_sound: 343.0 }
    }
}

/// Per-pair TDOAs for every grid node plus the analysis band.
///
/// Steering phases are generated on the fly from these delays, which keeps
/// memory at `|G|·P` reals instead of `|G|·P·F` complex values.
#[derive(Debug, Clone)]
pub struct SteeringTable {
    grid: DoaGrid,
    pairs: Vec<(usize, usize)>,
    tdoa: Vec<f64>,
    bins: Range<usize>,
    bin_hz: f64,
    n_bins: usize,
}

const RESYNC: usize = 64;

impl SteeringTable {
    pub fn new(grid: &DoaGrid, mics: &[Vec3], bin_hz: f64, n_bins: usize, cfg: &SrpConfig) -> Result<Self> {
        if mics.len() < 2 {
            return Err(Error::Shape("need at least two microphones".into()));
        }
        if !(bin_hz > 0.0) || !(cfg.speed_of_sound > 0.0) {
            return Err(Error::Shape("bin spacing and speed of sound must be positive".into()));
        }
        let lo = (cfg.band_hz[0] / bin_hz).ceil().max(0.0) as usize;
        let hi = ((cfg.band_hz[1] / bin_hz).floor() as usize + 1).min(n_bins);
        if lo >= hi {
            return Err(Error::Shape(format!("no frequency bins in band {:?} Hz", cfg.band_hz)));
        }
        let pairs = mic_pairs(mics.len());
        let mut tdoa = Vec::with_capacity(grid.len() * pairs.len());
        for g in 0..grid.len() {
            let p = grid.doa(g);
            tdoa.extend(pairs.iter().map(|&(a, b)| expected_tdoa(&mics[a], &mics[b], &p, cfg.speed_of_sound)));
        }
        Ok(SteeringTable { grid: grid.clone(), pairs, tdoa, bins: lo..hi, bin_hz, n_bins })
    }

    pub fn grid(&self) -> &DoaGrid {
        &self.grid
    }
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }
    pub fn band_bins(&self) -> Range<usize> {
        self.bins.clone()
    }
    pub fn n_band_bins(&self) -> usize {
        self.bins.len()
    }
    pub fn bin_hz(&self) -> f64 {
        self.bin_hz
    }
    pub fn tdoa(&self, grid_index: usize, pair: usize) -> f64 {
        self.tdoa[grid_index * self.pairs.len() + pair]
    }
    fn omega(&self, f: usize) -> f64 {
        2.0 * std::f64::consts::PI * f as f64 * self.bin_hz
    }

    fn check(&self, psi: &PairCrossSpectrum) -> Result<()> {
        if psi.pairs() != self.pairs.as_slice() || psi.n_bins() != self.n_bins || (psi.bin_hz() - self.bin_hz).abs() > 1e-9 {
            return Err(Error::Shape("cross-spectrum does not match steering table".into()));
        }
        Ok(())
    }

    /// `Σ_f Re{ s_f e^{-jω_f τ} }` over the band, phases by recurrence.
    fn steer_sum(&self, s: &[Complex64], tau: f64) -> f64 {
        let step = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * self.bin_hz * tau);
        let mut acc = 0.0;
        for (chunk_i, chunk) in s.chunks(RESYNC).enumerate() {
            let f0 = self.bins.start + chunk_i * RESYNC;
            let mut z = Complex64::from_polar(1.0, -self.omega(f0) * tau);
            for v in chunk {
                acc += v.re * z.re - v.im * z.im;
                z *= step;
            }
        }
        acc
    }
}

/// Cross-spectra summed over frames and restricted to the band. Since the
/// SRP functional is linear in `Ψ`, this is all a map evaluation needs.
#[derive(Debug, Clone)]
pub struct FrameSummedSpectrum {
    n_frames: usize,
    n_pairs: usize,
    n_band: usize,
    data: Vec<Complex64>,
}

impl FrameSummedSpectrum {
    pub fn new(psi: &PairCrossSpectrum, table: &SteeringTable) -> Result<Self> {
        table.check(psi)?;
        if psi.n_frames() == 0 {
            return Err(Error::Shape("cross-spectrum has no frames".into()));
        }
        let n_band = table.n_band_bins();
        let mut data = vec![Complex64::new(0.0, 0.0); table.pairs.len() * n_band];
        for p in 0..table.pairs.len() {
            let row = &mut data[p * n_band..(p + 1) * n_band];
            for t in 0..psi.n_frames() {
                for (i, f) in table.band_bins().enumerate() {
                    row[i] += psi.get(p, t, f);
                }
            }
        }
        Ok(FrameSummedSpectrum { n_frames: psi.n_frames(), n_pairs: table.pairs.len(), n_band, data })
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    /// Raw SRP-PHAT map over the table's grid.
    pub fn map(&self, table: &SteeringTable) -> LikelihoodMap {
        let g_len = table.grid.len();
        let norm = 1.0 / (self.n_pairs as f64 * self.n_frames as f64 * self.n_band as f64);
        let values = (0..g_len)
            .map(|g| {
                let mut acc = 0.0;
                for p in 0..self.n_pairs {
                    acc += table.steer_sum(&self.data[p * self.n_band..(p + 1) * self.n_band], table.tdoa(g, p));
                }
                acc * norm
            })
            .collect();
        LikelihoodMap::new(values, table.grid.n_el(), table.grid.n_az(), MapScale::Raw).expect("finite map")
    }

    /// Remove a plane-wave component of amplitude `beta` steered at a grid node
    /// from every frame (applied here to the frame sum).
    pub fn suppress(&mut self, table: &SteeringTable, grid_index: usize, beta: f64) {
        let scale = self.n_frames as f64 * beta;
        for p in 0..self.n_pairs {
            let tau = table.tdoa(grid_index, p);
            for (i, f) in table.band_bins().enumerate() {
                self.data[p * self.n_band + i] -= Complex64::from_polar(scale, table.omega(f) * tau);
            }
        }
    }
}

/// Raw SRP-PHAT likelihood of every grid node.
pub fn srp_map(psi: &PairCrossSpectrum, table: &SteeringTable) -> Result<LikelihoodMap> {
    Ok(FrameSummedSpectrum::new(psi, table)?.map(table))
}
