//! Iterative detection over likelihood maps with peak suppression and
//! exclusion zones, count estimation and greedy truth matching.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::doa::{circular_distance_deg, Doa, DoaDegrees};
use crate::error::{Error, Result};
use crate::scene::Vec3;
use crate::spectral::PairCrossSpectrum;
use crate::srp::{expected_tdoa, normalize_map, DoaGrid, FrameSummedSpectrum, LikelihoodMap, SteeringTable};

pub const DEFAULT_SEPARATION_DEG: f64 = 10.0;

const DEG_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum DetectMode {
    /// Exactly `k` iterations.
    Known { k: usize },
    /// Stop when the normalized peak falls below `beta_th`.
    Unknown { beta_th: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectParams {
    pub mode: DetectMode,
    pub separation_deg: f64,
    pub k_max: usize,
}

impl DetectParams {
    pub fn known(k: usize, k_max: usize) -> Self {
        DetectParams { mode: DetectMode::Known { k }, separation_deg: DEFAULT_SEPARATION_DEG, k_max }
    }

    /// Unknown mode with threshold 0: always runs `k_max` iterations unless
    /// the feasible set empties. Used to record full peak sequences.
    pub fn full(k_max: usize) -> Self {
        DetectParams { mode: DetectMode::Unknown { beta_th: 0.0 }, separation_deg: DEFAULT_SEPARATION_DEG, k_max }
    }

    fn validate(&self, grid: &DoaGrid) -> Result<usize> {
        let step = grid.el_step_deg().max(grid.az_step_deg());
        if !(self.separation_deg >= step - DEG_TOL) {
            return Err(Error::Contract(format!("separation {} deg is below the grid step {} deg", self.separation_deg, step)));
        }
        if self.k_max == 0 {
            return Err(Error::Contract("k_max must be at least 1".into()));
        }
        match self.mode {
            DetectMode::Known { k } if k == 0 || k > self.k_max => {
                Err(Error::Contract(format!("known count {k} outside 1..={}", self.k_max)))
            }
            DetectMode::Known { k } => Ok(k),
            DetectMode::Unknown { beta_th } if !beta_th.is_finite() => Err(Error::Contract("non-finite detection threshold".into())),
            DetectMode::Unknown { .. } => Ok(self.k_max),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub grid_index: usize,
    pub doa: Doa,
    /// Map value at the peak before normalisation (used for suppression).
    pub raw_peak: f64,
    /// Value on the per-iteration [0, 1] scale (used by count thresholds).
    pub normalized_peak: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionTrace {
    pub detections: Vec<Detection>,
    /// Normalised map of each retained iteration.
    pub maps: Vec<LikelihoodMap>,
    /// The same maps before normalisation.
    pub raw_maps: Vec<LikelihoodMap>,
    pub params: DetectParams,
    /// The feasible set ran out before the loop finished.
    pub exhausted: bool,
}

impl DetectionTrace {
    pub fn normalized_peaks(&self) -> Vec<f64> {
        self.detections.iter().map(|d| d.normalized_peak).collect()
    }

    pub fn doas(&self) -> Vec<Doa> {
        self.detections.iter().map(|d| d.doa).collect()
    }

    pub fn estimate_count(&self, beta: f64) -> usize {
        estimate_count(&self.normalized_peaks(), beta)
    }

    pub fn summary(&self, map_file: Option<String>) -> TraceSummary {
        TraceSummary {
            detections: self
                .detections
                .iter()
                .map(|d| DetectionRecord {
                    doa: d.doa.into(),
                    grid_index: d.grid_index,
                    raw_peak: d.raw_peak,
                    normalized_peak: d.normalized_peak,
                })
                .collect(),
            params: self.params,
            exhausted: self.exhausted,
            map_file,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    #[serde(flatten)]
    pub doa: DoaDegrees,
    pub grid_index: usize,
    pub raw_peak: f64,
    pub normalized_peak: f64,
}

/// Serialisable view of a trace; the maps themselves live in a map-exchange file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub detections: Vec<DetectionRecord>,
    pub params: DetectParams,
    pub exhausted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map_file: Option<String>,
}

/// Grid nodes outside the keep-out cross of every prior detection: a node
/// survives only if both its elevation and its circular azimuth differ by at
/// least `d` from each detection.
pub fn feasible_mask(grid: &DoaGrid, detected: &[usize], separation_deg: f64) -> Vec<bool> {
    let prior: Vec<(f64, f64)> = detected
        .iter()
        .map(|&g| {
            let (i, j) = grid.coords(g);
            (grid.elevation_deg(i), grid.azimuth_deg(j))
        })
        .collect();
    (0..grid.len())
        .map(|g| {
            let (i, j) = grid.coords(g);
            let (el, az) = (grid.elevation_deg(i), grid.azimuth_deg(j));
            prior.iter().all(|&(pe, pa)| {
                (el - pe).abs() >= separation_deg - DEG_TOL && circular_distance_deg(az, pa) >= separation_deg - DEG_TOL
            })
        })
        .collect()
}

/// Shared loop: `next_map(k, prev)` yields the raw-or-normalised map for
/// iteration `k` given the previous detection.
fn run<F>(grid: &DoaGrid, params: &DetectParams, mut next_map: F) -> Result<DetectionTrace>
where
    F: FnMut(usize, Option<&Detection>) -> Result<LikelihoodMap>,
{
    let iterations = params.validate(grid)?;
    let mut trace = DetectionTrace { detections: Vec::new(), maps: Vec::new(), raw_maps: Vec::new(), params: *params, exhausted: false };
    for k in 0..iterations {
        let map = next_map(k, trace.detections.last())?;
        if map.len() != grid.len() {
            return Err(Error::GridMismatch(format!("map has {} nodes, grid {}", map.len(), grid.len())));
        }
        let indices: Vec<usize> = trace.detections.iter().map(|d| d.grid_index).collect();
        let mask = feasible_mask(grid, &indices, params.separation_deg);
        let Some(peak) = map.argmax(Some(&mask)) else {
            trace.exhausted = true;
            break;
        };
        let norm = normalize_map(&map);
        let normalized_peak = norm.get(peak);
        if let DetectMode::Unknown { beta_th } = params.mode {
            if normalized_peak < beta_th {
                break;
            }
        }
        trace.detections.push(Detection { grid_index: peak, doa: grid.doa(peak), raw_peak: map.get(peak), normalized_peak });
        trace.maps.push(norm);
        trace.raw_maps.push(map);
    }
    Ok(trace)
}

/// SRP-PHAT branch: suppress each detected peak from the cross-spectra and
/// recompute the map.
pub fn iterative_detect_srp(psi: &PairCrossSpectrum, table: &SteeringTable, params: &DetectParams) -> Result<DetectionTrace> {
    let mut summed = FrameSummedSpectrum::new(psi, table)?;
    run(table.grid(), params, |_, prev| {
        if let Some(d) = prev {
            summed.suppress(table, d.grid_index, d.raw_peak);
        }
        Ok(summed.map(table))
    })
}

/// Imported-map branch: iteration `k` consumes the `k`-th map.
pub fn iterative_detect_maps(maps: &[LikelihoodMap], grid: &DoaGrid, params: &DetectParams) -> Result<DetectionTrace> {
    run(grid, params, |k, _| {
        maps.get(k)
            .cloned()
            .ok_or_else(|| Error::Ingest(format!("map sequence has {} maps, iteration {} needs another", maps.len(), k + 1)))
    })
}

/// `Ψ'(t, f) = Ψ(t, f) - β e^{jω_f τ(p)}` for every pair, frame and bin.
pub fn suppress_peak(psi: &PairCrossSpectrum, p: &Doa, beta: f64, mics: &[Vec3], speed_of_sound: f64) -> PairCrossSpectrum {
    let mut out = psi.clone();
    if beta == 0.0 {
        return out;
    }
    for (k, &(a, b)) in psi.pairs().iter().enumerate() {
        let tau = expected_tdoa(&mics[a], &mics[b], p, speed_of_sound);
        let steer: Vec<Complex64> = (0..psi.n_bins()).map(|f| Complex64::from_polar(beta, psi.omega(f) * tau)).collect();
        for t in 0..psi.n_frames() {
            for (f, s) in steer.iter().enumerate() {
                *out.get_mut(k, t, f) -= s;
            }
        }
    }
    out
}

/// Longest prefix of `peaks` whose values all reach `beta`.
pub fn estimate_count(peaks: &[f64], beta: f64) -> usize {
    peaks.iter().take_while(|&&v| v >= beta).count()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchedSample {
    /// `(detection index, truth index)` in detection order.
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_truths: Vec<usize>,
    pub unmatched_detections: Vec<usize>,
}

/// Each detection, in order, takes the nearest unmatched truth by great-circle
/// angle; ties go to the lower truth index.
pub fn match_greedy(detections: &[Doa], truths: &[Doa]) -> MatchedSample {
    let mut taken = vec![false; truths.len()];
    let mut pairs = Vec::new();
    let mut unmatched_detections = Vec::new();
    for (i, d) in detections.iter().enumerate() {
        let best = truths
            .iter()
            .enumerate()
            .filter(|(j, _)| !taken[*j])
            .map(|(j, t)| (j, d.angular_distance(t)))
            .fold(None, |acc: Option<(usize, f64)>, (j, dist)| match acc {
                Some((_, b)) if b <= dist => acc,
                _ => Some((j, dist)),
            });
        match best {
            Some((j, _)) => {
                taken[j] = true;
                pairs.push((i, j));
            }
            None => unmatched_detections.push(i),
        }
    }
    let unmatched_truths = (0..truths.len()).filter(|&j| !taken[j]).collect();
    MatchedSample { pairs, unmatched_truths, unmatched_detections }
}
