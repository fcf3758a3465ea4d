use crate::detect::{estimate_count, match_greedy, DetectionTrace, MatchedSample};
use crate::doa::Doa;
use crate::error::{Error, Result};
use crate::regions::BottleneckField;
use crate::srp::{DoaGrid, LikelihoodMap};

/// One calibration example: the per-iteration maps and peaks of a full
/// detection run, with the ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSample {
    pub maps: Vec<LikelihoodMap>,
    /// Grid index of each detected peak.
    pub detections: Vec<usize>,
    /// Map value at each peak, on the scale the thresholds use.
    pub peaks: Vec<f64>,
    pub truths: Vec<Doa>,
    /// Group label (e.g. room) for multi-condition datasets.
    pub label: Option<String>,
}

impl CalibrationSample {
    pub fn new(maps: Vec<LikelihoodMap>, detections: Vec<usize>, peaks: Vec<f64>, truths: Vec<Doa>) -> Result<Self> {
        if maps.len() != detections.len() || peaks.len() != detections.len() {
            return Err(Error::Shape("maps, detections and peaks must have equal length".into()));
        }
        if truths.is_empty() {
            return Err(Error::Contract("a calibration sample needs at least one true source".into()));
        }
        if let Some(m) = maps.iter().zip(&detections).find(|(m, &d)| d >= m.len()) {
            return Err(Error::Shape(format!("detection index outside a map of {} nodes", m.0.len())));
        }
        Ok(CalibrationSample { maps, detections, peaks, truths, label: None })
    }

    /// Uses the trace's normalised maps and peaks.
    pub fn from_trace(trace: &DetectionTrace, truths: Vec<Doa>) -> Result<Self> {
        CalibrationSample::new(
            trace.maps.clone(),
            trace.detections.iter().map(|d| d.grid_index).collect(),
            trace.normalized_peaks(),
            truths,
        )
    }

    /// Uses the trace's raw maps and peaks (for pooled-quantile normalisation).
    pub fn from_trace_raw(trace: &DetectionTrace, truths: Vec<Doa>) -> Result<Self> {
        CalibrationSample::new(
            trace.raw_maps.clone(),
            trace.detections.iter().map(|d| d.grid_index).collect(),
            trace.detections.iter().map(|d| d.raw_peak).collect(),
            truths,
        )
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn k_true(&self) -> usize {
        self.truths.len()
    }

    pub fn estimate_count(&self, beta: f64) -> usize {
        estimate_count(&self.peaks, beta)
    }

    pub fn matching(&self, grid: &DoaGrid) -> MatchedSample {
        let doas: Vec<Doa> = self.detections.iter().map(|&g| grid.doa(g)).collect();
        match_greedy(&doas, &self.truths)
    }
}

/// Threshold-free summary of a sample: peaks, coverage thresholds of the
/// matched truths and, per detection, the sorted bottleneck values that
/// determine region size at any λ.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleField {
    k_true: usize,
    peaks: Vec<f64>,
    cover: Vec<f64>,
    sorted_fields: Vec<Vec<f64>>,
    grid_len: usize,
}

impl SampleField {
    pub fn new(sample: &CalibrationSample, grid: &DoaGrid) -> Result<Self> {
        if sample.maps.iter().any(|m| m.len() != grid.len()) {
            return Err(Error::GridMismatch("sample maps do not match the grid".into()));
        }
        let matched = sample.matching(grid);
        let mut cover = Vec::with_capacity(matched.pairs.len());
        let mut sorted_fields = Vec::with_capacity(sample.detections.len());
        for (k, (map, &seed)) in sample.maps.iter().zip(&sample.detections).enumerate() {
            let field = BottleneckField::new(map, grid, seed);
            if let Some(&(_, t)) = matched.pairs.get(k) {
                cover.push(field.cover_threshold(grid, &sample.truths[t]));
            }
            let mut v: Vec<f64> = (0..grid.len()).filter(|&i| i != seed).map(|i| field.value(i)).collect();
            v.sort_by(f64::total_cmp);
            sorted_fields.push(v);
        }
        Ok(SampleField { k_true: sample.k_true(), peaks: sample.peaks.clone(), cover, sorted_fields, grid_len: grid.len() })
    }

    pub fn k_true(&self) -> usize {
        self.k_true
    }
    pub fn peaks(&self) -> &[f64] {
        &self.peaks
    }
    /// Coverage threshold of the `k`-th matched pair: the truth is missed iff `λ > c_k`.
    pub fn cover_thresholds(&self) -> &[f64] {
        &self.cover
    }
    pub fn n_detections(&self) -> usize {
        self.sorted_fields.len()
    }

    pub fn region_size(&self, k: usize, lambda: f64) -> usize {
        let v = &self.sorted_fields[k];
        1 + v.len() - v.partition_point(|&b| b < lambda)
    }

    /// Apply `v -> (v - offset) / scale` to every stored value. Equal to
    /// building the field from maps transformed the same way.
    pub fn affine(&self, offset: f64, scale: f64) -> SampleField {
        let f = |v: f64| (v - offset) / scale;
        SampleField {
            k_true: self.k_true,
            peaks: self.peaks.iter().map(|&v| f(v)).collect(),
            cover: self.cover.iter().map(|&v| f(v)).collect(),
            sorted_fields: self.sorted_fields.iter().map(|s| s.iter().map(|&v| f(v)).collect()).collect(),
            grid_len: self.grid_len,
        }
    }
}

/// Per-sample loss ingredients tabulated on a threshold axis, shared by every
/// configuration of a product grid built on that axis.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleCurves {
    k_true: usize,
    /// `K̂(β_j)`.
    khat: Vec<usize>,
    /// `1{λ_j > c_k}` per matched pair.
    miss: Vec<Vec<bool>>,
    /// `|C_{λ_j}| / |G|` per detection.
    area: Vec<Vec<f64>>,
}

impl SampleCurves {
    pub fn new(field: &SampleField, axis: &[f64]) -> Self {
        let g = field.grid_len as f64;
        SampleCurves {
            k_true: field.k_true,
            khat: axis.iter().map(|&b| estimate_count(&field.peaks, b)).collect(),
            miss: field.cover.iter().map(|&c| axis.iter().map(|&l| l > c).collect()).collect(),
            area: (0..field.n_detections()).map(|k| axis.iter().map(|&l| field.region_size(k, l) as f64 / g).collect()).collect(),
        }
    }

    pub fn from_sample(sample: &CalibrationSample, grid: &DoaGrid, axis: &[f64]) -> Result<Self> {
        Ok(SampleCurves::new(&SampleField::new(sample, grid)?, axis))
    }

    pub fn k_true(&self) -> usize {
        self.k_true
    }
    pub fn khat(&self, beta_index: usize) -> usize {
        self.khat[beta_index]
    }
    pub fn n_pairs(&self) -> usize {
        self.miss.len()
    }
    pub fn n_detections(&self) -> usize {
        self.area.len()
    }
    pub fn miss(&self, k: usize, lambda_index: usize) -> bool {
        self.miss[k][lambda_index]
    }
    pub fn area(&self, k: usize, lambda_index: usize) -> f64 {
        self.area[k][lambda_index]
    }
}
