//! Desk-scale dataset generation: simulate every scene of a plan, run full
//! iterative detection and keep the traces for calibration.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sslrc_core::detect::{iterative_detect_srp, DetectParams, DetectionRecord, DetectionTrace};
use sslrc_core::riskctl::CalibrationSample;
use sslrc_core::rng::{derive_seed, rng_for};
use sslrc_core::scene::{random_doas, MultichannelSignal, SceneSpec};
use sslrc_core::spectral::{cross_spectrum_phat, stft};
use sslrc_core::srp::{DoaGrid, SteeringTable};
use sslrc_core::doa::DoaDegrees;
use sslrc_core::{Doa, Result};

use crate::plan::ExperimentPlan;

const STREAM_SAMPLE: u64 = 0xda7a;
const STREAM_DOA: u64 = 0xd0a;

/// One scene of the plan, in generation order.
#[derive(Debug, Clone)]
pub struct SceneEntry {
    pub index: usize,
    pub room: usize,
    pub spec: SceneSpec,
}

/// Rooms outermost, then source counts, then repetitions.
pub fn scene_entries(plan: &ExperimentPlan) -> Result<Vec<SceneEntry>> {
    let d = &plan.dataset;
    let array = d.array.geometry()?;
    let mut out = Vec::new();
    for (r, room_plan) in d.rooms.iter().enumerate() {
        let room = room_plan.room()?;
        let center = d.array_center.unwrap_or([room.dims[0] / 2.0, room.dims[1] / 2.0, room.dims[2] / 2.0]);
        for &k in &d.k_values {
            for _ in 0..d.samples_per_k {
                let index = out.len();
                let seed = derive_seed(plan.seed, STREAM_SAMPLE, index as u64);
                let sources = random_doas(&mut rng_for(seed, STREAM_DOA, 0), k, d.min_separation_deg, d.elevation_range_deg)?;
                let spec = SceneSpec {
                    room: room.clone(),
                    t60_label_ms: room_plan.t60_ms,
                    array_center: center,
                    array: array.clone(),
                    sources,
                    source_range: d.source_range_m,
                    snr_db: d.snr_db,
                    sample_rate: d.sample_rate,
                    duration: d.duration_s,
                    seed,
                    k_max: d.k_max,
                    min_separation_deg: d.min_separation_deg,
                    speed_of_sound: d.speed_of_sound,
                };
                out.push(SceneEntry { index, room: r, spec });
            }
        }
    }
    Ok(out)
}

/// Shared analysis state: grid, steering delays and detection parameters.
pub struct Analyzer {
    pub grid: DoaGrid,
    pub table: SteeringTable,
    pub params: DetectParams,
    window: usize,
    hop: usize,
    sample_rate: u32,
}

impl Analyzer {
    pub fn new(plan: &ExperimentPlan) -> Result<Self> {
        let a = &plan.analysis;
        let grid = a.grid()?;
        let mics = plan.dataset.array.geometry()?;
        let fs = plan.dataset.sample_rate;
        let table = SteeringTable::new(&grid, mics.positions(), fs as f64 / a.window as f64, a.window / 2 + 1, &plan.srp_config())?;
        let params = DetectParams { separation_deg: a.separation_deg, ..DetectParams::full(plan.dataset.k_max) };
        Ok(Analyzer { grid, table, params, window: a.window, hop: a.hop, sample_rate: fs })
    }

    /// Full-length detection trace (threshold 0) of a recording.
    pub fn trace(&self, signal: &MultichannelSignal) -> Result<DetectionTrace> {
        if signal.sample_rate() != self.sample_rate {
            return Err(sslrc_core::Error::Shape(format!(
                "recording at {} Hz, analysis expects {} Hz",
                signal.sample_rate(),
                self.sample_rate
            )));
        }
        let x = stft(signal, self.window, self.hop)?;
        let psi = cross_spectrum_phat(&x)?;
        iterative_detect_srp(&psi, &self.table, &self.params)
    }
}

#[derive(Debug, Clone)]
pub struct DatasetSample {
    pub index: usize,
    pub room: usize,
    pub seed: u64,
    pub truths: Vec<Doa>,
    pub trace: DetectionTrace,
}

impl DatasetSample {
    /// Sample on the per-map normalized scale.
    pub fn calibration(&self) -> Result<CalibrationSample> {
        CalibrationSample::from_trace(&self.trace, self.truths.clone())
    }

    /// Sample on the raw SRP scale, for shift normalization.
    pub fn calibration_raw(&self) -> Result<CalibrationSample> {
        CalibrationSample::from_trace_raw(&self.trace, self.truths.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleFailure {
    pub index: usize,
    pub error: String,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub room_labels: Vec<String>,
    pub samples: Vec<DatasetSample>,
    pub failures: Vec<SampleFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub index: usize,
    pub room: String,
    pub seed: u64,
    pub truths: Vec<DoaDegrees>,
    pub detections: Vec<DetectionRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub samples: Vec<ManifestEntry>,
    pub failures: Vec<SampleFailure>,
}

impl Dataset {
    pub fn manifest(&self) -> DatasetManifest {
        DatasetManifest {
            samples: self
                .samples
                .iter()
                .map(|s| ManifestEntry {
                    index: s.index,
                    room: self.room_labels[s.room].clone(),
                    seed: s.seed,
                    truths: s.truths.iter().map(|&d| d.into()).collect(),
                    detections: s.trace.summary(None).detections,
                })
                .collect(),
            failures: self.failures.clone(),
        }
    }

    /// Sample indices of each experiment: one group per room, or a single
    /// group when rooms are mixed.
    pub fn groups(&self, mix_rooms: bool) -> Vec<(String, Vec<usize>)> {
        if mix_rooms {
            return vec![("mixed".into(), (0..self.samples.len()).collect())];
        }
        self.room_labels
            .iter()
            .enumerate()
            .map(|(r, label)| (label.clone(), (0..self.samples.len()).filter(|&i| self.samples[i].room == r).collect()))
            .collect()
    }
}

/// Simulate and analyse every scene. Failing scenes are logged and left out.
pub fn generate_dataset(plan: &ExperimentPlan) -> Result<Dataset> {
    plan.validate()?;
    let entries = scene_entries(plan)?;
    let analyzer = Analyzer::new(plan)?;
    let results: Vec<Result<DetectionTrace>> =
        entries.par_iter().map(|e| e.spec.render().and_then(|sig| analyzer.trace(&sig))).collect();
    let mut samples = Vec::new();
    let mut failures = Vec::new();
    for (e, r) in entries.into_iter().zip(results) {
        match r {
            Ok(trace) => samples.push(DatasetSample { index: e.index, room: e.room, seed: e.spec.seed, truths: e.spec.sources, trace }),
            Err(err) => {
                warn!("sample {} failed: {err}", e.index);
                failures.push(SampleFailure { index: e.index, error: err.to_string() });
            }
        }
    }
    Ok(Dataset { room_labels: plan.dataset.rooms.iter().map(|r| r.t60_label()).collect(), samples, failures })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_plan() -> ExperimentPlan {
        ExperimentPlan::parse(
            r#"
mode = "unknown-pt"
seed = 5
n_cal = 4
n_test = 2
alpha_mc = 0.5
[dataset]
k_values = [1, 2, 3]
samples_per_k = 2
duration_s = 0.25
snr_db = 20
[[dataset.rooms]]
dims = [6, 6, 2.5]
order = 0
absorption = 0.5
[analysis]
grid_step_deg = 10
"#,
        )
        .unwrap()
    }

    #[test]
    fn counts_and_separation() {
        let mut plan = tiny_plan();
        plan.dataset.samples_per_k = 30;
        let entries = scene_entries(&plan).unwrap();
        assert_eq!(entries.len(), 90);
        for (i, e) in entries.iter().enumerate() {
            assert_eq!(e.spec.sources.len(), 1 + i / 30);
            for a in 0..e.spec.sources.len() {
                for b in 0..a {
                    let ang = e.spec.sources[a].angular_distance(&e.spec.sources[b]).to_degrees();
                    assert!(ang >= 15.0 - 1e-9, "{ang}");
                }
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let plan = tiny_plan();
        let a = generate_dataset(&plan).unwrap();
        let b = generate_dataset(&plan).unwrap();
        assert_eq!(a.samples.len(), 6);
        assert!(a.failures.is_empty());
        let (ma, mb) = (a.manifest(), b.manifest());
        assert_eq!(serde_json::to_string(&ma).unwrap(), serde_json::to_string(&mb).unwrap());
        for (s, e) in a.samples.iter().zip(&ma.samples) {
            assert_eq!(s.truths.len(), e.truths.len());
            assert_eq!(s.trace.detections.len(), 3);
        }
    }

    #[test]
    fn stored_traces_recompute_counts() {
        let plan = tiny_plan();
        let data = generate_dataset(&plan).unwrap();
        let analyzer = Analyzer::new(&plan).unwrap();
        let s = &data.samples[3];
        let entry = &scene_entries(&plan).unwrap()[s.index];
        let sig = entry.spec.render().unwrap();
        for beta in [0.0, 0.3, 0.6, 0.9, 1.0] {
            let params = DetectParams { mode: sslrc_core::detect::DetectMode::Unknown { beta_th: beta }, ..analyzer.params };
            let x = stft(&sig, 1024, 512).unwrap();
            let fresh = iterative_detect_srp(&cross_spectrum_phat(&x).unwrap(), &analyzer.table, &params).unwrap();
            assert_eq!(fresh.detections.len(), s.trace.estimate_count(beta));
        }
    }

    #[test]
    fn failing_scene_is_skipped() {
        let mut plan = tiny_plan();
        plan.dataset.array_center = Some([0.01, 3.0, 1.0]);
        let data = generate_dataset(&plan).unwrap();
        assert!(data.samples.is_empty());
        assert_eq!(data.failures.len(), 6);
    }
}
