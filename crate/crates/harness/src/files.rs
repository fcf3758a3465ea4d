//! On-disk stage artifacts: recordings with manifests, map-exchange files
//! and detection traces, all keyed by `scene_NNNNN`.

use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use sslrc_core::detect::{iterative_detect_maps, DetectionTrace, TraceSummary};
use sslrc_core::io::{read_manifest, RecordingManifest};
use sslrc_core::srp::{import_map_sequence, MapRecord, MapScale};
use sslrc_core::{Doa, Error, Result};

use crate::dataset::{scene_entries, Analyzer, Dataset, DatasetSample, SampleFailure};
use crate::plan::ExperimentPlan;

pub fn stem(index: usize) -> String {
    format!("scene_{index:05}")
}

/// Sample index of a `scene_NNNNN<suffix>` file name.
pub fn parse_stem(name: &str, suffix: &str) -> Option<usize> {
    name.strip_prefix("scene_")?.strip_suffix(suffix)?.parse().ok()
}

/// `(index, path)` of every matching file, sorted by index.
pub fn list(dir: &Path, suffix: &str) -> Result<Vec<(usize, PathBuf)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if let Some(i) = path.file_name().and_then(|n| n.to_str()).and_then(|n| parse_stem(n, suffix)) {
            out.push((i, path));
        }
    }
    out.sort();
    Ok(out)
}

/// Raw per-iteration maps of a trace as map-exchange records.
pub fn map_records(trace: &DetectionTrace, analyzer: &Analyzer) -> Vec<MapRecord> {
    trace
        .raw_maps
        .iter()
        .zip(&trace.detections)
        .enumerate()
        .map(|(k, (m, d))| MapRecord {
            grid: analyzer.grid.clone(),
            iteration: k as u32 + 1,
            peak_index: d.grid_index as u32,
            peak_value: d.raw_peak as f32,
            map: m.clone(),
        })
        .collect()
}

/// Detection over an imported map sequence.
pub fn detect_file(path: &Path, analyzer: &Analyzer) -> Result<DetectionTrace> {
    let records = import_map_sequence(path, &analyzer.grid)?;
    let maps: Vec<_> = records.into_iter().map(|r| r.map).collect();
    if maps.iter().any(|m| m.scale() == MapScale::Shifted) {
        return Err(Error::Ingest("detection expects unshifted maps".into()));
    }
    let params = sslrc_core::detect::DetectParams { k_max: maps.len().min(analyzer.params.k_max), ..analyzer.params };
    iterative_detect_maps(&maps, &analyzer.grid, &params)
}

fn load_sample(index: usize, room: usize, trace_path: &Path, maps_dir: &Path, manifest: &RecordingManifest, analyzer: &Analyzer) -> Result<DatasetSample> {
    let summary: TraceSummary = serde_json::from_str(&fs::read_to_string(trace_path)?)
        .map_err(|e| Error::Parse(format!("{}: {e}", trace_path.display())))?;
    let map_file = summary.map_file.clone().unwrap_or_else(|| format!("{}.slmx", stem(index)));
    let trace = detect_file(&maps_dir.join(map_file), analyzer)?;
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(1.0);
    let agrees = trace.detections.len() == summary.detections.len()
        && trace.detections.iter().zip(&summary.detections).all(|(d, r)| {
            d.grid_index == r.grid_index && close(d.raw_peak, r.raw_peak) && close(d.normalized_peak, r.normalized_peak)
        });
    if !agrees {
        return Err(Error::Ingest(format!("{} disagrees with its maps", trace_path.display())));
    }
    let truths = manifest.truths.iter().map(|&d| Doa::try_from(d)).collect::<Result<Vec<_>>>()?;
    Ok(DatasetSample { index, room, seed: manifest.seed, truths, trace })
}

/// Rebuild a dataset from recording manifests, map files and traces.
/// Samples missing any artifact or failing to load are reported as failures.
pub fn load_dataset(plan: &ExperimentPlan, recordings: &Path, maps: &Path, traces: &Path) -> Result<Dataset> {
    let analyzer = Analyzer::new(plan)?;
    let rooms: Vec<usize> = scene_entries(plan)?.iter().map(|e| e.room).collect();
    let mut samples = Vec::new();
    let mut failures = Vec::new();
    for (index, manifest_path) in list(recordings, ".json")? {
        let result = (|| {
            let room = *rooms.get(index).ok_or_else(|| Error::Ingest(format!("sample {index} is not part of the plan")))?;
            let manifest = read_manifest(&manifest_path)?;
            load_sample(index, room, &traces.join(format!("{}.trace.json", stem(index))), maps, &manifest, &analyzer)
        })();
        match result {
            Ok(s) => samples.push(s),
            Err(e) => {
                warn!("sample {index}: {e}");
                failures.push(SampleFailure { index, error: e.to_string() });
            }
        }
    }
    Ok(Dataset { room_labels: plan.dataset.rooms.iter().map(|r| r.t60_label()).collect(), samples, failures })
}
