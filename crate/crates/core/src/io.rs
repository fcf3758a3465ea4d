//! Multichannel WAV files and their JSON ground-truth manifests.

use std::io::{Cursor, Read, Seek};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::doa::DoaDegrees;
use crate::error::{Error, Result};
use crate::scene::MultichannelSignal;

const MAX_WAV_SAMPLES: usize = 1 << 28;

/// Written next to every simulated recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordingManifest {
    pub wav: String,
    pub sample_rate: u32,
    pub channels: usize,
    pub seed: u64,
    pub truths: Vec<DoaDegrees>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t60_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
}

/// 32-bit float WAV, interleaved.
pub fn write_wav(path: &Path, signal: &MultichannelSignal) -> Result<()> {
    let spec = hound::WavSpec {
        channels: signal.num_channels() as u16,
        sample_rate: signal.sample_rate(),
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let mut w = hound::WavWriter::create(path, spec).map_err(wav_err)?;
    for t in 0..signal.len() {
        for c in signal.channels() {
            w.write_sample(c[t] as f32).map_err(wav_err)?;
        }
    }
    w.finalize().map_err(wav_err)
}

fn wav_err(e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => Error::Io(io),
        other => Error::Parse(format!("wav: {other}")),
    }
}

fn read_from<R: Read + Seek>(reader: R) -> Result<MultichannelSignal> {
    let mut rd = hound::WavReader::new(reader).map_err(wav_err)?;
    let spec = rd.spec();
    let n_ch = spec.channels as usize;
    if n_ch == 0 {
        return Err(Error::Parse("wav has no channels".into()));
    }
    if rd.len() as usize > MAX_WAV_SAMPLES {
        return Err(Error::Capacity("wav too long".into()));
    }
    let samples: Vec<f64> = match spec.sample_format {
        hound::SampleFormat::Float => rd.samples::<f32>().map(|s| s.map(f64::from)).collect::<std::result::Result<_, _>>(),
        hound::SampleFormat::Int => {
            let full = (1i64 << (spec.bits_per_sample.clamp(1, 32) - 1)) as f64;
            rd.samples::<i32>().map(|s| s.map(|v| v as f64 / full)).collect::<std::result::Result<_, _>>()
        }
    }
    .map_err(wav_err)?;
    if samples.len() % n_ch != 0 {
        return Err(Error::Parse("wav has a partial frame".into()));
    }
    let len = samples.len() / n_ch;
    let channels = (0..n_ch).map(|c| (0..len).map(|t| samples[t * n_ch + c]).collect()).collect();
    MultichannelSignal::new(channels, spec.sample_rate).map_err(|e| Error::Parse(e.to_string()))
}

pub fn read_wav(path: &Path) -> Result<MultichannelSignal> {
    read_from(std::io::BufReader::new(std::fs::File::open(path)?))
}

pub fn decode_wav(bytes: &[u8]) -> Result<MultichannelSignal> {
    read_from(Cursor::new(bytes))
}

pub fn write_manifest(path: &Path, manifest: &RecordingManifest) -> Result<()> {
    let text = serde_json::to_string_pretty(manifest).map_err(|e| Error::Parse(e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn parse_manifest(text: &str) -> Result<RecordingManifest> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("manifest: {e}")))
}

pub fn read_manifest(path: &Path) -> Result<RecordingManifest> {
    parse_manifest(&std::fs::read_to_string(path)?)
}
