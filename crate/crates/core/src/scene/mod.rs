//! Acoustic scene simulation: rectangular rooms, image-source impulse
//! responses, multichannel rendering and additive noise.

mod array;
mod excitation;
mod file;
mod rir;
mod signal;
mod synth;

pub use array::MicArrayGeometry;
pub use excitation::speech_like_bursts;
pub use file::{parse_array_str, parse_scene_str, read_scene_file};
pub use rir::{image_sources, sabine_absorption, sabine_t60, simulate_rir, ImageSource, Room, RirSettings};
pub use signal::MultichannelSignal;
pub use synth::{add_noise, fft_convolve, synthesize_scene};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::doa::{circular_distance, Doa};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_for};

pub type Vec3 = [f64; 3];

pub const DEFAULT_SPEED_OF_SOUND: f64 = 343.0;
pub const DEFAULT_SOURCE_RANGE: f64 = 1.5;
pub const DEFAULT_MIN_SEPARATION_DEG: f64 = 15.0;

const STREAM_EXCITATION: u64 = 0x5ec1;
const STREAM_NOISE: u64 = 0x401e;

/// Everything needed to render one scene deterministically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub room: Room,
    /// Reverberation label in milliseconds, for reports only.
    pub t60_label_ms: Option<f64>,
    pub array_center: Vec3,
    pub array: MicArrayGeometry,
    pub sources: Vec<Doa>,
    pub source_range: f64,
    /// `None` renders a clean (noise-free) scene.
    pub snr_db: Option<f64>,
    pub sample_rate: u32,
    pub duration: f64,
    pub seed: u64,
    pub k_max: usize,
    pub min_separation_deg: f64,
    pub speed_of_sound: f64,
}

impl SceneSpec {
    pub fn num_samples(&self) -> usize {
        (self.duration * self.sample_rate as f64).round() as usize
    }

    pub fn rir_settings(&self) -> RirSettings {
        RirSettings {
            sample_rate: self.sample_rate as f64,
            speed_of_sound: self.speed_of_sound,
            ..RirSettings::default()
        }
    }

    pub fn mic_positions(&self) -> Vec<Vec3> {
        self.array.translated(self.array_center)
    }

    pub fn source_position(&self, k: usize) -> Vec3 {
        let u = self.sources[k].unit_vector();
        let c = self.array_center;
        [
            c[0] + self.source_range * u[0],
            c[1] + self.source_range * u[1],
            c[2] + self.source_range * u[2],
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.sources.len();
        if k == 0 || k > self.k_max {
            return Err(Error::InvalidScene(format!(
                "source count {k} outside 1..={}",
                self.k_max
            )));
        }
        if self.sample_rate == 0 || !(self.duration > 0.0) || !self.duration.is_finite() {
            return Err(Error::InvalidScene("sample rate and duration must be positive".into()));
        }
        if !(self.source_range > 0.0) || !(self.speed_of_sound > 0.0) {
            return Err(Error::InvalidScene("range and speed of sound must be positive".into()));
        }
        if let Some(snr) = self.snr_db {
            if snr.is_nan() {
                return Err(Error::InvalidScene("SNR is NaN".into()));
            }
        }
        for i in 0..k {
            for j in 0..i {
                if !separated(&self.sources[i], &self.sources[j], self.min_separation_deg) {
                    return Err(Error::InvalidScene(format!(
                        "sources {j} and {i} closer than {} degrees",
                        self.min_separation_deg
                    )));
                }
            }
        }
        self.room.validate()?;
        for (m, p) in self.mic_positions().iter().enumerate() {
            if !self.room.contains(p) {
                return Err(Error::InvalidScene(format!("microphone {m} outside the room")));
            }
        }
        for s in 0..k {
            if !self.room.contains(&self.source_position(s)) {
                return Err(Error::InvalidScene(format!("source {s} outside the room")));
            }
        }
        Ok(())
    }

    /// Render with seeded speech-like excitation and noise.
    pub fn render(&self) -> Result<MultichannelSignal> {
        self.validate()?;
        let n = self.num_samples();
        let fs = self.sample_rate as f64;
        let excitations: Vec<Vec<f64>> = (0..self.sources.len())
            .map(|k| {
                let mut rng = rng_for(self.seed, STREAM_EXCITATION, k as u64);
                speech_like_bursts(n, fs, &mut rng)
            })
            .collect();
        let clean = synthesize_scene(self, &excitations)?;
        match self.snr_db {
            Some(snr) => add_noise(&clean, snr, derive_seed(self.seed, STREAM_NOISE, 0)),
            None => Ok(clean),
        }
    }
}

/// The separation rule used for scene generation: both the elevation gap
/// and the circular azimuth gap must reach `min_deg`.
pub fn separated(a: &Doa, b: &Doa, min_deg: f64) -> bool {
    let min = min_deg.to_radians() - 1e-12;
    (a.elevation - b.elevation).abs() >= min && circular_distance(a.azimuth, b.azimuth) >= min
}

/// Draw `k` directions uniformly on the spherical band with elevation in
/// `el_range_deg`, rejecting draws that violate [`separated`].
pub fn random_doas<R: Rng>(rng: &mut R, k: usize, min_sep_deg: f64, el_range_deg: [f64; 2]) -> Result<Vec<Doa>> {
    let (lo, hi) = (el_range_deg[0].to_radians(), el_range_deg[1].to_radians());
    if !(0.0..=std::f64::consts::PI).contains(&lo) || !(lo..=std::f64::consts::PI).contains(&hi) {
        return Err(Error::InvalidScene("bad elevation range".into()));
    }
    let (c_hi, c_lo) = (lo.cos(), hi.cos());
    'restart: for _ in 0..1000 {
        let mut out: Vec<Doa> = Vec::with_capacity(k);
        while out.len() < k {
            let mut placed = false;
            for _ in 0..1000 {
                let z: f64 = rng.random_range(c_lo..=c_hi);
                let az: f64 = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
                let cand = Doa::new(z.clamp(-1.0, 1.0).acos(), az)?;
                if out.iter().all(|d| separated(d, &cand, min_sep_deg)) {
                    out.push(cand);
                    placed = true;
                    break;
                }
            }
            if !placed {
                continue 'restart;
            }
        }
        return Ok(out);
    }
    Err(Error::InvalidScene(format!("cannot place {k} sources {min_sep_deg} degrees apart")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_for;

    pub(crate) fn desk_scene(sources: Vec<Doa>) -> SceneSpec {
        SceneSpec {
            room: Room { dims: [6.0, 6.0, 2.5], order: 1, absorption: 0.6 },
            t60_label_ms: None,
            array_center: [3.0, 3.0, 1.25],
            array: MicArrayGeometry::icosahedron(0.06),
            sources,
            source_range: 1.5,
            snr_db: Some(15.0),
            sample_rate: 16000,
            duration: 0.25,
            seed: 3,
            k_max: 3,
            min_separation_deg: 15.0,
            speed_of_sound: 343.0,
        }
    }

    #[test]
    fn random_doas_respect_separation() {
        let mut rng = rng_for(1, 2, 3);
        for _ in 0..200 {
            let d = random_doas(&mut rng, 3, 15.0, [40.0, 140.0]).unwrap();
            for i in 0..3 {
                assert!(d[i].elevation.to_degrees() >= 40.0 - 1e-9);
                assert!(d[i].elevation.to_degrees() <= 140.0 + 1e-9);
                for j in 0..i {
                    assert!(d[i].angular_distance(&d[j]).to_degrees() >= 15.0 - 1e-9);
                }
            }
        }
    }

    #[test]
    fn validate_catches_bad_scenes() {
        let a = Doa::from_degrees(90.0, 0.0).unwrap();
        let b = Doa::from_degrees(95.0, 60.0).unwrap();
        assert!(matches!(desk_scene(vec![a, b]).validate(), Err(Error::InvalidScene(_))));
        assert!(desk_scene(vec![]).validate().is_err());
        let mut s = desk_scene(vec![a]);
        s.source_range = 5.0;
        assert!(s.validate().is_err());
        assert!(desk_scene(vec![a]).validate().is_ok());
    }

    #[test]
    fn render_is_deterministic() {
        let s = desk_scene(vec![Doa::from_degrees(80.0, 30.0).unwrap()]);
        let a = s.render().unwrap();
        let b = s.render().unwrap();
        assert_eq!(a, b);
        assert_eq!(a.num_channels(), 12);
        assert_eq!(a.len(), 4000);
    }
}
