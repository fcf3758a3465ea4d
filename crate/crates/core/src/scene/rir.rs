//! Image-source impulse responses for shoebox rooms.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::array::distance;
use super::Vec3;
use crate::error::{Error, Result};

/// Half-width of the fractional-delay kernel; the kernel has `2 * 40 + 1 = 81` taps.
pub(crate) const SINC_HALF_TAPS: i64 = 40;

/// Shoebox room with a uniform energy absorption coefficient on every wall.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Room {
    pub dims: Vec3,
    /// Maximum reflection order of the image sources.
    pub order: u32,
    /// Energy absorption per reflection, in `[0, 1)`.
    pub absorption: f64,
}

impl Room {
    pub fn validate(&self) -> Result<()> {
        if self.dims.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(Error::InvalidScene("room dimensions must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.absorption) {
            return Err(Error::InvalidScene(format!(
                "absorption {} outside [0, 1)",
                self.absorption
            )));
        }
        Ok(())
    }

    /// Strictly inside the room.
    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|i| p[i] > 0.0 && p[i] < self.dims[i])
    }

    pub fn reflection_coefficient(&self) -> f64 {
        (1.0 - self.absorption).sqrt()
    }
}

/// Sabine estimate of the reverberation time (seconds) for a given absorption.
pub fn sabine_t60(dims: Vec3, absorption: f64) -> f64 {
    let (v, s) = volume_surface(dims);
    0.161 * v / (s * absorption)
}

/// Absorption that yields reverberation time `t60` seconds under Sabine's formula.
pub fn sabine_absorption(dims: Vec3, t60: f64) -> Result<f64> {
    let (v, s) = volume_surface(dims);
    let a = 0.161 * v / (s * t60);
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::InvalidScene(format!("T60 of {t60} s is not reachable in this room")));
    }
    Ok(a)
}

fn volume_surface(d: Vec3) -> (f64, f64) {
    (d[0] * d[1] * d[2], 2.0 * (d[0] * d[1] + d[0] * d[2] + d[1] * d[2]))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageSource {
    pub position: Vec3,
    /// Total number of wall reflections along the path.
    pub reflections: u32,
}

/// All image sources whose reflection count does not exceed `order`,
/// including the direct path (zero reflections).
pub fn image_sources(room: &Room, source: Vec3, order: u32) -> Vec<ImageSource> {
    let order = order as i64;
    // Per axis: image coordinate (1 - 2q) x + 2 n L with |2n - q| reflections.
    let axis = |i: usize| -> Vec<(f64, i64)> {
        let mut v = Vec::new();
        for n in -order..=order {
            for q in 0..=1i64 {
                let r = (2 * n - q).abs();
                if r <= order {
                    let x = (1 - 2 * q) as f64 * source[i] + 2.0 * n as f64 * room.dims[i];
                    v.push((x, r));
                }
            }
        }
        v
    };
    let (ax, ay, az) = (axis(0), axis(1), axis(2));
    let mut out = Vec::new();
    for &(x, rx) in &ax {
        for &(y, ry) in &ay {
            if rx + ry > order {
                continue;
            }
            for &(z, rz) in &az {
                let r = rx + ry + rz;
                if r <= order {
                    out.push(ImageSource { position: [x, y, z], reflections: r as u32 });
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RirSettings {
    pub sample_rate: f64,
    pub speed_of_sound: f64,
    /// Longest response accepted, in samples.
    pub max_len: usize,
}

impl Default for RirSettings {
    fn default() -> Self {
        RirSettings {
            sample_rate: 16000.0,
            speed_of_sound: super::DEFAULT_SPEED_OF_SOUND,
            max_len: 1 << 18,
        }
    }
}

/// Hann-windowed sinc kernel evaluated at offset `x` samples from the pulse centre.
pub(crate) fn fractional_kernel(x: f64) -> f64 {
    let w = 0.5 * (1.0 + (PI * x / (SINC_HALF_TAPS + 1) as f64).cos());
    let s = if x.abs() < 1e-12 { 1.0 } else { (PI * x).sin() / (PI * x) };
    w * s
}

pub fn simulate_rir(room: &Room, source: Vec3, mic: Vec3, order: u32, settings: &RirSettings) -> Result<Vec<f64>> {
    room.validate()?;
    if !room.contains(&source) || !room.contains(&mic) {
        return Err(Error::InvalidScene("source or microphone outside the room".into()));
    }
    let images = image_sources(room, source, order);
    let per_sample = settings.sample_rate / settings.speed_of_sound;
    let max_delay = images
        .iter()
        .map(|im| distance(&im.position, &mic) * per_sample)
        .fold(0.0, f64::max);
    let len = max_delay.ceil() as usize + SINC_HALF_TAPS as usize + 2;
    if len > settings.max_len {
        return Err(Error::Capacity(format!(
            "impulse response needs {len} samples, cap is {}",
            settings.max_len
        )));
    }
    let beta = room.reflection_coefficient();
    let mut h = vec![0.0; len];
    for im in &images {
        let d = distance(&im.position, &mic);
        let delay = d * per_sample;
        let gain = beta.powi(im.reflections as i32) / d;
        let centre = delay.round() as i64;
        for n in (centre - SINC_HALF_TAPS).max(0)..=centre + SINC_HALF_TAPS {
            h[n as usize] += gain * fractional_kernel(n as f64 - delay);
        }
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn big_room(order: u32) -> Room {
        Room { dims: [20.0, 20.0, 20.0], order, absorption: 0.5 }
    }

    #[test]
    fn direct_path_delay_and_gain() {
        let s = RirSettings::default();
        let room = big_room(0);
        let h1 = simulate_rir(&room, [5.0, 5.0, 5.0], [6.0, 5.0, 5.0], 0, &s).unwrap();
        let h2 = simulate_rir(&room, [5.0, 5.0, 5.0], [7.0, 5.0, 5.0], 0, &s).unwrap();
        // Centroid of the pulse sits at the physical delay.
        let centroid = |h: &[f64]| {
            let tot: f64 = h.iter().sum();
            h.iter().enumerate().map(|(i, v)| i as f64 * v).sum::<f64>() / tot
        };
        assert_abs_diff_eq!(centroid(&h1), 16000.0 / 343.0, epsilon = 0.05);
        assert_abs_diff_eq!(centroid(&h2), 2.0 * 16000.0 / 343.0, epsilon = 0.05);
        // Windowed-sinc DC gain is ~1, so the tap sum tracks the 1/r amplitude.
        let s1: f64 = h1.iter().sum();
        let s2: f64 = h2.iter().sum();
        assert_abs_diff_eq!(s1, 1.0, epsilon = 5e-3);
        assert_abs_diff_eq!(s2 / s1, 0.5, epsilon = 5e-3);
        assert_eq!(h1.iter().filter(|v| **v != 0.0).count(), 81);
    }

    #[test]
    fn first_order_images_match_mirror_construction() {
        let room = Room { dims: [4.0, 5.0, 3.0], order: 1, absorption: 0.3 };
        let src = [1.0, 1.0, 1.0];
        let mic = [3.0, 4.0, 1.5];
        // Hand mirror construction across each of the six walls.
        let mut expected = vec![
            ([1.0, 1.0, 1.0], 0u32),
            ([-1.0, 1.0, 1.0], 1),
            ([7.0, 1.0, 1.0], 1),
            ([1.0, -1.0, 1.0], 1),
            ([1.0, 9.0, 1.0], 1),
            ([1.0, 1.0, -1.0], 1),
            ([1.0, 1.0, 5.0], 1),
        ];
        let mut got: Vec<(Vec3, u32)> = image_sources(&room, src, 1)
            .into_iter()
            .map(|im| (im.position, im.reflections))
            .collect();
        let key = |a: &(Vec3, u32)| (a.0[0] * 1e6 + a.0[1] * 1e3 + a.0[2]) as i64;
        expected.sort_by_key(key);
        got.sort_by_key(key);
        assert_eq!(got, expected);

        // Every image produces a pulse at distance / c in the response.
        let s = RirSettings::default();
        let h = simulate_rir(&room, src, mic, 1, &s).unwrap();
        for (p, _) in &expected {
            let delay = distance(p, &mic) * 16000.0 / 343.0;
            let n = delay.round() as usize;
            assert!(h[n].abs() > 0.02, "no energy at image delay {delay}");
        }
        // Order 0 keeps only the direct path.
        assert_eq!(image_sources(&room, src, 0).len(), 1);
        assert_eq!(image_sources(&room, src, 2).len(), 25);
    }

    #[test]
    fn errors() {
        let s = RirSettings { max_len: 500, ..RirSettings::default() };
        let room = big_room(3);
        assert!(matches!(
            simulate_rir(&room, [5.0, 5.0, 5.0], [6.0, 5.0, 5.0], 3, &s),
            Err(Error::Capacity(_))
        ));
        assert!(matches!(
            simulate_rir(&room, [25.0, 5.0, 5.0], [6.0, 5.0, 5.0], 0, &s),
            Err(Error::InvalidScene(_))
        ));
    }

    #[test]
    fn sabine_round_trip() {
        let d = [6.0, 6.0, 2.5];
        let a = sabine_absorption(d, 0.4).unwrap();
        assert_abs_diff_eq!(sabine_t60(d, a), 0.4, epsilon = 1e-12);
        assert!(sabine_absorption(d, 0.001).is_err());
    }
}
