use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;

use super::rir::simulate_rir;
use super::{MultichannelSignal, SceneSpec};
use crate::error::{Error, Result};

/// Linear convolution of `a` and `b`, truncated (or zero-padded) to `out_len`.
pub fn fft_convolve(a: &[f64], b: &[f64], out_len: usize) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return vec![0.0; out_len];
    }
    let nfft = (a.len() + b.len() - 1).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(nfft);
    let inv = planner.plan_fft_inverse(nfft);
    let mut fa = padded(a, nfft);
    let mut fb = padded(b, nfft);
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    inv.process(&mut fa);
    let scale = 1.0 / nfft as f64;
    (0..out_len)
        .map(|i| if i < nfft { fa[i].re * scale } else { 0.0 })
        .collect()
}

fn padded(x: &[f64], n: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    for (d, s) in v.iter_mut().zip(x) {
        d.re = *s;
    }
    v
}

/// Render every microphone channel as the sum over sources of the source
/// signal convolved with the source-to-microphone impulse response.
pub fn synthesize_scene(scene: &SceneSpec, source_signals: &[Vec<f64>]) -> Result<MultichannelSignal> {
    scene.validate()?;
    if source_signals.len() != scene.sources.len() {
        return Err(Error::Shape(format!(
            "{} source signals for {} sources",
            source_signals.len(),
            scene.sources.len()
        )));
    }
    let len = source_signals[0].len();
    if source_signals.iter().any(|s| s.len() != len) {
        return Err(Error::Shape("source signals have unequal lengths".into()));
    }
    let out_len = scene.num_samples();
    let mics = scene.mic_positions();
    let settings = scene.rir_settings();

    // rirs[k][m]
    let mut rirs = Vec::with_capacity(source_signals.len());
    for k in 0..source_signals.len() {
        let src = scene.source_position(k);
        let per_mic = mics
            .iter()
            .map(|m| simulate_rir(&scene.room, src, *m, scene.room.order, &settings))
            .collect::<Result<Vec<_>>>()?;
        rirs.push(per_mic);
    }
    let max_rir = rirs.iter().flatten().map(Vec::len).max().unwrap_or(1);
    let nfft = (len + max_rir).next_power_of_two().max(2);

    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(nfft);
    let inv = planner.plan_fft_inverse(nfft);
    let src_spectra: Vec<Vec<Complex64>> = source_signals
        .iter()
        .map(|s| {
            let mut v = padded(s, nfft);
            fwd.process(&mut v);
            v
        })
        .collect();

    let mut channels = Vec::with_capacity(mics.len());
    for m in 0..mics.len() {
        let mut acc = vec![Complex64::new(0.0, 0.0); nfft];
        for (k, spec) in src_spectra.iter().enumerate() {
            let mut h = padded(&rirs[k][m], nfft);
            fwd.process(&mut h);
            for ((a, x), y) in acc.iter_mut().zip(spec).zip(&h) {
                *a += x * y;
            }
        }
        inv.process(&mut acc);
        let scale = 1.0 / nfft as f64;
        channels.push(
            (0..out_len)
                .map(|i| if i < nfft { acc[i].re * scale } else { 0.0 })
                .collect(),
        );
    }
    MultichannelSignal::new(channels, scene.sample_rate)
}

/// Add independent white Gaussian noise to every channel. The noise
/// variance is the mean per-channel signal power divided by `10^(snr/10)`;
/// `snr_db = +inf` returns the input unchanged.
pub fn add_noise(signal: &MultichannelSignal, snr_db: f64, seed: u64) -> Result<MultichannelSignal> {
    if snr_db.is_nan() {
        return Err(Error::Contract("SNR is NaN".into()));
    }
    let power = signal.mean_power();
    if !(power > 0.0) {
        return Err(Error::UndefinedSnr);
    }
    if snr_db == f64::INFINITY {
        return Ok(signal.clone());
    }
    let sigma = (power / 10f64.powf(snr_db / 10.0)).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let channels = signal
        .channels()
        .iter()
        .map(|c| {
            c.iter()
                .map(|v| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    v + sigma * z
                })
                .collect()
        })
        .collect();
    MultichannelSignal::new(channels, signal.sample_rate())
}
