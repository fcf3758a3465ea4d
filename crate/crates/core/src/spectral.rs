//! Short-time Fourier analysis and phase-transformed cross-spectra.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::scene::MultichannelSignal;

/// Guard below which `|X_m X_m'^*|` is treated as zero.
pub const PHAT_EPSILON: f64 = 1e-12;

/// One-sided STFT coefficients, indexed `(channel, frame, bin)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StftTensor {
    data: Vec<Complex64>,
    n_channels: usize,
    n_frames: usize,
    n_bins: usize,
    window_len: usize,
    hop: usize,
    sample_rate: f64,
}

impl StftTensor {
    pub fn n_channels(&self) -> usize {
        self.n_channels
    }
    pub fn n_frames(&self) -> usize {
        self.n_frames
    }
    pub fn n_bins(&self) -> usize {
        self.n_bins
    }
    pub fn window_len(&self) -> usize {
        self.window_len
    }
    pub fn hop(&self) -> usize {
        self.hop
    }
    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }
    /// Spacing between bins in Hz.
    pub fn bin_hz(&self) -> f64 {
        self.sample_rate / self.window_len as f64
    }

    pub fn get(&self, m: usize, t: usize, f: usize) -> Complex64 {
        self.data[(m * self.n_frames + t) * self.n_bins + f]
    }

    /// Bins of channel `m`, frame `t`.
    pub fn frame(&self, m: usize, t: usize) -> &[Complex64] {
        let start = (m * self.n_frames + t) * self.n_bins;
        &self.data[start..start + self.n_bins]
    }
}

/// Periodic Hann window.
pub fn hann(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
        .collect()
}

/// Hann-windowed one-sided STFT with `floor((N - window) / hop) + 1` frames
/// and `window / 2 + 1` bins.
pub fn stft(signal: &MultichannelSignal, window_len: usize, hop: usize) -> Result<StftTensor> {
    if window_len < 2 || window_len % 2 != 0 {
        return Err(Error::Shape(format!("window length {window_len} must be even and >= 2")));
    }
    if hop == 0 {
        return Err(Error::Shape("hop must be positive".into()));
    }
    let n = signal.len();
    if n < window_len {
        return Err(Error::Shape(format!("signal of {n} samples is shorter than one window")));
    }
    let n_frames = (n - window_len) / hop + 1;
    let n_bins = window_len / 2 + 1;
    let win = hann(window_len);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(window_len);
    let mut data = Vec::with_capacity(signal.num_channels() * n_frames * n_bins);
    let mut buf = vec![Complex64::new(0.0, 0.0); window_len];
    for ch in signal.channels() {
        for t in 0..n_frames {
            let off = t * hop;
            for (i, b) in buf.iter_mut().enumerate() {
                *b = Complex64::new(ch[off + i] * win[i], 0.0);
            }
            fft.process(&mut buf);
            data.extend_from_slice(&buf[..n_bins]);
        }
    }
    Ok(StftTensor {
        data,
        n_channels: signal.num_channels(),
        n_frames,
        n_bins,
        window_len,
        hop,
        sample_rate: signal.sample_rate() as f64,
    })
}

/// Phase transform of a single cross-product, zero below [`PHAT_EPSILON`].
pub fn phat(xm: Complex64, xn: Complex64) -> Complex64 {
    let c = xm * xn.conj();
    let mag = c.norm();
    if mag < PHAT_EPSILON {
        Complex64::new(0.0, 0.0)
    } else {
        c / mag
    }
}

/// Unordered microphone pairs `(m, m')` with `m' > m`, in row order.
pub fn mic_pairs(m: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::with_capacity(m * m.saturating_sub(1) / 2);
    for a in 0..m {
        for b in a + 1..m {
            v.push((a, b));
        }
    }
    v
}

/// `Ψ_{mm'}(t, f)` for every unordered pair, indexed `(pair, frame, bin)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairCrossSpectrum {
    pairs: Vec<(usize, usize)>,
    n_frames: usize,
    n_bins: usize,
    bin_hz: f64,
    data: Vec<Complex64>,
}

impl PairCrossSpectrum {
    pub fn from_parts(pairs: Vec<(usize, usize)>, n_frames: usize, n_bins: usize, bin_hz: f64, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != pairs.len() * n_frames * n_bins {
            return Err(Error::Shape("cross-spectrum data size mismatch".into()));
        }
        Ok(PairCrossSpectrum { pairs, n_frames, n_bins, bin_hz, data })
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }
    pub fn n_frames(&self) -> usize {
        self.n_frames
    }
    pub fn n_bins(&self) -> usize {
        self.n_bins
    }
    pub fn bin_hz(&self) -> f64 {
        self.bin_hz
    }
    /// Angular frequency `ω_f = 2π f_hz` of bin `f`.
    pub fn omega(&self, f: usize) -> f64 {
        2.0 * PI * f as f64 * self.bin_hz
    }
    pub fn get(&self, pair: usize, t: usize, f: usize) -> Complex64 {
        self.data[(pair * self.n_frames + t) * self.n_bins + f]
    }
    pub(crate) fn get_mut(&mut self, pair: usize, t: usize, f: usize) -> &mut Complex64 {
        &mut self.data[(pair * self.n_frames + t) * self.n_bins + f]
    }
    pub fn values(&self) -> &[Complex64] {
        &self.data
    }
}

pub fn cross_spectrum_phat(x: &StftTensor) -> Result<PairCrossSpectrum> {
    if x.n_channels < 2 {
        return Err(Error::Shape("cross-spectra need at least two channels".into()));
    }
    let pairs = mic_pairs(x.n_channels);
    let mut data = Vec::with_capacity(pairs.len() * x.n_frames * x.n_bins);
    for &(a, b) in &pairs {
        for t in 0..x.n_frames {
            let (fa, fb) = (x.frame(a, t), x.frame(b, t));
            data.extend(fa.iter().zip(fb).map(|(u, v)| phat(*u, *v)));
        }
    }
    PairCrossSpectrum::from_parts(pairs, x.n_frames, x.n_bins, x.bin_hz(), data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn sig(ch: Vec<Vec<f64>>) -> MultichannelSignal {
        MultichannelSignal::new(ch, 16000).unwrap()
    }

    #[test]
    fn frame_count() {
        let x = stft(&sig(vec![vec![0.0; 1024]]), 512, 256).unwrap();
        assert_eq!(x.n_frames(), 3);
        assert_eq!(x.n_bins(), 257);
        assert!(x.data.iter().all(|c| c.norm() == 0.0));
        assert!(matches!(stft(&sig(vec![vec![0.0; 100]]), 512, 256), Err(Error::Shape(_))));
        assert!(stft(&sig(vec![vec![0.0; 1000]]), 511, 256).is_err());
    }

    #[test]
    fn bin_centred_tone() {
        // Direct DFT of the Hann-windowed tone as the oracle.
        let (n, k0) = (512usize, 40usize);
        let x: Vec<f64> = (0..2048).map(|i| (2.0 * PI * k0 as f64 * i as f64 / n as f64).cos()).collect();
        let s = stft(&sig(vec![x.clone()]), n, n / 2).unwrap();
        let w = hann(n);
        for t in 0..s.n_frames() {
            let frame = s.frame(0, t);
            let mut total = 0.0;
            for (k, c) in frame.iter().enumerate() {
                let mut re = 0.0;
                let mut im = 0.0;
                for i in 0..n {
                    let ph = -2.0 * PI * (k * i) as f64 / n as f64;
                    re += x[t * n / 2 + i] * w[i] * ph.cos();
                    im += x[t * n / 2 + i] * w[i] * ph.sin();
                }
                assert_abs_diff_eq!(c.re, re, epsilon = 1e-8);
                assert_abs_diff_eq!(c.im, im, epsilon = 1e-8);
                total += c.norm_sqr();
            }
            let centre = frame[k0].norm_sqr() / total;
            let lobe = (frame[k0 - 1].norm_sqr() + frame[k0].norm_sqr() + frame[k0 + 1].norm_sqr()) / total;
            // Hann main lobe: 4:1:1 energy split across the centre and its neighbours.
            assert_abs_diff_eq!(centre, 2.0 / 3.0, epsilon = 1e-9);
            assert!(lobe > 0.999_999);
        }
    }

    #[test]
    fn phat_identities() {
        let mut rng = crate::rng::rng_for(3, 0, 0);
        let ch: Vec<f64> = (0..2048).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = stft(&sig(vec![ch.clone(), ch]), 512, 256).unwrap();
        let psi = cross_spectrum_phat(&x).unwrap();
        for c in psi.values() {
            if c.norm() > 0.0 {
                assert_abs_diff_eq!(c.re, 1.0, epsilon = 1e-12);
                assert_abs_diff_eq!(c.im, 0.0, epsilon = 1e-12);
            }
        }
        assert!(cross_spectrum_phat(&stft(&sig(vec![vec![1.0; 600]]), 512, 256).unwrap()).is_err());
    }

    #[test]
    fn pure_delay_phase() {
        let tau = 3.7e-4;
        for f in [1usize, 10, 100] {
            let w = 2.0 * PI * f as f64 * 31.25;
            let xm = Complex64::from_polar(2.0, 0.3);
            let xn = xm * Complex64::from_polar(1.0, -w * tau);
            let p = phat(xm, xn);
            let want = Complex64::from_polar(1.0, w * tau);
            assert_abs_diff_eq!(p.re, want.re, epsilon = 1e-12);
            assert_abs_diff_eq!(p.im, want.im, epsilon = 1e-12);
        }
        assert_eq!(phat(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)), Complex64::new(0.0, 0.0));
    }

    proptest! {
        #[test]
        fn unit_modulus_and_conjugate_symmetry(a in -5.0..5.0f64, b in -5.0..5.0f64, c in -5.0..5.0f64, d in -5.0..5.0f64) {
            let (u, v) = (Complex64::new(a, b), Complex64::new(c, d));
            let p = phat(u, v);
            let q = phat(v, u);
            if (u * v.conj()).norm() >= PHAT_EPSILON {
                prop_assert!((p.norm() - 1.0).abs() < 1e-12);
            }
            prop_assert!((p - q.conj()).norm() < 1e-12);
        }

        #[test]
        fn stft_is_linear(scale in -4.0..4.0f64, seed in 0u64..1000) {
            let mut rng = crate::rng::rng_for(seed, 0, 0);
            let ch: Vec<f64> = (0..1024).map(|_| rng.random_range(-1.0..1.0)).collect();
            let scaled: Vec<f64> = ch.iter().map(|v| v * scale).collect();
            let x = stft(&sig(vec![ch]), 256, 128).unwrap();
            let y = stft(&sig(vec![scaled]), 256, 128).unwrap();
            for (p, q) in x.data.iter().zip(&y.data) {
                prop_assert!((p * scale - q).norm() < 1e-9);
            }
        }
    }
}
