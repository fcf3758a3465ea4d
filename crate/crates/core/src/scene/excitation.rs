use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Pink noise gated by a random on/off envelope, normalised to unit RMS.
///
/// The envelope starts "on"; on segments last 150-600 ms, gaps 50-250 ms,
/// with 10 ms raised-cosine ramps at every transition.
pub fn speech_like_bursts<R: Rng>(n: usize, sample_rate: f64, rng: &mut R) -> Vec<f64> {
    // Paul Kellet's economy pink filter.
    let (mut b0, mut b1, mut b2) = (0.0f64, 0.0f64, 0.0f64);
    let mut pink = Vec::with_capacity(n);
    for _ in 0..n {
        let w: f64 = StandardNormal.sample(rng);
        b0 = 0.99765 * b0 + w * 0.0990460;
        b1 = 0.96300 * b1 + w * 0.2965164;
        b2 = 0.57000 * b2 + w * 1.0526913;
        pink.push(b0 + b1 + b2 + w * 0.1848);
    }

    let ramp = ((0.01 * sample_rate) as usize).max(1);
    let mut env = vec![0.0; n];
    let mut i = 0usize;
    let mut on = true;
    while i < n {
        let dur = if on { rng.random_range(0.15..0.6) } else { rng.random_range(0.05..0.25) };
        let len = ((dur * sample_rate) as usize).max(1);
        if on {
            for j in 0..len.min(n - i) {
                let edge = j.min(len - 1 - j);
                env[i + j] = if edge < ramp {
                    0.5 * (1.0 - (PI * (edge as f64 + 0.5) / ramp as f64).cos())
                } else {
                    1.0
                };
            }
        }
        i += len;
        on = !on;
    }

    let mut out: Vec<f64> = pink.iter().zip(&env).map(|(p, e)| p * e).collect();
    let rms = (out.iter().map(|v| v * v).sum::<f64>() / n.max(1) as f64).sqrt();
    if rms > 0.0 {
        for v in out.iter_mut() {
            *v /= rms;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_rms_with_gaps() {
        let mut rng = crate::rng::rng_for(4, 0, 0);
        let x = speech_like_bursts(32000, 16000.0, &mut rng);
        let rms = (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt();
        assert!((rms - 1.0).abs() < 1e-12);
        assert!(x[0..100].iter().any(|v| *v != 0.0) || x[100..400].iter().any(|v| *v != 0.0));
        let silent = x.windows(400).any(|w| w.iter().all(|v| *v == 0.0));
        assert!(silent, "expected at least one gap in two seconds");
    }
}
