//! Per-sample losses evaluated directly from maps and regions, and the
//! equivalent table lookups on precomputed curves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regions::{covers, grow_region};
use crate::riskctl::{CalibrationSample, ConfigVector, SampleCurves};
use crate::srp::DoaGrid;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Losses {
    pub mc: f64,
    pub md: f64,
    pub fa: f64,
    pub pa: f64,
}

fn beta_of(config: &ConfigVector) -> Result<f64> {
    config.beta.ok_or_else(|| Error::Contract("configuration has no detection threshold".into()))
}

/// `1{p*_k ∉ C_λ(p̂_k)}` for the `k`-th matched pair (0-based).
pub fn loss_mc_known(sample: &CalibrationSample, grid: &DoaGrid, k: usize, lambda: f64) -> Result<f64> {
    let matched = sample.matching(grid);
    let &(d, t) = matched
        .pairs
        .get(k)
        .ok_or_else(|| Error::Contract(format!("source {} has no matched detection", k + 1)))?;
    let region = grow_region(&sample.maps[d], grid, sample.detections[d], lambda);
    Ok(if covers(&region, grid, &sample.truths[t]) { 0.0 } else { 1.0 })
}

pub fn loss_md(sample: &CalibrationSample, config: &ConfigVector) -> Result<f64> {
    let khat = sample.estimate_count(beta_of(config)?);
    Ok(sample.k_true().saturating_sub(khat) as f64)
}

pub fn loss_fa(sample: &CalibrationSample, config: &ConfigVector) -> Result<f64> {
    let khat = sample.estimate_count(beta_of(config)?);
    Ok(khat.saturating_sub(sample.k_true()) as f64)
}

/// Misses among the first `min(K, K̂)` matched detections.
pub fn loss_mc_unknown(sample: &CalibrationSample, grid: &DoaGrid, config: &ConfigVector) -> Result<f64> {
    let khat = sample.estimate_count(beta_of(config)?);
    let n = khat.min(sample.k_true());
    check_lambdas(config, n)?;
    let mut total = 0.0;
    for k in 0..n {
        total += loss_mc_known(sample, grid, k, config.lambdas[k])?;
    }
    Ok(total)
}

/// Mean area fraction of the `K̂` regions; 0 when nothing is detected.
pub fn loss_pa(sample: &CalibrationSample, grid: &DoaGrid, config: &ConfigVector) -> Result<f64> {
    let khat = sample.estimate_count(beta_of(config)?);
    check_lambdas(config, khat)?;
    if khat == 0 {
        return Ok(0.0);
    }
    let g = grid.len() as f64;
    let mut total = 0.0;
    for k in 0..khat {
        total += grow_region(&sample.maps[k], grid, sample.detections[k], config.lambdas[k]).len() as f64 / g;
    }
    Ok(total / khat as f64)
}

fn check_lambdas(config: &ConfigVector, n: usize) -> Result<()> {
    if config.lambdas.len() < n {
        return Err(Error::Contract(format!("{} region thresholds for {} detections", config.lambdas.len(), n)));
    }
    Ok(())
}

impl SampleCurves {
    /// Unknown-count losses at axis positions `digits` (`λ_1..λ_Kmax, β`).
    pub fn losses_unknown(&self, digits: &[usize]) -> Losses {
        let (lam, beta) = digits.split_at(digits.len() - 1);
        let khat = self.khat(beta[0]);
        let k = self.k_true();
        let mut mc = 0.0;
        for (i, &d) in lam.iter().enumerate().take(khat.min(k)) {
            if self.miss(i, d) {
                mc += 1.0;
            }
        }
        let pa = if khat == 0 {
            0.0
        } else {
            let mut total = 0.0;
            for (i, &d) in lam.iter().enumerate().take(khat) {
                total += self.area(i, d);
            }
            total / khat as f64
        };
        Losses { mc, md: k.saturating_sub(khat) as f64, fa: khat.saturating_sub(k) as f64, pa }
    }

    /// Known-count losses over `K` thresholds: misses summed over sources
    /// (an absent detection counts as a miss) and mean region area.
    pub fn losses_known(&self, digits: &[usize]) -> Losses {
        let k = digits.len();
        let mut mc = 0.0;
        let mut area = 0.0;
        for (i, &d) in digits.iter().enumerate() {
            if i >= self.n_pairs() || self.miss(i, d) {
                mc += 1.0;
            }
            if i < self.n_detections() {
                area += self.area(i, d);
            }
        }
        Losses { mc, md: 0.0, fa: 0.0, pa: area / k as f64 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::riskctl::{ConfigGrid, SampleField};
    use crate::srp::{LikelihoodMap, MapScale};
    use rand::Rng;

    fn random_sample(rng: &mut impl Rng, grid: &DoaGrid, k_true: usize, n_det: usize) -> CalibrationSample {
        let mut maps = Vec::new();
        let mut dets = Vec::new();
        let mut peaks: Vec<f64> = Vec::new();
        for _ in 0..n_det {
            let v: Vec<f64> = (0..grid.len()).map(|_| rng.random_range(0..8) as f64 / 7.0).collect();
            let d = rng.random_range(0..grid.len());
            peaks.push(v[d]);
            dets.push(d);
            maps.push(LikelihoodMap::new(v, grid.n_el(), grid.n_az(), MapScale::Normalized).unwrap());
        }
        let truths = (0..k_true).map(|_| grid.doa(rng.random_range(0..grid.len()))).collect();
        CalibrationSample::new(maps, dets, peaks, truths).unwrap()
    }

    fn one_peak_sample(peaks: Vec<f64>, k_true: usize) -> CalibrationSample {
        let grid = DoaGrid::with_step(30.0).unwrap();
        let n = peaks.len();
        let maps = (0..n).map(|_| LikelihoodMap::new(vec![0.5; grid.len()], 6, 12, MapScale::Normalized).unwrap()).collect();
        let truths = (0..k_true).map(|i| grid.doa(i * 14)).collect();
        CalibrationSample::new(maps, (0..n).map(|i| i * 14).collect(), peaks, truths).unwrap()
    }

    fn cfg(l: &[f64], b: f64) -> ConfigVector {
        ConfigVector { lambdas: l.to_vec(), beta: Some(b) }
    }

    #[test]
    fn count_losses() {
        let s = one_peak_sample(vec![0.9, 0.5, 0.2], 3);
        assert_eq!(loss_md(&s, &cfg(&[0.0; 3], 0.4)).unwrap(), 1.0);
        assert_eq!(loss_fa(&s, &cfg(&[0.0; 3], 0.4)).unwrap(), 0.0);
        let s = one_peak_sample(vec![0.9, 0.8, 0.7], 2);
        assert_eq!(loss_fa(&s, &cfg(&[0.0; 3], 0.1)).unwrap(), 1.0);
        assert_eq!(loss_fa(&s, &cfg(&[0.0; 3], 1.01)).unwrap(), 0.0);
        assert_eq!(loss_md(&s, &cfg(&[0.0; 3], 1.01)).unwrap(), 2.0);
    }

    #[test]
    fn region_losses() {
        let grid = DoaGrid::with_step(30.0).unwrap();
        let s = one_peak_sample(vec![0.9, 0.8], 2);
        assert_eq!(loss_mc_known(&s, &grid, 0, 0.0).unwrap(), 0.0);
        let mut far = s.clone();
        far.truths = vec![grid.doa(40), grid.doa(60)];
        assert_eq!(loss_mc_known(&far, &grid, 0, 1.5).unwrap(), 1.0);
        assert_eq!(loss_mc_unknown(&far, &grid, &cfg(&[0.0, 0.0], 0.5)).unwrap(), 0.0);
        assert_eq!(loss_mc_unknown(&far, &grid, &cfg(&[1.5, 1.5], 0.5)).unwrap(), 2.0);
        assert_eq!(loss_mc_unknown(&far, &grid, &cfg(&[1.5, 1.5], 0.95)).unwrap(), 0.0);
        assert_eq!(loss_pa(&s, &grid, &cfg(&[0.0, 1.5], 0.95)).unwrap(), 0.0);
        assert_eq!(loss_pa(&s, &grid, &cfg(&[0.0, 1.5], 0.85)).unwrap(), 1.0);
        let pa = loss_pa(&s, &grid, &cfg(&[0.0, 1.5], 0.5)).unwrap();
        assert!((pa - (1.0 + 1.0 / 72.0) / 2.0).abs() < 1e-15);
        assert!(loss_mc_known(&s, &grid, 2, 0.0).is_err());
    }

    #[test]
    fn mc_unknown_counts_only_true_detections() {
        // K = 2, three detections; first matched pair covered, second missed.
        let grid = DoaGrid::with_step(30.0).unwrap();
        let mut s = one_peak_sample(vec![0.9, 0.8, 0.7], 2);
        s.truths = vec![grid.doa(0), grid.doa(47)];
        let mut v = vec![0.0; grid.len()];
        v[0] = 1.0;
        v[1] = 1.0;
        s.maps[0] = LikelihoodMap::new(v, 6, 12, MapScale::Normalized).unwrap();
        s.detections[0] = 1;
        let l = loss_mc_unknown(&s, &grid, &cfg(&[0.9, 0.9, 0.9], 0.5)).unwrap();
        assert_eq!(l, 1.0);
    }

    #[test]
    fn curves_are_bit_identical_to_direct() {
        let grid = DoaGrid::with_step(30.0).unwrap();
        let cg = ConfigGrid::unknown(5, 3).unwrap();
        let mut rng = crate::rng::rng_for(9, 0, 0);
        for _ in 0..40 {
            let k = rng.random_range(1..4);
            let n = rng.random_range(0..4);
            let s = random_sample(&mut rng, &grid, k, n);
            let curves = SampleCurves::from_sample(&s, &grid, cg.axis()).unwrap();
            for idx in (0..cg.len()).step_by(7) {
                let c = cg.config(idx);
                let fast = curves.losses_unknown(&cg.digits(idx));
                assert_eq!(fast.mc.to_bits(), loss_mc_unknown(&s, &grid, &c).unwrap().to_bits());
                assert_eq!(fast.md.to_bits(), loss_md(&s, &c).unwrap().to_bits());
                assert_eq!(fast.fa.to_bits(), loss_fa(&s, &c).unwrap().to_bits());
                assert_eq!(fast.pa.to_bits(), loss_pa(&s, &grid, &c).unwrap().to_bits());
            }
        }
    }

    #[test]
    fn affine_field_matches_transformed_maps() {
        let grid = DoaGrid::with_step(30.0).unwrap();
        let axis = crate::riskctl::linspace(-1.0, 2.0, 13);
        let mut rng = crate::rng::rng_for(10, 0, 0);
        for _ in 0..20 {
            let s = random_sample(&mut rng, &grid, 2, 3);
            let (off, scale) = (0.3, 0.45);
            let mut t = s.clone();
            t.maps = s
                .maps
                .iter()
                .map(|m| LikelihoodMap::new(m.values().iter().map(|v| (v - off) / scale).collect(), 6, 12, MapScale::Shifted).unwrap())
                .collect();
            t.peaks = s.peaks.iter().map(|v| (v - off) / scale).collect();
            let a = SampleCurves::new(&SampleField::new(&s, &grid).unwrap().affine(off, scale), &axis);
            let b = SampleCurves::from_sample(&t, &grid, &axis).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn monotonicity() {
        let grid = DoaGrid::with_step(30.0).unwrap();
        let cg = ConfigGrid::unknown(6, 2).unwrap();
        let mut rng = crate::rng::rng_for(12, 0, 0);
        for _ in 0..30 {
            let k = rng.random_range(1..3);
            let s = random_sample(&mut rng, &grid, k, 2);
            let c = SampleCurves::from_sample(&s, &grid, cg.axis()).unwrap();
            for l1 in 0..6 {
                for l2 in 0..6 {
                    for b in 0..5 {
                        let lo = c.losses_unknown(&[l1, l2, b]);
                        let hi = c.losses_unknown(&[l1, l2, b + 1]);
                        assert!(hi.md >= lo.md && hi.fa <= lo.fa && c.khat(b + 1) <= c.khat(b));
                        if l2 < 5 {
                            assert!(c.losses_unknown(&[l1, l2 + 1, b]).mc >= c.losses_unknown(&[l1, l2, b]).mc);
                        }
                    }
                }
            }
        }
    }
}
