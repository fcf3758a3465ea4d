use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::riskctl::CalibrationSample;
use crate::srp::{LikelihoodMap, MapScale};

const MIN_POOLED: usize = 100;

/// Which values feed the pooled quantiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuantilePool {
    #[default]
    AllValues,
    PeaksOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftStats {
    pub q50: f64,
    pub q99: f64,
}

impl ShiftStats {
    pub fn from_values(mut values: Vec<f64>) -> Result<Self> {
        if values.len() < MIN_POOLED {
            return Err(Error::Contract(format!("need at least {MIN_POOLED} pooled values, got {}", values.len())));
        }
        let q50 = quantile(&mut values, 0.5);
        let q99 = quantile(&mut values, 0.99);
        if !(q99 > q50) {
            return Err(Error::Degenerate(format!("0.99 quantile {q99} does not exceed the median {q50}")));
        }
        Ok(ShiftStats { q50, q99 })
    }

    pub fn scale(&self) -> f64 {
        self.q99 - self.q50
    }

    pub fn apply(&self, v: f64) -> f64 {
        (v - self.q50) / self.scale()
    }

    pub fn apply_map(&self, map: &LikelihoodMap) -> LikelihoodMap {
        let values = map.values().iter().map(|&v| self.apply(v)).collect();
        LikelihoodMap::new(values, map.n_el(), map.n_az(), MapScale::Shifted).expect("affine image of a finite map")
    }
}

/// Linear-interpolation sample quantile (type 7). Reorders `values`.
pub fn quantile(values: &mut [f64], q: f64) -> f64 {
    let n = values.len();
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let (_, &mut a, rest) = values.select_nth_unstable_by(lo, f64::total_cmp);
    if lo + 1 >= n {
        return a;
    }
    let b = rest.iter().copied().fold(f64::INFINITY, f64::min);
    a + (h - lo as f64) * (b - a)
}

/// Rescale every map (and peak) of a collection by its own pooled median
/// and 0.99 quantile.
pub fn shift_normalize(samples: &[CalibrationSample], pool: QuantilePool) -> Result<(Vec<CalibrationSample>, ShiftStats)> {
    let values: Vec<f64> = match pool {
        QuantilePool::AllValues => samples.iter().flat_map(|s| s.maps.iter().flat_map(|m| m.values().iter().copied())).collect(),
        QuantilePool::PeaksOnly => samples.iter().flat_map(|s| s.peaks.iter().copied()).collect(),
    };
    let stats = ShiftStats::from_values(values)?;
    let out = samples
        .iter()
        .map(|s| CalibrationSample {
            maps: s.maps.iter().map(|m| stats.apply_map(m)).collect(),
            peaks: s.peaks.iter().map(|&v| stats.apply(v)).collect(),
            ..s.clone()
        })
        .collect();
    Ok((out, stats))
}
