use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `n` evenly spaced values from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n).map(|i| if i == n - 1 { b } else { a + (b - a) * i as f64 / (n - 1) as f64 }).collect(),
    }
}

/// Region thresholds `λ_1..λ_K` and, in unknown-count mode, a detection threshold `β`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigVector {
    pub lambdas: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

/// Product grid over a shared per-dimension axis. Indices are mixed radix
/// with `λ_1` most significant and `β` (if present) last, so index order is
/// lexicographic order of the configuration vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigGrid {
    axis: Vec<f64>,
    n_lambda: usize,
    with_beta: bool,
}

impl ConfigGrid {
    pub fn new(axis: Vec<f64>, n_lambda: usize, with_beta: bool) -> Result<Self> {
        if axis.is_empty() || n_lambda == 0 {
            return Err(Error::Contract("configuration grid needs at least one value and one threshold".into()));
        }
        if axis.iter().any(|v| !v.is_finite()) || axis.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Contract("grid axis must be finite and strictly increasing".into()));
        }
        let dims = n_lambda + with_beta as usize;
        if axis.len().checked_pow(dims as u32).is_none_or(|n| n > 1 << 28) {
            return Err(Error::Capacity("configuration grid too large".into()));
        }
        Ok(ConfigGrid { axis, n_lambda, with_beta })
    }

    /// `linspace(0, 1, n)` per dimension: `k_max` thresholds plus `β`.
    pub fn unknown(n: usize, k_max: usize) -> Result<Self> {
        ConfigGrid::new(linspace(0.0, 1.0, n), k_max, true)
    }

    /// `linspace(0, 1, n)` per dimension for `k` region thresholds.
    pub fn known(n: usize, k: usize) -> Result<Self> {
        ConfigGrid::new(linspace(0.0, 1.0, n), k, false)
    }

    pub fn axis(&self) -> &[f64] {
        &self.axis
    }
    pub fn n_lambda(&self) -> usize {
        self.n_lambda
    }
    pub fn with_beta(&self) -> bool {
        self.with_beta
    }
    pub fn dims(&self) -> usize {
        self.n_lambda + self.with_beta as usize
    }
    pub fn len(&self) -> usize {
        self.axis.len().pow(self.dims() as u32)
    }
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Per-dimension axis positions of configuration `index`.
    pub fn digits(&self, index: usize) -> Vec<usize> {
        let n = self.axis.len();
        let mut d = vec![0; self.dims()];
        let mut rest = index;
        for slot in d.iter_mut().rev() {
            *slot = rest % n;
            rest /= n;
        }
        d
    }

    pub fn index_of(&self, digits: &[usize]) -> usize {
        digits.iter().fold(0, |acc, &d| acc * self.axis.len() + d)
    }

    pub fn config(&self, index: usize) -> ConfigVector {
        let d = self.digits(index);
        ConfigVector {
            lambdas: d[..self.n_lambda].iter().map(|&i| self.axis[i]).collect(),
            beta: self.with_beta.then(|| self.axis[d[self.n_lambda]]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linspace_endpoints() {
        let v = linspace(0.0, 1.0, 15);
        assert_eq!(v.len(), 15);
        assert_eq!((v[0], v[14]), (0.0, 1.0));
        assert!((v[7] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn mixed_radix_is_lexicographic() {
        let g = ConfigGrid::unknown(3, 2).unwrap();
        assert_eq!(g.len(), 27);
        let all: Vec<Vec<usize>> = (0..g.len()).map(|i| g.digits(i)).collect();
        let mut sorted = all.clone();
        sorted.sort();
        assert_eq!(all, sorted);
        for i in 0..g.len() {
            assert_eq!(g.index_of(&g.digits(i)), i);
        }
        let c = g.config(5);
        assert_eq!(c.lambdas, vec![0.0, 0.5]);
        assert_eq!(c.beta, Some(1.0));
        assert_eq!(ConfigGrid::unknown(15, 3).unwrap().len(), 50625);
    }

    #[test]
    fn rejects_bad_axes() {
        assert!(ConfigGrid::new(vec![0.0, 0.0], 1, false).is_err());
        assert!(ConfigGrid::new(vec![], 1, false).is_err());
    }
}
