use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapScale {
    Raw,
    Normalized,
    /// Affinely rescaled by pooled quantiles; not confined to [0, 1].
    Shifted,
}

/// Likelihood values over a `DoaGrid`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodMap {
    values: Vec<f64>,
    n_el: usize,
    n_az: usize,
    scale: MapScale,
}

impl LikelihoodMap {
    pub fn new(values: Vec<f64>, n_el: usize, n_az: usize, scale: MapScale) -> Result<Self> {
        if values.len() != n_el * n_az || values.is_empty() {
            return Err(Error::Shape(format!("map has {} values, grid {}x{}", values.len(), n_el, n_az)));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Shape("map contains non-finite values".into()));
        }
        Ok(LikelihoodMap { values, n_el, n_az, scale })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn get(&self, index: usize) -> f64 {
        self.values[index]
    }
    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
    pub fn n_el(&self) -> usize {
        self.n_el
    }
    pub fn n_az(&self) -> usize {
        self.n_az
    }
    pub fn scale(&self) -> MapScale {
        self.scale
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of the largest value among feasible nodes, lowest index on ties.
    pub fn argmax(&self, feasible: Option<&[bool]>) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &v) in self.values.iter().enumerate() {
            if feasible.is_some_and(|f| !f[i]) {
                continue;
            }
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
        best.map(|(i, _)| i)
    }
}

/// Min-max normalisation onto [0, 1]. A constant map becomes all zeros.
pub fn normalize_map(map: &LikelihoodMap) -> LikelihoodMap {
    let (lo, hi) = (map.min(), map.max());
    let span = hi - lo;
    let values = if span > 0.0 {
        map.values.iter().map(|v| (v - lo) / span).collect()
    } else {
        vec![0.0; map.len()]
    };
    LikelihoodMap { values, n_el: map.n_el, n_az: map.n_az, scale: MapScale::Normalized }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn argmax_ties_and_mask() {
        let m = LikelihoodMap::new(vec![1.0, 3.0, 3.0, 2.0], 2, 2, MapScale::Raw).unwrap();
        assert_eq!(m.argmax(None), Some(1));
        assert_eq!(m.argmax(Some(&[true, false, true, true])), Some(2));
        assert_eq!(m.argmax(Some(&[false; 4])), None);
    }

    #[test]
    fn constant_map_normalises_to_zero() {
        let m = LikelihoodMap::new(vec![0.4; 6], 2, 3, MapScale::Raw).unwrap();
        assert!(normalize_map(&m).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(LikelihoodMap::new(vec![1.0; 5], 2, 3, MapScale::Raw).is_err());
        assert!(LikelihoodMap::new(vec![1.0, f64::NAN], 1, 2, MapScale::Raw).is_err());
    }

    proptest! {
        #[test]
        fn normalisation_properties(v in prop::collection::vec(-5.0f64..5.0, 12)) {
            let m = LikelihoodMap::new(v, 3, 4, MapScale::Raw).unwrap();
            let n = normalize_map(&m);
            prop_assert!(n.values().iter().all(|&x| (0.0..=1.0).contains(&x)));
            prop_assert_eq!(n.argmax(None), m.argmax(None));
            if m.max() > m.min() {
                prop_assert_eq!(n.max(), 1.0);
                prop_assert_eq!(n.min(), 0.0);
            }
            let again = normalize_map(&n);
            prop_assert_eq!(again.values(), n.values());
        }
    }
}
