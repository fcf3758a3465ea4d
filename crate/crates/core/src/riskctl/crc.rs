use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrcResult {
    pub lambda: f64,
    /// Grid position of `lambda`; `None` for the fallback.
    pub index: Option<usize>,
    /// No grid value met the condition; `lambda` is 0.
    pub fallback: bool,
    /// Empirical risk at `lambda` (0 for the fallback).
    pub empirical_risk: f64,
}

/// Largest grid `λ` with `R̂(λ) <= α - (1 - α)/n` for losses bounded by 1.
///
/// `losses[i][j]` is the loss of sample `i` at `grid[j]`.
pub fn crc_select(losses: &[Vec<f64>], grid: &[f64], alpha: f64) -> Result<CrcResult> {
    let n = losses.len();
    if n == 0 {
        return Err(Error::Contract("empty calibration set".into()));
    }
    if losses.iter().any(|l| l.len() != grid.len()) {
        return Err(Error::Shape("loss rows must match the threshold grid".into()));
    }
    let sums: Vec<f64> = (0..grid.len()).map(|j| losses.iter().map(|l| l[j]).sum()).collect();
    Ok(select(&sums, grid, alpha, n))
}

/// CRC for miscoverage losses `1{λ > c_i}` given the coverage thresholds `c_i`.
pub fn crc_select_thresholds(cover: &[f64], grid: &[f64], alpha: f64) -> Result<CrcResult> {
    let n = cover.len();
    if n == 0 {
        return Err(Error::Contract("empty calibration set".into()));
    }
    let mut sorted = cover.to_vec();
    sorted.sort_by(f64::total_cmp);
    let sums: Vec<f64> = grid.iter().map(|&l| sorted.partition_point(|&c| c < l) as f64).collect();
    Ok(select(&sums, grid, alpha, n))
}

fn select(sums: &[f64], grid: &[f64], alpha: f64, n: usize) -> CrcResult {
    // n R̂ <= n α - (1 - α)  <=>  Σ L <= (n + 1) α - 1
    let bound = (n as f64 + 1.0) * alpha - 1.0 + 1e-9;
    match (0..grid.len()).rev().find(|&j| sums[j] <= bound) {
        Some(j) => CrcResult { lambda: grid[j], index: Some(j), fallback: false, empirical_risk: sums[j] / n as f64 },
        None => CrcResult { lambda: 0.0, index: None, fallback: true, empirical_risk: 0.0 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::riskctl::linspace;
    use rand::Rng;

    #[test]
    fn all_zero_losses_pick_grid_max() {
        let grid = linspace(0.0, 1.0, 100);
        let r = crc_select(&vec![vec![0.0; 100]; 20], &grid, 0.1).unwrap();
        assert_eq!(r.lambda, 1.0);
        assert!(!r.fallback);
    }

    #[test]
    fn nine_of_hundred_allowed() {
        let grid = vec![0.0, 0.5, 1.0];
        let mk = |bad: usize| (0..100).map(|i| vec![0.0, if i < bad { 1.0 } else { 0.0 }, 1.0]).collect::<Vec<_>>();
        assert_eq!(crc_select(&mk(9), &grid, 0.1).unwrap().lambda, 0.5);
        assert_eq!(crc_select(&mk(10), &grid, 0.1).unwrap().lambda, 0.0);
    }

    #[test]
    fn fallback_and_errors() {
        let r = crc_select(&[vec![1.0, 1.0]], &[0.2, 0.4], 0.1).unwrap();
        assert!(r.fallback);
        assert_eq!(r.lambda, 0.0);
        assert!(crc_select(&[], &[0.0], 0.1).is_err());
        assert!(crc_select_thresholds(&[], &[0.0], 0.1).is_err());
    }

    #[test]
    fn brute_force_quantile_rule() {
        // Losses 1{λ > u_i}: scanning R̂ over a fine grid lands on the largest
        // grid point not above the floor((n+1)α)-th smallest u.
        let mut rng = crate::rng::rng_for(5, 0, 0);
        let grid = linspace(0.0, 1.0, 1001);
        for _ in 0..50 {
            let n = rng.random_range(20..200);
            let alpha = rng.random_range(0.05..0.3);
            let u: Vec<f64> = (0..n).map(|_| rng.random_range(0..1000) as f64 / 1000.0 + 0.0005).collect();
            let losses: Vec<Vec<f64>> = u.iter().map(|&ui| grid.iter().map(|&l| if l > ui { 1.0 } else { 0.0 }).collect()).collect();
            let mut brute = None;
            for (j, &l) in grid.iter().enumerate() {
                let risk = losses.iter().map(|x| x[j]).sum::<f64>() / n as f64;
                if risk <= alpha - (1.0 - alpha) / n as f64 {
                    brute = Some(l);
                }
            }
            let r = crc_select(&losses, &grid, alpha).unwrap();
            assert_eq!(Some(r.lambda).filter(|_| !r.fallback), brute);
            assert_eq!(crc_select_thresholds(&u, &grid, alpha).unwrap(), r);
            let m = ((n + 1) as f64 * alpha).floor() as usize;
            if m >= 1 {
                let mut s = u.clone();
                s.sort_by(f64::total_cmp);
                let q = s[m - 1];
                let want = grid.iter().copied().filter(|&l| l <= q).fold(f64::NEG_INFINITY, f64::max);
                assert_eq!(r.lambda, want);
            }
        }
    }
}
