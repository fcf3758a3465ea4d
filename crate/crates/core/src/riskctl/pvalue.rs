use crate::error::{Error, Result};

/// Betting-martingale p-value for `H: E[L] > α` with losses in `[lower, upper]`.
///
/// Running mean `μ̂_i = (1/2 + Σ_{j<=i} L_j)/(1+i)`, variance
/// `σ̂²_i = (1/4 + Σ_{j<=i} (L_j - μ̂_j)²)/(1+i)`, bet
/// `ν_i = min{1/(B-A), sqrt(2 ln(1/δ) / (n σ̂²_{i-1}))}`, capital
/// `K_i = Π_{t<=i} (1 - ν_t (L_t - α))`, `p = min(1, min_i 1/K_i)`.
pub fn wsr_pvalue(losses: &[f64], alpha: f64, delta: f64, lower: f64, upper: f64) -> Result<f64> {
    let n = losses.len();
    if n == 0 {
        return Err(Error::Contract("WSR p-value needs at least one loss".into()));
    }
    if !(lower < upper) || !(alpha > lower && alpha < upper) {
        return Err(Error::Contract(format!("need A < α < B, got A={lower}, α={alpha}, B={upper}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Contract(format!("δ must lie in (0, 1), got {delta}")));
    }
    if let Some(l) = losses.iter().find(|l| !(**l >= lower && **l <= upper)) {
        return Err(Error::Contract(format!("loss {l} outside [{lower}, {upper}]")));
    }
    let max_bet = 1.0 / (upper - lower);
    let log_term = 2.0 * (1.0 / delta).ln() / n as f64;
    let mut sum = 0.0;
    let mut sq = 0.0;
    let mut var_prev = 0.25;
    let mut log_capital = 0.0f64;
    let mut best = 0.0f64;
    for (i, &l) in losses.iter().enumerate() {
        let i1 = (i + 1) as f64;
        let nu = max_bet.min((log_term / var_prev).sqrt());
        log_capital += (1.0 - nu * (l - alpha)).ln();
        best = best.max(log_capital);
        sum += l;
        let mu = (0.5 + sum) / (1.0 + i1);
        sq += (l - mu) * (l - mu);
        var_prev = (0.25 + sq) / (1.0 + i1);
    }
    Ok((-best).exp().min(1.0))
}

/// `P(Bin(n, α) <= Σ L)` for binary losses.
pub fn binomial_pvalue(losses: &[f64], alpha: f64) -> Result<f64> {
    if let Some(l) = losses.iter().find(|&&l| l != 0.0 && l != 1.0) {
        return Err(Error::Contract(format!("binomial p-value needs binary losses, got {l}")));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Contract(format!("α must lie in [0, 1], got {alpha}")));
    }
    let n = losses.len();
    let s = losses.iter().filter(|&&l| l == 1.0).count();
    if s == n || alpha == 0.0 {
        return Ok(1.0);
    }
    if alpha == 1.0 {
        return Ok(0.0);
    }
    // Log-space pmf recursion, then a stable sum.
    let (la, lb) = (alpha.ln(), (1.0 - alpha).ln());
    let mut log_pmf = n as f64 * lb;
    let mut terms = Vec::with_capacity(s + 1);
    for j in 0..=s {
        terms.push(log_pmf);
        log_pmf += ((n - j) as f64 / (j + 1) as f64).ln() + la - lb;
    }
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((m.exp() * terms.iter().map(|t| (t - m).exp()).sum::<f64>()).min(1.0))
}

/// Larger of the two WSR p-values for miscoverage and misdetection, both
/// bounded by `upper`.
pub fn aggregate_pvalue(mc: &[f64], md: &[f64], alpha_mc: f64, alpha_md: f64, delta: f64, upper: f64) -> Result<f64> {
    Ok(wsr_pvalue(mc, alpha_mc, delta, 0.0, upper)?.max(wsr_pvalue(md, alpha_md, delta, 0.0, upper)?))
}
