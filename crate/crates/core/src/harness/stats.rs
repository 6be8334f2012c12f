use serde::Serialize;

use crate::error::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiskMetrics {
    pub mean: f64,
    pub var95: f64,
    pub cvar95: f64,
}

/// Mean, empirical 95% VaR (lower-rank order statistic
/// `x_(⌈0.95 n⌉)`) and the mean of all samples at or above it.
pub fn risk_metrics(losses: &[f64]) -> Result<RiskMetrics, HarnessError> {
    if losses.is_empty() {
        return Err(HarnessError::EmptySample);
    }
    let mut sorted = losses.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let rank = ((0.95 * n as f64).ceil() as usize).clamp(1, n);
    let var95 = sorted[rank - 1];
    let tail = &sorted[sorted.partition_point(|&x| x < var95)..];
    // Every tail sample is >= var95; the max only absorbs summation rounding.
    let cvar95 = (tail.iter().sum::<f64>() / tail.len() as f64).max(var95);
    Ok(RiskMetrics {
        mean: losses.iter().sum::<f64>() / n as f64,
        var95,
        cvar95,
    })
}

/// One-sided exact sign test that paired differences are positive.
/// Ties are dropped; returns `P(Bin(n, 1/2) ≥ #positive)`.
pub fn sign_test_greater(diffs: &[f64]) -> f64 {
    let pos = diffs.iter().filter(|&&d| d > 0.0).count();
    let n = pos + diffs.iter().filter(|&&d| d < 0.0).count();
    if n == 0 {
        return 1.0;
    }
    let ln_half_n = n as f64 * 0.5f64.ln();
    let ln_choose = |k: usize| {
        libm::lgamma(n as f64 + 1.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0)
    };
    (pos..=n)
        .map(|k| (ln_choose(k) + ln_half_n).exp())
        .sum::<f64>()
        .min(1.0)
}
