//! Rectangle probabilities of a standardized multivariate normal.
//!
//! Under equicorrelation `ρ ≥ 0` the vector is `Z_i = √ρ Y + √(1-ρ) ε_i`, so
//! conditioning on the common factor `Y` makes the coordinates independent
//! and one Gauss–Hermite integral over `Y` is exact up to quadrature error.
//! General correlation matrices use Genz's separation of variables on a
//! randomly shifted rank-1 lattice.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::numeric::{norm_cdf, norm_ppf, GaussHermite};

/// `P(lower_i < Z_i ≤ upper_i for all i)` under equicorrelation `rho`.
/// Bounds may be infinite.
pub fn box_prob_equicorr(lower: &[f64], upper: &[f64], rho: f64) -> f64 {
    assert_eq!(lower.len(), upper.len());
    assert!((0.0..=1.0).contains(&rho), "factor form needs 0 <= rho <= 1");
    if lower.is_empty() {
        return 1.0;
    }
    if rho >= 1.0 {
        // All coordinates equal one standard normal.
        let lo = lower.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let hi = upper.iter().cloned().fold(f64::INFINITY, f64::min);
        return (norm_cdf(hi) - norm_cdf(lo)).max(0.0);
    }
    let a = rho.sqrt();
    let s = (1.0 - rho).sqrt();
    GaussHermite::standard().expect(|y| {
        lower
            .iter()
            .zip(upper)
            .map(|(&lo, &hi)| norm_cdf((hi - a * y) / s) - norm_cdf((lo - a * y) / s))
            .product()
    })
}

/// `P(Z_i > -d_i for all i)`: every leg of a parlay finishes in the money
/// when `d_i` is its standardized distance above threshold.
pub fn orthant_equicorr(d: &[f64], rho: f64) -> f64 {
    let lower: Vec<f64> = d.iter().map(|v| -v).collect();
    let upper = vec![f64::INFINITY; d.len()];
    box_prob_equicorr(&lower, &upper, rho)
}

/// Probability of every outcome `x ∈ {0,1}^m` where bit `i` means
/// `Z_i > -d_i`, by factor quadrature of per-bit products.
pub fn joint_table_equicorr(d: &[f64], rho: f64) -> Vec<f64> {
    let m = d.len();
    let n = 1usize << m;
    let mut table = vec![0.0; n];
    let gh = GaussHermite::standard();
    let mut cell = vec![0.0; n];
    if rho >= 1.0 {
        // Degenerate: outcome is determined by where a single Z falls.
        let mut cuts: Vec<(f64, usize)> = d.iter().enumerate().map(|(i, &v)| (-v, i)).collect();
        cuts.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut prev = f64::NEG_INFINITY;
        let mut mask = 0usize;
        for &(c, i) in &cuts {
            table[mask] += norm_cdf(c) - norm_cdf(prev);
            mask |= 1 << i;
            prev = c;
        }
        table[mask] += 1.0 - norm_cdf(prev);
        return table;
    }
    let a = rho.sqrt();
    let s = (1.0 - rho).sqrt();
    for (&y, &w) in gh.nodes.iter().zip(&gh.weights) {
        cell[0] = w;
        for (i, &di) in d.iter().enumerate() {
            let p = norm_cdf((di + a * y) / s);
            let half = 1usize << i;
            for x in 0..half {
                let base = cell[x];
                cell[x] = base * (1.0 - p);
                cell[x | half] = base * p;
            }
        }
        for (t, c) in table.iter_mut().zip(&cell) {
            *t += c;
        }
    }
    table
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QmcConfig {
    pub points_per_shift: usize,
    pub shifts: usize,
    pub seed: u64,
}

impl Default for QmcConfig {
    fn default() -> Self {
        Self {
            points_per_shift: 4096,
            shifts: 16,
            seed: 0x5EED_0B7A,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QmcEstimate {
    pub value: f64,
    pub std_err: f64,
}

const PRIMES: [f64; 24] = [
    2.0, 3.0, 5.0, 7.0, 11.0, 13.0, 17.0, 19.0, 23.0, 29.0, 31.0, 37.0, 41.0, 43.0, 47.0, 53.0,
    59.0, 61.0, 67.0, 71.0, 73.0, 79.0, 83.0, 89.0,
];

/// Genz separation-of-variables estimate of `P(lower < Z ≤ upper)` for
/// `Z ~ N(0, L Lᵀ)` with `chol` the lower Cholesky factor.
pub fn box_prob_qmc(
    lower: &[f64],
    upper: &[f64],
    chol: &DMatrix<f64>,
    cfg: &QmcConfig,
) -> QmcEstimate {
    let m = lower.len();
    assert!(m <= PRIMES.len() + 1, "QMC lattice limited to {} dims", PRIMES.len() + 1);
    if m == 0 {
        return QmcEstimate {
            value: 1.0,
            std_err: 0.0,
        };
    }
    let alpha: Vec<f64> = PRIMES[..m.saturating_sub(1)].iter().map(|p| p.sqrt().fract()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut means = Vec::with_capacity(cfg.shifts);
    let mut y = vec![0.0; m];
    for _ in 0..cfg.shifts {
        let shift: Vec<f64> = (0..alpha.len()).map(|_| rng.random::<f64>()).collect();
        let mut total = 0.0;
        for k in 1..=cfg.points_per_shift {
            let l00 = chol[(0, 0)];
            let mut d = norm_cdf(lower[0] / l00);
            let mut e = norm_cdf(upper[0] / l00);
            let mut f = e - d;
            for i in 1..m {
                let u = (k as f64 * alpha[i - 1] + shift[i - 1]).fract();
                // Tent transform periodizes the integrand.
                let w = (2.0 * u - 1.0).abs();
                let arg = (d + w * (e - d)).clamp(1e-16, 1.0 - 1e-16);
                y[i - 1] = norm_ppf(arg);
                let s: f64 = (0..i).map(|j| chol[(i, j)] * y[j]).sum();
                let lii = chol[(i, i)];
                d = norm_cdf((lower[i] - s) / lii);
                e = norm_cdf((upper[i] - s) / lii);
                f *= e - d;
                if f == 0.0 {
                    break;
                }
            }
            total += f;
        }
        means.push(total / cfg.points_per_shift as f64);
    }
    let n = means.len() as f64;
    let mean = means.iter().sum::<f64>() / n;
    let var = if means.len() > 1 {
        means.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    QmcEstimate {
        value: mean,
        std_err: (var / n).sqrt(),
    }
}

/// Exact bivariate orthant value `P(Z_1 > 0, Z_2 > 0) = 1/4 + asin(ρ)/(2π)`.
pub fn bivariate_orthant_at_zero(rho: f64) -> f64 {
    0.25 + rho.asin() / (2.0 * std::f64::consts::PI)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn equicorr_chol(m: usize, rho: f64) -> DMatrix<f64> {
        let c = DMatrix::from_fn(m, m, |i, j| if i == j { 1.0 } else { rho });
        c.cholesky().unwrap().l()
    }

    #[test]
    fn arcsine_identity() {
        let v = orthant_equicorr(&[0.0, 0.0], 0.3);
        assert!((v - bivariate_orthant_at_zero(0.3)).abs() < 1e-12);
        assert!((v - 0.298_493_4).abs() < 1e-7);
    }

    #[test]
    fn independent_legs_multiply() {
        let v = orthant_equicorr(&[0.3, -0.7, 1.1], 0.0);
        let p: f64 = [0.3, -0.7, 1.1].iter().map(|&d| norm_cdf(d)).product();
        assert!((v - p).abs() < 1e-14);
    }

    #[test]
    fn table_sums_to_one_and_marginalizes() {
        let d = [0.2, -0.4, 0.9, 0.0];
        let t = joint_table_equicorr(&d, 0.3);
        assert!((t.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let both: f64 = t.iter().enumerate().filter(|(x, _)| x & 0b0101 == 0b0101).map(|p| p.1).sum();
        assert!((both - orthant_equicorr(&[0.2, 0.9], 0.3)).abs() < 1e-12);
    }

    #[test]
    fn comonotone_limit() {
        let d = [0.5, -0.2];
        let v = orthant_equicorr(&d, 1.0);
        assert!((v - norm_cdf(-0.2)).abs() < 1e-15);
        let t = joint_table_equicorr(&d, 1.0);
        assert!((t[0b11] - v).abs() < 1e-15);
        assert!((t.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(t[0b10], 0.0);
    }

    #[test]
    fn qmc_agrees_with_quadrature() {
        let d = [0.3, -0.2, 0.5, 0.1];
        let lower: Vec<f64> = d.iter().map(|v| -v).collect();
        let upper = vec![f64::INFINITY; 4];
        let q = box_prob_qmc(&lower, &upper, &equicorr_chol(4, 0.3), &QmcConfig::default());
        let exact = orthant_equicorr(&d, 0.3);
        assert!((q.value - exact).abs() < 3.0 * q.std_err.max(1e-7), "{q:?} vs {exact}");
        assert!(q.std_err < 1e-4);
    }

    #[test]
    fn finite_box_matches_difference_of_cdfs() {
        let v = box_prob_equicorr(&[-0.5], &[0.7], 0.3);
        assert!((v - (norm_cdf(0.7) - norm_cdf(-0.5))).abs() < 1e-14);
    }
}
