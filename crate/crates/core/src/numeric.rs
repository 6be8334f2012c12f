//! Scalar probability helpers shared by every module: clamping, logistic
//! transforms, the standard normal distribution and Gauss–Hermite rules.

use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::distribution::{ContinuousCDF, Normal};

/// Probabilities are clamped into `[EPS_P, 1 - EPS_P]` before any logit or
/// division by `q (1 - q)`.
pub const EPS_P: f64 = 1e-6;

/// Number of Gauss–Hermite nodes used by the one-factor orthant quadrature.
pub const GAUSS_HERMITE_NODES: usize = 64;

/// Clamp every entry into `[EPS_P, 1 - EPS_P]` and renormalize; with two
/// entries this agrees with [`clamp_prob`] on each side.
pub fn clamp_distribution(p: &[f64]) -> Vec<f64> {
    let c: Vec<f64> = p.iter().map(|&v| clamp_prob(v)).collect();
    let z: f64 = c.iter().sum();
    c.into_iter().map(|v| v / z).collect()
}

#[inline]
pub fn clamp_prob(p: f64) -> f64 {
    p.clamp(EPS_P, 1.0 - EPS_P)
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Log-odds of a probability; callers clamp first when `p` may hit 0 or 1.
#[inline]
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Standard normal CDF.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    if x.is_infinite() {
        return if x > 0.0 { 1.0 } else { 0.0 };
    }
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Standard normal quantile.
pub fn norm_ppf(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    standard_normal().inverse_cdf(p)
}

/// Standard normal density.
#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn standard_normal() -> &'static Normal {
    static N: OnceLock<Normal> = OnceLock::new();
    N.get_or_init(|| Normal::standard())
}

/// Bernoulli cross-entropy `-p ln q - (1-p) ln(1-q)` with `q` clamped.
pub fn cross_entropy(p: f64, q: f64) -> f64 {
    let q = clamp_prob(q);
    -p * q.ln() - (1.0 - p) * (1.0 - q).ln()
}

/// Bernoulli KL divergence `KL(p || q)` in nats; both arguments clamped.
pub fn bernoulli_kl(p: f64, q: f64) -> f64 {
    let p = clamp_prob(p);
    let q = clamp_prob(q);
    (p * (p / q).ln() + (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln()).max(0.0)
}

/// Categorical KL divergence `KL(p || q)`; entries of `q` floored at `EPS_P`.
pub fn categorical_kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(pk, _)| **pk > 0.0)
        .map(|(pk, qk)| pk * (pk / qk.max(EPS_P)).ln())
        .sum::<f64>()
        .max(0.0)
}

/// Gauss–Hermite rule for expectations under `N(0, 1)`:
/// `E f(Z) ≈ Σ w_k f(z_k)` with `Σ w_k = 1`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Golub–Welsch construction from the probabilists' Hermite recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut jacobi = DMatrix::<f64>::zeros(n, n);
        for k in 1..n {
            let off = (k as f64).sqrt();
            jacobi[(k - 1, k)] = off;
            jacobi[(k, k - 1)] = off;
        }
        let eig = SymmetricEigen::new(jacobi);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|k| (eig.eigenvalues[k], eig.eigenvectors[(0, k)].powi(2)))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        // Symmetrize to remove eigen-solver asymmetry in the tails.
        for k in 0..n / 2 {
            let j = n - 1 - k;
            let z = 0.5 * (pairs[j].0 - pairs[k].0);
            let w = 0.5 * (pairs[j].1 + pairs[k].1);
            pairs[k] = (-z, w);
            pairs[j] = (z, w);
        }
        if n % 2 == 1 {
            pairs[n / 2].0 = 0.0;
        }
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        Self {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1 / total).collect(),
        }
    }

    /// Shared 64-node rule.
    pub fn standard() -> &'static GaussHermite {
        static GH: OnceLock<GaussHermite> = OnceLock::new();
        GH.get_or_init(|| GaussHermite::new(GAUSS_HERMITE_NODES))
    }

    pub fn expect(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&z, &w)| w * f(z))
            .sum()
    }
}
