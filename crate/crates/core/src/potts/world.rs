use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::WorldError;
use crate::numeric::{norm_cdf, norm_ppf};
use crate::orthant::{box_prob_equicorr, box_prob_qmc};
use crate::world::GaussianWorld;

use super::infer::{CategoricalParlay, POTTS_JOINT_CAP};

/// `τ^k = σ √T Φ⁻¹(k / K)` for `k = 1..K-1`: equiprobable categories at
/// `t = 0` when scores start at 0.
pub fn threshold_init(k: usize, sigma: f64, horizon: f64) -> Vec<f64> {
    assert!(k >= 2, "need at least two categories");
    let scale = sigma * horizon.sqrt();
    (1..k).map(|c| scale * norm_ppf(c as f64 / k as f64)).collect()
}

/// `P(a < Z ≤ b)` for standard normal `Z`, using the tail that keeps
/// precision.
fn interval_prob(a: f64, b: f64) -> f64 {
    if a > 0.0 {
        (norm_cdf(-a) - norm_cdf(-b)).max(0.0)
    } else {
        (norm_cdf(b) - norm_cdf(a)).max(0.0)
    }
}

/// Gaussian scores with ordered thresholds per market: `X_i = k` iff
/// `S_i(T) ∈ (τ_i^{k-1}, τ_i^k]`, plus an optional jump overlay.
#[derive(Debug, Clone)]
pub struct CategoricalWorld {
    pub scores: GaussianWorld,
    pub thresholds: Vec<Vec<f64>>,
    pub jump_rate: f64,
}

impl CategoricalWorld {
    /// Equicorrelated unit-volatility scores on `[0, 1]` with equiprobable
    /// thresholds.
    pub fn equiprobable(k: &[usize], rho: f64, jump_rate: f64) -> Result<Self, WorldError> {
        let scores = GaussianWorld::equicorrelated(k.len(), rho)?;
        let thresholds = k
            .iter()
            .enumerate()
            .map(|(i, &ki)| threshold_init(ki, scores.sigma[i], scores.horizon))
            .collect();
        Self::new(scores, thresholds, jump_rate)
    }

    pub fn new(scores: GaussianWorld, thresholds: Vec<Vec<f64>>, jump_rate: f64) -> Result<Self, WorldError> {
        if thresholds.len() != scores.m {
            return Err(WorldError::Dimension(format!(
                "{} threshold sets for {} markets",
                thresholds.len(),
                scores.m
            )));
        }
        if thresholds.iter().any(|t| t.is_empty() || t.windows(2).any(|w| !(w[0] < w[1]))) {
            return Err(WorldError::Config("thresholds must be nonempty and strictly increasing".into()));
        }
        if !(jump_rate >= 0.0) || !jump_rate.is_finite() {
            return Err(WorldError::Config("jump rate must be finite and nonnegative".into()));
        }
        Ok(Self {
            scores,
            thresholds,
            jump_rate,
        })
    }

    pub fn m(&self) -> usize {
        self.scores.m
    }

    pub fn k(&self) -> Vec<usize> {
        self.thresholds.iter().map(|t| t.len() + 1).collect()
    }

    /// Standardized interval `(lo, hi]` of category `c` at current scores.
    fn interval(&self, i: usize, c: usize) -> (f64, f64) {
        let tau = self.scores.remaining();
        let s = self.scores.scores[i];
        let scale = self.scores.sigma[i] * tau.sqrt();
        let t = &self.thresholds[i];
        let lo = if c == 0 { f64::NEG_INFINITY } else { (t[c - 1] - s) / scale };
        let hi = if c == t.len() { f64::INFINITY } else { (t[c] - s) / scale };
        (lo, hi)
    }

    fn resolved(&self, i: usize) -> usize {
        let s = self.scores.scores[i];
        self.thresholds[i].iter().filter(|&&t| s > t).count()
    }

    pub fn categorical_signal(&self, i: usize, c: usize) -> f64 {
        if self.scores.remaining() <= 0.0 {
            return if self.resolved(i) == c { 1.0 } else { 0.0 };
        }
        let (lo, hi) = self.interval(i, c);
        interval_prob(lo, hi)
    }

    pub fn categorical_distribution(&self, i: usize) -> Vec<f64> {
        (0..=self.thresholds[i].len()).map(|c| self.categorical_signal(i, c)).collect()
    }

    /// Rectangle probability of the parlay's category intervals, by factor
    /// quadrature under equicorrelation and QMC otherwise.
    pub fn joint_categorical_signal(&self, parlay: &CategoricalParlay) -> Result<f64, WorldError> {
        if parlay.size() > POTTS_JOINT_CAP {
            return Err(WorldError::Config(format!(
                "categorical parlays are capped at {POTTS_JOINT_CAP} legs"
            )));
        }
        if self.scores.remaining() <= 0.0 {
            let hit = parlay.legs().iter().all(|&(i, c)| self.resolved(i) == c);
            return Ok(if hit { 1.0 } else { 0.0 });
        }
        let legs = parlay.legs();
        if legs.len() == 1 {
            return Ok(self.categorical_signal(legs[0].0, legs[0].1));
        }
        let (lower, upper): (Vec<f64>, Vec<f64>) = legs.iter().map(|&(i, c)| self.interval(i, c)).unzip();
        let m = self.m();
        let r = if m > 1 { self.scores.rho[(1, 0)] } else { 0.0 };
        let equi = r >= 0.0
            && (0..m).all(|i| (0..i).all(|j| (self.scores.rho[(i, j)] - r).abs() < 1e-15));
        if equi {
            Ok(box_prob_equicorr(&lower, &upper, r))
        } else {
            let k = legs.len();
            let sub = nalgebra::DMatrix::from_fn(k, k, |a, b| self.scores.rho[(legs[a].0, legs[b].0)]);
            let chol = sub.cholesky().ok_or(WorldError::NotPositiveDefinite)?.l();
            Ok(box_prob_qmc(&lower, &upper, &chol, &self.scores.qmc).value)
        }
    }

    /// Diffusion step, then for each market a `Poisson(λ)` count of jumps,
    /// each relocating the score to a uniformly chosen threshold. With
    /// `λ = 0` no extra draws are made.
    pub fn jump_step(&mut self, dt: f64, rng: &mut impl Rng) -> usize {
        self.scores.step_scores(dt, rng);
        if self.jump_rate == 0.0 {
            return 0;
        }
        let pois = Poisson::new(self.jump_rate).expect("positive rate");
        let mut jumps = 0;
        for i in 0..self.m() {
            let n = pois.sample(rng) as usize;
            for _ in 0..n {
                let t = &self.thresholds[i];
                self.scores.scores[i] = t[rng.random_range(0..t.len())];
            }
            jumps += n;
        }
        jumps
    }

    /// Draw every market's category at the horizon.
    pub fn resolve(&self, rng: &mut impl Rng) -> Vec<usize> {
        let mut w = self.scores.clone();
        w.step_scores(w.remaining(), rng);
        (0..self.m())
            .map(|i| self.thresholds[i].iter().filter(|&&t| w.scores[i] > t).count())
            .collect()
    }
}
