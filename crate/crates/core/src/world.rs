//! Ground truth: correlated arithmetic Brownian scores, each event being
//! `X_i = 1[S_i(T) > K_i]`, plus the trader population that reads signals
//! off the scores.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::engine::MarketId;
use crate::error::WorldError;
use crate::ising::{JointTable, Mask, MomentVector, EXACT_CUTOFF};
use crate::numeric::{clamp_prob, norm_cdf, EPS_P};
use crate::orthant::{box_prob_qmc, joint_table_equicorr, orthant_equicorr, QmcConfig, QmcEstimate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorldMode {
    /// Scores frozen at `t = 0`; the true joint law never moves.
    Static,
    /// Scores diffuse between rounds toward the horizon.
    Dynamic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    /// Signal computed at scores perturbed by `N(0, σ_i² (T - t))`.
    ScorePerturbation,
    /// A uniformly random price.
    UniformPrice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraderKind {
    Informed,
    Noise,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraderArrival {
    pub market: MarketId,
    pub kind: TraderKind,
    pub target: f64,
}

/// How an orthant probability was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OrthantMethod {
    FactorQuadrature,
    Qmc { std_err: f64 },
    /// At the horizon: outcome already determined.
    Resolved,
}

#[derive(Debug, Clone)]
pub struct GaussianWorld {
    pub m: usize,
    pub sigma: Vec<f64>,
    pub rho: DMatrix<f64>,
    pub thresholds: Vec<f64>,
    pub horizon: f64,
    pub scores: Vec<f64>,
    pub t: f64,
    pub qmc: QmcConfig,
    chol: DMatrix<f64>,
    equicorr: Option<f64>,
}

impl GaussianWorld {
    /// Unit volatilities, zero thresholds and scores, equicorrelation `rho`,
    /// horizon 1.
    pub fn equicorrelated(m: usize, rho: f64) -> Result<Self, WorldError> {
        let corr = DMatrix::from_fn(m, m, |i, j| if i == j { 1.0 } else { rho });
        Self::new(vec![1.0; m], corr, vec![0.0; m], 1.0)
    }

    pub fn new(
        sigma: Vec<f64>,
        rho: DMatrix<f64>,
        thresholds: Vec<f64>,
        horizon: f64,
    ) -> Result<Self, WorldError> {
        let m = sigma.len();
        if rho.nrows() != m || rho.ncols() != m || thresholds.len() != m {
            return Err(WorldError::Dimension(format!(
                "sigma {m}, rho {}x{}, thresholds {}",
                rho.nrows(),
                rho.ncols(),
                thresholds.len()
            )));
        }
        if sigma.iter().any(|s| !(*s > 0.0)) || !(horizon > 0.0) {
            return Err(WorldError::Config("volatilities and horizon must be positive".into()));
        }
        for i in 0..m {
            if (rho[(i, i)] - 1.0).abs() > 1e-12 {
                return Err(WorldError::Config("correlation diagonal must be 1".into()));
            }
            for j in 0..i {
                if (rho[(i, j)] - rho[(j, i)]).abs() > 1e-12 {
                    return Err(WorldError::Config("correlation must be symmetric".into()));
                }
            }
        }
        let chol = rho
            .clone()
            .cholesky()
            .ok_or(WorldError::NotPositiveDefinite)?
            .l();
        let equicorr = if m < 2 {
            Some(0.0)
        } else {
            let r = rho[(1, 0)];
            let same = (0..m).all(|i| (0..i).all(|j| (rho[(i, j)] - r).abs() < 1e-15));
            (same && r >= 0.0).then_some(r)
        };
        Ok(Self {
            m,
            sigma,
            rho,
            thresholds,
            horizon,
            scores: vec![0.0; m],
            t: 0.0,
            qmc: QmcConfig::default(),
            chol,
            equicorr,
        })
    }

    pub fn with_scores(mut self, scores: Vec<f64>) -> Self {
        assert_eq!(scores.len(), self.m);
        self.scores = scores;
        self
    }

    pub fn remaining(&self) -> f64 {
        (self.horizon - self.t).max(0.0)
    }

    pub fn cholesky(&self) -> &DMatrix<f64> {
        &self.chol
    }

    /// `S ← S + diag(σ) L ξ √dt`.
    pub fn step_scores(&mut self, dt: f64, rng: &mut impl Rng) {
        let dt = dt.min(self.remaining());
        if dt <= 0.0 {
            return;
        }
        let xi: Vec<f64> = (0..self.m).map(|_| rng.sample(StandardNormal)).collect();
        let sq = dt.sqrt();
        for i in 0..self.m {
            let z: f64 = (0..=i).map(|j| self.chol[(i, j)] * xi[j]).sum();
            self.scores[i] += self.sigma[i] * z * sq;
        }
        self.t += dt;
    }

    /// Standardized distance above threshold, `(S_i - K_i) / (σ_i √(T - t))`.
    fn distance(&self, scores: &[f64], i: usize) -> f64 {
        let tau = self.remaining();
        (scores[i] - self.thresholds[i]) / (self.sigma[i] * tau.sqrt())
    }

    pub fn base_signal(&self, i: usize) -> f64 {
        self.base_signal_at(&self.scores, i)
    }

    fn base_signal_at(&self, scores: &[f64], i: usize) -> f64 {
        if self.remaining() <= 0.0 {
            return if scores[i] > self.thresholds[i] { 1.0 } else { 0.0 };
        }
        norm_cdf(self.distance(scores, i))
    }

    pub fn parlay_signal(&self, id: MarketId) -> f64 {
        self.parlay_signal_at(&self.scores, id).0
    }

    pub fn parlay_signal_detailed(&self, id: MarketId) -> (f64, OrthantMethod) {
        self.parlay_signal_at(&self.scores, id)
    }

    fn parlay_signal_at(&self, scores: &[f64], id: MarketId) -> (f64, OrthantMethod) {
        let legs: Vec<usize> = id.legs().collect();
        if self.remaining() <= 0.0 {
            let all = legs.iter().all(|&i| scores[i] > self.thresholds[i]);
            return (if all { 1.0 } else { 0.0 }, OrthantMethod::Resolved);
        }
        if legs.len() == 1 {
            return (self.base_signal_at(scores, legs[0]), OrthantMethod::FactorQuadrature);
        }
        let d: Vec<f64> = legs.iter().map(|&i| self.distance(scores, i)).collect();
        match self.equicorr {
            Some(r) => (orthant_equicorr(&d, r), OrthantMethod::FactorQuadrature),
            None => {
                let est = self.qmc_orthant(&legs, &d);
                (est.value, OrthantMethod::Qmc { std_err: est.std_err })
            }
        }
    }

    fn qmc_orthant(&self, legs: &[usize], d: &[f64]) -> QmcEstimate {
        let k = legs.len();
        let sub = DMatrix::from_fn(k, k, |a, b| self.rho[(legs[a], legs[b])]);
        let chol = sub.cholesky().expect("principal minor of a PD matrix").l();
        let lower: Vec<f64> = d.iter().map(|v| -v).collect();
        box_prob_qmc(&lower, &vec![f64::INFINITY; k], &chol, &self.qmc)
    }

    /// Orthant probability by QMC regardless of the correlation structure.
    pub fn parlay_signal_qmc(&self, id: MarketId) -> QmcEstimate {
        let legs: Vec<usize> = id.legs().collect();
        let d: Vec<f64> = legs.iter().map(|&i| self.distance(&self.scores, i)).collect();
        self.qmc_orthant(&legs, &d)
    }

    /// Signal read at perturbed scores (or a uniform draw), clamped.
    pub fn noisy_signal(&self, id: MarketId, model: NoiseModel, rng: &mut impl Rng) -> f64 {
        match model {
            NoiseModel::UniformPrice => clamp_prob(rng.random::<f64>()),
            NoiseModel::ScorePerturbation => {
                let tau = self.remaining();
                let perturbed: Vec<f64> = (0..self.m)
                    .map(|i| {
                        let e: f64 = rng.sample(StandardNormal);
                        self.scores[i] + self.sigma[i] * tau.sqrt() * e
                    })
                    .collect();
                clamp_prob(self.parlay_signal_at(&perturbed, id).0)
            }
        }
    }

    /// Probability of every outcome at the current state.
    pub fn true_joint(&self) -> Result<JointTable, WorldError> {
        if self.m > EXACT_CUTOFF {
            return Err(WorldError::Dimension(format!(
                "true joint needs m <= {EXACT_CUTOFF}, got {}",
                self.m
            )));
        }
        let n = 1usize << self.m;
        if self.remaining() <= 0.0 {
            let mut probs = vec![0.0; n];
            probs[self.resolve_now() as usize] = 1.0;
            return Ok(JointTable::new(self.m, probs).expect("size checked"));
        }
        let d: Vec<f64> = (0..self.m).map(|i| self.distance(&self.scores, i)).collect();
        let probs = match self.equicorr {
            Some(r) => joint_table_equicorr(&d, r),
            None => {
                // Möbius inversion of all intersection probabilities.
                let mut f = vec![1.0; n];
                for (s, v) in f.iter_mut().enumerate().skip(1) {
                    let id = MarketId::new(s as Mask).expect("nonzero");
                    *v = self.parlay_signal_at(&self.scores, id).0;
                }
                for i in 0..self.m {
                    let bit = 1usize << i;
                    for s in 0..n {
                        if s & bit == 0 {
                            f[s] -= f[s | bit];
                        }
                    }
                }
                for v in f.iter_mut() {
                    *v = v.max(0.0);
                }
                let z: f64 = f.iter().sum();
                f.iter_mut().for_each(|v| *v /= z);
                f
            }
        };
        Ok(JointTable::new(self.m, probs).expect("size checked"))
    }

    /// True singleton and pair probabilities, floored into the interior.
    pub fn true_moments(&self) -> Result<MomentVector, WorldError> {
        let mut mv = self.true_joint()?.moments();
        for p in mv.p_single.iter_mut().chain(mv.p_pair.iter_mut()) {
            *p = p.clamp(EPS_P, 1.0 - EPS_P);
        }
        Ok(mv)
    }

    /// Uniform market choice; informed with probability `1 - alpha`.
    pub fn sample_arrival(
        &self,
        family: &[MarketId],
        alpha: f64,
        noise: NoiseModel,
        rng: &mut impl Rng,
    ) -> TraderArrival {
        assert!(!family.is_empty(), "empty market family");
        let market = family[rng.random_range(0..family.len())];
        let informed = rng.random::<f64>() >= alpha;
        if informed {
            TraderArrival {
                market,
                kind: TraderKind::Informed,
                target: clamp_prob(self.parlay_signal(market)),
            }
        } else {
            TraderArrival {
                market,
                kind: TraderKind::Noise,
                target: self.noisy_signal(market, noise, rng),
            }
        }
    }

    fn resolve_now(&self) -> Mask {
        (0..self.m)
            .filter(|&i| self.scores[i] > self.thresholds[i])
            .fold(0, |acc, i| acc | (1 << i))
    }

    /// Draw `S_T | S_t` in one step and threshold it.
    pub fn resolve(&self, rng: &mut impl Rng) -> Mask {
        let mut w = self.clone();
        let tau = w.remaining();
        w.step_scores(tau, rng);
        w.resolve_now()
    }
}
