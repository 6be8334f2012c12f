use serde::{Deserialize, Serialize};

use crate::baselines::ModelKind;
use crate::engine::{Family, TradeMode};
use crate::error::HarnessError;
use crate::world::{NoiseModel, WorldMode};

/// One experiment, read from a single JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub m_values: Vec<usize>,
    pub rho: f64,
    pub b: f64,
    pub eta_theta: f64,
    pub eta_w: f64,
    pub alpha: f64,
    pub runs: usize,
    pub rounds: usize,
    pub world_mode: WorldMode,
    pub family: Family,
    pub noise_model: NoiseModel,
    pub model: ModelKind,
    pub seed: u64,
    /// Models compared side by side in ablations; defaults to every kind.
    #[serde(default = "all_models")]
    pub models: Vec<ModelKind>,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default)]
    pub trade_mode: TradeModeConfig,
    /// Fit `log ℓ_M` linearly in `m` and report larger `m` by extrapolation.
    #[serde(default)]
    pub extrapolate_to: Vec<usize>,
    #[serde(default)]
    pub projection_radius: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TradeModeConfig {
    #[default]
    FillToPrice,
    FixedSize { shares: f64 },
}

impl From<TradeModeConfig> for TradeMode {
    fn from(c: TradeModeConfig) -> Self {
        match c {
            TradeModeConfig::FillToPrice => TradeMode::FillToPrice,
            TradeModeConfig::FixedSize { shares } => TradeMode::FixedSize(shares),
        }
    }
}

fn all_models() -> Vec<ModelKind> {
    ModelKind::ALL.to_vec()
}

fn default_alphas() -> Vec<f64> {
    vec![0.0, 0.25, 0.5, 0.75, 1.0]
}

impl Default for ExperimentConfig {
    /// Complete-family scaling run: equicorrelation 0.3, unit liquidity,
    /// steps 0.2, 100 runs.
    fn default() -> Self {
        Self {
            m_values: vec![4, 5, 6],
            rho: 0.3,
            b: 1.0,
            eta_theta: 0.2,
            eta_w: 0.2,
            alpha: 0.0,
            runs: 100,
            rounds: crate::harness::DEFAULT_ROUNDS,
            world_mode: WorldMode::Static,
            family: Family::Complete,
            noise_model: NoiseModel::ScorePerturbation,
            model: ModelKind::ParlayAmm,
            seed: 20_240_601,
            models: all_models(),
            alphas: default_alphas(),
            trade_mode: TradeModeConfig::FillToPrice,
            extrapolate_to: Vec::new(),
            projection_radius: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: &str| Err(HarnessError::Config(msg.to_string()));
        if self.runs == 0 {
            return bad("runs must be at least 1");
        }
        if self.rounds == 0 {
            return bad("rounds must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad("alpha must lie in [0, 1]");
        }
        if self.alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return bad("every alpha must lie in [0, 1]");
        }
        if !(self.b > 0.0) {
            return bad("b must be positive");
        }
        if !(self.eta_theta > 0.0 && self.eta_w >= 0.0) {
            return bad("step sizes must be positive");
        }
        if !(0.0..1.0).contains(&self.rho) {
            return bad("rho must lie in [0, 1)");
        }
        if self.m_values.is_empty() || self.m_values.iter().any(|&m| m == 0 || m > 14) {
            return bad("m_values must be nonempty and within 1..=14");
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, HarnessError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
