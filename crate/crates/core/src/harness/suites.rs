use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::ModelKind;
use crate::engine::Family;
use crate::error::HarnessError;

use super::output::{fmt_sig10, CsvTable};
use super::sim::{simulate, static_phi_star, RunSpec, RunTrace, Tracking};
use super::stats::{risk_metrics, sign_test_greater};
use super::ExperimentConfig;

/// One row of the per-market loss table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRow {
    pub m: usize,
    pub n_markets: usize,
    /// `ℓ_M`: mean loss per round per listed market.
    pub mean_loss: f64,
    /// `ℓ_{M+1} / ℓ_M`, when the next row exists.
    pub ratio: Option<f64>,
    pub loss_x_2m: f64,
    pub total_per_round: f64,
    pub var95: f64,
    pub cvar95: f64,
    /// Produced by the log-linear fit rather than simulated.
    pub extrapolated: bool,
}

#[derive(Debug, Clone)]
pub struct ScalingRun {
    pub rows: Vec<MetricsRow>,
    /// Per-run `ℓ_M` for each simulated `m`.
    pub per_run: BTreeMap<usize, Vec<f64>>,
}

impl ScalingRun {
    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&[
            "m",
            "n_markets",
            "mean_loss",
            "ratio",
            "loss_x_2m",
            "total_per_round",
            "var95",
            "cvar95",
        ]);
        for r in &self.rows {
            t.push(vec![
                r.m.to_string(),
                r.n_markets.to_string(),
                fmt_sig10(r.mean_loss),
                r.ratio.map(fmt_sig10).unwrap_or_default(),
                fmt_sig10(r.loss_x_2m),
                fmt_sig10(r.total_per_round),
                fmt_sig10(r.var95),
                fmt_sig10(r.cvar95),
            ]);
        }
        t
    }
}

fn runs_for(cfg: &ExperimentConfig, m: usize, model: ModelKind, family: Family, tracking: &Tracking) -> Result<Vec<RunTrace>, HarnessError> {
    (0..cfg.runs as u64)
        .into_par_iter()
        .map(|run| {
            let mut spec = RunSpec::from_config(cfg, m, run);
            spec.model = model;
            spec.family = family;
            spec.tracking = tracking.clone();
            simulate(&spec)
        })
        .collect()
}

pub fn run_scaling(cfg: &ExperimentConfig) -> Result<Vec<MetricsRow>, HarnessError> {
    Ok(run_scaling_with(cfg)?.rows)
}

/// Loss per listed market across `m_values` for `cfg.model`.
pub fn run_scaling_with(cfg: &ExperimentConfig) -> Result<ScalingRun, HarnessError> {
    cfg.validate()?;
    let mut rows = Vec::new();
    let mut per_run = BTreeMap::new();
    for &m in &cfg.m_values {
        let n_markets = cfg.family.markets(m).len();
        let traces = runs_for(cfg, m, cfg.model, cfg.family, &Tracking::default())?;
        let norm = (cfg.rounds * n_markets) as f64;
        let run_means: Vec<f64> = traces.iter().map(|t| t.total_loss() / norm).collect();
        let pooled: Vec<f64> = traces
            .iter()
            .flat_map(|t| t.losses.iter().map(|l| l / n_markets as f64))
            .collect();
        let risk = risk_metrics(&pooled)?;
        let mean_loss = run_means.iter().sum::<f64>() / run_means.len() as f64;
        rows.push(MetricsRow {
            m,
            n_markets,
            mean_loss,
            ratio: None,
            loss_x_2m: mean_loss * (1u64 << m) as f64,
            total_per_round: mean_loss * n_markets as f64,
            var95: risk.var95,
            cvar95: risk.cvar95,
            extrapolated: false,
        });
        per_run.insert(m, run_means);
    }
    if !cfg.extrapolate_to.is_empty() {
        extrapolate(&mut rows, &cfg.extrapolate_to, cfg.family);
    }
    rows.sort_by_key(|r| r.m);
    for k in 0..rows.len().saturating_sub(1) {
        if rows[k + 1].m == rows[k].m + 1 {
            rows[k].ratio = Some(rows[k + 1].mean_loss / rows[k].mean_loss);
        }
    }
    Ok(ScalingRun { rows, per_run })
}

/// Least-squares fit of `ln ℓ_M = a + c·M` on the simulated rows; the tail
/// metrics are scaled by the same factor as the mean.
fn extrapolate(rows: &mut Vec<MetricsRow>, targets: &[usize], family: Family) {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.mean_loss > 0.0)
        .map(|r| (r.m as f64, r.mean_loss.ln()))
        .collect();
    if pts.len() < 2 {
        return;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let last = rows.iter().max_by_key(|r| r.m).cloned().expect("nonempty");
    for &m in targets {
        if rows.iter().any(|r| r.m == m) {
            continue;
        }
        let mean_loss = (my + slope * (m as f64 - mx)).exp();
        let scale = mean_loss / last.mean_loss;
        let n_markets = (1usize << m) - 1;
        let n_markets = match family {
            Family::Complete => n_markets,
            other => other.markets(m).len(),
        };
        rows.push(MetricsRow {
            m,
            n_markets,
            mean_loss,
            ratio: None,
            loss_x_2m: mean_loss * (1u64 << m) as f64,
            total_per_round: mean_loss * n_markets as f64,
            var95: last.var95 * scale,
            cvar95: last.cvar95 * scale,
            extrapolated: true,
        });
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelSummary {
    pub model: ModelKind,
    /// Mean loss per round (one trade per round), per run.
    pub with_parlays: Vec<f64>,
    pub base_only: Vec<f64>,
}

impl ModelSummary {
    pub fn mean_with_parlays(&self) -> f64 {
        mean(&self.with_parlays)
    }
    pub fn mean_base_only(&self) -> f64 {
        mean(&self.base_only)
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len().max(1) as f64
}

#[derive(Debug, Clone, Serialize)]
pub struct AblationReport {
    pub m: usize,
    pub models: Vec<ModelSummary>,
}

impl AblationReport {
    pub fn get(&self, kind: ModelKind) -> Option<&ModelSummary> {
        self.models.iter().find(|s| s.model == kind)
    }

    /// One-sided sign-test p-value that `worse` loses more than `better`
    /// run by run.
    pub fn p_value(&self, better: ModelKind, worse: ModelKind, with_parlays: bool) -> f64 {
        let (a, b) = (self.get(better).expect("model run"), self.get(worse).expect("model run"));
        let (xa, xb) = if with_parlays {
            (&a.with_parlays, &b.with_parlays)
        } else {
            (&a.base_only, &b.base_only)
        };
        let diffs: Vec<f64> = xb.iter().zip(xa).map(|(w, bt)| w - bt).collect();
        sign_test_greater(&diffs)
    }

    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["m", "model", "with_parlays", "base_only"]);
        for s in &self.models {
            t.push(vec![
                self.m.to_string(),
                s.model.name().into(),
                fmt_sig10(s.mean_with_parlays()),
                fmt_sig10(s.mean_base_only()),
            ]);
        }
        t
    }
}

/// Same seeds under complete-family and base-only flow for every model in
/// `cfg.models`, at the first `m` in `cfg.m_values`.
pub fn run_ablation(cfg: &ExperimentConfig) -> Result<AblationReport, HarnessError> {
    cfg.validate()?;
    let m = cfg.m_values[0];
    let mut models = Vec::new();
    for &kind in &cfg.models {
        let per_round = |family: Family| -> Result<Vec<f64>, HarnessError> {
            Ok(runs_for(cfg, m, kind, family, &Tracking::default())?
                .iter()
                .map(|t| t.total_loss() / cfg.rounds as f64)
                .collect())
        };
        models.push(ModelSummary {
            model: kind,
            with_parlays: per_round(Family::Complete)?,
            base_only: per_round(Family::BaseOnly)?,
        });
    }
    Ok(AblationReport { m, models })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseRow {
    pub alpha: f64,
    pub mean_loss: f64,
    pub cvar95: f64,
}

pub fn noise_csv(rows: &[NoiseRow]) -> CsvTable {
    let mut t = CsvTable::new(&["alpha", "mean_loss", "cvar95"]);
    for r in rows {
        t.push(vec![fmt_sig10(r.alpha), fmt_sig10(r.mean_loss), fmt_sig10(r.cvar95)]);
    }
    t
}

/// `ℓ_M` and per-market CVaR as the noise fraction varies, at the first `m`.
pub fn run_noise_sweep(cfg: &ExperimentConfig, alphas: &[f64]) -> Result<Vec<NoiseRow>, HarnessError> {
    cfg.validate()?;
    let m = cfg.m_values[0];
    let n_markets = cfg.family.markets(m).len();
    let mut rows = Vec::new();
    for &alpha in alphas {
        let c = ExperimentConfig {
            alpha,
            ..cfg.clone()
        };
        c.validate()?;
        let traces = runs_for(&c, m, c.model, c.family, &Tracking::default())?;
        let pooled: Vec<f64> = traces
            .iter()
            .flat_map(|t| t.losses.iter().map(|l| l / n_markets as f64))
            .collect();
        let risk = risk_metrics(&pooled)?;
        rows.push(NoiseRow {
            alpha,
            mean_loss: risk.mean,
            cvar95: risk.cvar95,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub round: usize,
    pub price_mae: f64,
    pub price_mae_std: f64,
    /// Run-averaged `‖φ_t - φ*‖²`; NaN for pricers without parameters.
    pub param_err: f64,
}

pub fn convergence_csv(rows: &[ConvergenceRow]) -> CsvTable {
    let mut t = CsvTable::new(&["round", "price_mae", "price_mae_std", "param_err"]);
    for r in rows {
        t.push(vec![
            r.round.to_string(),
            fmt_sig10(r.price_mae),
            fmt_sig10(r.price_mae_std),
            fmt_sig10(r.param_err),
        ]);
    }
    t
}

/// Price MAE over every nonempty subset and parameter error to the
/// moment-matched optimum, per round, at the first `m`. Static world only.
pub fn run_convergence(cfg: &ExperimentConfig) -> Result<Vec<ConvergenceRow>, HarnessError> {
    cfg.validate()?;
    if cfg.world_mode != crate::world::WorldMode::Static {
        return Err(HarnessError::Config("convergence runs need a static world".into()));
    }
    let m = cfg.m_values[0];
    let tracking = Tracking {
        phi_star: Some(static_phi_star(m, cfg.rho)?),
        price_mae: true,
    };
    let traces = runs_for(cfg, m, cfg.model, cfg.family, &tracking)?;
    let n = traces.len() as f64;
    Ok((0..=cfg.rounds)
        .map(|t| {
            let maes: Vec<f64> = traces.iter().map(|tr| tr.price_mae[t]).collect();
            let mu = maes.iter().sum::<f64>() / n;
            let var = maes.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / n;
            let param_err = if traces[0].param_err.is_empty() {
                f64::NAN
            } else {
                traces.iter().map(|tr| tr.param_err[t]).sum::<f64>() / n
            };
            ConvergenceRow {
                round: t,
                price_mae: mu,
                price_mae_std: var.sqrt(),
                param_err,
            }
        })
        .collect())
}

/// Squared parameter error traces per run against the static optimum.
pub fn param_error_traces(cfg: &ExperimentConfig, m: usize) -> Result<Vec<Vec<f64>>, HarnessError> {
    let tracking = Tracking {
        phi_star: Some(static_phi_star(m, cfg.rho)?),
        price_mae: false,
    };
    Ok(runs_for(cfg, m, ModelKind::ParlayAmm, cfg.family, &tracking)?
        .into_iter()
        .map(|t| t.param_err)
        .collect())
}
