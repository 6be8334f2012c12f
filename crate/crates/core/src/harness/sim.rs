use crate::baselines::{build_pricer, ModelKind};
use crate::engine::{Family, MarketId, ParlayEngine, TradeMode};
use crate::error::HarnessError;
use crate::ising::{ExactBeliefs, IsingParams};
use crate::world::{GaussianWorld, NoiseModel, WorldMode};

use super::{stream_rng, ExperimentConfig, Purpose};

/// Optional per-round diagnostics.
#[derive(Debug, Clone, Default)]
pub struct Tracking {
    /// Record `‖φ_t - φ*‖²` against this target (learners only).
    pub phi_star: Option<IsingParams>,
    /// Record mean absolute error of posted prices over every nonempty
    /// subset, against the current truth.
    pub price_mae: bool,
}

/// Everything that defines one simulation run.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub m: usize,
    pub rho: f64,
    pub b: f64,
    pub eta_theta: f64,
    pub eta_w: f64,
    pub alpha: f64,
    pub rounds: usize,
    pub world_mode: WorldMode,
    pub family: Family,
    pub noise_model: NoiseModel,
    pub model: ModelKind,
    pub trade_mode: TradeMode,
    pub projection_radius: Option<f64>,
    pub seed: u64,
    pub run: u64,
    pub tracking: Tracking,
}

impl RunSpec {
    pub fn from_config(cfg: &ExperimentConfig, m: usize, run: u64) -> Self {
        Self {
            m,
            rho: cfg.rho,
            b: cfg.b,
            eta_theta: cfg.eta_theta,
            eta_w: cfg.eta_w,
            alpha: cfg.alpha,
            rounds: cfg.rounds,
            world_mode: cfg.world_mode,
            family: cfg.family,
            noise_model: cfg.noise_model,
            model: cfg.model,
            trade_mode: cfg.trade_mode.into(),
            projection_radius: cfg.projection_radius,
            seed: cfg.seed,
            run,
            tracking: Tracking::default(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunTrace {
    /// Loss charged on round `t`, `t = 0..rounds`.
    pub losses: Vec<f64>,
    /// Squared parameter error before round 0 and after every round.
    pub param_err: Vec<f64>,
    /// Price MAE before round 0 and after every round.
    pub price_mae: Vec<f64>,
}

impl RunTrace {
    pub fn total_loss(&self) -> f64 {
        self.losses.iter().sum()
    }
}

/// Run one seeded simulation. The arrival and world streams depend only on
/// `(seed, run)`, so every model sees the same traders.
pub fn simulate(spec: &RunSpec) -> Result<RunTrace, HarnessError> {
    let mut world = GaussianWorld::equicorrelated(spec.m, spec.rho)?;
    let family = spec.family.markets(spec.m);
    let all = Family::Complete.markets(spec.m);
    let mut pricer = if spec.model == ModelKind::ParlayAmm {
        let mut e = ParlayEngine::new(spec.m, spec.b, spec.eta_theta, spec.eta_w)?;
        e.trade_mode = spec.trade_mode;
        e.projection_radius = spec.projection_radius;
        Box::new(e)
    } else {
        build_pricer(spec.model, &world, spec.b, spec.eta_theta, spec.eta_w)?
    };
    let mut arrivals = stream_rng(spec.seed, spec.run, Purpose::Arrivals);
    let mut world_rng = stream_rng(spec.seed, spec.run, Purpose::World);
    let mut truth = world.true_joint()?.intersection_probs();
    let dt = world.horizon / spec.rounds as f64;

    let mut trace = RunTrace {
        losses: Vec::with_capacity(spec.rounds),
        ..Default::default()
    };
    let record = |pricer: &mut Box<dyn crate::baselines::MarketMaker>,
                      truth: &[f64],
                      trace: &mut RunTrace|
     -> Result<(), HarnessError> {
        if let Some(star) = &spec.tracking.phi_star {
            if let Some(p) = pricer.belief_params() {
                trace.param_err.push(p.dist_sq(star));
            }
        }
        if spec.tracking.price_mae {
            let mut err = 0.0;
            for &id in &all {
                err += (pricer.quote(id)? - truth[id.mask() as usize]).abs();
            }
            trace.price_mae.push(err / all.len() as f64);
        }
        Ok(())
    };
    record(&mut pricer, &truth, &mut trace)?;
    for _ in 0..spec.rounds {
        pricer.observe_truth(&truth);
        let arrival = world.sample_arrival(&family, spec.alpha, spec.noise_model, &mut arrivals);
        let loss = pricer.trade(arrival.market, arrival.target)?;
        trace.losses.push(loss);
        if spec.world_mode == WorldMode::Dynamic {
            world.step_scores(dt, &mut world_rng);
            truth = world.true_joint()?.intersection_probs();
        }
        record(&mut pricer, &truth, &mut trace)?;
    }
    Ok(trace)
}

/// `φ*`: the Ising I-projection of the static world's truth.
pub(crate) fn static_phi_star(m: usize, rho: f64) -> Result<IsingParams, HarnessError> {
    let world = GaussianWorld::equicorrelated(m, rho)?;
    let moments = world.true_moments()?;
    Ok(crate::ising::fit_to_moments(
        &moments,
        crate::ising::FIT_TOL,
        crate::ising::FIT_MAX_ITER,
    )?)
}

/// Total per-round loss of the moment-matched Ising model: the
/// misspecification floor a perfectly calibrated learner still pays.
pub fn misspecification_floor(m: usize, rho: f64, b: f64, family: Family) -> Result<f64, HarnessError> {
    let world = GaussianWorld::equicorrelated(m, rho)?;
    let truth = world.true_joint()?.intersection_probs();
    let star = static_phi_star(m, rho)?;
    let model = ExactBeliefs::new(&star)?;
    let fam: Vec<MarketId> = family.markets(m);
    let total: f64 = fam
        .iter()
        .map(|id| {
            crate::lmsr::expected_loss_kl(truth[id.mask() as usize], model.event_prob(id.mask()), b)
        })
        .sum();
    Ok(total / fam.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(model: ModelKind) -> RunSpec {
        let cfg = ExperimentConfig {
            model,
            rounds: 200,
            ..Default::default()
        };
        RunSpec::from_config(&cfg, 4, 3)
    }

    #[test]
    fn true_oracle_is_free_in_a_static_world() {
        let t = simulate(&spec(ModelKind::TrueOracle)).unwrap();
        assert!(t.total_loss() < 1e-12, "{}", t.total_loss());
    }

    #[test]
    fn same_seed_same_trace() {
        let a = simulate(&spec(ModelKind::ParlayAmm)).unwrap();
        let b = simulate(&spec(ModelKind::ParlayAmm)).unwrap();
        assert_eq!(a.losses, b.losses);
    }

    #[test]
    fn dynamic_truth_tracks_the_oracle() {
        let mut s = spec(ModelKind::TrueOracle);
        s.world_mode = WorldMode::Dynamic;
        let t = simulate(&s).unwrap();
        assert!(t.total_loss() < 1e-12);
        s.model = ModelKind::GaussianOracle;
        assert!(simulate(&s).unwrap().total_loss() > 0.0);
    }

    #[test]
    fn learner_error_shrinks() {
        let mut s = spec(ModelKind::ParlayAmm);
        s.tracking.phi_star = Some(static_phi_star(4, 0.3).unwrap());
        s.tracking.price_mae = true;
        let t = simulate(&s).unwrap();
        assert_eq!(t.param_err.len(), 201);
        assert!(t.param_err[200] < t.param_err[0]);
        assert!(t.price_mae[200] < t.price_mae[0]);
    }
}
