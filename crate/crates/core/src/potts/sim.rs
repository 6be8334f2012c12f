use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::MarketId;
use crate::error::HarnessError;
use crate::harness::{fmt_sig10, risk_metrics, stream_rng, CsvTable, Purpose};
use crate::ising::{ce_slope, ExactBeliefs, IsingParams, Mask};
use crate::lmsr::{expected_loss_kl, BinaryBook};
use crate::numeric::clamp_prob;
use crate::world::GaussianWorld;

use super::engine::{IndependentCategorical, PottsEngine};
use super::infer::CategoricalParlay;
use super::world::CategoricalWorld;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PottsModel {
    PottsAmm,
    Independent,
    TrueOracle,
}

impl PottsModel {
    pub const ALL: [PottsModel; 3] = [PottsModel::TrueOracle, PottsModel::PottsAmm, PottsModel::Independent];

    pub fn name(self) -> &'static str {
        match self {
            Self::PottsAmm => "potts_amm",
            Self::Independent => "independent",
            Self::TrueOracle => "true_oracle",
        }
    }
}

/// One multinomial experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PottsConfig {
    pub k: Vec<usize>,
    pub rho: f64,
    pub b: f64,
    pub eta_theta: f64,
    pub eta_w: f64,
    pub steps: usize,
    pub runs: usize,
    pub jump_rate: f64,
    /// Probability of a base, 2-leg and 3-leg trade.
    pub mix: [f64; 3],
    /// Largest number of listed parlays per leg count.
    pub cap: usize,
    pub seed: u64,
}

impl Default for PottsConfig {
    fn default() -> Self {
        Self {
            k: vec![2, 3, 4, 4, 5],
            rho: 0.3,
            b: 10.0,
            eta_theta: 0.2,
            eta_w: 0.2,
            steps: 300,
            runs: 200,
            jump_rate: 0.0,
            mix: [0.5, 0.3, 0.2],
            cap: 300,
            seed: 20_240_601,
        }
    }
}

impl PottsConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |s: &str| Err(HarnessError::Config(s.into()));
        if self.k.len() < 3 || self.k.iter().any(|&k| k < 2) {
            return bad("need at least three markets with two or more categories");
        }
        if !(self.b > 0.0) || self.steps == 0 || self.runs == 0 || self.cap == 0 {
            return bad("b, steps, runs and cap must be positive");
        }
        if self.mix.iter().any(|&w| !(w >= 0.0)) || (self.mix.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return bad("trade mix must be nonnegative and sum to 1");
        }
        if !(0.0..1.0).contains(&self.rho) {
            return bad("rho must lie in [0, 1)");
        }
        Ok(())
    }
}

/// Every categorical parlay over `legs` markets, down-sampled to `cap`
/// entries when there are more.
pub fn parlay_universe(k: &[usize], legs: usize, cap: usize, rng: &mut impl Rng) -> Vec<CategoricalParlay> {
    let m = k.len();
    let mut all = Vec::new();
    let mut markets: Vec<usize> = (0..legs).collect();
    if legs == 0 || legs > m {
        return all;
    }
    loop {
        let mut cats = vec![0usize; legs];
        loop {
            let l = markets.iter().cloned().zip(cats.iter().cloned()).collect();
            all.push(CategoricalParlay::new(l).expect("distinct markets"));
            let mut d = 0;
            while d < legs {
                cats[d] += 1;
                if cats[d] < k[markets[d]] {
                    break;
                }
                cats[d] = 0;
                d += 1;
            }
            if d == legs {
                break;
            }
        }
        // Next combination of market indices.
        let mut p = legs;
        while p > 0 && markets[p - 1] == m - legs + p - 1 {
            p -= 1;
        }
        if p == 0 {
            break;
        }
        markets[p - 1] += 1;
        for q in p..legs {
            markets[q] = markets[q - 1] + 1;
        }
    }
    all.sort();
    if all.len() > cap {
        let mut keep: Vec<usize> = sample(rng, all.len(), cap).into_vec();
        keep.sort_unstable();
        all = keep.into_iter().map(|i| all[i].clone()).collect();
    }
    all
}

/// Which contract trades this step.
#[derive(Debug, Clone, PartialEq)]
pub enum CategoricalArrival {
    Base(usize),
    Parlay(CategoricalParlay),
}

struct Protocol {
    two: Vec<CategoricalParlay>,
    three: Vec<CategoricalParlay>,
    mix: [f64; 3],
    m: usize,
}

impl Protocol {
    fn new(cfg: &PottsConfig, run: u64) -> Self {
        let mut rng = stream_rng(cfg.seed, run, Purpose::Potts);
        Self {
            two: parlay_universe(&cfg.k, 2, cfg.cap, &mut rng),
            three: parlay_universe(&cfg.k, 3, cfg.cap, &mut rng),
            mix: cfg.mix,
            m: cfg.k.len(),
        }
    }

    fn draw(&self, rng: &mut impl Rng) -> CategoricalArrival {
        let u: f64 = rng.random();
        if u < self.mix[0] {
            CategoricalArrival::Base(rng.random_range(0..self.m))
        } else if u < self.mix[0] + self.mix[1] {
            CategoricalArrival::Parlay(self.two[rng.random_range(0..self.two.len())].clone())
        } else {
            CategoricalArrival::Parlay(self.three[rng.random_range(0..self.three.len())].clone())
        }
    }
}

/// Per-step losses of one seeded run.
pub fn simulate_potts(cfg: &PottsConfig, model: PottsModel, run: u64) -> Result<Vec<f64>, HarnessError> {
    let protocol = Protocol::new(cfg, run);
    let mut world = CategoricalWorld::equiprobable(&cfg.k, cfg.rho, cfg.jump_rate)?;
    let mut arrivals = stream_rng(cfg.seed, run, Purpose::Arrivals);
    let mut world_rng = stream_rng(cfg.seed, run, Purpose::World);
    let dt = world.scores.horizon / cfg.steps as f64;
    let mut amm = match model {
        PottsModel::PottsAmm => Some(PottsEngine::new(&cfg.k, cfg.b, cfg.eta_theta, cfg.eta_w)?),
        _ => None,
    };
    let mut ind = IndependentCategorical::new(&cfg.k, cfg.b);
    let mut losses = Vec::with_capacity(cfg.steps);
    for _ in 0..cfg.steps {
        let loss = match protocol.draw(&mut arrivals) {
            CategoricalArrival::Base(i) => {
                let target = world.categorical_distribution(i);
                match model {
                    PottsModel::PottsAmm => amm.as_mut().expect("engine").trade_base(i, &target)?,
                    PottsModel::Independent => ind.trade_base(i, &target),
                    PottsModel::TrueOracle => 0.0,
                }
            }
            CategoricalArrival::Parlay(p) => {
                let target = world.joint_categorical_signal(&p)?;
                match model {
                    PottsModel::PottsAmm => amm.as_mut().expect("engine").trade_parlay(&p, target)?,
                    PottsModel::Independent => ind.trade_parlay(&p, target),
                    PottsModel::TrueOracle => 0.0,
                }
            }
        };
        losses.push(loss);
        world.jump_step(dt, &mut world_rng);
    }
    Ok(losses)
}

/// The same protocol run through the binary pipeline: Ising beliefs,
/// binary books and the binary Gaussian world. Category 1 is the YES side;
/// parlays with NO legs are priced by alternating expansion. Needs every
/// `K_i = 2`.
pub fn simulate_binary_reference(cfg: &PottsConfig, run: u64) -> Result<Vec<f64>, HarnessError> {
    if cfg.k.iter().any(|&k| k != 2) {
        return Err(HarnessError::Config("binary reference needs every K_i = 2".into()));
    }
    let m = cfg.k.len();
    let protocol = Protocol::new(cfg, run);
    let mut world = GaussianWorld::equicorrelated(m, cfg.rho)?;
    let mut arrivals = stream_rng(cfg.seed, run, Purpose::Arrivals);
    let mut world_rng = stream_rng(cfg.seed, run, Purpose::World);
    let dt = world.horizon / cfg.steps as f64;
    let mut params = IsingParams::zeros(m);
    let mut beliefs = ExactBeliefs::new(&params)?;
    let mut books = std::collections::BTreeMap::<Vec<(usize, usize)>, BinaryBook>::new();
    let mut losses = Vec::with_capacity(cfg.steps);
    for _ in 0..cfg.steps {
        let legs: Vec<(usize, usize)> = match protocol.draw(&mut arrivals) {
            CategoricalArrival::Base(i) => vec![(i, 1)],
            CategoricalArrival::Parlay(p) => p.legs().to_vec(),
        };
        let terms = expansion(&legs);
        let target = clamp_prob(
            terms
                .iter()
                .map(|&(s, sign)| sign * MarketId::new(s).map_or(1.0, |id| world.parlay_signal(id)))
                .sum(),
        );
        let q = beliefs.expansion_prob(&terms);
        losses.push(expected_loss_kl(target, q, cfg.b));
        books
            .entry(legs)
            .or_insert_with(|| BinaryBook::new(cfg.b))
            .fill_to_price(target);
        let grad = beliefs.grad_expansion(&terms).scale(ce_slope(target, q));
        params.step(&grad, cfg.eta_theta, cfg.eta_w);
        beliefs = ExactBeliefs::new(&params)?;
        world.step_scores(dt, &mut world_rng);
    }
    Ok(losses)
}

/// `1[X_Y = 1, X_N = 0] = Σ_{T ⊆ N} (-1)^{|T|} 1[X_{Y ∪ T} = 1]`.
fn expansion(legs: &[(usize, usize)]) -> Vec<(Mask, f64)> {
    let yes: Mask = legs.iter().filter(|l| l.1 == 1).fold(0, |a, l| a | 1 << l.0);
    let no: Vec<usize> = legs.iter().filter(|l| l.1 == 0).map(|l| l.0).collect();
    (0..1u32 << no.len())
        .map(|t| {
            let mut s = yes;
            for (b, &i) in no.iter().enumerate() {
                if t >> b & 1 == 1 {
                    s |= 1 << i;
                }
            }
            (s, if t.count_ones() % 2 == 0 { 1.0 } else { -1.0 })
        })
        .collect()
}

/// Pooled per-step loss statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PottsSummary {
    pub mean: f64,
    pub median: f64,
    pub var95: f64,
    pub cvar95: f64,
}

impl PottsSummary {
    pub fn of(losses: &[f64]) -> Result<Self, HarnessError> {
        let r = risk_metrics(losses)?;
        let mut s = losses.to_vec();
        s.sort_by(f64::total_cmp);
        let n = s.len();
        let median = if n % 2 == 1 { s[n / 2] } else { 0.5 * (s[n / 2 - 1] + s[n / 2]) };
        Ok(Self {
            mean: r.mean,
            median,
            var95: r.var95,
            cvar95: r.cvar95,
        })
    }

    /// Each statistic lies in the closed interval spanned by `lo` and `hi`.
    pub fn between(&self, lo: &PottsSummary, hi: &PottsSummary) -> [bool; 4] {
        let inside = |x: f64, a: f64, b: f64| a.min(b) <= x && x <= a.max(b);
        [
            inside(self.mean, lo.mean, hi.mean),
            inside(self.median, lo.median, hi.median),
            inside(self.var95, lo.var95, hi.var95),
            inside(self.cvar95, lo.cvar95, hi.cvar95),
        ]
    }
}

pub fn potts_csv(rows: &[(PottsModel, PottsSummary)]) -> CsvTable {
    let mut t = CsvTable::new(&["model", "mean", "median", "var95", "cvar95"]);
    for (m, s) in rows {
        t.push(vec![
            m.name().to_string(),
            fmt_sig10(s.mean),
            fmt_sig10(s.median),
            fmt_sig10(s.var95),
            fmt_sig10(s.cvar95),
        ]);
    }
    t
}

/// Summary for each model over `cfg.runs` seeded runs.
pub fn run_potts(cfg: &PottsConfig) -> Result<Vec<(PottsModel, PottsSummary)>, HarnessError> {
    cfg.validate()?;
    PottsModel::ALL
        .iter()
        .map(|&model| {
            let per_run = (0..cfg.runs as u64)
                .into_par_iter()
                .map(|run| simulate_potts(cfg, model, run))
                .collect::<Result<Vec<_>, _>>()?;
            Ok((model, PottsSummary::of(&per_run.concat())?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn universe_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let k = [2, 3, 4, 4, 5];
        let two = parlay_universe(&k, 2, 300, &mut rng);
        assert_eq!(two.len(), 127);
        let three = parlay_universe(&k, 3, 300, &mut rng);
        assert_eq!(three.len(), 300);
        assert!(three.windows(2).all(|w| w[0] < w[1]));
        let uncapped = parlay_universe(&k, 3, usize::MAX, &mut rng);
        // e_3 of (2, 3, 4, 4, 5).
        assert_eq!(uncapped.len(), 24 + 24 + 30 + 32 + 40 + 40 + 48 + 60 + 60 + 80);
    }

    #[test]
    fn expansion_of_mixed_sides() {
        let e = expansion(&[(0, 1), (2, 0)]);
        assert_eq!(e, vec![(0b001, 1.0), (0b101, -1.0)]);
        let e = expansion(&[(1, 0)]);
        assert_eq!(e, vec![(0, 1.0), (0b010, -1.0)]);
    }

    #[test]
    fn binary_pipeline_reduction() {
        let cfg = PottsConfig {
            k: vec![2; 5],
            steps: 300,
            runs: 3,
            ..Default::default()
        };
        for run in 0..3 {
            let a = simulate_potts(&cfg, PottsModel::PottsAmm, run).unwrap();
            let b = simulate_binary_reference(&cfg, run).unwrap();
            let worst = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            assert!(worst < 1e-9, "run {run}: {worst}");
        }
    }

    #[test]
    fn oracle_is_free_and_learners_pay() {
        let cfg = PottsConfig {
            runs: 4,
            steps: 100,
            ..Default::default()
        };
        let rows = run_potts(&cfg).unwrap();
        let get = |m| rows.iter().find(|r| r.0 == m).unwrap().1;
        assert_eq!(get(PottsModel::TrueOracle).mean, 0.0);
        for m in [PottsModel::PottsAmm, PottsModel::Independent] {
            let s = get(m);
            assert!(s.mean > 0.0 && s.median <= s.var95 && s.var95 <= s.cvar95);
        }
    }

    #[test]
    fn config_validation() {
        assert!(PottsConfig::default().validate().is_ok());
        let bad = PottsConfig {
            mix: [0.5, 0.5, 0.5],
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
