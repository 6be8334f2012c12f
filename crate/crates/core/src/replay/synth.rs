use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::MarketId;
use crate::error::{ReplayError, WorldError};
use crate::harness::{stream_rng, Purpose};
use crate::numeric::clamp_prob;
use crate::world::GaussianWorld;

use super::run::TradeTruth;
use super::stream::{CandleRecord, ComboTrade, Side, StreamEvent};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub m: usize,
    pub rho: f64,
    /// One candle per market per minute.
    pub minutes: usize,
    /// Fraction of the world's horizon covered by the stream.
    pub horizon_share: f64,
    pub trades_per_minute: usize,
    pub max_legs: usize,
    /// Additive markup on every all-YES execution price.
    pub fee_epsilon: f64,
    /// Chance that a leg is NO.
    pub no_share: f64,
    pub max_size: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            m: 6,
            rho: 0.3,
            minutes: 120,
            horizon_share: 0.5,
            trades_per_minute: 2,
            max_legs: 3,
            fee_epsilon: 0.02,
            no_share: 0.3,
            max_size: 200.0,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticStream {
    pub events: Vec<StreamEvent>,
    pub truth: TradeTruth,
}

const MINUTE_MS: i64 = 60_000;

pub fn market_key(i: usize) -> String {
    format!("m{i:02}")
}

/// Candles and combo trades read off one equicorrelated Gaussian world.
///
/// Each minute emits a fee-free candle per market, then a few combo trades
/// inside the minute whose prices are the true all-YES probability of the
/// leg set plus `fee_epsilon`; the world steps once per minute and stops
/// short of resolution.
pub fn synthetic_stream(cfg: &SyntheticConfig) -> Result<SyntheticStream, ReplayError> {
    if cfg.m < 2 || cfg.max_legs < 2 || cfg.max_legs > cfg.m || cfg.minutes == 0 || !(cfg.horizon_share > 0.0 && cfg.horizon_share < 1.0) {
        return Err(ReplayError::Parse {
            line: 0,
            message: "synthetic stream needs m >= 2, 2 <= max_legs <= m and a horizon share in (0, 1)".into(),
        });
    }
    let mut world = GaussianWorld::equicorrelated(cfg.m, cfg.rho).map_err(world_err)?;
    let mut w_rng = stream_rng(cfg.seed, 0, Purpose::World);
    let mut rng = stream_rng(cfg.seed, 0, Purpose::Fixture);
    let dt = world.horizon * cfg.horizon_share / cfg.minutes as f64;
    let mut events = Vec::new();
    let mut truth = TradeTruth::default();
    for minute in 0..cfg.minutes {
        let t0 = minute as i64 * MINUTE_MS;
        for i in 0..cfg.m {
            events.push(StreamEvent::Candle(CandleRecord {
                market_key: market_key(i),
                timestamp: t0,
                mid: clamp_prob(world.base_signal(i)),
            }));
        }
        let mut offsets: Vec<i64> = (0..cfg.trades_per_minute).map(|_| rng.random_range(1..MINUTE_MS)).collect();
        offsets.sort();
        for off in offsets {
            let n = rng.random_range(2..=cfg.max_legs);
            let markets = sample(&mut rng, cfg.m, n).into_vec();
            let legs: Vec<(usize, Side)> = markets
                .iter()
                .map(|&i| (i, if rng.random::<f64>() < cfg.no_share { Side::No } else { Side::Yes }))
                .collect();
            let mut yes = 0u32;
            let mut no = 0u32;
            for &(i, s) in &legs {
                match s {
                    Side::Yes => yes |= 1 << i,
                    Side::No => no |= 1 << i,
                }
            }
            let p_full = world.parlay_signal(MarketId::new(yes | no).expect("nonempty"));
            let mixed: f64 = super::canon::expansion_terms(yes, no)
                .iter()
                .map(|&(s, sign)| sign * if s == 0 { 1.0 } else { world.parlay_signal(MarketId::new(s).expect("nonempty")) })
                .sum();
            truth.all_yes.push(p_full);
            truth.mixed.push(mixed.clamp(0.0, 1.0));
            events.push(StreamEvent::Trade(ComboTrade {
                timestamp: t0 + off,
                legs: legs.iter().map(|&(i, s)| (market_key(i), s)).collect(),
                exec_price: clamp_prob(p_full + cfg.fee_epsilon),
                size: rng.random_range(1.0..=cfg.max_size).round(),
            }));
        }
        world.step_scores(dt, &mut w_rng);
    }
    Ok(SyntheticStream { events, truth })
}

fn world_err(e: WorldError) -> ReplayError {
    ReplayError::Parse {
        line: 0,
        message: e.to_string(),
    }
}
