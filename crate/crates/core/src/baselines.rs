//! Comparison pricers and the common interface the simulator drives.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::engine::{MarketId, ParlayEngine};
use crate::error::{HarnessError, IsingError};
use crate::ising::{fit_to_moments, ExactBeliefs, IsingParams, FIT_MAX_ITER, FIT_TOL};
use crate::lmsr::{expected_loss_kl, BinaryBook};
use crate::numeric::clamp_prob;
use crate::world::GaussianWorld;

/// Anything that posts a price per contract and absorbs informed fills.
pub trait MarketMaker {
    fn quote(&mut self, id: MarketId) -> Result<f64, IsingError>;

    /// Execute a fill at `p_target`; returns `b · KL(p_target ‖ posted)`.
    fn trade(&mut self, id: MarketId, p_target: f64) -> Result<f64, IsingError>;

    /// Current belief parameters, for learners that have them.
    fn belief_params(&self) -> Option<&IsingParams> {
        None
    }

    /// Notify of the current truth as intersection probabilities indexed by
    /// leg mask. Only the true oracle listens.
    fn observe_truth(&mut self, _sup: &[f64]) {}
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    ParlayAmm,
    IndependentLmsr,
    ProductIndependence,
    PairwiseOracle,
    GaussianOracle,
    TrueOracle,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::ParlayAmm,
        ModelKind::IndependentLmsr,
        ModelKind::ProductIndependence,
        ModelKind::PairwiseOracle,
        ModelKind::GaussianOracle,
        ModelKind::TrueOracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::ParlayAmm => "parlay_amm",
            ModelKind::IndependentLmsr => "independent_lmsr",
            ModelKind::ProductIndependence => "product_independence",
            ModelKind::PairwiseOracle => "pairwise_oracle",
            ModelKind::GaussianOracle => "gaussian_oracle",
            ModelKind::TrueOracle => "true_oracle",
        }
    }

    pub fn is_oracle(self) -> bool {
        matches!(
            self,
            ModelKind::PairwiseOracle | ModelKind::GaussianOracle | ModelKind::TrueOracle
        )
    }
}

impl std::str::FromStr for ModelKind {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| HarnessError::Config(format!("unknown model {s:?}")))
    }
}

impl MarketMaker for ParlayEngine {
    fn quote(&mut self, id: MarketId) -> Result<f64, IsingError> {
        ParlayEngine::quote(self, id)
    }

    fn trade(&mut self, id: MarketId, p_target: f64) -> Result<f64, IsingError> {
        Ok(self.process_trade(id, p_target)?.kl_loss)
    }

    fn belief_params(&self) -> Option<&IsingParams> {
        Some(&self.params)
    }
}

/// One isolated LMSR per listed contract, each opened at `2^{-|S|}`.
#[derive(Debug, Clone)]
pub struct IndependentLmsr {
    pub b: f64,
    pub books: BTreeMap<MarketId, BinaryBook>,
}

impl IndependentLmsr {
    pub fn new(b: f64) -> Self {
        Self {
            b,
            books: BTreeMap::new(),
        }
    }

    fn book(&mut self, id: MarketId) -> &mut BinaryBook {
        let b = self.b;
        self.books
            .entry(id)
            .or_insert_with(|| BinaryBook::with_price(b, 0.5f64.powi(id.size() as i32)))
    }
}

impl MarketMaker for IndependentLmsr {
    fn quote(&mut self, id: MarketId) -> Result<f64, IsingError> {
        Ok(self.book(id).price())
    }

    fn trade(&mut self, id: MarketId, p_target: f64) -> Result<f64, IsingError> {
        let b = self.b;
        let book = self.book(id);
        let posted = book.price();
        let target = clamp_prob(p_target);
        book.fill_to_price(target);
        Ok(expected_loss_kl(target, posted, b))
    }
}

/// Base books priced by LMSR; every parlay quoted as the product of its
/// legs. Parlay fills never move the base books.
#[derive(Debug, Clone)]
pub struct ProductIndependence {
    pub b: f64,
    pub base: Vec<BinaryBook>,
    pub parlay_books: BTreeMap<MarketId, BinaryBook>,
}

impl ProductIndependence {
    pub fn new(m: usize, b: f64) -> Self {
        Self {
            b,
            base: vec![BinaryBook::new(b); m],
            parlay_books: BTreeMap::new(),
        }
    }

    pub fn product_price(&self, id: MarketId) -> f64 {
        id.legs().map(|i| self.base[i].price()).product()
    }
}

impl MarketMaker for ProductIndependence {
    fn quote(&mut self, id: MarketId) -> Result<f64, IsingError> {
        Ok(self.product_price(id))
    }

    fn trade(&mut self, id: MarketId, p_target: f64) -> Result<f64, IsingError> {
        let target = clamp_prob(p_target);
        let posted = self.product_price(id);
        if id.size() == 1 {
            let i = id.legs().next().expect("one leg");
            self.base[i].fill_to_price(target);
        } else {
            let b = self.b;
            let book = self
                .parlay_books
                .entry(id)
                .or_insert_with(|| BinaryBook::with_price(b, posted));
            book.resync_to(posted);
            book.fill_to_price(target);
            // The posted parlay price reverts to the product of its legs.
            book.resync_to(posted);
        }
        Ok(expected_loss_kl(target, posted, self.b))
    }
}

/// Fixed table of intersection probabilities; never learns.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticOracle {
    pub b: f64,
    /// `sup[S] = quoted P(all of S)`.
    pub sup: Vec<f64>,
    /// Parameters when the table came from an Ising fit.
    pub params: Option<IsingParams>,
}

impl StaticOracle {
    /// Ising model fitted to the world's exact singleton and pair moments.
    pub fn pairwise(world: &GaussianWorld, b: f64) -> Result<Self, HarnessError> {
        let moments = world.true_moments()?;
        let params = fit_to_moments(&moments, FIT_TOL, FIT_MAX_ITER)?;
        let sup = ExactBeliefs::new(&params)?.sup;
        Ok(Self {
            b,
            sup,
            params: Some(params),
        })
    }

    /// The world's orthant probabilities frozen at construction time.
    pub fn gaussian(world: &GaussianWorld, b: f64) -> Result<Self, HarnessError> {
        Ok(Self {
            b,
            sup: world.true_joint()?.intersection_probs(),
            params: None,
        })
    }

    /// Tracks the current truth through [`MarketMaker::observe_truth`].
    pub fn truth(world: &GaussianWorld, b: f64) -> Result<Self, HarnessError> {
        Self::gaussian(world, b)
    }
}

impl MarketMaker for StaticOracle {
    fn quote(&mut self, id: MarketId) -> Result<f64, IsingError> {
        Ok(self.sup[id.mask() as usize])
    }

    fn trade(&mut self, id: MarketId, p_target: f64) -> Result<f64, IsingError> {
        Ok(expected_loss_kl(clamp_prob(p_target), self.sup[id.mask() as usize], self.b))
    }

    fn belief_params(&self) -> Option<&IsingParams> {
        self.params.as_ref()
    }
}

#[derive(Debug, Clone)]
pub struct TrueOracle(pub StaticOracle);

impl MarketMaker for TrueOracle {
    fn quote(&mut self, id: MarketId) -> Result<f64, IsingError> {
        self.0.quote(id)
    }

    fn trade(&mut self, id: MarketId, p_target: f64) -> Result<f64, IsingError> {
        self.0.trade(id, p_target)
    }

    fn observe_truth(&mut self, sup: &[f64]) {
        self.0.sup.clear();
        self.0.sup.extend_from_slice(sup);
    }
}

/// Build a pricer of the given kind for one simulation run.
pub fn build_pricer(
    kind: ModelKind,
    world: &GaussianWorld,
    b: f64,
    eta_theta: f64,
    eta_w: f64,
) -> Result<Box<dyn MarketMaker>, HarnessError> {
    let m = world.m;
    Ok(match kind {
        ModelKind::ParlayAmm => Box::new(ParlayEngine::new(m, b, eta_theta, eta_w)?),
        ModelKind::IndependentLmsr => Box::new(IndependentLmsr::new(b)),
        ModelKind::ProductIndependence => Box::new(ProductIndependence::new(m, b)),
        ModelKind::PairwiseOracle => Box::new(StaticOracle::pairwise(world, b)?),
        ModelKind::GaussianOracle => Box::new(StaticOracle::gaussian(world, b)?),
        ModelKind::TrueOracle => Box::new(TrueOracle(StaticOracle::truth(world, b)?)),
    })
}

/// Expected profit per YES unit bought at `quote` when the truth is `p_true`.
#[inline]
pub fn trader_edge(quote: f64, p_true: f64) -> f64 {
    p_true - quote
}

/// Two base events that always resolve together, each at probability `p`.
/// A product pricer quotes their parlay at `p²` while it pays with
/// probability `p`; parlay fills never correct it, so a trader who buys one
/// unit per round collects `p - p²` every time. Returns cumulative edge.
pub fn persistent_arbitrage(p: f64, trades: usize, b: f64) -> Result<Vec<f64>, IsingError> {
    let mut pricer = ProductIndependence::new(2, b);
    pricer.trade(MarketId::single(0), p)?;
    pricer.trade(MarketId::single(1), p)?;
    let pair = MarketId::new(0b11).expect("nonzero");
    let mut total = 0.0;
    let mut out = Vec::with_capacity(trades);
    for _ in 0..trades {
        let q = pricer.quote(pair)?;
        total += trader_edge(q, p);
        pricer.trade(pair, p)?;
        out.push(total);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Family;

    #[test]
    fn product_pricer_misses_perfect_correlation() {
        let edge = persistent_arbitrage(0.6, 50, 1.0).unwrap();
        assert!((edge[0] - 0.24).abs() < 1e-12);
        for (k, e) in edge.iter().enumerate() {
            assert!((e - 0.24 * (k + 1) as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn product_parlay_losses_accumulate_linearly() {
        let mut p = ProductIndependence::new(2, 1.0);
        p.trade(MarketId::single(0), 0.6).unwrap();
        p.trade(MarketId::single(1), 0.6).unwrap();
        let pair = MarketId::new(0b11).unwrap();
        let first = p.trade(pair, 0.6).unwrap();
        let mut total = first;
        for _ in 0..99 {
            let l = p.trade(pair, 0.6).unwrap();
            assert!((l - first).abs() < 1e-15);
            total += l;
        }
        assert!((total - 100.0 * first).abs() < 1e-10);
        assert!(first > 0.0);
    }

    #[test]
    fn pairwise_oracle_without_correlation_is_a_product() {
        let w = GaussianWorld::equicorrelated(3, 0.0)
            .unwrap()
            .with_scores(vec![0.3, -0.2, 0.6]);
        let mut o = StaticOracle::pairwise(&w, 1.0).unwrap();
        let id = MarketId::new(0b111).unwrap();
        let prod: f64 = (0..3).map(|i| w.base_signal(i)).product();
        assert!((o.quote(id).unwrap() - prod).abs() < 1e-7);
    }

    #[test]
    fn pairwise_oracle_matches_pairs_not_triples() {
        let w = GaussianWorld::equicorrelated(4, 0.3).unwrap();
        let mut o = StaticOracle::pairwise(&w, 1.0).unwrap();
        let truth = w.true_joint().unwrap().intersection_probs();
        for id in Family::BasePairs.markets(4) {
            assert!((o.quote(id).unwrap() - truth[id.mask() as usize]).abs() < 1e-7);
        }
    }

    #[test]
    fn oracles_ignore_trades() {
        let w = GaussianWorld::equicorrelated(3, 0.3).unwrap();
        let mut o = StaticOracle::gaussian(&w, 1.0).unwrap();
        let before = o.clone();
        for id in Family::Complete.markets(3) {
            o.trade(id, 0.9).unwrap();
        }
        assert_eq!(o, before);
    }

    #[test]
    fn true_oracle_has_zero_loss() {
        let w = GaussianWorld::equicorrelated(3, 0.3).unwrap();
        let mut o = TrueOracle(StaticOracle::truth(&w, 1.0).unwrap());
        for id in Family::Complete.markets(3) {
            assert!(o.trade(id, w.parlay_signal(id)).unwrap() < 1e-18);
        }
    }

    #[test]
    fn independent_books_reach_their_targets() {
        let mut p = IndependentLmsr::new(1.0);
        let id = MarketId::new(0b101).unwrap();
        assert_eq!(p.quote(id).unwrap(), 0.25);
        assert!(p.trade(id, 0.4).unwrap() > 0.0);
        assert!(p.trade(id, 0.4).unwrap().abs() < 1e-15);
        assert_eq!(p.quote(MarketId::single(0)).unwrap(), 0.5);
    }

    #[test]
    fn model_names_round_trip() {
        for k in ModelKind::ALL {
            assert_eq!(k.name().parse::<ModelKind>().unwrap(), k);
        }
        assert!("nope".parse::<ModelKind>().is_err());
    }
}
