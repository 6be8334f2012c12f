//! The shared-belief market maker: one Ising state prices every contract,
//! each real trade takes one SGD step on it, and every other book is then
//! resynchronized to the new marginals.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bp::Beliefs;
use crate::error::IsingError;
use crate::ising::{IsingParams, Mask};
use crate::lmsr::{expected_loss_kl, BinaryBook, TradeFill};
use crate::numeric::clamp_prob;

/// A contract paying 1 iff every leg occurs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MarketId {
    legs: Mask,
}

impl MarketId {
    pub fn new(legs: Mask) -> Option<Self> {
        (legs != 0).then_some(Self { legs })
    }

    pub fn single(i: usize) -> Self {
        Self { legs: 1 << i }
    }

    pub fn from_legs(legs: &[usize]) -> Option<Self> {
        Self::new(legs.iter().fold(0, |acc, &i| acc | (1 << i)))
    }

    #[inline]
    pub fn mask(self) -> Mask {
        self.legs
    }

    pub fn size(self) -> usize {
        self.legs.count_ones() as usize
    }

    pub fn legs(self) -> impl Iterator<Item = usize> {
        (0..Mask::BITS as usize).filter(move |&i| self.legs >> i & 1 == 1)
    }

    pub fn is_subset_of(self, other: MarketId) -> bool {
        self.legs & other.legs == self.legs
    }

    pub fn fits(self, m: usize) -> bool {
        (self.legs >> m) == 0
    }
}

impl fmt::Display for MarketId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let legs: Vec<String> = self.legs().map(|i| i.to_string()).collect();
        write!(f, "{{{}}}", legs.join(","))
    }
}

/// Which contracts are listed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Every nonempty subset, `2^m - 1` markets.
    Complete,
    BaseOnly,
    BasePairs,
    /// Base markets, pairs and three-leg parlays.
    BasePairsK3,
}

impl Family {
    pub fn markets(self, m: usize) -> Vec<MarketId> {
        let max_legs = match self {
            Family::Complete => m,
            Family::BaseOnly => 1,
            Family::BasePairs => 2,
            Family::BasePairsK3 => 3,
        };
        let mut out: Vec<MarketId> = (1..(1 as Mask) << m)
            .filter(|s| s.count_ones() as usize <= max_legs)
            .map(|s| MarketId { legs: s })
            .collect();
        out.sort_by_key(|id| (id.size(), id.legs));
        out
    }
}

/// How a trader's target price turns into a fill on the traded book.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TradeMode {
    FillToPrice,
    /// Buy (or sell) a fixed number of shares toward the target.
    FixedSize(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeRecord {
    pub round: u64,
    pub market: MarketId,
    pub trader_target: f64,
    pub posted_pre: f64,
    pub kl_loss: f64,
    pub fill: TradeFill,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub params: IsingParams,
    pub round: u64,
    pub eta_theta: f64,
    pub eta_w: f64,
    pub b: f64,
}

#[derive(Debug, Clone)]
pub struct ParlayEngine {
    pub params: IsingParams,
    pub books: BTreeMap<MarketId, BinaryBook>,
    pub eta_theta: f64,
    pub eta_w: f64,
    pub b: f64,
    pub projection_radius: Option<f64>,
    pub trade_mode: TradeMode,
    pub round: u64,
    beliefs: Beliefs,
}

impl ParlayEngine {
    pub fn new(m: usize, b: f64, eta_theta: f64, eta_w: f64) -> Result<Self, IsingError> {
        Self::from_params(IsingParams::zeros(m), b, eta_theta, eta_w)
    }

    pub fn from_params(
        params: IsingParams,
        b: f64,
        eta_theta: f64,
        eta_w: f64,
    ) -> Result<Self, IsingError> {
        params.validate()?;
        let beliefs = Beliefs::new(&params)?;
        Ok(Self {
            params,
            books: BTreeMap::new(),
            eta_theta,
            eta_w,
            b,
            projection_radius: None,
            trade_mode: TradeMode::FillToPrice,
            round: 0,
            beliefs,
        })
    }

    pub fn m(&self) -> usize {
        self.params.m
    }

    pub fn beliefs(&self) -> &Beliefs {
        &self.beliefs
    }

    /// Model price without touching any book.
    pub fn price(&self, id: MarketId) -> Result<f64, IsingError> {
        self.check(id)?;
        self.beliefs.event_prob(id.mask())
    }

    fn check(&self, id: MarketId) -> Result<(), IsingError> {
        if id.fits(self.m()) {
            Ok(())
        } else {
            Err(IsingError::InvalidParams(format!(
                "market {id} out of range for m = {}",
                self.m()
            )))
        }
    }

    /// Posted price; materializes the book on first use.
    pub fn quote(&mut self, id: MarketId) -> Result<f64, IsingError> {
        let q = self.price(id)?;
        let b = self.b;
        self.books
            .entry(id)
            .and_modify(|book| book.resync_to(q))
            .or_insert_with(|| BinaryBook::with_price(b, q));
        Ok(q)
    }

    pub fn quote_all(&mut self, family: &[MarketId]) -> Result<Vec<f64>, IsingError> {
        family.iter().map(|&id| self.quote(id)).collect()
    }

    /// Fill, SGD step, shadow resync.
    pub fn process_trade(&mut self, id: MarketId, p_target: f64) -> Result<TradeRecord, IsingError> {
        let target = clamp_prob(p_target);
        let posted_pre = self.quote(id)?;
        let kl_loss = expected_loss_kl(target, posted_pre, self.b);
        let book = self.books.get_mut(&id).expect("quoted book exists");
        let fill = match self.trade_mode {
            TradeMode::FillToPrice => book.fill_to_price(target),
            TradeMode::FixedSize(size) => {
                let dir = (target - posted_pre).signum();
                book.fill_shares(dir * size)
            }
        };
        let grad = self.beliefs.grad_ce(id.mask(), target)?;
        self.params.step(&grad, self.eta_theta, self.eta_w);
        if let Some(r) = self.projection_radius {
            self.params.project_to_ball(r);
        }
        self.beliefs = Beliefs::new(&self.params)?;
        self.shadow_sync()?;
        self.round += 1;
        Ok(TradeRecord {
            round: self.round,
            market: id,
            trader_target: target,
            posted_pre,
            kl_loss,
            fill,
        })
    }

    /// Reprice every materialized book to the current marginals.
    pub fn shadow_sync(&mut self) -> Result<(), IsingError> {
        for (id, book) in self.books.iter_mut() {
            book.resync_to(self.beliefs.event_prob(id.mask())?);
        }
        Ok(())
    }

    /// Replace the belief state, e.g. after an external update rule.
    pub fn set_params(&mut self, params: IsingParams) -> Result<(), IsingError> {
        params.validate()?;
        self.beliefs = Beliefs::new(&params)?;
        self.params = params;
        self.shadow_sync()
    }

    /// Largest gap between a materialized book and its model price.
    pub fn max_sync_error(&self) -> Result<f64, IsingError> {
        let mut worst: f64 = 0.0;
        for (id, book) in &self.books {
            worst = worst.max((book.price() - self.beliefs.event_prob(id.mask())?).abs());
        }
        Ok(worst)
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            params: self.params.clone(),
            round: self.round,
            eta_theta: self.eta_theta,
            eta_w: self.eta_w,
            b: self.b,
        }
    }

    pub fn restore(cp: Checkpoint) -> Result<Self, IsingError> {
        let mut e = Self::from_params(cp.params, cp.b, cp.eta_theta, cp.eta_w)?;
        e.round = cp.round;
        Ok(e)
    }
}
