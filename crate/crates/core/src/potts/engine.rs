use std::collections::BTreeMap;

use crate::error::IsingError;
use crate::lmsr::{expected_loss_kl, expected_loss_kl_categorical, BinaryBook, KStateBook};
use crate::numeric::{clamp_distribution, clamp_prob};

use super::infer::{CategoricalParlay, PottsBeliefs};
use super::params::PottsParams;

/// Categorical markets priced off one shared Potts belief state: a
/// `K_i`-state LMSR per base market and a YES/NO LMSR per parlay, every
/// book kept at the model's price.
#[derive(Debug, Clone)]
pub struct PottsEngine {
    pub params: PottsParams,
    pub b: f64,
    pub eta_theta: f64,
    pub eta_w: f64,
    pub base_books: Vec<KStateBook>,
    pub parlay_books: BTreeMap<CategoricalParlay, BinaryBook>,
    beliefs: PottsBeliefs,
}

impl PottsEngine {
    pub fn new(k: &[usize], b: f64, eta_theta: f64, eta_w: f64) -> Result<Self, IsingError> {
        Self::from_params(PottsParams::zeros(k)?, b, eta_theta, eta_w)
    }

    pub fn from_params(params: PottsParams, b: f64, eta_theta: f64, eta_w: f64) -> Result<Self, IsingError> {
        if !(b > 0.0) {
            return Err(IsingError::InvalidParams("liquidity must be positive".into()));
        }
        let beliefs = PottsBeliefs::new(&params)?;
        let mut base_books: Vec<KStateBook> = params.k.iter().map(|&k| KStateBook::uniform(k, b)).collect();
        for (i, book) in base_books.iter_mut().enumerate() {
            book.resync_to(&beliefs.marginal(i));
        }
        Ok(Self {
            params,
            b,
            eta_theta,
            eta_w,
            base_books,
            parlay_books: BTreeMap::new(),
            beliefs,
        })
    }

    pub fn beliefs(&self) -> &PottsBeliefs {
        &self.beliefs
    }

    pub fn quote_base(&mut self, i: usize) -> Vec<f64> {
        let p = self.beliefs.marginal(i);
        self.base_books[i].resync_to(&p);
        p
    }

    pub fn quote_parlay(&mut self, parlay: &CategoricalParlay) -> Result<f64, IsingError> {
        let q = self.beliefs.event_prob(parlay)?;
        let b = self.b;
        self.parlay_books
            .entry(parlay.clone())
            .or_insert_with(|| BinaryBook::new(b))
            .resync_to(clamp_prob(q));
        Ok(q)
    }

    fn learn(&mut self, grad: &[f64]) -> Result<(), IsingError> {
        self.params.step(grad, self.eta_theta, self.eta_w);
        self.beliefs = PottsBeliefs::new(&self.params)?;
        Ok(())
    }

    /// Fill the base book to `target`, then take one categorical
    /// cross-entropy step. Returns the trader's expected profit.
    pub fn trade_base(&mut self, i: usize, target: &[f64]) -> Result<f64, IsingError> {
        let target = clamp_distribution(target);
        let posted = clamp_distribution(&self.quote_base(i));
        let loss = expected_loss_kl_categorical(&target, &posted, self.b);
        self.base_books[i].fill_to_target(&target);
        let grad = self.beliefs.grad_ce_categorical(i, &target)?;
        self.learn(&grad)?;
        Ok(loss)
    }

    pub fn trade_parlay(&mut self, parlay: &CategoricalParlay, p_target: f64) -> Result<f64, IsingError> {
        let target = clamp_prob(p_target);
        let posted = self.quote_parlay(parlay)?;
        let loss = expected_loss_kl(target, posted, self.b);
        self.parlay_books
            .get_mut(parlay)
            .expect("quoted book exists")
            .fill_to_price(target);
        let grad = self.beliefs.grad_ce(parlay, target)?;
        self.learn(&grad)?;
        Ok(loss)
    }
}

/// One isolated book per listed categorical contract; parlays open at the
/// uniform-model price `Π 1/K_i`.
#[derive(Debug, Clone)]
pub struct IndependentCategorical {
    pub k: Vec<usize>,
    pub b: f64,
    pub base_books: Vec<KStateBook>,
    pub parlay_books: BTreeMap<CategoricalParlay, BinaryBook>,
}

impl IndependentCategorical {
    pub fn new(k: &[usize], b: f64) -> Self {
        Self {
            k: k.to_vec(),
            b,
            base_books: k.iter().map(|&ki| KStateBook::uniform(ki, b)).collect(),
            parlay_books: BTreeMap::new(),
        }
    }

    pub fn trade_base(&mut self, i: usize, target: &[f64]) -> f64 {
        let target = clamp_distribution(target);
        let posted = clamp_distribution(&self.base_books[i].prices());
        let loss = expected_loss_kl_categorical(&target, &posted, self.b);
        self.base_books[i].fill_to_target(&target);
        loss
    }

    pub fn trade_parlay(&mut self, parlay: &CategoricalParlay, p_target: f64) -> f64 {
        let (b, k) = (self.b, &self.k);
        let book = self.parlay_books.entry(parlay.clone()).or_insert_with(|| {
            let p: f64 = parlay.legs().iter().map(|&(i, _)| 1.0 / k[i] as f64).product();
            BinaryBook::with_price(b, p)
        });
        let target = clamp_prob(p_target);
        let loss = expected_loss_kl(target, book.price(), b);
        book.fill_to_price(target);
        loss
    }
}
