//! Logarithmic market scoring rule books.
//!
//! A binary book keeps one scalar `z` (YES minus NO shares) with cost
//! `C(z) = b ln(1 + e^{z/b})`. A K-state book keeps a score vector with cost
//! `C(s) = b ln Σ_k e^{s_k / b}`, stored in the zero-sum gauge.

use serde::{Deserialize, Serialize};

use crate::numeric::{bernoulli_kl, categorical_kl, clamp_prob, logit, sigmoid, softplus, EPS_P};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeFill {
    pub delta_shares: f64,
    /// Currency paid by the trader; negative when the trader sells.
    pub cash: f64,
    pub price_pre: f64,
    pub price_post: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryBook {
    pub z: f64,
    pub b: f64,
    /// Currency received from traders through real fills.
    pub cumulative_cost: f64,
    /// Net YES shares sold to traders through real fills.
    pub net_shares: f64,
}

impl BinaryBook {
    pub fn new(b: f64) -> Self {
        Self::with_price(b, 0.5)
    }

    pub fn with_price(b: f64, p: f64) -> Self {
        assert!(b > 0.0, "liquidity must be positive");
        Self {
            z: b * logit(clamp_prob(p)),
            b,
            cumulative_cost: 0.0,
            net_shares: 0.0,
        }
    }

    #[inline]
    pub fn cost(&self, z: f64) -> f64 {
        self.b * softplus(z / self.b)
    }

    #[inline]
    pub fn price(&self) -> f64 {
        sigmoid(self.z / self.b)
    }

    /// Buy `delta` YES shares (sell when negative).
    pub fn fill_shares(&mut self, delta: f64) -> TradeFill {
        let price_pre = self.price();
        let cash = self.cost(self.z + delta) - self.cost(self.z);
        self.z += delta;
        self.cumulative_cost += cash;
        self.net_shares += delta;
        TradeFill {
            delta_shares: delta,
            cash,
            price_pre,
            price_post: self.price(),
        }
    }

    /// Trade exactly enough shares to move the posted price to `p_target`.
    pub fn fill_to_price(&mut self, p_target: f64) -> TradeFill {
        let target = clamp_prob(p_target);
        let price_pre = self.price();
        let z_new = self.b * logit(target);
        let delta = z_new - self.z;
        let cash = self.cost(z_new) - self.cost(self.z);
        self.z = z_new;
        self.cumulative_cost += cash;
        self.net_shares += delta;
        TradeFill {
            delta_shares: delta,
            cash,
            price_pre,
            price_post: target,
        }
    }

    /// Price change caused by buying `x` shares, without trading.
    pub fn impact(&self, x: f64) -> f64 {
        sigmoid((self.z + x) / self.b) - self.price()
    }

    /// Reset the posted price with no cash and no share transfer.
    pub fn resync_to(&mut self, p: f64) {
        self.z = self.b * logit(clamp_prob(p));
    }

    /// Market-maker loss at resolution: payout owed minus cash collected.
    pub fn settle(&self, outcome: bool) -> f64 {
        let payout = if outcome { self.net_shares } else { 0.0 };
        payout - self.cumulative_cost
    }
}

/// Expected monetary loss of one informed fill, `b · KL(p_true ‖ p_posted)`.
pub fn expected_loss_kl(p_true: f64, p_posted: f64, b: f64) -> f64 {
    b * bernoulli_kl(p_true, p_posted)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KStateFill {
    /// Zero-sum share bundle bought by the trader.
    pub shares: Vec<f64>,
    pub cash: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KStateBook {
    pub scores: Vec<f64>,
    pub b: f64,
    pub cumulative_cost: f64,
    pub net_shares: Vec<f64>,
}

impl KStateBook {
    pub fn uniform(k: usize, b: f64) -> Self {
        assert!(k >= 2 && b > 0.0);
        Self {
            scores: vec![0.0; k],
            b,
            cumulative_cost: 0.0,
            net_shares: vec![0.0; k],
        }
    }

    pub fn k(&self) -> usize {
        self.scores.len()
    }

    pub fn cost_of(&self, scores: &[f64]) -> f64 {
        let mx = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        mx + self.b * scores.iter().map(|s| ((s - mx) / self.b).exp()).sum::<f64>().ln()
    }

    pub fn prices(&self) -> Vec<f64> {
        let mx = self.scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = self.scores.iter().map(|s| ((s - mx) / self.b).exp()).collect();
        let z: f64 = e.iter().sum();
        e.into_iter().map(|v| v / z).collect()
    }

    fn scores_for(&self, target: &[f64]) -> Vec<f64> {
        let raw: Vec<f64> = target.iter().map(|p| self.b * p.max(EPS_P).ln()).collect();
        let mean = raw.iter().sum::<f64>() / raw.len() as f64;
        raw.into_iter().map(|s| s - mean).collect()
    }

    /// Move prices to `target` by buying the zero-sum bundle between the
    /// current and target score vectors.
    pub fn fill_to_target(&mut self, target: &[f64]) -> KStateFill {
        assert_eq!(target.len(), self.k());
        let new = self.scores_for(target);
        let cash = self.cost_of(&new) - self.cost_of(&self.scores);
        let shares: Vec<f64> = new.iter().zip(&self.scores).map(|(a, b)| a - b).collect();
        for (n, d) in self.net_shares.iter_mut().zip(&shares) {
            *n += d;
        }
        self.cumulative_cost += cash;
        self.scores = new;
        KStateFill { shares, cash }
    }

    /// Buy an arbitrary share bundle; the stored scores are re-gauged.
    pub fn fill_shares(&mut self, shares: &[f64]) -> KStateFill {
        let new: Vec<f64> = self.scores.iter().zip(shares).map(|(s, d)| s + d).collect();
        let cash = self.cost_of(&new) - self.cost_of(&self.scores);
        for (n, d) in self.net_shares.iter_mut().zip(shares) {
            *n += d;
        }
        self.cumulative_cost += cash;
        let mean = new.iter().sum::<f64>() / new.len() as f64;
        // Subtracting the mean shifts cost and every payout equally.
        self.net_shares.iter_mut().for_each(|n| *n -= mean);
        self.cumulative_cost -= mean;
        self.scores = new.into_iter().map(|s| s - mean).collect();
        KStateFill {
            shares: shares.to_vec(),
            cash,
        }
    }

    pub fn resync_to(&mut self, target: &[f64]) {
        self.scores = self.scores_for(target);
    }

    pub fn settle(&self, outcome: usize) -> f64 {
        self.net_shares[outcome] - self.cumulative_cost
    }
}

/// `b · KL(p_true ‖ p_posted)` for a categorical market.
pub fn expected_loss_kl_categorical(p_true: &[f64], p_posted: &[f64], b: f64) -> f64 {
    b * categorical_kl(p_true, p_posted)
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn binary_loss_is_bounded(b in 0.1f64..50.0, p0 in 0.01f64..0.99, fills in prop::collection::vec(-100.0f64..100.0, 1..60)) {
            let mut book = BinaryBook::with_price(b, p0);
            for d in fills {
                book.fill_shares(d);
                let p = book.price();
                prop_assert!((0.0..=1.0).contains(&p));
            }
            // Opening at p0 bounds the loss by b·ln(1/min(p0, 1-p0)).
            let bound = b * (1.0 / p0.min(1.0 - p0)).ln() + 1e-9;
            prop_assert!(book.settle(true) <= bound);
            prop_assert!(book.settle(false) <= bound);
        }

        #[test]
        fn fill_to_price_lands(b in 0.1f64..50.0, targets in prop::collection::vec(0.001f64..0.999, 1..20)) {
            let mut book = BinaryBook::new(b);
            for t in targets {
                book.fill_to_price(t);
                prop_assert!((book.price() - t).abs() < 1e-9);
            }
        }

        #[test]
        fn k_state_prices_stay_normalized(k in 2usize..7, raw in prop::collection::vec(-30.0f64..30.0, 7 * 20)) {
            let mut book = KStateBook::uniform(k, 3.0);
            for chunk in raw.chunks(7).take(20) {
                book.fill_shares(&chunk[..k]);
                let p = book.prices();
                prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                prop_assert!(p.iter().all(|&x| x > 0.0));
            }
            let bound = 3.0 * (k as f64).ln() + 1e-9;
            prop_assert!((0..k).all(|o| book.settle(o) <= bound));
        }
    }
}
