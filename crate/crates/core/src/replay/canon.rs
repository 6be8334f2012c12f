use std::collections::BTreeMap;

use crate::bp::Beliefs;
use crate::error::{IsingError, ReplayError};
use crate::ising::{IsingParams, Mask, SufficientStats};
use crate::numeric::logit;

use super::stream::{ComboTrade, MarketIndex};

/// Mixed-side event as a signed sum of all-YES events, with its target.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalTarget {
    pub yes: Mask,
    pub no: Mask,
    /// `(S, ±1)`; `S = 0` stands for the sure event.
    pub terms: Vec<(Mask, f64)>,
    pub target_prob: f64,
}

/// `P(YES legs, NO legs) = Σ_{A ⊆ NO} (-1)^{|A|} P(YES ∪ A all YES)`,
/// subsets of the NO legs enumerated in increasing mask order.
pub fn expansion_terms(yes: Mask, no: Mask) -> Vec<(Mask, f64)> {
    let mut out = Vec::with_capacity(1 << no.count_ones());
    let mut a: Mask = 0;
    loop {
        let sign = if a.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        out.push((yes | a, sign));
        if a == no {
            break;
        }
        a = (a.wrapping_sub(no)) & no;
    }
    out.sort_by_key(|t| t.0);
    out
}

/// Rewrite a trade as its all-YES expansion and evaluate it.
///
/// The execution price is the observed all-YES quote on the trade's full
/// leg set; every other term comes from `lookup`. With a constant fee added
/// to every all-YES quote the signs sum to zero whenever at least one leg
/// is YES, so the fee drops out.
pub fn canonicalize(
    trade: &ComboTrade,
    index: &MarketIndex,
    mut lookup: impl FnMut(Mask) -> Option<f64>,
) -> Result<CanonicalTarget, ReplayError> {
    let (yes, no) = index.split(trade)?;
    let full = yes | no;
    let terms = expansion_terms(yes, no);
    let mut missing = Vec::new();
    let mut total = 0.0;
    for &(s, sign) in &terms {
        let p = if s == 0 {
            Some(1.0)
        } else if s == full {
            Some(trade.exec_price)
        } else {
            lookup(s)
        };
        match p {
            Some(p) => total += sign * p,
            None => missing.push(index.names(s)),
        }
    }
    if !missing.is_empty() {
        return Err(ReplayError::MissingPrice(missing));
    }
    Ok(CanonicalTarget {
        yes,
        no,
        terms,
        target_prob: total.clamp(0.0, 1.0),
    })
}

/// Model value of a signed expansion.
pub fn expansion_prob(beliefs: &Beliefs, terms: &[(Mask, f64)]) -> Result<f64, IsingError> {
    let mut q = 0.0;
    for &(s, sign) in terms {
        q += sign * if s == 0 { 1.0 } else { beliefs.event_prob(s)? };
    }
    Ok(q)
}

pub fn grad_expansion(beliefs: &Beliefs, m: usize, terms: &[(Mask, f64)]) -> Result<SufficientStats, IsingError> {
    let mut g = SufficientStats::zeros(m);
    for &(s, sign) in terms {
        if s != 0 {
            g.add_scaled(&beliefs.grad_event_prob(s)?, sign);
        }
    }
    Ok(g)
}

/// Median of the first `window` mids per market becomes `θ_i = logit(·)`;
/// couplings start at zero.
pub fn init_from_candles(
    index: &MarketIndex,
    mids: &BTreeMap<String, Vec<f64>>,
    window: usize,
) -> Result<IsingParams, ReplayError> {
    let mut theta = Vec::with_capacity(index.len());
    for key in index.keys() {
        let first: Vec<f64> = mids
            .get(key)
            .map(|v| v.iter().take(window).copied().collect())
            .unwrap_or_default();
        if first.is_empty() {
            return Err(ReplayError::EmptyMarket(key.clone()));
        }
        theta.push(logit(median(first)));
    }
    let m = theta.len();
    Ok(IsingParams::new(theta, vec![0.0; m * m.saturating_sub(1) / 2])?)
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}
