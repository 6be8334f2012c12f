//! Audit of a set of quotes against the constraints any joint law obeys:
//! a parlay never costs more than any sub-parlay (the Fréchet upper bound
//! in the two-leg case), and a two-leg parlay never costs less than
//! `P(A) + P(B) - 1`.

use serde::Serialize;

use crate::engine::{MarketId, ParlayEngine};
use crate::error::IsingError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// `q(T) > q(S)` for `S ⊂ T`.
    Monotonicity,
    /// `q(ij) < q(i) + q(j) - 1`.
    FrechetLower,
    /// Price outside `[0, 1]`.
    Range,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub market: MarketId,
    /// The sub-parlay (or leg pair) that sets the violated bound.
    pub reference: Option<MarketId>,
    pub quote: f64,
    pub bound: f64,
    /// `quote / bound`, the overpricing factor for upper-bound violations.
    pub ratio: f64,
}

/// Quote gaps below this are treated as rounding.
pub const COHERENCE_TOL: f64 = 1e-12;

pub fn coherence_report(quotes: &[(MarketId, f64)]) -> Vec<Violation> {
    let mut out = Vec::new();
    for &(id, q) in quotes {
        if !(0.0..=1.0).contains(&q) || q.is_nan() {
            out.push(Violation {
                kind: ViolationKind::Range,
                market: id,
                reference: None,
                quote: q,
                bound: q.clamp(0.0, 1.0),
                ratio: f64::NAN,
            });
        }
    }
    for &(sup, q_sup) in quotes {
        // For each parlay keep only its tightest sub-parlay bound.
        let tightest = quotes
            .iter()
            .filter(|(sub, _)| *sub != sup && sub.is_subset_of(sup))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        if let Some(&(sub, q_sub)) = tightest {
            if q_sup > q_sub + COHERENCE_TOL {
                out.push(Violation {
                    kind: ViolationKind::Monotonicity,
                    market: sup,
                    reference: Some(sub),
                    quote: q_sup,
                    bound: q_sub,
                    ratio: q_sup / q_sub,
                });
            }
        }
        if sup.size() == 2 {
            let legs: Vec<usize> = sup.legs().collect();
            let find = |i: usize| {
                quotes
                    .iter()
                    .find(|(id, _)| *id == MarketId::single(i))
                    .map(|p| p.1)
            };
            if let (Some(a), Some(b)) = (find(legs[0]), find(legs[1])) {
                let lower = a + b - 1.0;
                if q_sup < lower - COHERENCE_TOL {
                    out.push(Violation {
                        kind: ViolationKind::FrechetLower,
                        market: sup,
                        reference: None,
                        quote: q_sup,
                        bound: lower,
                        ratio: q_sup / lower,
                    });
                }
            }
        }
    }
    out
}

impl ParlayEngine {
    pub fn coherence_report(&mut self, family: &[MarketId]) -> Result<Vec<Violation>, IsingError> {
        let quotes = family
            .iter()
            .map(|&id| self.quote(id).map(|q| (id, q)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(coherence_report(&quotes))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Family;

    fn id(legs: &[usize]) -> MarketId {
        MarketId::from_legs(legs).unwrap()
    }

    #[test]
    fn listed_combo_far_above_its_cheapest_leg() {
        let quotes = [(id(&[0]), 0.82), (id(&[1]), 0.14), (id(&[0, 1]), 0.80)];
        let v = coherence_report(&quotes);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::Monotonicity);
        assert_eq!(v[0].reference, Some(id(&[1])));
        assert!((v[0].ratio - 5.71).abs() < 0.005);
    }

    #[test]
    fn product_quotes_pass_the_upper_bound() {
        let quotes = [(id(&[0]), 0.6), (id(&[1]), 0.7), (id(&[0, 1]), 0.42)];
        assert!(coherence_report(&quotes).is_empty());
    }

    #[test]
    fn lower_bound_violation_is_flagged() {
        let quotes = [(id(&[0]), 0.9), (id(&[1]), 0.9), (id(&[0, 1]), 0.7)];
        let v = coherence_report(&quotes);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::FrechetLower);
    }

    #[test]
    fn engine_quotes_are_coherent() {
        let mut e = ParlayEngine::new(4, 1.0, 0.5, 0.5).unwrap();
        let fam = Family::Complete.markets(4);
        for (k, m) in fam.iter().enumerate() {
            e.process_trade(*m, if k % 2 == 0 { 0.9 } else { 0.05 }).unwrap();
        }
        assert!(e.coherence_report(&fam).unwrap().is_empty());
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use crate::engine::Family;
    use crate::ising::IsingParams;
    use proptest::prelude::*;

    fn params(m: usize) -> impl Strategy<Value = IsingParams> {
        prop::collection::vec(-3.0f64..3.0, m * (m + 1) / 2).prop_map(move |v| IsingParams::from_flat(m, &v).unwrap())
    }

    proptest! {
        #[test]
        fn quotes_respect_frechet_and_monotonicity(
            (m, p) in (2usize..8).prop_flat_map(|m| (Just(m), params(m))),
            sup_bits in 1u32..256,
            sub_bits in 0u32..256,
        ) {
            let full = (1u32 << m) - 1;
            let sup = (sup_bits & full).max(1);
            let mut family: Vec<MarketId> = (0..m).filter(|i| sup >> i & 1 == 1).map(MarketId::single).collect();
            family.push(MarketId::new(sup).unwrap());
            if let Some(sub) = MarketId::new(sub_bits & sup) {
                family.push(sub);
            }
            family.sort();
            family.dedup();
            let mut e = ParlayEngine::from_params(p, 1.0, 0.2, 0.2).unwrap();
            prop_assert!(e.coherence_report(&family).unwrap().is_empty());
        }

        #[test]
        fn trades_keep_quotes_coherent(targets in prop::collection::vec((1u32..16, 0.01f64..0.99), 1..30)) {
            let mut e = ParlayEngine::new(4, 1.0, 0.2, 0.2).unwrap();
            for (s, t) in targets {
                e.process_trade(MarketId::new(s).unwrap(), t).unwrap();
            }
            let family = Family::Complete.markets(4);
            prop_assert!(e.coherence_report(&family).unwrap().is_empty());
        }
    }
}
