use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bp::Beliefs;
use crate::error::ReplayError;
use crate::harness::{fmt_sig10, CsvTable};
use crate::ising::{ce_slope, IsingParams, Mask};
use crate::lmsr::BinaryBook;
use crate::numeric::clamp_prob;

use super::canon::{canonicalize, expansion_prob, grad_expansion, init_from_candles, CanonicalTarget};
use super::stream::{check_sorted, ComboTrade, MarketIndex, StreamEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplayMode {
    /// External base books; each trade moves its parlay book to the
    /// canonical target and the model learns from that price.
    FullMarket,
    /// The model quotes every parlay itself and learns only from accepted
    /// order flow.
    Standalone,
}

impl std::str::FromStr for ReplayMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "full_market" | "full-market" => Ok(ReplayMode::FullMarket),
            "standalone" => Ok(ReplayMode::Standalone),
            _ => Err(format!("unknown replay mode {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayConfig {
    pub mode: ReplayMode,
    pub eta_theta: f64,
    pub eta_w: f64,
    pub b: f64,
    /// Candles per market used for the initial fields.
    pub init_window: usize,
    /// Order-flow weight saturates at this many shares.
    pub q_cap: f64,
    /// Pseudo-target offset for order-flow updates.
    pub tick: f64,
    pub sharpe_buckets: usize,
}

impl Default for ReplayConfig {
    fn default() -> Self {
        Self {
            mode: ReplayMode::FullMarket,
            eta_theta: 0.1,
            eta_w: 0.01,
            b: 10_000.0,
            init_window: 30,
            q_cap: 100.0,
            tick: 0.01,
            sharpe_buckets: 5,
        }
    }
}

/// Ground truth attached to a synthetic stream, one entry per trade.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TradeTruth {
    /// Fee-free probability of the all-YES leg set.
    pub all_yes: Vec<f64>,
    /// Fee-free probability of the traded mixed event.
    pub mixed: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FillRecord {
    pub timestamp: i64,
    pub yes: Mask,
    pub no: Mask,
    pub exec_price: f64,
    /// Correlation-aware quote on the all-YES leg set.
    pub quote: f64,
    /// Product of model marginals on the same leg set.
    pub indep_quote: f64,
    pub target: f64,
    pub accepted: bool,
    pub shares: f64,
    pub cash: f64,
    /// Expected pool PnL of the fill under the true probability, when known.
    pub mark: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplayReport {
    pub mode: ReplayMode,
    pub candles: usize,
    pub trades: usize,
    pub accepted: usize,
    pub rejected: usize,
    /// Cash received by the pool over all fills.
    pub revenue: f64,
    /// Only real fills; rejected quotes never enter.
    pub ledger: Vec<FillRecord>,
    pub bucket_returns: Vec<f64>,
    pub sharpe: Option<f64>,
    /// Fraction of fills with positive mark; a proxy, defined on synthetic
    /// streams only.
    pub win_rate_proxy: Option<f64>,
    /// Mean `|quote - truth|` over accepted and over all trades.
    pub mean_err_accepted: Option<f64>,
    pub mean_err_all: Option<f64>,
    pub params: Option<IsingParams>,
}

impl ReplayReport {
    fn empty(mode: ReplayMode) -> Self {
        Self {
            mode,
            candles: 0,
            trades: 0,
            accepted: 0,
            rejected: 0,
            revenue: 0.0,
            ledger: Vec::new(),
            bucket_returns: Vec::new(),
            sharpe: None,
            win_rate_proxy: None,
            mean_err_accepted: None,
            mean_err_all: None,
            params: None,
        }
    }

    pub fn accept_rate(&self) -> Option<f64> {
        (self.trades > 0).then(|| self.accepted as f64 / self.trades as f64)
    }

    pub fn to_csv(&self) -> CsvTable {
        let opt = |x: Option<f64>| x.map(fmt_sig10).unwrap_or_default();
        let mut t = CsvTable::new(&[
            "mode",
            "candles",
            "trades",
            "accepted",
            "rejected",
            "revenue",
            "sharpe",
            "win_rate_proxy",
            "mean_err_accepted",
            "mean_err_all",
        ]);
        t.push(vec![
            match self.mode {
                ReplayMode::FullMarket => "full_market".into(),
                ReplayMode::Standalone => "standalone".into(),
            },
            self.candles.to_string(),
            self.trades.to_string(),
            self.accepted.to_string(),
            self.rejected.to_string(),
            fmt_sig10(self.revenue),
            opt(self.sharpe),
            opt(self.win_rate_proxy),
            opt(self.mean_err_accepted),
            opt(self.mean_err_all),
        ]);
        t
    }

    pub fn ledger_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["ts", "yes", "no", "exec_price", "quote", "indep_quote", "target", "shares", "cash", "mark"]);
        for f in &self.ledger {
            t.push(vec![
                f.timestamp.to_string(),
                f.yes.to_string(),
                f.no.to_string(),
                fmt_sig10(f.exec_price),
                fmt_sig10(f.quote),
                fmt_sig10(f.indep_quote),
                fmt_sig10(f.target),
                fmt_sig10(f.shares),
                fmt_sig10(f.cash),
                f.mark.map(fmt_sig10).unwrap_or_default(),
            ]);
        }
        t
    }
}

/// Shared belief state driven by a replayed stream.
#[derive(Debug, Clone)]
pub struct ReplayEngine {
    pub index: MarketIndex,
    pub params: IsingParams,
    pub cfg: ReplayConfig,
    /// One book per traded `(YES, NO)` signature.
    pub books: BTreeMap<(Mask, Mask), BinaryBook>,
    /// Latest all-YES execution price per leg set.
    pub observed: BTreeMap<Mask, f64>,
    beliefs: Beliefs,
}

impl ReplayEngine {
    pub fn new(index: MarketIndex, params: IsingParams, cfg: ReplayConfig) -> Result<Self, ReplayError> {
        let beliefs = Beliefs::new(&params)?;
        Ok(Self {
            index,
            params,
            cfg,
            books: BTreeMap::new(),
            observed: BTreeMap::new(),
            beliefs,
        })
    }

    /// Index every key that has a candle and fit fields to the first
    /// `init_window` mids.
    pub fn from_stream(events: &[StreamEvent], cfg: ReplayConfig) -> Result<Self, ReplayError> {
        let mut mids: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for e in events {
            if let StreamEvent::Candle(c) = e {
                mids.entry(c.market_key.clone()).or_default().push(c.mid);
            }
        }
        let index = MarketIndex::new(mids.keys().cloned())?;
        let params = init_from_candles(&index, &mids, cfg.init_window)?;
        Self::new(index, params, cfg)
    }

    pub fn beliefs(&self) -> &Beliefs {
        &self.beliefs
    }

    fn refresh(&mut self) -> Result<(), ReplayError> {
        self.beliefs = Beliefs::new(&self.params)?;
        for (&(yes, no), book) in self.books.iter_mut() {
            let q = expansion_prob(&self.beliefs, &super::canon::expansion_terms(yes, no))?;
            book.resync_to(clamp_prob(q));
        }
        Ok(())
    }

    /// Field-only cross-entropy step toward the candle mid.
    pub fn apply_candle(&mut self, market: usize, mid: f64) -> Result<(), ReplayError> {
        let mut g = self.beliefs.grad_ce(1 << market, clamp_prob(mid))?;
        let m = self.params.m;
        g.values[m..].iter_mut().for_each(|v| *v = 0.0);
        self.params.step(&g, self.cfg.eta_theta, 0.0);
        self.refresh()
    }

    pub fn canonical(&self, trade: &ComboTrade) -> Result<CanonicalTarget, ReplayError> {
        let mut model_err = None;
        let c = canonicalize(trade, &self.index, |s| match self.observed.get(&s) {
            Some(&p) => Some(p),
            None => match self.beliefs.event_prob(s) {
                Ok(p) => Some(p),
                Err(e) => {
                    model_err = Some(e);
                    None
                }
            },
        });
        if let Some(e) = model_err {
            return Err(e.into());
        }
        c
    }

    fn indep_quote(&self, legs: Mask) -> Result<f64, ReplayError> {
        let mut q = 1.0;
        for i in 0..self.params.m {
            if legs >> i & 1 == 1 {
                q *= self.beliefs.event_prob(1 << i)?;
            }
        }
        Ok(q)
    }

    fn sgd(&mut self, terms: &[(Mask, f64)], target: f64, weight: f64) -> Result<(), ReplayError> {
        let q = expansion_prob(&self.beliefs, terms)?;
        let g = grad_expansion(&self.beliefs, self.params.m, terms)?.scale(weight * ce_slope(target, q));
        self.params.step(&g, self.cfg.eta_theta, self.cfg.eta_w);
        self.refresh()
    }

    /// Full-market fill: move the mixed-event book to the canonical target,
    /// then learn from that price.
    fn trade_full(&mut self, trade: &ComboTrade, truth: Option<f64>) -> Result<FillRecord, ReplayError> {
        let c = self.canonical(trade)?;
        let full = c.yes | c.no;
        let quote = self.beliefs.event_prob(full)?;
        let indep_quote = self.indep_quote(full)?;
        let q_mixed = clamp_prob(expansion_prob(&self.beliefs, &c.terms)?);
        let b = self.cfg.b;
        let book = self
            .books
            .entry((c.yes, c.no))
            .or_insert_with(|| BinaryBook::with_price(b, q_mixed));
        book.resync_to(q_mixed);
        let fill = book.fill_to_price(c.target_prob);
        if c.no == 0 {
            self.observed.insert(full, trade.exec_price);
        }
        self.sgd(&c.terms, clamp_prob(c.target_prob), 1.0)?;
        Ok(FillRecord {
            timestamp: trade.timestamp,
            yes: c.yes,
            no: c.no,
            exec_price: trade.exec_price,
            quote,
            indep_quote,
            target: c.target_prob,
            accepted: true,
            shares: fill.delta_shares,
            cash: fill.cash,
            mark: truth.map(|p| fill.cash - fill.delta_shares * p),
        })
    }

    /// Standalone quote on the all-YES leg set, accepted only when it does
    /// not exceed the trader's execution price.
    fn trade_standalone(&mut self, trade: &ComboTrade, truth: Option<f64>) -> Result<(FillRecord, f64), ReplayError> {
        let (yes, no) = self.index.split(trade)?;
        let full = yes | no;
        let quote = self.beliefs.event_prob(full)?;
        let indep_quote = self.indep_quote(full)?;
        let accepted = quote <= trade.exec_price;
        let mut rec = FillRecord {
            timestamp: trade.timestamp,
            yes,
            no,
            exec_price: trade.exec_price,
            quote,
            indep_quote,
            target: trade.exec_price,
            accepted,
            shares: 0.0,
            cash: 0.0,
            mark: None,
        };
        if accepted {
            // Buy flow: the pseudo-target sits one tick above our own quote.
            let target = clamp_prob(quote + self.cfg.tick);
            let weight = trade.size.min(self.cfg.q_cap) / self.cfg.q_cap;
            rec.target = target;
            rec.shares = trade.size;
            rec.cash = trade.size * quote;
            rec.mark = truth.map(|p| trade.size * (quote - p));
            self.sgd(&[(full, 1.0)], target, weight)?;
        }
        Ok((rec, quote))
    }
}

/// Replay a time-sorted stream. `truth`, when given, has one entry per
/// trade in stream order.
pub fn replay(events: &[StreamEvent], cfg: &ReplayConfig, truth: Option<&TradeTruth>) -> Result<ReplayReport, ReplayError> {
    check_sorted(events)?;
    let mut report = ReplayReport::empty(cfg.mode);
    if events.is_empty() {
        return Ok(report);
    }
    let mut engine = ReplayEngine::from_stream(events, cfg.clone())?;
    let (mut err_acc, mut err_all) = (Vec::new(), Vec::new());
    let mut trade_no = 0;
    let mut fill_ts = Vec::new();
    for e in events {
        match e {
            StreamEvent::Candle(c) => {
                let i = engine.index.get(&c.market_key)?;
                engine.apply_candle(i, c.mid)?;
                report.candles += 1;
            }
            StreamEvent::Trade(t) => {
                let k = trade_no;
                trade_no += 1;
                report.trades += 1;
                match cfg.mode {
                    ReplayMode::FullMarket => {
                        let rec = engine.trade_full(t, truth.map(|tr| tr.mixed[k]))?;
                        if let Some(tr) = truth {
                            err_all.push((rec.quote - tr.all_yes[k]).abs());
                        }
                        report.accepted += 1;
                        report.revenue += rec.cash;
                        fill_ts.push(rec.timestamp);
                        report.ledger.push(rec);
                    }
                    ReplayMode::Standalone => {
                        let (rec, quote) = engine.trade_standalone(t, truth.map(|tr| tr.all_yes[k]))?;
                        if let Some(tr) = truth {
                            let err = (quote - tr.all_yes[k]).abs();
                            err_all.push(err);
                            if rec.accepted {
                                err_acc.push(err);
                            }
                        }
                        if rec.accepted {
                            report.accepted += 1;
                            report.revenue += rec.cash;
                            fill_ts.push(rec.timestamp);
                            report.ledger.push(rec);
                        } else {
                            report.rejected += 1;
                        }
                    }
                }
            }
        }
    }
    if cfg.mode == ReplayMode::FullMarket {
        err_acc = err_all.clone();
    }
    let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    report.mean_err_accepted = mean(&err_acc);
    report.mean_err_all = mean(&err_all);
    if truth.is_some() && !report.ledger.is_empty() {
        let wins = report.ledger.iter().filter(|f| f.mark.is_some_and(|m| m > 0.0)).count();
        report.win_rate_proxy = Some(wins as f64 / report.ledger.len() as f64);
    }
    let (t0, t1) = (events[0].timestamp(), events[events.len() - 1].timestamp());
    let pnl: Vec<f64> = report
        .ledger
        .iter()
        .map(|f| f.mark.unwrap_or(f.cash))
        .collect();
    report.bucket_returns = bucket_returns(&fill_ts, &pnl, t0, t1, cfg.sharpe_buckets);
    report.sharpe = sharpe(&report.bucket_returns);
    report.params = Some(engine.params);
    Ok(report)
}

/// Sum of PnL in equal event-time windows over `[t0, t1]`.
pub fn bucket_returns(ts: &[i64], pnl: &[f64], t0: i64, t1: i64, buckets: usize) -> Vec<f64> {
    let mut out = vec![0.0; buckets];
    if buckets == 0 {
        return out;
    }
    let span = (t1 - t0).max(1) as f64;
    for (&t, &p) in ts.iter().zip(pnl) {
        let k = (((t - t0) as f64 / span) * buckets as f64) as usize;
        out[k.min(buckets - 1)] += p;
    }
    out
}

/// Mean over sample standard deviation; `None` when undefined.
pub fn sharpe(returns: &[f64]) -> Option<f64> {
    let n = returns.len();
    if n < 2 {
        return None;
    }
    let mean = returns.iter().sum::<f64>() / n as f64;
    let var = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var > 0.0).then(|| mean / var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::replay::stream::{CandleRecord, Side};

    fn candle(ts: i64, k: &str, mid: f64) -> StreamEvent {
        StreamEvent::Candle(CandleRecord {
            market_key: k.into(),
            timestamp: ts,
            mid,
        })
    }

    fn combo(ts: i64, legs: &[(&str, Side)], price: f64, size: f64) -> StreamEvent {
        StreamEvent::Trade(ComboTrade {
            timestamp: ts,
            legs: legs.iter().map(|(k, s)| (k.to_string(), *s)).collect(),
            exec_price: price,
            size,
        })
    }

    #[test]
    fn empty_stream_reports_zeros() {
        let r = replay(&[], &ReplayConfig::default(), None).unwrap();
        assert_eq!((r.candles, r.trades, r.accepted), (0, 0, 0));
        assert_eq!(r.revenue, 0.0);
        assert!(r.ledger.is_empty() && r.sharpe.is_none());
    }

    #[test]
    fn candles_train_fields_only() {
        let events: Vec<_> = (0..60)
            .flat_map(|t| [candle(t, "a", 0.3 + 0.004 * t as f64), candle(t, "b", 0.6), candle(t, "c", 0.5)])
            .collect();
        let r = replay(&events, &ReplayConfig::default(), None).unwrap();
        let p = r.params.unwrap();
        assert!(p.w_upper.iter().all(|&w| w == 0.0));
        assert!(p.theta[0] != crate::numeric::logit(0.3 + 0.004 * 14.5));
        assert_eq!(r.candles, 180);
    }

    #[test]
    fn unknown_market_and_order_errors() {
        let events = vec![candle(0, "a", 0.5), combo(1, &[("a", Side::Yes), ("z", Side::No)], 0.2, 1.0)];
        assert!(matches!(
            replay(&events, &ReplayConfig::default(), None),
            Err(ReplayError::UnknownMarket(k)) if k == "z"
        ));
        let events = vec![candle(5, "a", 0.5), candle(4, "a", 0.5)];
        assert!(matches!(
            replay(&events, &ReplayConfig::default(), None),
            Err(ReplayError::OutOfOrder { .. })
        ));
    }

    #[test]
    fn full_market_moves_the_book_and_learns_couplings() {
        let mut events: Vec<_> = (0..30).flat_map(|t| [candle(t, "a", 0.5), candle(t, "b", 0.5)]).collect();
        for t in 0..50 {
            events.push(combo(100 + t, &[("a", Side::Yes), ("b", Side::Yes)], 0.4, 10.0));
        }
        let cfg = ReplayConfig {
            b: 100.0,
            ..Default::default()
        };
        let r = replay(&events, &cfg, None).unwrap();
        assert_eq!(r.accepted, 50);
        assert!(r.params.as_ref().unwrap().w_upper[0] > 0.0);
        assert!(r.ledger[0].cash > 0.0 && r.ledger[0].shares > 0.0);
        let last = r.ledger.last().unwrap();
        assert!(last.quote > r.ledger[0].quote);
    }

    #[test]
    fn standalone_never_fills_a_rejected_quote() {
        let mut events: Vec<_> = (0..30).flat_map(|t| [candle(t, "a", 0.6), candle(t, "b", 0.6)]).collect();
        events.push(combo(40, &[("a", Side::Yes), ("b", Side::Yes)], 0.30, 50.0));
        events.push(combo(41, &[("a", Side::Yes), ("b", Side::Yes)], 0.40, 50.0));
        let cfg = ReplayConfig {
            mode: ReplayMode::Standalone,
            ..Default::default()
        };
        let r = replay(&events, &cfg, None).unwrap();
        assert_eq!((r.accepted, r.rejected), (1, 1));
        assert_eq!(r.ledger.len(), 1);
        assert!(r.ledger.iter().all(|f| f.accepted && f.quote <= f.exec_price));
        assert_eq!(r.ledger[0].exec_price, 0.40);
    }

    #[test]
    fn order_flow_weight_saturates() {
        let base: Vec<_> = (0..30).flat_map(|t| [candle(t, "a", 0.5), candle(t, "b", 0.5)]).collect();
        let cfg = ReplayConfig {
            mode: ReplayMode::Standalone,
            ..Default::default()
        };
        let moved = |size: f64| {
            let mut ev = base.clone();
            ev.push(combo(50, &[("a", Side::Yes), ("b", Side::Yes)], 0.9, size));
            let p = replay(&ev, &cfg, None).unwrap().params.unwrap();
            p.w_upper[0]
        };
        let (small, cap, big) = (moved(10.0), moved(100.0), moved(1000.0));
        assert!(0.0 < small && small < cap);
        assert_eq!(cap, big);
    }

    #[test]
    fn sharpe_and_buckets() {
        assert_eq!(bucket_returns(&[0, 5, 10], &[1.0, 2.0, 3.0], 0, 10, 2), vec![1.0, 5.0]);
        assert_eq!(sharpe(&[1.0, 1.0]), None);
        let s = sharpe(&[1.0, 2.0, 3.0]).unwrap();
        assert!((s - 2.0).abs() < 1e-12);
    }

    #[test]
    fn mode_parses() {
        assert_eq!("standalone".parse::<ReplayMode>().unwrap(), ReplayMode::Standalone);
        assert_eq!("full_market".parse::<ReplayMode>().unwrap(), ReplayMode::FullMarket);
        assert!("other".parse::<ReplayMode>().is_err());
    }
}
