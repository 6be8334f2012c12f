//! Potts marginals and joint queries: enumeration over the product state
//! space when it is small, damped loopy BP with clamping otherwise.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bp::BpConfig;
use crate::error::IsingError;
use crate::ising::{ce_slope, pair_index, pairs};

use super::params::PottsParams;

/// Largest product state space handled by enumeration.
pub const POTTS_EXACT_STATES: u64 = 4096;

/// Largest categorical parlay supported.
pub const POTTS_JOINT_CAP: usize = 3;

/// Pays iff `X_i = c_i` for every `(i, c_i)` leg.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CategoricalParlay {
    legs: Vec<(usize, usize)>,
}

impl CategoricalParlay {
    /// Legs are sorted by market; a market may appear once.
    pub fn new(mut legs: Vec<(usize, usize)>) -> Result<Self, IsingError> {
        if legs.is_empty() {
            return Err(IsingError::EmptySubset);
        }
        legs.sort_unstable();
        if legs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(IsingError::InvalidParams("a market appears twice in a parlay".into()));
        }
        Ok(Self { legs })
    }

    pub fn single(i: usize, c: usize) -> Self {
        Self { legs: vec![(i, c)] }
    }

    pub fn legs(&self) -> &[(usize, usize)] {
        &self.legs
    }

    pub fn size(&self) -> usize {
        self.legs.len()
    }

    pub fn fits(&self, k: &[usize]) -> bool {
        self.legs.iter().all(|&(i, c)| i < k.len() && c < k[i])
    }

    fn matches(&self, x: &[usize]) -> bool {
        self.legs.iter().all(|&(i, c)| x[i] == c)
    }
}

/// Per-market category distributions and pairwise tables.
#[derive(Debug, Clone)]
pub struct PottsMarginals {
    pub single: Vec<Vec<f64>>,
    /// `K_i × K_j` tables in pair order.
    pub pair: Vec<DMatrix<f64>>,
    pub converged: bool,
}

/// Full joint table over the mixed-radix state space.
#[derive(Debug, Clone)]
pub struct ExactPotts {
    params: PottsParams,
    /// Digits of state `s`, `m` per state, market 0 fastest.
    states: Vec<u8>,
    pub probs: Vec<f64>,
    mean: Vec<f64>,
}

impl ExactPotts {
    pub fn new(params: &PottsParams) -> Result<Self, IsingError> {
        let n = params.n_states();
        if n > POTTS_EXACT_STATES {
            return Err(IsingError::DimensionTooLarge {
                m: n as usize,
                cutoff: POTTS_EXACT_STATES as usize,
            });
        }
        let m = params.m();
        let n = n as usize;
        let mut states = Vec::with_capacity(n * m);
        let mut x = vec![0usize; m];
        let mut energy = Vec::with_capacity(n);
        for _ in 0..n {
            states.extend(x.iter().map(|&d| d as u8));
            energy.push(params.energy(&x));
            for i in 0..m {
                x[i] += 1;
                if x[i] < params.k[i] {
                    break;
                }
                x[i] = 0;
            }
        }
        let top = energy.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut probs: Vec<f64> = energy.iter().map(|e| (e - top).exp()).collect();
        let z: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= z);
        let mut out = Self {
            params: params.clone(),
            states,
            probs,
            mean: Vec::new(),
        };
        out.mean = out.stats_where(|_| true).1;
        Ok(out)
    }

    fn state(&self, s: usize) -> Vec<usize> {
        let m = self.params.m();
        self.states[s * m..(s + 1) * m].iter().map(|&d| d as usize).collect()
    }

    /// `(P(E), Σ_{x ∈ E} p(x) T(x))`.
    fn stats_where(&self, pred: impl Fn(&[usize]) -> bool) -> (f64, Vec<f64>) {
        let mut acc = vec![0.0; self.params.dim()];
        let mut q = 0.0;
        let mut active = Vec::new();
        for s in 0..self.probs.len() {
            let x = self.state(s);
            if !pred(&x) {
                continue;
            }
            let p = self.probs[s];
            q += p;
            self.params.active_stats(&x, &mut active);
            for &k in &active {
                acc[k] += p;
            }
        }
        (q, acc)
    }

    pub fn marginals(&self) -> PottsMarginals {
        let m = self.params.m();
        let k = &self.params.k;
        let mut single: Vec<Vec<f64>> = k.iter().map(|&ki| vec![0.0; ki]).collect();
        let mut pair: Vec<DMatrix<f64>> = pairs(m).map(|(i, j)| DMatrix::zeros(k[i], k[j])).collect();
        for s in 0..self.probs.len() {
            let x = self.state(s);
            let p = self.probs[s];
            for i in 0..m {
                single[i][x[i]] += p;
            }
            for (idx, (i, j)) in pairs(m).enumerate() {
                pair[idx][(x[i], x[j])] += p;
            }
        }
        PottsMarginals {
            single,
            pair,
            converged: true,
        }
    }

    pub fn event_prob(&self, parlay: &CategoricalParlay) -> f64 {
        (0..self.probs.len())
            .filter(|&s| parlay.matches(&self.state(s)))
            .map(|s| self.probs[s])
            .sum()
    }

    pub fn mean_stats(&self) -> &[f64] {
        &self.mean
    }

    /// `(P(E), E[T | E])`.
    pub fn conditional_stats(&self, parlay: &CategoricalParlay) -> (f64, Vec<f64>) {
        let (q, mut acc) = self.stats_where(|x| parlay.matches(x));
        if q > 0.0 {
            acc.iter_mut().for_each(|v| *v /= q);
        }
        (q, acc)
    }
}

/// One BP run, possibly with some markets clamped.
#[derive(Debug, Clone)]
pub struct PottsBpRun {
    pub single: Vec<Vec<f64>>,
    /// Pair tables for coupled free pairs, in pair order.
    pub pair: Vec<Option<DMatrix<f64>>>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let top = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + xs.map(|x| (x - top).exp()).sum::<f64>().ln()
}

/// Sum-product in the log domain. Clamped markets are absorbed into the
/// fields of their neighbours; edges are coupled pairs of free markets.
pub fn run_potts_bp(params: &PottsParams, clamp: &[(usize, usize)], cfg: &BpConfig) -> PottsBpRun {
    let m = params.m();
    let k = &params.k;
    let mut fixed: Vec<Option<usize>> = vec![None; m];
    for &(i, c) in clamp {
        fixed[i] = Some(c);
    }
    let unary: Vec<Vec<f64>> = (0..m)
        .map(|j| {
            (0..k[j])
                .map(|x| {
                    params.theta(j, x)
                        + clamp
                            .iter()
                            .filter(|&&(i, _)| i != j)
                            .map(|&(i, c)| params.w(i, j, c, x))
                            .sum::<f64>()
                })
                .collect()
        })
        .collect();
    // Directed edges (from, to); edge 2e is i→j and 2e+1 is j→i.
    let mut edges = Vec::new();
    for (i, j) in pairs(m) {
        if fixed[i].is_none() && fixed[j].is_none() && params.coupled(i, j) {
            edges.push((i, j));
            edges.push((j, i));
        }
    }
    let mut incoming = vec![Vec::new(); m];
    for (e, &(_, to)) in edges.iter().enumerate() {
        incoming[to].push(e);
    }
    let mut msg: Vec<Vec<f64>> = edges.iter().map(|&(_, to)| vec![0.0; k[to]]).collect();
    let mut residual = 0.0;
    let mut iterations = 0;
    let mut converged = edges.is_empty();
    let node_total = |msg: &[Vec<f64>], i: usize| -> Vec<f64> {
        let mut t = unary[i].clone();
        for &e in &incoming[i] {
            for (tx, mx) in t.iter_mut().zip(&msg[e]) {
                *tx += mx;
            }
        }
        t
    };
    if !converged {
        for it in 0..cfg.max_iter {
            let totals: Vec<Vec<f64>> = (0..m).map(|i| node_total(&msg, i)).collect();
            let mut next = msg.clone();
            residual = 0.0;
            for (e, &(from, to)) in edges.iter().enumerate() {
                let rev = e ^ 1;
                let cavity: Vec<f64> = totals[from].iter().zip(&msg[rev]).map(|(t, r)| t - r).collect();
                let mut fresh: Vec<f64> = (0..k[to])
                    .map(|y| log_sum_exp((0..k[from]).map(|x| cavity[x] + params.w(from, to, x, y))))
                    .collect();
                let norm = log_sum_exp(fresh.iter().cloned());
                fresh.iter_mut().for_each(|v| *v -= norm);
                for (y, f) in fresh.iter().enumerate() {
                    let v = cfg.damping * msg[e][y] + (1.0 - cfg.damping) * f;
                    residual = f64::max(residual, (v - msg[e][y]).abs());
                    next[e][y] = v;
                }
            }
            msg = next;
            iterations = it + 1;
            if residual < cfg.tol {
                converged = true;
                break;
            }
        }
    }
    let totals: Vec<Vec<f64>> = (0..m).map(|i| node_total(&msg, i)).collect();
    let single = (0..m)
        .map(|i| match fixed[i] {
            Some(c) => (0..k[i]).map(|x| if x == c { 1.0 } else { 0.0 }).collect(),
            None => {
                let z = log_sum_exp(totals[i].iter().cloned());
                totals[i].iter().map(|t| (t - z).exp()).collect()
            }
        })
        .collect();
    let mut pair = vec![None; m * m.saturating_sub(1) / 2];
    for e in (0..edges.len()).step_by(2) {
        let (i, j) = edges[e];
        let hi: Vec<f64> = totals[i].iter().zip(&msg[e + 1]).map(|(t, r)| t - r).collect();
        let hj: Vec<f64> = totals[j].iter().zip(&msg[e]).map(|(t, r)| t - r).collect();
        let mut table = DMatrix::from_fn(k[i], k[j], |a, b| hi[a] + hj[b] + params.w(i, j, a, b));
        let top = table.max();
        table.apply(|v| *v = (*v - top).exp());
        let z = table.sum();
        table /= z;
        pair[pair_index(m, i, j)] = Some(table);
    }
    PottsBpRun {
        single,
        pair,
        iterations,
        residual,
        converged,
    }
}

impl PottsBpRun {
    fn pair_table(&self, m: usize, i: usize, j: usize) -> DMatrix<f64> {
        match &self.pair[pair_index(m, i, j)] {
            Some(t) => t.clone(),
            None => DMatrix::from_fn(self.single[i].len(), self.single[j].len(), |a, b| {
                self.single[i][a] * self.single[j][b]
            }),
        }
    }

    /// `E[T]` under this run; uncoupled pairs use products of marginals.
    fn mean_stats(&self, params: &PottsParams) -> Vec<f64> {
        let m = params.m();
        let mut out = vec![0.0; params.dim()];
        for i in 0..m {
            for c in 1..params.k[i] {
                out[params.field_index(i, c).expect("c > 0")] = self.single[i][c];
            }
        }
        for (i, j) in pairs(m) {
            let t = self.pair_table(m, i, j);
            for a in 1..params.k[i] {
                for b in 1..params.k[j] {
                    out[params.pair_index(i, j, a, b).expect("a, b > 0")] = t[(a, b)];
                }
            }
        }
        out
    }
}

/// BP beliefs plus the settings used for clamped follow-up runs.
#[derive(Debug, Clone)]
pub struct BpPotts {
    params: PottsParams,
    cfg: BpConfig,
    base: PottsBpRun,
    mean: Vec<f64>,
}

impl BpPotts {
    pub fn new(params: &PottsParams, cfg: BpConfig) -> Self {
        let base = run_potts_bp(params, &[], &cfg);
        let mean = base.mean_stats(params);
        Self {
            params: params.clone(),
            cfg,
            base,
            mean,
        }
    }

    pub fn converged(&self) -> bool {
        self.base.converged
    }

    /// Coupled pairs read the edge beliefs; an uncoupled pair is
    /// `P(X_i = a) P(X_j = b | X_i = a)` from runs clamping `i`, which is
    /// exact on forests.
    pub fn marginals(&self) -> PottsMarginals {
        let m = self.params.m();
        let k = &self.params.k;
        let mut converged = self.base.converged;
        let pair = pairs(m)
            .map(|(i, j)| match &self.base.pair[pair_index(m, i, j)] {
                Some(t) => t.clone(),
                None => {
                    let mut t = DMatrix::zeros(k[i], k[j]);
                    for a in 0..k[i] {
                        let run = run_potts_bp(&self.params, &[(i, a)], &self.cfg);
                        converged &= run.converged;
                        for b in 0..k[j] {
                            t[(a, b)] = self.base.single[i][a] * run.single[j][b];
                        }
                    }
                    t
                }
            })
            .collect();
        PottsMarginals {
            single: self.base.single.clone(),
            pair,
            converged,
        }
    }

    /// Chain rule over clamped runs:
    /// `P(E) = Π_k P(X_{i_k} = c_k | legs before k)`.
    pub fn event_prob(&self, parlay: &CategoricalParlay) -> Result<f64, IsingError> {
        if parlay.size() > POTTS_JOINT_CAP {
            return Err(IsingError::UnsupportedQuery {
                size: parlay.size(),
                cap: POTTS_JOINT_CAP,
            });
        }
        let legs = parlay.legs();
        let mut q = self.base.single[legs[0].0][legs[0].1];
        for n in 1..legs.len() {
            let run = run_potts_bp(&self.params, &legs[..n], &self.cfg);
            q *= run.single[legs[n].0][legs[n].1];
        }
        Ok(q)
    }

    pub fn conditional_stats(&self, parlay: &CategoricalParlay) -> Result<(f64, Vec<f64>), IsingError> {
        let q = self.event_prob(parlay)?;
        let run = run_potts_bp(&self.params, parlay.legs(), &self.cfg);
        Ok((q, run.mean_stats(&self.params)))
    }
}

/// Exact below the state-space cutoff, BP above it.
#[derive(Debug, Clone)]
pub enum PottsBeliefs {
    Exact(ExactPotts),
    Bp(BpPotts),
}

impl PottsBeliefs {
    pub fn new(params: &PottsParams) -> Result<Self, IsingError> {
        if params.n_states() <= POTTS_EXACT_STATES {
            Ok(Self::Exact(ExactPotts::new(params)?))
        } else {
            Ok(Self::Bp(BpPotts::new(params, BpConfig::default())))
        }
    }

    pub fn marginals(&self) -> PottsMarginals {
        match self {
            Self::Exact(e) => e.marginals(),
            Self::Bp(b) => b.marginals(),
        }
    }

    pub fn marginal(&self, i: usize) -> Vec<f64> {
        match self {
            Self::Exact(e) => {
                let k = e.params.k[i];
                (0..k).map(|c| e.event_prob(&CategoricalParlay::single(i, c))).collect()
            }
            Self::Bp(b) => b.base.single[i].clone(),
        }
    }

    pub fn event_prob(&self, parlay: &CategoricalParlay) -> Result<f64, IsingError> {
        match self {
            Self::Exact(e) => {
                if parlay.size() > POTTS_JOINT_CAP {
                    return Err(IsingError::UnsupportedQuery {
                        size: parlay.size(),
                        cap: POTTS_JOINT_CAP,
                    });
                }
                Ok(e.event_prob(parlay))
            }
            Self::Bp(b) => b.event_prob(parlay),
        }
    }

    fn mean_stats(&self) -> &[f64] {
        match self {
            Self::Exact(e) => e.mean_stats(),
            Self::Bp(b) => &b.mean,
        }
    }

    fn conditional_stats(&self, parlay: &CategoricalParlay) -> Result<(f64, Vec<f64>), IsingError> {
        match self {
            Self::Exact(e) => Ok(e.conditional_stats(parlay)),
            Self::Bp(b) => b.conditional_stats(parlay),
        }
    }

    /// `∇_φ q_E = q_E (E[T | E] - E[T])`.
    pub fn grad_event_prob(&self, parlay: &CategoricalParlay) -> Result<(f64, Vec<f64>), IsingError> {
        let (q, cond) = self.conditional_stats(parlay)?;
        let grad = cond.iter().zip(self.mean_stats()).map(|(c, e)| q * (c - e)).collect();
        Ok((q, grad))
    }

    /// Gradient of the YES/NO cross-entropy of a parlay against `p_target`.
    pub fn grad_ce(&self, parlay: &CategoricalParlay, p_target: f64) -> Result<Vec<f64>, IsingError> {
        let (q, mut g) = self.grad_event_prob(parlay)?;
        let s = ce_slope(p_target, q);
        g.iter_mut().for_each(|v| *v *= s);
        Ok(g)
    }

    /// Gradient of `-Σ_c p_c log q_{i,c}`, which is `E[T] - Σ_c p_c E[T | X_i = c]`.
    pub fn grad_ce_categorical(&self, i: usize, target: &[f64]) -> Result<Vec<f64>, IsingError> {
        let mut g = self.mean_stats().to_vec();
        for (c, &p) in target.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let (_, cond) = self.conditional_stats(&CategoricalParlay::single(i, c))?;
            for (gv, cv) in g.iter_mut().zip(&cond) {
                *gv -= p * cv;
            }
        }
        Ok(g)
    }
}

/// Marginals by enumeration or BP, per the state-space cutoff.
pub fn potts_marginals(params: &PottsParams) -> Result<PottsMarginals, IsingError> {
    Ok(PottsBeliefs::new(params)?.marginals())
}
