//! Damped synchronous loopy belief propagation for the Ising model, plus
//! conditioned clamping for small joint queries.
//!
//! Messages are stored as log-ratios `u_{i→j} = log m_{i→j}(1) / m_{i→j}(0)`,
//! so a binary pairwise model needs one scalar per directed edge. Only pairs
//! with a nonzero coupling are edges; a pair moment over a non-edge is
//! obtained by clamping one endpoint, which is exact on forests.

use crate::error::IsingError;
use crate::ising::{pair_index, pairs, IsingParams, Mask, MomentVector, SufficientStats, EXACT_CUTOFF};
use crate::numeric::{sigmoid, softplus};

/// Largest leg set supported by [`BpBeliefs::event_prob`].
pub const BP_JOINT_CAP: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BpConfig {
    pub max_iter: usize,
    pub damping: f64,
    pub tol: f64,
}

impl Default for BpConfig {
    fn default() -> Self {
        Self {
            max_iter: 200,
            damping: 0.5,
            tol: 1e-8,
        }
    }
}

/// Output of one message-passing run.
#[derive(Debug, Clone)]
pub struct BpRun {
    pub p_single: Vec<f64>,
    /// Pair beliefs for coupled pairs in [`pair_index`] order; `None` for
    /// pairs that share no edge.
    pub p_edge: Vec<Option<f64>>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

struct Graph {
    m: usize,
    /// Directed edges `(from, to, coupling)`.
    edges: Vec<(usize, usize, f64)>,
    /// For each node, indices of incoming directed edges.
    incoming: Vec<Vec<usize>>,
    /// Index of the reverse of each directed edge.
    reverse: Vec<usize>,
}

impl Graph {
    fn new(params: &IsingParams) -> Self {
        let m = params.m;
        let mut edges = Vec::new();
        let mut reverse = Vec::new();
        for (i, j) in pairs(m) {
            let w = params.w_upper[pair_index(m, i, j)];
            if w != 0.0 {
                let k = edges.len();
                edges.push((i, j, w));
                edges.push((j, i, w));
                reverse.push(k + 1);
                reverse.push(k);
            }
        }
        let mut incoming = vec![Vec::new(); m];
        for (k, &(_, to, _)) in edges.iter().enumerate() {
            incoming[to].push(k);
        }
        Self {
            m,
            edges,
            incoming,
            reverse,
        }
    }
}

/// Run message passing and return singleton and coupled-pair beliefs.
pub fn run_bp(params: &IsingParams, cfg: &BpConfig) -> BpRun {
    let g = Graph::new(params);
    let mut u = vec![0.0; g.edges.len()];
    let mut residual = 0.0;
    let mut iterations = 0;
    let mut converged = g.edges.is_empty();
    if !converged {
        let mut next = vec![0.0; u.len()];
        for it in 0..cfg.max_iter {
            let total: Vec<f64> = (0..g.m)
                .map(|i| params.theta[i] + g.incoming[i].iter().map(|&k| u[k]).sum::<f64>())
                .collect();
            residual = 0.0;
            for (k, &(from, _, w)) in g.edges.iter().enumerate() {
                let cavity = total[from] - u[g.reverse[k]];
                let fresh = softplus(cavity + w) - softplus(cavity);
                next[k] = cfg.damping * u[k] + (1.0 - cfg.damping) * fresh;
                residual = f64::max(residual, (next[k] - u[k]).abs());
            }
            std::mem::swap(&mut u, &mut next);
            iterations = it + 1;
            if residual < cfg.tol {
                converged = true;
                break;
            }
        }
    }
    let total: Vec<f64> = (0..g.m)
        .map(|i| params.theta[i] + g.incoming[i].iter().map(|&k| u[k]).sum::<f64>())
        .collect();
    let p_single = total.iter().map(|&h| sigmoid(h)).collect();
    let mut p_edge = vec![None; crate::ising::n_pairs(g.m)];
    for (k, &(i, j, w)) in g.edges.iter().enumerate().step_by(2) {
        // Edge k is i→j, k+1 is j→i.
        let hi = total[i] - u[k + 1];
        let hj = total[j] - u[k];
        let mx = 0f64.max(hi).max(hj).max(hi + hj + w);
        let z00 = (-mx).exp();
        let z10 = (hi - mx).exp();
        let z01 = (hj - mx).exp();
        let z11 = (hi + hj + w - mx).exp();
        p_edge[pair_index(g.m, i, j)] = Some(z11 / (z00 + z10 + z01 + z11));
    }
    BpRun {
        p_single,
        p_edge,
        iterations,
        residual,
        converged,
    }
}

/// Ising model over the events outside `legs`, conditioned on every event
/// in `legs` occurring: `θ'_j = θ_j + Σ_{i ∈ legs} W_ij`. Returns the reduced
/// parameters and the original index of each remaining event.
pub fn condition_on_ones(params: &IsingParams, legs: Mask) -> (IsingParams, Vec<usize>) {
    let m = params.m;
    let keep: Vec<usize> = (0..m).filter(|&i| legs >> i & 1 == 0).collect();
    let theta = keep
        .iter()
        .map(|&j| {
            params.theta[j]
                + (0..m)
                    .filter(|&i| legs >> i & 1 == 1)
                    .map(|i| params.w(i, j))
                    .sum::<f64>()
        })
        .collect();
    let r = keep.len();
    let mut w_upper = vec![0.0; crate::ising::n_pairs(r)];
    for (a, b) in pairs(r) {
        w_upper[pair_index(r, a, b)] = params.w(keep[a], keep[b]);
    }
    (
        IsingParams {
            m: r,
            theta,
            w_upper,
        },
        keep,
    )
}

/// Approximate singleton and pair marginals.
///
/// Pair moments over coupled pairs come from the edge beliefs; uncoupled
/// pairs use `P(x_i = 1) · P(x_j = 1 | x_i = 1)` with the conditional taken
/// from a clamped run. Both are exact when the coupling graph is a forest.
/// The returned flag is false when any run failed to reach `tol`; the
/// moments are then the last iterate and `residual` is the largest message
/// change seen in the final sweep.
pub fn loopy_bp(params: &IsingParams, max_iter: usize, damping: f64, tol: f64) -> BpMoments {
    let cfg = BpConfig {
        max_iter,
        damping,
        tol,
    };
    let base = run_bp(params, &cfg);
    let m = params.m;
    let mut converged = base.converged;
    let mut residual = base.residual;
    let mut conditional: Vec<Option<BpRun>> = vec![None; m];
    let mut p_pair = Vec::with_capacity(crate::ising::n_pairs(m));
    for (k, (i, j)) in pairs(m).enumerate() {
        let v = match base.p_edge[k] {
            Some(v) => v,
            None => {
                let run = conditional[i].get_or_insert_with(|| {
                    let (reduced, _) = condition_on_ones(params, 1 << i);
                    run_bp(&reduced, &cfg)
                });
                converged &= run.converged;
                residual = residual.max(run.residual);
                // Index j shifts down by one once i is removed.
                base.p_single[i] * run.p_single[j - 1]
            }
        };
        p_pair.push(v);
    }
    BpMoments {
        moments: MomentVector {
            p_single: base.p_single,
            p_pair,
        },
        converged,
        residual,
        iterations: base.iterations,
    }
}

#[derive(Debug, Clone)]
pub struct BpMoments {
    pub moments: MomentVector,
    pub converged: bool,
    pub residual: f64,
    pub iterations: usize,
}

/// Cached belief-propagation view of one parameter vector, answering the
/// same queries as exact inference for leg sets up to [`BP_JOINT_CAP`].
#[derive(Debug, Clone)]
pub struct BpBeliefs {
    pub params: IsingParams,
    pub cfg: BpConfig,
    pub base: BpRun,
}

impl BpBeliefs {
    pub fn new(params: &IsingParams, cfg: BpConfig) -> Self {
        Self {
            params: params.clone(),
            cfg,
            base: run_bp(params, &cfg),
        }
    }

    /// Chain rule over clamped runs: `q_S = p_{s1} P(s2 | s1) P(s3 | s1, s2)`.
    pub fn event_prob(&self, legs: Mask) -> Result<f64, IsingError> {
        let size = legs.count_ones() as usize;
        if size == 0 {
            return Err(IsingError::EmptySubset);
        }
        if size > BP_JOINT_CAP {
            return Err(IsingError::UnsupportedQuery {
                size,
                cap: BP_JOINT_CAP,
            });
        }
        let legs_list: Vec<usize> = (0..self.params.m).filter(|&i| legs >> i & 1 == 1).collect();
        if size == 2 {
            let k = pair_index(self.params.m, legs_list[0], legs_list[1]);
            if let Some(v) = self.base.p_edge[k] {
                return Ok(v);
            }
        }
        let mut q = self.base.p_single[legs_list[0]];
        let mut clamped: Mask = 0;
        for w in legs_list.windows(2) {
            clamped |= 1 << w[0];
            let (reduced, keep) = condition_on_ones(&self.params, clamped);
            let run = run_bp(&reduced, &self.cfg);
            let pos = keep.iter().position(|&k| k == w[1]).expect("leg not clamped");
            q *= run.p_single[pos];
        }
        Ok(q)
    }

    fn pair_moment(run: &BpRun, m: usize, i: usize, j: usize) -> f64 {
        run.p_edge[pair_index(m, i, j)].unwrap_or(run.p_single[i] * run.p_single[j])
    }

    /// Covariance-identity gradient with clamped conditional moments; pair
    /// moments of uncoupled pairs are taken as products of marginals.
    pub fn grad_event_prob(&self, legs: Mask) -> Result<SufficientStats, IsingError> {
        let q = self.event_prob(legs)?;
        let m = self.params.m;
        let (reduced, keep) = condition_on_ones(&self.params, legs);
        let run = run_bp(&reduced, &self.cfg);
        let mut cond_single = vec![1.0; m];
        let mut pos = vec![usize::MAX; m];
        for (a, &k) in keep.iter().enumerate() {
            cond_single[k] = run.p_single[a];
            pos[k] = a;
        }
        let cond_pair = |i: usize, j: usize| -> f64 {
            match (pos[i] == usize::MAX, pos[j] == usize::MAX) {
                (true, true) => 1.0,
                (true, false) => cond_single[j],
                (false, true) => cond_single[i],
                (false, false) => Self::pair_moment(&run, reduced.m, pos[i], pos[j]),
            }
        };
        let mut g = SufficientStats::zeros(m);
        for i in 0..m {
            g.values[i] = q * (cond_single[i] - self.base.p_single[i]);
        }
        for (k, (i, j)) in pairs(m).enumerate() {
            g.values[m + k] = q * (cond_pair(i, j) - Self::pair_moment(&self.base, m, i, j));
        }
        Ok(g)
    }
}

/// Inference backend chosen per parameter dimension.
#[derive(Debug, Clone)]
pub enum Beliefs {
    Exact(crate::ising::ExactBeliefs),
    Bp(BpBeliefs),
}

impl Beliefs {
    /// Exact enumeration up to [`EXACT_CUTOFF`] events, BP beyond.
    pub fn new(params: &IsingParams) -> Result<Self, IsingError> {
        if params.m <= EXACT_CUTOFF {
            Ok(Beliefs::Exact(crate::ising::ExactBeliefs::new(params)?))
        } else {
            Ok(Beliefs::Bp(BpBeliefs::new(params, BpConfig::default())))
        }
    }

    pub fn event_prob(&self, legs: Mask) -> Result<f64, IsingError> {
        match self {
            Beliefs::Exact(e) => {
                if legs == 0 {
                    Err(IsingError::EmptySubset)
                } else {
                    Ok(e.event_prob(legs))
                }
            }
            Beliefs::Bp(b) => b.event_prob(legs),
        }
    }

    pub fn grad_event_prob(&self, legs: Mask) -> Result<SufficientStats, IsingError> {
        match self {
            Beliefs::Exact(e) => Ok(e.grad_event_prob(legs)),
            Beliefs::Bp(b) => b.grad_event_prob(legs),
        }
    }

    pub fn grad_ce(&self, legs: Mask, p_target: f64) -> Result<SufficientStats, IsingError> {
        let q = self.event_prob(legs)?;
        Ok(self
            .grad_event_prob(legs)?
            .scale(crate::ising::ce_slope(p_target, q)))
    }

    pub fn moments(&self) -> MomentVector {
        match self {
            Beliefs::Exact(e) => e.moments(),
            Beliefs::Bp(b) => {
                let out = loopy_bp(&b.params, b.cfg.max_iter, b.cfg.damping, b.cfg.tol);
                out.moments
            }
        }
    }
}

/// `P(all of legs)` through whichever backend suits `params.m`.
pub fn event_prob(params: &IsingParams, legs: Mask) -> Result<f64, IsingError> {
    Beliefs::new(params)?.event_prob(legs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ising::{moments_exact, ExactBeliefs};

    fn chain(m: usize) -> IsingParams {
        let mut p = IsingParams::zeros(m);
        for i in 0..m {
            p.theta[i] = 0.3 * i as f64 - 0.5;
        }
        for i in 0..m - 1 {
            p.w_upper[pair_index(m, i, i + 1)] = if i % 2 == 0 { 0.9 } else { -0.7 };
        }
        p
    }

    #[test]
    fn tree_marginals_are_exact() {
        let p = chain(5);
        let bp = loopy_bp(&p, 200, 0.5, 1e-12);
        assert!(bp.converged);
        let exact = moments_exact(&p).unwrap();
        assert!(bp.moments.max_gap(&exact) < 1e-9, "{}", bp.moments.max_gap(&exact));
    }

    #[test]
    fn star_tree_is_exact() {
        let m = 6;
        let mut p = IsingParams::zeros(m);
        for j in 1..m {
            p.w_upper[pair_index(m, 0, j)] = 0.4 * j as f64 - 1.0;
            p.theta[j] = 0.1 * j as f64;
        }
        let bp = loopy_bp(&p, 200, 0.5, 1e-12);
        assert!(bp.moments.max_gap(&moments_exact(&p).unwrap()) < 1e-9);
    }

    #[test]
    fn uncoupled_model_needs_no_messages() {
        let p = IsingParams::new(vec![0.3, -1.2, 2.0], vec![0.0; 3]).unwrap();
        let bp = loopy_bp(&p, 200, 0.5, 1e-8);
        for (i, v) in bp.moments.p_single.iter().enumerate() {
            assert!((v - sigmoid(p.theta[i])).abs() < 1e-15);
        }
    }

    #[test]
    fn dense_loopy_graph_is_close() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..10 {
            let m = 6;
            let p = IsingParams::new(
                (0..m).map(|_| rng.random_range(-1.0..1.0)).collect(),
                (0..15).map(|_| rng.random_range(-0.5..0.5)).collect(),
            )
            .unwrap();
            let bp = loopy_bp(&p, 200, 0.5, 1e-8);
            let exact = moments_exact(&p).unwrap();
            for i in 0..m {
                assert!((bp.moments.p_single[i] - exact.p_single[i]).abs() < 0.02);
            }
        }
    }

    #[test]
    fn clamped_joint_queries_are_exact_on_trees() {
        let p = chain(6);
        let bp = BpBeliefs::new(&p, BpConfig { tol: 1e-13, ..Default::default() });
        let ex = ExactBeliefs::new(&p).unwrap();
        for legs in [0b1u32, 0b11, 0b101, 0b100101, 0b111000, 0b10010] {
            assert!((bp.event_prob(legs).unwrap() - ex.event_prob(legs)).abs() < 1e-9);
        }
        assert!(matches!(
            bp.event_prob(0b1111),
            Err(IsingError::UnsupportedQuery { size: 4, cap: 3 })
        ));
    }

    #[test]
    fn bp_gradient_matches_exact_without_couplings() {
        let p = IsingParams::new(vec![0.2, -0.4, 0.9, 0.0], vec![0.0; 6]).unwrap();
        let bp = BpBeliefs::new(&p, BpConfig::default());
        let ex = ExactBeliefs::new(&p).unwrap();
        let a = bp.grad_event_prob(0b0101).unwrap();
        let b = ex.grad_event_prob(0b0101);
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn backend_switches_above_cutoff() {
        let p = IsingParams::zeros(EXACT_CUTOFF + 2);
        let b = Beliefs::new(&p).unwrap();
        assert!(matches!(b, Beliefs::Bp(_)));
        assert!((b.event_prob(0b111).unwrap() - 0.125).abs() < 1e-15);
    }
}
