//! Pairwise binary exponential family (Ising model) over `m` events.
//!
//! The belief state is `φ = (θ, W)` with density
//! `P_φ(x) ∝ exp(Σ θ_i x_i + Σ_{i<j} W_ij x_i x_j)` on `x ∈ {0,1}^m`.
//! Subsets of events are bitmasks; bit `i` set means event `i` is a leg.
//!
//! Everything in this module that enumerates the outcome space is bounded by
//! [`EXACT_CUTOFF`]. Larger models go through [`crate::bp`].

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::IsingError;
use crate::numeric::{clamp_prob, cross_entropy, EPS_P};

/// Outcome or leg-set bitmask over at most [`EXACT_CUTOFF`] events.
pub type Mask = u32;

/// Largest `m` handled by exhaustive enumeration.
pub const EXACT_CUTOFF: usize = 14;

/// Index of coupling `(i, j)`, `i < j`, in the row-major upper triangle.
#[inline]
pub fn pair_index(m: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < m);
    i * (2 * m - i - 1) / 2 + (j - i - 1)
}

/// All pairs `(i, j)` with `i < j` in storage order.
pub fn pairs(m: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..m).flat_map(move |i| (i + 1..m).map(move |j| (i, j)))
}

#[inline]
pub fn n_pairs(m: usize) -> usize {
    m * m.saturating_sub(1) / 2
}

/// Length of the sufficient-statistic vector, `m + m(m-1)/2`.
#[inline]
pub fn stat_dim(m: usize) -> usize {
    m + n_pairs(m)
}

/// Shared belief state `φ = (θ, W)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsingParams {
    pub m: usize,
    pub theta: Vec<f64>,
    /// Strictly upper-triangular couplings in [`pair_index`] order.
    pub w_upper: Vec<f64>,
}

impl IsingParams {
    pub fn zeros(m: usize) -> Self {
        Self {
            m,
            theta: vec![0.0; m],
            w_upper: vec![0.0; n_pairs(m)],
        }
    }

    pub fn new(theta: Vec<f64>, w_upper: Vec<f64>) -> Result<Self, IsingError> {
        let p = Self {
            m: theta.len(),
            theta,
            w_upper,
        };
        p.validate()?;
        Ok(p)
    }

    /// Build from a flat vector ordered fields-first, as in [`SufficientStats`].
    pub fn from_flat(m: usize, flat: &[f64]) -> Result<Self, IsingError> {
        if flat.len() != stat_dim(m) {
            return Err(IsingError::InvalidParams(format!(
                "expected {} entries, got {}",
                stat_dim(m),
                flat.len()
            )));
        }
        Self::new(flat[..m].to_vec(), flat[m..].to_vec())
    }

    pub fn validate(&self) -> Result<(), IsingError> {
        if self.theta.len() != self.m || self.w_upper.len() != n_pairs(self.m) {
            return Err(IsingError::InvalidParams(format!(
                "m = {} needs {} fields and {} couplings, got {} and {}",
                self.m,
                self.m,
                n_pairs(self.m),
                self.theta.len(),
                self.w_upper.len()
            )));
        }
        if self.theta.iter().chain(&self.w_upper).any(|v| !v.is_finite()) {
            return Err(IsingError::InvalidParams("non-finite parameter".into()));
        }
        Ok(())
    }

    /// Symmetric coupling lookup; zero on the diagonal.
    #[inline]
    pub fn w(&self, i: usize, j: usize) -> f64 {
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => 0.0,
            std::cmp::Ordering::Less => self.w_upper[pair_index(self.m, i, j)],
            std::cmp::Ordering::Greater => self.w_upper[pair_index(self.m, j, i)],
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.theta.iter().chain(&self.w_upper).copied().collect()
    }

    pub fn norm(&self) -> f64 {
        self.theta
            .iter()
            .chain(&self.w_upper)
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// Squared Euclidean distance to another parameter vector of equal size.
    pub fn dist_sq(&self, other: &IsingParams) -> f64 {
        self.theta
            .iter()
            .chain(&self.w_upper)
            .zip(other.theta.iter().chain(&other.w_upper))
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    /// `φ ← φ - (η_θ on fields, η_W on couplings) ⊙ grad`.
    pub fn step(&mut self, grad: &SufficientStats, eta_theta: f64, eta_w: f64) {
        debug_assert_eq!(grad.m, self.m);
        for (t, g) in self.theta.iter_mut().zip(grad.fields()) {
            *t -= eta_theta * g;
        }
        for (w, g) in self.w_upper.iter_mut().zip(grad.couplings()) {
            *w -= eta_w * g;
        }
    }

    /// Radial projection onto the ball `‖φ‖ ≤ radius`.
    pub fn project_to_ball(&mut self, radius: f64) {
        let n = self.norm();
        if n > radius {
            let s = radius / n;
            self.theta.iter_mut().for_each(|v| *v *= s);
            self.w_upper.iter_mut().for_each(|v| *v *= s);
        }
    }

    /// Unnormalized log-density of outcome `x`.
    pub fn energy(&self, x: Mask) -> f64 {
        let mut e = 0.0;
        for i in 0..self.m {
            if x >> i & 1 == 1 {
                e += self.theta[i];
                for j in i + 1..self.m {
                    if x >> j & 1 == 1 {
                        e += self.w_upper[pair_index(self.m, i, j)];
                    }
                }
            }
        }
        e
    }
}

/// Vector over the sufficient statistics `T(x) = (x_i, x_i x_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SufficientStats {
    pub m: usize,
    pub values: Vec<f64>,
}

impl SufficientStats {
    pub fn zeros(m: usize) -> Self {
        Self {
            m,
            values: vec![0.0; stat_dim(m)],
        }
    }

    /// `T(x)` for a binary outcome.
    pub fn of_outcome(m: usize, x: Mask) -> Self {
        let mut s = Self::zeros(m);
        for i in 0..m {
            s.values[i] = (x >> i & 1) as f64;
        }
        for (k, (i, j)) in pairs(m).enumerate() {
            s.values[m + k] = ((x >> i) & (x >> j) & 1) as f64;
        }
        s
    }

    pub fn fields(&self) -> &[f64] {
        &self.values[..self.m]
    }

    pub fn couplings(&self) -> &[f64] {
        &self.values[self.m..]
    }

    pub fn scale(mut self, s: f64) -> Self {
        self.values.iter_mut().for_each(|v| *v *= s);
        self
    }

    pub fn add_scaled(&mut self, other: &SufficientStats, s: f64) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += s * b;
        }
    }

    pub fn norm_inf(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// First and second moments `(p_i, p_ij)` of a distribution on `{0,1}^m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentVector {
    pub p_single: Vec<f64>,
    pub p_pair: Vec<f64>,
}

impl MomentVector {
    pub fn m(&self) -> usize {
        self.p_single.len()
    }

    pub fn pair(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.p_pair[pair_index(self.m(), a, b)]
    }

    /// Flat vector in sufficient-statistic order.
    pub fn to_flat(&self) -> Vec<f64> {
        self.p_single.iter().chain(&self.p_pair).copied().collect()
    }

    /// Strict interior of the pairwise marginal polytope, checked through
    /// the univariate and bivariate Fréchet bounds.
    pub fn validate_interior(&self) -> Result<(), IsingError> {
        let m = self.m();
        if self.p_pair.len() != n_pairs(m) {
            return Err(IsingError::InvalidMoments(format!(
                "{} pair moments for m = {m}",
                self.p_pair.len()
            )));
        }
        for (i, &p) in self.p_single.iter().enumerate() {
            if !(p > 0.0 && p < 1.0) {
                return Err(IsingError::InvalidMoments(format!("p_{i} = {p} not in (0,1)")));
            }
        }
        for (k, (i, j)) in pairs(m).enumerate() {
            let (pi, pj, pij) = (self.p_single[i], self.p_single[j], self.p_pair[k]);
            let lo = (pi + pj - 1.0).max(0.0);
            let hi = pi.min(pj);
            if !(pij > lo && pij < hi) {
                return Err(IsingError::InvalidMoments(format!(
                    "p_{i}{j} = {pij} outside ({lo}, {hi})"
                )));
            }
        }
        Ok(())
    }

    pub fn max_gap(&self, other: &MomentVector) -> f64 {
        self.to_flat()
            .iter()
            .zip(other.to_flat())
            .fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
    }
}

/// Explicit probability table over all `2^m` outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    pub m: usize,
    pub probs: Vec<f64>,
}

impl JointTable {
    pub fn new(m: usize, probs: Vec<f64>) -> Result<Self, IsingError> {
        if m > EXACT_CUTOFF {
            return Err(IsingError::DimensionTooLarge {
                m,
                cutoff: EXACT_CUTOFF,
            });
        }
        if probs.len() != 1 << m {
            return Err(IsingError::InvalidParams(format!(
                "table of length {} for m = {m}",
                probs.len()
            )));
        }
        Ok(Self { m, probs })
    }

    /// Superset sums `f[S] = Σ_{x ⊇ S} p(x) = P(all of S occur)`.
    pub fn intersection_probs(&self) -> Vec<f64> {
        let mut f = self.probs.clone();
        for i in 0..self.m {
            let bit = 1usize << i;
            for s in 0..f.len() {
                if s & bit == 0 {
                    f[s] += f[s | bit];
                }
            }
        }
        f
    }

    /// Sum of probabilities of outcomes where every event in `legs` occurs.
    pub fn event_prob(&self, legs: Mask) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .filter(|(x, _)| (*x as Mask) & legs == legs)
            .map(|(_, p)| p)
            .sum()
    }

    pub fn moments(&self) -> MomentVector {
        let f = self.intersection_probs();
        moments_from_intersections(self.m, &f)
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }
}

fn moments_from_intersections(m: usize, f: &[f64]) -> MomentVector {
    MomentVector {
        p_single: (0..m).map(|i| f[1 << i]).collect(),
        p_pair: pairs(m).map(|(i, j)| f[(1 << i) | (1 << j)]).collect(),
    }
}

/// Normalized Ising distribution as an explicit table.
pub fn joint_table(params: &IsingParams) -> Result<JointTable, IsingError> {
    let m = params.m;
    if m > EXACT_CUTOFF {
        return Err(IsingError::DimensionTooLarge {
            m,
            cutoff: EXACT_CUTOFF,
        });
    }
    let n = 1usize << m;
    let mut energy = vec![0.0; n];
    for x in 1..n {
        let k = x.trailing_zeros() as usize;
        let rest = x & (x - 1);
        let mut e = energy[rest] + params.theta[k];
        let mut r = rest;
        while r != 0 {
            let j = r.trailing_zeros() as usize;
            e += params.w_upper[pair_index(m, k, j)];
            r &= r - 1;
        }
        energy[x] = e;
    }
    let max = energy.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for e in energy.iter_mut() {
        *e = (*e - max).exp();
        z += *e;
    }
    energy.iter_mut().for_each(|e| *e /= z);
    Ok(JointTable { m, probs: energy })
}

/// Exact inference cache: the joint table plus all intersection
/// probabilities, from which every price and gradient is a lookup.
#[derive(Debug, Clone)]
pub struct ExactBeliefs {
    pub m: usize,
    pub table: JointTable,
    /// `sup[S] = P(X_i = 1 for all i in S)`.
    pub sup: Vec<f64>,
}

impl ExactBeliefs {
    pub fn new(params: &IsingParams) -> Result<Self, IsingError> {
        let table = joint_table(params)?;
        let sup = table.intersection_probs();
        Ok(Self {
            m: params.m,
            table,
            sup,
        })
    }

    #[inline]
    pub fn event_prob(&self, legs: Mask) -> f64 {
        self.sup[legs as usize]
    }

    pub fn moments(&self) -> MomentVector {
        moments_from_intersections(self.m, &self.sup)
    }

    /// `∇_φ q_S = Cov_φ(T(X), 1_S) = q_S (E[T | S] - E[T])`.
    pub fn grad_event_prob(&self, legs: Mask) -> SufficientStats {
        let m = self.m;
        let s = legs as usize;
        let q = self.sup[s];
        let mut g = SufficientStats::zeros(m);
        for i in 0..m {
            let bit = 1usize << i;
            g.values[i] = self.sup[s | bit] - q * self.sup[bit];
        }
        for (k, (i, j)) in pairs(m).enumerate() {
            let bits = (1usize << i) | (1usize << j);
            g.values[m + k] = self.sup[s | bits] - q * self.sup[bits];
        }
        g
    }

    /// Gradient of `CE(p_target, q_S(φ))`.
    pub fn grad_ce(&self, legs: Mask, p_target: f64) -> SufficientStats {
        let q = self.event_prob(legs);
        let scale = ce_slope(p_target, q);
        self.grad_event_prob(legs).scale(scale)
    }

    /// Probability of a signed combination `Σ sign_k q_{S_k}` of all-YES events.
    pub fn expansion_prob(&self, terms: &[(Mask, f64)]) -> f64 {
        terms.iter().map(|(s, sign)| sign * self.event_prob(*s)).sum()
    }

    pub fn grad_expansion(&self, terms: &[(Mask, f64)]) -> SufficientStats {
        let mut g = SufficientStats::zeros(self.m);
        for (s, sign) in terms {
            g.add_scaled(&self.grad_event_prob(*s), *sign);
        }
        g
    }
}

/// `∂ CE(p, q) / ∂q = (q - p) / (q (1 - q))` with `q` clamped in the
/// denominator only.
#[inline]
pub fn ce_slope(p_target: f64, q: f64) -> f64 {
    let qc = clamp_prob(q);
    (q - clamp_prob(p_target)) / (qc * (1.0 - qc))
}

pub fn event_prob_exact(params: &IsingParams, legs: Mask) -> Result<f64, IsingError> {
    if legs == 0 {
        return Err(IsingError::EmptySubset);
    }
    Ok(ExactBeliefs::new(params)?.event_prob(legs))
}

pub fn moments_exact(params: &IsingParams) -> Result<MomentVector, IsingError> {
    Ok(ExactBeliefs::new(params)?.moments())
}

pub fn grad_event_prob_exact(
    params: &IsingParams,
    legs: Mask,
) -> Result<SufficientStats, IsingError> {
    if legs == 0 {
        return Err(IsingError::EmptySubset);
    }
    Ok(ExactBeliefs::new(params)?.grad_event_prob(legs))
}

pub fn grad_ce_exact(
    params: &IsingParams,
    legs: Mask,
    p_target: f64,
) -> Result<SufficientStats, IsingError> {
    if legs == 0 {
        return Err(IsingError::EmptySubset);
    }
    Ok(ExactBeliefs::new(params)?.grad_ce(legs, p_target))
}

/// Singleton-then-pair events in sufficient-statistic order.
pub fn composite_events(m: usize) -> Vec<Mask> {
    (0..m)
        .map(|i| 1 << i)
        .chain(pairs(m).map(|(i, j)| (1 << i) | (1 << j)))
        .collect()
}

/// Composite loss `Σ_E λ_E CE(target_E, q_E(φ))` over singleton and pair
/// events.
pub fn composite_loss(
    params: &IsingParams,
    weights: &[f64],
    targets: &MomentVector,
) -> Result<f64, IsingError> {
    let beliefs = ExactBeliefs::new(params)?;
    Ok(composite_events(params.m)
        .iter()
        .zip(weights)
        .zip(targets.to_flat())
        .map(|((&e, &w), p)| w * cross_entropy(p, beliefs.event_prob(e)))
        .sum())
}

/// Analytic Hessian of [`composite_loss`].
///
/// Each event contributes `CE''(q) ∇q ∇qᵀ + CE'(q) ∇²q`, where `∇²q_E` is the
/// third joint cumulant `κ(1_E, T_a, T_b)` computed by enumeration.
pub fn hessian_composite(
    params: &IsingParams,
    weights: &[f64],
    targets: &MomentVector,
) -> Result<DMatrix<f64>, IsingError> {
    let m = params.m;
    let d = stat_dim(m);
    if weights.len() != d || targets.m() != m {
        return Err(IsingError::InvalidParams(
            "weights and targets must cover every singleton and pair".into(),
        ));
    }
    let beliefs = ExactBeliefs::new(params)?;
    let n = 1usize << m;
    let stats: Vec<SufficientStats> = (0..n)
        .map(|x| SufficientStats::of_outcome(m, x as Mask))
        .collect();
    let mean = beliefs.moments().to_flat();
    let mut h = DMatrix::<f64>::zeros(d, d);
    for ((&event, &lambda), p) in composite_events(m).iter().zip(weights).zip(targets.to_flat()) {
        if lambda == 0.0 {
            continue;
        }
        let q = beliefs.event_prob(event);
        let grad = DVector::from_vec(beliefs.grad_event_prob(event).values);
        let d1 = (q - p) / (q * (1.0 - q));
        let d2 = p / (q * q) + (1.0 - p) / ((1.0 - q) * (1.0 - q));
        h += &grad * grad.transpose() * (lambda * d2);
        if d1 != 0.0 {
            let mut cum = DMatrix::<f64>::zeros(d, d);
            for (x, px) in beliefs.table.probs.iter().enumerate() {
                let ind = if (x as Mask) & event == event { 1.0 } else { 0.0 };
                let c = px * (ind - q);
                if c == 0.0 {
                    continue;
                }
                let centered = DVector::from_iterator(
                    d,
                    stats[x].values.iter().zip(&mean).map(|(t, mu)| t - mu),
                );
                cum += &centered * centered.transpose() * c;
            }
            h += cum * (lambda * d1);
        }
    }
    Ok(h)
}

/// Algorithm used by [`fit_to_moments_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    /// Damped Newton on the dual `log Z(φ) - ⟨φ, m*⟩`.
    Newton,
    /// Full-batch gradient descent on the uniform composite CE loss with
    /// initial step 0.5 and backtracking halving.
    GradientDescent,
}

#[derive(Debug, Clone)]
pub struct FitReport {
    pub params: IsingParams,
    pub iterations: usize,
    pub max_gap: f64,
}

/// I-projection of the target moments onto the Ising family.
pub fn fit_to_moments(
    target: &MomentVector,
    tol: f64,
    max_iter: usize,
) -> Result<IsingParams, IsingError> {
    fit_to_moments_with(target, tol, max_iter, FitMethod::Newton).map(|r| r.params)
}

pub fn fit_to_moments_with(
    target: &MomentVector,
    tol: f64,
    max_iter: usize,
    method: FitMethod,
) -> Result<FitReport, IsingError> {
    target.validate_interior()?;
    let m = target.m();
    if m > EXACT_CUTOFF {
        return Err(IsingError::DimensionTooLarge {
            m,
            cutoff: EXACT_CUTOFF,
        });
    }
    match method {
        FitMethod::Newton => fit_newton(target, tol, max_iter),
        FitMethod::GradientDescent => fit_gradient_descent(target, tol, max_iter),
    }
}

fn fit_newton(target: &MomentVector, tol: f64, max_iter: usize) -> Result<FitReport, IsingError> {
    let m = target.m();
    let d = stat_dim(m);
    let t = DVector::from_vec(target.to_flat());
    let mut params = IsingParams::zeros(m);
    let n = 1usize << m;
    let stats: Vec<DVector<f64>> = (0..n)
        .map(|x| DVector::from_vec(SufficientStats::of_outcome(m, x as Mask).values))
        .collect();
    let dual = |p: &IsingParams| -> f64 {
        // log Z - <φ, m*>, with log Z evaluated stably.
        let energies: Vec<f64> = (0..n).map(|x| p.energy(x as Mask)).collect();
        let max = energies.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let log_z = max + energies.iter().map(|e| (e - max).exp()).sum::<f64>().ln();
        log_z - DVector::from_vec(p.to_flat()).dot(&t)
    };
    let mut gap = f64::INFINITY;
    for iter in 0..max_iter {
        let table = joint_table(&params)?;
        let mean = DVector::from_vec(table.moments().to_flat());
        let grad = &mean - &t;
        gap = grad.amax();
        if gap <= tol {
            return Ok(FitReport {
                params,
                iterations: iter,
                max_gap: gap,
            });
        }
        let mut cov = DMatrix::<f64>::zeros(d, d);
        for (x, px) in table.probs.iter().enumerate() {
            let c = &stats[x] - &mean;
            cov.ger(*px, &c, &c, 1.0);
        }
        for k in 0..d {
            cov[(k, k)] += 1e-12;
        }
        let dir = match cov.clone().cholesky() {
            Some(ch) => ch.solve(&grad),
            None => grad.clone(),
        };
        let base = dual(&params);
        let slope = grad.dot(&dir);
        let mut step = 1.0;
        let flat = DVector::from_vec(params.to_flat());
        loop {
            let cand = IsingParams::from_flat(m, (&flat - &dir * step).as_slice())?;
            // Near the optimum the dual decrease drops below rounding error,
            // so a shrinking moment gap also accepts the step.
            let accept = dual(&cand) <= base - 1e-4 * step * slope
                || moment_gap(&cand, &t)? < (1.0 - 0.5 * step) * gap;
            if accept || step < 1e-10 {
                params = cand;
                break;
            }
            step *= 0.5;
        }
    }
    Err(IsingError::NonConvergence {
        iterations: max_iter,
        gap,
    })
}

fn moment_gap(p: &IsingParams, t: &DVector<f64>) -> Result<f64, IsingError> {
    let mean = joint_table(p)?.moments().to_flat();
    Ok(mean
        .iter()
        .zip(t.iter())
        .fold(0.0, |acc, (a, b)| acc.max((a - b).abs())))
}

fn fit_gradient_descent(
    target: &MomentVector,
    tol: f64,
    max_iter: usize,
) -> Result<FitReport, IsingError> {
    let m = target.m();
    let events = composite_events(m);
    let targets = target.to_flat();
    let loss_and_grad = |p: &IsingParams| -> Result<(f64, SufficientStats, f64), IsingError> {
        let b = ExactBeliefs::new(p)?;
        let mut loss = 0.0;
        let mut g = SufficientStats::zeros(m);
        let mut gap: f64 = 0.0;
        for (&e, &pt) in events.iter().zip(&targets) {
            let q = b.event_prob(e);
            gap = gap.max((q - pt).abs());
            loss += cross_entropy(pt, q);
            g.add_scaled(&b.grad_ce(e, pt), 1.0);
        }
        Ok((loss, g, gap))
    };
    let mut params = IsingParams::zeros(m);
    let (mut loss, mut grad, mut gap) = loss_and_grad(&params)?;
    for iter in 0..max_iter {
        if gap <= tol {
            return Ok(FitReport {
                params,
                iterations: iter,
                max_gap: gap,
            });
        }
        let mut step = 0.5;
        loop {
            let mut cand = params.clone();
            cand.step(&grad, step, step);
            let (l, g, gp) = loss_and_grad(&cand)?;
            if l <= loss - 0.5 * step * grad.norm_sq() || step < 1e-12 {
                params = cand;
                loss = l;
                grad = g;
                gap = gp;
                break;
            }
            step *= 0.5;
        }
    }
    Err(IsingError::NonConvergence {
        iterations: max_iter,
        gap,
    })
}

/// Default tolerance and iteration budget for moment fitting.
pub const FIT_TOL: f64 = 1e-8;
pub const FIT_MAX_ITER: usize = 10_000;

/// The uniform-weight vector used for the composite loss of `m` events.
pub fn uniform_weights(m: usize) -> Vec<f64> {
    vec![1.0; stat_dim(m)]
}

/// Smallest probability allowed in a target moment vector derived from data.
pub const MOMENT_FLOOR: f64 = EPS_P;


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn params() -> impl Strategy<Value = IsingParams> {
        (1usize..8).prop_flat_map(|m| {
            prop::collection::vec(-3.0f64..3.0, stat_dim(m)).prop_map(move |v| IsingParams::from_flat(m, &v).unwrap())
        })
    }

    proptest! {
        #[test]
        fn joint_table_is_a_distribution(p in params()) {
            let t = joint_table(&p).unwrap();
            prop_assert!((t.total() - 1.0).abs() < 1e-12);
            prop_assert!(t.probs.iter().all(|&x| x > 0.0));
        }

        #[test]
        fn event_prob_shrinks_with_more_legs(p in params(), a in 1u32..128, extra in 0u32..128) {
            let full = (1u32 << p.m) - 1;
            let sub = (a & full).max(1);
            let sup = sub | (extra & full);
            let b = ExactBeliefs::new(&p).unwrap();
            prop_assert!(b.event_prob(sup) <= b.event_prob(sub) + 1e-15);
        }

        #[test]
        fn moments_agree_with_the_table(p in params()) {
            let b = ExactBeliefs::new(&p).unwrap();
            let mom = b.moments();
            for i in 0..p.m {
                prop_assert!((mom.p_single[i] - b.event_prob(1 << i)).abs() < 1e-12);
            }
            for (i, j) in pairs(p.m) {
                prop_assert!((mom.pair(i, j) - b.event_prob(1 << i | 1 << j)).abs() < 1e-12);
            }
        }
    }
}
