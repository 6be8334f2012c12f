//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line
//! with its measured values, then asserts.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use parlay_core::baselines::{persistent_arbitrage, ModelKind};
use parlay_core::bp::{BpBeliefs, BpConfig};
use parlay_core::engine::{Family, MarketId, ParlayEngine};
use parlay_core::harness::{param_error_traces, run_ablation, run_scaling_with, sign_test_greater, ExperimentConfig};
use parlay_core::ising::{
    composite_events, event_prob_exact, fit_to_moments, grad_ce_exact, grad_event_prob_exact, hessian_composite,
    moments_exact, pair_index, stat_dim, uniform_weights, ExactBeliefs, IsingParams, JointTable, Mask,
};
use parlay_core::lmsr::{BinaryBook, KStateBook};
use parlay_core::orthant::{bivariate_orthant_at_zero, orthant_equicorr};
use parlay_core::potts::{run_potts, simulate_binary_reference, simulate_potts, PottsConfig, PottsModel};
use parlay_core::replay::{
    canonicalize, replay, synthetic_stream, ComboTrade, MarketIndex, ReplayConfig, ReplayMode, Side, SyntheticConfig,
};
use parlay_core::world::WorldMode;

fn report(id: &str, pass: bool, detail: &str) {
    let line = format!("[{}] {id}: {detail}\n", if pass { "PASS" } else { "FAIL" });
    // Written straight to the handle so it shows without --nocapture.
    let _ = std::io::stderr().lock().write_all(line.as_bytes());
}

fn random_params(m: usize, scale: f64, rng: &mut impl Rng) -> IsingParams {
    let flat: Vec<f64> = (0..stat_dim(m)).map(|_| rng.random_range(-scale..scale)).collect();
    IsingParams::from_flat(m, &flat).unwrap()
}

// 1. Hessian constants.

const HESSIAN_TOL: f64 = 1e-4;
const COND_TOL: f64 = 1e-3;

#[test]
fn c01_hessian_constants() {
    let m = 4;
    let d = stat_dim(m);
    let zero = IsingParams::zeros(m);
    let targets = moments_exact(&zero).unwrap();
    let w = uniform_weights(m);
    let h = hessian_composite(&zero, &w, &targets).unwrap();

    // Finite-difference oracle: central differences of the composite gradient.
    let grad = |p: &IsingParams| -> Vec<f64> {
        let mut g = vec![0.0; d];
        for (&e, p_t) in composite_events(m).iter().zip(targets.to_flat()) {
            for (gi, v) in g.iter_mut().zip(grad_ce_exact(p, e, p_t).unwrap().values) {
                *gi += v;
            }
        }
        g
    };
    let step = 1e-5;
    let mut fd_gap: f64 = 0.0;
    let base = zero.to_flat();
    for c in 0..d {
        let mut up = base.clone();
        let mut dn = base.clone();
        up[c] += step;
        dn[c] -= step;
        let gu = grad(&IsingParams::from_flat(m, &up).unwrap());
        let gd = grad(&IsingParams::from_flat(m, &dn).unwrap());
        for r in 0..d {
            fd_gap = fd_gap.max(((gu[r] - gd[r]) / (2.0 * step) - h[(r, c)]).abs());
        }
    }

    let mut diag_gap: f64 = 0.0;
    for r in 0..d {
        for c in 0..d {
            let want = match (r == c, r < m) {
                (true, true) => 0.25,
                (true, false) => 3.0 / 16.0,
                _ => 0.0,
            };
            diag_gap = diag_gap.max((h[(r, c)] - want).abs());
        }
    }
    let eig = h.clone().symmetric_eigen().eigenvalues;
    let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let cond = hi / lo;

    let pass = fd_gap <= HESSIAN_TOL && diag_gap <= HESSIAN_TOL && (cond - 4.0 / 3.0).abs() <= COND_TOL;
    report(
        "criterion 1 (hessian constants)",
        pass,
        &format!(
            "fd gap {fd_gap:.2e}; max |H - diag(1/4, 3/16)| = {diag_gap:.4}; H_00 = {:.4}, H_{m}{m} = {:.4}; \
             cond {cond:.2} vs 4/3 (tol {HESSIAN_TOL:e} / {COND_TOL:e})",
            h[(0, 0)],
            h[(m, m)]
        ),
    );
    assert!(pass);
}

// 2. I-projection fixed point.

const FIT_GAP_TOL: f64 = 1e-6;
const FIT_GRAD_TOL: f64 = 1e-6;

#[test]
fn c02_i_projection_fixed_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst_gap, mut worst_grad): (f64, f64) = (0.0, 0.0);
    let mut count = 0;
    for m in [3, 4, 5] {
        for _ in 0..20 {
            let target = moments_exact(&random_params(m, 1.0, &mut rng)).unwrap();
            target.validate_interior().unwrap();
            let fit = fit_to_moments(&target, 1e-10, 10_000).unwrap();
            worst_gap = worst_gap.max(moments_exact(&fit).unwrap().max_gap(&target));
            let mut g = vec![0.0; stat_dim(m)];
            for (&e, p) in composite_events(m).iter().zip(target.to_flat()) {
                for (gi, v) in g.iter_mut().zip(grad_ce_exact(&fit, e, p).unwrap().values) {
                    *gi += v;
                }
            }
            worst_grad = worst_grad.max(g.iter().fold(0.0, |a: f64, v| a.max(v.abs())));
            count += 1;
        }
    }
    let pass = worst_gap <= FIT_GAP_TOL && worst_grad <= FIT_GRAD_TOL;
    report(
        "criterion 2 (I-projection fixed point)",
        pass,
        &format!("{count} targets, max moment gap {worst_gap:.2e}, max |grad_ce| {worst_grad:.2e}"),
    );
    assert!(pass);
}

// 3. Gradient and inference oracles.

const GRAD_REL_TOL: f64 = 1e-5;
const BP_TREE_TOL: f64 = 1e-9;
const ORTHANT_TOL: f64 = 1e-6;

#[test]
fn c03_gradient_and_inference_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    let mut worst_rel: f64 = 0.0;
    for _ in 0..100 {
        let m = rng.random_range(2..=6);
        let p = random_params(m, 1.5, &mut rng);
        let legs: Mask = rng.random_range(1..(1u32 << m));
        let g = grad_event_prob_exact(&p, legs).unwrap().values;
        let flat = p.to_flat();
        let h = 1e-6;
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for c in 0..flat.len() {
            let mut up = flat.clone();
            let mut dn = flat.clone();
            up[c] += h;
            dn[c] -= h;
            let fd = (event_prob_exact(&IsingParams::from_flat(m, &up).unwrap(), legs).unwrap()
                - event_prob_exact(&IsingParams::from_flat(m, &dn).unwrap(), legs).unwrap())
                / (2.0 * h);
            num = num.max((g[c] - fd).abs());
            den = den.max(fd.abs());
        }
        worst_rel = worst_rel.max(num / den.max(1e-12));
    }

    // Random trees: every node after the first attaches to an earlier one.
    let cfg = BpConfig {
        max_iter: 1000,
        damping: 0.0,
        tol: 1e-14,
    };
    let mut worst_bp: f64 = 0.0;
    for _ in 0..30 {
        let m = rng.random_range(3..=10);
        let theta: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut w = vec![0.0; m * (m - 1) / 2];
        for j in 1..m {
            let i = rng.random_range(0..j);
            w[pair_index(m, i, j)] = rng.random_range(-1.5..1.5);
        }
        let p = IsingParams::new(theta, w).unwrap();
        let exact = ExactBeliefs::new(&p).unwrap();
        let bp = BpBeliefs::new(&p, cfg);
        for _ in 0..20 {
            let k = rng.random_range(1..=3);
            let legs = rand::seq::index::sample(&mut rng, m, k).iter().fold(0, |a, i| a | 1 << i);
            worst_bp = worst_bp.max((bp.event_prob(legs).unwrap() - exact.event_prob(legs)).abs());
        }
    }

    let want = 0.25 + 0.3f64.asin() / (2.0 * std::f64::consts::PI);
    let orth = (orthant_equicorr(&[0.0, 0.0], 0.3) - want)
        .abs()
        .max((bivariate_orthant_at_zero(0.3) - want).abs());

    let pass = worst_rel < GRAD_REL_TOL && worst_bp <= BP_TREE_TOL && orth <= ORTHANT_TOL;
    report(
        "criterion 3 (gradient/inference oracles)",
        pass,
        &format!("grad rel err {worst_rel:.2e}; tree BP vs enumeration {worst_bp:.2e}; orthant gap {orth:.2e}"),
    );
    assert!(pass);
}

// 4. Per-market loss scaling.

const SCALING_BAND: f64 = 0.35;
const RATIO_RANGE: (f64, f64) = (0.40, 0.60);
const LEVEL_RANGE: (f64, f64) = (0.08, 0.25);

fn within_band(xs: &[f64], band: f64) -> bool {
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    xs.iter().all(|x| (x - mean).abs() <= band * mean)
}

#[test]
fn c04_per_market_scaling() {
    let cfg = ExperimentConfig::default();
    assert_eq!(cfg.m_values, vec![4, 5, 6]);
    assert_eq!((cfg.runs, cfg.b, cfg.rho, cfg.eta_theta), (100, 1.0, 0.3, 0.2));
    let s = run_scaling_with(&cfg).unwrap();
    let rows: Vec<_> = s.rows.iter().filter(|r| !r.extrapolated).collect();
    let lx: Vec<f64> = rows.iter().map(|r| r.loss_x_2m).collect();
    let tot: Vec<f64> = rows.iter().map(|r| r.total_per_round).collect();
    let ratios: Vec<f64> = rows.iter().filter_map(|r| r.ratio).collect();

    let flat = within_band(&lx, SCALING_BAND);
    let halving = ratios.iter().all(|r| (RATIO_RANGE.0..=RATIO_RANGE.1).contains(r));
    let total_flat = within_band(&tot, SCALING_BAND);
    let level = lx.iter().all(|x| (LEVEL_RANGE.0..=LEVEL_RANGE.1).contains(x));
    let pass = flat && halving && total_flat && level;
    report(
        "criterion 4 (per-market loss scaling)",
        pass,
        &format!(
            "l*2^M {lx:.4?} (flat {flat}, level in {LEVEL_RANGE:?} {level}); ratios {ratios:.3?} (in {RATIO_RANGE:?} {halving}); \
             N*l {tot:.4?} (flat {total_flat})"
        ),
    );
    assert!(pass);
}

// 5. Ranking reversal.

const REVERSAL_P: f64 = 0.01;

#[test]
fn c05_ranking_reversal() {
    let cfg = ExperimentConfig {
        m_values: vec![6],
        rounds: 300,
        world_mode: WorldMode::Dynamic,
        models: vec![
            ModelKind::ParlayAmm,
            ModelKind::IndependentLmsr,
            ModelKind::PairwiseOracle,
            ModelKind::GaussianOracle,
        ],
        ..Default::default()
    };
    let r = run_ablation(&cfg).unwrap();
    let amm = r.get(ModelKind::ParlayAmm).unwrap();
    let mut pass = true;
    let mut parts = vec![format!(
        "amm with/base-only {:.4}/{:.4}",
        amm.mean_with_parlays(),
        amm.mean_base_only()
    )];
    for kind in [ModelKind::IndependentLmsr, ModelKind::PairwiseOracle, ModelKind::GaussianOracle] {
        let other = r.get(kind).unwrap();
        let p = r.p_value(ModelKind::ParlayAmm, kind, true);
        let wins = amm.mean_with_parlays() < other.mean_with_parlays() && p < REVERSAL_P;
        let reverses = amm.mean_base_only() >= other.mean_base_only();
        pass &= wins && reverses;
        parts.push(format!(
            "{} {:.4}/{:.4} (p {p:.1e}, beaten {wins}, base-only reversed {reverses})",
            kind.name(),
            other.mean_with_parlays(),
            other.mean_base_only()
        ));
    }
    report("criterion 5 (ranking reversal)", pass, &parts.join("; "));
    assert!(pass);
}

// 6. Convergence rate.

const CONV_ROUNDS: usize = 50;
const CONV_DROP: f64 = 10.0;
const LINEAR_SLACK: f64 = 2.0;

fn mean_trace(traces: &[Vec<f64>]) -> Vec<f64> {
    let n = traces[0].len();
    (0..n)
        .map(|t| traces.iter().map(|tr| tr[t]).sum::<f64>() / traces.len() as f64)
        .collect()
}

#[test]
fn c06_convergence_rate() {
    let base = ExperimentConfig {
        m_values: vec![4],
        alpha: 0.0,
        world_mode: WorldMode::Static,
        ..Default::default()
    };
    let mut tails = Vec::new();
    let mut drop_round = None;
    for eta in [0.05, 0.1, 0.2] {
        let cfg = ExperimentConfig {
            eta_theta: eta,
            eta_w: eta,
            ..base.clone()
        };
        let avg = mean_trace(&param_error_traces(&cfg, 4).unwrap());
        let tail = &avg[avg.len() - 500..];
        tails.push(tail.iter().sum::<f64>() / tail.len() as f64);
        if eta == 0.2 {
            drop_round = avg.iter().position(|&e| e <= avg[0] / CONV_DROP);
        }
    }
    let fast = drop_round.is_some_and(|t| t <= CONV_ROUNDS);
    let etas = [0.05, 0.1, 0.2];
    let mut linear = true;
    for a in 0..3 {
        for b in a + 1..3 {
            let scale = (tails[b] / tails[a]) / (etas[b] / etas[a]);
            linear &= (1.0 / LINEAR_SLACK..=LINEAR_SLACK).contains(&scale);
        }
    }
    let pass = fast && linear;
    report(
        "criterion 6 (convergence rate)",
        pass,
        &format!(
            "10x drop at round {drop_round:?} (need <= {CONV_ROUNDS}); last-500 error {tails:.3?} for eta {etas:?} (linear within 2x {linear})"
        ),
    );
    assert!(pass);
}

// 7. Parlay acceleration.

const ACCEL_P: f64 = 0.05;

#[test]
fn c07_parlay_acceleration() {
    let at = |family: Family| -> Vec<f64> {
        let cfg = ExperimentConfig {
            m_values: vec![5],
            rounds: 100,
            family,
            ..Default::default()
        };
        param_error_traces(&cfg, 5).unwrap().iter().map(|t| t[100]).collect()
    };
    let pairs = at(Family::BasePairs);
    let k3 = at(Family::BasePairsK3);
    let diffs: Vec<f64> = pairs.iter().zip(&k3).map(|(a, b)| a - b).collect();
    let p = sign_test_greater(&diffs);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let pass = mean(&k3) < mean(&pairs) && p < ACCEL_P;
    report(
        "criterion 7 (parlay acceleration)",
        pass,
        &format!("error at round 100: base+pairs {:.4}, +3-way {:.4}, sign test p {p:.2e}", mean(&pairs), mean(&k3)),
    );
    assert!(pass);
}

// 8. Coherence and the persistent-arbitrage construction.

const ARB_TOL: f64 = 1e-9;

#[test]
fn c08_coherence() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut violations = 0;
    for _ in 0..10_000 {
        let m = rng.random_range(2..=8);
        let mut e = ParlayEngine::from_params(random_params(m, 3.0, &mut rng), 1.0, 0.2, 0.2).unwrap();
        let full = (1u32 << m) - 1;
        let sup = rng.random_range(1..=full);
        let sub = sup & rng.random_range(1..=full);
        let mut family = vec![MarketId::new(sup).unwrap()];
        if sub != 0 {
            family.push(MarketId::new(sub).unwrap());
        }
        family.extend((0..m).filter(|i| sup >> i & 1 == 1).map(MarketId::single));
        family.sort();
        family.dedup();
        violations += e.coherence_report(&family).unwrap().len();
    }
    let edges = persistent_arbitrage(0.6, 200, 1.0).unwrap();
    let arb_gap = edges
        .iter()
        .enumerate()
        .map(|(k, &c)| (c - 0.24 * (k + 1) as f64).abs())
        .fold(0.0f64, f64::max);
    let pass = violations == 0 && arb_gap <= ARB_TOL;
    report(
        "criterion 8 (coherence)",
        pass,
        &format!(
            "10000 states, {violations} violations; product baseline edge after 200 trades {:.6} (max gap to 0.24k {arb_gap:.1e})",
            edges[199]
        ),
    );
    assert!(pass);
}

// 9. LMSR loss bounds.

const LMSR_SLACK: f64 = 1e-9;

#[test]
fn c09_lmsr_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let b = 5.0;
    let mut worst_bin = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let mut book = BinaryBook::new(b);
        for _ in 0..rng.random_range(1..50) {
            if rng.random::<bool>() {
                book.fill_shares(rng.random_range(-40.0..40.0));
            } else {
                book.fill_to_price(rng.random_range(0.0..1.0));
            }
        }
        worst_bin = worst_bin.max(book.settle(true)).max(book.settle(false));
    }
    let k = 5;
    let mut worst_k = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let mut book = KStateBook::uniform(k, b);
        for _ in 0..rng.random_range(1..50) {
            if rng.random::<bool>() {
                let shares: Vec<f64> = (0..k).map(|_| rng.random_range(-30.0..30.0)).collect();
                book.fill_shares(&shares);
            } else {
                let w: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 1e-3).collect();
                let z: f64 = w.iter().sum();
                book.fill_to_target(&w.iter().map(|x| x / z).collect::<Vec<_>>());
            }
        }
        worst_k = (0..k).map(|o| book.settle(o)).fold(worst_k, f64::max);
    }
    let bin_bound = b * 2f64.ln() + LMSR_SLACK;
    let k_bound = b * (k as f64).ln() + LMSR_SLACK;
    let pass = worst_bin <= bin_bound && worst_k <= k_bound;
    report(
        "criterion 9 (LMSR bounds)",
        pass,
        &format!("binary worst {worst_bin:.6} <= {bin_bound:.6}; K={k} worst {worst_k:.6} <= {k_bound:.6}"),
    );
    assert!(pass);
}

// 10. Fee cancellation.

const FEE_TOL: f64 = 1e-12;

#[test]
fn c10_fee_cancellation() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    let mut n = 0;
    for _ in 0..200 {
        let m = rng.random_range(2..=6);
        let w: Vec<f64> = (0..1 << m).map(|_| rng.random::<f64>() + 0.05).collect();
        let z: f64 = w.iter().sum();
        let table = JointTable::new(m, w.iter().map(|x| x / z).collect()).unwrap();
        let index = MarketIndex::new((0..m).map(|i| format!("e{i}"))).unwrap();
        let k = rng.random_range(2..=m);
        let mut legs: Vec<(usize, Side)> = rand::seq::index::sample(&mut rng, m, k)
            .iter()
            .map(|i| (i, if rng.random::<bool>() { Side::Yes } else { Side::No }))
            .collect();
        // Mixed sides: at least one YES and one NO leg.
        legs[0].1 = Side::Yes;
        legs[1].1 = Side::No;
        let yes: Mask = legs.iter().filter(|l| l.1 == Side::Yes).fold(0, |a, l| a | 1 << l.0);
        let no: Mask = legs.iter().filter(|l| l.1 == Side::No).fold(0, |a, l| a | 1 << l.0);
        let truth: f64 = (0..1u32 << m)
            .filter(|x| x & yes == yes && x & no == 0)
            .map(|x| table.probs[x as usize])
            .sum();
        for eps in [0.01, 0.02, 0.05] {
            let trade = ComboTrade {
                timestamp: 0,
                legs: legs.iter().map(|&(i, s)| (format!("e{i}"), s)).collect(),
                exec_price: table.event_prob(yes | no) + eps,
                size: 1.0,
            };
            let c = canonicalize(&trade, &index, |s| Some(table.event_prob(s) + eps)).unwrap();
            worst = worst.max((c.target_prob - truth).abs());
            n += 1;
        }
    }
    let pass = worst <= FEE_TOL;
    report("criterion 10 (fee cancellation)", pass, &format!("{n} mixed parlays, max gap to fee-free {worst:.2e}"));
    assert!(pass);
}

// 11. Multinomial bracketing, the binary reduction and the replay invariants.

const REDUCTION_TOL: f64 = 1e-9;

#[test]
fn c11_multinomial_bracketing() {
    let cfg = PottsConfig::default();
    assert_eq!(cfg.k, vec![2, 3, 4, 4, 5]);
    assert_eq!((cfg.runs, cfg.b, cfg.eta_theta, cfg.steps), (200, 10.0, 0.2, 300));
    let rows = run_potts(&cfg).unwrap();
    let get = |m: PottsModel| rows.iter().find(|r| r.0 == m).unwrap().1;
    let (oracle, amm, indep) = (get(PottsModel::TrueOracle), get(PottsModel::PottsAmm), get(PottsModel::Independent));
    let inside = amm.between(&oracle, &indep);
    let bracketed = inside.iter().all(|&b| b);

    let binary = PottsConfig {
        k: vec![2; 5],
        ..PottsConfig::default()
    };
    let mut reduction: f64 = 0.0;
    for run in 0..5 {
        let a = simulate_potts(&binary, PottsModel::PottsAmm, run).unwrap();
        let b = simulate_binary_reference(&binary, run).unwrap();
        reduction = a.iter().zip(&b).fold(reduction, |acc, (x, y)| acc.max((x - y).abs()));
    }
    let reduces = reduction <= REDUCTION_TOL;

    // Synthetic replay: identical streams and reports on repeat, and the
    // two modes keep their own fill rules.
    let sc = SyntheticConfig::default();
    let s1 = synthetic_stream(&sc).unwrap();
    let s2 = synthetic_stream(&sc).unwrap();
    let mut deterministic = s1 == s2;
    let mut separated = true;
    let mut reports = Vec::new();
    for mode in [ReplayMode::FullMarket, ReplayMode::Standalone] {
        let rc = ReplayConfig {
            mode,
            ..Default::default()
        };
        let a = replay(&s1.events, &rc, Some(&s1.truth)).unwrap();
        deterministic &= a == replay(&s2.events, &rc, Some(&s2.truth)).unwrap();
        separated &= a.accepted + a.rejected == a.trades;
        match mode {
            ReplayMode::FullMarket => separated &= a.rejected == 0 && a.ledger.iter().all(|f| f.accepted),
            ReplayMode::Standalone => {
                separated &= a.rejected > 0 && a.ledger.iter().all(|f| f.accepted && f.quote <= f.exec_price)
            }
        }
        reports.push(a);
    }
    separated &= reports[0].ledger != reports[1].ledger;

    let pass = bracketed && reduces && deterministic && separated;
    report(
        "criterion 11 (multinomial bracketing)",
        pass,
        &format!(
            "mean/median/var95/cvar95 oracle {:.4}/{:.4}/{:.4}/{:.4}, amm {:.4}/{:.4}/{:.4}/{:.4}, independent {:.4}/{:.4}/{:.4}/{:.4}, \
             inside {inside:?}; K=2 reduction gap {reduction:.1e}; replay deterministic {deterministic}, modes separated {separated}",
            oracle.mean, oracle.median, oracle.var95, oracle.cvar95, amm.mean, amm.median, amm.var95, amm.cvar95,
            indep.mean, indep.median, indep.var95, indep.cvar95
        ),
    );
    assert!(pass);
}

// Standalone replay: quotes that are filled should be no worse than quotes
// overall.

#[test]
fn replay_accepted_quotes_are_sharper() {
    let s = synthetic_stream(&SyntheticConfig::default()).unwrap();
    let rc = ReplayConfig {
        mode: ReplayMode::Standalone,
        ..Default::default()
    };
    let r = replay(&s.events, &rc, Some(&s.truth)).unwrap();
    let (acc, all) = (r.mean_err_accepted.unwrap(), r.mean_err_all.unwrap());
    let pass = acc <= all;
    report(
        "replay check (accepted-quote error)",
        pass,
        &format!("accept rate {:.3}; mean |quote - truth| accepted {acc:.4}, all {all:.4}", r.accept_rate().unwrap()),
    );
    assert!(pass);
}

#[test]
fn tolerances_are_pinned() {
    assert_eq!((HESSIAN_TOL, COND_TOL), (1e-4, 1e-3));
    assert_eq!((FIT_GAP_TOL, FIT_GRAD_TOL), (1e-6, 1e-6));
    assert_eq!((GRAD_REL_TOL, BP_TREE_TOL, ORTHANT_TOL), (1e-5, 1e-9, 1e-6));
    assert_eq!((SCALING_BAND, RATIO_RANGE, LEVEL_RANGE), (0.35, (0.40, 0.60), (0.08, 0.25)));
    assert_eq!((REVERSAL_P, ACCEL_P), (0.01, 0.05));
    assert_eq!((CONV_ROUNDS, CONV_DROP, LINEAR_SLACK), (50, 10.0, 2.0));
    assert_eq!((LMSR_SLACK, FEE_TOL, REDUCTION_TOL), (1e-9, 1e-12, 1e-9));
}
