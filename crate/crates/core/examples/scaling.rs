//! Per-market loss as the number of base events grows.

use parlay_core::harness::{run_scaling_with, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ExperimentConfig {
        runs: 20,
        rounds: 1000,
        ..Default::default()
    };
    let s = run_scaling_with(&cfg)?;
    println!("{:>3} {:>8} {:>12} {:>8} {:>10}", "m", "markets", "loss/market", "ratio", "loss*2^m");
    for r in &s.rows {
        let ratio = r.ratio.map_or("-".to_string(), |x| format!("{x:.3}"));
        println!("{:>3} {:>8} {:>12.3e} {:>8} {:>10.4}", r.m, r.n_markets, r.mean_loss, ratio, r.loss_x_2m);
    }
    Ok(())
}
