//! Price error against the true joint and parameter error against its
//! moment-matched Ising fit, round by round.

use parlay_core::harness::{run_convergence, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ExperimentConfig {
        m_values: vec![4],
        runs: 20,
        rounds: 1000,
        ..Default::default()
    };
    let rows = run_convergence(&cfg)?;
    for r in rows.iter().filter(|r| r.round % 100 == 0) {
        println!("round {:5}: price MAE {:.4} (sd {:.4}), param err {:.4}", r.round, r.price_mae, r.price_mae_std, r.param_err);
    }
    Ok(())
}
