//! Market-maker loss as the share of noise traders rises.

use parlay_core::harness::{run_noise_sweep, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ExperimentConfig {
        m_values: vec![4],
        runs: 20,
        rounds: 500,
        ..Default::default()
    };
    for row in run_noise_sweep(&cfg, &[0.0, 0.25, 0.5, 0.75, 1.0])? {
        println!("alpha {:.2}: mean loss {:.4e}, cvar95 {:.4e}", row.alpha, row.mean_loss, row.cvar95);
    }
    Ok(())
}
