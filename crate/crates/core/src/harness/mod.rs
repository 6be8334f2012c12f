//! Experiment driver: seeded simulation runs of every pricer against the
//! Gaussian world, aggregated into the loss, convergence and noise tables.

mod config;
mod output;
mod sim;
mod stats;
mod suites;

pub use config::{ExperimentConfig, TradeModeConfig};
pub use output::{emit_csv, fmt_sig10, read_csv, CsvTable};
pub use sim::{misspecification_floor, simulate, RunSpec, RunTrace, Tracking};
pub use stats::{risk_metrics, sign_test_greater, RiskMetrics};
pub use suites::{
    convergence_csv, noise_csv, param_error_traces, run_ablation, run_convergence, run_noise_sweep,
    run_scaling, run_scaling_with, AblationReport, ConvergenceRow, MetricsRow, ModelSummary, NoiseRow,
    ScalingRun,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Rounds per run when a config does not say otherwise.
pub const DEFAULT_ROUNDS: usize = 2000;

/// What a random stream is used for; each gets its own ChaCha stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Arrivals = 1,
    World = 2,
    Replay = 3,
    Potts = 4,
    Fixture = 5,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Independent stream for `(run, purpose)` under one root seed. Streams
/// depend only on their own coordinates, so adding runs never perturbs
/// existing ones.
pub fn stream_rng(root_seed: u64, run: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(root_seed ^ splitmix64(run)));
    rng.set_stream(purpose as u64);
    rng
}
