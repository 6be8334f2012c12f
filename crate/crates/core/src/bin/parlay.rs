use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use parlay_core::error::HarnessError;
use parlay_core::harness::{
    convergence_csv, emit_csv, noise_csv, run_ablation, run_convergence, run_noise_sweep, run_scaling_with,
    ExperimentConfig,
};
use parlay_core::ising::{
    fit_to_moments_with, hessian_composite, moments_exact, uniform_weights, FitMethod, IsingParams, MomentVector,
    FIT_MAX_ITER,
};
use parlay_core::potts::{potts_csv, run_potts, PottsConfig};
use parlay_core::replay::{read_stream, replay, synthetic_stream, ReplayConfig, ReplayMode, SyntheticConfig, TradeTruth};

#[derive(Parser)]
#[command(name = "parlay", about = "Simulation and replay driver for the shared-belief parlay market maker")]
struct Cli {
    /// Experiment config (JSON); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for CSV output.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true)]
    runs: Option<usize>,
    #[arg(long, global = true)]
    rounds: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Per-market loss across m (scaling.csv).
    Scaling,
    /// Complete vs base-only flow for every model (ablation.csv).
    Ablation,
    /// Loss against the noise-trader share (noise.csv).
    Noise,
    /// Price and parameter error by round (convergence.csv).
    Converge,
    /// Multinomial markets (potts.csv).
    Potts {
        /// Potts config (JSON); overrides the experiment config.
        #[arg(long)]
        potts_config: Option<PathBuf>,
        /// Category counts, e.g. 2,3,4,4,5.
        #[arg(long, value_delimiter = ',')]
        k: Option<Vec<usize>>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        jump_rate: Option<f64>,
    },
    /// Replay a JSONL stream, or a synthetic one when no input is given.
    Replay {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value = "full_market")]
        mode: ReplayMode,
        #[arg(long, default_value_t = 0.1)]
        eta_theta: f64,
        #[arg(long, default_value_t = 0.01)]
        eta_w: f64,
        #[arg(long, default_value_t = 10_000.0)]
        b: f64,
        /// Fee added to every all-YES price of the synthetic stream.
        #[arg(long, default_value_t = 0.02)]
        fee_epsilon: f64,
        /// Markets in the synthetic stream.
        #[arg(long, default_value_t = 6)]
        markets: usize,
    },
    /// Composite Hessian at zero with uniform weights.
    CheckHessian {
        #[arg(long, default_value_t = 4)]
        m: usize,
    },
    /// I-projection of moment targets (JSON file, or random interior ones).
    FitMoments {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        m: usize,
    },
}

fn experiment(cli: &Cli) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(r) = cli.runs {
        cfg.runs = r;
    }
    if let Some(r) = cli.rounds {
        cfg.rounds = r;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write(out: &Path, name: &str, table: &parlay_core::harness::CsvTable) -> Result<(), HarnessError> {
    let path = out.join(name);
    emit_csv(table, &path)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match &cli.cmd {
        Cmd::Scaling => {
            let cfg = experiment(&cli)?;
            let s = run_scaling_with(&cfg)?;
            for r in &s.rows {
                println!("m={} mean_loss={:.6e} loss_x_2m={:.4}", r.m, r.mean_loss, r.loss_x_2m);
            }
            write(&cli.out, "scaling.csv", &s.to_csv())
        }
        Cmd::Ablation => {
            let cfg = experiment(&cli)?;
            let r = run_ablation(&cfg)?;
            for s in &r.models {
                println!(
                    "{:22} with_parlays={:.6e} base_only={:.6e}",
                    s.model.name(),
                    s.mean_with_parlays(),
                    s.mean_base_only()
                );
            }
            write(&cli.out, "ablation.csv", &r.to_csv())
        }
        Cmd::Noise => {
            let cfg = experiment(&cli)?;
            let rows = run_noise_sweep(&cfg, &cfg.alphas)?;
            write(&cli.out, "noise.csv", &noise_csv(&rows))
        }
        Cmd::Converge => {
            let cfg = experiment(&cli)?;
            let rows = run_convergence(&cfg)?;
            if let (Some(first), Some(last)) = (rows.first(), rows.last()) {
                println!("param_err {:.4e} -> {:.4e}", first.param_err, last.param_err);
            }
            write(&cli.out, "convergence.csv", &convergence_csv(&rows))
        }
        Cmd::Potts {
            potts_config,
            k,
            steps,
            jump_rate,
        } => {
            let mut cfg = match potts_config {
                Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
                None => PottsConfig::default(),
            };
            if let Some(k) = k {
                cfg.k = k.clone();
            }
            if let Some(s) = steps {
                cfg.steps = *s;
            }
            if let Some(j) = jump_rate {
                cfg.jump_rate = *j;
            }
            if let Some(r) = cli.runs {
                cfg.runs = r;
            }
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            let rows = run_potts(&cfg)?;
            for (m, s) in &rows {
                println!(
                    "{:12} mean={:.4} median={:.4} var95={:.4} cvar95={:.4}",
                    m.name(),
                    s.mean,
                    s.median,
                    s.var95,
                    s.cvar95
                );
            }
            write(&cli.out, "potts.csv", &potts_csv(&rows))
        }
        Cmd::Replay {
            input,
            mode,
            eta_theta,
            eta_w,
            b,
            fee_epsilon,
            markets,
        } => {
            let (events, truth): (_, Option<TradeTruth>) = match input {
                Some(p) => (read_stream(std::io::BufReader::new(std::fs::File::open(p)?))?, None),
                None => {
                    let s = synthetic_stream(&SyntheticConfig {
                        m: *markets,
                        fee_epsilon: *fee_epsilon,
                        seed: cli.seed.unwrap_or(7),
                        ..Default::default()
                    })?;
                    (s.events, Some(s.truth))
                }
            };
            let cfg = ReplayConfig {
                mode: *mode,
                eta_theta: *eta_theta,
                eta_w: *eta_w,
                b: *b,
                ..Default::default()
            };
            let r = replay(&events, &cfg, truth.as_ref())?;
            println!(
                "candles={} trades={} accepted={} rejected={} revenue={:.4} sharpe={:?}",
                r.candles, r.trades, r.accepted, r.rejected, r.revenue, r.sharpe
            );
            write(&cli.out, "replay.csv", &r.to_csv())?;
            write(&cli.out, "replay_ledger.csv", &r.ledger_csv())
        }
        Cmd::CheckHessian { m } => {
            let zero = IsingParams::zeros(*m);
            let targets = moments_exact(&zero)?;
            let h = hessian_composite(&zero, &uniform_weights(*m), &targets)?;
            let eig = h.clone().symmetric_eigen().eigenvalues;
            let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
            println!("diag fields: {:?}", (0..*m).map(|i| h[(i, i)]).collect::<Vec<_>>());
            println!(
                "diag couplings: {:?}",
                (*m..h.nrows()).map(|i| h[(i, i)]).collect::<Vec<_>>()
            );
            println!("eigenvalues in [{lo:.6}, {hi:.6}], condition number {:.6}", hi / lo);
            Ok(())
        }
        Cmd::FitMoments { input, m } => {
            let target: MomentVector = match input {
                Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
                None => {
                    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed.unwrap_or(1));
                    let d = m * (m + 1) / 2;
                    let flat: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                    moments_exact(&IsingParams::from_flat(*m, &flat)?)?
                }
            };
            target.validate_interior()?;
            let rep = fit_to_moments_with(&target, 1e-10, FIT_MAX_ITER, FitMethod::Newton)?;
            println!("iterations={} max_gap={:.3e}", rep.iterations, rep.max_gap);
            println!("{}", serde_json::to_string_pretty(&rep.params)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
