//! Write a synthetic JSONL stream of candles and combo trades, read it
//! back, and replay it in both modes.

use std::fs::File;
use std::io::{BufReader, BufWriter};

use parlay_core::replay::{read_stream, replay, synthetic_stream, write_stream, ReplayConfig, ReplayMode, SyntheticConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = synthetic_stream(&SyntheticConfig::default())?;
    let path = std::env::temp_dir().join("parlay_replay_example.jsonl");
    write_stream(&s.events, BufWriter::new(File::create(&path)?))?;
    let events = read_stream(BufReader::new(File::open(&path)?))?;
    assert_eq!(events, s.events);
    println!("{} events round-tripped through {}", events.len(), path.display());

    for mode in [ReplayMode::FullMarket, ReplayMode::Standalone] {
        let cfg = ReplayConfig {
            mode,
            ..Default::default()
        };
        let r = replay(&events, &cfg, Some(&s.truth))?;
        println!(
            "{mode:?}: {} trades, {} filled, revenue {:.1}, mean |quote - truth| {:.4}, sharpe {:?}",
            r.trades,
            r.accepted,
            r.revenue,
            r.mean_err_all.unwrap_or(f64::NAN),
            r.sharpe
        );
    }
    std::fs::remove_file(path)?;
    Ok(())
}
