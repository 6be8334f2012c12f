//! Multi-outcome markets on a Potts belief state, against isolated K-state
//! books and the true oracle.

use parlay_core::potts::{run_potts, CategoricalParlay, PottsConfig, PottsEngine};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut engine = PottsEngine::new(&[2, 3, 4], 10.0, 0.2, 0.2)?;
    let parlay = CategoricalParlay::new(vec![(1, 0), (2, 3)])?;
    println!("uniform: P(x1=0, x2=3) = {:.4}", engine.quote_parlay(&parlay)?);
    for _ in 0..30 {
        engine.trade_base(1, &[0.6, 0.3, 0.1])?;
        engine.trade_parlay(&parlay, 0.3)?;
    }
    println!("after trading: market 1 {:.3?}, parlay {:.4}", engine.quote_base(1), engine.quote_parlay(&parlay)?);

    let cfg = PottsConfig {
        runs: 20,
        ..Default::default()
    };
    for (model, s) in run_potts(&cfg)? {
        println!("{:12} mean {:.4} median {:.4} var95 {:.4} cvar95 {:.4}", model.name(), s.mean, s.median, s.var95, s.cvar95);
    }
    Ok(())
}
