//! Quote base events and parlays from one shared belief state, trade a few
//! of them, and audit the resulting quotes.

use parlay_core::engine::{Family, MarketId, ParlayEngine};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut engine = ParlayEngine::new(4, 10.0, 0.2, 0.2)?;
    let ab = MarketId::from_legs(&[0, 1]).unwrap();
    let abc = MarketId::from_legs(&[0, 1, 2]).unwrap();

    println!("fresh: P(A) = {:.4}, P(AB) = {:.4}, P(ABC) = {:.4}", engine.quote(MarketId::single(0))?, engine.quote(ab)?, engine.quote(abc)?);

    // Traders who know A and B move together.
    for k in 0..20 {
        engine.process_trade(MarketId::single(0), 0.6)?;
        engine.process_trade(MarketId::single(1), 0.6)?;
        let rec = engine.process_trade(ab, 0.5)?;
        if k % 5 == 0 {
            println!("round {:3}: AB posted {:.4} -> trader target {:.2}, loss {:.5}", rec.round, rec.posted_pre, rec.trader_target, rec.kl_loss);
        }
    }
    println!("after: P(A) = {:.4}, P(AB) = {:.4}, P(ABC) = {:.4}", engine.quote(MarketId::single(0))?, engine.quote(ab)?, engine.quote(abc)?);
    println!("coupling W_01 = {:.4}", engine.params.w(0, 1));

    let family = Family::Complete.markets(4);
    let violations = engine.coherence_report(&family)?;
    println!("{} markets quoted, {} coherence violations", family.len(), violations.len());
    Ok(())
}
