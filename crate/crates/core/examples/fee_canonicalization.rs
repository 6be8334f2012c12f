//! A mixed YES/NO combo priced with a uniform fee on every all-YES quote
//! rewrites to the fee-free probability.

use parlay_core::ising::JointTable;
use parlay_core::replay::{canonicalize, ComboTrade, MarketIndex, Side};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Three events with a hand-written joint law.
    let probs = vec![0.20, 0.05, 0.10, 0.15, 0.05, 0.10, 0.15, 0.20];
    let table = JointTable::new(3, probs)?;
    let index = MarketIndex::new(["a".to_string(), "b".into(), "c".into()])?;
    // a YES, b NO, c NO
    let (yes, no) = (0b001, 0b110);
    let truth: f64 = (0..8u32).filter(|x| x & yes == yes && x & no == 0).map(|x| table.probs[x as usize]).sum();
    for eps in [0.0, 0.01, 0.05] {
        let trade = ComboTrade {
            timestamp: 0,
            legs: vec![("a".into(), Side::Yes), ("b".into(), Side::No), ("c".into(), Side::No)],
            exec_price: table.event_prob(yes | no) + eps,
            size: 10.0,
        };
        let c = canonicalize(&trade, &index, |s| Some(table.event_prob(s) + eps))?;
        println!("fee {eps:.2}: {} terms, target {:.6} (true {truth:.6})", c.terms.len(), c.target_prob);
    }
    Ok(())
}
