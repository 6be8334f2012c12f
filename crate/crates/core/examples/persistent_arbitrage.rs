//! A product-of-legs pricer on two events that always resolve together:
//! the parlay stays mispriced forever and the trader's edge grows linearly.

use parlay_core::baselines::persistent_arbitrage;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = 0.6;
    let edges = persistent_arbitrage(p, 500, 10.0)?;
    for n in [1, 10, 100, 500] {
        println!("after {n:3} trades: cumulative edge {:.3} ({:.3} per trade)", edges[n - 1], edges[n - 1] / n as f64);
    }
    println!("p - p^2 = {:.3}", p - p * p);
    Ok(())
}
