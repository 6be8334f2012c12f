//! Complete-family versus base-only flow across every pricer, in a world
//! whose scores drift.

use parlay_core::baselines::ModelKind;
use parlay_core::harness::{run_ablation, ExperimentConfig};
use parlay_core::world::WorldMode;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ExperimentConfig {
        m_values: vec![5],
        runs: 20,
        rounds: 300,
        world_mode: WorldMode::Dynamic,
        ..Default::default()
    };
    let r = run_ablation(&cfg)?;
    println!("{:22} {:>12} {:>12}", "model", "with parlays", "base only");
    for s in &r.models {
        println!("{:22} {:>12.5} {:>12.5}", s.model.name(), s.mean_with_parlays(), s.mean_base_only());
    }
    let p = r.p_value(ModelKind::ParlayAmm, ModelKind::IndependentLmsr, true);
    println!("sign test, AMM beats independent books with parlays: p = {p:.2e}");
    Ok(())
}
