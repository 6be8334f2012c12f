//! Categorical markets: a Potts belief state shared by `K`-outcome base
//! books and categorical parlays, against a thresholded Gaussian world.

mod engine;
mod infer;
mod params;
mod sim;
mod world;

pub use engine::{IndependentCategorical, PottsEngine};
pub use infer::{
    potts_marginals, run_potts_bp, BpPotts, CategoricalParlay, ExactPotts, PottsBeliefs, PottsBpRun,
    PottsMarginals, POTTS_EXACT_STATES, POTTS_JOINT_CAP,
};
pub use params::{potts_dim, PottsParams};
pub use sim::{
    parlay_universe, potts_csv, run_potts, simulate_binary_reference, simulate_potts, CategoricalArrival, PottsConfig,
    PottsModel, PottsSummary,
};
pub use world::{threshold_init, CategoricalWorld};
