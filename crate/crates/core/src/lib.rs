//! Coherent automated market making for base events and their parlays.
//!
//! A single pairwise binary exponential family (Ising model) holds the
//! market maker's beliefs. Every contract, whether a base event or a
//! conjunction of events, is priced as an expectation under that one
//! distribution, so the posted quotes are always the marginals of a joint
//! law and can never be arbitraged against each other.

pub mod baselines;
pub mod bp;
pub mod coherence;
pub mod engine;
pub mod error;
pub mod harness;
pub mod ising;
pub mod lmsr;
pub mod numeric;
pub mod orthant;
pub mod potts;
pub mod replay;
pub mod world;

pub use error::IsingError;
pub use engine::{Family, MarketId, ParlayEngine, TradeRecord};
pub use ising::{IsingParams, Mask, MomentVector, SufficientStats};
