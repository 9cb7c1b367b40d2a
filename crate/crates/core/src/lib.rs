//! Embodied agents that bootstrap a spatial vocabulary by describing ball
//! movements to each other.
//!
//! The crate is organised bottom-up:
//!
//! * [`arena`] generates the ground-truth scene and each agent's noisy view of it.
//! * [`perspective`] re-expresses an egocentric view from the interlocutor's position.
//! * [`features`] turns a view into twelve scaled feature channels.
//! * [`concepts`] grows per-channel discrimination trees and finds distinctive categories.
//! * [`lexicon`] maps meaning sets to invented words with scored associations.
//! * [`dialogue`] plays one language game between a speaker and a hearer.
//! * [`experiment`] runs populations over many games and writes metrics.

pub mod arena;
pub mod concepts;
pub mod dialogue;
pub mod experiment;
pub mod features;
pub mod lexicon;
pub mod perspective;
mod plot;

mod error;

pub use error::{Error, Result};

/// Random stream used everywhere in the simulator.
pub type SimRng = rand_chacha::ChaCha8Rng;

/// Seed a fresh simulator RNG stream.
pub fn seeded_rng(seed: u64) -> SimRng {
    use rand::SeedableRng;
    SimRng::seed_from_u64(seed)
}
