//! Markov Brains with feedback gates, evolved to navigate randomized mazes
//! under scrambled action mappings.

pub mod analysis;
pub mod brain;
pub mod config;
pub mod environment;
pub mod evolution;
pub mod gates;
pub mod genome;
pub mod rng;
pub mod rundir;
