//! Deterministic artificial-life simulator: energy-constrained agents driven
//! by evolving neural networks share a toroidal world with programmable
//! robots.

pub mod action;
pub mod agents;
pub mod config;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod neural;
pub mod rng;
pub mod robot_vm;
pub mod scenarios;
pub mod tally;
pub mod terrain;

pub use action::ActionVector;
pub use config::SimConfig;
pub use rng::{split_rng, RngState, Stream, StreamRng};
pub use tally::EnergyTally;
pub use terrain::{TerrainCell, TerrainGrid};
pub use engine::{StepLedger, WorldState};
