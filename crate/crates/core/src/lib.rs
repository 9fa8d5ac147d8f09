//! Multi-cell radio network simulator and reinforcement-learning harness
//! for energy-aware cell shutdown.
//!
//! The crate is organised bottom-up: [`topology`] and [`radio`] model the
//! network and link physics, [`env`] is the shutdown/handover state
//! machine, [`agents`] holds the PPO, SARSA and random policies,
//! [`oracle`] scores every legal shutdown exhaustively, and [`harness`]
//! owns configuration, CSV ingestion, checkpoints and metric export.

pub mod agents;
pub mod env;
pub mod error;
pub mod harness;
pub mod oracle;
pub mod radio;
pub mod rng;
pub mod topology;

pub use env::ScenarioState;
pub use error::{Error, Result};
