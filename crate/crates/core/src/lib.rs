//! Discrete-event simulator of credit-based write access to a leaderless DAG ledger.
//!
//! Accounts earn Access Credit from their token holdings and spend it to bid for
//! scheduler priority. Nodes score, buffer, schedule, drop and gossip blocks, and
//! in multi-node runs keep a DAG replica with cumulative-weight confirmation.

pub mod config;
pub mod dag;
pub mod engine;
pub mod metrics;
pub mod network;
pub mod report;
pub mod rng;
pub mod scheduler;
pub mod simulation;
pub mod strategies;
pub mod tokenomics;
pub mod units;

pub use config::{load_config, preset, ScenarioConfig};
pub use simulation::{Simulation, SimError};
pub use units::{Credits, SimDuration, SimTime};
