//! Peer topology, link delays, block-generation traffic and per-node gossip state.

mod node;
mod topology;
mod traffic;

pub use node::{ArrivalOutcome, BlockStore, LedgerEffects, NodeState, Replica};
pub use topology::{random_k_regular, sample_delays, Topology, TopologyError, MAX_PAIRING_ATTEMPTS};
pub use traffic::{generate_traffic, token_weights, ArrivalProcess, TrafficPhase, TrafficProfile};
