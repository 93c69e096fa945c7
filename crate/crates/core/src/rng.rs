//! Seeded, independent random streams.
//!
//! Every consumer of randomness draws from its own ChaCha stream, keyed by the run
//! seed and a [`StreamId`]. Draws on one stream never shift another stream's
//! sequence, so results do not depend on how events interleave.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Label of an independent random stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StreamId {
    TokenDistribution,
    StrategyAssignment,
    Topology,
    LinkDelays,
    /// Block-generation (traffic) process of one account.
    Traffic(u32),
    /// Randomized bidding decisions of one account.
    Bidding(u32),
    /// Tip selection at one node.
    TipSelection(u32),
    /// Free-form stream for tests and analysis tools.
    Custom(u32),
}

impl StreamId {
    fn code(self) -> u64 {
        let (tag, idx) = match self {
            StreamId::TokenDistribution => (1, 0),
            StreamId::StrategyAssignment => (2, 0),
            StreamId::Topology => (3, 0),
            StreamId::LinkDelays => (4, 0),
            StreamId::Traffic(i) => (5, i),
            StreamId::Bidding(i) => (6, i),
            StreamId::TipSelection(i) => (7, i),
            StreamId::Custom(i) => (8, i),
        };
        (tag << 32) | u64::from(idx)
    }
}

/// Opens the stream `id` of the run seeded with `seed`.
pub fn stream(seed: u64, id: StreamId) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id.code());
    rng
}
