//! Priority-score scheduling buffer.
//!
//! Blocks wait in a bounded buffer ordered by priority score (credits consumed per
//! work unit), then by arrival time, then by block id. Every service period the
//! scheduler releases the highest-ranked blocks whose cumulative work fits the
//! per-period budget. A full buffer admits a newcomer only by evicting the
//! lowest-ranked entry, and entries that wait longer than `max_age` expire.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units::{Credits, SimDuration, SimTime};

pub type BlockId = u64;

#[derive(Debug, Error, PartialEq)]
pub enum SchedulerError {
    #[error("block work must be positive, got {0}")]
    NonPositiveWork(f64),
    #[error("consumed credits must be nonnegative, got {0}")]
    NegativeCredits(Credits),
}

/// `S_B = c_B / w_B`.
pub fn priority_score(credits: f64, work: f64) -> Result<f64, SchedulerError> {
    if !(work > 0.0) {
        return Err(SchedulerError::NonPositiveWork(work));
    }
    Ok(credits / work)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BufferEntry {
    pub block_id: BlockId,
    pub score: f64,
    pub arrival: SimTime,
    pub work: f64,
    pub credits: Credits,
}

impl BufferEntry {
    pub fn new(block_id: BlockId, credits: Credits, work: f64, arrival: SimTime) -> Result<Self, SchedulerError> {
        if credits.is_negative() {
            return Err(SchedulerError::NegativeCredits(credits));
        }
        Ok(BufferEntry {
            block_id,
            score: priority_score(credits.as_f64(), work)?,
            arrival,
            work,
            credits,
        })
    }

    pub fn rank(&self) -> Rank {
        Rank {
            score: self.score,
            arrival: self.arrival,
            block_id: self.block_id,
        }
    }
}

/// Total order on buffer entries. Greater means scheduled sooner: higher score,
/// then earlier arrival, then smaller block id.
#[derive(Clone, Copy, Debug)]
pub struct Rank {
    pub score: f64,
    pub arrival: SimTime,
    pub block_id: BlockId,
}

impl Ord for Rank {
    fn cmp(&self, other: &Self) -> Ordering {
        self.score
            .total_cmp(&other.score)
            .then_with(|| other.arrival.cmp(&self.arrival))
            .then_with(|| other.block_id.cmp(&self.block_id))
    }
}

impl PartialOrd for Rank {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Rank {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Rank {}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchedulerParams {
    /// Service period in seconds.
    pub tau: f64,
    /// Work units released per service period.
    pub m: f64,
    /// Buffer capacity in blocks.
    pub capacity: usize,
    /// Maximum time a block may wait in the buffer, seconds.
    pub max_age: f64,
}

impl SchedulerParams {
    /// Enforced throughput, work units per second.
    pub fn throughput(&self) -> f64 {
        self.m / self.tau
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnqueueOutcome {
    Accepted,
    /// Accepted after evicting the lowest-ranked entry, whose id is carried here.
    AcceptedReplacing(BlockId),
    Rejected,
    /// The block is already buffered; nothing changed.
    Duplicate,
}

#[derive(Clone, Debug)]
pub struct SchedulerBuffer {
    capacity: usize,
    max_age: SimDuration,
    by_rank: BTreeMap<Rank, BufferEntry>,
    by_arrival: BTreeSet<(SimTime, BlockId)>,
    by_credits: BTreeSet<(Credits, BlockId)>,
    ranks: HashMap<BlockId, Rank>,
}

impl SchedulerBuffer {
    pub fn new(capacity: usize, max_age: SimDuration) -> Self {
        SchedulerBuffer {
            capacity,
            max_age,
            by_rank: BTreeMap::new(),
            by_arrival: BTreeSet::new(),
            by_credits: BTreeSet::new(),
            ranks: HashMap::new(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn max_age(&self) -> SimDuration {
        self.max_age
    }

    pub fn len(&self) -> usize {
        self.by_rank.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_rank.is_empty()
    }

    pub fn contains(&self, id: BlockId) -> bool {
        self.ranks.contains_key(&id)
    }

    pub fn get(&self, id: BlockId) -> Option<&BufferEntry> {
        self.ranks.get(&id).and_then(|r| self.by_rank.get(r))
    }

    /// The lowest-ranked entry, i.e. the next eviction victim.
    pub fn min_entry(&self) -> Option<&BufferEntry> {
        self.by_rank.values().next()
    }

    /// Entries from highest to lowest rank.
    pub fn iter(&self) -> impl Iterator<Item = &BufferEntry> {
        self.by_rank.values().rev()
    }

    pub fn enqueue(&mut self, entry: BufferEntry) -> EnqueueOutcome {
        if self.ranks.contains_key(&entry.block_id) {
            return EnqueueOutcome::Duplicate;
        }
        if self.len() < self.capacity {
            self.insert(entry);
            return EnqueueOutcome::Accepted;
        }
        let min_rank = match self.by_rank.keys().next() {
            Some(r) => *r,
            None => return EnqueueOutcome::Rejected, // zero capacity
        };
        if entry.rank() > min_rank {
            let victim = self.remove(min_rank.block_id).expect("minimum is buffered");
            self.insert(entry);
            EnqueueOutcome::AcceptedReplacing(victim.block_id)
        } else {
            EnqueueOutcome::Rejected
        }
    }

    /// Removes every entry that has waited strictly longer than `max_age`.
    /// Returned oldest first.
    pub fn expire_stale(&mut self, now: SimTime) -> Vec<BufferEntry> {
        let mut dropped = Vec::new();
        while let Some(&(arrival, id)) = self.by_arrival.iter().next() {
            if now.since(arrival) > self.max_age {
                dropped.push(self.remove(id).expect("indexed entry exists"));
            } else {
                break;
            }
        }
        dropped
    }

    /// Takes entries in rank order while their cumulative work stays within `m`.
    /// Stops at the first entry that does not fit.
    pub fn next_batch(&mut self, m: f64) -> Vec<BufferEntry> {
        let mut batch = Vec::new();
        let mut used = 0.0;
        while let Some((&rank, entry)) = self.by_rank.iter().next_back() {
            if used + entry.work > m {
                break;
            }
            used += entry.work;
            batch.push(self.remove(rank.block_id).expect("ranked entry exists"));
        }
        batch
    }

    /// The `k` largest credit amounts currently buffered, in descending order.
    pub fn congestion_view(&self, k: usize) -> Vec<Credits> {
        self.by_credits.iter().rev().take(k).map(|(c, _)| *c).collect()
    }

    pub fn remove(&mut self, id: BlockId) -> Option<BufferEntry> {
        let rank = self.ranks.remove(&id)?;
        let entry = self.by_rank.remove(&rank)?;
        self.by_arrival.remove(&(entry.arrival, id));
        self.by_credits.remove(&(entry.credits, id));
        Some(entry)
    }

    fn insert(&mut self, entry: BufferEntry) {
        let rank = entry.rank();
        self.ranks.insert(entry.block_id, rank);
        self.by_arrival.insert((entry.arrival, entry.block_id));
        self.by_credits.insert((entry.credits, entry.block_id));
        self.by_rank.insert(rank, entry);
    }
}
