//! Per-node DAG replica.
//!
//! Blocks reference one or more parents. A block whose parents are not all known
//! is parked until they arrive (solidification). The cumulative weight of a block
//! is the number of distinct attached blocks that reference it directly or
//! indirectly; it is maintained incrementally by walking the past cone of every
//! newly attached block once.
//!
//! Every ancestor of a block outweighs it, so once a counter reaches a saturation
//! level its whole past cone has too. A view built with a saturation level stops
//! its walks at saturated blocks and counts their weight from the future cone on
//! demand instead, which keeps attachment cost proportional to the unsaturated
//! frontier.

use std::collections::{BTreeSet, HashMap, HashSet};

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scheduler::BlockId;
use crate::tokenomics::AccountId;
use crate::units::{Credits, SimDuration, SimTime};

pub const GENESIS_ID: BlockId = 0;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DagError {
    #[error("block {0} is not attached in this view")]
    UnknownBlock(BlockId),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DagBlock {
    pub id: BlockId,
    pub issuer: AccountId,
    pub parents: Vec<BlockId>,
    pub issued_at: SimTime,
    pub work: f64,
    pub credits: Credits,
}

impl DagBlock {
    pub fn genesis() -> Self {
        DagBlock {
            id: GENESIS_ID,
            issuer: 0,
            parents: Vec::new(),
            issued_at: SimTime::ZERO,
            work: 1.0,
            credits: Credits::ZERO,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AttachOutcome {
    /// The block and every pending descendant it unblocked, in attachment order.
    Attached(Vec<BlockId>),
    /// Parked; these parents are still unknown.
    Pending(Vec<BlockId>),
    Duplicate,
}

#[derive(Clone, Debug)]
struct Slot {
    block: DagBlock,
    parents: Vec<usize>,
    children: Vec<usize>,
    cw: u64,
}

#[derive(Clone, Debug)]
pub struct DagView {
    index: HashMap<BlockId, usize>,
    slots: Vec<Slot>,
    tips: BTreeSet<usize>,
    newest: usize,
    pending: HashMap<BlockId, DagBlock>,
    waiting_on: HashMap<BlockId, Vec<BlockId>>,
    visit_mark: Vec<u32>,
    epoch: u32,
    touched: Vec<usize>,
    touched_mark: Vec<bool>,
    saturation: u64,
}

impl Default for DagView {
    fn default() -> Self {
        Self::new()
    }
}

impl DagView {
    /// A view holding only the genesis block.
    pub fn new() -> Self {
        Self::with_saturation(u64::MAX)
    }

    /// A view whose incremental counters stop at `level` (at least 1).
    pub fn with_saturation(level: u64) -> Self {
        let mut view = DagView {
            index: HashMap::new(),
            slots: Vec::new(),
            tips: BTreeSet::new(),
            newest: 0,
            pending: HashMap::new(),
            waiting_on: HashMap::new(),
            visit_mark: Vec::new(),
            epoch: 0,
            touched: Vec::new(),
            touched_mark: Vec::new(),
            saturation: level.max(1),
        };
        view.insert_solid(DagBlock::genesis());
        view
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn contains(&self, id: BlockId) -> bool {
        self.index.contains_key(&id)
    }

    pub fn is_pending(&self, id: BlockId) -> bool {
        self.pending.contains_key(&id)
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    pub fn block(&self, id: BlockId) -> Option<&DagBlock> {
        self.index.get(&id).map(|&i| &self.slots[i].block)
    }

    /// Attached block ids in attachment order.
    pub fn ids(&self) -> impl Iterator<Item = BlockId> + '_ {
        self.slots.iter().map(|s| s.block.id)
    }

    pub fn tips(&self) -> Vec<BlockId> {
        self.tips.iter().map(|&i| self.slots[i].block.id).collect()
    }

    pub fn children(&self, id: BlockId) -> Option<Vec<BlockId>> {
        let &i = self.index.get(&id)?;
        Some(self.slots[i].children.iter().map(|&c| self.slots[c].block.id).collect())
    }

    pub fn cumulative_weight(&self, id: BlockId) -> Result<u64, DagError> {
        let &i = self.index.get(&id).ok_or(DagError::UnknownBlock(id))?;
        let cw = self.slots[i].cw;
        if cw < self.saturation {
            return Ok(cw);
        }
        let mut seen = vec![false; self.slots.len()];
        let mut stack = self.slots[i].children.clone();
        let mut count = 0;
        while let Some(c) = stack.pop() {
            if std::mem::replace(&mut seen[c], true) {
                continue;
            }
            count += 1;
            stack.extend(self.slots[c].children.iter().copied().filter(|&g| !seen[g]));
        }
        Ok(count)
    }

    /// Parents still missing for a pending block.
    pub fn missing_parents(&self, id: BlockId) -> Vec<BlockId> {
        match self.pending.get(&id) {
            Some(b) => b.parents.iter().copied().filter(|p| !self.contains(*p)).collect(),
            None => Vec::new(),
        }
    }

    pub fn attach(&mut self, block: DagBlock) -> AttachOutcome {
        if self.contains(block.id) || self.pending.contains_key(&block.id) {
            return AttachOutcome::Duplicate;
        }
        let missing: Vec<BlockId> = dedup(block.parents.iter().copied().filter(|p| !self.contains(*p)));
        if !missing.is_empty() {
            for &p in &missing {
                self.waiting_on.entry(p).or_default().push(block.id);
            }
            self.pending.insert(block.id, block);
            return AttachOutcome::Pending(missing);
        }

        let mut attached = Vec::new();
        let mut ready = vec![block];
        while let Some(b) = ready.pop() {
            let id = b.id;
            self.insert_solid(b);
            attached.push(id);
            if let Some(waiters) = self.waiting_on.remove(&id) {
                for w in waiters {
                    let solid = self
                        .pending
                        .get(&w)
                        .is_some_and(|pb| pb.parents.iter().all(|p| self.contains(*p)));
                    if solid {
                        ready.push(self.pending.remove(&w).expect("checked above"));
                    }
                }
            }
        }
        AttachOutcome::Attached(attached)
    }

    /// Picks up to `k` distinct parents uniformly among tips issued within
    /// `freshness` of `now` (and strictly before `now`). Falls back to the newest
    /// attached block when no tip qualifies.
    pub fn select_tips<R: Rng + ?Sized>(
        &self,
        k: usize,
        now: SimTime,
        freshness: SimDuration,
        rng: &mut R,
    ) -> Vec<BlockId> {
        let eligible: Vec<BlockId> = self
            .tips
            .iter()
            .map(|&i| &self.slots[i].block)
            .filter(|b| b.issued_at < now && now.since(b.issued_at) <= freshness)
            .map(|b| b.id)
            .collect();
        if eligible.is_empty() {
            return vec![self.newest_before(now)];
        }
        let mut picked: Vec<BlockId> = eligible.choose_multiple(rng, k.max(1)).copied().collect();
        picked.sort_unstable();
        picked
    }

    fn newest_before(&self, now: SimTime) -> BlockId {
        let newest = &self.slots[self.newest].block;
        if newest.issued_at < now || newest.id == GENESIS_ID {
            return newest.id;
        }
        self.slots
            .iter()
            .map(|s| &s.block)
            .filter(|b| b.issued_at < now)
            .max_by_key(|b| (b.issued_at, b.id))
            .map_or(GENESIS_ID, |b| b.id)
    }

    /// Hands out (and forgets) the blocks whose cumulative weight changed since the
    /// previous call.
    pub fn drain_touched(&mut self) -> Vec<BlockId> {
        let touched = std::mem::take(&mut self.touched);
        touched
            .into_iter()
            .map(|i| {
                self.touched_mark[i] = false;
                self.slots[i].block.id
            })
            .collect()
    }

    fn insert_solid(&mut self, block: DagBlock) {
        let idx = self.slots.len();
        let parents: Vec<usize> = dedup(block.parents.iter().map(|p| self.index[p]));
        for &p in &parents {
            self.slots[p].children.push(idx);
            self.tips.remove(&p);
        }
        self.index.insert(block.id, idx);
        let is_newer = self
            .slots
            .get(self.newest)
            .is_none_or(|n| (block.issued_at, block.id) > (n.block.issued_at, n.block.id));
        self.slots.push(Slot {
            block,
            parents,
            children: Vec::new(),
            cw: 0,
        });
        self.visit_mark.push(0);
        self.touched_mark.push(false);
        self.tips.insert(idx);
        if is_newer {
            self.newest = idx;
        }
        self.bump_past_cone(idx);
    }

    fn bump_past_cone(&mut self, from: usize) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.visit_mark.iter_mut().for_each(|m| *m = 0);
            self.epoch = 1;
        }
        let epoch = self.epoch;
        let mut stack: Vec<usize> = self.slots[from].parents.clone();
        while let Some(i) = stack.pop() {
            if self.visit_mark[i] == epoch {
                continue;
            }
            self.visit_mark[i] = epoch;
            if self.slots[i].cw >= self.saturation {
                continue;
            }
            self.slots[i].cw += 1;
            if !self.touched_mark[i] {
                self.touched_mark[i] = true;
                self.touched.push(i);
            }
            stack.extend(self.slots[i].parents.iter().copied().filter(|&p| self.visit_mark[p] != epoch));
        }
    }
}

fn dedup<T: Copy + Eq + std::hash::Hash>(items: impl Iterator<Item = T>) -> Vec<T> {
    let mut seen = HashSet::new();
    items.filter(|x| seen.insert(*x)).collect()
}

/// Local confirmation bookkeeping: a block is confirmed once its cumulative weight
/// reaches the threshold. The genesis block is confirmed from the start and never
/// reported.
#[derive(Clone, Debug)]
pub struct ConfirmationState {
    pub threshold: u64,
    confirmed: HashSet<BlockId>,
}

impl ConfirmationState {
    pub fn new(threshold: u64) -> Self {
        ConfirmationState {
            threshold,
            confirmed: HashSet::from([GENESIS_ID]),
        }
    }

    pub fn is_confirmed(&self, id: BlockId) -> bool {
        self.confirmed.contains(&id)
    }

    pub fn len(&self) -> usize {
        self.confirmed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.confirmed.is_empty()
    }

    /// Reports each block whose weight crossed the threshold since the last call,
    /// exactly once, in ascending id order.
    pub fn update(&mut self, view: &mut DagView) -> Vec<BlockId> {
        let mut fresh: Vec<BlockId> = view
            .drain_touched()
            .into_iter()
            .filter(|&id| view.cumulative_weight(id).is_ok_and(|cw| cw >= self.threshold))
            .filter(|&id| self.confirmed.insert(id))
            .collect();
        fresh.sort_unstable();
        fresh
    }
}
