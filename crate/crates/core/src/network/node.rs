use std::collections::{HashMap, HashSet};

use crate::dag::{AttachOutcome, ConfirmationState, DagBlock, DagView};
use crate::metrics::{MetricRecord, MetricsLog, RecordKind};
use crate::scheduler::{BlockId, BufferEntry, EnqueueOutcome, SchedulerBuffer};
use crate::units::{SimDuration, SimTime};

use super::topology::Topology;

/// Every block ever issued in the run, indexed by id. Id 0 is the genesis block.
#[derive(Clone, Debug)]
pub struct BlockStore {
    blocks: Vec<DagBlock>,
}

impl Default for BlockStore {
    fn default() -> Self {
        Self::new()
    }
}

impl BlockStore {
    pub fn new() -> Self {
        BlockStore {
            blocks: vec![DagBlock::genesis()],
        }
    }

    pub fn next_id(&self) -> BlockId {
        self.blocks.len() as BlockId
    }

    pub fn push(&mut self, block: DagBlock) -> BlockId {
        assert_eq!(block.id, self.next_id(), "block ids are dense");
        self.blocks.push(block);
        self.next_id() - 1
    }

    pub fn get(&self, id: BlockId) -> &DagBlock {
        &self.blocks[id as usize]
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &DagBlock> {
        self.blocks.iter()
    }
}

/// Local ledger replica of a node.
#[derive(Clone, Debug)]
pub struct Replica {
    pub view: DagView,
    pub confirmations: ConfirmationState,
}

/// What an arrival did to the node's buffer.
#[derive(Clone, Debug, PartialEq)]
pub struct ArrivalOutcome {
    pub enqueue: EnqueueOutcome,
    /// Blocks that left the buffer unscheduled: expired, evicted, or the newcomer
    /// itself when rejected.
    pub dropped: Vec<BlockId>,
}

/// Side effects of new blocks landing in a node's replica.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LedgerEffects {
    pub attached: Vec<BlockId>,
    pub locally_confirmed: Vec<BlockId>,
    /// `(responder, block)` solidification requests to send.
    pub requests: Vec<(usize, BlockId)>,
    /// `(requester, block)` solidification replies that can now be served.
    pub replies: Vec<(usize, BlockId)>,
}

#[derive(Clone, Debug)]
pub struct NodeState {
    pub id: usize,
    pub buffer: SchedulerBuffer,
    pub replica: Option<Replica>,
    seen: HashSet<BlockId>,
    received_from: HashMap<BlockId, usize>,
    requested: HashSet<BlockId>,
    waiting_requests: HashMap<BlockId, Vec<usize>>,
    max_occupancy: usize,
}

impl NodeState {
    pub fn new(id: usize, buffer: SchedulerBuffer, replica: Option<Replica>) -> Self {
        NodeState {
            id,
            buffer,
            replica,
            seen: HashSet::new(),
            received_from: HashMap::new(),
            requested: HashSet::new(),
            waiting_requests: HashMap::new(),
            max_occupancy: 0,
        }
    }

    pub fn has_seen(&self, id: BlockId) -> bool {
        self.seen.contains(&id)
    }

    /// Largest buffer occupancy observed after any enqueue.
    pub fn max_occupancy(&self) -> usize {
        self.max_occupancy
    }

    pub fn view(&self) -> Option<&DagView> {
        self.replica.as_ref().map(|r| &r.view)
    }

    /// A block reaches the node, either from a neighbor (`from`) or from a locally
    /// colocated issuer. Blocks already seen are ignored and `None` is returned.
    pub fn on_arrival(
        &mut self,
        block: &DagBlock,
        from: Option<usize>,
        now: SimTime,
        log: &mut MetricsLog,
        store: &BlockStore,
    ) -> Option<ArrivalOutcome> {
        if !self.seen.insert(block.id) {
            return None;
        }
        if let Some(f) = from {
            self.received_from.insert(block.id, f);
        }
        let mut dropped = self.expire(now, log, store);
        // Invalid blocks (non-positive work, negative credit) are discarded unscored.
        let Ok(entry) = BufferEntry::new(block.id, block.credits, block.work, now) else {
            dropped.push(block.id);
            return Some(ArrivalOutcome {
                enqueue: EnqueueOutcome::Rejected,
                dropped,
            });
        };
        let outcome = self.buffer.enqueue(entry);
        let rec = |kind, b: &DagBlock| MetricRecord {
            time: now,
            kind,
            block_id: b.id,
            node_id: self.id as u32,
            account_id: b.issuer,
            credits: Some(b.credits),
            sojourn: None,
        };
        match outcome {
            EnqueueOutcome::Accepted => log.record(rec(RecordKind::Enqueued, block)),
            EnqueueOutcome::AcceptedReplacing(victim) => {
                log.record(rec(RecordKind::Enqueued, block));
                log.record(rec(RecordKind::DroppedFull, store.get(victim)));
                dropped.push(victim);
            }
            EnqueueOutcome::Rejected => {
                log.record(rec(RecordKind::DroppedRejected, block));
                dropped.push(block.id);
            }
            EnqueueOutcome::Duplicate => {}
        }
        self.max_occupancy = self.max_occupancy.max(self.buffer.len());
        Some(ArrivalOutcome { enqueue: outcome, dropped })
    }

    /// Removes stale buffer entries, logging each drop.
    pub fn expire(&mut self, now: SimTime, log: &mut MetricsLog, store: &BlockStore) -> Vec<BlockId> {
        self.buffer
            .expire_stale(now)
            .into_iter()
            .map(|e| {
                let b = store.get(e.block_id);
                log.record(MetricRecord {
                    time: now,
                    kind: RecordKind::DroppedStale,
                    block_id: e.block_id,
                    node_id: self.id as u32,
                    account_id: b.issuer,
                    credits: Some(e.credits),
                    sojourn: None,
                });
                e.block_id
            })
            .collect()
    }

    /// One service period: expire, then release the next batch.
    pub fn service(&mut self, now: SimTime, m: f64, log: &mut MetricsLog, store: &BlockStore) -> (Vec<BlockId>, Vec<BufferEntry>) {
        let expired = self.expire(now, log, store);
        let batch = self.buffer.next_batch(m);
        for e in &batch {
            log.record(MetricRecord {
                time: now,
                kind: RecordKind::Scheduled,
                block_id: e.block_id,
                node_id: self.id as u32,
                account_id: store.get(e.block_id).issuer,
                credits: Some(e.credits),
                sojourn: Some(now.since(e.arrival)),
            });
        }
        (expired, batch)
    }

    /// Forwarding targets for a just-scheduled block: every neighbor except the one
    /// it came from, each with its arrival time.
    pub fn forward_targets(&self, block: BlockId, topology: &Topology, now: SimTime) -> Vec<(usize, SimTime)> {
        let sender = self.received_from.get(&block).copied();
        topology
            .neighbors(self.id)
            .iter()
            .filter(|&&nb| Some(nb) != sender)
            .map(|&nb| (nb, now + topology.delay(self.id, nb).unwrap_or(SimDuration::ZERO)))
            .collect()
    }

    /// Adds a block to the local replica: called when the node schedules it, or
    /// when a solidification reply delivers it.
    pub fn book(
        &mut self,
        block: &DagBlock,
        source: Option<usize>,
        now: SimTime,
        log: &mut MetricsLog,
        store: &BlockStore,
    ) -> LedgerEffects {
        let mut fx = LedgerEffects::default();
        let Some(replica) = self.replica.as_mut() else {
            return fx;
        };
        self.seen.insert(block.id);
        if let Some(s) = source {
            self.received_from.entry(block.id).or_insert(s);
        }
        match replica.view.attach(block.clone()) {
            AttachOutcome::Attached(ids) => {
                for id in &ids {
                    self.requested.remove(id);
                    if let Some(requesters) = self.waiting_requests.remove(id) {
                        fx.replies.extend(requesters.into_iter().map(|r| (r, *id)));
                    }
                }
                fx.attached = ids;
            }
            AttachOutcome::Pending(missing) => {
                let responder = self
                    .received_from
                    .get(&block.id)
                    .copied()
                    .or(source);
                if let Some(responder) = responder {
                    for p in missing {
                        if self.requested.insert(p) {
                            fx.requests.push((responder, p));
                        }
                    }
                }
            }
            AttachOutcome::Duplicate => {}
        }
        fx.locally_confirmed = replica.confirmations.update(&mut replica.view);
        for &id in &fx.locally_confirmed {
            let b = store.get(id);
            log.record(MetricRecord {
                time: now,
                kind: RecordKind::LocallyConfirmed,
                block_id: id,
                node_id: self.id as u32,
                account_id: b.issuer,
                credits: Some(b.credits),
                sojourn: None,
            });
        }
        fx
    }

    /// A neighbor asks for a block it is missing. Returns true if it can be served
    /// now; otherwise the request is held until the block attaches here.
    pub fn on_solid_request(&mut self, block: BlockId, requester: usize) -> bool {
        let have = self.replica.as_ref().is_some_and(|r| r.view.contains(block));
        if !have {
            self.waiting_requests.entry(block).or_default().push(requester);
        }
        have
    }
}
