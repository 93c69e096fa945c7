//! Scenario assembly and the main event loop.

use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigErrors, Mode, ScenarioConfig};
use crate::dag::{ConfirmationState, DagBlock, DagView};
use crate::engine::EventQueue;
use crate::metrics::{MetricRecord, MetricsLog, NetworkObserver, RecordKind};
use crate::network::{
    random_k_regular, sample_delays, ArrivalProcess, BlockStore, LedgerEffects, NodeState, Replica, Topology,
    TopologyError, TrafficProfile,
};
use crate::rng::{stream, SimRng, StreamId};
use crate::scheduler::{BlockId, SchedulerBuffer};
use crate::strategies::BidDecision;
use crate::tokenomics::{sample_token_distribution, Account, CreditGenParams, TokenomicsError};
use crate::units::{Credits, SimDuration, SimTime};

const SAMPLE_PERIOD: SimDuration = SimDuration::from_micros(1_000_000);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Event {
    /// The account's traffic process produced a new payload for its mempool.
    BlockGenerated { account: u32 },
    /// Periodic retry for an account that abstained with payloads waiting.
    RetryIssue { account: u32 },
    SchedulerTick { node: u32 },
    BlockArrival { node: u32, from: u32, block: BlockId },
    /// `requester` asks `node` for a parent it is missing.
    SolidRequest { node: u32, requester: u32, block: BlockId },
    /// `from` delivers a requested block to `node`.
    SolidResponse { node: u32, from: u32, block: BlockId },
    TrafficPhaseChange { phase: u32 },
    MetricSample,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration:\n{0}")]
    Config(#[from] ConfigErrors),
    #[error(transparent)]
    Tokenomics(#[from] TokenomicsError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

/// Counters kept by the event loop itself.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RunStats {
    pub generated: u64,
    pub issued: u64,
    pub abstentions: u64,
    pub reimbursements: u64,
    /// Consumption attempts refused by the account ledger. Always zero unless a
    /// strategy bids above its balance.
    pub overdraw_attempts: u64,
    /// Decisions whose bid was negative or above the balance at decision time.
    pub bid_violations: u64,
}

pub struct Simulation {
    config: ScenarioConfig,
    credit: CreditGenParams,
    queue: EventQueue<Event>,
    accounts: Vec<Account>,
    node_of: Vec<usize>,
    nodes: Vec<NodeState>,
    topology: Topology,
    store: BlockStore,
    log: MetricsLog,
    observer: Option<NetworkObserver>,
    profile: TrafficProfile,
    arrivals: Vec<ArrivalProcess>,
    traffic_rngs: Vec<SimRng>,
    bid_rngs: Vec<SimRng>,
    tip_rngs: Vec<SimRng>,
    mempool: Vec<u64>,
    retry_pending: Vec<bool>,
    generated: Vec<(SimTime, u32)>,
    occupancy: Vec<(SimTime, Vec<usize>)>,
    phase: usize,
    stats: RunStats,
    tau: SimDuration,
    retry: SimDuration,
}

impl Simulation {
    pub fn new(config: &ScenarioConfig) -> Result<Self, SimError> {
        let issues = config.validate();
        if !issues.is_empty() {
            return Err(ConfigErrors(issues).into());
        }
        let seed = config.seed;
        let n = config.accounts.n;
        let tokens = sample_token_distribution(
            n,
            config.accounts.alpha,
            config.accounts.x_min,
            &mut stream(seed, StreamId::TokenDistribution),
        )?;
        let accounts: Vec<Account> = tokens
            .iter()
            .zip(config.strategy_assignment())
            .enumerate()
            .map(|(i, (&t, s))| Account::new(i as u32, t, s))
            .collect();

        let (topology, node_of) = match config.mode {
            Mode::SingleNode => (Topology::single(), vec![0; n]),
            Mode::MultiNode => {
                let net = config.network.as_ref().expect("validated");
                let mut topo = random_k_regular(net.n_nodes, net.k, &mut stream(seed, StreamId::Topology))?;
                sample_delays(&mut topo, net.delay_lo, net.delay_hi, &mut stream(seed, StreamId::LinkDelays))?;
                (topo, (0..n).collect())
            }
        };
        let n_nodes = topology.len();
        let max_age = SimDuration::from_secs(config.scheduler.max_age);
        let nodes = (0..n_nodes)
            .map(|i| {
                let replica = config.dag.as_ref().filter(|_| config.mode == Mode::MultiNode).map(|d| Replica {
                    view: DagView::with_saturation(d.cw_threshold),
                    confirmations: ConfirmationState::new(d.cw_threshold),
                });
                NodeState::new(i, SchedulerBuffer::new(config.scheduler.capacity, max_age), replica)
            })
            .collect();
        let observer = (config.mode == Mode::MultiNode).then(|| NetworkObserver::new(n_nodes));

        let scheduling_rate = config.scheduler.throughput() / config.block_work;
        let total: f64 = tokens.iter().sum();
        let arrivals = tokens.iter().map(|t| ArrivalProcess::new(scheduling_rate, t / total)).collect();

        let mut sim = Simulation {
            credit: config.credit.params(),
            queue: EventQueue::new(),
            node_of,
            nodes,
            topology,
            store: BlockStore::new(),
            log: MetricsLog::new(),
            observer,
            profile: config.traffic.profile(),
            arrivals,
            traffic_rngs: (0..n as u32).map(|i| stream(seed, StreamId::Traffic(i))).collect(),
            bid_rngs: (0..n as u32).map(|i| stream(seed, StreamId::Bidding(i))).collect(),
            tip_rngs: (0..n_nodes as u32).map(|i| stream(seed, StreamId::TipSelection(i))).collect(),
            mempool: vec![0; n],
            retry_pending: vec![false; n],
            generated: Vec::new(),
            occupancy: Vec::new(),
            phase: 0,
            stats: RunStats::default(),
            tau: SimDuration::from_secs(config.scheduler.tau),
            retry: SimDuration::from_secs(config.traffic.retry_interval),
            accounts,
            config: config.clone(),
        };
        sim.prime();
        Ok(sim)
    }

    fn prime(&mut self) {
        for a in 0..self.accounts.len() {
            self.schedule_generation(a, SimTime::ZERO);
        }
        for node in 0..self.nodes.len() as u32 {
            self.queue.schedule_in(self.tau, Event::SchedulerTick { node });
        }
        for (i, at) in self.profile.boundaries().into_iter().enumerate() {
            let phase = i as u32 + 1;
            self.queue
                .schedule(at, Event::TrafficPhaseChange { phase })
                .expect("boundaries lie ahead");
        }
        self.queue.schedule_in(SAMPLE_PERIOD, Event::MetricSample);
    }

    fn schedule_generation(&mut self, a: usize, after: SimTime) {
        if let Some(t) = self.arrivals[a].next_after(&self.profile, after, &mut self.traffic_rngs[a]) {
            self.queue
                .schedule(t, Event::BlockGenerated { account: a as u32 })
                .expect("arrivals lie ahead");
        }
    }

    /// Processes every event due at or before `end`, then sets the clock to `end`
    /// and brings every balance up to date.
    pub fn run_until(&mut self, end: SimTime) -> &MetricsLog {
        while let Some(next) = self.queue.pop_until(end) {
            self.handle(next.event);
        }
        self.queue.advance_to(end);
        let now = self.queue.now();
        for acct in &mut self.accounts {
            acct.accrue(now, &self.credit);
        }
        &self.log
    }

    /// Runs for the configured duration.
    pub fn run(&mut self) -> &MetricsLog {
        self.run_until(SimTime::from_secs(self.config.duration))
    }

    fn handle(&mut self, event: Event) {
        let now = self.queue.now();
        match event {
            Event::BlockGenerated { account } => {
                let a = account as usize;
                self.stats.generated += 1;
                self.generated.push((now, account));
                self.mempool[a] += 1;
                self.schedule_generation(a, now);
                self.try_issue(a);
            }
            Event::RetryIssue { account } => {
                self.retry_pending[account as usize] = false;
                self.try_issue(account as usize);
            }
            Event::SchedulerTick { node } => {
                self.tick(node as usize);
                self.queue.schedule_in(self.tau, Event::SchedulerTick { node });
            }
            Event::BlockArrival { node, from, block } => {
                self.deliver(node as usize, block, Some(from as usize));
            }
            Event::SolidRequest { node, requester, block } => {
                if self.nodes[node as usize].on_solid_request(block, requester as usize) {
                    self.send_solid_response(node as usize, requester as usize, block);
                }
            }
            Event::SolidResponse { node, from, block } => {
                let n = node as usize;
                let fx = self.nodes[n].book(self.store.get(block), Some(from as usize), now, &mut self.log, &self.store);
                self.apply_effects(n, fx);
            }
            Event::TrafficPhaseChange { phase } => {
                self.phase = phase as usize;
            }
            Event::MetricSample => {
                self.occupancy.push((now, self.nodes.iter().map(|n| n.buffer.len()).collect()));
                self.queue.schedule_in(SAMPLE_PERIOD, Event::MetricSample);
            }
        }
    }

    /// Issues as many mempool payloads as the account's strategy allows right now.
    fn try_issue(&mut self, a: usize) {
        let now = self.queue.now();
        let node = self.node_of[a];
        while self.mempool[a] > 0 {
            self.accounts[a].accrue(now, &self.credit);
            let strategy = self.accounts[a].strategy;
            let depth = strategy.view_depth();
            let view = if depth == 0 {
                Vec::new()
            } else {
                self.nodes[node].buffer.congestion_view(depth)
            };
            let balance = self.accounts[a].balance();
            match strategy.decide(balance, &view, &mut self.bid_rngs[a]) {
                BidDecision::Abstain => {
                    self.stats.abstentions += 1;
                    if !self.retry_pending[a] {
                        self.retry_pending[a] = true;
                        self.queue.schedule_in(self.retry, Event::RetryIssue { account: a as u32 });
                    }
                    return;
                }
                BidDecision::Issue(bid) => {
                    if bid.is_negative() || bid > balance {
                        self.stats.bid_violations += 1;
                    }
                    if self.accounts[a].consume(bid).is_err() {
                        self.stats.overdraw_attempts += 1;
                        return;
                    }
                    self.mempool[a] -= 1;
                    self.issue_block(a, bid);
                }
            }
        }
    }

    fn issue_block(&mut self, a: usize, bid: Credits) {
        let now = self.queue.now();
        let node = self.node_of[a];
        let parents = match (&self.nodes[node].replica, &self.config.dag) {
            (Some(replica), Some(dag)) => replica.view.select_tips(
                dag.parents_k,
                now,
                SimDuration::from_secs(dag.tip_freshness),
                &mut self.tip_rngs[node],
            ),
            _ => Vec::new(),
        };
        let id = self.store.push(DagBlock {
            id: self.store.next_id(),
            issuer: a as u32,
            parents,
            issued_at: now,
            work: self.config.block_work,
            credits: bid,
        });
        self.stats.issued += 1;
        self.log.record(MetricRecord {
            time: now,
            kind: RecordKind::Issued,
            block_id: id,
            node_id: node as u32,
            account_id: a as u32,
            credits: Some(bid),
            sojourn: None,
        });
        self.deliver(node, id, None);
    }

    fn deliver(&mut self, node: usize, id: BlockId, from: Option<usize>) {
        let now = self.queue.now();
        let outcome = self.nodes[node].on_arrival(self.store.get(id), from, now, &mut self.log, &self.store);
        if let Some(out) = outcome {
            for dropped in out.dropped {
                self.on_drop(node, dropped);
            }
        }
    }

    /// A block left `node`'s buffer unscheduled. Dropping it at its own issuer's
    /// node means it can never reach the network, so that is when a refund applies.
    fn on_drop(&mut self, node: usize, id: BlockId) {
        if !self.config.credit.reimburse_on_drop {
            return;
        }
        let block = self.store.get(id);
        let issuer = block.issuer as usize;
        if self.node_of[issuer] == node {
            let credits = block.credits;
            self.accounts[issuer]
                .reimburse(credits)
                .expect("bids are nonnegative");
            self.stats.reimbursements += 1;
        }
    }

    fn tick(&mut self, node: usize) {
        let now = self.queue.now();
        let (expired, batch) = self.nodes[node].service(now, self.config.scheduler.m, &mut self.log, &self.store);
        for id in expired {
            self.on_drop(node, id);
        }
        if self.nodes[node].replica.is_none() {
            return;
        }
        for entry in batch {
            let id = entry.block_id;
            let fx = self.nodes[node].book(self.store.get(id), None, now, &mut self.log, &self.store);
            self.apply_effects(node, fx);
            for (nb, at) in self.nodes[node].forward_targets(id, &self.topology, now) {
                let ev = Event::BlockArrival {
                    node: nb as u32,
                    from: node as u32,
                    block: id,
                };
                self.queue.schedule(at, ev).expect("link delays are nonnegative");
            }
        }
    }

    fn link_delay(&self, from: usize, to: usize) -> SimDuration {
        self.topology.delay(from, to).unwrap_or(SimDuration::ZERO)
    }

    fn send_solid_response(&mut self, from: usize, to: usize, block: BlockId) {
        let d = self.link_delay(from, to);
        let ev = Event::SolidResponse {
            node: to as u32,
            from: from as u32,
            block,
        };
        self.queue.schedule_in(d, ev);
    }

    fn apply_effects(&mut self, node: usize, fx: LedgerEffects) {
        let now = self.queue.now();
        if let Some(obs) = self.observer.as_mut() {
            for &id in &fx.attached {
                if obs.saw(id) {
                    let b = self.store.get(id);
                    self.log.record(MetricRecord {
                        time: now,
                        kind: RecordKind::Disseminated,
                        block_id: id,
                        node_id: self.node_of[b.issuer as usize] as u32,
                        account_id: b.issuer,
                        credits: Some(b.credits),
                        sojourn: None,
                    });
                }
            }
            for &id in &fx.locally_confirmed {
                if obs.confirmed(id) {
                    let b = self.store.get(id);
                    self.log.record(MetricRecord {
                        time: now,
                        kind: RecordKind::Confirmed,
                        block_id: id,
                        node_id: self.node_of[b.issuer as usize] as u32,
                        account_id: b.issuer,
                        credits: Some(b.credits),
                        sojourn: None,
                    });
                }
            }
        }
        for (responder, block) in fx.requests {
            let d = self.link_delay(node, responder);
            let ev = Event::SolidRequest {
                node: responder as u32,
                requester: node as u32,
                block,
            };
            self.queue.schedule_in(d, ev);
        }
        for (requester, block) in fx.replies {
            self.send_solid_response(node, requester, block);
        }
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn now(&self) -> SimTime {
        self.queue.now()
    }

    pub fn log(&self) -> &MetricsLog {
        &self.log
    }

    pub fn accounts(&self) -> &[Account] {
        &self.accounts
    }

    /// Node hosting each account.
    pub fn node_of(&self, account: usize) -> usize {
        self.node_of[account]
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn store(&self) -> &BlockStore {
        &self.store
    }

    pub fn stats(&self) -> &RunStats {
        &self.stats
    }

    /// Every generation instant with its account.
    pub fn generated(&self) -> &[(SimTime, u32)] {
        &self.generated
    }

    /// Buffer occupancy of every node, sampled once per second.
    pub fn occupancy(&self) -> &[(SimTime, Vec<usize>)] {
        &self.occupancy
    }

    /// Payloads waiting in each account's mempool.
    pub fn mempool(&self) -> &[u64] {
        &self.mempool
    }

    /// Index of the current traffic phase.
    pub fn phase(&self) -> usize {
        self.phase
    }

    /// Scheduler throughput in blocks per second.
    pub fn scheduling_rate(&self) -> f64 {
        self.config.scheduler.throughput() / self.config.block_work
    }

    pub fn profile(&self) -> &TrafficProfile {
        &self.profile
    }
}
