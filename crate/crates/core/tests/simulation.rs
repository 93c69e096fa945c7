use std::collections::{HashMap, HashSet};

use proptest::prelude::*;

use credit_sim::config::{preset, Mode, StrategyFractions};
use credit_sim::metrics::RecordKind;
use credit_sim::network::TrafficPhase;
use credit_sim::{ScenarioConfig, Simulation};

fn phase(duration: f64, rate_multiplier: f64) -> TrafficPhase {
    TrafficPhase {
        duration,
        rate_multiplier,
    }
}

/// Twenty nodes, a short load cycle, then 30 s without traffic.
fn short_multi(seed: u64) -> ScenarioConfig {
    let mut cfg = preset("multi-node-greedy-opp").unwrap();
    cfg.seed = seed;
    cfg.traffic.phases = vec![phase(20.0, 0.5), phase(20.0, 1.5), phase(10.0, 0.5)];
    cfg.duration = 80.0;
    cfg.scheduler.capacity = 60;
    cfg
}

fn run(cfg: &ScenarioConfig) -> Simulation {
    let mut sim = Simulation::new(cfg).unwrap();
    sim.run();
    sim
}

fn count_by_node(sim: &Simulation, kind: RecordKind) -> HashMap<u32, usize> {
    let mut out = HashMap::new();
    for r in sim.log().of_kind(kind) {
        *out.entry(r.node_id).or_default() += 1;
    }
    out
}

#[test]
fn every_enqueued_block_is_accounted_for() {
    for cfg in [short_multi(7), {
        let mut c = preset("single-node-greedy").unwrap();
        c.duration = 400.0;
        c
    }] {
        let sim = run(&cfg);
        let enq = count_by_node(&sim, RecordKind::Enqueued);
        let sched = count_by_node(&sim, RecordKind::Scheduled);
        let full = count_by_node(&sim, RecordKind::DroppedFull);
        let stale = count_by_node(&sim, RecordKind::DroppedStale);
        assert!(full.values().sum::<usize>() > 0, "scenario should overflow buffers");
        for node in sim.nodes() {
            let id = node.id as u32;
            let get = |m: &HashMap<u32, usize>| m.get(&id).copied().unwrap_or(0);
            assert_eq!(
                get(&enq),
                get(&sched) + get(&full) + get(&stale) + node.buffer.len(),
                "node {id}"
            );
        }
    }
}

#[test]
fn undropped_blocks_reach_every_view() {
    let sim = run(&short_multi(3));
    let dropped: HashSet<u64> = sim
        .log()
        .records()
        .iter()
        .filter(|r| r.kind.is_drop())
        .map(|r| r.block_id)
        .collect();
    let mut checked = 0;
    for r in sim.log().of_kind(RecordKind::Scheduled) {
        let origin = sim.node_of(r.account_id as usize) as u32;
        if r.node_id != origin || dropped.contains(&r.block_id) {
            continue;
        }
        checked += 1;
        for node in sim.nodes() {
            assert!(node.view().unwrap().contains(r.block_id), "block {} missing at node {}", r.block_id, node.id);
        }
    }
    assert!(checked > 500);
    assert_eq!(
        sim.log().of_kind(RecordKind::Disseminated).count(),
        checked + sim.log().of_kind(RecordKind::Disseminated).filter(|r| dropped.contains(&r.block_id)).count()
    );
}

#[test]
fn seeds_change_the_run() {
    let a = run(&short_multi(1));
    let b = run(&short_multi(2));
    assert_ne!(a.log().records(), b.log().records());
    let again = run(&short_multi(1));
    assert_eq!(a.log().records(), again.log().records());
}

#[test]
fn confirmation_follows_dissemination() {
    let sim = run(&short_multi(5));
    let disseminated: HashMap<u64, _> = sim
        .log()
        .of_kind(RecordKind::Disseminated)
        .map(|r| (r.block_id, r.time))
        .collect();
    let mut confirmed = 0;
    for r in sim.log().of_kind(RecordKind::Confirmed) {
        let d = disseminated.get(&r.block_id).expect("confirmed blocks are disseminated");
        assert!(r.time >= *d);
        confirmed += 1;
    }
    assert!(confirmed > 0);
}

#[test]
fn single_node_mode_has_no_ledger_records() {
    let mut cfg = preset("single-node-mixed").unwrap();
    cfg.duration = 30.0;
    let sim = run(&cfg);
    assert_eq!(cfg.mode, Mode::SingleNode);
    assert!(sim.nodes()[0].view().is_none());
    assert_eq!(sim.log().of_kind(RecordKind::Disseminated).count(), 0);
    assert_eq!(sim.log().of_kind(RecordKind::LocallyConfirmed).count(), 0);
}

fn small_config(seed: u64, fractions: [f64; 4], reimburse: bool, capacity: usize) -> ScenarioConfig {
    let mut cfg = preset("single-node-mixed").unwrap();
    cfg.seed = seed;
    cfg.accounts.n = 40;
    cfg.duration = 40.0;
    cfg.traffic.phases = vec![phase(15.0, 0.5), phase(15.0, 2.0), phase(10.0, 0.5)];
    cfg.scheduler.capacity = capacity;
    cfg.scheduler.max_age = 5.0;
    cfg.credit.reimburse_on_drop = reimburse;
    let [impatient, greedy, gambler, opportunistic] = fractions;
    cfg.strategies.fractions = StrategyFractions {
        impatient,
        greedy,
        gambler,
        opportunistic,
    };
    cfg
}

fn fractions() -> impl Strategy<Value = [f64; 4]> {
    (0u32..=4, 0u32..=4, 0u32..=4, 0u32..=4)
        .prop_filter("some strategy", |(a, b, c, d)| a + b + c + d > 0)
        .prop_map(|(a, b, c, d)| {
            let total = f64::from(a + b + c + d);
            [a, b, c, d].map(|x| f64::from(x) / total)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn balances_close_and_bids_stay_covered(
        seed in any::<u64>(),
        mix in fractions(),
        reimburse in any::<bool>(),
        capacity in 5usize..200,
    ) {
        let sim = run(&small_config(seed, mix, reimburse, capacity));
        prop_assert_eq!(sim.stats().bid_violations, 0);
        prop_assert_eq!(sim.stats().overdraw_attempts, 0);
        for a in sim.accounts() {
            prop_assert_eq!(a.balance(), a.ledger().expected_balance());
            prop_assert!(!a.balance().is_negative());
        }
        if !reimburse {
            prop_assert_eq!(sim.stats().reimbursements, 0);
        }
        let occupancy = sim.nodes()[0].max_occupancy();
        prop_assert!(occupancy <= capacity);
    }
}
