//! Derived series and the run summary written next to `events.csv`.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufWriter};
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::metrics::{
    fair_share, latency_cdf, moving_average_at, sample_grid, scaled_rate, windowed_rate, MetricRecord, RecordKind,
};
use crate::simulation::{RunStats, Simulation};

/// Window for rates and moving averages, seconds.
pub const SERIES_WINDOW: f64 = 10.0;
/// Spacing of the sample grid, seconds.
pub const SERIES_STEP: f64 = 1.0;

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub name: String,
    pub columns: [&'static str; 2],
    pub points: Vec<(f64, f64)>,
}

impl Series {
    fn timed(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series {
            name: name.into(),
            columns: ["time", "value"],
            points,
        }
    }

    fn cdf(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series {
            name: name.into(),
            columns: ["latency", "fraction"],
            points,
        }
    }

    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.columns)?;
        for (x, y) in &self.points {
            w.write_record([format!("{x:.6}"), format!("{y}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Records emitted by the node hosting the record's account.
pub fn at_origin<'a>(sim: &'a Simulation, kind: RecordKind) -> impl Iterator<Item = &'a MetricRecord> + 'a {
    sim.log()
        .of_kind(kind)
        .filter(move |r| sim.node_of(r.account_id as usize) == r.node_id as usize)
}

/// Dissemination latency (issue to dissemination) of each disseminated block.
pub fn dissemination_latencies(sim: &Simulation) -> Vec<(u32, f64)> {
    sim.log()
        .of_kind(RecordKind::Disseminated)
        .map(|r| {
            let issued = sim.store().get(r.block_id).issued_at;
            (r.account_id, r.time.since(issued).as_secs())
        })
        .collect()
}

/// Every derived series of a finished run.
pub fn build_series(sim: &Simulation) -> Vec<Series> {
    let end = sim.now().as_secs();
    let grid = sample_grid(end, SERIES_STEP);
    let mut out = Vec::new();

    let generated: Vec<f64> = sim.generated().iter().map(|(t, _)| t.as_secs()).collect();
    out.push(Series::timed("traffic_load", windowed_rate(&generated, SERIES_WINDOW, &grid)));

    // Per-block series are keyed by the time the block entered its origin
    // node's buffer, so a block is attributed to the conditions it met.
    let mut scheduled: Vec<(f64, f64, f64)> = at_origin(sim, RecordKind::Scheduled)
        .map(|r| {
            let sojourn = r.sojourn.map_or(0.0, |s| s.as_secs());
            (r.time.as_secs() - sojourn, r.credits.map_or(0.0, |c| c.as_f64()), sojourn)
        })
        .collect();
    scheduled.sort_by(|a, b| a.0.total_cmp(&b.0));
    let credits: Vec<(f64, f64)> = scheduled.iter().map(|r| (r.0, r.1)).collect();
    let sojourn: Vec<(f64, f64)> = scheduled.iter().map(|r| (r.0, r.2)).collect();
    out.push(Series::timed("credits_ma", moving_average_at(&credits, SERIES_WINDOW, &grid)));
    out.push(Series::timed("sojourn_ma", moving_average_at(&sojourn, SERIES_WINDOW, &grid)));

    let occupancy: Vec<(f64, f64)> = sim
        .occupancy()
        .iter()
        .map(|(t, per_node)| (t.as_secs(), per_node.iter().copied().max().unwrap_or(0) as f64))
        .collect();
    out.push(Series::timed("occupancy", occupancy));

    if sim.nodes().len() > 1 {
        let times = |kind| -> Vec<(u32, f64)> {
            sim.log().of_kind(kind).map(|r| (r.account_id, r.time.as_secs())).collect()
        };
        let diss = times(RecordKind::Disseminated);
        let conf = times(RecordKind::Confirmed);
        let all = |v: &[(u32, f64)]| v.iter().map(|e| e.1).collect::<Vec<f64>>();
        out.push(Series::timed("dissemination_rate", windowed_rate(&all(&diss), SERIES_WINDOW, &grid)));
        out.push(Series::timed("confirmation_rate", windowed_rate(&all(&conf), SERIES_WINDOW, &grid)));

        let total: f64 = sim.accounts().iter().map(|a| a.tokens).sum();
        for a in sim.accounts() {
            let share = fair_share(sim.scheduling_rate(), a.tokens, total);
            let mine = |v: &[(u32, f64)]| v.iter().filter(|e| e.0 == a.id).map(|e| e.1).collect::<Vec<f64>>();
            let node = sim.node_of(a.id as usize);
            out.push(Series::timed(
                format!("scaled_dissemination_node{node}"),
                scaled_rate(&mine(&diss), SERIES_WINDOW, &grid, share),
            ));
            out.push(Series::timed(
                format!("scaled_confirmation_node{node}"),
                scaled_rate(&mine(&conf), SERIES_WINDOW, &grid, share),
            ));
        }

        let lat = dissemination_latencies(sim);
        out.push(Series::cdf("latency_cdf", latency_cdf(&lat.iter().map(|e| e.1).collect::<Vec<f64>>())));
        let mut by_strategy: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for (acct, l) in &lat {
            by_strategy
                .entry(sim.accounts()[*acct as usize].strategy.name())
                .or_default()
                .push(*l);
        }
        for (name, l) in by_strategy {
            out.push(Series::cdf(format!("latency_cdf_{name}"), latency_cdf(&l)));
        }
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Totals {
    pub generated: u64,
    pub issued: u64,
    pub enqueued: u64,
    pub scheduled: u64,
    pub dropped_full: u64,
    pub dropped_stale: u64,
    pub dropped_rejected: u64,
    pub disseminated: u64,
    pub locally_confirmed: u64,
    pub confirmed: u64,
    pub max_occupancy: usize,
    pub mempool_backlog: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AccountSummary {
    pub id: u32,
    pub node: usize,
    pub strategy: String,
    pub tokens: f64,
    pub issued: u64,
    /// Counts below are taken at the account's own node.
    pub scheduled: u64,
    pub dropped: u64,
    pub mean_sojourn: Option<f64>,
    pub mean_bid: Option<f64>,
    pub balance: f64,
    pub accrued: f64,
    pub consumed: f64,
    pub reimbursed: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct StrategySummary {
    pub accounts: usize,
    pub issued: u64,
    pub scheduled: u64,
    pub dropped: u64,
    pub mean_sojourn: Option<f64>,
    pub mean_bid: Option<f64>,
    pub mean_scheduled_credits: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub seed: u64,
    pub duration: f64,
    pub config: Value,
    /// Command-line overrides exactly as given.
    pub overrides: Vec<String>,
    pub totals: Totals,
    pub stats: RunStats,
    pub per_strategy: BTreeMap<String, StrategySummary>,
    pub per_account: Vec<AccountSummary>,
}

#[derive(Default)]
struct Acc {
    issued: u64,
    scheduled: u64,
    dropped: u64,
    sojourn_sum: f64,
    bid_sum: f64,
    sched_credit_sum: f64,
}

fn mean(sum: f64, n: u64) -> Option<f64> {
    (n > 0).then(|| sum / n as f64)
}

pub fn summarize(sim: &Simulation, overrides: &[String]) -> Summary {
    let log = sim.log();
    let count = |k| log.of_kind(k).count() as u64;
    let totals = Totals {
        generated: sim.stats().generated,
        issued: count(RecordKind::Issued),
        enqueued: count(RecordKind::Enqueued),
        scheduled: count(RecordKind::Scheduled),
        dropped_full: count(RecordKind::DroppedFull),
        dropped_stale: count(RecordKind::DroppedStale),
        dropped_rejected: count(RecordKind::DroppedRejected),
        disseminated: count(RecordKind::Disseminated),
        locally_confirmed: count(RecordKind::LocallyConfirmed),
        confirmed: count(RecordKind::Confirmed),
        max_occupancy: sim.nodes().iter().map(|n| n.max_occupancy()).max().unwrap_or(0),
        mempool_backlog: sim.mempool().iter().sum(),
    };

    let mut acc: Vec<Acc> = sim.accounts().iter().map(|_| Acc::default()).collect();
    for r in log.records() {
        let a = r.account_id as usize;
        let origin = sim.node_of(a) == r.node_id as usize;
        let slot = &mut acc[a];
        match r.kind {
            RecordKind::Issued => {
                slot.issued += 1;
                slot.bid_sum += r.credits.map_or(0.0, |c| c.as_f64());
            }
            RecordKind::Scheduled if origin => {
                slot.scheduled += 1;
                slot.sojourn_sum += r.sojourn.map_or(0.0, |s| s.as_secs());
                slot.sched_credit_sum += r.credits.map_or(0.0, |c| c.as_f64());
            }
            k if k.is_drop() && origin => slot.dropped += 1,
            _ => {}
        }
    }

    let mut per_strategy: BTreeMap<String, (usize, Acc)> = BTreeMap::new();
    let per_account = sim
        .accounts()
        .iter()
        .zip(&acc)
        .map(|(a, s)| {
            let entry = per_strategy.entry(a.strategy.name().to_string()).or_default();
            entry.0 += 1;
            entry.1.issued += s.issued;
            entry.1.scheduled += s.scheduled;
            entry.1.dropped += s.dropped;
            entry.1.sojourn_sum += s.sojourn_sum;
            entry.1.bid_sum += s.bid_sum;
            entry.1.sched_credit_sum += s.sched_credit_sum;
            let l = a.ledger();
            AccountSummary {
                id: a.id,
                node: sim.node_of(a.id as usize),
                strategy: a.strategy.name().to_string(),
                tokens: a.tokens,
                issued: s.issued,
                scheduled: s.scheduled,
                dropped: s.dropped,
                mean_sojourn: mean(s.sojourn_sum, s.scheduled),
                mean_bid: mean(s.bid_sum, s.issued),
                balance: a.balance().as_f64(),
                accrued: l.accrued.as_f64(),
                consumed: l.consumed.as_f64(),
                reimbursed: l.reimbursed.as_f64(),
            }
        })
        .collect();
    let per_strategy = per_strategy
        .into_iter()
        .map(|(name, (n, s))| {
            let summary = StrategySummary {
                accounts: n,
                issued: s.issued,
                scheduled: s.scheduled,
                dropped: s.dropped,
                mean_sojourn: mean(s.sojourn_sum, s.scheduled),
                mean_bid: mean(s.bid_sum, s.issued),
                mean_scheduled_credits: mean(s.sched_credit_sum, s.scheduled),
            };
            (name, summary)
        })
        .collect();

    Summary {
        seed: sim.config().seed,
        duration: sim.now().as_secs(),
        config: sim.config().to_value(),
        overrides: overrides.to_vec(),
        totals,
        stats: sim.stats().clone(),
        per_strategy,
        per_account,
    }
}

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
}

fn create(path: &Path) -> Result<BufWriter<File>, OutputError> {
    File::create(path).map(BufWriter::new).map_err(|source| OutputError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Writes `events.csv`, `series/*.csv` and `summary.json` into `dir`.
pub fn write_outputs(dir: &Path, sim: &Simulation, overrides: &[String]) -> Result<Summary, OutputError> {
    let series_dir = dir.join("series");
    fs::create_dir_all(&series_dir).map_err(|source| OutputError::Io {
        path: series_dir.display().to_string(),
        source,
    })?;

    let events = dir.join("events.csv");
    sim.log().write_csv(create(&events)?).map_err(|source| OutputError::Csv {
        path: events.display().to_string(),
        source,
    })?;

    for s in build_series(sim) {
        let path = series_dir.join(format!("{}.csv", s.name));
        s.write_csv(create(&path)?).map_err(|source| OutputError::Csv {
            path: path.display().to_string(),
            source,
        })?;
    }

    let summary = summarize(sim, overrides);
    let path = dir.join("summary.json");
    serde_json::to_writer_pretty(create(&path)?, &summary).map_err(|source| OutputError::Json {
        path: path.display().to_string(),
        source,
    })?;
    Ok(summary)
}
