//! Event records and the derived series computed from them.

use std::collections::HashMap;
use std::io;

use serde::Serialize;

use crate::scheduler::BlockId;
use crate::tokenomics::AccountId;
use crate::units::{Credits, SimDuration, SimTime};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordKind {
    Issued,
    Enqueued,
    Scheduled,
    DroppedFull,
    DroppedStale,
    DroppedRejected,
    Disseminated,
    LocallyConfirmed,
    Confirmed,
}

impl RecordKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RecordKind::Issued => "issued",
            RecordKind::Enqueued => "enqueued",
            RecordKind::Scheduled => "scheduled",
            RecordKind::DroppedFull => "dropped_full",
            RecordKind::DroppedStale => "dropped_stale",
            RecordKind::DroppedRejected => "dropped_rejected",
            RecordKind::Disseminated => "disseminated",
            RecordKind::LocallyConfirmed => "locally_confirmed",
            RecordKind::Confirmed => "confirmed",
        }
    }

    pub fn is_drop(self) -> bool {
        matches!(
            self,
            RecordKind::DroppedFull | RecordKind::DroppedStale | RecordKind::DroppedRejected
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricRecord {
    pub time: SimTime,
    pub kind: RecordKind,
    pub block_id: BlockId,
    pub node_id: u32,
    pub account_id: AccountId,
    pub credits: Option<Credits>,
    /// Time spent in the node's buffer; set on `Scheduled` records.
    pub sojourn: Option<SimDuration>,
}

#[derive(Clone, Debug, Default)]
pub struct MetricsLog {
    records: Vec<MetricRecord>,
}

impl MetricsLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, rec: MetricRecord) {
        self.records.push(rec);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records in insertion order.
    pub fn records(&self) -> &[MetricRecord] {
        &self.records
    }

    pub fn of_kind(&self, kind: RecordKind) -> impl Iterator<Item = &MetricRecord> {
        self.records.iter().filter(move |r| r.kind == kind)
    }

    /// Records sorted by time; equal times keep insertion order.
    pub fn sorted(&self) -> Vec<&MetricRecord> {
        let mut out: Vec<&MetricRecord> = self.records.iter().collect();
        out.sort_by_key(|r| r.time);
        out
    }

    /// Writes `events.csv`: header plus one row per record, time-sorted.
    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["time", "kind", "block_id", "node_id", "account_id", "credits", "sojourn"])?;
        for r in self.sorted() {
            w.write_record([
                r.time.to_string(),
                r.kind.as_str().to_string(),
                r.block_id.to_string(),
                r.node_id.to_string(),
                r.account_id.to_string(),
                r.credits.map(|c| c.to_string()).unwrap_or_default(),
                r.sojourn.map(|s| format!("{:.6}", s.as_secs())).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Omniscient observer of network-wide events: a block is disseminated when the
/// last node sees it and confirmed when the last node locally confirms it.
#[derive(Clone, Debug)]
pub struct NetworkObserver {
    nodes: u32,
    seen: HashMap<BlockId, u32>,
    confirmed: HashMap<BlockId, u32>,
}

impl NetworkObserver {
    pub fn new(nodes: usize) -> Self {
        NetworkObserver {
            nodes: nodes as u32,
            seen: HashMap::new(),
            confirmed: HashMap::new(),
        }
    }

    /// Returns true when this sighting completes dissemination.
    pub fn saw(&mut self, id: BlockId) -> bool {
        let c = self.seen.entry(id).or_default();
        *c += 1;
        *c == self.nodes
    }

    /// Returns true when this local confirmation completes network confirmation.
    pub fn confirmed(&mut self, id: BlockId) -> bool {
        let c = self.confirmed.entry(id).or_default();
        *c += 1;
        *c == self.nodes
    }

    pub fn seen_count(&self, id: BlockId) -> u32 {
        self.seen.get(&id).copied().unwrap_or(0)
    }
}

/// At each sample time `t`, the mean of values with time in `(t - window, t]`.
/// Samples are taken at the input points' own times.
pub fn moving_average(series: &[(f64, f64)], window: f64) -> Vec<(f64, f64)> {
    assert!(window > 0.0, "window must be positive");
    let mut out = Vec::with_capacity(series.len());
    let mut lo = 0;
    let mut hi = 0;
    let mut sum = 0.0;
    for &(t, _) in series {
        while hi < series.len() && series[hi].0 <= t {
            sum += series[hi].1;
            hi += 1;
        }
        while lo < hi && series[lo].0 <= t - window {
            sum -= series[lo].1;
            lo += 1;
        }
        out.push((t, sum / (hi - lo) as f64));
    }
    out
}

/// Moving average evaluated on a separate grid; a sample time whose window holds
/// no points is skipped. `series` must be time-sorted.
pub fn moving_average_at(series: &[(f64, f64)], window: f64, sample_times: &[f64]) -> Vec<(f64, f64)> {
    assert!(window > 0.0, "window must be positive");
    let mut prefix = Vec::with_capacity(series.len() + 1);
    prefix.push(0.0);
    for &(_, v) in series {
        prefix.push(prefix.last().copied().unwrap_or(0.0) + v);
    }
    sample_times
        .iter()
        .filter_map(|&t| {
            let hi = series.partition_point(|p| p.0 <= t);
            let lo = series.partition_point(|p| p.0 <= t - window);
            (hi > lo).then(|| (t, (prefix[hi] - prefix[lo]) / (hi - lo) as f64))
        })
        .collect()
}

/// Empirical CDF: one step per distinct latency.
pub fn latency_cdf(latencies: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = latencies.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, &x) in sorted.iter().enumerate() {
        let frac = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == x => last.1 = frac,
            _ => out.push((x, frac)),
        }
    }
    out
}

/// Events per second in `(t - window, t]` at each sample time.
pub fn windowed_rate(event_times: &[f64], window: f64, sample_times: &[f64]) -> Vec<(f64, f64)> {
    assert!(window > 0.0, "window must be positive");
    let mut sorted = event_times.to_vec();
    sorted.sort_by(f64::total_cmp);
    sample_times
        .iter()
        .map(|&t| {
            let upto = sorted.partition_point(|&e| e <= t);
            let before = sorted.partition_point(|&e| e <= t - window);
            (t, (upto - before) as f64 / window)
        })
        .collect()
}

/// `windowed_rate` divided by a node's fair share of the scheduler throughput.
pub fn scaled_rate(event_times: &[f64], window: f64, sample_times: &[f64], fair_share: f64) -> Vec<(f64, f64)> {
    windowed_rate(event_times, window, sample_times)
        .into_iter()
        .map(|(t, r)| (t, r / fair_share))
        .collect()
}

/// `scheduling_rate * tokens_i / sum(tokens)`.
pub fn fair_share(scheduling_rate: f64, tokens: f64, total_tokens: f64) -> f64 {
    scheduling_rate * tokens / total_tokens
}

/// Sample grid `step, 2*step, ...` up to and including `end`.
pub fn sample_grid(end: f64, step: f64) -> Vec<f64> {
    let n = (end / step + 1e-9).floor() as usize;
    (1..=n).map(|i| i as f64 * step).collect()
}
