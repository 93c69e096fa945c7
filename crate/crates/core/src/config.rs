//! Scenario configuration: JSON shape, validation, presets and dotted-path overrides.

use std::fmt;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::network::{TrafficPhase, TrafficProfile};
use crate::rng::{stream, StreamId};
use crate::scheduler::SchedulerParams;
use crate::strategies::{StrategyKind, DEFAULT_GAMBLER_TOP_K};
use crate::tokenomics::{CreditGenParams, CreditMode};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    SingleNode,
    MultiNode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccountsConfig {
    pub n: usize,
    pub alpha: f64,
    pub x_min: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CreditConfig {
    #[serde(default = "default_mode")]
    pub mode: CreditMode,
    pub rate: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_cap_scale")]
    pub cap_scale: f64,
    /// Return the bid to the issuer when its block is dropped at the issuing node.
    #[serde(default)]
    pub reimburse_on_drop: bool,
}

impl CreditConfig {
    pub fn params(&self) -> CreditGenParams {
        CreditGenParams {
            mode: self.mode,
            rate: self.rate,
            gamma: self.gamma,
            cap_scale: self.cap_scale,
        }
    }
}

fn default_mode() -> CreditMode {
    CreditMode::Linear
}

fn default_gamma() -> f64 {
    CreditGenParams::default().gamma
}

fn default_cap_scale() -> f64 {
    CreditGenParams::default().cap_scale
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StrategyFractions {
    #[serde(default)]
    pub impatient: f64,
    #[serde(default)]
    pub greedy: f64,
    #[serde(default)]
    pub gambler: f64,
    #[serde(default)]
    pub opportunistic: f64,
}

impl StrategyFractions {
    fn entries(&self) -> [(&'static str, f64); 4] {
        [
            ("impatient", self.impatient),
            ("greedy", self.greedy),
            ("gambler", self.gambler),
            ("opportunistic", self.opportunistic),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategiesConfig {
    #[serde(default)]
    pub fractions: StrategyFractions,
    #[serde(default = "default_top_k")]
    pub gambler_top_k: usize,
    /// Explicit per-account strategy names; takes precedence over `fractions`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assignment: Option<Vec<String>>,
}

fn default_top_k() -> usize {
    DEFAULT_GAMBLER_TOP_K
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrafficConfig {
    pub phases: Vec<TrafficPhase>,
    /// Period of the retry tick for blocks whose issuer abstained, seconds.
    #[serde(default = "default_retry")]
    pub retry_interval: f64,
}

fn default_retry() -> f64 {
    1.0
}

impl TrafficConfig {
    pub fn profile(&self) -> TrafficProfile {
        TrafficProfile {
            phases: self.phases.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub n_nodes: usize,
    pub k: usize,
    pub delay_lo: f64,
    pub delay_hi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DagConfig {
    pub parents_k: usize,
    pub cw_threshold: u64,
    pub tip_freshness: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub mode: Mode,
    pub duration: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub accounts: AccountsConfig,
    pub credit: CreditConfig,
    pub scheduler: SchedulerParams,
    pub strategies: StrategiesConfig,
    pub traffic: TrafficConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<NetworkConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dag: Option<DagConfig>,
    #[serde(default = "default_work")]
    pub block_work: f64,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_work() -> f64 {
    1.0
}

/// One problem found while loading a configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
}

impl ConfigIssue {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigIssue {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

/// Every problem found in a configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<ConfigIssue>);

impl ConfigErrors {
    pub fn single(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigErrors(vec![ConfigIssue::new(path, message)])
    }

    pub fn mentions(&self, path: &str) -> bool {
        self.0.iter().any(|i| i.path == path)
    }
}

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, issue) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

impl ScenarioConfig {
    /// Parses and validates a JSON value, collecting unknown keys and every
    /// constraint violation.
    pub fn from_value(value: Value) -> Result<Self, ConfigErrors> {
        let mut unknown = Vec::new();
        let parsed: Result<ScenarioConfig, _> =
            serde_ignored::deserialize(value, |path| unknown.push(path.to_string()));
        let mut issues: Vec<ConfigIssue> = unknown
            .into_iter()
            .map(|p| ConfigIssue::new(p, "unknown key"))
            .collect();
        match parsed {
            Ok(cfg) => {
                issues.extend(cfg.validate());
                if issues.is_empty() {
                    Ok(cfg)
                } else {
                    Err(ConfigErrors(issues))
                }
            }
            Err(e) => {
                issues.push(ConfigIssue::new("", e.to_string()));
                Err(ConfigErrors(issues))
            }
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self, ConfigErrors> {
        let value: Value = serde_json::from_str(s).map_err(|e| ConfigErrors::single("", format!("invalid JSON: {e}")))?;
        Self::from_value(value)
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn validate(&self) -> Vec<ConfigIssue> {
        let mut out = Vec::new();
        let mut positive = |path: &str, v: f64| {
            if !(v > 0.0 && v.is_finite()) {
                out.push(ConfigIssue::new(path, format!("must be positive and finite, got {v}")));
            }
        };
        positive("duration", self.duration);
        positive("accounts.x_min", self.accounts.x_min);
        positive("credit.rate", self.credit.rate);
        positive("credit.gamma", self.credit.gamma);
        positive("credit.cap_scale", self.credit.cap_scale);
        positive("scheduler.tau", self.scheduler.tau);
        positive("scheduler.m", self.scheduler.m);
        positive("scheduler.max_age", self.scheduler.max_age);
        positive("traffic.retry_interval", self.traffic.retry_interval);
        positive("block_work", self.block_work);
        for (i, p) in self.traffic.phases.iter().enumerate() {
            positive(&format!("traffic.phases.{i}.duration"), p.duration);
            positive(&format!("traffic.phases.{i}.rate_multiplier"), p.rate_multiplier);
        }
        if let Some(dag) = &self.dag {
            positive("dag.tip_freshness", dag.tip_freshness);
        }

        if self.accounts.n == 0 {
            out.push(ConfigIssue::new("accounts.n", "must be at least 1"));
        }
        if !(self.accounts.alpha > 1.0) {
            out.push(ConfigIssue::new("accounts.alpha", format!("must exceed 1, got {}", self.accounts.alpha)));
        }
        if self.scheduler.capacity == 0 {
            out.push(ConfigIssue::new("scheduler.capacity", "must be at least 1"));
        }
        if self.traffic.phases.is_empty() {
            out.push(ConfigIssue::new("traffic.phases", "must contain at least one phase"));
        }
        if self.strategies.gambler_top_k == 0 {
            out.push(ConfigIssue::new("strategies.gambler_top_k", "must be at least 1"));
        }
        match &self.strategies.assignment {
            Some(names) => {
                if names.len() != self.accounts.n {
                    out.push(ConfigIssue::new(
                        "strategies.assignment",
                        format!("has {} entries for {} accounts", names.len(), self.accounts.n),
                    ));
                }
                for (i, name) in names.iter().enumerate() {
                    if let Err(e) = name.parse::<StrategyKind>() {
                        out.push(ConfigIssue::new(format!("strategies.assignment.{i}"), e));
                    }
                }
            }
            None => {
                let fr = self.strategies.fractions.entries();
                for (name, f) in fr {
                    if !(0.0..=1.0).contains(&f) {
                        out.push(ConfigIssue::new(
                            format!("strategies.fractions.{name}"),
                            format!("must lie in [0, 1], got {f}"),
                        ));
                    }
                }
                let sum: f64 = fr.iter().map(|e| e.1).sum();
                if (sum - 1.0).abs() > 1e-9 {
                    out.push(ConfigIssue::new("strategies.fractions", format!("must sum to 1, got {sum}")));
                }
            }
        }

        if self.mode == Mode::MultiNode {
            match &self.network {
                None => out.push(ConfigIssue::new("network", "required in multi_node mode")),
                Some(net) => {
                    if net.n_nodes != self.accounts.n {
                        out.push(ConfigIssue::new(
                            "network.n_nodes",
                            format!("must equal accounts.n ({}), got {}", self.accounts.n, net.n_nodes),
                        ));
                    }
                    if net.n_nodes > 1 && net.k >= net.n_nodes {
                        out.push(ConfigIssue::new("network.k", "must be below network.n_nodes"));
                    }
                    if net.n_nodes > 1 && net.k == 0 {
                        out.push(ConfigIssue::new("network.k", "must be at least 1"));
                    }
                    if net.n_nodes * net.k % 2 != 0 {
                        out.push(ConfigIssue::new("network.k", "n_nodes * k must be even"));
                    }
                    if !(net.delay_lo >= 0.0 && net.delay_lo.is_finite()) {
                        out.push(ConfigIssue::new("network.delay_lo", "must be nonnegative"));
                    }
                    if !(net.delay_hi >= net.delay_lo && net.delay_hi.is_finite()) {
                        out.push(ConfigIssue::new("network.delay_hi", "must be at least network.delay_lo"));
                    }
                }
            }
            match &self.dag {
                None => out.push(ConfigIssue::new("dag", "required in multi_node mode")),
                Some(dag) => {
                    if dag.parents_k == 0 {
                        out.push(ConfigIssue::new("dag.parents_k", "must be at least 1"));
                    }
                    if dag.cw_threshold == 0 {
                        out.push(ConfigIssue::new("dag.cw_threshold", "must be at least 1"));
                    }
                }
            }
        }
        out
    }

    pub fn node_count(&self) -> usize {
        match self.mode {
            Mode::SingleNode => 1,
            Mode::MultiNode => self.network.as_ref().map_or(1, |n| n.n_nodes),
        }
    }

    /// Per-account strategies: the explicit list if present, else the fractions
    /// rounded by largest remainder and shuffled on the assignment stream.
    pub fn strategy_assignment(&self) -> Vec<StrategyKind> {
        let top_k = self.strategies.gambler_top_k;
        let with_k = |s: StrategyKind| match s {
            StrategyKind::Gambler { .. } => StrategyKind::Gambler { top_k },
            other => other,
        };
        if let Some(names) = &self.strategies.assignment {
            return names
                .iter()
                .map(|n| with_k(n.parse().expect("validated strategy name")))
                .collect();
        }
        let n = self.accounts.n;
        let fr = self.strategies.fractions.entries();
        let mut counts: Vec<usize> = fr.iter().map(|(_, f)| (f * n as f64).floor() as usize).collect();
        let mut order: Vec<usize> = (0..fr.len()).collect();
        let rem = |i: usize| fr[i].1 * n as f64 - counts[i] as f64;
        order.sort_by(|&a, &b| rem(b).total_cmp(&rem(a)).then(a.cmp(&b)));
        let mut missing = n.saturating_sub(counts.iter().sum());
        if fr.iter().all(|e| e.1 <= 0.0) {
            missing = 0;
        }
        for &i in order.iter().cycle() {
            if missing == 0 {
                break;
            }
            if fr[i].1 > 0.0 {
                counts[i] += 1;
                missing -= 1;
            }
        }
        let mut out = Vec::with_capacity(n);
        for ((name, _), c) in fr.iter().zip(counts) {
            let kind: StrategyKind = name.parse().expect("known strategy");
            out.extend(std::iter::repeat_n(with_k(kind), c));
        }
        out.truncate(n);
        out.shuffle(&mut stream(self.seed, StreamId::StrategyAssignment));
        out
    }
}

/// Reads, parses and validates a JSON scenario file.
pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigErrors> {
    let text = fs::read_to_string(path)
        .map_err(|e| ConfigErrors::single("", format!("cannot read {}: {e}", path.display())))?;
    ScenarioConfig::from_json_str(&text)
}

/// Applies `key.path=value` to a JSON document. The value is parsed as JSON when
/// possible and taken as a string otherwise. Numeric segments index arrays.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<(), ConfigIssue> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| ConfigIssue::new(assignment, "override must look like key.path=value"))?;
    let path = path.trim();
    if path.is_empty() {
        return Err(ConfigIssue::new(assignment, "empty override path"));
    }
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.to_string()));
    let segments: Vec<&str> = path.split('.').collect();
    let mut cur = doc;
    for (i, seg) in segments.iter().enumerate() {
        let last = i + 1 == segments.len();
        let here = segments[..=i].join(".");
        cur = match cur {
            Value::Object(map) => {
                if last {
                    map.insert(seg.to_string(), value);
                    return Ok(());
                }
                map.entry(seg.to_string()).or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let idx: usize = seg
                    .parse()
                    .map_err(|_| ConfigIssue::new(&here, "array index expected"))?;
                let len = items.len();
                let slot = items
                    .get_mut(idx)
                    .ok_or_else(|| ConfigIssue::new(&here, format!("index out of range (length {len})")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            Value::Null => {
                *cur = Value::Object(Default::default());
                let Value::Object(map) = cur else { unreachable!() };
                if last {
                    map.insert(seg.to_string(), value);
                    return Ok(());
                }
                map.entry(seg.to_string()).or_insert_with(|| Value::Object(Default::default()))
            }
            _ => return Err(ConfigIssue::new(&here, "cannot descend into a scalar")),
        };
    }
    Ok(())
}

pub const PRESET_NAMES: [&str; 5] = [
    "single-node-impatient",
    "single-node-greedy",
    "single-node-gambler",
    "single-node-mixed",
    "multi-node-greedy-opp",
];

/// One alternating uncongested/congested pair of the single-node load pattern.
pub fn single_node_cycle() -> [TrafficPhase; 2] {
    [
        TrafficPhase {
            duration: 180.0,
            rate_multiplier: 0.5,
        },
        TrafficPhase {
            duration: 180.0,
            rate_multiplier: 1.5,
        },
    ]
}

pub fn multi_node_phases() -> Vec<TrafficPhase> {
    vec![
        TrafficPhase {
            duration: 60.0,
            rate_multiplier: 0.5,
        },
        TrafficPhase {
            duration: 120.0,
            rate_multiplier: 1.5,
        },
        TrafficPhase {
            duration: 60.0,
            rate_multiplier: 0.5,
        },
    ]
}

fn single_node(fractions: StrategyFractions) -> ScenarioConfig {
    ScenarioConfig {
        mode: Mode::SingleNode,
        duration: 3600.0,
        seed: DEFAULT_SEED,
        accounts: AccountsConfig {
            n: 1000,
            alpha: 2.0,
            x_min: 10.0,
        },
        credit: CreditConfig {
            mode: CreditMode::Linear,
            rate: 0.1,
            gamma: default_gamma(),
            cap_scale: default_cap_scale(),
            reimburse_on_drop: false,
        },
        scheduler: SchedulerParams {
            tau: 0.01,
            m: 1.0,
            capacity: 500,
            max_age: 30.0,
        },
        strategies: StrategiesConfig {
            fractions,
            gambler_top_k: DEFAULT_GAMBLER_TOP_K,
            assignment: None,
        },
        traffic: TrafficConfig {
            phases: TrafficProfile::repeating(&single_node_cycle(), 10).phases,
            retry_interval: 1.0,
        },
        network: None,
        dag: None,
        block_work: 1.0,
    }
}

/// Built-in scenario by name.
pub fn preset(name: &str) -> Option<ScenarioConfig> {
    let only = |f: fn(&mut StrategyFractions)| {
        let mut fr = StrategyFractions::default();
        f(&mut fr);
        single_node(fr)
    };
    match name {
        "single-node-impatient" => Some(only(|f| f.impatient = 1.0)),
        "single-node-greedy" => Some(only(|f| f.greedy = 1.0)),
        "single-node-gambler" => Some(only(|f| f.gambler = 1.0)),
        "single-node-mixed" => Some(single_node(StrategyFractions {
            impatient: 0.1,
            greedy: 0.6,
            gambler: 0.3,
            opportunistic: 0.0,
        })),
        "multi-node-greedy-opp" => {
            let mut cfg = single_node(StrategyFractions {
                greedy: 0.5,
                opportunistic: 0.5,
                ..Default::default()
            });
            cfg.mode = Mode::MultiNode;
            cfg.duration = 240.0;
            cfg.accounts.n = 20;
            cfg.scheduler.tau = 0.04;
            cfg.traffic.phases = multi_node_phases();
            cfg.network = Some(NetworkConfig {
                n_nodes: 20,
                k: 4,
                delay_lo: 0.05,
                delay_hi: 0.15,
            });
            cfg.dag = Some(DagConfig {
                parents_k: 2,
                cw_threshold: 100,
                tip_freshness: 30.0,
            });
            Some(cfg)
        }
        _ => None,
    }
}
