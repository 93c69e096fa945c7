use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::thread;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use credit_sim::config::{apply_override, load_config, preset, ConfigErrors, ScenarioConfig, PRESET_NAMES};
use credit_sim::report::write_outputs;
use credit_sim::tokenomics::optimal_allot_count;
use credit_sim::{SimError, Simulation};

#[derive(Parser)]
#[command(name = "credit-sim", version, about = "Credit-based write access simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write events.csv, series/ and summary.json.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run one scenario for several seeds in parallel, one subdirectory per seed.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Comma-separated seeds.
        #[arg(long, value_delimiter = ',', required = true)]
        seeds: Vec<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Concurrent runs (defaults to the number of CPUs).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// List the built-in scenarios, or print one as JSON.
    Presets {
        #[arg(long)]
        show: Option<String>,
    },
    /// Best number of allotments under concave credit generation.
    Allot {
        #[arg(long)]
        tokens: f64,
        /// Holding time in seconds.
        #[arg(long)]
        hold: f64,
        /// Credit cost of one allotment.
        #[arg(long)]
        cost: f64,
        #[arg(long)]
        gamma: f64,
        #[arg(long, default_value_t = 1000)]
        max_n: u32,
    },
}

#[derive(Args, Clone)]
struct ScenarioArgs {
    /// Built-in scenario name.
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    scenario: Option<String>,
    /// JSON scenario file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the simulated duration, seconds.
    #[arg(long)]
    duration: Option<f64>,
    /// `dotted.path=value`; repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

enum Failure {
    Config(String),
    Runtime(anyhow::Error),
}

impl From<ConfigErrors> for Failure {
    fn from(e: ConfigErrors) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

/// Builds the final config: base document, then `--duration`, `--seed` and every
/// `--override` in order. Returns the config and the overrides as given.
fn resolve(args: &ScenarioArgs, seed: u64) -> Result<(ScenarioConfig, Vec<String>), Failure> {
    let mut doc: Value = match (&args.scenario, &args.config) {
        (Some(name), _) => preset(name)
            .ok_or_else(|| {
                Failure::Config(format!("unknown scenario `{name}`; available: {}", PRESET_NAMES.join(", ")))
            })?
            .to_value(),
        (None, Some(path)) => load_config(path)?.to_value(),
        (None, None) => unreachable!("clap requires one of them"),
    };
    let mut applied = vec![format!("seed={seed}")];
    if let Some(d) = args.duration {
        applied.push(format!("duration={d}"));
    }
    applied.extend(args.overrides.iter().cloned());
    for entry in &applied {
        apply_override(&mut doc, entry).map_err(|e| Failure::Config(e.to_string()))?;
    }
    let cfg = ScenarioConfig::from_value(doc)?;
    Ok((cfg, applied))
}

fn run_one(cfg: &ScenarioConfig, overrides: &[String], out: &Path) -> Result<(), Failure> {
    let mut sim = Simulation::new(cfg).map_err(|e| match e {
        SimError::Config(c) => Failure::Config(c.to_string()),
        other => Failure::Runtime(other.into()),
    })?;
    sim.run();
    let summary = write_outputs(out, &sim, overrides).context("writing outputs")?;
    let t = &summary.totals;
    println!(
        "seed {}: {} issued, {} scheduled, {} dropped, {} disseminated, {} confirmed -> {}",
        summary.seed,
        t.issued,
        t.scheduled,
        t.dropped_full + t.dropped_stale + t.dropped_rejected,
        t.disseminated,
        t.confirmed,
        out.display()
    );
    Ok(())
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { scenario, seed, out } => {
            let (cfg, applied) = resolve(&scenario, seed)?;
            run_one(&cfg, &applied, &out)
        }
        Command::Sweep {
            scenario,
            seeds,
            out,
            jobs,
        } => {
            let runs = seeds
                .iter()
                .map(|&s| resolve(&scenario, s).map(|(c, a)| (s, c, a)))
                .collect::<Result<Vec<_>, _>>()?;
            let jobs = jobs
                .or_else(|| thread::available_parallelism().ok().map(|n| n.get()))
                .unwrap_or(1)
                .max(1);
            let mut failures = Vec::new();
            for chunk in runs.chunks(jobs) {
                let results: Vec<Result<(), Failure>> = thread::scope(|scope| {
                    let handles: Vec<_> = chunk
                        .iter()
                        .map(|(seed, cfg, applied)| {
                            let dir = out.join(format!("seed-{seed}"));
                            scope.spawn(move || run_one(cfg, applied, &dir))
                        })
                        .collect();
                    handles.into_iter().map(|h| h.join().expect("run thread panicked")).collect()
                });
                failures.extend(results.into_iter().filter_map(Result::err));
            }
            match failures.into_iter().next() {
                Some(f) => Err(f),
                None => Ok(()),
            }
        }
        Command::Presets { show } => {
            match show {
                Some(name) => {
                    let cfg = preset(&name).ok_or_else(|| Failure::Config(format!("unknown scenario `{name}`")))?;
                    let text = serde_json::to_string_pretty(&cfg.to_value()).context("serializing preset")?;
                    println!("{text}");
                }
                None => PRESET_NAMES.iter().for_each(|n| println!("{n}")),
            }
            Ok(())
        }
        Command::Allot {
            tokens,
            hold,
            cost,
            gamma,
            max_n,
        } => {
            if !(tokens > 0.0 && hold > 0.0 && cost >= 0.0 && gamma > 0.0 && max_n >= 1) {
                return Err(Failure::Config(
                    "tokens, hold and gamma must be positive, cost nonnegative, max-n at least 1".into(),
                ));
            }
            let plan = optimal_allot_count(tokens, hold, cost, gamma, max_n);
            println!("allotments: {}\ncredits: {:.6}", plan.allotments, plan.credits);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("configuration error:\n{msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
