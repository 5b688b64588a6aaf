//! `btrv`: run monitored scenario executions, check recorded traces against
//! properties offline, and synthesize monitor program graphs.
//!
//! Exit codes: 0 = clean, 1 = a property was violated (or a monitor could
//! not be synthesized), 2 = usage or input errors.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use btrv_core::model::{
    run, ChannelId, ChannelObserver, EntryKind, RandomScheduler, RunOptions, Terminal, TssEntry,
};
use btrv_core::model::text::print_process;
use btrv_core::monitor::{self, attach_all, MonitorVerdict};
use btrv_core::scenario::{build_scenario, ScenarioConfig};
use btrv_core::scope::{
    earliest_violation, evaluate, parse_properties, Property, Tss, Verdict,
};
use btrv_core::trace::{parse_trace, write_trace, TraceLine};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "btrv", version, about = "Behavior-tree runtime verification")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build the scenario from a config file, attach monitors, and run it.
    Run(RunArgs),
    /// Evaluate properties offline against a recorded trace file.
    Check {
        /// Trace file written by `run --trace-out`.
        trace: PathBuf,
        /// Property file.
        properties: PathBuf,
        /// Value bound to the `theta` property parameter.
        #[arg(long)]
        theta: Option<i64>,
    },
    /// Print the monitor program graphs synthesized from a property file.
    Synth {
        /// Property file.
        properties: PathBuf,
        /// Value bound to the `theta` property parameter.
        #[arg(long)]
        theta: Option<i64>,
        /// Write one `<name>.pg` file per monitor here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// Scenario config (TOML).
    config: PathBuf,
    /// Property file; overrides the one named in the config.
    #[arg(long)]
    properties: Option<PathBuf>,
    /// Scheduler seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Step budget; overrides the config.
    #[arg(long)]
    horizon: Option<u64>,
    /// Value bound to the `theta` property parameter; overrides the config.
    #[arg(long)]
    theta: Option<i64>,
    /// Stop at the first monitor violation instead of running on.
    #[arg(long)]
    stop_on_violation: bool,
    /// Write the recorded trace to this file.
    #[arg(long)]
    trace_out: Option<PathBuf>,
    /// Report format.
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    report: ReportFormat,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Text,
    Machine,
}

/// Any input or processing failure; always mapped to exit code 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct CliError(String);

impl CliError {
    fn new(msg: impl Into<String>) -> CliError {
        CliError(msg.into())
    }
}

fn err<E: std::fmt::Display>(context: &str) -> impl Fn(E) -> CliError + '_ {
    move |e| CliError::new(format!("{context}: {e}"))
}

#[derive(Serialize)]
struct MonitorReport {
    name: String,
    verdict: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    tick: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    position: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    channel: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    message: Option<String>,
}

#[derive(Serialize)]
struct RunReport {
    seed: u64,
    horizon: u64,
    terminal: String,
    ticks: u64,
    transmissions: u64,
    monitors: Vec<MonitorReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace_file: Option<String>,
    channel_counts: BTreeMap<String, u64>,
}

fn load_properties(path: &Path, theta: Option<i64>) -> Result<Vec<Property>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(err(&format!("reading {}", path.display())))?;
    let mut props =
        parse_properties(&text).map_err(err(&format!("parsing {}", path.display())))?;
    let mut params = BTreeMap::new();
    if let Some(t) = theta {
        params.insert("theta".to_string(), t);
    }
    for p in &mut props {
        let unbound = p.formula.bind_params(&params);
        if !unbound.is_empty() {
            return Err(CliError::new(format!(
                "property {} has unbound parameters {unbound:?}; pass --theta",
                p.name
            )));
        }
    }
    Ok(props)
}

fn cmd_run(args: RunArgs) -> Result<u8, CliError> {
    let (config, grid, config_props) =
        ScenarioConfig::load(&args.config).map_err(err("loading config"))?;
    let seed = args.seed.unwrap_or(config.run.seed);
    let horizon = args.horizon.unwrap_or(config.run.horizon);
    let theta = args.theta.unwrap_or(config.run.theta);
    let stop = args.stop_on_violation || config.run.stop_on_violation;
    let trace_out = args.trace_out;

    let props = match args.properties.or(config_props) {
        Some(path) => load_properties(&path, Some(theta))?,
        None => Vec::new(),
    };
    let specs = props
        .iter()
        .map(|p| monitor::compile(p.name.clone(), &p.formula))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err("compiling monitors"))?;

    let scenario = build_scenario(grid, config.battery.clone(), config.fault.clone())
        .map_err(err("building scenario"))?;
    let mut monitors =
        attach_all(&specs, &scenario.system).map_err(err("attaching monitors"))?;
    log::info!("running seed {seed}, horizon {horizon}, {} monitors", monitors.len());

    let mut observers: Vec<&mut dyn ChannelObserver> = monitors
        .iter_mut()
        .map(|m| m as &mut dyn ChannelObserver)
        .collect();
    let mut cfg = scenario.system.initial_configuration();
    let mut sched = RandomScheduler::seeded(seed);
    let opts = RunOptions {
        horizon,
        stop_on_violation: stop,
    };
    let trace = run(
        &scenario.system,
        &mut cfg,
        &mut sched,
        &opts,
        &mut observers,
    )
    .map_err(err("running"))?;

    let trace_file = match &trace_out {
        Some(path) => {
            std::fs::write(path, write_trace(&scenario.system, &trace))
                .map_err(err(&format!("writing {}", path.display())))?;
            Some(path.display().to_string())
        }
        None => None,
    };

    let mut channel_counts: BTreeMap<String, u64> = BTreeMap::new();
    for e in &trace.entries {
        if let EntryKind::Transmission { channel, .. } = &e.kind {
            let id = scenario.system.channels[*channel].id.to_string();
            *channel_counts.entry(id).or_default() += 1;
        }
    }

    let monitor_reports: Vec<MonitorReport> = monitors
        .iter()
        .map(|m| match m.verdict() {
            MonitorVerdict::Running => MonitorReport {
                name: m.name().to_string(),
                verdict: "running".into(),
                tick: None,
                position: None,
                channel: None,
                message: None,
            },
            MonitorVerdict::Violated {
                tick,
                position,
                channel,
                message,
            } => MonitorReport {
                name: m.name().to_string(),
                verdict: "violated".into(),
                tick: Some(*tick),
                position: Some(*position),
                channel: Some(channel.to_string()),
                message: message.as_ref().map(|m| m.to_string()),
            },
        })
        .collect();

    let violated = monitor_reports.iter().any(|m| m.verdict == "violated");
    let report_data = RunReport {
        seed,
        horizon,
        terminal: match &trace.terminal {
            Terminal::Horizon => "horizon".into(),
            Terminal::Deadlock { blocked } => format!("deadlock ({})", blocked.join(", ")),
            Terminal::ViolationStop => "violation-stop".into(),
        },
        ticks: trace.ticks,
        transmissions: trace.transmissions,
        monitors: monitor_reports,
        trace_file,
        channel_counts,
    };

    match args.report {
        ReportFormat::Machine => println!(
            "{}",
            serde_json::to_string_pretty(&report_data).map_err(err("serializing report"))?
        ),
        ReportFormat::Text => {
            println!(
                "run: seed {} horizon {} -> {} ({} ticks, {} transmissions)",
                report_data.seed,
                report_data.horizon,
                report_data.terminal,
                report_data.ticks,
                report_data.transmissions
            );
            for m in &report_data.monitors {
                match (&m.tick, &m.position) {
                    (Some(tick), Some(pos)) => println!(
                        "monitor {}: violated at tick {tick}, position {pos}, channel {}{}",
                        m.name,
                        m.channel.as_deref().unwrap_or("?"),
                        m.message
                            .as_deref()
                            .map(|s| format!(", message {s}"))
                            .unwrap_or_default()
                    ),
                    _ => println!("monitor {}: running", m.name),
                }
            }
            if let Some(f) = &report_data.trace_file {
                println!("trace written to {f}");
            }
        }
    }
    Ok(if violated { 1 } else { 0 })
}

/// Builds a timed state sequence directly from trace lines: the channel
/// universe is whatever the trace and the properties mention.
fn tss_from_lines(lines: &[TraceLine], props: &[Property]) -> Result<Tss, CliError> {
    let mut channels: Vec<ChannelId> = Vec::new();
    let index = |id: ChannelId, channels: &mut Vec<ChannelId>| -> usize {
        match channels.iter().position(|c| *c == id) {
            Some(i) => i,
            None => {
                channels.push(id);
                channels.len() - 1
            }
        }
    };
    let mut tick_channel: Option<usize> = None;
    let mut entries = Vec::with_capacity(lines.len());
    for line in lines {
        match line {
            TraceLine::Tx {
                tick,
                channel,
                message,
            } => {
                let c = index(channel.clone(), &mut channels);
                entries.push(TssEntry {
                    tick: *tick,
                    kind: EntryKind::Transmission {
                        channel: c,
                        message: message.clone(),
                    },
                });
            }
            TraceLine::Tick { tick, channel } => {
                let c = index(channel.clone(), &mut channels);
                match tick_channel {
                    None => tick_channel = Some(c),
                    Some(tc) if tc == c => {}
                    Some(tc) => {
                        return Err(CliError::new(format!(
                            "trace has two tick channels: {} and {}",
                            channels[tc], channels[c]
                        )));
                    }
                }
                entries.push(TssEntry {
                    tick: *tick,
                    kind: EntryKind::TickStart,
                });
            }
        }
    }
    for p in props {
        for e in p.formula.events() {
            index(ChannelId::new(&e.source, &e.dest), &mut channels);
        }
    }
    Ok(Tss::new(channels, tick_channel, entries, false))
}

fn cmd_check(trace_path: &Path, properties: &Path, theta: Option<i64>) -> Result<u8, CliError> {
    let text = std::fs::read_to_string(trace_path)
        .map_err(err(&format!("reading {}", trace_path.display())))?;
    let lines =
        parse_trace(&text).map_err(err(&format!("parsing {}", trace_path.display())))?;
    let props = load_properties(properties, theta)?;
    let tss = tss_from_lines(&lines, &props)?;

    let mut any_false = false;
    for p in &props {
        let verdict = evaluate(&p.formula, &tss).map_err(err(&p.name))?;
        match verdict {
            Verdict::False => {
                any_false = true;
                let pos = earliest_violation(&p.formula, &tss)
                    .map_err(err(&p.name))?
                    .expect("a false verdict has an earliest violation");
                println!("{}: false (earliest violation at position {pos})", p.name);
            }
            Verdict::True => println!("{}: true", p.name),
            Verdict::Inconclusive => println!("{}: inconclusive", p.name),
        }
    }
    Ok(if any_false { 1 } else { 0 })
}

fn cmd_synth(properties: &Path, theta: Option<i64>, out: Option<PathBuf>) -> Result<u8, CliError> {
    let text = std::fs::read_to_string(properties)
        .map_err(err(&format!("reading {}", properties.display())))?;
    let mut props =
        parse_properties(&text).map_err(err(&format!("parsing {}", properties.display())))?;
    let mut params = BTreeMap::new();
    if let Some(t) = theta {
        params.insert("theta".to_string(), t);
    }
    for p in &mut props {
        p.formula.bind_params(&params);
    }
    let mut failures = 0u32;
    for p in &props {
        let graph = monitor::compile(p.name.clone(), &p.formula)
            .map_err(|e| e.to_string())
            .and_then(|spec| monitor::synthesize(&spec).map_err(|e| e.to_string()));
        match graph {
            Ok(pg) => {
                let rendered = print_process(&pg);
                match &out {
                    Some(dir) => {
                        std::fs::create_dir_all(dir)
                            .map_err(err(&format!("creating {}", dir.display())))?;
                        let file = dir.join(format!("{}.pg", p.name));
                        std::fs::write(&file, rendered)
                            .map_err(err(&format!("writing {}", file.display())))?;
                        println!("{}: written to {}", p.name, file.display());
                    }
                    None => {
                        println!("# monitor {}", p.name);
                        print!("{rendered}");
                    }
                }
            }
            Err(e) => {
                failures += 1;
                eprintln!("{}: not synthesized: {e}", p.name);
            }
        }
    }
    Ok(if failures > 0 { 1 } else { 0 })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("BTRV_LOG")).init();
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Run(args) => cmd_run(args),
        Cmd::Check {
            trace,
            properties,
            theta,
        } => cmd_check(&trace, &properties, theta),
        Cmd::Synth {
            properties,
            theta,
            out,
        } => cmd_synth(&properties, theta, out),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
