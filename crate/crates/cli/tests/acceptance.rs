//! End-to-end acceptance checks, one test per shipped guarantee. Each test
//! prints a single pass/fail line (visible with `--nocapture`).

use std::collections::BTreeMap;
use std::panic::{catch_unwind, resume_unwind, UnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use btrv_core::cond::MessageCondition;
use btrv_core::model::{
    enabled_transitions, run, step, Action, ChannelId, ChannelObserver, ChannelSystem,
    ChannelSystemBuilder, CommAction, CommDir, Configuration, EntryKind, Guard, Label, Payload,
    PgBuilder, ProgramGraph, RandomScheduler, RunOptions, Terminal, TransitionInstance, TssEntry,
};
use btrv_core::monitor::{compile as compile_monitor, Monitor, MonitorSpec, MonitorVerdict};
use btrv_core::scenario::{
    build_scenario, mission_tree, BatteryConfig, Fault, Grid, Scenario, ScenarioConfig,
};
use btrv_core::scope::{
    earliest_violation, earliest_violation_scan, evaluate, parse_formula, parse_properties, Event,
    Formula, Property, TimeBound, Tss, Verdict,
};
use btrv_core::trace::{parse_trace, write_trace, TraceLine};
use btrv_core::value::{Domain, Message, RelOp, Scalar};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const BTRV: &str = env!("CARGO_BIN_EXE_btrv");

fn config_path(name: &str) -> String {
    format!("{}/../../configs/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn criterion(name: &str, body: impl FnOnce() + UnwindSafe) {
    match catch_unwind(body) {
        Ok(()) => println!("acceptance {name}: pass"),
        Err(e) => {
            println!("acceptance {name}: fail");
            resume_unwind(e);
        }
    }
}

fn msg(parts: &[Scalar]) -> Message {
    Message::of(parts.to_vec())
}

fn sym(s: &str) -> Scalar {
    Scalar::sym(s)
}

fn default_scenario(fault: Option<Fault>) -> Scenario {
    let grid = Grid::parse(include_str!("../../../configs/default.map")).unwrap();
    build_scenario(grid, BatteryConfig::default(), fault).unwrap()
}

fn bound_properties(theta: i64) -> Vec<Property> {
    let mut props =
        parse_properties(include_str!("../../../configs/default.scope")).unwrap();
    let params: BTreeMap<String, i64> = [("theta".to_string(), theta)].into_iter().collect();
    for p in &mut props {
        assert!(p.formula.bind_params(&params).is_empty());
    }
    props
}

fn monitored_run(
    sc: &Scenario,
    props: &[Property],
    seed: u64,
    horizon: u64,
    stop: bool,
) -> (btrv_core::model::ExecutionTrace, Vec<Monitor>) {
    let specs: Vec<MonitorSpec> = props
        .iter()
        .map(|p| compile_monitor(&p.name, &p.formula).unwrap())
        .collect();
    let mut mons: Vec<Monitor> = specs
        .iter()
        .map(|s| Monitor::attach(s, &sc.system).unwrap())
        .collect();
    let mut obs: Vec<&mut dyn ChannelObserver> = mons
        .iter_mut()
        .map(|m| m as &mut dyn ChannelObserver)
        .collect();
    let mut config = sc.system.initial_configuration();
    let mut sched = RandomScheduler::seeded(seed);
    let opts = RunOptions {
        horizon,
        stop_on_violation: stop,
    };
    let trace = run(&sc.system, &mut config, &mut sched, &opts, &mut obs).unwrap();
    (trace, mons)
}

/// Transmissions on one channel as (tick, message, position).
fn on_channel(
    sc: &Scenario,
    entries: &[TssEntry],
    from: &str,
    to: &str,
) -> Vec<(u64, Message, usize)> {
    let ci = sc
        .system
        .channel_index(&ChannelId::new(from, to))
        .unwrap();
    entries
        .iter()
        .enumerate()
        .filter_map(|(pos, e)| match &e.kind {
            EntryKind::Transmission { channel, message } if *channel == ci => {
                Some((e.tick, message.clone(), pos))
            }
            _ => None,
        })
        .collect()
}

// --- 1: battery-fault experiment through the CLI ---------------------------

#[test]
fn criterion_1_forced_low_battery_violation() {
    criterion("1 forced-low-battery run violates the range property", || {
        let out_trace = tempfile::NamedTempFile::new().unwrap();
        let started = Instant::now();
        let output = Command::new(BTRV)
            .args([
                "run",
                &config_path("experiment1.toml"),
                "--report",
                "machine",
                "--trace-out",
            ])
            .arg(out_trace.path())
            .output()
            .unwrap();
        let elapsed = started.elapsed();
        assert!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
        assert_eq!(output.status.code(), Some(1), "{output:?}");

        let report: serde_json::Value =
            serde_json::from_slice(&output.stdout).unwrap();
        let mon = report["monitors"]
            .as_array()
            .unwrap()
            .iter()
            .find(|m| m["name"] == "battery_report_in_range")
            .unwrap();
        assert_eq!(mon["verdict"], "violated");
        assert_eq!(mon["channel"], "BatteryReader->BatteryLevel");
        assert_eq!(mon["message"], "[<ok>, 10]");

        // The violation position is exactly the first (and only) crossing of
        // the forced reading on the reader's reply channel.
        let position = mon["position"].as_u64().unwrap() as usize;
        let text = std::fs::read_to_string(out_trace.path()).unwrap();
        let lines = parse_trace(&text).unwrap();
        let reply_channel = ChannelId::new("BatteryReader", "BatteryLevel");
        let forced = msg(&[sym("ok"), Scalar::Int(10)]);
        let crossings: Vec<usize> = lines
            .iter()
            .enumerate()
            .filter_map(|(i, l)| match l {
                TraceLine::Tx {
                    channel, message, ..
                } if *channel == reply_channel && *message == forced => Some(i),
                _ => None,
            })
            .collect();
        assert_eq!(crossings, vec![position]);
    });
}

// --- 2: threshold-bug experiment through the CLI ---------------------------

#[test]
fn criterion_2_threshold_bug_misses_the_recharge_deadline() {
    criterion("2 skill-threshold bug violates the response property", || {
        let started = Instant::now();
        let output = Command::new(BTRV)
            .args([
                "run",
                &config_path("experiment2.toml"),
                "--report",
                "machine",
            ])
            .output()
            .unwrap();
        let elapsed = started.elapsed();
        assert!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
        assert_eq!(output.status.code(), Some(1), "{output:?}");
        let report: serde_json::Value =
            serde_json::from_slice(&output.stdout).unwrap();
        let mon = report["monitors"]
            .as_array()
            .unwrap()
            .iter()
            .find(|m| m["name"] == "recharge_when_low")
            .unwrap();
        assert_eq!(mon["verdict"], "violated");

        // An unfaulted run with the identical seed and horizon keeps the
        // response monitor away from Err.
        let (config, _, _) =
            ScenarioConfig::load(Path::new(&config_path("experiment2.toml"))).unwrap();
        let sc = default_scenario(None);
        let props = bound_properties(config.run.theta);
        let (_, mons) = monitored_run(&sc, &props, config.run.seed, config.run.horizon, false);
        for m in &mons {
            assert_eq!(*m.verdict(), MonitorVerdict::Running, "{}", m.name());
            assert!(
                ["I", "I1", "C1", "S", "C2"].contains(&m.current_state()),
                "{} ended in {}",
                m.name(),
                m.current_state()
            );
        }
    });
}

// --- 3: nominal mission ----------------------------------------------------

#[test]
fn criterion_3_nominal_mission_recharges_and_arrives() {
    criterion("3 nominal run recharges on the way and arrives clean", || {
        let (config, grid, _) =
            ScenarioConfig::load(Path::new(&config_path("default.toml"))).unwrap();
        let sc = build_scenario(grid, config.battery.clone(), None).unwrap();
        let props = bound_properties(config.run.theta);
        let (trace, mons) = monitored_run(&sc, &props, config.run.seed, 5000, false);
        assert_eq!(trace.terminal, Terminal::Horizon);
        for m in &mons {
            assert_eq!(*m.verdict(), MonitorVerdict::Running, "{}", m.name());
        }

        let readings = on_channel(&sc, &trace.entries, "BatteryReader", "BatteryLevel");
        let level = |m: &Message| match m.parts().get(1) {
            Some(Scalar::Int(n)) => *n,
            other => panic!("level reply carried {other:?}"),
        };
        let first_low = readings
            .iter()
            .find(|(_, m, _)| level(m) < 30)
            .expect("the battery must drop below 30 on the way")
            .0;
        let commands = on_channel(&sc, &trace.entries, "GoToRechargingStation", "Navigation");
        let recharge_cmd = commands
            .iter()
            .find(|(_, m, _)| *m == msg(&[sym("start_navigation"), sym("RechargingStation")]))
            .expect("a recharge navigation command must be issued");
        assert!(
            recharge_cmd.0 >= first_low,
            "command at tick {} before first low reading at {first_low}",
            recharge_cmd.0
        );
        let full = readings
            .iter()
            .find(|(_, m, _)| level(m) == 100)
            .expect("recharging must complete");
        assert!(full.0 > recharge_cmd.0);
        let arrivals = on_channel(&sc, &trace.entries, "Navigation", "GoToDestination");
        let arrived = arrivals
            .iter()
            .find(|(_, m, _)| *m == msg(&[sym("ok"), sym("reached")]))
            .expect("the mission must arrive at the destination");
        assert!(arrived.0 > full.0, "arrival must follow the recharge");
    });
}

// --- 4: online/offline oracle equivalence ----------------------------------

fn micro_system() -> ChannelSystem {
    let mut b = ChannelSystemBuilder::new();
    let mut p = PgBuilder::new("P");
    p.initial("L");
    b.process(p.build().unwrap()).unwrap();
    let mut q = PgBuilder::new("Q");
    q.initial("L");
    b.process(q.build().unwrap()).unwrap();
    b.channel("P", "Q", 1).unwrap();
    b.channel("Q", "P", 0).unwrap();
    b.tick_channel("Q", "P");
    b.build().unwrap()
}

#[derive(Clone, Copy)]
enum Ev {
    Tx(&'static str),
    Tick,
}

const EVENTS: [Ev; 4] = [Ev::Tx("a"), Ev::Tx("b"), Ev::Tx("c"), Ev::Tick];

fn entries_of(seq: &[Ev]) -> Vec<TssEntry> {
    let mut ticks: u64 = 0;
    let mut tau: u64 = 0;
    seq.iter()
        .map(|ev| match ev {
            Ev::Tx(tag) => TssEntry {
                tick: tau,
                kind: EntryKind::Transmission {
                    channel: 0,
                    message: Message::tag(*tag),
                },
            },
            Ev::Tick => {
                ticks += 1;
                tau = ticks - 1;
                TssEntry {
                    tick: tau,
                    kind: EntryKind::TickStart,
                }
            }
        })
        .collect()
}

fn feed_monitor(spec: &MonitorSpec, cs: &ChannelSystem, entries: &[TssEntry]) -> Option<usize> {
    let mut m = Monitor::attach(spec, cs).unwrap();
    for (pos, e) in entries.iter().enumerate() {
        match &e.kind {
            EntryKind::Transmission { channel, message } => {
                m.on_transmission(*channel, message, e.tick, pos);
            }
            EntryKind::TickStart => {
                m.on_tick(e.tick, pos);
            }
        }
    }
    match m.verdict() {
        MonitorVerdict::Running => None,
        MonitorVerdict::Violated { position, .. } => Some(*position),
    }
}

#[test]
fn criterion_4_online_and_offline_verdicts_agree() {
    criterion("4 online monitors agree with offline evaluation", || {
        // Exhaustive: every event sequence of length <= 6 over a three-message
        // alphabet plus ticks, on a two-process system.
        let cs = micro_system();
        let texts = [
            "always (not (P, Q, m[1] = <c>))",
            "always ((P, Q, m[1] = <a>) implies time_until((P, Q, m[1] = <b>)) < 2)",
        ];
        let formulas: Vec<Formula> =
            texts.iter().map(|t| parse_formula(t).unwrap()).collect();
        let specs: Vec<MonitorSpec> = formulas
            .iter()
            .enumerate()
            .map(|(i, f)| compile_monitor(format!("p{i}"), f).unwrap())
            .collect();
        for len in 0..=6usize {
            let mut index = vec![0usize; len];
            loop {
                let seq: Vec<Ev> = index.iter().map(|i| EVENTS[*i]).collect();
                let entries = entries_of(&seq);
                let tss = Tss::from_run(&cs, entries.clone(), false);
                for (f, spec) in formulas.iter().zip(&specs) {
                    let online = feed_monitor(spec, &cs, &entries);
                    let offline = evaluate(f, &tss).unwrap();
                    assert_eq!(online.is_some(), offline == Verdict::False);
                    let earliest = earliest_violation(f, &tss).unwrap();
                    assert_eq!(earliest, earliest_violation_scan(f, &tss).unwrap());
                    assert_eq!(online, earliest, "position split on {entries:?}");
                }
                let mut i = 0;
                loop {
                    if i == len {
                        break;
                    }
                    index[i] += 1;
                    if index[i] < EVENTS.len() {
                        break;
                    }
                    index[i] = 0;
                    i += 1;
                }
                if i == len {
                    break;
                }
            }
        }

        // Randomized: 200 scenario runs with random faults and seeds.
        let mut rng = StdRng::seed_from_u64(0xACCE);
        let props = bound_properties(40);
        for case in 0..200 {
            let fault = match rng.gen_range(0..4) {
                0 => None,
                1 => Some(Fault::ForceBatteryLevel {
                    level: rng.gen_range(0..40),
                    from_tick: rng.gen_range(0..60),
                }),
                2 => Some(Fault::SkillThresholdBug {
                    threshold: rng.gen_range(10..=25),
                }),
                _ => Some(Fault::OverrideNavigation {
                    from_tick: rng.gen_range(0..30),
                    to_tick: rng.gen_range(30..90),
                }),
            };
            let sc = default_scenario(fault.clone());
            let seed = rng.gen();
            let (trace, mons) = monitored_run(&sc, &props, seed, 6000, false);
            let tss = Tss::from_run(&sc.system, trace.entries.clone(), false);
            for (p, m) in props.iter().zip(&mons) {
                let offline = earliest_violation(&p.formula, &tss).unwrap();
                let online = match m.verdict() {
                    MonitorVerdict::Running => None,
                    MonitorVerdict::Violated { position, .. } => Some(*position),
                };
                assert_eq!(
                    online, offline,
                    "case {case} ({fault:?}, seed {seed}): {}",
                    p.name
                );
            }
        }
    });
}

// --- 5: monitors never perturb the run -------------------------------------

#[test]
fn criterion_5_monitoring_is_non_interfering() {
    criterion("5 instrumented runs equal unmonitored runs", || {
        let props = bound_properties(100);
        let sc = default_scenario(None);
        let opts = RunOptions {
            horizon: 2500,
            stop_on_violation: false,
        };
        for seed in 0..50u64 {
            let mut plain_config = sc.system.initial_configuration();
            let mut sched = RandomScheduler::seeded(seed);
            let plain =
                run(&sc.system, &mut plain_config, &mut sched, &opts, &mut []).unwrap();
            let (monitored, _) = monitored_run(&sc, &props, seed, 2500, false);
            assert_eq!(
                write_trace(&sc.system, &plain),
                write_trace(&sc.system, &monitored),
                "seed {seed}"
            );
        }
    });
}

// --- 6: behavior-tree determinism ------------------------------------------

/// Answers the i-th request with the i-th scripted reply (repeating the last
/// forever); a guard on the received message absorbs halts deterministically.
fn scripted_skill(name: &str, leaf: &str, replies: &[Message]) -> ProgramGraph {
    let mut b = PgBuilder::new(name);
    b.initial("R0");
    b.var("req", Domain::Any, Message::tag("none")).unwrap();
    let is_halt = Guard::cmp("req", 1, RelOp::Eq, sym("halt"));
    for (i, reply) in replies.iter().enumerate() {
        let r = format!("R{i}");
        let got = format!("G{i}");
        let s = format!("S{i}");
        let next = if i + 1 < replies.len() {
            format!("R{}", i + 1)
        } else {
            r.clone()
        };
        b.comm(&r, CommAction::recv_var(ChannelId::new(leaf, name), "req"), &got);
        b.transition(&got, is_halt.clone(), Label::Internal(Action::Nop), &r);
        b.transition(
            &got,
            Guard::negate(is_halt.clone()),
            Label::Internal(Action::Nop),
            &s,
        );
        b.comm(
            &s,
            CommAction::send_lit(ChannelId::new(name, leaf), reply.clone()),
            &next,
        );
    }
    b.build().unwrap()
}

fn random_scripts(rng: &mut StdRng) -> Vec<(&'static str, &'static str, Vec<Message>)> {
    let script = |rng: &mut StdRng, pool: &dyn Fn(&mut StdRng) -> Message| {
        let len = rng.gen_range(1..=30);
        (0..len).map(|_| pool(rng)).collect::<Vec<_>>()
    };
    vec![
        (
            "BatteryLevel",
            "bt.BatteryLevelAbove30",
            script(rng, &|rng| {
                if rng.gen_bool(0.9) {
                    msg(&[sym("ok"), Scalar::Int(rng.gen_range(0..=100))])
                } else {
                    msg(&[sym("error")])
                }
            }),
        ),
        (
            "BatteryCharging",
            "bt.BatteryNotRecharging",
            script(rng, &|rng| msg(&[sym("ok"), Scalar::Bool(rng.gen_bool(0.5))])),
        ),
        (
            "GoToRechargingStation",
            "bt.GoToRechargingStation",
            script(rng, &|rng| match rng.gen_range(0..3) {
                0 => msg(&[sym("running")]),
                1 => msg(&[sym("success")]),
                _ => msg(&[sym("failure")]),
            }),
        ),
        (
            "GoToDestination",
            "bt.GoToDestination",
            script(rng, &|rng| match rng.gen_range(0..3) {
                0 => msg(&[sym("ok"), sym("running")]),
                1 => msg(&[sym("ok"), sym("reached")]),
                _ => msg(&[sym("failed")]),
            }),
        ),
        (
            "WaitForUser",
            "bt.WaitForUser",
            script(rng, &|_| msg(&[sym("running")])),
        ),
    ]
}

fn scripted_mission_system(scripts: &[(&str, &str, Vec<Message>)]) -> ChannelSystem {
    let compiled = btrv_core::bt::compile(&mission_tree(30), "Ticker").unwrap();
    let mut b = ChannelSystemBuilder::new();
    b.process(btrv_core::bt::tick_generator("Ticker", &compiled.root_process).unwrap())
        .unwrap();
    for p in compiled.processes {
        b.process(p).unwrap();
    }
    for (skill, leaf, replies) in scripts {
        b.process(scripted_skill(skill, leaf, replies)).unwrap();
    }
    for (src, dst, cap) in &compiled.channels {
        b.channel(src.clone(), dst.clone(), *cap).unwrap();
    }
    b.tick_channel("Ticker", &compiled.root_process);
    b.build().unwrap()
}

fn root_statuses(cs: &ChannelSystem, seed: u64, horizon: u64) -> Vec<String> {
    let status_ch = cs
        .channel_index(&ChannelId::new("bt.root", "Ticker"))
        .unwrap();
    let mut config = cs.initial_configuration();
    let mut sched = RandomScheduler::seeded(seed);
    let opts = RunOptions {
        horizon,
        stop_on_violation: false,
    };
    let trace = run(cs, &mut config, &mut sched, &opts, &mut []).unwrap();
    trace
        .entries
        .iter()
        .filter_map(|e| match &e.kind {
            EntryKind::Transmission { channel, message } if *channel == status_ch => {
                Some(message.to_string())
            }
            _ => None,
        })
        .collect()
}

#[test]
fn criterion_6_tree_execution_is_deterministic() {
    criterion("6 scripted replies determine the root-status sequence", || {
        let mut rng = StdRng::seed_from_u64(0xDE7);
        for case in 0..100u64 {
            let scripts = random_scripts(&mut rng);
            let cs = scripted_mission_system(&scripts);
            let base = root_statuses(&cs, case * 2 + 1, 6000);
            let other = root_statuses(&cs, case * 7 + 2, 6000);
            assert!(base.len() >= 10, "case {case}: only {} ticks", base.len());
            let shorter = base.len().min(other.len());
            assert_eq!(base[..shorter], other[..shorter], "case {case}");
        }
    });
}

// --- 7: channel-system semantics -------------------------------------------

fn alphabet() -> Vec<Message> {
    vec![
        Message::tag("a"),
        Message::tag("b"),
        Message::of(vec![Scalar::Int(1)]),
    ]
}

fn random_system(rng: &mut StdRng) -> ChannelSystem {
    let caps = [rng.gen_range(0..=1u8), rng.gen_range(0..=1u8)];
    let msgs = alphabet();
    let mut b = ChannelSystemBuilder::new();
    for (pi, name) in ["P0", "P1"].iter().enumerate() {
        let out = ChannelId::new(*name, if pi == 0 { "P1" } else { "P0" });
        let inc = ChannelId::new(if pi == 0 { "P1" } else { "P0" }, *name);
        let mut pb = PgBuilder::new(*name);
        pb.initial("L0");
        pb.var("x", Domain::Any, msgs[rng.gen_range(0..msgs.len())].clone())
            .unwrap();
        for loc in ["L0", "L1", "L2"] {
            pb.loc(loc);
        }
        let n = rng.gen_range(4..=7);
        for _ in 0..n {
            let from = format!("L{}", rng.gen_range(0..3));
            let to = format!("L{}", rng.gen_range(0..3));
            let guard = match rng.gen_range(0..4) {
                0 => Guard::cmp("x", 1, RelOp::Eq, sym("a")),
                _ => Guard::True,
            };
            let m = msgs[rng.gen_range(0..msgs.len())].clone();
            let label = match rng.gen_range(0..6) {
                0 => Label::Internal(Action::Nop),
                1 => Label::Internal(Action::assign(
                    "x",
                    vec![btrv_core::model::Expr::Const(m.parts()[0].clone())],
                )),
                2 => Label::Comm(CommAction::send_lit(out.clone(), m)),
                3 => Label::Comm(CommAction::send_var(out.clone(), "x")),
                4 => Label::Comm(CommAction::recv_lit(inc.clone(), m)),
                _ => Label::Comm(CommAction::recv_var(inc.clone(), "x")),
            };
            pb.transition(&from, guard, label, &to);
        }
        b.process(pb.build().unwrap()).unwrap();
    }
    b.channel("P0", "P1", caps[0]).unwrap();
    b.channel("P1", "P0", caps[1]).unwrap();
    b.build().unwrap()
}

/// Definitional oracle for the enabled-transition set, written straight from
/// the semantics.
fn oracle_enabled(cs: &ChannelSystem, config: &Configuration) -> Vec<TransitionInstance> {
    let mut out = Vec::new();
    let at = |pi: usize, t: &btrv_core::model::Transition| {
        t.from == config.locations[pi] && t.guard.eval(&config.vars)
    };
    let message_of = |payload: &Payload| -> Option<Message> {
        match payload {
            Payload::Lit(m) => Some(m.clone()),
            Payload::Var(v) => config.vars.get(v).cloned(),
        }
    };
    let accepts = |payload: &Payload, m: &Message| match payload {
        Payload::Var(_) => true,
        Payload::Lit(l) => l == m,
    };
    for (pi, pg) in cs.processes.iter().enumerate() {
        for (ti, t) in pg.transitions.iter().enumerate() {
            if !at(pi, t) {
                continue;
            }
            match &t.label {
                Label::Internal(_) => out.push(TransitionInstance::Internal {
                    proc: pi,
                    transition: ti,
                }),
                Label::Comm(c) => {
                    let ci = cs.channel_index(&c.channel).unwrap();
                    match (c.dir, cs.channels[ci].capacity) {
                        (CommDir::Send, 1) if config.buffers[ci].is_none() => {
                            out.push(TransitionInstance::Send {
                                proc: pi,
                                transition: ti,
                                channel: ci,
                            })
                        }
                        (CommDir::Recv, 1) => {
                            if let Some(m) = &config.buffers[ci] {
                                if accepts(&c.payload, m) {
                                    out.push(TransitionInstance::Receive {
                                        proc: pi,
                                        transition: ti,
                                        channel: ci,
                                    });
                                }
                            }
                        }
                        (CommDir::Send, 0) => {
                            let m = match message_of(&c.payload) {
                                Some(m) => m,
                                None => continue,
                            };
                            let qi = cs.process_index(&c.channel.dest).unwrap();
                            for (rti, rt) in cs.processes[qi].transitions.iter().enumerate() {
                                if !at(qi, rt) {
                                    continue;
                                }
                                if let Label::Comm(rc) = &rt.label {
                                    if rc.dir == CommDir::Recv
                                        && rc.channel == c.channel
                                        && accepts(&rc.payload, &m)
                                    {
                                        out.push(TransitionInstance::Handshake {
                                            sender: pi,
                                            send_transition: ti,
                                            receiver: qi,
                                            recv_transition: rti,
                                            channel: ci,
                                        });
                                    }
                                }
                            }
                        }
                        _ => {}
                    }
                }
            }
        }
    }
    out
}

fn as_sorted_keys(instances: &[TransitionInstance]) -> Vec<String> {
    let mut keys: Vec<String> = instances.iter().map(|i| format!("{i:?}")).collect();
    keys.sort();
    keys
}

#[test]
fn criterion_7_enabled_set_matches_the_semantics() {
    criterion("7 enabled transitions match the definitional oracle", || {
        let mut rng = StdRng::seed_from_u64(0x7AC7);
        for case in 0..1000 {
            let cs = random_system(&mut rng);
            let mut config = cs.initial_configuration();
            for stepno in 0..60 {
                for (ci, ch) in cs.channels.iter().enumerate() {
                    if ch.capacity == 0 {
                        assert!(
                            config.buffers[ci].is_none(),
                            "handshake channel {} buffered",
                            ch.id
                        );
                    }
                }
                let enabled = enabled_transitions(&cs, &config);
                let expected = oracle_enabled(&cs, &config);
                assert_eq!(
                    as_sorted_keys(&enabled),
                    as_sorted_keys(&expected),
                    "case {case}, step {stepno}"
                );
                if enabled.is_empty() {
                    break;
                }
                let pick = rng.gen_range(0..enabled.len());
                step(&cs, &mut config, &enabled[pick], 0).unwrap();
            }
        }
    });
}

// --- 8: property-language round trip ----------------------------------------

fn random_condition(rng: &mut StdRng, depth: usize) -> MessageCondition {
    if depth == 0 || rng.gen_bool(0.5) {
        return if rng.gen_bool(0.15) {
            MessageCondition::True
        } else {
            let op = [
                RelOp::Eq,
                RelOp::Ne,
                RelOp::Lt,
                RelOp::Le,
                RelOp::Gt,
                RelOp::Ge,
            ][rng.gen_range(0..6)];
            let rhs = match rng.gen_range(0..3) {
                0 => Scalar::Int(rng.gen_range(0..1000)),
                1 => sym(["ok", "running", "reached"][rng.gen_range(0..3)]),
                _ => Scalar::Bool(rng.gen_bool(0.5)),
            };
            MessageCondition::cmp(rng.gen_range(1..5), op, rhs)
        };
    }
    let a = random_condition(rng, depth - 1);
    match rng.gen_range(0..3) {
        0 => MessageCondition::negate(a),
        1 => MessageCondition::and(a, random_condition(rng, depth - 1)),
        _ => MessageCondition::or(a, random_condition(rng, depth - 1)),
    }
}

fn random_event(rng: &mut StdRng) -> Event {
    let names = ["P", "Q", "Reader", "Nav_2"];
    Event::new(
        names[rng.gen_range(0..4)],
        names[rng.gen_range(0..4)],
        random_condition(rng, 2),
    )
}

fn random_formula(rng: &mut StdRng, depth: usize) -> Formula {
    if depth == 0 || rng.gen_bool(0.3) {
        return match rng.gen_range(0..3) {
            0 => Formula::True,
            1 => Formula::Event(random_event(rng)),
            _ => Formula::TimeUntil {
                event: random_event(rng),
                op: [
                    RelOp::Eq,
                    RelOp::Ne,
                    RelOp::Lt,
                    RelOp::Le,
                    RelOp::Gt,
                    RelOp::Ge,
                ][rng.gen_range(0..6)],
                bound: if rng.gen_bool(0.5) {
                    TimeBound::Const(rng.gen_range(0..500))
                } else {
                    TimeBound::Param(["theta", "delta"][rng.gen_range(0..2)].to_string())
                },
            },
        };
    }
    match rng.gen_range(0..5) {
        0 => Formula::not(random_formula(rng, depth - 1)),
        1 => Formula::next(random_formula(rng, depth - 1)),
        2 => Formula::and(
            random_formula(rng, depth - 1),
            random_formula(rng, depth - 1),
        ),
        3 => Formula::or(
            random_formula(rng, depth - 1),
            random_formula(rng, depth - 1),
        ),
        _ => Formula::until(
            random_formula(rng, depth - 1),
            random_formula(rng, depth - 1),
        ),
    }
}

#[test]
fn criterion_8_printing_and_parsing_are_inverse() {
    criterion("8 formulas survive a print/parse round trip", || {
        let mut rng = StdRng::seed_from_u64(0x8AD);
        for _ in 0..1000 {
            let f = random_formula(&mut rng, 6);
            let text = f.to_string();
            let parsed = parse_formula(&text)
                .unwrap_or_else(|e| panic!("failed to reparse {text:?}: {e}"));
            assert_eq!(parsed, f);
        }

        // The shipped properties parse to exactly the expected structures.
        let props =
            parse_properties(include_str!("../../../configs/default.scope")).unwrap();
        assert_eq!(props.len(), 2);
        let cmp = MessageCondition::cmp;
        let phi1 = Formula::always(Formula::implies(
            Formula::Event(Event::new(
                "BatteryReader",
                "BatteryLevel",
                cmp(1, RelOp::Eq, sym("ok")),
            )),
            Formula::Event(Event::new(
                "BatteryReader",
                "BatteryLevel",
                cmp(2, RelOp::Ge, Scalar::Int(20)),
            )),
        ));
        assert_eq!(props[0].formula, phi1);
        let phi2 = Formula::always(Formula::implies(
            Formula::and(
                Formula::Event(Event::new(
                    "Navigation",
                    "GoToDestination",
                    MessageCondition::and(
                        cmp(1, RelOp::Eq, sym("ok")),
                        cmp(2, RelOp::Eq, sym("running")),
                    ),
                )),
                Formula::Event(Event::new(
                    "BatteryReader",
                    "BatteryLevel",
                    MessageCondition::and(
                        cmp(1, RelOp::Eq, sym("ok")),
                        cmp(2, RelOp::Le, Scalar::Int(30)),
                    ),
                )),
            ),
            Formula::TimeUntil {
                event: Event::new(
                    "GoToRechargingStation",
                    "Navigation",
                    MessageCondition::and(
                        cmp(1, RelOp::Eq, sym("start_navigation")),
                        cmp(2, RelOp::Eq, sym("RechargingStation")),
                    ),
                ),
                op: RelOp::Lt,
                bound: TimeBound::Param("theta".into()),
            },
        ));
        assert_eq!(props[1].formula, phi2);
    });
}
