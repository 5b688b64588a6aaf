//! Differential checks of the execution engine: the enabled-transition set
//! is compared against an independently written definitional oracle on
//! random small systems, buffer invariants are asserted at every visited
//! configuration, and recorded runs replay exactly.

use btrv_core::model::{
    enabled_transitions, run, step, Action, ChannelId, ChannelSystem, ChannelSystemBuilder,
    CommAction, CommDir, Configuration, Guard, Label, Payload, PgBuilder, RandomScheduler,
    ReplayScheduler, RunOptions, TransitionInstance,
};
use btrv_core::value::{Domain, Message, RelOp, Scalar};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn alphabet() -> Vec<Message> {
    vec![
        Message::tag("a"),
        Message::tag("b"),
        Message::of(vec![Scalar::Int(1)]),
    ]
}

/// A random two-process system: one channel in each direction with random
/// capacities, one `Any` variable per process, and a handful of random
/// transitions mixing internal actions, sends and receives.
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
                0 => Guard::cmp("x", 1, RelOp::Eq, Scalar::sym("a")),
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

/// Definitional oracle, written straight from the channel-system semantics:
/// an internal transition is enabled when its guard holds; a capacity-1
/// send needs an empty buffer; a capacity-1 receive needs a matching
/// buffered message; a capacity-0 exchange needs a sender and a receiver
/// transition that agree on the message, both guards holding.
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

fn assert_capacity_invariant(cs: &ChannelSystem, config: &Configuration) {
    for (ci, ch) in cs.channels.iter().enumerate() {
        if ch.capacity == 0 {
            assert!(
                config.buffers[ci].is_none(),
                "handshake channel {} must never buffer",
                ch.id
            );
        }
    }
}

#[test]
fn enabled_set_matches_definitional_oracle_on_random_systems() {
    let mut rng = StdRng::seed_from_u64(0xE17);
    for case in 0..1000 {
        let cs = random_system(&mut rng);
        let mut config = cs.initial_configuration();
        for stepno in 0..60 {
            assert_capacity_invariant(&cs, &config);
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
}

#[test]
fn recorded_choices_replay_to_the_same_trace() {
    let grid = btrv_core::scenario::Grid::parse(include_str!("../../../configs/default.map")).unwrap();
    let sc = btrv_core::scenario::build_scenario(
        grid,
        btrv_core::scenario::BatteryConfig::default(),
        None,
    )
    .unwrap();
    let opts = RunOptions {
        horizon: 3000,
        stop_on_violation: false,
    };
    let mut config = sc.system.initial_configuration();
    let mut sched = RandomScheduler::seeded(42);
    let original = run(&sc.system, &mut config, &mut sched, &opts, &mut []).unwrap();

    let mut config = sc.system.initial_configuration();
    let mut replay = ReplayScheduler::new(original.choices.clone());
    let replayed = run(&sc.system, &mut config, &mut replay, &opts, &mut []).unwrap();
    assert_eq!(original.entries, replayed.entries);
    assert_eq!(original.ticks, replayed.ticks);
}
