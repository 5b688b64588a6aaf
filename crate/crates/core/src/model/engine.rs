//! Interleaving execution of channel systems: enabled-transition
//! enumeration, single steps, schedulers, and full runs that produce timed
//! state sequences.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::ModelError;
use crate::model::guard::EffectCtx;
use crate::model::pg::{CommDir, Label, Payload};
use crate::model::system::{ChannelSystem, Configuration};
use crate::value::Message;

/// One executable step of the composed system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransitionInstance {
    /// An internal action of one process.
    Internal { proc: usize, transition: usize },
    /// A deposit into an empty capacity-1 buffer.
    Send {
        proc: usize,
        transition: usize,
        channel: usize,
    },
    /// An extraction from a full capacity-1 buffer.
    Receive {
        proc: usize,
        transition: usize,
        channel: usize,
    },
    /// A synchronous exchange on a capacity-0 channel.
    Handshake {
        sender: usize,
        send_transition: usize,
        receiver: usize,
        recv_transition: usize,
        channel: usize,
    },
}

/// Resolves what a send would transmit in the given configuration.
fn sent_message(
    cs: &ChannelSystem,
    config: &Configuration,
    proc: usize,
    transition: usize,
) -> Option<Message> {
    match &cs.processes[proc].transitions[transition].label {
        Label::Comm(c) if c.dir == CommDir::Send => match &c.payload {
            Payload::Lit(m) => Some(m.clone()),
            Payload::Var(v) => config.vars.get(v).cloned(),
        },
        _ => None,
    }
}

/// Whether a receive payload accepts `msg`: a variable accepts anything, a
/// literal only an exactly equal message.
fn recv_accepts(payload: &Payload, msg: &Message) -> bool {
    match payload {
        Payload::Var(_) => true,
        Payload::Lit(lit) => lit == msg,
    }
}

/// All transitions executable in `config`, in a deterministic order
/// (processes in declaration order, transitions in declaration order;
/// handshakes enumerated from the sender side).
pub fn enabled_transitions(cs: &ChannelSystem, config: &Configuration) -> Vec<TransitionInstance> {
    let mut out = Vec::new();
    for (pi, pg) in cs.processes.iter().enumerate() {
        for (ti, t) in pg.transitions.iter().enumerate() {
            if t.from != config.locations[pi] || !t.guard.eval(&config.vars) {
                continue;
            }
            match &t.label {
                Label::Internal(_) => out.push(TransitionInstance::Internal {
                    proc: pi,
                    transition: ti,
                }),
                Label::Comm(c) => {
                    let ci = match cs.channel_index(&c.channel) {
                        Some(ci) => ci,
                        None => continue,
                    };
                    let cap = cs.channels[ci].capacity;
                    match (c.dir, cap) {
                        (CommDir::Send, 1) => {
                            if config.buffers[ci].is_none() {
                                out.push(TransitionInstance::Send {
                                    proc: pi,
                                    transition: ti,
                                    channel: ci,
                                });
                            }
                        }
                        (CommDir::Recv, 1) => {
                            if let Some(msg) = &config.buffers[ci] {
                                if recv_accepts(&c.payload, msg) {
                                    out.push(TransitionInstance::Receive {
                                        proc: pi,
                                        transition: ti,
                                        channel: ci,
                                    });
                                }
                            }
                        }
                        (CommDir::Send, 0) => {
                            let msg = match sent_message(cs, config, pi, ti) {
                                Some(m) => m,
                                None => continue,
                            };
                            let qi = match cs.process_index(&c.channel.dest) {
                                Some(q) => q,
                                None => continue,
                            };
                            for (rti, rt) in cs.processes[qi].transitions.iter().enumerate() {
                                if rt.from != config.locations[qi]
                                    || !rt.guard.eval(&config.vars)
                                {
                                    continue;
                                }
                                if let Label::Comm(rc) = &rt.label {
                                    if rc.dir == CommDir::Recv
                                        && rc.channel == c.channel
                                        && recv_accepts(&rc.payload, &msg)
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
                        // Receives on capacity-0 channels only fire as the
                        // receiving half of a handshake.
                        (CommDir::Recv, 0) => {}
                        _ => {}
                    }
                }
            }
        }
    }
    out
}

/// What a step transmitted, if anything.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transmission {
    pub channel: usize,
    pub message: Message,
}

/// Executes one transition instance, re-checking enabledness first.
/// Returns the transmission performed by the step (buffer deposit or
/// handshake), if any.
pub fn step(
    cs: &ChannelSystem,
    config: &mut Configuration,
    instance: &TransitionInstance,
    tick: u64,
) -> Result<Option<Transmission>, ModelError> {
    let enabled = |pi: usize, ti: usize| -> bool {
        let t = &cs.processes[pi].transitions[ti];
        t.from == config.locations[pi] && t.guard.eval(&config.vars)
    };
    match instance {
        TransitionInstance::Internal { proc, transition } => {
            if !enabled(*proc, *transition) {
                return Err(ModelError::NotEnabled(format!("{instance:?}")));
            }
            let t = &cs.processes[*proc].transitions[*transition];
            if let Label::Internal(a) = &t.label {
                let mut ctx = EffectCtx {
                    vars: &mut config.vars,
                    tick,
                };
                a.apply(&mut ctx)?;
            }
            config.locations[*proc] = t.to;
            Ok(None)
        }
        TransitionInstance::Send {
            proc,
            transition,
            channel,
        } => {
            if !enabled(*proc, *transition) || config.buffers[*channel].is_some() {
                return Err(ModelError::NotEnabled(format!("{instance:?}")));
            }
            let msg = sent_message(cs, config, *proc, *transition)
                .ok_or_else(|| ModelError::NotEnabled(format!("{instance:?}")))?;
            config.buffers[*channel] = Some(msg.clone());
            config.locations[*proc] = cs.processes[*proc].transitions[*transition].to;
            Ok(Some(Transmission {
                channel: *channel,
                message: msg,
            }))
        }
        TransitionInstance::Receive {
            proc,
            transition,
            channel,
        } => {
            let msg = match &config.buffers[*channel] {
                Some(m) => m.clone(),
                None => return Err(ModelError::NotEnabled(format!("{instance:?}"))),
            };
            if !enabled(*proc, *transition) {
                return Err(ModelError::NotEnabled(format!("{instance:?}")));
            }
            let t = &cs.processes[*proc].transitions[*transition];
            match &t.label {
                Label::Comm(c) if c.dir == CommDir::Recv => {
                    if !recv_accepts(&c.payload, &msg) {
                        return Err(ModelError::NotEnabled(format!("{instance:?}")));
                    }
                    if let Payload::Var(v) = &c.payload {
                        config.vars.insert(v.clone(), msg);
                    }
                }
                _ => return Err(ModelError::NotEnabled(format!("{instance:?}"))),
            }
            config.buffers[*channel] = None;
            config.locations[*proc] = t.to;
            Ok(None)
        }
        TransitionInstance::Handshake {
            sender,
            send_transition,
            receiver,
            recv_transition,
            channel,
        } => {
            if !enabled(*sender, *send_transition) || !enabled(*receiver, *recv_transition) {
                return Err(ModelError::NotEnabled(format!("{instance:?}")));
            }
            let msg = sent_message(cs, config, *sender, *send_transition)
                .ok_or_else(|| ModelError::NotEnabled(format!("{instance:?}")))?;
            let rt = &cs.processes[*receiver].transitions[*recv_transition];
            match &rt.label {
                Label::Comm(rc) if rc.dir == CommDir::Recv => {
                    if !recv_accepts(&rc.payload, &msg) {
                        return Err(ModelError::NotEnabled(format!("{instance:?}")));
                    }
                    if let Payload::Var(v) = &rc.payload {
                        config.vars.insert(v.clone(), msg.clone());
                    }
                }
                _ => return Err(ModelError::NotEnabled(format!("{instance:?}"))),
            }
            config.locations[*sender] = cs.processes[*sender].transitions[*send_transition].to;
            config.locations[*receiver] = rt.to;
            Ok(Some(Transmission {
                channel: *channel,
                message: msg,
            }))
        }
    }
}

/// Picks the next transition among the enabled ones. Returning `None` ends
/// the run early (used by replay when its recording is exhausted).
pub trait Scheduler {
    fn choose(&mut self, enabled: &[TransitionInstance]) -> Option<usize>;
}

/// Uniformly random choices from a seeded stream; identical seeds give
/// identical runs.
pub struct RandomScheduler {
    rng: ChaCha8Rng,
}

impl RandomScheduler {
    pub fn seeded(seed: u64) -> Self {
        RandomScheduler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Scheduler for RandomScheduler {
    fn choose(&mut self, enabled: &[TransitionInstance]) -> Option<usize> {
        if enabled.is_empty() {
            None
        } else {
            Some(self.rng.gen_range(0..enabled.len()))
        }
    }
}

/// Cycles through choice positions regardless of which transitions they are.
pub struct RoundRobinScheduler {
    counter: usize,
}

impl Default for RoundRobinScheduler {
    fn default() -> Self {
        Self::new()
    }
}

impl RoundRobinScheduler {
    pub fn new() -> Self {
        RoundRobinScheduler { counter: 0 }
    }
}

impl Scheduler for RoundRobinScheduler {
    fn choose(&mut self, enabled: &[TransitionInstance]) -> Option<usize> {
        if enabled.is_empty() {
            return None;
        }
        let i = self.counter % enabled.len();
        self.counter = self.counter.wrapping_add(1);
        Some(i)
    }
}

/// Replays a recorded sequence of choices; the run ends when the recording
/// runs out. A recorded index outside the enabled set is reported as
/// divergence by [`run`].
pub struct ReplayScheduler {
    choices: Vec<usize>,
    pos: usize,
}

impl ReplayScheduler {
    pub fn new(choices: Vec<usize>) -> Self {
        ReplayScheduler { choices, pos: 0 }
    }
}

impl Scheduler for ReplayScheduler {
    fn choose(&mut self, enabled: &[TransitionInstance]) -> Option<usize> {
        let _ = enabled;
        let c = self.choices.get(self.pos).copied();
        self.pos += 1;
        c
    }
}

/// One entry of a timed state sequence: either a transmission on a channel
/// or the delivery of a tick.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TssEntry {
    /// Tick identifier at this entry (0 before and at the first tick).
    pub tick: u64,
    pub kind: EntryKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EntryKind {
    Transmission { channel: usize, message: Message },
    /// Delivery on the tick channel; starts a new observation window.
    TickStart,
}

/// Why a run stopped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Terminal {
    /// The step budget was exhausted (or the replay recording ran out).
    Horizon,
    /// No transition was enabled; lists the processes stuck at a location
    /// with outgoing transitions.
    Deadlock { blocked: Vec<String> },
    /// An observer reported a violation and the run was configured to stop.
    ViolationStop,
}

/// What a full run produced.
#[derive(Debug, Clone)]
pub struct ExecutionTrace {
    pub entries: Vec<TssEntry>,
    /// Scheduler choices, one per executed step, for exact replay.
    pub choices: Vec<usize>,
    pub terminal: Terminal,
    pub steps: u64,
    pub ticks: u64,
    pub transmissions: u64,
}

/// Outcome of an observer callback.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObserverOutcome {
    Continue,
    Violation,
}

/// Passive observer of a run. Observers see every transmission (buffer
/// deposit or handshake) and every tick delivery, with the entry position in
/// the recorded sequence; they never influence scheduling.
pub trait ChannelObserver {
    fn on_transmission(
        &mut self,
        channel: usize,
        message: &Message,
        tick: u64,
        position: usize,
    ) -> ObserverOutcome;

    fn on_tick(&mut self, tick: u64, position: usize) -> ObserverOutcome;
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Maximum number of engine steps.
    pub horizon: u64,
    pub stop_on_violation: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            horizon: 100_000,
            stop_on_violation: false,
        }
    }
}

/// Runs the system from `config` until the horizon, a deadlock, or (if
/// requested) the first observer violation.
pub fn run(
    cs: &ChannelSystem,
    config: &mut Configuration,
    scheduler: &mut dyn Scheduler,
    opts: &RunOptions,
    observers: &mut [&mut dyn ChannelObserver],
) -> Result<ExecutionTrace, ModelError> {
    let mut entries: Vec<TssEntry> = Vec::new();
    let mut choices: Vec<usize> = Vec::new();
    let mut steps: u64 = 0;
    let mut ticks: u64 = 0;
    let mut transmissions: u64 = 0;
    let mut tau: u64 = 0;

    let terminal = loop {
        if steps >= opts.horizon {
            break Terminal::Horizon;
        }
        let enabled = enabled_transitions(cs, config);
        if enabled.is_empty() {
            let blocked = cs
                .processes
                .iter()
                .enumerate()
                .filter(|(pi, pg)| {
                    pg.transitions
                        .iter()
                        .any(|t| t.from == config.locations[*pi])
                })
                .map(|(_, pg)| pg.name.clone())
                .collect();
            break Terminal::Deadlock { blocked };
        }
        let idx = match scheduler.choose(&enabled) {
            Some(i) => i,
            None => break Terminal::Horizon,
        };
        if idx >= enabled.len() {
            return Err(ModelError::ReplayDiverged {
                step: steps,
                chosen: idx,
                available: enabled.len(),
            });
        }
        let instance = enabled[idx].clone();
        let tx = step(cs, config, &instance, tau)?;
        choices.push(idx);
        steps += 1;

        let mut violated = false;
        if let Some(tx) = tx {
            if cs.tick_channel == Some(tx.channel) {
                // Tick delivery: advance the clock and open a new window.
                ticks += 1;
                tau = ticks - 1;
                entries.push(TssEntry {
                    tick: tau,
                    kind: EntryKind::TickStart,
                });
                let pos = entries.len() - 1;
                for obs in observers.iter_mut() {
                    if obs.on_tick(tau, pos) == ObserverOutcome::Violation {
                        violated = true;
                    }
                }
            } else {
                transmissions += 1;
                entries.push(TssEntry {
                    tick: tau,
                    kind: EntryKind::Transmission {
                        channel: tx.channel,
                        message: tx.message.clone(),
                    },
                });
                let pos = entries.len() - 1;
                for obs in observers.iter_mut() {
                    if obs.on_transmission(tx.channel, &tx.message, tau, pos)
                        == ObserverOutcome::Violation
                    {
                        violated = true;
                    }
                }
            }
        }
        if violated && opts.stop_on_violation {
            break Terminal::ViolationStop;
        }
    };

    Ok(ExecutionTrace {
        entries,
        choices,
        terminal,
        steps,
        ticks,
        transmissions,
    })
}
