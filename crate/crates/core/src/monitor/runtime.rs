//! Online monitors: passive channel observers synthesized from monitor
//! descriptions. Monitors never take scheduler steps, so attaching them
//! cannot change the behaviour of the observed system.

use crate::cond::MessageCondition;
use crate::model::engine::{ChannelObserver, ObserverOutcome};
use crate::model::pg::ChannelId;
use crate::model::system::ChannelSystem;
use crate::monitor::spec::MonitorSpec;
use crate::scope::eval::ScopeError;
use crate::value::Message;

/// Verdict of an online monitor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MonitorVerdict {
    Running,
    Violated {
        /// Tick identifier when the violation was detected.
        tick: u64,
        /// Position of the violating entry in the recorded sequence.
        position: usize,
        channel: ChannelId,
        /// The offending message, when the violation is tied to one.
        message: Option<Message>,
    },
}

enum State {
    Safety {
        channel: usize,
        safe: MessageCondition,
    },
    Response {
        /// (channel index, condition, latched truth in this tick window).
        triggers: Vec<(usize, MessageCondition, bool)>,
        response_channel: usize,
        response_cond: MessageCondition,
        response_flag: bool,
        theta: i64,
        /// Tick at which the obligation was armed.
        armed: Option<u64>,
    },
}

/// One online monitor attached to a system.
pub struct Monitor {
    name: String,
    channel_ids: Vec<ChannelId>,
    state: State,
    verdict: MonitorVerdict,
}

impl Monitor {
    /// Resolves the description's channels against the system.
    pub fn attach(spec: &MonitorSpec, cs: &ChannelSystem) -> Result<Monitor, ScopeError> {
        let resolve = |id: &ChannelId| {
            cs.channel_index(id)
                .ok_or_else(|| ScopeError::UnknownChannel(id.to_string()))
        };
        let state = match spec {
            MonitorSpec::Safety { channel, safe, .. } => State::Safety {
                channel: resolve(channel)?,
                safe: safe.clone(),
            },
            MonitorSpec::Response {
                triggers,
                response,
                theta,
                ..
            } => State::Response {
                triggers: triggers
                    .iter()
                    .map(|(id, c)| Ok((resolve(id)?, c.clone(), false)))
                    .collect::<Result<Vec<_>, ScopeError>>()?,
                response_channel: resolve(&response.0)?,
                response_cond: response.1.clone(),
                response_flag: false,
                theta: *theta,
                armed: None,
            },
        };
        Ok(Monitor {
            name: spec.name().to_string(),
            channel_ids: cs.channels.iter().map(|c| c.id.clone()).collect(),
            state,
            verdict: MonitorVerdict::Running,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn verdict(&self) -> &MonitorVerdict {
        &self.verdict
    }

    pub fn is_violated(&self) -> bool {
        matches!(self.verdict, MonitorVerdict::Violated { .. })
    }

    /// Current control location, named after the synthesized monitor graph:
    /// safety monitors sit in `I` until `Err`; response monitors report `I`
    /// (idle), `I1` (some triggers seen), `S` (response seen while armed is
    /// resolved immediately, so it maps back to `I`), `C2` (armed, counting)
    /// and `Err`.
    pub fn current_state(&self) -> &'static str {
        if self.is_violated() {
            return "Err";
        }
        match &self.state {
            State::Safety { .. } => "I",
            State::Response {
                triggers, armed, ..
            } => {
                if armed.is_some() {
                    "C2"
                } else if triggers.iter().any(|(_, _, f)| *f) {
                    "I1"
                } else {
                    "I"
                }
            }
        }
    }

    fn violate(&mut self, tick: u64, position: usize, channel: usize, message: Option<Message>) {
        self.verdict = MonitorVerdict::Violated {
            tick,
            position,
            channel: self.channel_ids[channel].clone(),
            message,
        };
    }
}

impl ChannelObserver for Monitor {
    fn on_transmission(
        &mut self,
        channel: usize,
        message: &Message,
        tick: u64,
        position: usize,
    ) -> ObserverOutcome {
        if self.is_violated() {
            // Err is absorbing.
            return ObserverOutcome::Continue;
        }
        match &mut self.state {
            State::Safety {
                channel: watched,
                safe,
            } => {
                if channel == *watched && !safe.eval(Some(message)) {
                    let ch = channel;
                    self.violate(tick, position, ch, Some(message.clone()));
                    return ObserverOutcome::Violation;
                }
            }
            State::Response {
                triggers,
                response_channel,
                response_cond,
                response_flag,
                armed,
                ..
            } => {
                // Flags mirror the per-window channel state.
                for (ci, cond, flag) in triggers.iter_mut() {
                    if channel == *ci {
                        *flag = cond.eval(Some(message));
                    }
                }
                if channel == *response_channel {
                    *response_flag = response_cond.eval(Some(message));
                }
                if armed.is_some() && *response_flag {
                    *armed = None;
                } else if armed.is_none()
                    && !*response_flag
                    && triggers.iter().all(|(_, _, f)| *f)
                {
                    *armed = Some(tick);
                }
            }
        }
        ObserverOutcome::Continue
    }

    fn on_tick(&mut self, tick: u64, position: usize) -> ObserverOutcome {
        if self.is_violated() {
            return ObserverOutcome::Continue;
        }
        if let State::Response {
            triggers,
            response_flag,
            theta,
            armed,
            response_channel,
            ..
        } = &mut self.state
        {
            if let Some(a) = *armed {
                if tick.saturating_sub(a) as i64 >= *theta {
                    let ch = *response_channel;
                    self.violate(tick, position, ch, None);
                    return ObserverOutcome::Violation;
                }
            }
            for (_, _, f) in triggers.iter_mut() {
                *f = false;
            }
            *response_flag = false;
        }
        ObserverOutcome::Continue
    }
}

/// Attaches one monitor per description; fails if any referenced channel is
/// missing from the system.
pub fn attach_all(specs: &[MonitorSpec], cs: &ChannelSystem) -> Result<Vec<Monitor>, ScopeError> {
    specs.iter().map(|s| Monitor::attach(s, cs)).collect()
}
