//! Monitorable fragment of the property language.
//!
//! Two shapes of invariant compile to runtime monitors:
//!
//! - safety: `always body` where `body` is a non-temporal Boolean
//!   combination of events on a single channel — checked against every
//!   message transmitted on that channel;
//! - bounded response: `always (trigger implies time_until(response) < θ)`
//!   where `trigger` is a conjunction of events — once all triggers hold
//!   within one tick window, the response must occur within θ ticks.

use crate::cond::MessageCondition;
use crate::model::pg::ChannelId;
use crate::scope::ast::{Event, Formula, TimeBound};
use crate::scope::eval::ScopeError;
use crate::value::RelOp;

#[derive(Debug, Clone)]
pub enum MonitorSpec {
    Safety {
        name: String,
        channel: ChannelId,
        /// Holds for every acceptable message on the channel.
        safe: MessageCondition,
    },
    Response {
        name: String,
        triggers: Vec<(ChannelId, MessageCondition)>,
        response: (ChannelId, MessageCondition),
        /// Allowed ticks between arming and the response (strict bound).
        theta: i64,
    },
}

impl MonitorSpec {
    pub fn name(&self) -> &str {
        match self {
            MonitorSpec::Safety { name, .. } | MonitorSpec::Response { name, .. } => name,
        }
    }
}

/// Strips `always`, i.e. `not (true until not body)`.
fn match_always(f: &Formula) -> Option<&Formula> {
    if let Formula::Not(u) = f {
        if let Formula::Until(l, r) = u.as_ref() {
            if **l == Formula::True {
                if let Formula::Not(body) = r.as_ref() {
                    return Some(body);
                }
            }
        }
    }
    None
}

/// Rewrites a non-temporal body whose events all sit on `channel` into a
/// condition over that channel's message.
fn body_to_condition(f: &Formula, channel: &ChannelId) -> Option<MessageCondition> {
    match f {
        Formula::True => Some(MessageCondition::True),
        Formula::Event(e) => {
            if e.source == channel.source && e.dest == channel.dest {
                Some(e.cond.clone())
            } else {
                None
            }
        }
        Formula::Not(x) => Some(MessageCondition::negate(body_to_condition(x, channel)?)),
        Formula::And(a, b) => Some(MessageCondition::and(
            body_to_condition(a, channel)?,
            body_to_condition(b, channel)?,
        )),
        Formula::Or(a, b) => Some(MessageCondition::or(
            body_to_condition(a, channel)?,
            body_to_condition(b, channel)?,
        )),
        _ => None,
    }
}

/// Flattens a conjunction of events.
fn conj_events(f: &Formula, out: &mut Vec<Event>) -> bool {
    match f {
        Formula::Event(e) => {
            out.push(e.clone());
            true
        }
        Formula::And(a, b) => conj_events(a, out) && conj_events(b, out),
        _ => false,
    }
}

/// Compiles a formula into a monitor description; `theta` parameters must be
/// bound beforehand.
pub fn compile(name: impl Into<String>, f: &Formula) -> Result<MonitorSpec, ScopeError> {
    let name = name.into();
    let fail = || ScopeError::NotMonitorable(f.to_string());
    let body = match_always(f).ok_or_else(fail)?;

    // Bounded response: not(triggers) or time_until(response) < theta.
    let resp_match = if let Formula::Or(l, r) = body {
        match (l.as_ref(), r.as_ref()) {
            (Formula::Not(t), tu @ Formula::TimeUntil { .. }) => Some((t.as_ref(), tu)),
            (tu @ Formula::TimeUntil { .. }, Formula::Not(t)) => Some((t.as_ref(), tu)),
            _ => None,
        }
    } else {
        None
    };
    if let Some((neg_trigger, Formula::TimeUntil { event, op, bound })) = resp_match {
        {
            if *op != RelOp::Lt {
                return Err(fail());
            }
            let theta = match bound {
                TimeBound::Const(n) => *n,
                TimeBound::Param(p) => {
                    return Err(ScopeError::UnboundParams(vec![p.clone()]));
                }
            };
            if theta < 1 {
                return Err(ScopeError::BadTimeBound(theta));
            }
            let mut triggers = Vec::new();
            if !conj_events(neg_trigger, &mut triggers) {
                return Err(fail());
            }
            return Ok(MonitorSpec::Response {
                name,
                triggers: triggers
                    .into_iter()
                    .map(|e| (ChannelId::new(e.source, e.dest), e.cond))
                    .collect(),
                response: (
                    ChannelId::new(event.source.clone(), event.dest.clone()),
                    event.cond.clone(),
                ),
                theta,
            });
        }
    }

    // Safety: all events of the body on one channel, no temporal operators.
    let events = body.events();
    let first = events.first().ok_or_else(fail)?;
    let channel = ChannelId::new(first.source.clone(), first.dest.clone());
    let safe = body_to_condition(body, &channel).ok_or_else(fail)?;
    Ok(MonitorSpec::Safety {
        name,
        channel,
        safe,
    })
}
