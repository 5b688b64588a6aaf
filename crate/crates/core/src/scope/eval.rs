//! Offline evaluation of properties over timed state sequences.
//!
//! A timed state sequence pairs each recorded entry with the tick identifier
//! current when it was recorded. The state at an entry maps every channel to
//! the latest message transmitted on it within the current tick window; tick
//! delivery clears all channels and opens a new window.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::engine::{EntryKind, TssEntry};
use crate::model::pg::ChannelId;
use crate::model::system::ChannelSystem;
use crate::scope::ast::{Event, Formula, TimeBound};
use crate::value::{Message, RelOp};

#[derive(Debug, Error)]
pub enum ScopeError {
    #[error("property mentions unknown channel {0}")]
    UnknownChannel(String),
    #[error("unbound time parameters: {0:?}")]
    UnboundParams(Vec<String>),
    #[error("position {pos} is past the end of the sequence (length {len})")]
    PositionOutOfRange { pos: usize, len: usize },
    #[error("property is not in the monitorable fragment: {0}")]
    NotMonitorable(String),
    #[error("time bounds must be at least 1, got {0}")]
    BadTimeBound(i64),
}

/// Three-valued verdict of finite-trace evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    True,
    False,
    Inconclusive,
}

impl Verdict {
    pub fn of(b: bool) -> Verdict {
        if b {
            Verdict::True
        } else {
            Verdict::False
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Verdict {
        match self {
            Verdict::True => Verdict::False,
            Verdict::False => Verdict::True,
            Verdict::Inconclusive => Verdict::Inconclusive,
        }
    }

    pub fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::False, _) | (_, Verdict::False) => Verdict::False,
            (Verdict::True, Verdict::True) => Verdict::True,
            _ => Verdict::Inconclusive,
        }
    }

    pub fn or(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::True, _) | (_, Verdict::True) => Verdict::True,
            (Verdict::False, Verdict::False) => Verdict::False,
            _ => Verdict::Inconclusive,
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::True => write!(f, "true"),
            Verdict::False => write!(f, "false"),
            Verdict::Inconclusive => write!(f, "inconclusive"),
        }
    }
}

/// A timed state sequence with precomputed per-entry channel states.
#[derive(Debug, Clone)]
pub struct Tss {
    pub channels: Vec<ChannelId>,
    pub entries: Vec<TssEntry>,
    pub tick_channel: Option<usize>,
    /// Whether the sequence is a finished execution rather than a prefix.
    pub complete: bool,
    /// `latched[i][c]` = latest message on channel `c` within the tick
    /// window, as of entry `i`.
    latched: Vec<Vec<Option<Message>>>,
}

impl Tss {
    pub fn new(
        channels: Vec<ChannelId>,
        tick_channel: Option<usize>,
        entries: Vec<TssEntry>,
        complete: bool,
    ) -> Tss {
        let nchan = channels.len();
        let mut state: Vec<Option<Message>> = vec![None; nchan];
        let mut latched = Vec::with_capacity(entries.len());
        for e in &entries {
            match &e.kind {
                EntryKind::TickStart => {
                    state.iter_mut().for_each(|s| *s = None);
                    if let Some(tc) = tick_channel {
                        state[tc] = Some(Message::tag("tick"));
                    }
                }
                EntryKind::Transmission { channel, message } => {
                    state[*channel] = Some(message.clone());
                }
            }
            latched.push(state.clone());
        }
        Tss {
            channels,
            entries,
            tick_channel,
            complete,
            latched,
        }
    }

    /// Builds the sequence for a run of `cs`.
    pub fn from_run(cs: &ChannelSystem, entries: Vec<TssEntry>, complete: bool) -> Tss {
        Tss::new(
            cs.channels.iter().map(|c| c.id.clone()).collect(),
            cs.tick_channel,
            entries,
            complete,
        )
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn channel_index(&self, source: &str, dest: &str) -> Option<usize> {
        self.channels
            .iter()
            .position(|c| c.source == source && c.dest == dest)
    }

    /// Latest message on `channel` within the tick window at entry `pos`.
    pub fn latched(&self, pos: usize, channel: usize) -> Option<&Message> {
        self.latched[pos][channel].as_ref()
    }

    pub fn tick_at(&self, pos: usize) -> u64 {
        self.entries[pos].tick
    }
}

/// A formula compiled against a sequence's channel table, flattened for the
/// evaluation tables.
enum Node {
    True,
    Event {
        channel: usize,
        cond: crate::cond::MessageCondition,
    },
    TimeUntil {
        channel: usize,
        cond: crate::cond::MessageCondition,
        op: RelOp,
        bound: i64,
    },
    Not(usize),
    And(usize, usize),
    Or(usize, usize),
    Next(usize),
    Until(usize, usize),
}

struct Compiled {
    nodes: Vec<Node>,
    root: usize,
}

fn resolve_event(tss: &Tss, e: &Event) -> Result<usize, ScopeError> {
    tss.channel_index(&e.source, &e.dest)
        .ok_or_else(|| ScopeError::UnknownChannel(format!("{}->{}", e.source, e.dest)))
}

fn compile(f: &Formula, tss: &Tss, nodes: &mut Vec<Node>) -> Result<usize, ScopeError> {
    let node = match f {
        Formula::True => Node::True,
        Formula::Event(e) => Node::Event {
            channel: resolve_event(tss, e)?,
            cond: e.cond.clone(),
        },
        Formula::TimeUntil { event, op, bound } => {
            let bound = match bound {
                TimeBound::Const(n) => *n,
                TimeBound::Param(p) => {
                    return Err(ScopeError::UnboundParams(vec![p.clone()]));
                }
            };
            if bound < 1 {
                return Err(ScopeError::BadTimeBound(bound));
            }
            Node::TimeUntil {
                channel: resolve_event(tss, event)?,
                cond: event.cond.clone(),
                op: *op,
                bound,
            }
        }
        Formula::Not(x) => Node::Not(compile(x, tss, nodes)?),
        Formula::Next(x) => Node::Next(compile(x, tss, nodes)?),
        Formula::And(a, b) => {
            let a = compile(a, tss, nodes)?;
            let b = compile(b, tss, nodes)?;
            Node::And(a, b)
        }
        Formula::Or(a, b) => {
            let a = compile(a, tss, nodes)?;
            let b = compile(b, tss, nodes)?;
            Node::Or(a, b)
        }
        Formula::Until(a, b) => {
            let a = compile(a, tss, nodes)?;
            let b = compile(b, tss, nodes)?;
            Node::Until(a, b)
        }
    };
    nodes.push(node);
    Ok(nodes.len() - 1)
}

/// Evaluates over the first `len` entries, treating them as complete or as a
/// prefix. Position `len` is the boundary: inconclusive for a prefix, false
/// for a complete sequence.
fn eval_prefix(
    c: &Compiled,
    tss: &Tss,
    len: usize,
    complete: bool,
    pos: usize,
) -> Result<Verdict, ScopeError> {
    if pos > len || len > tss.len() {
        return Err(ScopeError::PositionOutOfRange { pos, len: tss.len() });
    }
    let boundary = if complete {
        Verdict::False
    } else {
        Verdict::Inconclusive
    };
    let n = c.nodes.len();
    // table[k][i] for i in pos..=len, stored from the end.
    let width = len - pos + 1;
    let mut table = vec![vec![boundary; width]; n];
    // next occurrence index of each TimeUntil event, from the end.
    let mut nextocc: Vec<Vec<Option<usize>>> = vec![Vec::new(); n];
    for (k, node) in c.nodes.iter().enumerate() {
        if let Node::TimeUntil { channel, cond, .. } = node {
            let mut occ = vec![None; width];
            let mut nxt: Option<usize> = None;
            for i in (pos..len).rev() {
                if cond.eval(tss.latched(i, *channel)) {
                    nxt = Some(i);
                }
                occ[i - pos] = nxt;
            }
            nextocc[k] = occ;
        }
    }
    for i in (pos..len).rev() {
        let col = i - pos;
        for k in 0..n {
            let v = match &c.nodes[k] {
                Node::True => Verdict::True,
                Node::Event { channel, cond } => Verdict::of(cond.eval(tss.latched(i, *channel))),
                Node::TimeUntil {
                    op, bound, ..
                } => {
                    let tau_i = tss.tick_at(i) as i64;
                    match nextocc[k][col] {
                        Some(j) => {
                            let d = tss.tick_at(j) as i64 - tau_i;
                            Verdict::of(op.holds_int(d, *bound))
                        }
                        None if complete => Verdict::False,
                        None => {
                            // The event may still occur at any delay of at
                            // least the current distance to the last entry.
                            let dmin = tss.tick_at(len - 1) as i64 - tau_i;
                            if (dmin..=dmin.max(*bound) + 1).any(|d| op.holds_int(d, *bound)) {
                                Verdict::Inconclusive
                            } else {
                                Verdict::False
                            }
                        }
                    }
                }
                Node::Not(x) => table[*x][col].not(),
                Node::And(a, b) => table[*a][col].and(table[*b][col]),
                Node::Or(a, b) => table[*a][col].or(table[*b][col]),
                Node::Next(x) => table[*x][col + 1],
                Node::Until(a, b) => table[*b][col].or(table[*a][col].and(table[k][col + 1])),
            };
            table[k][col] = v;
        }
    }
    Ok(table[c.root][0])
}

fn compiled(f: &Formula, tss: &Tss) -> Result<Compiled, ScopeError> {
    let mut nodes = Vec::new();
    let root = compile(f, tss, &mut nodes)?;
    Ok(Compiled { nodes, root })
}

/// Verdict of `f` at entry position `pos` of the full sequence.
pub fn evaluate_at(f: &Formula, tss: &Tss, pos: usize) -> Result<Verdict, ScopeError> {
    let c = compiled(f, tss)?;
    eval_prefix(&c, tss, tss.len(), tss.complete, pos)
}

/// Verdict of `f` over the whole sequence (position 0).
pub fn evaluate(f: &Formula, tss: &Tss) -> Result<Verdict, ScopeError> {
    evaluate_at(f, tss, 0)
}

/// Smallest entry index `k` such that the prefix ending at `k` (inclusive)
/// already falsifies `f` at position 0, regardless of any continuation.
/// Verdicts only harden as the prefix grows, so binary search applies.
pub fn earliest_violation(f: &Formula, tss: &Tss) -> Result<Option<usize>, ScopeError> {
    let c = compiled(f, tss)?;
    let n = tss.len();
    if n == 0 {
        return Ok(None);
    }
    if eval_prefix(&c, tss, n, false, 0)? != Verdict::False {
        return Ok(None);
    }
    // Invariant: prefix of length hi falsifies, prefix of length lo does not.
    let (mut lo, mut hi) = (0usize, n);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if eval_prefix(&c, tss, mid, false, 0)? == Verdict::False {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi - 1))
}

/// Naive linear scan equivalent of [`earliest_violation`]; used as an oracle
/// in tests.
pub fn earliest_violation_scan(f: &Formula, tss: &Tss) -> Result<Option<usize>, ScopeError> {
    let c = compiled(f, tss)?;
    for k in 0..tss.len() {
        if eval_prefix(&c, tss, k + 1, false, 0)? == Verdict::False {
            return Ok(Some(k));
        }
    }
    Ok(None)
}

/// Binds parameters (e.g. `theta`) and evaluates; errors on unbound names.
pub fn evaluate_with_params(
    f: &Formula,
    tss: &Tss,
    params: &BTreeMap<String, i64>,
) -> Result<Verdict, ScopeError> {
    let mut f = f.clone();
    let unbound = f.bind_params(params);
    if !unbound.is_empty() {
        return Err(ScopeError::UnboundParams(unbound));
    }
    evaluate(&f, tss)
}
