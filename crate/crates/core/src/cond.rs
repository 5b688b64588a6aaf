//! Boolean conditions over message parts: `m[1] = <ok> and m[2] >= 20`.
//!
//! The same condition type is used by SCOPE events, monitor specs, behavior
//! tree leaf mappings and program-graph guards. An atomic comparison against
//! a missing part (index out of range, or no message at all) is false, never
//! an error; negation therefore makes conditions that are satisfied by the
//! absence of a message expressible, which is what an implication like
//! `m[1] = <ok> implies m[2] >= 20` relies on.

use std::fmt;

use crate::value::{Message, RelOp, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum MessageCondition {
    /// Catch-all; used by default leaf mappings, not producible from SCOPE text.
    True,
    Cmp {
        part: usize,
        op: RelOp,
        rhs: Scalar,
    },
    Not(Box<MessageCondition>),
    And(Box<MessageCondition>, Box<MessageCondition>),
    Or(Box<MessageCondition>, Box<MessageCondition>),
}

impl MessageCondition {
    pub fn cmp(part: usize, op: RelOp, rhs: Scalar) -> Self {
        MessageCondition::Cmp { part, op, rhs }
    }

    pub fn and(a: MessageCondition, b: MessageCondition) -> Self {
        MessageCondition::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: MessageCondition, b: MessageCondition) -> Self {
        MessageCondition::Or(Box::new(a), Box::new(b))
    }

    pub fn negate(a: MessageCondition) -> Self {
        MessageCondition::Not(Box::new(a))
    }

    /// `a implies b`, expanded to `not a or b`.
    pub fn implies(a: MessageCondition, b: MessageCondition) -> Self {
        MessageCondition::or(MessageCondition::negate(a), b)
    }

    /// Evaluates against an optional message; `None` models an empty channel.
    pub fn eval(&self, msg: Option<&Message>) -> bool {
        match self {
            MessageCondition::True => true,
            MessageCondition::Cmp { part, op, rhs } => match msg.and_then(|m| m.part(*part)) {
                Some(lhs) => op.eval(lhs, rhs),
                None => false,
            },
            MessageCondition::Not(c) => !c.eval(msg),
            MessageCondition::And(a, b) => a.eval(msg) && b.eval(msg),
            MessageCondition::Or(a, b) => a.eval(msg) || b.eval(msg),
        }
    }
}

impl fmt::Display for MessageCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MessageCondition::True => write!(f, "true"),
            MessageCondition::Cmp { part, op, rhs } => write!(f, "m[{part}] {op} {rhs}"),
            MessageCondition::Not(c) => write!(f, "not ({c})"),
            MessageCondition::And(a, b) => write!(f, "({a}) and ({b})"),
            MessageCondition::Or(a, b) => write!(f, "({a}) or ({b})"),
        }
    }
}
