//! Abstract syntax of the timed property language.
//!
//! The core connectives are `true`, events, `time_until` atoms, `not`,
//! `and`, `or`, `next`, and `until`. The surface language also offers
//! `false`, `implies`, `eventually`, and `always`; the parser expands those
//! into the core:
//!
//! - `false` = `not true`
//! - `a implies b` = `not a or b`
//! - `eventually f` = `true until f`
//! - `always f` = `not (true until not f)`

use std::fmt;

use crate::cond::MessageCondition;
use crate::value::RelOp;

/// A channel event: the latest message transmitted on `source -> dest`
/// within the current observation window satisfies `cond`. When nothing has
/// been transmitted in the window, part comparisons are false.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub source: String,
    pub dest: String,
    pub cond: MessageCondition,
}

impl Event {
    pub fn new(source: impl Into<String>, dest: impl Into<String>, cond: MessageCondition) -> Self {
        Event {
            source: source.into(),
            dest: dest.into(),
            cond,
        }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.source, self.dest, self.cond)
    }
}

/// The right-hand side of a `time_until` comparison: a literal number of
/// ticks or a named parameter bound at evaluation time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TimeBound {
    Const(i64),
    Param(String),
}

impl fmt::Display for TimeBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeBound::Const(n) => write!(f, "{n}"),
            TimeBound::Param(p) => write!(f, "{p}"),
        }
    }
}

/// A property formula in core form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    True,
    Event(Event),
    /// The number of ticks until the first future (or current) occurrence of
    /// the event, compared against the bound.
    TimeUntil {
        event: Event,
        op: RelOp,
        bound: TimeBound,
    },
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
}

impl Formula {
    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn next(f: Formula) -> Formula {
        Formula::Next(Box::new(f))
    }

    pub fn until(a: Formula, b: Formula) -> Formula {
        Formula::Until(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::or(Formula::not(a), b)
    }

    pub fn eventually(f: Formula) -> Formula {
        Formula::until(Formula::True, f)
    }

    pub fn always(f: Formula) -> Formula {
        Formula::not(Formula::until(Formula::True, Formula::not(f)))
    }

    /// Substitutes named time bounds. Returns the names that stayed unbound.
    pub fn bind_params(&mut self, params: &std::collections::BTreeMap<String, i64>) -> Vec<String> {
        let mut unbound = Vec::new();
        self.bind_params_inner(params, &mut unbound);
        unbound.sort();
        unbound.dedup();
        unbound
    }

    fn bind_params_inner(
        &mut self,
        params: &std::collections::BTreeMap<String, i64>,
        unbound: &mut Vec<String>,
    ) {
        match self {
            Formula::True | Formula::Event(_) => {}
            Formula::TimeUntil { bound, .. } => {
                if let TimeBound::Param(p) = bound {
                    match params.get(p) {
                        Some(v) => *bound = TimeBound::Const(*v),
                        None => unbound.push(p.clone()),
                    }
                }
            }
            Formula::Not(f) | Formula::Next(f) => f.bind_params_inner(params, unbound),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(a, b) => {
                a.bind_params_inner(params, unbound);
                b.bind_params_inner(params, unbound);
            }
        }
    }

    /// Events mentioned anywhere in the formula.
    pub fn events(&self) -> Vec<&Event> {
        let mut out = Vec::new();
        self.visit_events(&mut |e| out.push(e));
        out
    }

    fn visit_events<'a>(&'a self, f: &mut impl FnMut(&'a Event)) {
        match self {
            Formula::True => {}
            Formula::Event(e) => f(e),
            Formula::TimeUntil { event, .. } => f(event),
            Formula::Not(x) | Formula::Next(x) => x.visit_events(f),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(a, b) => {
                a.visit_events(f);
                b.visit_events(f);
            }
        }
    }

    fn is_atom(&self) -> bool {
        matches!(self, Formula::True | Formula::Event(_))
    }
}

/// Prints a child, parenthesized unless it is an atom. `time_until` atoms
/// are parenthesized too so the trailing comparison cannot be misread.
struct Child<'a>(&'a Formula);

impl fmt::Display for Child<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_atom() {
            write!(f, "{}", self.0)
        } else {
            write!(f, "({})", self.0)
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "true"),
            Formula::Event(e) => write!(f, "{e}"),
            Formula::TimeUntil { event, op, bound } => {
                write!(f, "time_until({event}) {op} {bound}")
            }
            Formula::Not(x) => write!(f, "not {}", Child(x)),
            Formula::Next(x) => write!(f, "next {}", Child(x)),
            Formula::And(a, b) => write!(f, "{} and {}", Child(a), Child(b)),
            Formula::Or(a, b) => write!(f, "{} or {}", Child(a), Child(b)),
            Formula::Until(a, b) => write!(f, "{} until {}", Child(a), Child(b)),
        }
    }
}

/// A named property from a property file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Property {
    pub name: String,
    pub formula: Formula,
}
