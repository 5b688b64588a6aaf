//! Scalar values, messages and relational operators shared by the whole
//! framework: channel payloads, guard comparisons and SCOPE conditions all
//! speak in terms of these types.

use std::fmt;
use std::str::FromStr;

use crate::error::ModelError;

/// A single message part: an integer, a symbol tag like `<ok>`, or a boolean.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scalar {
    Int(i64),
    Sym(String),
    Bool(bool),
}

impl Scalar {
    pub fn sym(s: impl Into<String>) -> Self {
        Scalar::Sym(s.into())
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Int(n) => write!(f, "{n}"),
            Scalar::Sym(s) => write!(f, "<{s}>"),
            Scalar::Bool(b) => write!(f, "{b}"),
        }
    }
}

/// An ordered, nonempty list of scalars. Parts are indexed 1-based, so
/// `m.part(1)` is the first part.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Message(Vec<Scalar>);

impl Message {
    pub fn new(parts: Vec<Scalar>) -> Result<Self, ModelError> {
        if parts.is_empty() {
            return Err(ModelError::EmptyMessage);
        }
        Ok(Message(parts))
    }

    /// Panicking constructor for statically known messages.
    pub fn of(parts: Vec<Scalar>) -> Self {
        Message::new(parts).expect("message must have at least one part")
    }

    /// 1-based part access; `None` when the index is out of range.
    pub fn part(&self, index: usize) -> Option<&Scalar> {
        if index == 0 {
            return None;
        }
        self.0.get(index - 1)
    }

    pub fn parts(&self) -> &[Scalar] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, "]")
    }
}

/// Shorthand for a message of one symbol, e.g. `Message::tag("tick")` is `[<tick>]`.
impl Message {
    pub fn tag(s: impl Into<String>) -> Self {
        Message::of(vec![Scalar::sym(s)])
    }
}

/// Relational operators over scalars.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RelOp {
    Lt,
    Gt,
    Le,
    Ge,
    Eq,
    Ne,
}

impl RelOp {
    /// Equality and inequality are structural; the order relations are only
    /// defined between integers and evaluate to false elsewhere.
    pub fn eval(&self, lhs: &Scalar, rhs: &Scalar) -> bool {
        match self {
            RelOp::Eq => lhs == rhs,
            RelOp::Ne => lhs != rhs,
            RelOp::Lt | RelOp::Gt | RelOp::Le | RelOp::Ge => match (lhs, rhs) {
                (Scalar::Int(a), Scalar::Int(b)) => match self {
                    RelOp::Lt => a < b,
                    RelOp::Gt => a > b,
                    RelOp::Le => a <= b,
                    RelOp::Ge => a >= b,
                    _ => unreachable!(),
                },
                _ => false,
            },
        }
    }

    /// Integer comparison, used for tick distances.
    pub fn holds_int(&self, lhs: i64, rhs: i64) -> bool {
        self.eval(&Scalar::Int(lhs), &Scalar::Int(rhs))
    }
}

impl fmt::Display for RelOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RelOp::Lt => "<",
            RelOp::Gt => ">",
            RelOp::Le => "<=",
            RelOp::Ge => ">=",
            RelOp::Eq => "=",
            RelOp::Ne => "!=",
        };
        f.write_str(s)
    }
}

impl FromStr for RelOp {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Ok(match s {
            "<" => RelOp::Lt,
            ">" => RelOp::Gt,
            "<=" => RelOp::Le,
            ">=" => RelOp::Ge,
            "=" | "==" => RelOp::Eq,
            "!=" => RelOp::Ne,
            _ => return Err(()),
        })
    }
}

/// Declared domain of a variable. Variables always hold whole messages; the
/// domain constrains what they may be assigned.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Domain {
    /// Any message.
    Any,
    /// A single integer part within an inclusive range.
    IntRange(i64, i64),
    /// A single boolean part.
    Bool,
    /// A single symbol part drawn from a finite tag set.
    Syms(Vec<String>),
}

impl Domain {
    pub fn contains(&self, msg: &Message) -> bool {
        match self {
            Domain::Any => true,
            Domain::IntRange(lo, hi) => match msg.parts() {
                [Scalar::Int(n)] => lo <= n && n <= hi,
                _ => false,
            },
            Domain::Bool => matches!(msg.parts(), [Scalar::Bool(_)]),
            Domain::Syms(tags) => match msg.parts() {
                [Scalar::Sym(s)] => tags.iter().any(|t| t == s),
                _ => false,
            },
        }
    }
}

/// Parses message text like `[<ok>, 45, true]`, or a bare scalar as a
/// one-part message.
pub fn parse_message(text: &str) -> Result<Message, ModelError> {
    let t = text.trim();
    let inner = if let Some(stripped) = t.strip_prefix('[') {
        stripped
            .strip_suffix(']')
            .ok_or_else(|| ModelError::BadMessage(text.to_string()))?
    } else {
        t
    };
    let mut parts = Vec::new();
    for piece in inner.split(',') {
        parts.push(parse_scalar(piece).ok_or_else(|| ModelError::BadMessage(text.to_string()))?);
    }
    Message::new(parts)
}

pub fn parse_scalar(text: &str) -> Option<Scalar> {
    let t = text.trim();
    if t.is_empty() {
        return None;
    }
    if let Some(sym) = t.strip_prefix('<').and_then(|s| s.strip_suffix('>')) {
        let sym = sym.trim();
        if sym.is_empty() || !sym.chars().all(|c| c.is_alphanumeric() || c == '_') {
            return None;
        }
        return Some(Scalar::sym(sym));
    }
    match t {
        "true" => return Some(Scalar::Bool(true)),
        "false" => return Some(Scalar::Bool(false)),
        _ => {}
    }
    t.parse::<i64>().ok().map(Scalar::Int)
}
