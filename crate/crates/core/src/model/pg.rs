//! Program graphs: locations, variables, and guarded transitions whose
//! labels are either internal actions or channel operations.

use std::fmt;

use crate::error::ModelError;
use crate::model::guard::{Action, Evaluation, Guard};
use crate::value::{Domain, Message};

/// Direction of a communication action.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommDir {
    Send,
    Recv,
}

/// Identifies a channel by its endpoint process names. Each ordered pair of
/// processes has at most one channel.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChannelId {
    pub source: String,
    pub dest: String,
}

impl ChannelId {
    pub fn new(source: impl Into<String>, dest: impl Into<String>) -> Self {
        ChannelId {
            source: source.into(),
            dest: dest.into(),
        }
    }
}

impl fmt::Display for ChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.source, self.dest)
    }
}

/// What a communication action carries: a variable (read on send, written on
/// receive) or a literal message (sent as-is; on receive, enabled only when
/// the incoming message equals the literal exactly).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    Var(String),
    Lit(Message),
}

/// A send or receive on a channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommAction {
    pub dir: CommDir,
    pub channel: ChannelId,
    pub payload: Payload,
}

impl CommAction {
    pub fn send_var(channel: ChannelId, var: impl Into<String>) -> Self {
        CommAction {
            dir: CommDir::Send,
            channel,
            payload: Payload::Var(var.into()),
        }
    }

    pub fn send_lit(channel: ChannelId, msg: Message) -> Self {
        CommAction {
            dir: CommDir::Send,
            channel,
            payload: Payload::Lit(msg),
        }
    }

    pub fn recv_var(channel: ChannelId, var: impl Into<String>) -> Self {
        CommAction {
            dir: CommDir::Recv,
            channel,
            payload: Payload::Var(var.into()),
        }
    }

    pub fn recv_lit(channel: ChannelId, msg: Message) -> Self {
        CommAction {
            dir: CommDir::Recv,
            channel,
            payload: Payload::Lit(msg),
        }
    }
}

impl fmt::Display for CommAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = match self.dir {
            CommDir::Send => '!',
            CommDir::Recv => '?',
        };
        match &self.payload {
            Payload::Var(v) => write!(f, "{mark}({}, {}, {v})", self.channel.source, self.channel.dest),
            Payload::Lit(m) => write!(f, "{mark}({}, {}, {m})", self.channel.source, self.channel.dest),
        }
    }
}

/// A transition label: either an internal action or a communication action.
#[derive(Debug, Clone)]
pub enum Label {
    Internal(Action),
    Comm(CommAction),
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Internal(a) => write!(f, "{a}"),
            Label::Comm(c) => write!(f, "{c}"),
        }
    }
}

/// A guarded transition between two locations (stored as indices).
#[derive(Debug, Clone)]
pub struct Transition {
    pub from: usize,
    pub guard: Guard,
    pub label: Label,
    pub to: usize,
}

/// A local variable declaration with its domain and initial value.
#[derive(Debug, Clone)]
pub struct VarDecl {
    pub name: String,
    pub domain: Domain,
    pub init: Message,
}

/// A single process of a channel system.
#[derive(Debug, Clone)]
pub struct ProgramGraph {
    pub name: String,
    pub locations: Vec<String>,
    pub vars: Vec<VarDecl>,
    pub transitions: Vec<Transition>,
    pub initial_location: usize,
}

impl ProgramGraph {
    pub fn location_index(&self, name: &str) -> Option<usize> {
        self.locations.iter().position(|l| l == name)
    }
}

/// Incremental construction of a program graph; locations are created on
/// first use.
pub struct PgBuilder {
    name: String,
    locations: Vec<String>,
    vars: Vec<VarDecl>,
    transitions: Vec<Transition>,
    initial: Option<usize>,
}

impl PgBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        PgBuilder {
            name: name.into(),
            locations: Vec::new(),
            vars: Vec::new(),
            transitions: Vec::new(),
            initial: None,
        }
    }

    pub fn loc(&mut self, name: &str) -> usize {
        if let Some(i) = self.locations.iter().position(|l| l == name) {
            i
        } else {
            self.locations.push(name.to_string());
            self.locations.len() - 1
        }
    }

    pub fn initial(&mut self, name: &str) -> &mut Self {
        let i = self.loc(name);
        self.initial = Some(i);
        self
    }

    pub fn var(
        &mut self,
        name: impl Into<String>,
        domain: Domain,
        init: Message,
    ) -> Result<&mut Self, ModelError> {
        let name = name.into();
        if self.vars.iter().any(|v| v.name == name) {
            return Err(ModelError::DuplicateVariable(name));
        }
        if !domain.contains(&init) {
            return Err(ModelError::InitOutOfDomain {
                var: name,
                value: init.to_string(),
            });
        }
        self.vars.push(VarDecl { name, domain, init });
        Ok(self)
    }

    pub fn transition(
        &mut self,
        from: &str,
        guard: Guard,
        label: Label,
        to: &str,
    ) -> &mut Self {
        let from = self.loc(from);
        let to = self.loc(to);
        self.transitions.push(Transition {
            from,
            guard,
            label,
            to,
        });
        self
    }

    /// Unguarded internal step.
    pub fn internal(&mut self, from: &str, action: Action, to: &str) -> &mut Self {
        self.transition(from, Guard::True, Label::Internal(action), to)
    }

    pub fn comm(&mut self, from: &str, comm: CommAction, to: &str) -> &mut Self {
        self.transition(from, Guard::True, Label::Comm(comm), to)
    }

    pub fn guarded_comm(
        &mut self,
        from: &str,
        guard: Guard,
        comm: CommAction,
        to: &str,
    ) -> &mut Self {
        self.transition(from, guard, Label::Comm(comm), to)
    }

    pub fn build(self) -> Result<ProgramGraph, ModelError> {
        let initial = self.initial.ok_or_else(|| {
            ModelError::BadConfiguration(format!("process {} has no initial location", self.name))
        })?;
        if self.locations.is_empty() {
            return Err(ModelError::BadConfiguration(format!(
                "process {} has no locations",
                self.name
            )));
        }
        Ok(ProgramGraph {
            name: self.name,
            locations: self.locations,
            vars: self.vars,
            transitions: self.transitions,
            initial_location: initial,
        })
    }
}

/// Initial evaluation of a program graph's local variables (unqualified
/// names).
pub fn initial_evaluation(pg: &ProgramGraph) -> Evaluation {
    pg.vars
        .iter()
        .map(|v| (v.name.clone(), v.init.clone()))
        .collect()
}
