//! Task-tree definitions: reactive sequence/fallback composites over leaves
//! bound to skill servers.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::cond::MessageCondition;
use crate::value::Message;

/// Status a node reports to its parent each tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BtStatus {
    Success,
    Failure,
    Running,
}

impl BtStatus {
    pub fn symbol(&self) -> &'static str {
        match self {
            BtStatus::Success => "success",
            BtStatus::Failure => "failure",
            BtStatus::Running => "running",
        }
    }

    pub fn message(&self) -> Message {
        Message::tag(self.symbol())
    }
}

impl std::fmt::Display for BtStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// A node of the tree. Composites are reactive: every tick restarts from
/// the first child, and a child left running on the previous tick is halted
/// when control resolves before reaching it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BtNode {
    /// Ticks children in order until one fails or runs (`→`).
    Sequence { name: String, children: Vec<BtNode> },
    /// Ticks children in order until one succeeds or runs (`?`).
    Fallback { name: String, children: Vec<BtNode> },
    /// Queries its bound skill and maps the reply to a status.
    Leaf { name: String },
}

impl BtNode {
    pub fn sequence(name: impl Into<String>, children: Vec<BtNode>) -> BtNode {
        BtNode::Sequence {
            name: name.into(),
            children,
        }
    }

    pub fn fallback(name: impl Into<String>, children: Vec<BtNode>) -> BtNode {
        BtNode::Fallback {
            name: name.into(),
            children,
        }
    }

    pub fn leaf(name: impl Into<String>) -> BtNode {
        BtNode::Leaf { name: name.into() }
    }

    pub fn name(&self) -> &str {
        match self {
            BtNode::Sequence { name, .. }
            | BtNode::Fallback { name, .. }
            | BtNode::Leaf { name } => name,
        }
    }

    fn visit<'a>(&'a self, f: &mut impl FnMut(&'a BtNode)) {
        f(self);
        match self {
            BtNode::Sequence { children, .. } | BtNode::Fallback { children, .. } => {
                for c in children {
                    c.visit(f);
                }
            }
            BtNode::Leaf { .. } => {}
        }
    }
}

/// How a leaf talks to its skill: the request deposited on each tick, an
/// optional message deposited when the leaf is halted, and an ordered
/// reply-to-status mapping (first matching row wins; no match reports
/// failure).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeafBinding {
    pub skill: String,
    pub request: Message,
    pub halt_request: Option<Message>,
    pub mapping: Vec<(MessageCondition, BtStatus)>,
}

/// A whole tree plus the skill bindings of its leaves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BtDefinition {
    pub root: BtNode,
    pub bindings: BTreeMap<String, LeafBinding>,
}

#[derive(Debug, Error)]
pub enum BtError {
    #[error("duplicate node name `{0}`")]
    DuplicateNode(String),
    #[error("leaf `{0}` has no skill binding")]
    UnboundLeaf(String),
    #[error("binding for `{0}` does not match any leaf")]
    DanglingBinding(String),
    #[error("composite `{0}` has no children")]
    EmptyComposite(String),
    #[error("leaf `{0}` has an empty reply mapping")]
    EmptyMapping(String),
}

impl BtDefinition {
    /// Checks name uniqueness, binding coverage, and non-empty composites.
    pub fn validate(&self) -> Result<(), BtError> {
        let mut names = Vec::new();
        let mut leaves = Vec::new();
        let mut err = None;
        self.root.visit(&mut |n| {
            if err.is_some() {
                return;
            }
            if names.contains(&n.name().to_string()) {
                err = Some(BtError::DuplicateNode(n.name().to_string()));
                return;
            }
            names.push(n.name().to_string());
            match n {
                BtNode::Leaf { name } => leaves.push(name.clone()),
                BtNode::Sequence { name, children } | BtNode::Fallback { name, children } => {
                    if children.is_empty() {
                        err = Some(BtError::EmptyComposite(name.clone()));
                    }
                }
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        for l in &leaves {
            match self.bindings.get(l) {
                None => return Err(BtError::UnboundLeaf(l.clone())),
                Some(b) if b.mapping.is_empty() => return Err(BtError::EmptyMapping(l.clone())),
                Some(_) => {}
            }
        }
        for b in self.bindings.keys() {
            if !leaves.contains(b) {
                return Err(BtError::DanglingBinding(b.clone()));
            }
        }
        Ok(())
    }

    /// Tree rendering with `→` for sequences and `?` for fallbacks.
    pub fn pretty(&self) -> String {
        let mut out = String::new();
        fn rec(n: &BtNode, prefix: &str, last: bool, root: bool, out: &mut String) {
            let (branch, next_prefix) = if root {
                (String::new(), String::new())
            } else if last {
                (format!("{prefix}└── "), format!("{prefix}    "))
            } else {
                (format!("{prefix}├── "), format!("{prefix}│   "))
            };
            let tag = match n {
                BtNode::Sequence { .. } => "→ ",
                BtNode::Fallback { .. } => "? ",
                BtNode::Leaf { .. } => "",
            };
            let _ = writeln!(out, "{branch}{tag}{}", n.name());
            if let BtNode::Sequence { children, .. } | BtNode::Fallback { children, .. } = n {
                for (i, c) in children.iter().enumerate() {
                    rec(c, &next_prefix, i + 1 == children.len(), false, out);
                }
            }
        }
        rec(&self.root, "", true, true, &mut out);
        out
    }
}
