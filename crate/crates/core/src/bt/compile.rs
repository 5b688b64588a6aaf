//! Compilation of a tree definition into one process per node.
//!
//! Every node becomes a program graph named `bt.<node>`. A parent talks to a
//! child over two handshake channels: parent->child carries `[<tick>]` or
//! `[<halt>]`, child->parent carries the status message. A leaf talks to its
//! skill over two single-buffer channels: leaf->skill carries the request
//! (or the halt request), skill->leaf the reply. The tree is driven by an
//! external tick source connected to the root by another handshake pair.

use thiserror::Error;

use crate::bt::def::{BtDefinition, BtError, BtNode, BtStatus, LeafBinding};
use crate::cond::MessageCondition;
use crate::error::ModelError;
use crate::model::guard::{Action, Expr, Guard};
use crate::model::pg::{ChannelId, CommAction, Label, PgBuilder, ProgramGraph};
use crate::value::{Domain, Message, RelOp, Scalar};

#[derive(Debug, Error)]
pub enum BtCompileError {
    #[error(transparent)]
    Tree(#[from] BtError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// The processes and channel declarations produced from a tree. Channels
/// referencing skill processes are declared here but the skills themselves
/// must be added by the caller before the system is built.
#[derive(Debug)]
pub struct CompiledBt {
    pub processes: Vec<ProgramGraph>,
    /// (source, dest, capacity) for every channel the tree needs.
    pub channels: Vec<(String, String, u8)>,
    pub root_process: String,
    pub tick_source: String,
}

fn proc_name(node: &BtNode) -> String {
    format!("bt.{}", node.name())
}

fn tick_msg() -> Message {
    Message::tag("tick")
}

fn halt_msg() -> Message {
    Message::tag("halt")
}

fn recv_lit(from: &str, to: &str, msg: Message) -> CommAction {
    CommAction::recv_lit(ChannelId::new(from, to), msg)
}

fn send_lit(from: &str, to: &str, msg: Message) -> CommAction {
    CommAction::send_lit(ChannelId::new(from, to), msg)
}

fn st_is(status: BtStatus) -> Guard {
    Guard::test(
        "st",
        MessageCondition::cmp(1, RelOp::Eq, Scalar::sym(status.symbol())),
    )
}

/// Sequence nodes pass control on success, fallbacks on failure.
fn continue_status(node: &BtNode) -> BtStatus {
    match node {
        BtNode::Sequence { .. } => BtStatus::Success,
        BtNode::Fallback { .. } => BtStatus::Failure,
        BtNode::Leaf { .. } => unreachable!("leaves have no children"),
    }
}

fn compile_composite(
    node: &BtNode,
    parent: &str,
    children: &[BtNode],
) -> Result<ProgramGraph, BtCompileError> {
    let me = proc_name(node);
    let mut b = PgBuilder::new(me.clone());
    b.initial("Idle");
    b.var("st", Domain::Any, Message::tag("failure"))?;
    // 1-based index of the child left running by the previous tick, -1 none.
    b.var("prev", Domain::Any, Message::of(vec![Scalar::Int(-1)]))?;

    let n = children.len();
    let child = |i: usize| proc_name(&children[i - 1]);

    b.comm("Idle", recv_lit(parent, &me, tick_msg()), "Tick_1");
    for i in 1..=n {
        let tick_i = format!("Tick_{i}");
        let await_i = format!("Await_{i}");
        let decide_i = format!("Decide_{i}");
        let res_i = format!("Res_{i}");
        let done_i = format!("Done_{i}");
        let ret_i = format!("Ret_{i}");

        b.comm(&tick_i, send_lit(&me, &child(i), tick_msg()), &await_i);
        b.comm(
            &await_i,
            CommAction::recv_var(ChannelId::new(child(i), &me), "st"),
            &decide_i,
        );
        if i < n {
            let cont = continue_status(node);
            b.transition(
                &decide_i,
                st_is(cont),
                Label::Internal(Action::Nop),
                &format!("Tick_{}", i + 1),
            );
            b.transition(
                &decide_i,
                Guard::negate(st_is(cont)),
                Label::Internal(Action::Nop),
                &res_i,
            );
        } else {
            b.internal(&decide_i, Action::Nop, &res_i);
        }
        // Halt the child left running last tick if control resolved before
        // reaching it.
        for j in (i + 1)..=n {
            b.guarded_comm(
                &res_i,
                Guard::cmp("prev", 1, RelOp::Eq, Scalar::Int(j as i64)),
                send_lit(&me, &child(j), halt_msg()),
                &done_i,
            );
        }
        b.transition(
            &res_i,
            Guard::cmp("prev", 1, RelOp::Le, Scalar::Int(i as i64)),
            Label::Internal(Action::Nop),
            &done_i,
        );
        b.transition(
            &done_i,
            st_is(BtStatus::Running),
            Label::Internal(Action::assign("prev", vec![Expr::int(i as i64)])),
            &ret_i,
        );
        b.transition(
            &done_i,
            Guard::negate(st_is(BtStatus::Running)),
            Label::Internal(Action::assign("prev", vec![Expr::int(-1)])),
            &ret_i,
        );
        b.comm(
            &ret_i,
            CommAction::send_var(ChannelId::new(&me, parent), "st"),
            "Idle",
        );
    }

    // Halt from the parent cascades to the running child.
    b.comm("Idle", recv_lit(parent, &me, halt_msg()), "HaltSelf");
    for j in 1..=n {
        b.guarded_comm(
            "HaltSelf",
            Guard::cmp("prev", 1, RelOp::Eq, Scalar::Int(j as i64)),
            send_lit(&me, &child(j), halt_msg()),
            "HaltClear",
        );
    }
    b.transition(
        "HaltSelf",
        Guard::cmp("prev", 1, RelOp::Le, Scalar::Int(0)),
        Label::Internal(Action::Nop),
        "HaltClear",
    );
    b.internal(
        "HaltClear",
        Action::assign("prev", vec![Expr::int(-1)]),
        "Idle",
    );

    Ok(b.build()?)
}

fn compile_leaf(
    name: &str,
    parent: &str,
    binding: &LeafBinding,
) -> Result<ProgramGraph, BtCompileError> {
    let me = format!("bt.{name}");
    let mut b = PgBuilder::new(me.clone());
    b.initial("Idle");
    b.var("r", Domain::Any, Message::tag("none"))?;

    b.comm("Idle", recv_lit(parent, &me, tick_msg()), "Send");
    b.comm(
        "Send",
        CommAction::send_lit(ChannelId::new(&me, &binding.skill), binding.request.clone()),
        "Await",
    );
    b.comm(
        "Await",
        CommAction::recv_var(ChannelId::new(&binding.skill, &me), "r"),
        "Map",
    );

    // First matching row wins: each row's guard conjoins the negations of
    // all earlier rows. An unmatched reply reports failure.
    let mut prior: Option<Guard> = None;
    let ret = |s: BtStatus| format!("Ret_{}", s.symbol());
    for (cond, status) in &binding.mapping {
        let row = Guard::test("r", cond.clone());
        let guard = match &prior {
            None => row.clone(),
            Some(p) => Guard::and(Guard::negate(p.clone()), row.clone()),
        };
        b.transition(&guard_loc(), guard, Label::Internal(Action::Nop), &ret(*status));
        prior = Some(match prior {
            None => row,
            Some(p) => Guard::or(p, row),
        });
    }
    if let Some(p) = prior {
        b.transition(
            &guard_loc(),
            Guard::negate(p),
            Label::Internal(Action::Nop),
            &ret(BtStatus::Failure),
        );
    }
    for s in [BtStatus::Success, BtStatus::Failure, BtStatus::Running] {
        b.comm(
            &ret(s),
            send_lit(&me, parent, s.message()),
            "Idle",
        );
    }

    match &binding.halt_request {
        Some(h) => {
            b.comm("Idle", recv_lit(parent, &me, halt_msg()), "HaltFwd");
            b.comm(
                "HaltFwd",
                CommAction::send_lit(ChannelId::new(&me, &binding.skill), h.clone()),
                "Idle",
            );
        }
        None => {
            b.comm("Idle", recv_lit(parent, &me, halt_msg()), "Idle");
        }
    }

    Ok(b.build()?)
}

fn guard_loc() -> String {
    "Map".to_string()
}

/// Compiles the tree; `tick_source` is the process that will drive the root.
pub fn compile(def: &BtDefinition, tick_source: &str) -> Result<CompiledBt, BtCompileError> {
    def.validate()?;
    let mut processes = Vec::new();
    let mut channels: Vec<(String, String, u8)> = Vec::new();

    let root_process = proc_name(&def.root);
    channels.push((tick_source.to_string(), root_process.clone(), 0));
    channels.push((root_process.clone(), tick_source.to_string(), 0));

    // Walk the tree with explicit parent names.
    let mut stack: Vec<(&BtNode, String)> = vec![(&def.root, tick_source.to_string())];
    while let Some((node, parent)) = stack.pop() {
        let me = proc_name(node);
        match node {
            BtNode::Sequence { children, .. } | BtNode::Fallback { children, .. } => {
                processes.push(compile_composite(node, &parent, children)?);
                for c in children {
                    channels.push((me.clone(), proc_name(c), 0));
                    channels.push((proc_name(c), me.clone(), 0));
                    stack.push((c, me.clone()));
                }
            }
            BtNode::Leaf { name } => {
                let binding = &def.bindings[name];
                processes.push(compile_leaf(name, &parent, binding)?);
                channels.push((me.clone(), binding.skill.clone(), 1));
                channels.push((binding.skill.clone(), me.clone(), 1));
            }
        }
    }

    Ok(CompiledBt {
        processes,
        channels,
        root_process,
        tick_source: tick_source.to_string(),
    })
}

/// A minimal driver process: sends `[<tick>]` to the root, waits for the
/// status, repeats.
pub fn tick_generator(name: &str, root_process: &str) -> Result<ProgramGraph, ModelError> {
    let mut b = PgBuilder::new(name);
    b.initial("Send");
    b.var("status", Domain::Any, Message::tag("none"))?;
    b.comm(
        "Send",
        CommAction::send_lit(ChannelId::new(name, root_process), tick_msg()),
        "Await",
    );
    b.comm(
        "Await",
        CommAction::recv_var(ChannelId::new(root_process, name), "status"),
        "Send",
    );
    b.build()
}
