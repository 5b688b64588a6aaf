//! Synthesized monitor graphs: program-graph renderings of the online
//! monitors, for documentation and inspection. The executable monitors in
//! [`crate::monitor::runtime`] fold the same automata into passive
//! observers.

use crate::error::ModelError;
use crate::model::guard::{Action, Expr, Guard};
use crate::model::pg::{ChannelId, CommAction, Label, PgBuilder, ProgramGraph};
use crate::monitor::spec::MonitorSpec;
use crate::value::{Domain, Message, RelOp, Scalar};

fn observe(channel: &ChannelId) -> Label {
    Label::Comm(CommAction::recv_var(channel.clone(), "obs"))
}

/// Renders a monitor description as a program graph. Safety monitors have
/// locations `I`, `check`, `Err`; response monitors `I`, `I1`, `C1`, `S`,
/// `C2`, `Err` plus a tick counter.
pub fn synthesize(spec: &MonitorSpec) -> Result<ProgramGraph, ModelError> {
    let mut b = PgBuilder::new(format!("monitor_{}", spec.name()));
    b.initial("I");
    b.var("obs", Domain::Any, Message::tag("none"))?;
    match spec {
        MonitorSpec::Safety { channel, safe, .. } => {
            b.comm("I", observe_comm(channel), "check");
            b.transition(
                "check",
                Guard::test("obs", safe.clone()),
                Label::Internal(Action::Nop),
                "I",
            );
            b.transition(
                "check",
                Guard::negate(Guard::test("obs", safe.clone())),
                Label::Internal(Action::Nop),
                "Err",
            );
            b.internal("Err", Action::Nop, "Err");
        }
        MonitorSpec::Response {
            triggers,
            response,
            theta,
            ..
        } => {
            b.var(
                "timer",
                Domain::IntRange(0, *theta),
                Message::of(vec![Scalar::Int(0)]),
            )?;
            let reset = Action::assign("timer", vec![Expr::int(0)]);
            let n = triggers.len();
            for (i, (ch, cond)) in triggers.iter().enumerate() {
                let (from, to, action) = match (i, i + 1 == n) {
                    (0, true) => ("I", "C1", reset.clone()),
                    (0, false) => ("I", "I1", Action::Nop),
                    (_, true) => ("I1", "C1", reset.clone()),
                    (_, false) => ("I1", "I1", Action::Nop),
                };
                // Observe, then advance only when the message satisfies the
                // trigger condition; otherwise stay.
                let chk = format!("chk_{i}");
                b.comm(from, observe_comm(ch), &chk);
                b.transition(
                    &chk,
                    Guard::test("obs", cond.clone()),
                    Label::Internal(action),
                    to,
                );
                b.transition(
                    &chk,
                    Guard::negate(Guard::test("obs", cond.clone())),
                    Label::Internal(Action::Nop),
                    from,
                );
            }
            // Response discharges the obligation.
            b.comm("C1", observe_comm(&response.0), "resp_chk");
            b.transition(
                "resp_chk",
                Guard::test("obs", response.1.clone()),
                Label::Internal(Action::Nop),
                "S",
            );
            b.transition(
                "resp_chk",
                Guard::negate(Guard::test("obs", response.1.clone())),
                Label::Internal(Action::Nop),
                "C1",
            );
            b.internal("S", Action::Nop, "I");
            // Each elapsed tick advances the counter, then the bound is
            // checked.
            b.internal(
                "C1",
                Action::assign("timer", vec![Expr::add(Expr::part("timer", 1), Expr::int(1))]),
                "C2",
            );
            b.transition(
                "C2",
                Guard::cmp("timer", 1, RelOp::Lt, Scalar::Int(*theta)),
                Label::Internal(Action::Nop),
                "C1",
            );
            b.transition(
                "C2",
                Guard::cmp("timer", 1, RelOp::Ge, Scalar::Int(*theta)),
                Label::Internal(Action::Nop),
                "Err",
            );
            b.internal("Err", Action::Nop, "Err");
        }
    }
    b.build()
}

fn observe_comm(channel: &ChannelId) -> CommAction {
    match observe(channel) {
        Label::Comm(c) => c,
        _ => unreachable!(),
    }
}
