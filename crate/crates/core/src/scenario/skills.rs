//! Skills: the adapters between tree leaves and components. Each skill is a
//! blocking request/reply loop; a pending `[<halt>]` deposit from the leaf
//! is consumed in every resting mode and, where a plan may be active,
//! forwarded to the navigator as a targeted `[<stop>]`.

use crate::error::ModelError;
use crate::model::guard::Guard;
use crate::model::pg::{ChannelId, CommAction, PgBuilder, ProgramGraph};
use crate::scenario::components::{BATTERY_READER, NAVIGATION};
use crate::value::{Domain, Message, RelOp, Scalar};

fn sym(s: &str) -> Scalar {
    Scalar::sym(s)
}

fn recv_lit(from: &str, to: &str, msg: Message) -> CommAction {
    CommAction::recv_lit(ChannelId::new(from, to), msg)
}

fn send_lit(from: &str, to: &str, msg: Message) -> CommAction {
    CommAction::send_lit(ChannelId::new(from, to), msg)
}

fn halt() -> Message {
    Message::tag("halt")
}

/// A stateless skill that forwards a fixed query to a component and relays
/// the component's reply back to the leaf. Used for the battery level and
/// charging checks.
pub fn query_skill(
    name: &str,
    leaf: &str,
    component: &str,
    request: Message,
) -> Result<ProgramGraph, ModelError> {
    let mut b = PgBuilder::new(name);
    b.initial("Idle");
    b.var("r", Domain::Any, Message::tag("none"))?;
    b.comm("Idle", recv_lit(leaf, name, request.clone()), "Forward");
    b.comm("Forward", send_lit(name, component, request), "Wait");
    b.comm(
        "Wait",
        CommAction::recv_var(ChannelId::new(component, name), "r"),
        "Reply",
    );
    b.comm(
        "Reply",
        CommAction::send_var(ChannelId::new(name, leaf), "r"),
        "Idle",
    );
    b.build()
}

/// Drives navigation to the destination. Modes: `Idle` (no plan) starts a
/// plan on the first tick; `Active` polls the navigator and relays its
/// status; `Done` keeps reporting arrival. A halt in `Active` or `Done`
/// sends the navigator a targeted stop.
pub fn goto_destination_skill(name: &str, leaf: &str) -> Result<ProgramGraph, ModelError> {
    let mut b = PgBuilder::new(name);
    b.initial("Idle");
    b.var("r", Domain::Any, Message::tag("none"))?;
    let go = Message::tag("go");
    let from_nav = ChannelId::new(NAVIGATION, name);
    let to_nav = |msg: Message| CommAction::send_lit(ChannelId::new(name, NAVIGATION), msg);
    let reply_var = CommAction::send_var(ChannelId::new(name, leaf), "r");
    let start_req = Message::of(vec![sym("start_navigation"), sym("Destination")]);

    b.comm("Idle", recv_lit(leaf, name, halt()), "Idle");
    b.comm("Idle", recv_lit(leaf, name, go.clone()), "Start");
    b.comm("Start", to_nav(start_req), "StartWait");
    b.comm(
        "StartWait",
        CommAction::recv_var(from_nav.clone(), "r"),
        "StartBranch",
    );
    let ack_ok = Guard::cmp("r", 1, RelOp::Eq, sym("ok"));
    b.guarded_comm(
        "StartBranch",
        ack_ok.clone(),
        send_lit(name, leaf, Message::of(vec![sym("ok"), sym("running")])),
        "Active",
    );
    b.guarded_comm(
        "StartBranch",
        Guard::negate(ack_ok),
        reply_var.clone(),
        "Idle",
    );

    b.comm("Active", recv_lit(leaf, name, go.clone()), "Query");
    b.comm("Active", recv_lit(leaf, name, halt()), "HaltFwd");
    b.comm("Query", to_nav(Message::tag("get_status")), "QueryWait");
    b.comm(
        "QueryWait",
        CommAction::recv_var(from_nav, "r"),
        "QueryBranch",
    );
    let running = Guard::cmp("r", 2, RelOp::Eq, sym("running"));
    let reached = Guard::cmp("r", 2, RelOp::Eq, sym("reached"));
    b.guarded_comm("QueryBranch", running.clone(), reply_var.clone(), "Active");
    b.guarded_comm("QueryBranch", reached.clone(), reply_var.clone(), "Done");
    b.guarded_comm(
        "QueryBranch",
        Guard::negate(Guard::or(running, reached)),
        reply_var,
        "Idle",
    );

    b.comm("Done", recv_lit(leaf, name, go), "DoneReply");
    b.comm("Done", recv_lit(leaf, name, halt()), "HaltFwd");
    b.comm(
        "DoneReply",
        send_lit(name, leaf, Message::of(vec![sym("ok"), sym("reached")])),
        "Done",
    );

    b.comm("HaltFwd", to_nav(Message::tag("stop")), "Idle");
    b.build()
}

/// Drives navigation to the recharging station, then waits out the charge.
/// Reports `[<running>]` while moving or charging and `[<success>]` once
/// charging completes.
pub fn goto_station_skill(name: &str, leaf: &str) -> Result<ProgramGraph, ModelError> {
    let mut b = PgBuilder::new(name);
    b.initial("Idle");
    b.var("r", Domain::Any, Message::tag("none"))?;
    let go = Message::tag("go_station");
    let from_nav = ChannelId::new(NAVIGATION, name);
    let to_nav = |msg: Message| CommAction::send_lit(ChannelId::new(name, NAVIGATION), msg);
    let running_reply = || send_lit(name, leaf, Message::tag("running"));
    let start_req = Message::of(vec![sym("start_navigation"), sym("RechargingStation")]);

    b.comm("Idle", recv_lit(leaf, name, halt()), "Idle");
    b.comm("Idle", recv_lit(leaf, name, go.clone()), "Start");
    b.comm("Start", to_nav(start_req), "StartWait");
    b.comm(
        "StartWait",
        CommAction::recv_var(from_nav.clone(), "r"),
        "StartBranch",
    );
    let ack_ok = Guard::cmp("r", 1, RelOp::Eq, sym("ok"));
    b.guarded_comm("StartBranch", ack_ok.clone(), running_reply(), "Moving");
    b.guarded_comm(
        "StartBranch",
        Guard::negate(ack_ok),
        send_lit(name, leaf, Message::tag("failure")),
        "Idle",
    );

    b.comm("Moving", recv_lit(leaf, name, go.clone()), "Query");
    b.comm("Moving", recv_lit(leaf, name, halt()), "HaltFwd");
    b.comm("Query", to_nav(Message::tag("get_status")), "QueryWait");
    b.comm(
        "QueryWait",
        CommAction::recv_var(from_nav, "r"),
        "QueryBranch",
    );
    let running = Guard::cmp("r", 2, RelOp::Eq, sym("running"));
    let reached = Guard::cmp("r", 2, RelOp::Eq, sym("reached"));
    b.guarded_comm("QueryBranch", running.clone(), running_reply(), "Moving");
    b.guarded_comm("QueryBranch", reached.clone(), running_reply(), "Charging");
    b.guarded_comm(
        "QueryBranch",
        Guard::negate(Guard::or(running, reached)),
        send_lit(name, leaf, Message::tag("failure")),
        "Idle",
    );

    b.comm("Charging", recv_lit(leaf, name, go), "ChargeQuery");
    b.comm("Charging", recv_lit(leaf, name, halt()), "HaltFwd");
    b.comm(
        "ChargeQuery",
        send_lit(name, BATTERY_READER, Message::tag("get_charging")),
        "ChargeWait",
    );
    b.comm(
        "ChargeWait",
        CommAction::recv_var(ChannelId::new(BATTERY_READER, name), "r"),
        "ChargeBranch",
    );
    let still_charging = Guard::cmp("r", 2, RelOp::Eq, Scalar::Bool(true));
    b.guarded_comm(
        "ChargeBranch",
        still_charging.clone(),
        running_reply(),
        "Charging",
    );
    b.guarded_comm(
        "ChargeBranch",
        Guard::negate(still_charging),
        send_lit(name, leaf, Message::tag("success")),
        "Idle",
    );

    b.comm("HaltFwd", to_nav(Message::tag("stop")), "Idle");
    b.build()
}

/// Fallback skill once the mission fails: reports `[<running>]` forever.
pub fn wait_skill(name: &str, leaf: &str) -> Result<ProgramGraph, ModelError> {
    let mut b = PgBuilder::new(name);
    b.initial("Idle");
    b.comm("Idle", recv_lit(leaf, name, Message::tag("wait")), "Reply");
    b.comm("Reply", send_lit(name, leaf, Message::tag("running")), "Idle");
    b.build()
}
