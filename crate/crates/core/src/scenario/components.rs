//! Functional-layer components: the battery reader and the navigator. Both
//! are request/reply servers over single-buffer channels and use native
//! effects to update the shared world state.

use std::sync::Arc;

use crate::error::ModelError;
use crate::model::guard::{Action, EffectCtx, Guard, NativeAction};
use crate::model::pg::{ChannelId, CommAction, PgBuilder, ProgramGraph};
use crate::scenario::config::{BatteryConfig, Fault};
use crate::scenario::grid::Grid;
use crate::value::{Message, RelOp, Scalar};

pub const BATTERY_READER: &str = "BatteryReader";
pub const NAVIGATION: &str = "Navigation";

/// Everything the native effects need to simulate the world.
#[derive(Debug)]
pub struct ScenarioParams {
    pub grid: Grid,
    pub battery: BatteryConfig,
    pub fault: Option<Fault>,
}

fn sym(s: &str) -> Scalar {
    Scalar::sym(s)
}

fn reply_parts(parts: Vec<Scalar>) -> Message {
    Message::of(parts)
}

fn effect_err(msg: &str) -> ModelError {
    ModelError::EffectFailed(msg.to_string())
}

/// What a battery-reader client asks for.
#[derive(Clone, Copy)]
enum BatteryQuery {
    Level,
    Charging,
}

/// The battery reader serves `[<get_level>]` requests from the level skill
/// and `[<get_charging>]` requests from the charging skill and the
/// recharging-station skill. Charging progresses on each level query: one
/// query arrives per tick because the level leaf is the first one ticked.
pub fn battery_reader(params: &Arc<ScenarioParams>) -> Result<ProgramGraph, ModelError> {
    let mut b = PgBuilder::new(BATTERY_READER);
    b.initial("Idle");
    b.var("req", crate::value::Domain::Any, Message::tag("none"))?;
    b.var("reply", crate::value::Domain::Any, Message::tag("none"))?;
    let clients = [
        ("BatteryLevel", BatteryQuery::Level),
        ("BatteryCharging", BatteryQuery::Charging),
        ("GoToRechargingStation", BatteryQuery::Charging),
    ];
    for (client, query) in clients {
        let serve = format!("Serve_{client}");
        let reply = format!("Reply_{client}");
        b.comm(
            "Idle",
            CommAction::recv_var(ChannelId::new(client, BATTERY_READER), "req"),
            &serve,
        );
        let p = Arc::clone(params);
        let effect = move |ctx: &mut EffectCtx<'_>| -> Result<(), ModelError> {
            let answer = match query {
                BatteryQuery::Level => {
                    let mut level = ctx
                        .get_int("battery_level")
                        .ok_or_else(|| effect_err("battery_level is not an integer"))?;
                    if ctx.get_bool("battery_charging").unwrap_or(false) {
                        level = (level + p.battery.charge_per_tick).min(100);
                        ctx.set_int("battery_level", level);
                        if level >= 100 {
                            ctx.set_bool("battery_charging", false);
                        }
                    }
                    let mut reported = level;
                    if let Some(Fault::ForceBatteryLevel {
                        level: forced,
                        from_tick,
                    }) = &p.fault
                    {
                        if ctx.tick >= *from_tick {
                            reported = *forced;
                        }
                    }
                    reply_parts(vec![sym("ok"), Scalar::Int(reported)])
                }
                BatteryQuery::Charging => {
                    let charging = ctx.get_bool("battery_charging").unwrap_or(false);
                    reply_parts(vec![sym("ok"), Scalar::Bool(charging)])
                }
            };
            ctx.set("BatteryReader.reply", answer);
            Ok(())
        };
        b.internal(
            &serve,
            Action::Native(NativeAction::new(format!("answer_{client}"), effect)),
            &reply,
        );
        b.comm(
            &reply,
            CommAction::send_var(ChannelId::new(BATTERY_READER, client), "reply"),
            "Idle",
        );
    }
    b.build()
}

fn decode_plan(msg: &Message) -> Result<Vec<(i64, i64)>, ModelError> {
    let n = match msg.part(1) {
        Some(Scalar::Int(n)) if *n >= 0 => *n as usize,
        _ => return Err(effect_err("malformed plan")),
    };
    let mut cells = Vec::with_capacity(n);
    for i in 0..n {
        match (msg.part(2 + 2 * i), msg.part(3 + 2 * i)) {
            (Some(Scalar::Int(x)), Some(Scalar::Int(y))) => cells.push((*x, *y)),
            _ => return Err(effect_err("malformed plan")),
        }
    }
    Ok(cells)
}

fn encode_plan(cells: &[(i64, i64)]) -> Message {
    let mut parts = vec![Scalar::Int(cells.len() as i64)];
    for (x, y) in cells {
        parts.push(Scalar::Int(*x));
        parts.push(Scalar::Int(*y));
    }
    Message::of(parts)
}

fn owner_is(ctx: &EffectCtx<'_>, client: &str) -> bool {
    matches!(
        ctx.get("Navigation.owner").and_then(|m| m.part(1)),
        Some(Scalar::Sym(s)) if s == client
    )
}

fn owner_target(ctx: &EffectCtx<'_>) -> Option<String> {
    match ctx.get("Navigation.owner")?.part(2)? {
        Scalar::Sym(s) => Some(s.clone()),
        _ => None,
    }
}

fn set_reply(ctx: &mut EffectCtx<'_>, parts: Vec<Scalar>) {
    ctx.set("Navigation.reply", reply_parts(parts));
}

/// Marks arrival; docking at the station starts charging.
fn arrive(ctx: &mut EffectCtx<'_>, target: &str) {
    if target == "RechargingStation" {
        ctx.set_bool("battery_charging", true);
    }
    set_reply(ctx, vec![sym("ok"), sym("reached")]);
}

/// The navigator plans a shortest path on request and advances the robot one
/// cell per status query. A plan belongs to the client that requested it;
/// `[<stop>]` from any other client is ignored, so a stale stop cannot
/// cancel a successor's plan.
pub fn navigation(params: &Arc<ScenarioParams>) -> Result<ProgramGraph, ModelError> {
    let mut b = PgBuilder::new(NAVIGATION);
    b.initial("Idle");
    b.var("req", crate::value::Domain::Any, Message::tag("none"))?;
    b.var("reply", crate::value::Domain::Any, Message::tag("none"))?;
    b.var("plan", crate::value::Domain::Any, Message::of(vec![Scalar::Int(0)]))?;
    b.var("owner", crate::value::Domain::Any, Message::tag("none"))?;
    for client in ["GoToDestination", "GoToRechargingStation"] {
        let dispatch = format!("Dispatch_{client}");
        let send = format!("Send_{client}");
        b.comm(
            "Idle",
            CommAction::recv_var(ChannelId::new(client, NAVIGATION), "req"),
            &dispatch,
        );

        let req_is = |tag: &str| Guard::cmp("req", 1, RelOp::Eq, sym(tag));

        let p = Arc::clone(params);
        let start = move |ctx: &mut EffectCtx<'_>| -> Result<(), ModelError> {
            let target = match ctx.get("Navigation.req").and_then(|m| m.part(2)) {
                Some(Scalar::Sym(s)) => s.clone(),
                _ => return Err(effect_err("start_navigation needs a target")),
            };
            let goal = match target.as_str() {
                "Destination" => p.grid.destination,
                "RechargingStation" => p.grid.station,
                _ => {
                    set_reply(ctx, vec![sym("path_not_found")]);
                    return Ok(());
                }
            };
            let from = (
                ctx.get_int("world_x").unwrap_or(0),
                ctx.get_int("world_y").unwrap_or(0),
            );
            match p.grid.path(from, goal) {
                None => set_reply(ctx, vec![sym("path_not_found")]),
                Some(cells) => {
                    ctx.set("Navigation.plan", encode_plan(&cells));
                    ctx.set(
                        "Navigation.owner",
                        Message::of(vec![sym(client), sym(&target)]),
                    );
                    set_reply(ctx, vec![sym("ok"), sym("started")]);
                }
            }
            Ok(())
        };
        b.transition(
            &dispatch,
            req_is("start_navigation"),
            crate::model::pg::Label::Internal(Action::Native(NativeAction::new(
                format!("plan_for_{client}"),
                start,
            ))),
            &send,
        );

        let p = Arc::clone(params);
        let status = move |ctx: &mut EffectCtx<'_>| -> Result<(), ModelError> {
            if !owner_is(ctx, client) {
                set_reply(ctx, vec![sym("ok"), sym("idle")]);
                return Ok(());
            }
            let target = owner_target(ctx).ok_or_else(|| effect_err("owner has no target"))?;
            let plan = ctx
                .get("Navigation.plan")
                .ok_or_else(|| effect_err("no plan variable"))?
                .clone();
            let mut cells = decode_plan(&plan)?;
            if cells.is_empty() {
                arrive(ctx, &target);
                return Ok(());
            }
            if let Some(Fault::OverrideNavigation { from_tick, to_tick }) = &p.fault {
                if ctx.tick >= *from_tick && ctx.tick < *to_tick {
                    set_reply(ctx, vec![sym("ok"), sym("running")]);
                    return Ok(());
                }
            }
            let (x, y) = cells.remove(0);
            ctx.set_int("world_x", x);
            ctx.set_int("world_y", y);
            let moved = ctx.get_int("moved_cells").unwrap_or(0) + 1;
            ctx.set_int("moved_cells", moved);
            if moved % p.battery.cells_per_unit == 0
                && !ctx.get_bool("battery_charging").unwrap_or(false)
            {
                let level = ctx.get_int("battery_level").unwrap_or(0);
                ctx.set_int("battery_level", (level - 1).max(0));
            }
            ctx.set("Navigation.plan", encode_plan(&cells));
            if cells.is_empty() {
                arrive(ctx, &target);
            } else {
                set_reply(ctx, vec![sym("ok"), sym("running")]);
            }
            Ok(())
        };
        b.transition(
            &dispatch,
            req_is("get_status"),
            crate::model::pg::Label::Internal(Action::Native(NativeAction::new(
                format!("advance_for_{client}"),
                status,
            ))),
            &send,
        );

        let stop = move |ctx: &mut EffectCtx<'_>| -> Result<(), ModelError> {
            if owner_is(ctx, client) {
                ctx.set("Navigation.plan", Message::of(vec![Scalar::Int(0)]));
                ctx.set("Navigation.owner", Message::tag("none"));
            }
            Ok(())
        };
        b.transition(
            &dispatch,
            req_is("stop"),
            crate::model::pg::Label::Internal(Action::Native(NativeAction::new(
                format!("stop_for_{client}"),
                stop,
            ))),
            "Idle",
        );

        b.comm(
            &send,
            CommAction::send_var(ChannelId::new(NAVIGATION, client), "reply"),
            "Idle",
        );
    }
    b.build()
}
