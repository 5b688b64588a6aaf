//! Assembly of the patrol scenario: tick generator, compiled tree, skills
//! and components wired into one channel system.

use std::sync::Arc;

use crate::bt::{compile, tick_generator, BtDefinition, BtNode, BtStatus, LeafBinding};
use crate::cond::MessageCondition;
use crate::model::system::{ChannelSystem, ChannelSystemBuilder};
use crate::scenario::components::{battery_reader, navigation, ScenarioParams};
use crate::scenario::config::{BatteryConfig, Fault};
use crate::scenario::grid::Grid;
use crate::scenario::skills::{goto_destination_skill, goto_station_skill, query_skill, wait_skill};
use crate::scenario::ScenarioError;
use crate::value::{Domain, Message, RelOp, Scalar};

pub const TICK_SOURCE: &str = "Ticker";

fn sym(s: &str) -> Scalar {
    Scalar::sym(s)
}

/// The mission tree: keep the battery healthy, otherwise recharge; with a
/// healthy battery head for the destination; if all of that fails, wait for
/// a human.
///
/// ```text
/// ? root
/// ├── → mission
/// │   ├── ? battery_ok
/// │   │   ├── → battery_check
/// │   │   │   ├── BatteryLevelAbove30
/// │   │   │   └── BatteryNotRecharging
/// │   │   └── GoToRechargingStation
/// │   └── GoToDestination
/// └── WaitForUser
/// ```
pub fn mission_tree(level_threshold: i64) -> BtDefinition {
    let root = BtNode::fallback(
        "root",
        vec![
            BtNode::sequence(
                "mission",
                vec![
                    BtNode::fallback(
                        "battery_ok",
                        vec![
                            BtNode::sequence(
                                "battery_check",
                                vec![
                                    BtNode::leaf("BatteryLevelAbove30"),
                                    BtNode::leaf("BatteryNotRecharging"),
                                ],
                            ),
                            BtNode::leaf("GoToRechargingStation"),
                        ],
                    ),
                    BtNode::leaf("GoToDestination"),
                ],
            ),
            BtNode::leaf("WaitForUser"),
        ],
    );
    let ok = |part, op, rhs| {
        MessageCondition::and(
            MessageCondition::cmp(1, RelOp::Eq, sym("ok")),
            MessageCondition::cmp(part, op, rhs),
        )
    };
    let mut bindings = std::collections::BTreeMap::new();
    bindings.insert(
        "BatteryLevelAbove30".to_string(),
        LeafBinding {
            skill: "BatteryLevel".into(),
            request: Message::tag("get_level"),
            halt_request: None,
            mapping: vec![
                (ok(2, RelOp::Ge, Scalar::Int(level_threshold)), BtStatus::Success),
                (MessageCondition::True, BtStatus::Failure),
            ],
        },
    );
    bindings.insert(
        "BatteryNotRecharging".to_string(),
        LeafBinding {
            skill: "BatteryCharging".into(),
            request: Message::tag("get_charging"),
            halt_request: None,
            mapping: vec![
                (ok(2, RelOp::Eq, Scalar::Bool(false)), BtStatus::Success),
                (MessageCondition::True, BtStatus::Failure),
            ],
        },
    );
    bindings.insert(
        "GoToRechargingStation".to_string(),
        LeafBinding {
            skill: "GoToRechargingStation".into(),
            request: Message::tag("go_station"),
            halt_request: Some(Message::tag("halt")),
            mapping: vec![
                (MessageCondition::cmp(1, RelOp::Eq, sym("running")), BtStatus::Running),
                (MessageCondition::cmp(1, RelOp::Eq, sym("success")), BtStatus::Success),
                (MessageCondition::True, BtStatus::Failure),
            ],
        },
    );
    bindings.insert(
        "GoToDestination".to_string(),
        LeafBinding {
            skill: "GoToDestination".into(),
            request: Message::tag("go"),
            halt_request: Some(Message::tag("halt")),
            mapping: vec![
                (ok(2, RelOp::Eq, sym("running")), BtStatus::Running),
                (ok(2, RelOp::Eq, sym("reached")), BtStatus::Success),
                (MessageCondition::True, BtStatus::Failure),
            ],
        },
    );
    bindings.insert(
        "WaitForUser".to_string(),
        LeafBinding {
            skill: "WaitForUser".into(),
            request: Message::tag("wait"),
            halt_request: None,
            mapping: vec![(MessageCondition::True, BtStatus::Running)],
        },
    );
    BtDefinition { root, bindings }
}

/// A built scenario, ready to run.
pub struct Scenario {
    pub system: ChannelSystem,
    pub tree: BtDefinition,
    pub params: Arc<ScenarioParams>,
}

/// Wires the tree, skills and components together. The skill-threshold
/// fault rewrites the level leaf's comparison; the other faults are wired
/// into the component natives.
pub fn build_scenario(
    grid: Grid,
    battery: BatteryConfig,
    fault: Option<Fault>,
) -> Result<Scenario, ScenarioError> {
    if battery.start_level < 0 || battery.start_level > 100 {
        return Err(ScenarioError::BadConfig(format!(
            "start_level {} outside 0..=100",
            battery.start_level
        )));
    }
    if battery.cells_per_unit < 1 || battery.charge_per_tick < 1 {
        return Err(ScenarioError::BadConfig(
            "cells_per_unit and charge_per_tick must be at least 1".into(),
        ));
    }
    for (from, to, what) in [
        (grid.start, grid.destination, "start to destination"),
        (grid.start, grid.station, "start to station"),
        (grid.station, grid.destination, "station to destination"),
    ] {
        if grid.path(from, to).is_none() {
            return Err(ScenarioError::NoPath(what.to_string()));
        }
    }

    let threshold = match &fault {
        Some(Fault::SkillThresholdBug { threshold }) => *threshold,
        _ => battery.low_threshold,
    };
    let tree = mission_tree(threshold);
    let start = grid.start;
    let width = grid.width();
    let height = grid.height();
    let params = Arc::new(ScenarioParams {
        grid,
        battery: battery.clone(),
        fault,
    });

    let compiled = compile(&tree, TICK_SOURCE)?;
    let mut b = ChannelSystemBuilder::new();
    b.process(tick_generator(TICK_SOURCE, &compiled.root_process)?)?;
    for p in compiled.processes {
        b.process(p)?;
    }
    b.process(query_skill(
        "BatteryLevel",
        "bt.BatteryLevelAbove30",
        "BatteryReader",
        Message::tag("get_level"),
    )?)?;
    b.process(query_skill(
        "BatteryCharging",
        "bt.BatteryNotRecharging",
        "BatteryReader",
        Message::tag("get_charging"),
    )?)?;
    b.process(goto_destination_skill(
        "GoToDestination",
        "bt.GoToDestination",
    )?)?;
    b.process(goto_station_skill(
        "GoToRechargingStation",
        "bt.GoToRechargingStation",
    )?)?;
    b.process(wait_skill("WaitForUser", "bt.WaitForUser")?)?;
    b.process(battery_reader(&params)?)?;
    b.process(navigation(&params)?)?;

    for (src, dst, cap) in &compiled.channels {
        b.channel(src.clone(), dst.clone(), *cap)?;
    }
    for (a, c) in [
        ("BatteryLevel", "BatteryReader"),
        ("BatteryCharging", "BatteryReader"),
        ("GoToRechargingStation", "BatteryReader"),
        ("GoToDestination", "Navigation"),
        ("GoToRechargingStation", "Navigation"),
    ] {
        b.channel(a, c, 1)?;
        b.channel(c, a, 1)?;
    }

    b.shared_var(
        "world_x",
        Domain::IntRange(0, width - 1),
        Message::of(vec![Scalar::Int(start.0)]),
    )?;
    b.shared_var(
        "world_y",
        Domain::IntRange(0, height - 1),
        Message::of(vec![Scalar::Int(start.1)]),
    )?;
    b.shared_var(
        "battery_level",
        Domain::IntRange(0, 100),
        Message::of(vec![Scalar::Int(battery.start_level)]),
    )?;
    b.shared_var(
        "battery_charging",
        Domain::Bool,
        Message::of(vec![Scalar::Bool(false)]),
    )?;
    b.shared_var(
        "moved_cells",
        Domain::IntRange(0, i64::MAX),
        Message::of(vec![Scalar::Int(0)]),
    )?;
    b.tick_channel(TICK_SOURCE, &compiled.root_process);

    Ok(Scenario {
        system: b.build()?,
        tree,
        params,
    })
}
