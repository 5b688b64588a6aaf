//! TOML scenario configuration: map, battery tuning, run parameters and
//! optional fault injection.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::scenario::grid::Grid;
use crate::scenario::ScenarioError;

/// Battery simulation tuning.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BatteryConfig {
    /// Charge level at the start of the run, in percent.
    pub start_level: i64,
    /// The level drops by one for every this many cells travelled.
    pub cells_per_unit: i64,
    /// Level gained per tick while docked at the station.
    pub charge_per_tick: i64,
    /// The level-check leaf succeeds when the reported level is at least
    /// this value.
    pub low_threshold: i64,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        BatteryConfig {
            start_level: 36,
            cells_per_unit: 3,
            charge_per_tick: 5,
            low_threshold: 30,
        }
    }
}

/// Run parameters shared by the CLI and the experiment configs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    /// Maximum number of scheduler steps.
    pub horizon: u64,
    /// Deadline parameter bound to `theta` in property files, in ticks.
    pub theta: i64,
    pub stop_on_violation: bool,
    /// Property file path, relative to the config file.
    pub properties: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            horizon: 5000,
            theta: 100,
            stop_on_violation: false,
            properties: None,
        }
    }
}

/// An injected fault, if any. At most one fault is active per run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Fault {
    /// From the given tick on, the battery reader reports this level
    /// regardless of the simulated one.
    ForceBatteryLevel { level: i64, from_tick: u64 },
    /// The level-check leaf compares against this threshold instead of the
    /// configured one.
    SkillThresholdBug { threshold: i64 },
    /// Navigation stops advancing in the tick interval `[from_tick, to_tick)`.
    OverrideNavigation { from_tick: u64, to_tick: u64 },
}

/// A full scenario file. Exactly one of `map` (inline ASCII art) or
/// `map_file` (path relative to the config file) must be given.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub map: Option<String>,
    pub map_file: Option<PathBuf>,
    pub battery: BatteryConfig,
    pub run: RunConfig,
    pub fault: Option<Fault>,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<ScenarioConfig, ScenarioError> {
        toml::from_str(text).map_err(|e| ScenarioError::BadConfig(e.to_string()))
    }

    /// Loads the config and resolves `map_file`/`properties` relative to the
    /// config file's directory. Returns the config, the parsed grid, and the
    /// resolved property file path, if any.
    pub fn load(path: &Path) -> Result<(ScenarioConfig, Grid, Option<PathBuf>), ScenarioError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ScenarioError::BadConfig(format!("{}: {e}", path.display())))?;
        let config = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let map_text = match (&config.map, &config.map_file) {
            (Some(inline), None) => inline.clone(),
            (None, Some(file)) => {
                let resolved = base.join(file);
                std::fs::read_to_string(&resolved)
                    .map_err(|e| ScenarioError::BadConfig(format!("{}: {e}", resolved.display())))?
            }
            _ => {
                return Err(ScenarioError::BadConfig(
                    "exactly one of `map` and `map_file` must be set".into(),
                ))
            }
        };
        let grid = Grid::parse(&map_text)?;
        let properties = config.run.properties.as_ref().map(|p| base.join(p));
        Ok((config, grid, properties))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fault_variants() {
        let c = ScenarioConfig::from_toml(
            "map = \"x\"\n[fault]\nkind = \"force_battery_level\"\nlevel = 10\nfrom_tick = 12\n",
        )
        .unwrap();
        assert_eq!(
            c.fault,
            Some(Fault::ForceBatteryLevel {
                level: 10,
                from_tick: 12
            })
        );
        let c = ScenarioConfig::from_toml(
            "[fault]\nkind = \"skill_threshold_bug\"\nthreshold = 20\n",
        )
        .unwrap();
        assert_eq!(c.fault, Some(Fault::SkillThresholdBug { threshold: 20 }));
    }

    #[test]
    fn defaults_are_filled_in() {
        let c = ScenarioConfig::from_toml("map = \"#\"").unwrap();
        assert_eq!(c.battery.start_level, 36);
        assert_eq!(c.run.theta, 100);
        assert!(c.fault.is_none());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ScenarioConfig::from_toml("mapp = \"x\"").is_err());
        assert!(ScenarioConfig::from_toml("[battery]\nvoltage = 3").is_err());
    }
}
