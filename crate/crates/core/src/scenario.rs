//! Fixed-population scenarios: a small text format listing one vehicle per
//! line, and a runner that reports the order in which they enter the
//! junction.
//!
//! ```text
//! # name  lane  intention  position   speed
//! A       3     straight   d=25       v=10
//! B       1     right      s=177      v=8
//! ```
//!
//! Lanes are entry labels (1, 3, 5, 7). Position is either `s=` (arc length
//! from the spawn point) or `d=` (distance to the stop line).

use crate::config::SimConfig;
use crate::engine::{InitialVehicle, JunctionPass, SimOutcome, Simulation};
use crate::error::{ScenarioError, SimError};
use crate::geometry::{build_layout, Branch, Intention};
use crate::strategy::StrategyKind;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioVehicle {
    pub name: String,
    pub lane: Branch,
    pub intention: Intention,
    pub position: Position,
    pub v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Position {
    /// Arc length from the spawn point.
    S(f64),
    /// Distance to the stop line.
    D(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub vehicles: Vec<ScenarioVehicle>,
}

/// One junction entry, in entry order.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub name: String,
    pub id: u32,
    pub enter: f64,
    pub clear: f64,
}

#[derive(Debug)]
pub struct ScenarioRun {
    pub entries: Vec<Entry>,
    pub outcome: SimOutcome,
}

impl ScenarioRun {
    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.name.as_str()).collect()
    }

    pub fn entry(&self, name: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// Whether the junction intervals of two named vehicles overlap.
    pub fn overlapping(&self, a: &str, b: &str) -> bool {
        match (self.entry(a), self.entry(b)) {
            (Some(x), Some(y)) => x.enter < y.clear && y.enter < x.clear,
            _ => false,
        }
    }
}

fn number(line: usize, key: &str, text: &str) -> Result<f64, ScenarioError> {
    let x: f64 = text.parse().map_err(|_| ScenarioError::Malformed {
        line,
        message: format!("`{key}` is not a number: `{text}`"),
    })?;
    if !x.is_finite() {
        return Err(ScenarioError::Malformed {
            line,
            message: format!("`{key}` must be finite"),
        });
    }
    Ok(x)
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario, ScenarioError> {
        let mut vehicles = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let bad = |message: String| ScenarioError::Malformed { line, message };
            let f: Vec<&str> = body.split_whitespace().collect();
            if f.len() != 5 {
                return Err(bad(format!(
                    "expected `name lane intention s=|d= v=`, got {} fields",
                    f.len()
                )));
            }
            let name = f[0].to_string();
            if vehicles.iter().any(|v: &ScenarioVehicle| v.name == name) {
                return Err(bad(format!("duplicate vehicle `{name}`")));
            }
            let lane = f[1]
                .parse::<u8>()
                .ok()
                .and_then(Branch::from_entry_label)
                .ok_or_else(|| bad(format!("lane must be 1, 3, 5 or 7, got `{}`", f[1])))?;
            let intention: Intention = f[2].parse().map_err(bad)?;
            let position = match f[3].split_once('=') {
                Some(("s", x)) => Position::S(number(line, "s", x)?),
                Some(("d", x)) => Position::D(number(line, "d", x)?),
                _ => return Err(bad(format!("expected `s=` or `d=`, got `{}`", f[3]))),
            };
            let v = match f[4].split_once('=') {
                Some(("v", x)) => number(line, "v", x)?,
                _ => return Err(bad(format!("expected `v=`, got `{}`", f[4]))),
            };
            if v < 0.0 {
                return Err(bad("speed must be >= 0".into()));
            }
            vehicles.push(ScenarioVehicle {
                name,
                lane,
                intention,
                position,
                v,
            });
        }
        if vehicles.is_empty() {
            return Err(ScenarioError::Empty);
        }
        Ok(Scenario { vehicles })
    }

    /// Initial states on the layout of `cfg`, in file order.
    pub fn initial(&self, cfg: &SimConfig) -> Result<Vec<InitialVehicle>, SimError> {
        let layout = build_layout(cfg.layout).map_err(crate::error::ConfigError::from)?;
        Ok(self
            .vehicles
            .iter()
            .map(|sv| {
                let path = layout.path(sv.lane, sv.intention);
                let s = match sv.position {
                    Position::S(s) => s,
                    Position::D(d) => path.s_junction_entry - d,
                };
                InitialVehicle {
                    lane: sv.lane,
                    intention: sv.intention,
                    s,
                    v: sv.v,
                }
            })
            .collect())
    }
}

/// Replays a scenario until every vehicle has left or `limit` seconds pass.
pub fn run_scenario(
    scenario: &Scenario,
    cfg: &SimConfig,
    kind: StrategyKind,
    limit: f64,
) -> Result<ScenarioRun, SimError> {
    let initial = scenario.initial(cfg)?;
    let outcome = Simulation::with_vehicles(cfg, kind, &initial, true)?.run_until_empty(limit)?;
    let mut passes: Vec<&JunctionPass> = outcome.passes.iter().collect();
    passes.sort_by(|a, b| a.enter.total_cmp(&b.enter).then(a.id.cmp(&b.id)));
    let entries = passes
        .iter()
        .map(|p| Entry {
            name: scenario.vehicles[p.id as usize].name.clone(),
            id: p.id,
            enter: p.enter,
            clear: p.clear,
        })
        .collect();
    Ok(ScenarioRun { entries, outcome })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_both_position_forms() {
        let s = Scenario::parse("# x\nA 3 straight d=25 v=10\nB 1 r s=170 v=8 # note\n").unwrap();
        assert_eq!(s.vehicles.len(), 2);
        assert_eq!(s.vehicles[0].position, Position::D(25.0));
        assert_eq!(s.vehicles[1].lane, Branch::North);
        assert_eq!(s.vehicles[1].intention, Intention::Right);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = Scenario::parse("A 3 straight d=25 v=10\n\nB 2 left d=3 v=1\n").unwrap_err();
        assert!(e.to_string().starts_with("line 3:"), "{e}");
        let e = Scenario::parse("A 3 straight q=25 v=10").unwrap_err();
        assert!(e.to_string().contains("line 1"));
        assert!(matches!(Scenario::parse("# nothing\n"), Err(ScenarioError::Empty)));
    }
}
