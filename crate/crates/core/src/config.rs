//! Simulation configuration: a flat `key = value` text format.
//!
//! ```text
//! # arrival rate per entry lane
//! lambda = 400          # veh/(lane*h)
//! accept_probability = 0.5
//! ```
//!
//! Every key is optional; missing keys take the defaults listed in
//! [`SimConfig::default`].

use std::fmt::Write as _;

use crate::error::ConfigError;
use crate::geometry::{build_layout, Intention, LayoutParams};
use crate::safety::BrakeParams;

/// Relative weights of left, right and straight movements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntentionRatio {
    pub left: f64,
    pub right: f64,
    pub straight: f64,
}

impl IntentionRatio {
    pub fn total(&self) -> f64 {
        self.left + self.right + self.straight
    }

    /// Maps a uniform draw in `[0, 1)` onto an intention.
    pub fn pick(&self, u: f64) -> Intention {
        let x = u * self.total();
        if x < self.left {
            Intention::Left
        } else if x < self.left + self.right {
            Intention::Right
        } else {
            Intention::Straight
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedLimits {
    pub straight: f64,
    pub turn: f64,
}

impl SpeedLimits {
    pub fn for_intention(&self, i: Intention) -> f64 {
        if i.is_turn() {
            self.turn
        } else {
            self.straight
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoopParams {
    /// Minimum time between two vehicles from different lanes using one cell.
    pub headway: f64,
    pub cell_size: f64,
    pub replan_period: f64,
    pub rollouts: usize,
    /// Vehicles per lane handed to the order search; later ones are appended
    /// first-come-first-served.
    pub plan_window: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Arrival rate per entry lane, veh/(lane·h).
    pub lambda: f64,
    pub intention_ratio: IntentionRatio,
    pub dt: f64,
    pub duration: f64,
    pub seed: u64,
    pub accept_probability: f64,
    pub speeds: SpeedLimits,
    pub a_comfort: f64,
    pub brake: BrakeParams<f64>,
    pub layout: LayoutParams,
    pub vehicle_length: f64,
    /// Distance to the stop line at which a lane leader enters its decision
    /// stage. The default is the whole approach inside the control zone.
    pub decision_distance: f64,
    /// Extra bumper-to-bumper margin on top of the safe following gap.
    pub standstill_gap: f64,
    /// Exits before this time are left out of the metrics.
    pub warmup: f64,
    pub rss_tie_break: bool,
    pub coop: CoopParams,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            lambda: 400.0,
            intention_ratio: IntentionRatio {
                left: 3.0,
                right: 3.0,
                straight: 4.0,
            },
            dt: 0.1,
            duration: 1200.0,
            seed: 0,
            accept_probability: 0.5,
            speeds: SpeedLimits {
                straight: 10.0,
                turn: 5.0,
            },
            a_comfort: 2.0,
            brake: BrakeParams::default(),
            layout: LayoutParams::default(),
            vehicle_length: 3.5,
            decision_distance: 97.0,
            standstill_gap: 1.0,
            warmup: 0.0,
            rss_tie_break: true,
            coop: CoopParams {
                headway: 2.0,
                cell_size: 3.0,
                replan_period: 1.0,
                rollouts: 48,
                plan_window: 3,
            },
        }
    }
}

const KEYS: &[&str] = &[
    "lambda",
    "ratio_left",
    "ratio_right",
    "ratio_straight",
    "dt",
    "duration",
    "seed",
    "accept_probability",
    "v_straight",
    "v_turn",
    "a_comfort",
    "rho",
    "a_max_brake",
    "a_min_brake",
    "b_max_brake",
    "b_min_brake",
    "lane_width",
    "control_radius",
    "spawn_distance",
    "vehicle_length",
    "decision_distance",
    "standstill_gap",
    "warmup",
    "rss_tie_break",
    "coop_headway",
    "coop_cell_size",
    "coop_replan_period",
    "coop_rollouts",
    "coop_plan_window",
];

impl SimConfig {
    /// Parses and validates configuration text, filling defaults.
    pub fn parse(text: &str) -> Result<SimConfig, ConfigError> {
        let mut cfg = SimConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line,
                    text: body.to_string(),
                });
            };
            cfg.set(line, key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, line: usize, key: &str, value: &str) -> Result<(), ConfigError> {
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey {
                line,
                key: key.to_string(),
            });
        }
        let bad = || ConfigError::NotNumeric {
            line,
            key: key.to_string(),
            value: value.to_string(),
        };
        if key == "rss_tie_break" {
            self.rss_tie_break = match value {
                "true" | "1" => true,
                "false" | "0" => false,
                _ => return Err(bad()),
            };
            return Ok(());
        }
        if matches!(key, "seed" | "coop_rollouts" | "coop_plan_window") {
            let n: u64 = value.parse().map_err(|_| bad())?;
            match key {
                "seed" => self.seed = n,
                "coop_rollouts" => self.coop.rollouts = n as usize,
                _ => self.coop.plan_window = n as usize,
            }
            return Ok(());
        }
        let x: f64 = value.parse().map_err(|_| bad())?;
        if !x.is_finite() {
            return Err(bad());
        }
        let slot = match key {
            "lambda" => &mut self.lambda,
            "ratio_left" => &mut self.intention_ratio.left,
            "ratio_right" => &mut self.intention_ratio.right,
            "ratio_straight" => &mut self.intention_ratio.straight,
            "dt" => &mut self.dt,
            "duration" => &mut self.duration,
            "accept_probability" => &mut self.accept_probability,
            "v_straight" => &mut self.speeds.straight,
            "v_turn" => &mut self.speeds.turn,
            "a_comfort" => &mut self.a_comfort,
            "rho" => &mut self.brake.rho,
            "a_max_brake" => &mut self.brake.a_max_brake,
            "a_min_brake" => &mut self.brake.a_min_brake,
            "b_max_brake" => &mut self.brake.b_max_brake,
            "b_min_brake" => &mut self.brake.b_min_brake,
            "lane_width" => &mut self.layout.lane_width,
            "control_radius" => &mut self.layout.control_radius,
            "spawn_distance" => &mut self.layout.spawn_distance,
            "vehicle_length" => &mut self.vehicle_length,
            "decision_distance" => &mut self.decision_distance,
            "standstill_gap" => &mut self.standstill_gap,
            "warmup" => &mut self.warmup,
            "coop_headway" => &mut self.coop.headway,
            "coop_cell_size" => &mut self.coop.cell_size,
            "coop_replan_period" => &mut self.coop.replan_period,
            _ => unreachable!("key list and setter out of sync: {key}"),
        };
        *slot = x;
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        fn check(ok: bool, key: &'static str, reason: &str) -> Result<(), ConfigError> {
            if ok {
                Ok(())
            } else {
                Err(ConfigError::OutOfRange {
                    key,
                    reason: reason.to_string(),
                })
            }
        }
        check(self.lambda >= 0.0, "lambda", "must be >= 0")?;
        check(self.dt > 0.0, "dt", "must be > 0")?;
        check(self.duration > 0.0, "duration", "must be > 0")?;
        check(
            (0.0..=1.0).contains(&self.accept_probability),
            "accept_probability",
            "must lie in [0, 1]",
        )?;
        let r = &self.intention_ratio;
        check(
            r.left >= 0.0 && r.right >= 0.0 && r.straight >= 0.0 && r.total() > 0.0,
            "ratio_left",
            "ratios must be >= 0 with a positive sum",
        )?;
        check(self.speeds.turn > 0.0, "v_turn", "must be > 0")?;
        check(
            self.speeds.straight >= self.speeds.turn,
            "v_straight",
            "must be >= v_turn",
        )?;
        check(self.a_comfort > 0.0, "a_comfort", "must be > 0")?;
        check(
            self.brake.is_valid(),
            "rho",
            "need rho >= 0 and 0 < min_brake <= max_brake for both vehicles",
        )?;
        check(self.vehicle_length > 0.0, "vehicle_length", "must be > 0")?;
        check(self.standstill_gap >= 0.0, "standstill_gap", "must be >= 0")?;
        check(
            self.warmup >= 0.0 && self.warmup < self.duration,
            "warmup",
            "must lie in [0, duration)",
        )?;
        check(self.coop.headway >= 0.0, "coop_headway", "must be >= 0")?;
        check(self.coop.cell_size > 0.0, "coop_cell_size", "must be > 0")?;
        check(
            self.coop.replan_period > 0.0,
            "coop_replan_period",
            "must be > 0",
        )?;
        check(self.coop.rollouts >= 1, "coop_rollouts", "must be >= 1")?;
        check(self.coop.plan_window >= 1, "coop_plan_window", "must be >= 1")?;
        build_layout(self.layout)?;
        let approach = self.layout.control_radius - self.layout.lane_width;
        check(
            self.decision_distance > 0.0 && self.decision_distance <= approach,
            "decision_distance",
            "must be positive and inside the control zone",
        )?;
        Ok(())
    }

    /// Normalized configuration text with every key spelled out.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("lambda", self.lambda.to_string());
        kv("ratio_left", self.intention_ratio.left.to_string());
        kv("ratio_right", self.intention_ratio.right.to_string());
        kv("ratio_straight", self.intention_ratio.straight.to_string());
        kv("dt", self.dt.to_string());
        kv("duration", self.duration.to_string());
        kv("seed", self.seed.to_string());
        kv("accept_probability", self.accept_probability.to_string());
        kv("v_straight", self.speeds.straight.to_string());
        kv("v_turn", self.speeds.turn.to_string());
        kv("a_comfort", self.a_comfort.to_string());
        kv("rho", self.brake.rho.to_string());
        kv("a_max_brake", self.brake.a_max_brake.to_string());
        kv("a_min_brake", self.brake.a_min_brake.to_string());
        kv("b_max_brake", self.brake.b_max_brake.to_string());
        kv("b_min_brake", self.brake.b_min_brake.to_string());
        kv("lane_width", self.layout.lane_width.to_string());
        kv("control_radius", self.layout.control_radius.to_string());
        kv("spawn_distance", self.layout.spawn_distance.to_string());
        kv("vehicle_length", self.vehicle_length.to_string());
        kv("decision_distance", self.decision_distance.to_string());
        kv("standstill_gap", self.standstill_gap.to_string());
        kv("warmup", self.warmup.to_string());
        kv("rss_tie_break", self.rss_tie_break.to_string());
        kv("coop_headway", self.coop.headway.to_string());
        kv("coop_cell_size", self.coop.cell_size.to_string());
        kv("coop_replan_period", self.coop.replan_period.to_string());
        kv("coop_rollouts", self.coop.rollouts.to_string());
        kv("coop_plan_window", self.coop.plan_window.to_string());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let cfg = SimConfig::parse("").unwrap();
        assert_eq!(cfg, SimConfig::default());
        assert_eq!(cfg.brake.rho, 1.0);
        assert_eq!(cfg.brake.a_max_brake, 6.0);
        assert_eq!(cfg.brake.b_min_brake, 2.0);
        assert_eq!(cfg.dt, 0.1);
        assert_eq!(cfg.duration, 1200.0);
        assert_eq!(cfg.accept_probability, 0.5);
        assert_eq!((cfg.speeds.straight, cfg.speeds.turn), (10.0, 5.0));
        assert_eq!(cfg.layout.control_radius, 100.0);
        assert_eq!(cfg.layout.lane_width, 3.0);
        assert_eq!(cfg.vehicle_length, 3.5);
        let r = cfg.intention_ratio;
        assert_eq!((r.left, r.right, r.straight), (3.0, 3.0, 4.0));
    }

    #[test]
    fn rejects_negative_dt() {
        let err = SimConfig::parse("dt = -1").unwrap_err();
        assert!(matches!(err, ConfigError::OutOfRange { key: "dt", .. }));
    }

    #[test]
    fn rejects_probability_above_one() {
        let err = SimConfig::parse("accept_probability = 1.5").unwrap_err();
        assert!(matches!(
            err,
            ConfigError::OutOfRange {
                key: "accept_probability",
                ..
            }
        ));
    }

    #[test]
    fn reports_offending_key() {
        let err = SimConfig::parse("lambda = 10\nlamda = 3").unwrap_err();
        assert_eq!(
            err,
            ConfigError::UnknownKey {
                line: 2,
                key: "lamda".into()
            }
        );
        let err = SimConfig::parse("rho = fast").unwrap_err();
        assert!(matches!(err, ConfigError::NotNumeric { line: 1, .. }));
        assert!(matches!(
            SimConfig::parse("just words").unwrap_err(),
            ConfigError::Syntax { .. }
        ));
    }

    #[test]
    fn comments_and_round_trip() {
        let cfg = SimConfig::parse("lambda = 200 # veh/(lane*h)\n\n# note\nseed = 7\n").unwrap();
        assert_eq!(cfg.lambda, 200.0);
        assert_eq!(cfg.seed, 7);
        assert_eq!(SimConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn brake_ordering_enforced() {
        assert!(SimConfig::parse("a_min_brake = 7").is_err());
    }

    #[test]
    fn ratio_pick_boundaries() {
        let r = SimConfig::default().intention_ratio;
        assert_eq!(r.pick(0.0), Intention::Left);
        assert_eq!(r.pick(0.299), Intention::Left);
        assert_eq!(r.pick(0.3), Intention::Right);
        assert_eq!(r.pick(0.61), Intention::Straight);
    }
}
