//! Longitudinal speed targets: car following, stopping at the line and the
//! turn approach profile.

use crate::config::SimConfig;
use crate::geometry::Path;
use crate::traffic::{kinematic_step, speed_limit_at, Kinematics};

/// Highest speed for the next step that keeps the gap to a leader at least
/// `safe_follow_gap + standstill_gap` after the step, assuming the leader
/// holds its speed over the step and could then brake at its maximum rate.
pub fn safe_speed(gap: f64, v: f64, v_leader: f64, cfg: &SimConfig) -> f64 {
    let b = cfg.brake.b_max_brake;
    let a = cfg.brake.a_max_brake;
    let dt = cfg.dt;
    let k = cfg.brake.rho + dt / 2.0;
    let r = gap + v_leader * dt - v * dt / 2.0 + v_leader * v_leader / (2.0 * a)
        - cfg.standstill_gap;
    if r <= 0.0 {
        return 0.0;
    }
    // The clamp in the gap rule means the standstill margin alone must also hold.
    let margin_cap = 2.0 * (gap + v_leader * dt - cfg.standstill_gap) / dt - v;
    (b * (-k + (k * k + 2.0 * r / b).sqrt())).min(margin_cap).max(0.0)
}

/// Highest speed for the next step from which the vehicle can still stop
/// within `dist` braking comfortably.
pub fn stop_speed(dist: f64, v: f64, cfg: &SimConfig) -> f64 {
    let b = cfg.a_comfort;
    let dt = cfg.dt;
    let r = dist - v * dt / 2.0;
    if r <= 0.0 {
        return 0.0;
    }
    b * (-dt / 2.0 + (dt * dt / 4.0 + 2.0 * r / b).sqrt())
}

/// Stop lines are approached with this much room left in front.
pub const STOP_MARGIN: f64 = 0.2;

/// Speed allowed by the road itself: straight limit, with turners slowing
/// comfortably so they reach the stop line at the turn limit.
pub fn route_speed(path: &Path, s: f64, cfg: &SimConfig) -> f64 {
    let limit = speed_limit_at(path, s, &cfg.speeds);
    if path.intention.is_turn() && s < path.s_junction_entry {
        let d = path.s_junction_entry - s;
        let vt = cfg.speeds.turn;
        limit.min((vt * vt + 2.0 * cfg.a_comfort * d).sqrt())
    } else {
        limit
    }
}

/// Acceleration command towards `v_target`, clamped to the braking and
/// comfort limits.
pub fn accel_towards(v_target: f64, v: f64, cfg: &SimConfig) -> f64 {
    ((v_target - v) / cfg.dt).clamp(-cfg.brake.b_max_brake, cfg.a_comfort)
}

/// Front positions after each step of an unimpeded trip over the whole
/// path, starting at the straight limit from the spawn point, under the same
/// controller as the engine.
pub fn free_flow_trace(path: &Path, cfg: &SimConfig) -> Vec<f64> {
    let mut k = Kinematics {
        s: 0.0,
        v: cfg.speeds.straight,
    };
    let mut trace = Vec::new();
    while k.s < path.total_length {
        let target = route_speed(path, k.s, cfg);
        let a = accel_towards(target, k.v, cfg);
        k = kinematic_step(k, a, cfg.dt, speed_limit_at(path, k.s, &cfg.speeds));
        trace.push(k.s);
    }
    trace
}

/// Unimpeded travel time over the whole path.
pub fn free_flow_time(path: &Path, cfg: &SimConfig) -> f64 {
    free_flow_trace(path, cfg).len() as f64 * cfg.dt
}

/// Unimpeded time to bring the front to `s`, read off a trace.
pub fn free_flow_time_to(trace: &[f64], s: f64, dt: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    (trace.partition_point(|&x| x < s) + 1).min(trace.len()) as f64 * dt
}
