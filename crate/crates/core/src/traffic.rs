//! Vehicles, Poisson arrivals, longitudinal kinematics, delay accounting
//! and platoon grouping.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::config::{IntentionRatio, SpeedLimits};
use crate::geometry::{Branch, Intention, Path};
use crate::safety::{safe_follow_gap, BrakeParams};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    CarFollowing,
    Decision,
    Action,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vehicle {
    pub id: u32,
    pub lane: Branch,
    pub intention: Intention,
    /// Front-bumper arc length along the vehicle's path.
    pub s: f64,
    pub v: f64,
    pub length: f64,
    pub stage: Stage,
    pub platoon_id: Option<u32>,
    /// Time the vehicle joined the point queue at the spawn point.
    pub spawn_time: f64,
    /// Time it was actually placed on the road.
    pub inject_time: f64,
    pub exit_time: Option<f64>,
    pub junction_enter_time: Option<f64>,
    pub junction_clear_time: Option<f64>,
}

impl Vehicle {
    pub fn new(id: u32, lane: Branch, intention: Intention, spawn_time: f64, length: f64) -> Self {
        Vehicle {
            id,
            lane,
            intention,
            s: 0.0,
            v: 0.0,
            length,
            stage: Stage::CarFollowing,
            platoon_id: None,
            spawn_time,
            inject_time: spawn_time,
            exit_time: None,
            junction_enter_time: None,
            junction_clear_time: None,
        }
    }

    pub fn rear(&self) -> f64 {
        self.s - self.length
    }

    /// Distance from the front bumper to the stop line (negative once past).
    pub fn dist_to_line(&self, path: &Path) -> f64 {
        path.s_junction_entry - self.s
    }

    /// Front has crossed the stop line.
    pub fn has_entered(&self, path: &Path) -> bool {
        self.s > path.s_junction_entry
    }

    /// Rear bumper is past the junction exit.
    pub fn has_cleared(&self, path: &Path) -> bool {
        self.rear() >= path.s_junction_exit()
    }

    /// Some part of the body lies inside the junction.
    pub fn in_junction(&self, path: &Path) -> bool {
        self.has_entered(path) && !self.has_cleared(path)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrivalEvent {
    pub time: f64,
    pub lane: Branch,
    pub intention: Intention,
}

/// Poisson arrivals on one entry lane over `[0, duration)`.
///
/// Each lane draws from its own stream of a generator seeded with `seed`, so
/// the four lanes are independent and reproducible.
pub fn gen_arrivals(
    lambda: f64,
    duration: f64,
    seed: u64,
    lane: Branch,
    ratio: &IntentionRatio,
) -> Vec<ArrivalEvent> {
    let mut out = Vec::new();
    if lambda <= 0.0 {
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1 + lane.index() as u64);
    let gap = Exp::new(lambda / 3600.0).expect("positive rate");
    let mut t = 0.0;
    loop {
        t += gap.sample(&mut rng);
        if t >= duration {
            break;
        }
        let intention = ratio.pick(rng.random::<f64>());
        out.push(ArrivalEvent {
            time: t,
            lane,
            intention,
        });
    }
    out
}

/// Longitudinal state along a path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kinematics<T> {
    pub s: T,
    pub v: T,
}

/// One explicit step: `v' = clamp(v + a·dt, 0, limit)`, trapezoidal position.
pub fn kinematic_step<T: Scalar>(state: Kinematics<T>, accel: T, dt: T, limit: T) -> Kinematics<T> {
    let v_next = (state.v + accel * dt).max(T::zero()).min(limit);
    Kinematics {
        s: state.s + (state.v + v_next) * T::half() * dt,
        v: v_next,
    }
}

/// Speed limit at arc length `s`: turners are held to the turn speed inside
/// the junction, everything else runs at the straight limit.
pub fn speed_limit_at(path: &Path, s: f64, speeds: &SpeedLimits) -> f64 {
    if path.intention.is_turn() && s >= path.s_junction_entry && s < path.s_junction_exit() {
        speeds.turn
    } else {
        speeds.straight
    }
}

/// Delay of an exited vehicle under the point-queue model, or `None` while it
/// is still in the system.
pub fn point_queue_delay(vehicle: &Vehicle, free_flow_time: f64) -> Option<f64> {
    vehicle
        .exit_time
        .map(|exit| exit - vehicle.spawn_time - free_flow_time)
}

/// Input row for [`form_platoons`]: one vehicle of a lane queue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueueEntry {
    pub intention: Intention,
    pub s: f64,
    pub v: f64,
    pub length: f64,
}

/// Largest bumper-to-bumper gap at which a follower still joins its leader's
/// platoon: twice the safe following gap plus standstill margin.
pub fn platoon_gap_threshold(
    v_follower: f64,
    v_leader: f64,
    brake: &BrakeParams<f64>,
    standstill_gap: f64,
) -> f64 {
    2.0 * (safe_follow_gap(v_follower, v_leader, brake) + standstill_gap)
}

/// Groups a front-to-back lane queue into maximal runs of same-intention
/// vehicles within the platoon gap threshold. Returns a zero-based platoon
/// index per vehicle; the first member of each run is its leader.
pub fn form_platoons(
    queue: &[QueueEntry],
    brake: &BrakeParams<f64>,
    standstill_gap: f64,
) -> Vec<usize> {
    let mut ids = Vec::with_capacity(queue.len());
    let mut current = 0;
    for (i, q) in queue.iter().enumerate() {
        if i > 0 {
            let lead = &queue[i - 1];
            let gap = lead.s - lead.length - q.s;
            let joined = q.intention == lead.intention
                && gap <= platoon_gap_threshold(q.v, lead.v, brake, standstill_gap);
            if !joined {
                current += 1;
            }
        }
        ids.push(current);
    }
    ids
}

/// Uniform draw helper kept here so every module samples the same way.
pub fn bernoulli(rng: &mut ChaCha8Rng, p: f64) -> bool {
    rng.random::<f64>() < p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinematic_examples() {
        let k = kinematic_step(Kinematics { s: 0.0f64, v: 10.0 }, 0.0, 0.1, 10.0);
        assert!((k.s - 1.0).abs() < 1e-12);
        let k = kinematic_step(Kinematics { s: 5.0, v: 0.0 }, -6.0, 0.1, 10.0);
        assert_eq!(k, Kinematics { s: 5.0, v: 0.0 });
        let k = kinematic_step(Kinematics { s: 0.0, v: 10.0 }, 0.0, 0.1, 5.0);
        assert_eq!(k.v, 5.0);
        let k = kinematic_step(Kinematics { s: 0.0f32, v: 10.0 }, 0.0, 0.1, 10.0);
        assert!((k.s - 1.0).abs() < 1e-6);
    }

    #[test]
    fn zero_rate_gives_no_arrivals() {
        let r = crate::config::SimConfig::default().intention_ratio;
        assert!(gen_arrivals(0.0, 1200.0, 1, Branch::North, &r).is_empty());
    }

    #[test]
    fn arrivals_are_sorted_and_seeded() {
        let r = crate::config::SimConfig::default().intention_ratio;
        let a = gen_arrivals(400.0, 1200.0, 9, Branch::East, &r);
        let b = gen_arrivals(400.0, 1200.0, 9, Branch::East, &r);
        let c = gen_arrivals(400.0, 1200.0, 9, Branch::West, &r);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.windows(2).all(|w| w[0].time < w[1].time));
        assert!(a.iter().all(|e| e.time < 1200.0));
    }

    fn entry(i: Intention, s: f64) -> QueueEntry {
        QueueEntry {
            intention: i,
            s,
            v: 10.0,
            length: 3.5,
        }
    }

    #[test]
    fn platoon_examples() {
        use Intention::*;
        let b = BrakeParams::default();
        // 15 m spacing front to front leaves an 11.5 m gap.
        let q = [
            entry(Straight, 100.0),
            entry(Straight, 85.0),
            entry(Left, 70.0),
            entry(Straight, 55.0),
        ];
        assert_eq!(form_platoons(&q, &b, 1.0), vec![0, 0, 1, 2]);
        assert_eq!(form_platoons(&q[..1], &b, 1.0), vec![0]);
        let far = [entry(Straight, 100.0), entry(Straight, 46.5)];
        assert_eq!(form_platoons(&far, &b, 1.0), vec![0, 1]);
    }
}
