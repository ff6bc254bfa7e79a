//! Run metrics: point-queue delay, throughput and communication cost.

use std::ops::{Add, AddAssign};

use crate::geometry::{Branch, Intention};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MessageKind {
    StateBroadcast,
    RowRequest,
    Accept,
    Reject,
    Plan,
}

impl MessageKind {
    pub const ALL: [MessageKind; 5] = [
        MessageKind::StateBroadcast,
        MessageKind::RowRequest,
        MessageKind::Accept,
        MessageKind::Reject,
        MessageKind::Plan,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MessageKind::StateBroadcast => "state_broadcast",
            MessageKind::RowRequest => "row_request",
            MessageKind::Accept => "accept",
            MessageKind::Reject => "reject",
            MessageKind::Plan => "plan",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MessageCounts([u64; 5]);

impl MessageCounts {
    pub fn count(&mut self, kind: MessageKind, n: u64) {
        self.0[kind as usize] += n;
    }

    pub fn get(&self, kind: MessageKind) -> u64 {
        self.0[kind as usize]
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }
}

impl Add for MessageCounts {
    type Output = MessageCounts;
    fn add(mut self, rhs: MessageCounts) -> MessageCounts {
        self += rhs;
        self
    }
}

impl AddAssign for MessageCounts {
    fn add_assign(&mut self, rhs: MessageCounts) {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a += b;
        }
    }
}

/// Point-queue delay of one vehicle: taken at its exit, or at the end of
/// the run for vehicles still queued or on the road.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayRecord {
    pub id: u32,
    pub lane: Branch,
    pub intention: Intention,
    pub spawn_time: f64,
    /// Exit time, or the end of the run when `completed` is false.
    pub time: f64,
    pub delay: f64,
    pub completed: bool,
}

/// Counters accumulated by the engine during a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunTally {
    pub delays: Vec<DelayRecord>,
    /// Exit time each generated arrival would have under free flow.
    pub free_flow_exits: Vec<f64>,
    pub injected: usize,
    pub messages: MessageCounts,
    pub observations: u64,
    pub deadlock_tie_events: u64,
    pub deadlock_events: u64,
    pub collision_events: u64,
    pub rear_end_violations: u64,
    pub line_violations: u64,
    pub max_junction_occupancy: usize,
    pub replans: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    /// Mean point-queue delay of vehicles that exited in the window; 0 if none.
    pub average_delay: f64,
    pub throughput: usize,
    pub ideal_throughput: usize,
    pub deadlock_tie_events: u64,
    pub deadlock_events: u64,
    pub collision_events: u64,
    pub messages: MessageCounts,
    pub messages_total: u64,
    /// Messages per injected vehicle.
    pub messages_per_vehicle: f64,
    pub observations: u64,
    pub injected: usize,
    pub rear_end_violations: u64,
    pub line_violations: u64,
    pub max_junction_occupancy: usize,
    /// Vehicles generated but not yet out at the end of the run.
    pub unfinished: usize,
    pub delays: Vec<DelayRecord>,
}

/// Aggregates a run's tally over the measurement window `[warmup, duration]`.
pub fn compute_metrics(tally: &RunTally, warmup: f64, duration: f64) -> Metrics {
    let in_window = |t: f64| t >= warmup && t <= duration;
    let measured: Vec<f64> = tally
        .delays
        .iter()
        .filter(|e| e.completed && in_window(e.time))
        .map(|e| e.delay)
        .collect();
    let average_delay = mean(&measured).unwrap_or(0.0);
    let throughput = measured.len();
    let messages_total = tally.messages.total();
    Metrics {
        average_delay,
        throughput,
        ideal_throughput: tally.free_flow_exits.iter().filter(|&&t| in_window(t)).count(),
        deadlock_tie_events: tally.deadlock_tie_events,
        deadlock_events: tally.deadlock_events,
        collision_events: tally.collision_events,
        messages: tally.messages,
        messages_total,
        messages_per_vehicle: if tally.injected == 0 {
            0.0
        } else {
            messages_total as f64 / tally.injected as f64
        },
        observations: tally.observations,
        injected: tally.injected,
        rear_end_violations: tally.rear_end_violations,
        line_violations: tally.line_violations,
        max_junction_occupancy: tally.max_junction_occupancy,
        unfinished: tally.delays.iter().filter(|e| !e.completed).count(),
        delays: tally.delays.clone(),
    }
}

pub fn mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        None
    } else {
        Some(xs.iter().sum::<f64>() / xs.len() as f64)
    }
}

/// Sample standard deviation; 0 for fewer than two values.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs).unwrap_or(0.0);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

impl Metrics {
    /// Delays of vehicles that exited in `[t0, t1)`.
    pub fn delays_between(&self, t0: f64, t1: f64) -> Vec<f64> {
        self.delays
            .iter()
            .filter(|e| e.completed && e.time >= t0 && e.time < t1)
            .map(|e| e.delay)
            .collect()
    }
}

/// Congestion test over pooled runs of length `duration`: mean delay in the
/// final five minutes at least twice the mean in minutes five to ten.
pub fn is_congested(runs: &[&Metrics], duration: f64) -> bool {
    let pool = |t0: f64, t1: f64| -> Vec<f64> {
        runs.iter().flat_map(|m| m.delays_between(t0, t1)).collect()
    };
    let early = mean(&pool(300.0, 600.0));
    let late = mean(&pool(duration - 300.0, f64::INFINITY));
    match (early, late) {
        (Some(e), Some(l)) => l >= 2.0 * e,
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exit(t: f64, delay: f64) -> DelayRecord {
        DelayRecord {
            id: 0,
            lane: Branch::North,
            intention: Intention::Straight,
            spawn_time: 0.0,
            time: t,
            delay,
            completed: true,
        }
    }

    #[test]
    fn empty_run() {
        let m = compute_metrics(&RunTally::default(), 0.0, 1200.0);
        assert_eq!(m.throughput, 0);
        assert_eq!(m.average_delay, 0.0);
        assert_eq!(m.messages_per_vehicle, 0.0);
    }

    #[test]
    fn window_and_averages() {
        let tally = RunTally {
            delays: vec![
                exit(10.0, 1.0),
                exit(100.0, 3.0),
                exit(1300.0, 50.0),
                DelayRecord {
                    completed: false,
                    ..exit(1200.0, 8.0)
                },
            ],
            free_flow_exits: vec![9.0, 95.0, 1190.0, 1250.0],
            injected: 4,
            ..Default::default()
        };
        let m = compute_metrics(&tally, 0.0, 1200.0);
        assert_eq!(m.throughput, 2);
        assert_eq!(m.ideal_throughput, 3);
        assert_eq!(m.average_delay, 2.0);
        assert_eq!(m.unfinished, 1);
        let m = compute_metrics(&tally, 50.0, 1200.0);
        assert_eq!(m.throughput, 1);
    }

    #[test]
    fn congestion_rule() {
        let mut tally = RunTally::default();
        tally.delays = vec![exit(400.0, 5.0), exit(1000.0, 10.0)];
        let m = compute_metrics(&tally, 0.0, 1200.0);
        assert!(is_congested(&[&m], 1200.0));
        tally.delays = vec![exit(400.0, 5.0), exit(1000.0, 9.9)];
        let m = compute_metrics(&tally, 0.0, 1200.0);
        assert!(!is_congested(&[&m], 1200.0));
    }

    #[test]
    fn message_counts_sum() {
        let mut c = MessageCounts::default();
        c.count(MessageKind::RowRequest, 2);
        c.count(MessageKind::Plan, 3);
        assert_eq!(c.total(), 5);
        assert_eq!((c + c).get(MessageKind::Plan), 6);
    }
}
