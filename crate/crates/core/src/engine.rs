//! Fixed-step simulation loop: arrivals, strategy decisions, longitudinal
//! control, integration, safety detectors and metric collection.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt::Write as _;

use crate::config::SimConfig;
use crate::control::{accel_towards, free_flow_time_to, free_flow_trace, route_speed, safe_speed, stop_speed, STOP_MARGIN};
use crate::error::SimError;
use crate::events::{Event, EventKind, EventLog};
use crate::geometry::{build_layout, Branch, Intention, IntersectionLayout, Path};
use crate::metrics::{compute_metrics, DelayRecord, Metrics, RunTally};
use crate::safety::safe_follow_gap;
use crate::strategy::{clearance, constraint_gap, Constraint, Decisions, Strategy, StrategyKind, WorldView};
use crate::traffic::{gen_arrivals, kinematic_step, speed_limit_at, ArrivalEvent, Kinematics, Stage, Vehicle};

/// Minimum spacing in time between two vehicles occupying the same
/// overlap region when their order was never settled.
pub const UNRESOLVED_SEPARATION: f64 = 0.5;
/// A standstill at the stop lines lasting this long counts as a deadlock.
pub const DEADLOCK_AFTER: f64 = 30.0;
/// Gap shortfall tolerated before a following violation is counted.
pub const REAR_END_TOLERANCE: f64 = 0.1;
/// Speed at which vehicles enter the road.
pub const INJECT_SPEED: f64 = 10.0;

/// One vehicle's passage through the junction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JunctionPass {
    pub id: u32,
    pub lane: Branch,
    pub intention: Intention,
    pub enter: f64,
    pub clear: f64,
}

#[derive(Debug)]
pub struct SimOutcome {
    pub metrics: Metrics,
    pub log: EventLog,
    pub passes: Vec<JunctionPass>,
    /// Simulated time when the run stopped.
    pub end_time: f64,
}

/// A vehicle placed on the road before the run starts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialVehicle {
    pub lane: Branch,
    pub intention: Intention,
    pub s: f64,
    pub v: f64,
}

/// Occupancy of the overlap region with one partner path.
#[derive(Debug, Clone, Copy)]
struct RegionVisit {
    enter: f64,
    leave: Option<f64>,
}

pub struct Simulation {
    cfg: SimConfig,
    layout: IntersectionLayout,
    strategy: Box<dyn Strategy>,
    step: u64,
    vehicles: Vec<Vehicle>,
    lanes: [Vec<usize>; 4],
    queues: [VecDeque<(f64, Intention)>; 4],
    arrivals: [Vec<ArrivalEvent>; 4],
    cursor: [usize; 4],
    constraints: Vec<Constraint>,
    resolved: HashSet<(u32, u32)>,
    free_flow: Vec<f64>,
    free_flow_traces: Vec<Vec<f64>>,
    next_id: u32,
    tally: RunTally,
    log: EventLog,
    passes: Vec<JunctionPass>,
    decisions: Decisions,
    visits: HashMap<(u32, usize), RegionVisit>,
    standstill_since: Option<f64>,
    deadlock_flagged: bool,
}

fn path_index(lane: Branch, intention: Intention) -> usize {
    lane.index() * 3 + intention.index()
}

fn pair_key(a: u32, b: u32) -> (u32, u32) {
    (a.min(b), a.max(b))
}

impl Simulation {
    pub fn new(cfg: &SimConfig, kind: StrategyKind, log_events: bool) -> Result<Self, SimError> {
        cfg.validate()?;
        let layout = build_layout(cfg.layout).map_err(crate::error::ConfigError::Layout)?;
        let free_flow_traces: Vec<Vec<f64>> = layout.paths().iter().map(|p| free_flow_trace(p, cfg)).collect();
        let free_flow = free_flow_traces.iter().map(|t| t.len() as f64 * cfg.dt).collect();
        let arrivals = Branch::ALL.map(|b| gen_arrivals(cfg.lambda, cfg.duration, cfg.seed, b, &cfg.intention_ratio));
        let strategy = kind.build(cfg, &layout);
        Ok(Simulation {
            cfg: cfg.clone(),
            layout,
            strategy,
            step: 0,
            vehicles: Vec::new(),
            lanes: Default::default(),
            queues: Default::default(),
            arrivals,
            cursor: [0; 4],
            constraints: Vec::new(),
            resolved: HashSet::new(),
            free_flow,
            free_flow_traces,
            next_id: 0,
            tally: RunTally::default(),
            log: EventLog::new(log_events),
            passes: Vec::new(),
            decisions: Decisions::default(),
            visits: HashMap::new(),
            standstill_since: None,
            deadlock_flagged: false,
        })
    }

    /// A run with a fixed initial population and no random arrivals.
    pub fn with_vehicles(
        cfg: &SimConfig,
        kind: StrategyKind,
        initial: &[InitialVehicle],
        log_events: bool,
    ) -> Result<Self, SimError> {
        let mut sim = Simulation::new(cfg, kind, log_events)?;
        sim.arrivals = Default::default();
        for iv in initial {
            let mut v = Vehicle::new(sim.next_id, iv.lane, iv.intention, 0.0, cfg.vehicle_length);
            v.s = iv.s;
            v.v = iv.v;
            sim.next_id += 1;
            sim.tally.injected += 1;
            sim.vehicles.push(v);
        }
        sim.rebuild_lanes();
        Ok(sim)
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.cfg.dt
    }

    pub fn vehicles(&self) -> &[Vehicle] {
        &self.vehicles
    }

    pub fn layout(&self) -> &IntersectionLayout {
        &self.layout
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn free_flow(&self, lane: Branch, intention: Intention) -> f64 {
        self.free_flow[path_index(lane, intention)]
    }

    fn path_of(&self, v: &Vehicle) -> &Path {
        self.layout.path(v.lane, v.intention)
    }

    fn rebuild_lanes(&mut self) {
        for l in self.lanes.iter_mut() {
            l.clear();
        }
        for (i, v) in self.vehicles.iter().enumerate() {
            self.lanes[v.lane.index()].push(i);
        }
        let vs = &self.vehicles;
        for l in self.lanes.iter_mut() {
            l.sort_by(|&a, &b| vs[b].s.total_cmp(&vs[a].s).then(vs[a].id.cmp(&vs[b].id)));
        }
    }

    fn event(&self, kind: EventKind, v: Option<&Vehicle>, detail: String) -> Event {
        Event {
            time: self.time(),
            kind,
            vehicle: v.map(|v| v.id),
            lane: v.map(|v| v.lane.entry_label()),
            s: v.map_or(0.0, |v| v.s),
            v: v.map_or(0.0, |v| v.v),
            detail,
        }
    }

    fn admit_arrivals(&mut self) {
        let now = self.time();
        let horizon = now + 1e-9;
        for l in 0..4 {
            while self.cursor[l] < self.arrivals[l].len() && self.arrivals[l][self.cursor[l]].time <= horizon {
                let a = self.arrivals[l][self.cursor[l]];
                self.cursor[l] += 1;
                self.queues[l].push_back((a.time, a.intention));
                let ff = self.free_flow[path_index(a.lane, a.intention)];
                self.tally.free_flow_exits.push(a.time + ff);
                if self.log.is_enabled() {
                    let e = Event {
                        time: now,
                        kind: EventKind::Arrive,
                        vehicle: None,
                        lane: Some(a.lane.entry_label()),
                        s: 0.0,
                        v: 0.0,
                        detail: format!("{} spawned at {:.3}", a.intention.as_str(), a.time),
                    };
                    self.log.push(e);
                }
            }
            let Some(&(spawn, intention)) = self.queues[l].front() else {
                continue;
            };
            let room = match self.lanes[l].last() {
                Some(&i) => {
                    let last = &self.vehicles[i];
                    last.rear() >= safe_follow_gap(INJECT_SPEED, last.v, &self.cfg.brake) + self.cfg.standstill_gap
                }
                None => true,
            };
            if !room {
                continue;
            }
            self.queues[l].pop_front();
            let mut v = Vehicle::new(self.next_id, Branch::from_index(l), intention, spawn, self.cfg.vehicle_length);
            self.next_id += 1;
            v.v = INJECT_SPEED;
            v.inject_time = now;
            self.tally.injected += 1;
            let e = self.event(EventKind::Inject, Some(&v), format!("waited {:.1}", now - spawn));
            self.log.record(|| e);
            // Ids grow monotonically, so pushing keeps the vector sorted.
            self.vehicles.push(v);
            self.lanes[l].push(self.vehicles.len() - 1);
        }
    }

    fn update_stages(&mut self) {
        for l in 0..4 {
            let mut lead_seen = false;
            for &i in &self.lanes[l] {
                let v = &self.vehicles[i];
                if v.stage == Stage::Action {
                    continue;
                }
                let d = v.dist_to_line(self.layout.path(v.lane, v.intention));
                let stage = if !lead_seen && d <= self.cfg.decision_distance {
                    Stage::Decision
                } else {
                    Stage::CarFollowing
                };
                lead_seen = true;
                self.vehicles[i].stage = stage;
            }
        }
    }

    fn decide(&mut self) {
        let n = self.vehicles.len();
        let mut out = std::mem::take(&mut self.decisions);
        out.reset(n);
        {
            let view = WorldView {
                time: self.time(),
                cfg: &self.cfg,
                layout: &self.layout,
                vehicles: &self.vehicles,
                lanes: &self.lanes,
                constraints: &self.constraints,
            };
            self.strategy.decide(&view, &mut out, &mut self.log);
        }
        for &id in &out.grants {
            if let Ok(i) = self.vehicles.binary_search_by_key(&id, |v| v.id) {
                // Whoever already left the junction is settled as passing first.
                for u in &self.vehicles {
                    if u.junction_clear_time.is_some() {
                        self.resolved.insert(pair_key(u.id, id));
                    }
                }
                self.vehicles[i].stage = Stage::Action;
                let e = self.event(EventKind::Grant, Some(&self.vehicles[i]), String::new());
                self.log.record(|| e);
            }
        }
        self.constraints.extend(out.constraints.iter().copied());
        for &(a, b) in &out.resolved {
            self.resolved.insert(pair_key(a, b));
        }
        self.tally.messages += out.messages;
        self.tally.observations += out.observations;
        self.tally.deadlock_tie_events += out.deadlock_ties;
        self.tally.replans += out.replans;
        self.decisions = out;
    }

    fn index_of(&self, id: u32) -> Option<usize> {
        self.vehicles.binary_search_by_key(&id, |v| v.id).ok()
    }

    /// Gap and speed of every physical leader of each vehicle.
    fn physical_leaders(&self) -> Vec<Vec<(f64, f64)>> {
        let n = self.vehicles.len();
        let mut out = vec![Vec::new(); n];
        let w = self.cfg.layout.lane_width;
        for lane in &self.lanes {
            for (k, &i) in lane.iter().enumerate() {
                let v = &self.vehicles[i];
                // Nearest vehicle still sharing the approach, and nearest on
                // the same path wherever it is.
                let mut shared = false;
                for &j in lane[..k].iter().rev() {
                    let u = &self.vehicles[j];
                    let same_path = u.intention == v.intention;
                    let pj = self.path_of(u);
                    let on_approach = !u.has_cleared(pj) && u.rear() < pj.s_junction_entry + w;
                    if !shared && (on_approach || (same_path && !u.has_cleared(pj))) {
                        out[i].push((u.rear() - v.s, u.v));
                        shared = true;
                    }
                    if same_path {
                        if u.has_cleared(pj) {
                            out[i].push((u.rear() - v.s, u.v));
                        }
                        break;
                    }
                }
            }
        }
        // Exit lanes, in coordinates measured from the junction exit.
        let mut by_exit: [Vec<(f64, usize)>; 4] = Default::default();
        for (i, v) in self.vehicles.iter().enumerate() {
            let p = self.path_of(v);
            let u = v.s - p.s_junction_exit();
            if u >= 0.0 {
                by_exit[p.exit.index()].push((u, i));
            }
        }
        for (i, v) in self.vehicles.iter().enumerate() {
            let p = self.path_of(v);
            if !v.has_entered(p) {
                continue;
            }
            let u = v.s - p.s_junction_exit();
            let leader = by_exit[p.exit.index()]
                .iter()
                .filter(|&&(uj, j)| j != i && uj > u)
                .min_by(|a, b| a.0.total_cmp(&b.0));
            if let Some(&(uj, j)) = leader {
                let l = &self.vehicles[j];
                out[i].push((uj - l.length - u, l.v));
            }
        }
        out
    }

    fn control(&mut self) {
        let leaders = self.physical_leaders();
        let w = self.cfg.layout.lane_width;
        let n = self.vehicles.len();
        let mut virtual_gaps: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n];
        let mut keep = Vec::with_capacity(self.constraints.len());
        for c in &self.constraints {
            let (Some(fi), Some(si)) = (self.index_of(c.first), self.index_of(c.second)) else {
                continue;
            };
            let (f, s) = (&self.vehicles[fi], &self.vehicles[si]);
            if c.is_released(f, s, w) {
                continue;
            }
            virtual_gaps[si].push((constraint_gap(&c.pair, f, s, w), f.v));
            keep.push(*c);
        }
        self.constraints = keep;

        let cfg = &self.cfg;
        let mut next = Vec::with_capacity(n);
        for (i, v) in self.vehicles.iter().enumerate() {
            let path = self.layout.path(v.lane, v.intention);
            let mut target = route_speed(path, v.s, cfg);
            let dir = self.decisions.directives.get(i).copied().unwrap_or_default();
            if v.stage != Stage::Action {
                if dir.hold {
                    target = target.min(stop_speed(v.dist_to_line(path) - STOP_MARGIN, v.v, cfg));
                }
                if let Some(cap) = dir.speed_cap {
                    target = target.min(cap);
                }
            }
            for &(gap, vl) in leaders[i].iter().chain(&virtual_gaps[i]) {
                target = target.min(safe_speed(gap, v.v, vl, cfg));
            }
            let a = accel_towards(target, v.v, cfg);
            let k = kinematic_step(Kinematics { s: v.s, v: v.v }, a, cfg.dt, speed_limit_at(path, v.s, &cfg.speeds));
            next.push(k);
        }
        for (v, k) in self.vehicles.iter_mut().zip(next) {
            v.s = k.s;
            v.v = k.v;
        }
    }

    /// Junction entry and clearance bookkeeping after integration.
    fn track_junction(&mut self) {
        let now = self.time();
        for i in 0..self.vehicles.len() {
            let v = &self.vehicles[i];
            let p = self.layout.path(v.lane, v.intention);
            if v.junction_enter_time.is_none() && v.has_entered(p) {
                if v.stage != Stage::Action {
                    self.tally.line_violations += 1;
                }
                self.vehicles[i].junction_enter_time = Some(now);
                let e = self.event(EventKind::EnterJunction, Some(&self.vehicles[i]), String::new());
                self.log.record(|| e);
            }
            let v = &self.vehicles[i];
            if v.junction_clear_time.is_none() && v.has_cleared(p) {
                self.vehicles[i].junction_clear_time = Some(now);
                let v = &self.vehicles[i];
                self.passes.push(JunctionPass {
                    id: v.id,
                    lane: v.lane,
                    intention: v.intention,
                    enter: v.junction_enter_time.unwrap_or(now),
                    clear: now,
                });
                let e = self.event(EventKind::ClearJunction, Some(v), String::new());
                self.log.record(|| e);
            }
        }
        let inside = self
            .vehicles
            .iter()
            .filter(|v| v.in_junction(self.path_of(v)))
            .count();
        self.tally.max_junction_occupancy = self.tally.max_junction_occupancy.max(inside);
    }

    fn collision(&mut self, a: u32, b: u32, detail: String) -> SimError {
        self.tally.collision_events += 1;
        let e = Event {
            time: self.time(),
            kind: EventKind::Collision,
            vehicle: Some(a),
            lane: None,
            s: 0.0,
            v: 0.0,
            detail: format!("with {b}: {detail}"),
        };
        self.log.push(e);
        let mut trace = String::new();
        for v in &self.vehicles {
            let _ = writeln!(
                trace,
                "{}\t{}\t{}\ts={:.3}\tv={:.3}\t{:?}",
                v.id,
                v.lane.entry_label(),
                v.intention.as_str(),
                v.s,
                v.v,
                v.stage
            );
        }
        SimError::Collision {
            time: self.time(),
            a,
            b,
            detail,
            trace,
        }
    }

    fn detect(&mut self) -> Result<(), SimError> {
        let w = self.cfg.layout.lane_width;
        // Same-lane overlap on the approach and on a shared path.
        for l in 0..4 {
            for pair in self.lanes[l].windows(2) {
                let (f, b) = (&self.vehicles[pair[0]], &self.vehicles[pair[1]]);
                let pf = self.path_of(f);
                let shared = f.intention == b.intention || f.rear() < pf.s_junction_entry;
                if shared && f.rear() < b.s {
                    let d = format!("same lane overlap {:.3} m", b.s - f.rear());
                    return Err(self.collision(f.id, b.id, d));
                }
            }
        }
        // Followers on exit lanes.
        let mut by_exit: [Vec<(f64, usize)>; 4] = Default::default();
        for (i, v) in self.vehicles.iter().enumerate() {
            let p = self.path_of(v);
            let u = v.rear() - p.s_junction_exit();
            if u >= 0.0 {
                by_exit[p.exit.index()].push((v.s - p.s_junction_exit(), i));
            }
        }
        for list in by_exit.iter_mut() {
            list.sort_by(|a, b| b.0.total_cmp(&a.0));
            for pair in list.windows(2) {
                let (f, b) = (&self.vehicles[pair[0].1], &self.vehicles[pair[1].1]);
                if pair[0].0 - f.length < pair[1].0 {
                    let d = format!("exit lane overlap {:.3} m", pair[1].0 - (pair[0].0 - f.length));
                    return Err(self.collision(f.id, b.id, d));
                }
            }
        }
        // Following gaps.
        let leaders = self.physical_leaders();
        for (i, v) in self.vehicles.iter().enumerate() {
            for &(gap, vl) in &leaders[i] {
                if gap < safe_follow_gap(v.v, vl, &self.cfg.brake) - REAR_END_TOLERANCE {
                    self.tally.rear_end_violations += 1;
                }
            }
        }

        // Overlap regions near the junction.
        let now = self.time();
        let near: Vec<usize> = (0..self.vehicles.len())
            .filter(|&i| {
                let v = &self.vehicles[i];
                let p = self.path_of(v);
                v.s > p.s_junction_entry - w && v.rear() < p.s_junction_exit() + 2.0 * w
            })
            .collect();
        for &i in &near {
            let v = &self.vehicles[i];
            for partner in self.layout.paths() {
                if partner.origin == v.lane {
                    continue;
                }
                let Some(pair) = self.layout.conflict(v.lane, v.intention, partner.origin, partner.intention) else {
                    continue;
                };
                let c = clearance(pair.kind, w);
                let inside = v.rear() < pair.span_a.1 + c && v.s > pair.span_a.0 - c;
                let key = (v.id, path_index(partner.origin, partner.intention));
                match (self.visits.get_mut(&key), inside) {
                    (None, true) => {
                        self.visits.insert(key, RegionVisit { enter: now, leave: None });
                    }
                    (Some(visit), false) if visit.leave.is_none() => visit.leave = Some(now),
                    _ => {}
                }
            }
        }
        for (x, &i) in near.iter().enumerate() {
            for &j in &near[x + 1..] {
                let (a, b) = (&self.vehicles[i], &self.vehicles[j]);
                if a.lane == b.lane {
                    continue;
                }
                let Some(pair) = self.layout.conflict(a.lane, a.intention, b.lane, b.intention) else {
                    continue;
                };
                let va = self.visits.get(&(a.id, path_index(b.lane, b.intention)));
                let vb = self.visits.get(&(b.id, path_index(a.lane, a.intention)));
                let (Some(va), Some(vb)) = (va, vb) else {
                    continue;
                };
                if va.leave.is_none() && vb.leave.is_none() {
                    let c = clearance(pair.kind, w);
                    let d = format!(
                        "both inside overlap region (case {}), clearance {c}",
                        pair.case.label()
                    );
                    return Err(self.collision(a.id, b.id, d));
                }
                if self.resolved.contains(&pair_key(a.id, b.id)) {
                    continue;
                }
                let end_a = va.leave.unwrap_or(f64::INFINITY);
                let end_b = vb.leave.unwrap_or(f64::INFINITY);
                if va.enter < end_b + UNRESOLVED_SEPARATION && vb.enter < end_a + UNRESOLVED_SEPARATION {
                    let d = format!("unresolved pair within {UNRESOLVED_SEPARATION} s of each other");
                    return Err(self.collision(a.id, b.id, d));
                }
            }
        }
        Ok(())
    }

    fn detect_deadlock(&mut self) {
        let now = self.time();
        let junction_empty = self.vehicles.iter().all(|v| !v.in_junction(self.path_of(v)));
        let stopped = (0..4)
            .filter_map(|l| {
                self.lanes[l]
                    .iter()
                    .copied()
                    .find(|&i| self.vehicles[i].stage != Stage::Action)
            })
            .filter(|&i| {
                let v = &self.vehicles[i];
                v.v < 0.1 && v.dist_to_line(self.path_of(v)) < 1.0
            })
            .count();
        if junction_empty && stopped >= 2 {
            let since = *self.standstill_since.get_or_insert(now);
            if now - since > DEADLOCK_AFTER && !self.deadlock_flagged {
                self.deadlock_flagged = true;
                self.tally.deadlock_events += 1;
                let e = self.event(EventKind::Deadlock, None, format!("{stopped} vehicles stopped since {since:.1}"));
                self.log.record(|| e);
            }
        } else {
            self.standstill_since = None;
            self.deadlock_flagged = false;
        }
    }

    fn retire(&mut self) {
        let now = self.time();
        let mut gone = false;
        for v in &self.vehicles {
            let p = self.layout.path(v.lane, v.intention);
            if v.s >= p.total_length {
                let ff = self.free_flow[path_index(v.lane, v.intention)];
                self.tally.delays.push(DelayRecord {
                    id: v.id,
                    lane: v.lane,
                    intention: v.intention,
                    spawn_time: v.spawn_time,
                    time: now,
                    delay: (now - v.spawn_time - ff).max(0.0),
                    completed: true,
                });
                let e = self.event(EventKind::Exit, Some(v), String::new());
                self.log.record(|| e);
                gone = true;
            }
        }
        if gone {
            let layout = &self.layout;
            let ids: HashSet<u32> = self
                .vehicles
                .iter()
                .filter(|v| v.s >= layout.path(v.lane, v.intention).total_length)
                .map(|v| v.id)
                .collect();
            self.vehicles.retain(|v| !ids.contains(&v.id));
            self.visits.retain(|k, _| !ids.contains(&k.0));
            self.resolved.retain(|k| !ids.contains(&k.0) && !ids.contains(&k.1));
            self.rebuild_lanes();
        }
    }

    /// Advances one step.
    pub fn step(&mut self) -> Result<(), SimError> {
        self.admit_arrivals();
        self.update_stages();
        self.decide();
        self.control();
        self.step += 1;
        self.rebuild_lanes();
        self.track_junction();
        self.detect()?;
        self.detect_deadlock();
        self.retire();
        Ok(())
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    pub fn is_empty(&self) -> bool {
        self.vehicles.is_empty()
            && self.queues.iter().all(VecDeque::is_empty)
            && (0..4).all(|l| self.cursor[l] >= self.arrivals[l].len())
    }

    /// Runs to the configured duration.
    pub fn run(mut self) -> Result<SimOutcome, SimError> {
        let steps = (self.cfg.duration / self.cfg.dt).round() as u64;
        while self.step < steps {
            self.step()?;
        }
        Ok(self.finish())
    }

    /// Runs until every vehicle has left or `limit` seconds have passed.
    pub fn run_until_empty(mut self, limit: f64) -> Result<SimOutcome, SimError> {
        let steps = (limit / self.cfg.dt).round() as u64;
        while self.step < steps && !self.is_empty() {
            self.step()?;
        }
        Ok(self.finish())
    }

    fn finish(mut self) -> SimOutcome {
        let end_time = self.time();
        // Vehicles still in the system contribute the delay accrued so far.
        for v in &self.vehicles {
            let trace = &self.free_flow_traces[path_index(v.lane, v.intention)];
            let ff = free_flow_time_to(trace, v.s, self.cfg.dt);
            self.tally.delays.push(DelayRecord {
                id: v.id,
                lane: v.lane,
                intention: v.intention,
                spawn_time: v.spawn_time,
                time: end_time,
                delay: (end_time - v.spawn_time - ff).max(0.0),
                completed: false,
            });
        }
        for (l, q) in self.queues.iter().enumerate() {
            for &(spawn, intention) in q {
                self.tally.delays.push(DelayRecord {
                    id: u32::MAX,
                    lane: Branch::from_index(l),
                    intention,
                    spawn_time: spawn,
                    time: end_time,
                    delay: end_time - spawn,
                    completed: false,
                });
            }
        }
        let window_end = self.cfg.duration.max(end_time);
        SimOutcome {
            metrics: compute_metrics(&self.tally, self.cfg.warmup, window_end),
            log: self.log,
            passes: self.passes,
            end_time,
        }
    }
}

/// One complete run with Poisson arrivals.
pub fn simulate(cfg: &SimConfig, kind: StrategyKind) -> Result<SimOutcome, SimError> {
    Simulation::new(cfg, kind, false)?.run()
}

/// Like [`simulate`], keeping the event log.
pub fn simulate_logged(cfg: &SimConfig, kind: StrategyKind) -> Result<SimOutcome, SimError> {
    Simulation::new(cfg, kind, true)?.run()
}
