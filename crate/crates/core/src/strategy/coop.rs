//! Cooperative passing-order planning over a gridded junction.
//!
//! Every replanning period all vehicles that have not yet cleared the
//! junction report their state and receive a planned junction entry time.
//! Two vehicles from different lanes may use the same cell only with a
//! minimum time separation between their occupancy intervals.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::SimConfig;
use crate::events::{Event, EventKind, EventLog};
use crate::geometry::{Branch, Intention, IntersectionLayout};
use crate::metrics::MessageKind;
use crate::strategy::{ordering_feasible, Constraint, Decisions, Strategy, StrategyKind, WorldView};

/// One cell crossed by a path: the range of junction-relative front
/// positions for which the front lies inside the cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellUse {
    pub cell: usize,
    pub enter: f64,
    pub leave: f64,
}

#[derive(Debug, Clone)]
pub struct SubzoneGrid {
    pub cell_size: f64,
    pub cells_per_side: usize,
    footprints: Vec<Vec<CellUse>>,
}

impl SubzoneGrid {
    pub fn cell_count(&self) -> usize {
        self.cells_per_side * self.cells_per_side
    }

    pub fn footprint(&self, lane: Branch, intention: Intention) -> &[CellUse] {
        &self.footprints[lane.index() * 3 + intention.index()]
    }
}

const SAMPLE_STEP: f64 = 0.01;

/// Tiles the junction square and samples every path at 1 cm to find the
/// cells it crosses.
pub fn build_grid(layout: &IntersectionLayout, cell_size: f64) -> SubzoneGrid {
    let half = layout.junction_half_width;
    let side = (2.0 * half / cell_size).ceil().max(1.0) as usize;
    let index = |x: f64| (((x + half) / cell_size).floor().max(0.0) as usize).min(side - 1);
    let footprints = layout
        .paths()
        .iter()
        .map(|p| {
            let mut uses: Vec<CellUse> = Vec::new();
            let n = (p.junction_len / SAMPLE_STEP).ceil() as usize;
            for k in 0..=n {
                let u = (k as f64 * SAMPLE_STEP).min(p.junction_len);
                let pt = p.point_at(p.s_junction_entry + u);
                let cell = index(pt.y) * side + index(pt.x);
                match uses.last_mut() {
                    Some(last) if last.cell == cell => last.leave = u,
                    _ => uses.push(CellUse {
                        cell,
                        enter: u,
                        leave: u,
                    }),
                }
            }
            uses
        })
        .collect();
    SubzoneGrid {
        cell_size,
        cells_per_side: side,
        footprints,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanParams {
    /// Minimum separation of occupancy intervals of vehicles from different
    /// lanes in one cell.
    pub headway: f64,
    pub vehicle_length: f64,
    pub accel: f64,
    /// Same-lane entry spacing is `rho + (length + standstill) / v`.
    pub rho: f64,
    pub standstill_gap: f64,
    /// Vehicles delayed on the approach crawl no slower than this before
    /// speeding up to the line; below it they cruise slowly and may stop.
    pub min_hold_speed: f64,
    /// Largest vehicle count searched exhaustively.
    pub exact_limit: usize,
    pub rollouts: usize,
    /// Vehicles per lane included in the search; later ones are appended
    /// in arrival order.
    pub window: usize,
}

impl PlanParams {
    pub fn from_config(cfg: &SimConfig) -> Self {
        PlanParams {
            headway: cfg.coop.headway,
            vehicle_length: cfg.vehicle_length,
            accel: cfg.a_comfort,
            rho: cfg.brake.rho,
            standstill_gap: cfg.standstill_gap,
            min_hold_speed: cfg.speeds.turn,
            exact_limit: 8,
            rollouts: cfg.coop.rollouts,
            window: cfg.coop.plan_window,
        }
    }
}

/// A vehicle as seen by the planner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanVehicle {
    pub id: u32,
    pub lane: Branch,
    pub intention: Intention,
    /// Remaining distance to the stop line (negative inside the junction).
    pub dist: f64,
    /// Earliest time the front can reach the stop line.
    pub earliest: f64,
    /// Current speed.
    pub v: f64,
    /// Speed at the line when arriving at `earliest`.
    pub v_arrival: f64,
    /// Speed limit on the approach.
    pub v_approach: f64,
    /// Speed limit inside the junction.
    pub v_limit: f64,
    /// Already committed: the entry time is `earliest` and cannot move.
    pub fixed: bool,
}

/// Occupancy of one cell by one vehicle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub id: u32,
    pub lane: Branch,
    pub cell: usize,
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PassingPlan {
    pub order: Vec<u32>,
    /// Entry time per vehicle, aligned with `order`.
    pub entry_time: Vec<f64>,
    /// Time the last vehicle leaves its last cell.
    pub makespan: f64,
    pub intervals: Vec<Interval>,
}

impl PassingPlan {
    pub fn entry_of(&self, id: u32) -> Option<f64> {
        self.order
            .iter()
            .position(|&o| o == id)
            .map(|k| self.entry_time[k])
    }
}

/// Time for the front to advance `x` metres from the stop line when it
/// crosses at `v0` and then accelerates at `a` up to `v_max`.
pub fn travel_time(x: f64, v0: f64, v_max: f64, a: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let v0 = v0.min(v_max).max(0.0);
    let x_acc = (v_max * v_max - v0 * v0) / (2.0 * a);
    if x <= x_acc {
        ((v0 * v0 + 2.0 * a * x).sqrt() - v0) / a
    } else {
        (v_max - v0) / a + (x - x_acc) / v_max
    }
}

/// Earliest arrival at the stop line from distance `d` at speed `v`,
/// accelerating at `a` up to `v_max` and slowing to at most `v_end` at the
/// line. Returns (time, speed at the line).
pub fn earliest_arrival(d: f64, v: f64, v_max: f64, v_end: f64, a: f64) -> (f64, f64) {
    if d <= 0.0 {
        return (0.0, v);
    }
    let v = v.min(v_max);
    let reach_sq = v * v + 2.0 * a * d;
    if reach_sq <= v_end * v_end {
        let ve = reach_sq.sqrt();
        return ((ve - v) / a, ve);
    }
    if v * v > v_end * v_end + 2.0 * a * d {
        // Already too fast to slow down comfortably; assume a uniform brake.
        return (2.0 * d / (v + v_end), v_end);
    }
    let x1 = (v_max * v_max - v * v) / (2.0 * a);
    let x2 = d - (v_max * v_max - v_end * v_end) / (2.0 * a);
    if x1 <= x2 {
        let t = (v_max - v) / a + (x2 - x1) / v_max + (v_max - v_end) / a;
        (t, v_end)
    } else {
        let vp = ((v * v + v_end * v_end + 2.0 * a * d) / 2.0).sqrt();
        ((vp - v) / a + (vp - v_end) / a, v_end)
    }
}

/// Highest cruise speed at which the front reaches the line no sooner than
/// `duration` from now. The inverse of [`earliest_arrival`] in its speed cap.
pub fn cruise_speed_for(d: f64, v: f64, v_max: f64, v_end: f64, a: f64, duration: f64) -> f64 {
    if earliest_arrival(d, v, v_max, v_end, a).0 >= duration {
        return v_max;
    }
    let (mut lo, mut hi) = (0.0, v_max);
    for _ in 0..24 {
        let mid = 0.5 * (lo + hi);
        if earliest_arrival(d, v, mid, v_end.min(mid), a).0 > duration {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Speed to ease down to and hold so that, accelerating again at `a` just
/// in time, the front reaches the line at `v_end` exactly `duration` from
/// now. `None` when no such profile fits with a hold speed of at least
/// `w_min`: the vehicle cannot be that early without speeding up first, or
/// not that late without arriving slower than `v_end`.
pub fn hold_speed_for(d: f64, v: f64, v_end: f64, a: f64, duration: f64, w_min: f64) -> Option<f64> {
    if d <= 0.0 {
        return None;
    }
    let top = v.min(v_end);
    let time = |w: f64| {
        let d1 = (v * v - w * w) / (2.0 * a);
        let d3 = (v_end * v_end - w * w) / (2.0 * a);
        (v - w) / a + (v_end - w) / a + (d - d1 - d3) / w
    };
    let lo_sq = (v * v + v_end * v_end - 2.0 * a * d) / 2.0;
    let lo = lo_sq.max(0.0).sqrt();
    if top <= lo || !(time(top) <= duration) {
        return None;
    }
    if lo > 0.0 && time(lo) < duration {
        return None;
    }
    let (mut lo, mut hi) = (lo, top);
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        if mid <= 0.0 || time(mid) > duration {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (hi >= w_min).then_some(hi)
}

#[derive(Clone)]
struct Sched {
    /// Latest occupancy end per cell and lane.
    last_end: Vec<[f64; 4]>,
    lane_entry: [f64; 4],
    makespan: f64,
    entry_sum: f64,
}

impl Sched {
    fn new(cells: usize) -> Self {
        Sched {
            last_end: vec![[f64::NEG_INFINITY; 4]; cells],
            lane_entry: [f64::NEG_INFINITY; 4],
            makespan: f64::NEG_INFINITY,
            entry_sum: 0.0,
        }
    }
}

struct Planner<'a> {
    vehicles: &'a [PlanVehicle],
    grid: &'a SubzoneGrid,
    p: &'a PlanParams,
    now: f64,
}

impl Planner<'_> {
    fn entry_speed(&self, v: &PlanVehicle, t: f64) -> f64 {
        if v.fixed || v.dist <= 0.0 || t <= v.earliest {
            return v.v_arrival;
        }
        if hold_speed_for(v.dist, v.v, v.v_limit, self.p.accel, t - self.now, self.p.min_hold_speed).is_some() {
            return v.v_limit;
        }
        let u = cruise_speed_for(v.dist, v.v, v.v_approach, v.v_limit, self.p.accel, t - self.now);
        earliest_arrival(v.dist, v.v, u, v.v_limit.min(u), self.p.accel).1
    }

    /// Earliest entry time and entry speed for vehicle `k` after everything
    /// already in `s`.
    fn slot(&self, s: &Sched, k: usize) -> (f64, f64) {
        let v = &self.vehicles[k];
        if v.fixed {
            return (v.earliest, v.v_arrival);
        }
        let lane = v.lane.index();
        let fp = self.grid.footprint(v.lane, v.intention);
        let spacing = self.p.rho + (self.p.vehicle_length + self.p.standstill_gap) / v.v_arrival.max(3.0);
        let mut t = v.earliest.max(s.lane_entry[lane] + spacing);
        let bounds: Vec<f64> = fp
            .iter()
            .map(|cu| {
                let other = (0..4)
                    .filter(|&l| l != lane)
                    .map(|l| s.last_end[cu.cell][l])
                    .fold(f64::NEG_INFINITY, f64::max);
                other + self.p.headway
            })
            .collect();
        let mut ve = self.entry_speed(v, t);
        for _ in 0..64 {
            let mut shift: f64 = 0.0;
            for (cu, &bound) in fp.iter().zip(&bounds) {
                let start = t + travel_time(cu.enter, ve, v.v_limit, self.p.accel);
                shift = shift.max(bound - start);
            }
            if shift <= 1e-9 {
                break;
            }
            t += shift;
            ve = self.entry_speed(v, t);
        }
        (t, ve)
    }

    /// Time the vehicle leaves its last cell when entering at `t` with `ve`.
    fn leave_time(&self, k: usize, t: f64, ve: f64) -> f64 {
        let v = &self.vehicles[k];
        let fp = self.grid.footprint(v.lane, v.intention);
        let last = fp.iter().map(|cu| cu.leave).fold(0.0, f64::max);
        t + travel_time(last + self.p.vehicle_length, ve, v.v_limit, self.p.accel)
    }

    /// Places vehicle `k` after everything already in `s`; returns entry time.
    fn place(&self, s: &mut Sched, k: usize, mut out: Option<&mut Vec<Interval>>) -> f64 {
        let (t, ve) = self.slot(s, k);
        let v = &self.vehicles[k];
        let lane = v.lane.index();
        let len = self.p.vehicle_length;
        for cu in self.grid.footprint(v.lane, v.intention) {
            let start = t + travel_time(cu.enter, ve, v.v_limit, self.p.accel);
            let end = t + travel_time(cu.leave + len, ve, v.v_limit, self.p.accel);
            let cell = &mut s.last_end[cu.cell][lane];
            *cell = cell.max(end);
            s.makespan = s.makespan.max(end);
            if let Some(o) = out.as_deref_mut() {
                o.push(Interval {
                    id: v.id,
                    lane: v.lane,
                    cell: cu.cell,
                    start,
                    end,
                });
            }
        }
        s.lane_entry[lane] = s.lane_entry[lane].max(t);
        if !v.fixed {
            s.entry_sum += t;
        }
        t
    }

    fn base(&self) -> Sched {
        let mut s = Sched::new(self.grid.cell_count());
        for k in 0..self.vehicles.len() {
            if self.vehicles[k].fixed {
                self.place(&mut s, k, None);
            }
        }
        s
    }
}

fn better(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

/// Schedules the non-fixed vehicles in `order` (indices into `vehicles`),
/// after all fixed ones.
pub fn schedule_order(
    vehicles: &[PlanVehicle],
    order: &[usize],
    grid: &SubzoneGrid,
    params: &PlanParams,
    now: f64,
) -> PassingPlan {
    let pl = Planner {
        vehicles,
        grid,
        p: params,
        now,
    };
    let mut s = Sched::new(grid.cell_count());
    let mut intervals = Vec::new();
    let mut ids = Vec::new();
    let mut times = Vec::new();
    for k in (0..vehicles.len()).filter(|&k| vehicles[k].fixed).chain(order.iter().copied()) {
        let t = pl.place(&mut s, k, Some(&mut intervals));
        ids.push(vehicles[k].id);
        times.push(t);
    }
    PassingPlan {
        order: ids,
        entry_time: times,
        makespan: if s.makespan.is_finite() { s.makespan } else { now },
        intervals,
    }
}

/// Per-lane queues of non-fixed vehicle indices, front first.
fn lane_queues(vehicles: &[PlanVehicle]) -> [Vec<usize>; 4] {
    let mut q: [Vec<usize>; 4] = Default::default();
    for (k, v) in vehicles.iter().enumerate() {
        if !v.fixed {
            q[v.lane.index()].push(k);
        }
    }
    for lane in q.iter_mut() {
        lane.sort_by(|&a, &b| vehicles[b].dist.total_cmp(&vehicles[a].dist).reverse());
    }
    q
}

/// Arrival-order merge of the lane queues.
fn fifo_merge(vehicles: &[PlanVehicle], queues: &[Vec<usize>; 4]) -> Vec<usize> {
    let mut heads = [0usize; 4];
    let mut out = Vec::new();
    loop {
        let next = (0..4)
            .filter(|&l| heads[l] < queues[l].len())
            .min_by(|&a, &b| {
                let (va, vb) = (&vehicles[queues[a][heads[a]]], &vehicles[queues[b][heads[b]]]);
                va.earliest.total_cmp(&vb.earliest).then(a.cmp(&b))
            });
        match next {
            Some(l) => {
                out.push(queues[l][heads[l]]);
                heads[l] += 1;
            }
            None => return out,
        }
    }
}

fn branch_and_bound(
    pl: &Planner<'_>,
    queues: &[Vec<usize>; 4],
    heads: &mut [usize; 4],
    s: &Sched,
    order: &mut Vec<usize>,
    best: &mut Option<((f64, f64), Vec<usize>)>,
) {
    let remaining: usize = (0..4).map(|l| queues[l].len() - heads[l]).sum();
    if remaining == 0 {
        let key = (s.makespan, s.entry_sum);
        if best.as_ref().is_none_or(|(b, _)| better(key, *b)) {
            *best = Some((key, order.clone()));
        }
        return;
    }
    for l in 0..4 {
        if heads[l] == queues[l].len() {
            continue;
        }
        let k = queues[l][heads[l]];
        let mut next = s.clone();
        pl.place(&mut next, k, None);
        if let Some((b, _)) = best {
            // Both keys only grow as vehicles are added.
            if !better((next.makespan, next.entry_sum), *b) {
                continue;
            }
        }
        heads[l] += 1;
        order.push(k);
        branch_and_bound(pl, queues, heads, &next, order, best);
        order.pop();
        heads[l] -= 1;
    }
}

fn rollout(
    pl: &Planner<'_>,
    queues: &[Vec<usize>; 4],
    base: &Sched,
    rng: &mut ChaCha8Rng,
    epsilon: f64,
) -> ((f64, f64), Vec<usize>) {
    let mut s = base.clone();
    let mut heads = [0usize; 4];
    let mut order = Vec::new();
    loop {
        let open: Vec<usize> = (0..4).filter(|&l| heads[l] < queues[l].len()).collect();
        if open.is_empty() {
            break;
        }
        let lane = if rng.random::<f64>() < epsilon {
            open[rng.random_range(0..open.len())]
        } else {
            // Lane whose head would finish earliest.
            let mut pick = open[0];
            let mut pick_end = f64::INFINITY;
            for &l in &open {
                let k = queues[l][heads[l]];
                let (t, ve) = pl.slot(&s, k);
                let end = pl.leave_time(k, t, ve);
                if end < pick_end {
                    pick_end = end;
                    pick = l;
                }
            }
            pick
        };
        let k = queues[lane][heads[lane]];
        pl.place(&mut s, k, None);
        order.push(k);
        heads[lane] += 1;
    }
    ((s.makespan, s.entry_sum), order)
}

/// Passing order minimizing the time the last vehicle leaves the junction
/// (ties broken by the sum of entry times). Exact search up to
/// `exact_limit` searched vehicles, randomized rollouts beyond, with the
/// arrival order always among the candidates.
pub fn plan_order(
    vehicles: &[PlanVehicle],
    grid: &SubzoneGrid,
    params: &PlanParams,
    now: f64,
    rng: &mut ChaCha8Rng,
) -> PassingPlan {
    let pl = Planner {
        vehicles,
        grid,
        p: params,
        now,
    };
    let all = lane_queues(vehicles);
    let mut window: [Vec<usize>; 4] = Default::default();
    let mut tail_queues: [Vec<usize>; 4] = Default::default();
    for l in 0..4 {
        let cut = all[l].len().min(params.window);
        window[l] = all[l][..cut].to_vec();
        tail_queues[l] = all[l][cut..].to_vec();
    }
    let searched: usize = window.iter().map(Vec::len).sum();
    let base = pl.base();

    let fifo = fifo_merge(vehicles, &window);
    let mut best = {
        let mut s = base.clone();
        for &k in &fifo {
            pl.place(&mut s, k, None);
        }
        Some(((s.makespan, s.entry_sum), fifo))
    };
    if searched <= params.exact_limit {
        let mut heads = [0usize; 4];
        let mut order = Vec::new();
        branch_and_bound(&pl, &window, &mut heads, &base, &mut order, &mut best);
    } else {
        for r in 0..params.rollouts {
            let eps = if r == 0 { 0.0 } else { 0.3 };
            let (key, order) = rollout(&pl, &window, &base, rng, eps);
            if best.as_ref().is_none_or(|(b, _)| better(key, *b)) {
                best = Some((key, order));
            }
        }
    }
    let (_, mut order) = best.expect("at least the arrival order");
    order.extend(fifo_merge(vehicles, &tail_queues));
    schedule_order(vehicles, &order, grid, params, now)
}

const ROLLOUT_STREAM: u64 = 20;

pub struct Coop {
    grid: SubzoneGrid,
    params: PlanParams,
    rng: ChaCha8Rng,
    next_replan: f64,
    /// Planned entry time per uncommitted vehicle from the latest plan.
    planned: HashMap<u32, f64>,
}

impl Coop {
    pub fn new(cfg: &SimConfig, layout: &IntersectionLayout) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(ROLLOUT_STREAM);
        Coop {
            grid: build_grid(layout, cfg.coop.cell_size),
            params: PlanParams::from_config(cfg),
            rng,
            next_replan: 0.0,
            planned: HashMap::new(),
        }
    }

    pub fn grid(&self) -> &SubzoneGrid {
        &self.grid
    }

    fn plan_vehicle(view: &WorldView<'_>, i: usize) -> PlanVehicle {
        let v = &view.vehicles[i];
        let cfg = view.cfg;
        let d = view.dist_to_line(v);
        let v_limit = cfg.speeds.for_intention(v.intention);
        let (t, va) = if d > 0.0 {
            earliest_arrival(d, v.v, cfg.speeds.straight, v_limit, cfg.a_comfort)
        } else {
            // Inside: back-project the moment the front crossed the line.
            let speed = v.v.max(0.5);
            (d / speed, v.v)
        };
        PlanVehicle {
            id: v.id,
            lane: v.lane,
            intention: v.intention,
            dist: d,
            earliest: view.time + t,
            v: v.v,
            v_arrival: va,
            v_approach: cfg.speeds.straight,
            v_limit,
            fixed: view.is_granted(v),
        }
    }

    fn replan(&mut self, view: &WorldView<'_>, out: &mut Decisions, log: &mut EventLog) {
        let idx: Vec<usize> = (0..view.vehicles.len())
            .filter(|&i| {
                let v = &view.vehicles[i];
                !v.has_cleared(view.path(v))
            })
            .collect();
        let pvs: Vec<PlanVehicle> = idx.iter().map(|&i| Self::plan_vehicle(view, i)).collect();
        let plan = plan_order(&pvs, &self.grid, &self.params, view.time, &mut self.rng);
        self.planned.clear();
        for (k, &id) in plan.order.iter().enumerate() {
            self.planned.insert(id, plan.entry_time[k]);
        }
        let n = idx.len() as u64;
        out.messages.count(MessageKind::StateBroadcast, n);
        out.messages.count(MessageKind::Plan, n);
        out.replans += 1;
        log.record(|| Event {
            time: view.time,
            kind: EventKind::Replan,
            vehicle: None,
            lane: None,
            s: 0.0,
            v: 0.0,
            detail: format!("{n} vehicles, makespan {:.2}", plan.makespan),
        });
    }

    fn uses_shared_cell(&self, a: &crate::traffic::Vehicle, b: &crate::traffic::Vehicle) -> bool {
        let fa = self.grid.footprint(a.lane, a.intention);
        let fb = self.grid.footprint(b.lane, b.intention);
        fa.iter().any(|x| fb.iter().any(|y| x.cell == y.cell))
    }
}

impl Strategy for Coop {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Coop
    }

    fn decide(&mut self, view: &WorldView<'_>, out: &mut Decisions, log: &mut EventLog) {
        let cfg = view.cfg;
        if view.time + 1e-9 >= self.next_replan {
            self.replan(view, out, log);
            self.next_replan += cfg.coop.replan_period;
        }
        let planned = |id: u32| self.planned.get(&id).copied().unwrap_or(f64::INFINITY);
        let mut granted: Vec<bool> = view.vehicles.iter().map(|v| view.is_granted(v)).collect();

        let mut leads: Vec<usize> = (0..4)
            .filter_map(|l| view.lane_lead(l))
            .filter(|&i| {
                let d = view.dist_to_line(&view.vehicles[i]);
                (0.0..=cfg.decision_distance).contains(&d)
            })
            .collect();
        leads.sort_by(|&a, &b| {
            planned(view.vehicles[a].id)
                .total_cmp(&planned(view.vehicles[b].id))
                .then(view.vehicles[a].id.cmp(&view.vehicles[b].id))
        });

        for &xi in &leads {
            let x = &view.vehicles[xi];
            let tx = planned(x.id);
            let mut ok = true;
            let mut cons = Vec::new();
            for (yi, y) in view.vehicles.iter().enumerate() {
                if y.lane == x.lane || y.has_cleared(view.path(y)) {
                    continue;
                }
                let geo = view.conflict(y, x);
                if geo.is_none() && !self.uses_shared_cell(x, y) {
                    continue;
                }
                if !granted[yi] {
                    if planned(y.id) < tx {
                        ok = false;
                        break;
                    }
                    continue;
                }
                if let Some(pair) = geo {
                    if !ordering_feasible(pair, y, x, cfg) {
                        ok = false;
                        break;
                    }
                    cons.push(Constraint {
                        first: y.id,
                        second: x.id,
                        pair: *pair,
                    });
                }
            }
            if !ok {
                continue;
            }
            granted[xi] = true;
            out.grants.push(x.id);
            for c in cons {
                out.resolved.push((c.first, c.second));
                out.constraints.push(c);
            }
        }

        for (i, v) in view.vehicles.iter().enumerate() {
            if granted[i] {
                continue;
            }
            let d = view.dist_to_line(v);
            if d < 0.0 {
                continue;
            }
            let t = planned(v.id);
            if t.is_finite() && t > view.time + cfg.dt {
                let v_end = cfg.speeds.for_intention(v.intention);
                let a = cfg.a_comfort;
                let dur = t - view.time;
                if let Some(w) = hold_speed_for(d, v.v, v_end, a, dur, self.params.min_hold_speed) {
                    // Hold until it is time to speed up to the line.
                    if d > (v_end * v_end - v.v * v.v) / (2.0 * a) + v.v * cfg.dt {
                        out.directives[i].speed_cap = Some(w.max(v.v - a * cfg.dt));
                    }
                } else {
                    let u = cruise_speed_for(d, v.v, cfg.speeds.straight, v_end, a, dur);
                    if u < cfg.speeds.straight {
                        out.directives[i].speed_cap = Some(u);
                    }
                }
            }
            if leads.contains(&i) || (view.lane_lead(v.lane.index()) == Some(i) && d <= cfg.decision_distance) {
                out.directives[i].hold = true;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_layout, LayoutParams};

    #[test]
    fn grid_cells() {
        let layout = build_layout(LayoutParams::default()).unwrap();
        let g = build_grid(&layout, 3.0);
        assert_eq!(g.cell_count(), 4);
        let ns = g.footprint(Branch::North, Intention::Straight);
        assert_eq!(ns.len(), 2);
        let ew = g.footprint(Branch::East, Intention::Straight);
        let shared = ns.iter().filter(|a| ew.iter().any(|b| b.cell == a.cell)).count();
        assert_eq!(shared, 1);
        let one = build_grid(&layout, 6.0);
        assert_eq!(one.cell_count(), 1);
    }

    #[test]
    fn travel_time_profiles() {
        assert!((travel_time(10.0, 10.0, 10.0, 2.0) - 1.0).abs() < 1e-12);
        assert!((travel_time(4.0, 0.0, 10.0, 2.0) - 2.0).abs() < 1e-12);
        let (t, v) = earliest_arrival(100.0, 10.0, 10.0, 10.0, 2.0);
        assert!((t - 10.0).abs() < 1e-12 && v == 10.0);
        let (t, v) = earliest_arrival(100.0, 10.0, 10.0, 5.0, 2.0);
        assert_eq!(v, 5.0);
        assert!(t > 10.0);
    }
}
