//! Oracles shared by several test targets.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rowsim::strategy::coop::{earliest_arrival, Interval, PlanVehicle};
use rowsim::{Branch, Intention, SimConfig};

// Cell-by-cell evaluation written the way a spreadsheet would: one column
// per term, then the positive part.
pub fn sheet_same(va: f64, vb: f64, rho: f64, amax: f64, bmax: f64) -> f64 {
    let react = vb * rho;
    let b_stop = vb.powi(2) / 2.0 / bmax;
    let a_stop = va.powi(2) / 2.0 / amax;
    f64::max(0.0, react + b_stop - a_stop)
}

pub fn sheet_rear(va: f64, vb: f64, amax: f64, bmin: f64) -> f64 {
    f64::max(0.0, vb.powi(2) / 2.0 / bmin - va.powi(2) / 2.0 / amax)
}

pub fn sheet_front(va: f64, vb: f64, rho: f64, amin: f64, bmax: f64) -> f64 {
    f64::max(0.0, va * rho + va.powi(2) / 2.0 / amin - vb.powi(2) / 2.0 / bmax)
}

/// Relative error within 1e-9, or absolute 1e-12 against an exact zero.
pub fn close(x: f64, y: f64) -> bool {
    if y == 0.0 {
        x.abs() <= 1e-12
    } else {
        ((x - y) / y).abs() <= 1e-9
    }
}

pub fn vehicle(cfg: &SimConfig, id: u32, lane: Branch, intention: Intention, dist: f64, v: f64) -> PlanVehicle {
    let v_limit = cfg.speeds.for_intention(intention);
    let (t, va) = earliest_arrival(dist, v, cfg.speeds.straight, v_limit, cfg.a_comfort);
    PlanVehicle {
        id,
        lane,
        intention,
        dist,
        earliest: t,
        v,
        v_arrival: va,
        v_approach: cfg.speeds.straight,
        v_limit,
        fixed: false,
    }
}

pub fn random_instance(cfg: &SimConfig, rng: &mut ChaCha8Rng, n: usize) -> Vec<PlanVehicle> {
    let mut next_dist = [0.0f64; 4];
    (0..n)
        .map(|id| {
            let lane = Branch::from_index(rng.random_range(0..4));
            let intention = Intention::ALL[rng.random_range(0..3)];
            let l = lane.index();
            next_dist[l] += rng.random_range(2.0..30.0);
            let d = next_dist[l];
            next_dist[l] += 6.0;
            vehicle(cfg, id as u32, lane, intention, d, rng.random_range(0.0..10.0))
        })
        .collect()
}

/// Every passing order that keeps each lane's vehicles in queue order.
pub fn lane_orders(vehicles: &[PlanVehicle]) -> Vec<Vec<usize>> {
    let mut queues: Vec<Vec<usize>> = vec![Vec::new(); 4];
    for (k, v) in vehicles.iter().enumerate() {
        queues[v.lane.index()].push(k);
    }
    for q in &mut queues {
        q.sort_by(|&a, &b| vehicles[a].dist.total_cmp(&vehicles[b].dist));
    }
    fn rec(queues: &[Vec<usize>], heads: &mut [usize; 4], cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let mut any = false;
        for l in 0..4 {
            if heads[l] < queues[l].len() {
                any = true;
                cur.push(queues[l][heads[l]]);
                heads[l] += 1;
                rec(queues, heads, cur, out);
                heads[l] -= 1;
                cur.pop();
            }
        }
        if !any {
            out.push(cur.clone());
        }
    }
    let mut out = Vec::new();
    rec(&queues, &mut [0; 4], &mut Vec::new(), &mut out);
    out
}

/// Stop-line arrival order: repeatedly take the lane head that can arrive
/// first.
pub fn fifo_order(vehicles: &[PlanVehicle]) -> Vec<usize> {
    let mut queues: Vec<Vec<usize>> = vec![Vec::new(); 4];
    for (k, v) in vehicles.iter().enumerate() {
        queues[v.lane.index()].push(k);
    }
    for q in &mut queues {
        q.sort_by(|&a, &b| vehicles[b].dist.total_cmp(&vehicles[a].dist));
    }
    let mut out = Vec::new();
    while let Some(l) = (0..4)
        .filter(|&l| !queues[l].is_empty())
        .min_by(|&a, &b| {
            let (x, y) = (queues[a].last().unwrap(), queues[b].last().unwrap());
            vehicles[*x].earliest.total_cmp(&vehicles[*y].earliest)
        })
    {
        out.push(queues[l].pop().unwrap());
    }
    out
}

/// Independent check of the cross-lane headway in every shared cell.
pub fn headway_violations(intervals: &[Interval], headway: f64) -> Vec<(Interval, Interval)> {
    let mut bad = Vec::new();
    for (i, a) in intervals.iter().enumerate() {
        for b in &intervals[i + 1..] {
            if a.cell != b.cell || a.lane == b.lane {
                continue;
            }
            let sep = (b.start - a.end).max(a.start - b.end);
            if sep < headway - 1e-6 {
                bad.push((*a, *b));
            }
        }
    }
    bad
}

