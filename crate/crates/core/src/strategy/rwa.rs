//! Right-of-way assignment: pairwise priority, virtual-vehicle zone checks
//! and one-to-one negotiation.

use std::collections::{HashMap, HashSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::SimConfig;
use crate::events::{Event, EventKind, EventLog};
use crate::geometry::{map_virtual, Branch, ConflictCase, Intention, IntersectionLayout};
use crate::metrics::MessageKind;
use crate::safety::{classify_zone, zone_partition, Zone};
use crate::strategy::{ordering_feasible, Constraint, Decisions, Strategy, StrategyKind, WorldView};
use crate::traffic::{bernoulli, form_platoons, QueueEntry, Vehicle};

/// Distances to the overlap point closer than one vehicle length count as
/// equal when ranking priority.
pub const DISTANCE_TOLERANCE: f64 = 3.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorityInput {
    pub lane: Branch,
    pub intention: Intention,
    /// Remaining arc length to the overlap point.
    pub dist_to_overlap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Owner {
    First,
    Second,
}

/// Right-of-way owner of a conflicting pair: straight over left over right,
/// then the vehicle nearer the overlap point, then lanes 3/7 over 1/5, then
/// the lower lane label.
pub fn priority_compare(a: &PriorityInput, b: &PriorityInput, tolerance: f64) -> Owner {
    let pick = |a_wins: bool| if a_wins { Owner::First } else { Owner::Second };
    let (la, lb) = (a.intention.priority_level(), b.intention.priority_level());
    if la != lb {
        return pick(la > lb);
    }
    let diff = a.dist_to_overlap - b.dist_to_overlap;
    if diff.abs() > tolerance {
        return pick(diff < 0.0);
    }
    let (ta, tb) = (a.lane.has_tie_precedence(), b.lane.has_tie_precedence());
    if ta != tb {
        return pick(ta);
    }
    pick(a.lane.entry_label() < b.lane.entry_label())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    OwnerProceedsOtherYields,
    RowTransferred,
    NoConflict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reply {
    Accept,
    Reject,
}

/// One side of a pairwise decision. `length` is the extent used for zone
/// checks, which covers the whole platoon behind a platoon leader.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Party {
    pub id: u32,
    pub lane: Branch,
    pub intention: Intention,
    pub s: f64,
    pub v: f64,
    pub length: f64,
}

impl Party {
    pub fn of(v: &Vehicle) -> Self {
        Party {
            id: v.id,
            lane: v.lane,
            intention: v.intention,
            s: v.s,
            v: v.v,
            length: v.length,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairResolution {
    pub vehicle_a: u32,
    pub vehicle_b: u32,
    pub case: Option<ConflictCase>,
    pub priority_owner: u32,
    pub zone: Zone,
    pub outcome: Outcome,
    /// Which of the two passes the overlap first.
    pub first: u32,
}

/// Decides one pair. `forced_owner` overrides the priority rules (a vehicle
/// already driving through keeps its right-of-way). `negotiate` is called
/// only when the yielder's image lies in the owner's negotiation area.
pub fn resolve_pair(
    a: &Party,
    b: &Party,
    layout: &IntersectionLayout,
    cfg: &SimConfig,
    forced_owner: Option<u32>,
    negotiate: &mut dyn FnMut(u32, u32) -> Reply,
) -> PairResolution {
    let conflict = if a.lane == b.lane {
        None
    } else {
        layout.conflict(a.lane, a.intention, b.lane, b.intention)
    };
    let Some(pair_ab) = conflict else {
        return PairResolution {
            vehicle_a: a.id,
            vehicle_b: b.id,
            case: None,
            priority_owner: a.id,
            zone: Zone::Free,
            outcome: Outcome::NoConflict,
            first: if a.s >= b.s { a.id } else { b.id },
        };
    };
    let a_owns = match forced_owner {
        Some(id) => id == a.id,
        None => {
            let pa = PriorityInput {
                lane: a.lane,
                intention: a.intention,
                dist_to_overlap: pair_ab.s_a_star - a.s,
            };
            let pb = PriorityInput {
                lane: b.lane,
                intention: b.intention,
                dist_to_overlap: pair_ab.s_b_star - b.s,
            };
            priority_compare(&pa, &pb, DISTANCE_TOLERANCE) == Owner::First
        }
    };
    let (owner, other) = if a_owns { (a, b) } else { (b, a) };
    let pair = layout
        .conflict(owner.lane, owner.intention, other.lane, other.intention)
        .expect("conflict table is symmetric");
    let image = map_virtual(other.s, pair.s_a_star, pair.s_b_star);
    let zones = zone_partition(owner.v, other.v, &cfg.brake);
    let zone = classify_zone(image, other.length, owner.s, owner.length, &zones);
    let image_ahead = image - other.length >= owner.s;
    let (outcome, first) = match zone {
        Zone::Free => (
            Outcome::NoConflict,
            if image_ahead { other.id } else { owner.id },
        ),
        Zone::Forbidden => (Outcome::OwnerProceedsOtherYields, owner.id),
        Zone::Negotiation => match negotiate(owner.id, other.id) {
            Reply::Accept => (Outcome::RowTransferred, other.id),
            Reply::Reject => (Outcome::OwnerProceedsOtherYields, owner.id),
        },
    };
    PairResolution {
        vehicle_a: a.id,
        vehicle_b: b.id,
        case: Some(pair_ab.case),
        priority_owner: owner.id,
        zone,
        outcome,
        first,
    }
}

/// Bernoulli acceptance of a right-of-way request.
pub fn rwa_negotiate(rng: &mut ChaCha8Rng, accept_probability: f64) -> Reply {
    if bernoulli(rng, accept_probability) {
        Reply::Accept
    } else {
        Reply::Reject
    }
}

const NEGOTIATION_STREAM: u64 = 10;

pub struct Rwa {
    rng: ChaCha8Rng,
    accept_probability: f64,
    /// Cached reply per (owner, requester) while the episode lasts.
    episodes: HashMap<(u32, u32), Reply>,
    contacts: HashSet<(u32, u32)>,
}

impl Rwa {
    pub fn new(cfg: &SimConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(NEGOTIATION_STREAM);
        Rwa {
            rng,
            accept_probability: cfg.accept_probability,
            episodes: HashMap::new(),
            contacts: HashSet::new(),
        }
    }
}

/// A lane lead together with the followers that pass with it.
struct Group {
    members: Vec<usize>,
    extent: f64,
}

fn lead_group(view: &WorldView<'_>, lane: usize, lead: usize) -> Group {
    let list = &view.lanes[lane];
    let start = list.iter().position(|&i| i == lead).expect("lead is in its lane");
    let reach = view.control_distance();
    let rows: Vec<usize> = list[start..]
        .iter()
        .copied()
        .take_while(|&i| view.dist_to_line(&view.vehicles[i]) <= reach)
        .collect();
    let entries: Vec<QueueEntry> = rows
        .iter()
        .map(|&i| {
            let v = &view.vehicles[i];
            QueueEntry {
                intention: v.intention,
                s: v.s,
                v: v.v,
                length: v.length,
            }
        })
        .collect();
    let ids = form_platoons(&entries, &view.cfg.brake, view.cfg.standstill_gap);
    let members: Vec<usize> = rows
        .iter()
        .zip(&ids)
        .take_while(|(_, &p)| p == 0)
        .map(|(&i, _)| i)
        .collect();
    let head = &view.vehicles[lead];
    let tail = &view.vehicles[*members.last().unwrap_or(&lead)];
    Group {
        extent: head.s - tail.rear(),
        members: if members.is_empty() { vec![lead] } else { members },
    }
}

/// `to` is already ordered after `from` through existing orderings.
fn reaches(edges: &[(u32, u32)], from: u32, to: u32) -> bool {
    let mut stack = vec![from];
    let mut seen = HashSet::new();
    while let Some(n) = stack.pop() {
        if n == to {
            return true;
        }
        if !seen.insert(n) {
            continue;
        }
        stack.extend(edges.iter().filter(|e| e.0 == n).map(|e| e.1));
    }
    false
}

impl Strategy for Rwa {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Rwa
    }

    fn decide(&mut self, view: &WorldView<'_>, out: &mut Decisions, log: &mut EventLog) {
        let cfg = view.cfg;
        let n = view.vehicles.len();
        let mut committed: Vec<bool> = view
            .vehicles
            .iter()
            .map(|v| view.is_granted(v) && !v.has_cleared(view.path(v)))
            .collect();
        let mut granted: Vec<bool> = view.vehicles.iter().map(|v| view.is_granted(v)).collect();

        // Orderings already in force: explicit constraints plus lane order.
        let mut edges: Vec<(u32, u32)> = view.constraints.iter().map(|c| (c.first, c.second)).collect();
        for lane in view.lanes.iter() {
            let active: Vec<u32> = lane
                .iter()
                .filter(|&&i| committed[i])
                .map(|&i| view.vehicles[i].id)
                .collect();
            edges.extend(active.windows(2).map(|w| (w[0], w[1])));
        }

        let reach = view.control_distance();
        let mut leads: Vec<(usize, usize)> = (0..4)
            .filter_map(|lane| view.lane_lead(lane).map(|i| (lane, i)))
            .filter(|&(_, i)| {
                let d = view.dist_to_line(&view.vehicles[i]);
                d <= reach && d >= 0.0
            })
            .collect();
        leads.sort_by_key(|&(_, i)| view.vehicles[i].id);
        let groups: Vec<Group> = leads.iter().map(|&(lane, i)| lead_group(view, lane, i)).collect();

        let mut touched: HashSet<(u32, u32)> = HashSet::new();
        let rng = &mut self.rng;
        let p_accept = self.accept_probability;
        let episodes = &mut self.episodes;

        for (k, &(_, xi)) in leads.iter().enumerate() {
            let x = &view.vehicles[xi];
            if view.dist_to_line(x) > cfg.decision_distance || granted[xi] {
                continue;
            }
            let group = &groups[k];
            let mut xp = Party::of(x);
            xp.length = group.extent;

            let mut hold = false;
            let mut x_first: Vec<usize> = Vec::new();
            let mut x_second: Vec<usize> = Vec::new();

            // Committed vehicles first, then the other lanes' leads.
            let mut others: Vec<(usize, Option<f64>)> = (0..n)
                .filter(|&j| committed[j] && view.vehicles[j].lane != x.lane)
                .map(|j| (j, None))
                .collect();
            for (m, &(_, yi)) in leads.iter().enumerate() {
                if yi != xi && !granted[yi] && view.vehicles[yi].lane != x.lane {
                    others.push((yi, Some(groups[m].extent)));
                }
            }

            for &(yi, extent) in &others {
                let y = &view.vehicles[yi];
                if view.conflict(x, y).is_none() {
                    // A follower may still cross a committed vehicle's path.
                    let member_conflicts = group
                        .members
                        .iter()
                        .any(|&mi| view.conflict(&view.vehicles[mi], y).is_some());
                    if extent.is_none() && member_conflicts {
                        x_second.push(yi);
                    }
                    continue;
                }
                let key = (x.id.min(y.id), x.id.max(y.id));
                if self.contacts.insert(key) {
                    out.messages.count(MessageKind::StateBroadcast, 1);
                }
                let mut yp = Party::of(y);
                let y_committed = extent.is_none();
                if let Some(e) = extent {
                    yp.length = e;
                }
                let time = view.time;
                let mut negotiate = |owner: u32, requester: u32| -> Reply {
                    touched.insert((owner, requester));
                    if let Some(&r) = episodes.get(&(owner, requester)) {
                        return r;
                    }
                    let reply = rwa_negotiate(rng, p_accept);
                    out.messages.count(MessageKind::RowRequest, 1);
                    out.messages.count(
                        match reply {
                            Reply::Accept => MessageKind::Accept,
                            Reply::Reject => MessageKind::Reject,
                        },
                        1,
                    );
                    episodes.insert((owner, requester), reply);
                    log.record(|| Event {
                        time,
                        kind: EventKind::Message,
                        vehicle: Some(requester),
                        lane: None,
                        s: 0.0,
                        v: 0.0,
                        detail: format!("row_request to {owner}: {reply:?}"),
                    });
                    reply
                };
                let forced = y_committed.then_some(y.id);
                let res = resolve_pair(&xp, &yp, view.layout, cfg, forced, &mut negotiate);
                if res.outcome == Outcome::OwnerProceedsOtherYields && res.priority_owner == y.id {
                    hold = true;
                    break;
                }
                if y_committed {
                    if res.first == x.id {
                        x_first.push(yi);
                    } else {
                        x_second.push(yi);
                    }
                }
            }

            if hold {
                continue;
            }

            // Physical feasibility of every new ordering, for every member.
            let mut new_constraints = Vec::new();
            'members: for &mi in &group.members {
                let m = &view.vehicles[mi];
                for (&yi, m_first) in x_first
                    .iter()
                    .map(|y| (y, true))
                    .chain(x_second.iter().map(|y| (y, false)))
                {
                    let y = &view.vehicles[yi];
                    let (f, s) = if m_first { (m, y) } else { (y, m) };
                    let Some(pair) = view.conflict(f, s) else {
                        continue;
                    };
                    if !ordering_feasible(pair, f, s, cfg) {
                        hold = true;
                        break 'members;
                    }
                    new_constraints.push(Constraint {
                        first: f.id,
                        second: s.id,
                        pair: *pair,
                    });
                }
            }
            if !hold {
                let befores: Vec<u32> = x_second.iter().map(|&i| view.vehicles[i].id).collect();
                let afters: Vec<u32> = x_first.iter().map(|&i| view.vehicles[i].id).collect();
                // X goes after `befores` and before `afters`; refuse if some
                // `after` is already ordered ahead of some `before`.
                hold = afters
                    .iter()
                    .any(|&a| befores.iter().any(|&b| reaches(&edges, a, b)));
            }
            if hold {
                continue;
            }

            for &mi in &group.members {
                granted[mi] = true;
                committed[mi] = true;
                out.grants.push(view.vehicles[mi].id);
            }
            for w in group.members.windows(2) {
                edges.push((view.vehicles[w[0]].id, view.vehicles[w[1]].id));
            }
            for c in new_constraints {
                edges.push((c.first, c.second));
                out.resolved.push((c.first, c.second));
                out.constraints.push(c);
            }
        }

        for &(_, i) in &leads {
            if !granted[i] && view.dist_to_line(&view.vehicles[i]) <= cfg.decision_distance {
                out.directives[i].hold = true;
            }
        }
        self.episodes.retain(|k, _| touched.contains(k));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Intention::*;

    fn p(lane: Branch, intention: Intention, d: f64) -> PriorityInput {
        PriorityInput {
            lane,
            intention,
            dist_to_overlap: d,
        }
    }

    #[test]
    fn intention_tier() {
        let a = p(Branch::North, Straight, 50.0);
        let b = p(Branch::East, Right, 5.0);
        assert_eq!(priority_compare(&a, &b, DISTANCE_TOLERANCE), Owner::First);
        assert_eq!(priority_compare(&b, &a, DISTANCE_TOLERANCE), Owner::Second);
    }

    #[test]
    fn distance_tier() {
        let a = p(Branch::North, Straight, 20.0);
        let b = p(Branch::East, Straight, 30.0);
        assert_eq!(priority_compare(&a, &b, DISTANCE_TOLERANCE), Owner::First);
    }

    #[test]
    fn lane_tiers() {
        let a = p(Branch::North, Straight, 20.0);
        let b = p(Branch::East, Straight, 20.0);
        assert_eq!(priority_compare(&a, &b, DISTANCE_TOLERANCE), Owner::Second);
        let c = p(Branch::West, Left, 10.0);
        let d = p(Branch::East, Left, 10.0);
        assert_eq!(priority_compare(&c, &d, DISTANCE_TOLERANCE), Owner::Second);
    }

    #[test]
    fn negotiation_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!((0..100).all(|_| rwa_negotiate(&mut rng, 1.0) == Reply::Accept));
        assert!((0..100).all(|_| rwa_negotiate(&mut rng, 0.0) == Reply::Reject));
    }
}
