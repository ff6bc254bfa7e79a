//! Distance-ranked first-come-first-served control with one vehicle in the
//! junction at a time. Vehicles only sense each other; nothing is sent.
//!
//! A lead that is closest to the junction when it reaches the decision
//! distance, with the junction empty, drives straight through. Every other
//! lead stops at its line and is served in stop order.

use std::collections::HashSet;

use crate::config::SimConfig;
use crate::events::{Event, EventKind, EventLog};
use crate::strategy::{Decisions, Strategy, StrategyKind, WorldView};

/// A lead counts as queued at the line once its front is this close.
const QUEUE_DISTANCE: f64 = 1.0;
const TIE_EPS: f64 = 1e-6;
/// Below this speed a vehicle at the line counts as stopped.
const STOPPED_SPEED: f64 = 0.1;

/// Outcome for one lead vehicle in its decision stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RssAction {
    Proceed,
    HoldAtStopLine,
    Follow,
}

#[derive(Debug, Clone)]
pub struct Rss {
    /// Vehicles stopped at their stop line, in arrival order.
    fifo: Vec<(u32, f64)>,
    /// Vehicles that were not let through on arrival and must stop first.
    waiting: HashSet<u32>,
    occupant: Option<u32>,
    tie_break: bool,
    recent_grants: Vec<u32>,
    last_tie: Vec<u32>,
}

/// Candidate lead vehicle in its decision stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RssCandidate {
    pub id: u32,
    pub dist: f64,
    pub queued_at: Option<f64>,
    pub spawn_time: f64,
    pub lane_label: u8,
}

/// Picks the next vehicle for an empty junction: queued vehicles in queue
/// order, otherwise the smallest distance to the line. Returns the winner
/// and the full set tied with it.
pub fn rss_pick(cands: &[RssCandidate], tie_break: bool) -> (Option<u32>, Vec<u32>) {
    let key = |c: &RssCandidate| (c.queued_at.unwrap_or(f64::INFINITY), c.dist);
    let Some(best) = cands.iter().min_by(|a, b| {
        let (ka, kb) = (key(a), key(b));
        ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
    }) else {
        return (None, Vec::new());
    };
    let kb = key(best);
    let same = |x: f64, y: f64| x == y || (x - y).abs() < TIE_EPS;
    let mut tied: Vec<&RssCandidate> = cands
        .iter()
        .filter(|c| {
            let k = key(c);
            same(k.0, kb.0) && same(k.1, kb.1)
        })
        .collect();
    if tied.len() == 1 {
        return (Some(best.id), Vec::new());
    }
    tied.sort_by(|a, b| {
        a.spawn_time
            .total_cmp(&b.spawn_time)
            .then(a.lane_label.cmp(&b.lane_label))
    });
    let ids = tied.iter().map(|c| c.id).collect();
    (tie_break.then(|| tied[0].id), ids)
}

impl Rss {
    pub fn new(cfg: &SimConfig) -> Self {
        Rss {
            fifo: Vec::new(),
            waiting: HashSet::new(),
            occupant: None,
            tie_break: cfg.rss_tie_break,
            recent_grants: Vec::new(),
            last_tie: Vec::new(),
        }
    }

    pub fn occupant(&self) -> Option<u32> {
        self.occupant
    }

    pub fn fifo(&self) -> impl Iterator<Item = u32> + '_ {
        self.fifo.iter().map(|&(id, _)| id)
    }
}

impl Strategy for Rss {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Rss
    }

    fn decide(&mut self, view: &WorldView<'_>, out: &mut Decisions, log: &mut EventLog) {
        if let Some(o) = self.occupant {
            let gone = match view.index_of(o) {
                Some(i) => {
                    let v = &view.vehicles[i];
                    v.has_cleared(view.path(v))
                }
                None => true,
            };
            if gone {
                self.occupant = None;
            }
        }

        let mut cands = Vec::new();
        for lane in 0..4 {
            let Some(i) = view.lane_lead(lane) else {
                continue;
            };
            let v = &view.vehicles[i];
            let d = view.dist_to_line(v);
            if d > view.cfg.decision_distance || d < -v.length {
                continue;
            }
            out.observations += 1;
            let stopped = d <= QUEUE_DISTANCE && v.v < STOPPED_SPEED;
            if stopped && self.waiting.contains(&v.id) && !self.fifo.iter().any(|&(id, _)| id == v.id) {
                self.fifo.push((v.id, view.time));
            }
            cands.push((i, v.id));
        }
        self.fifo
            .retain(|&(id, _)| cands.iter().any(|&(_, cid)| cid == id));
        self.waiting
            .retain(|id| cands.iter().any(|&(_, cid)| cid == *id));

        let row = |i: usize, id: u32, queued_at: Option<f64>| {
            let v = &view.vehicles[i];
            RssCandidate {
                id,
                dist: view.dist_to_line(v),
                queued_at,
                spawn_time: v.spawn_time,
                lane_label: v.lane.entry_label(),
            }
        };
        let mut granted = None;
        if self.occupant.is_none() && !cands.is_empty() {
            let rows: Vec<RssCandidate> = if self.fifo.is_empty() {
                // Only a vehicle that is closest on arrival may go without stopping.
                let closest = cands
                    .iter()
                    .map(|&(i, _)| view.dist_to_line(&view.vehicles[i]))
                    .fold(f64::INFINITY, f64::min);
                cands
                    .iter()
                    .filter(|&&(i, id)| {
                        !self.waiting.contains(&id)
                            && view.dist_to_line(&view.vehicles[i]) <= closest + TIE_EPS
                    })
                    .map(|&(i, id)| row(i, id, None))
                    .collect()
            } else {
                cands
                    .iter()
                    .filter_map(|&(i, id)| {
                        let q = self.fifo.iter().find(|f| f.0 == id).map(|f| f.1)?;
                        Some(row(i, id, Some(q)))
                    })
                    .collect()
            };
            let (winner, tied) = rss_pick(&rows, self.tie_break);
            if !tied.is_empty() && tied != self.last_tie {
                out.deadlock_ties += 1;
                log.record(|| Event {
                    time: view.time,
                    kind: EventKind::DeadlockTie,
                    vehicle: winner,
                    lane: None,
                    s: 0.0,
                    v: 0.0,
                    detail: format!("tied {tied:?}"),
                });
            }
            self.last_tie = tied;
            granted = winner;
        }

        if let Some(id) = granted {
            self.occupant = Some(id);
            self.fifo.retain(|&(f, _)| f != id);
            self.waiting.remove(&id);
            out.grants.push(id);
            self.recent_grants.retain(|&r| view.index_of(r).is_some());
            for &r in &self.recent_grants {
                out.resolved.push((r, id));
            }
            // Keep a short memory so the next grant is ordered after this one.
            self.recent_grants.push(id);
            if self.recent_grants.len() > 4 {
                self.recent_grants.remove(0);
            }
        }

        for &(i, id) in &cands {
            if Some(id) != granted {
                self.waiting.insert(id);
                out.directives[i].hold = true;
            }
        }
    }
}

/// Action for a single vehicle given the current RSS state.
pub fn rss_decide(view: &WorldView<'_>, rss: &Rss, vehicle: u32) -> RssAction {
    let Some(i) = view.index_of(vehicle) else {
        return RssAction::Follow;
    };
    let v = &view.vehicles[i];
    if view.is_granted(v) || rss.occupant == Some(vehicle) {
        return RssAction::Proceed;
    }
    let is_lead = view.lane_lead(v.lane.index()) == Some(i);
    if !is_lead || view.dist_to_line(v) > view.cfg.decision_distance {
        return RssAction::Follow;
    }
    RssAction::HoldAtStopLine
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cand(id: u32, dist: f64, queued_at: Option<f64>, lane: u8) -> RssCandidate {
        RssCandidate {
            id,
            dist,
            queued_at,
            spawn_time: id as f64,
            lane_label: lane,
        }
    }

    #[test]
    fn closest_wins() {
        let (w, tied) = rss_pick(&[cand(0, 30.0, None, 1), cand(1, 20.0, None, 3)], true);
        assert_eq!(w, Some(1));
        assert!(tied.is_empty());
    }

    #[test]
    fn queue_beats_distance() {
        let (w, _) = rss_pick(&[cand(0, 5.0, None, 1), cand(1, 0.3, Some(4.0), 3), cand(2, 0.2, Some(6.0), 5)], true);
        assert_eq!(w, Some(1));
    }

    #[test]
    fn equal_distances_tie() {
        let c = [cand(3, 30.0, None, 7), cand(1, 30.0, None, 3), cand(2, 30.0, None, 5)];
        let (w, tied) = rss_pick(&c, true);
        assert_eq!(w, Some(1));
        assert_eq!(tied, vec![1, 2, 3]);
        let (w, tied) = rss_pick(&c, false);
        assert_eq!(w, None);
        assert_eq!(tied.len(), 3);
    }
}
