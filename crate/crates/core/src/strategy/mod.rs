//! Coordination strategies and the per-step interface they share with the
//! engine.

use std::fmt;
use std::str::FromStr;

use crate::config::SimConfig;
use crate::events::EventLog;
use crate::geometry::{ConflictKind, ConflictPair, IntersectionLayout, Path};
use crate::metrics::MessageCounts;
use crate::safety::safe_follow_gap;
use crate::traffic::{Stage, Vehicle};

pub mod coop;
pub mod rss;
pub mod rwa;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StrategyKind {
    Rss,
    Rwa,
    Coop,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 3] = [StrategyKind::Rss, StrategyKind::Rwa, StrategyKind::Coop];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::Rss => "rss",
            StrategyKind::Rwa => "rwa",
            StrategyKind::Coop => "coop",
        }
    }

    pub fn build(self, cfg: &SimConfig, layout: &IntersectionLayout) -> Box<dyn Strategy> {
        match self {
            StrategyKind::Rss => Box::new(rss::Rss::new(cfg)),
            StrategyKind::Rwa => Box::new(rwa::Rwa::new(cfg)),
            StrategyKind::Coop => Box::new(coop::Coop::new(cfg, layout)),
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rss" | "fifo" => Ok(StrategyKind::Rss),
            "rwa" => Ok(StrategyKind::Rwa),
            "coop" | "cooperative" => Ok(StrategyKind::Coop),
            other => Err(format!("unknown strategy `{other}` (expected rss, rwa or coop)")),
        }
    }
}

/// Ordering between two committed vehicles whose paths overlap: `second`
/// keeps a safe gap to the image of `first` until `first` has left the
/// overlap region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constraint {
    pub first: u32,
    pub second: u32,
    /// Overlap with `first` as vehicle A.
    pub pair: ConflictPair,
}

/// Half-length of the stretch of path around an overlap point that a body
/// blocks: half a lane for crossings, nothing for merges.
pub fn clearance(kind: ConflictKind, lane_width: f64) -> f64 {
    match kind {
        ConflictKind::Crossing => lane_width / 2.0,
        ConflictKind::Merge => 0.0,
    }
}

impl Constraint {
    /// Bumper-to-bumper gap from `second` to the image of `first`.
    pub fn gap(&self, first: &Vehicle, second: &Vehicle, lane_width: f64) -> f64 {
        constraint_gap(&self.pair, first, second, lane_width)
    }

    /// The ordering no longer binds: for a crossing, `first`'s rear has left
    /// the overlap region; for a merge, `second` has reached the merge point
    /// and follows `first` on the shared lane from there.
    pub fn is_released(&self, first: &Vehicle, second: &Vehicle, lane_width: f64) -> bool {
        is_released(&self.pair, first, second, lane_width)
    }
}

pub fn is_released(pair: &ConflictPair, first: &Vehicle, second: &Vehicle, lane_width: f64) -> bool {
    match pair.kind {
        ConflictKind::Crossing => {
            first.rear() >= pair.span_a.1 + clearance(pair.kind, lane_width)
        }
        ConflictKind::Merge => second.s >= pair.span_b.0,
    }
}

pub fn constraint_gap(pair: &ConflictPair, first: &Vehicle, second: &Vehicle, lane_width: f64) -> f64 {
    let c = clearance(pair.kind, lane_width);
    let second_to_region = pair.span_b.0 - c - second.s;
    let first_rear_to_exit = pair.span_a.1 + c - first.rear();
    second_to_region - first_rear_to_exit
}

/// Whether `second` can still keep a safe gap behind `first` through their
/// overlap.
pub fn ordering_feasible(
    pair: &ConflictPair,
    first: &Vehicle,
    second: &Vehicle,
    cfg: &SimConfig,
) -> bool {
    let w = cfg.layout.lane_width;
    if is_released(pair, first, second, w) {
        return true;
    }
    constraint_gap(pair, first, second, w) >= safe_follow_gap(second.v, first.v, &cfg.brake)
}

/// What a strategy asks of one vehicle for the coming step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Directive {
    /// Stop at the line (ignored once the vehicle holds a grant).
    pub hold: bool,
    pub speed_cap: Option<f64>,
}

/// Read-only world snapshot handed to strategies.
pub struct WorldView<'a> {
    pub time: f64,
    pub cfg: &'a SimConfig,
    pub layout: &'a IntersectionLayout,
    /// Active vehicles in increasing id order.
    pub vehicles: &'a [Vehicle],
    /// Per entry branch, indices into `vehicles` from front to back.
    pub lanes: &'a [Vec<usize>; 4],
    pub constraints: &'a [Constraint],
}

impl<'a> WorldView<'a> {
    pub fn path(&self, v: &Vehicle) -> &'a Path {
        self.layout.path(v.lane, v.intention)
    }

    pub fn index_of(&self, id: u32) -> Option<usize> {
        self.vehicles.binary_search_by_key(&id, |v| v.id).ok()
    }

    pub fn is_granted(&self, v: &Vehicle) -> bool {
        v.stage == Stage::Action
    }

    /// First vehicle of a lane that has no grant yet.
    pub fn lane_lead(&self, lane: usize) -> Option<usize> {
        self.lanes[lane]
            .iter()
            .copied()
            .find(|&i| !self.is_granted(&self.vehicles[i]))
    }

    pub fn dist_to_line(&self, v: &Vehicle) -> f64 {
        v.dist_to_line(self.path(v))
    }

    /// Approach length inside the control zone.
    pub fn control_distance(&self) -> f64 {
        self.cfg.layout.control_radius - self.layout.junction_half_width
    }

    /// Overlap of `a`'s and `b`'s paths with `a` as vehicle A.
    pub fn conflict(&self, a: &Vehicle, b: &Vehicle) -> Option<&'a ConflictPair> {
        if a.lane == b.lane {
            return None;
        }
        self.layout.conflict(a.lane, a.intention, b.lane, b.intention)
    }

    /// Granted vehicles whose rear has not yet left the junction.
    pub fn committed(&self) -> impl Iterator<Item = usize> + '_ {
        self.vehicles.iter().enumerate().filter_map(move |(i, v)| {
            (self.is_granted(v) && !v.has_cleared(self.path(v))).then_some(i)
        })
    }
}

/// Everything a strategy produces in one step.
#[derive(Debug, Clone, Default)]
pub struct Decisions {
    /// Indexed like `WorldView::vehicles`.
    pub directives: Vec<Directive>,
    pub grants: Vec<u32>,
    pub constraints: Vec<Constraint>,
    /// Pairs whose passing order has been settled.
    pub resolved: Vec<(u32, u32)>,
    pub messages: MessageCounts,
    pub observations: u64,
    pub deadlock_ties: u64,
    pub replans: u64,
}

impl Decisions {
    pub fn reset(&mut self, n: usize) {
        self.directives.clear();
        self.directives.resize(n, Directive::default());
        self.grants.clear();
        self.constraints.clear();
        self.resolved.clear();
        self.messages = MessageCounts::default();
        self.observations = 0;
        self.deadlock_ties = 0;
        self.replans = 0;
    }
}

pub trait Strategy: Send {
    fn kind(&self) -> StrategyKind;
    fn decide(&mut self, view: &WorldView<'_>, out: &mut Decisions, log: &mut EventLog);
}
