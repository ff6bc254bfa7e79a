//! Intersection layout, vehicle paths and conflict points.
//!
//! Coordinates are metres with the junction centre at the origin, north on
//! `+y` and right-hand traffic. Entry lanes are labelled clockwise with odd
//! numbers (1 north, 3 east, 5 south, 7 west); the exit lane of each branch
//! carries the following even number.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;

use crate::error::LayoutError;
use crate::scalar::Scalar;

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    /// Clockwise quarter turn about the origin.
    fn rotated_cw(self) -> Point {
        Point::new(self.y, -self.x)
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }
}

/// One of the four approach branches, in clockwise order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Branch {
    North,
    East,
    South,
    West,
}

impl Branch {
    pub const ALL: [Branch; 4] = [Branch::North, Branch::East, Branch::South, Branch::West];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Branch {
        Self::ALL[i % 4]
    }

    /// Rotate clockwise by `quarter_turns` branches.
    pub fn rotate(self, quarter_turns: usize) -> Branch {
        Self::from_index(self.index() + quarter_turns)
    }

    /// Label of the branch's entry lane (1, 3, 5, 7).
    pub fn entry_label(self) -> u8 {
        2 * self as u8 + 1
    }

    /// Label of the branch's exit lane (2, 4, 6, 8).
    pub fn exit_label(self) -> u8 {
        2 * self as u8 + 2
    }

    pub fn from_entry_label(label: u8) -> Option<Branch> {
        match label {
            1 => Some(Branch::North),
            3 => Some(Branch::East),
            5 => Some(Branch::South),
            7 => Some(Branch::West),
            _ => None,
        }
    }

    /// Entry lanes 3 and 7 (the east-west road) win ties over 1 and 5.
    pub fn has_tie_precedence(self) -> bool {
        matches!(self, Branch::East | Branch::West)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Intention {
    Straight,
    Left,
    Right,
}

impl Intention {
    pub const ALL: [Intention; 3] = [Intention::Straight, Intention::Left, Intention::Right];

    pub fn index(self) -> usize {
        self as usize
    }

    /// General priority level: straight > left > right.
    pub fn priority_level(self) -> u8 {
        match self {
            Intention::Straight => 2,
            Intention::Left => 1,
            Intention::Right => 0,
        }
    }

    pub fn is_turn(self) -> bool {
        self != Intention::Straight
    }

    pub fn exit_branch(self, origin: Branch) -> Branch {
        match self {
            Intention::Straight => origin.rotate(2),
            Intention::Left => origin.rotate(1),
            Intention::Right => origin.rotate(3),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Intention::Straight => "straight",
            Intention::Left => "left",
            Intention::Right => "right",
        }
    }
}

impl fmt::Display for Intention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Intention {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "s" | "straight" => Ok(Intention::Straight),
            "l" | "left" => Ok(Intention::Left),
            "r" | "right" => Ok(Intention::Right),
            other => Err(format!("unknown intention `{other}`")),
        }
    }
}

/// A straight segment or a circular arc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Segment {
    Line {
        start: Point,
        dir: Point,
        len: f64,
    },
    /// `sweep` is signed: positive is counter-clockwise.
    Arc {
        center: Point,
        radius: f64,
        start_angle: f64,
        sweep: f64,
    },
}

impl Segment {
    pub fn length(&self) -> f64 {
        match *self {
            Segment::Line { len, .. } => len,
            Segment::Arc { radius, sweep, .. } => radius * sweep.abs(),
        }
    }

    pub fn point_at(&self, u: f64) -> Point {
        match *self {
            Segment::Line { start, dir, .. } => start + dir * u,
            Segment::Arc {
                center,
                radius,
                start_angle,
                sweep,
            } => {
                let a = start_angle + sweep.signum() * u / radius;
                center + Point::new(a.cos(), a.sin()) * radius
            }
        }
    }

    /// Unit tangent in the direction of travel.
    pub fn heading_at(&self, u: f64) -> Point {
        match *self {
            Segment::Line { dir, .. } => dir,
            Segment::Arc {
                radius,
                start_angle,
                sweep,
                ..
            } => {
                let sign = sweep.signum();
                let a = start_angle + sign * u / radius;
                Point::new(-a.sin(), a.cos()) * sign
            }
        }
    }

    pub fn end(&self) -> Point {
        self.point_at(self.length())
    }

    fn rotated_cw(&self) -> Segment {
        match *self {
            Segment::Line { start, dir, len } => Segment::Line {
                start: start.rotated_cw(),
                dir: dir.rotated_cw(),
                len,
            },
            Segment::Arc {
                center,
                radius,
                start_angle,
                sweep,
            } => Segment::Arc {
                center: center.rotated_cw(),
                radius,
                start_angle: start_angle - FRAC_PI_2,
                sweep,
            },
        }
    }

    /// Arc-length parameter of `p` if it lies on this segment.
    fn param_of(&self, p: Point) -> Option<f64> {
        match *self {
            Segment::Line { start, dir, len } => {
                let u = (p - start).dot(dir);
                let off = (p - start).cross(dir).abs();
                (off < 1e-6 && u >= -1e-7 && u <= len + 1e-7).then(|| u.clamp(0.0, len))
            }
            Segment::Arc {
                center,
                radius,
                start_angle,
                sweep,
            } => {
                if ((p - center).norm() - radius).abs() > 1e-6 {
                    return None;
                }
                let a = (p.y - center.y).atan2(p.x - center.x);
                let mut delta = (a - start_angle) * sweep.signum();
                delta = delta.rem_euclid(2.0 * PI);
                // Points just before the start wrap to ~2π.
                if delta > 2.0 * PI - 1e-7 {
                    delta = 0.0;
                }
                let u = delta * radius;
                let len = self.length();
                (u <= len + 1e-7).then(|| u.min(len))
            }
        }
    }
}

/// A vehicle route: approach leg, junction traversal, exit leg.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub origin: Branch,
    pub intention: Intention,
    pub exit: Branch,
    pub segments: [Segment; 3],
    /// Arc length from the spawn point to the stop line.
    pub s_junction_entry: f64,
    pub junction_len: f64,
    pub total_length: f64,
}

impl Path {
    pub fn s_junction_exit(&self) -> f64 {
        self.s_junction_entry + self.junction_len
    }

    pub fn junction_segment(&self) -> &Segment {
        &self.segments[1]
    }

    pub fn point_at(&self, s: f64) -> Point {
        let (seg, u) = self.locate(s);
        self.segments[seg].point_at(u)
    }

    pub fn heading_at(&self, s: f64) -> Point {
        let (seg, u) = self.locate(s);
        self.segments[seg].heading_at(u)
    }

    fn locate(&self, s: f64) -> (usize, f64) {
        let s = s.clamp(0.0, self.total_length);
        if s < self.s_junction_entry {
            (0, s)
        } else if s < self.s_junction_exit() {
            (1, s - self.s_junction_entry)
        } else {
            (2, s - self.s_junction_exit())
        }
    }

    fn rotated_cw(&self) -> Path {
        Path {
            origin: self.origin.rotate(1),
            exit: self.exit.rotate(1),
            segments: self.segments.map(|s| s.rotated_cw()),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayoutParams {
    pub lane_width: f64,
    pub control_radius: f64,
    pub spawn_distance: f64,
}

impl Default for LayoutParams {
    fn default() -> Self {
        Self {
            lane_width: 3.0,
            control_radius: 100.0,
            spawn_distance: 200.0,
        }
    }
}

/// The seven two-vehicle conflict types of a four-branch junction.
///
/// `A`: two straights from perpendicular branches. `B`: straight and a right
/// turn merging into the same exit. `C`: straight and an opposing left turn.
/// `D`: straight and a left turn from its right-hand branch. `E`: straight and
/// a left turn from its left-hand branch merging into the same exit. `F`: two
/// left turns. `G`: left turn and a right turn merging into the same exit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConflictCase {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
}

impl ConflictCase {
    pub fn kind(self) -> ConflictKind {
        match self {
            ConflictCase::B | ConflictCase::E | ConflictCase::G => ConflictKind::Merge,
            _ => ConflictKind::Crossing,
        }
    }

    pub fn label(self) -> char {
        match self {
            ConflictCase::A => 'a',
            ConflictCase::B => 'b',
            ConflictCase::C => 'c',
            ConflictCase::D => 'd',
            ConflictCase::E => 'e',
            ConflictCase::F => 'f',
            ConflictCase::G => 'g',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConflictKind {
    Crossing,
    Merge,
}

/// Trajectory overlap point of two paths, as arc lengths on each.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConflictPair {
    pub case: ConflictCase,
    pub kind: ConflictKind,
    pub s_a_star: f64,
    pub s_b_star: f64,
    pub point: Point,
    /// Arc-length range on A's path covering every overlap point with B.
    /// Equal to `(s_a_star, s_a_star)` unless the paths cross twice.
    pub span_a: (f64, f64),
    pub span_b: (f64, f64),
}

impl ConflictPair {
    pub fn swapped(&self) -> ConflictPair {
        ConflictPair {
            s_a_star: self.s_b_star,
            s_b_star: self.s_a_star,
            span_a: self.span_b,
            span_b: self.span_a,
            ..*self
        }
    }

    /// Position of B's virtual image on A's path.
    pub fn map_virtual(&self, pos_b: f64) -> f64 {
        map_virtual(pos_b, self.s_a_star, self.s_b_star)
    }
}

/// Virtual vehicle mapping: B's image on A's path keeps B's remaining
/// distance to the overlap point.
pub fn map_virtual<T: Scalar>(pos_b: T, s_a_star: T, s_b_star: T) -> T {
    s_a_star - (s_b_star - pos_b)
}

/// Conflict type of two entry movements, or `None` when their paths never
/// meet inside the junction. Rotation invariant and symmetric.
pub fn classify_conflict(
    lane_a: Branch,
    intention_a: Intention,
    lane_b: Branch,
    intention_b: Intention,
) -> Option<ConflictCase> {
    use ConflictCase::*;
    use Intention::*;
    // 1: B arrives from A's left, 2: opposite, 3: from A's right.
    let rel = (lane_b.index() + 4 - lane_a.index()) % 4;
    match (intention_a, intention_b, rel) {
        (_, _, 0) => None,
        (Straight, Straight, 1 | 3) => Some(A),
        (Straight, Right, 3) | (Right, Straight, 1) => Some(B),
        (Straight, Left, 2) | (Left, Straight, 2) => Some(C),
        (Straight, Left, 3) | (Left, Straight, 1) => Some(D),
        (Straight, Left, 1) | (Left, Straight, 3) => Some(E),
        (Left, Left, _) => Some(F),
        (Left, Right, 2) | (Right, Left, 2) => Some(G),
        _ => None,
    }
}

#[derive(Debug, Clone)]
pub struct IntersectionLayout {
    pub params: LayoutParams,
    pub junction_half_width: f64,
    paths: Vec<Path>,
    conflicts: Vec<Option<ConflictPair>>,
}

fn path_index(origin: Branch, intention: Intention) -> usize {
    origin.index() * 3 + intention.index()
}

impl IntersectionLayout {
    pub fn path(&self, origin: Branch, intention: Intention) -> &Path {
        &self.paths[path_index(origin, intention)]
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    /// Precomputed overlap point for two movements from distinct branches.
    pub fn conflict(
        &self,
        origin_a: Branch,
        intention_a: Intention,
        origin_b: Branch,
        intention_b: Intention,
    ) -> Option<&ConflictPair> {
        let i = path_index(origin_a, intention_a);
        let j = path_index(origin_b, intention_b);
        self.conflicts[i * 12 + j].as_ref()
    }
}

/// Builds the four-branch layout with all twelve paths and the conflict table.
pub fn build_layout(params: LayoutParams) -> Result<IntersectionLayout, LayoutError> {
    let LayoutParams {
        lane_width: w,
        control_radius,
        spawn_distance,
    } = params;
    for (name, v) in [
        ("lane_width", w),
        ("control_radius", control_radius),
        ("spawn_distance", spawn_distance),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(LayoutError::NonPositive(name, v));
        }
    }
    // Two lanes per road: the junction is a (2w x 2w) square.
    let half = w;
    if !(spawn_distance > control_radius && control_radius > half) {
        return Err(LayoutError::Ordering {
            spawn_distance,
            control_radius,
            junction_half_width: half,
        });
    }

    let off = w / 2.0;
    let exit_len = control_radius - half;
    let south = Point::new(0.0, -1.0);
    let approach = Segment::Line {
        start: Point::new(-off, spawn_distance),
        dir: south,
        len: spawn_distance - half,
    };
    let north_paths = Intention::ALL.map(|intention| {
        let (turn, exit) = match intention {
            Intention::Straight => (
                Segment::Line {
                    start: Point::new(-off, half),
                    dir: south,
                    len: 2.0 * half,
                },
                Segment::Line {
                    start: Point::new(-off, -half),
                    dir: south,
                    len: exit_len,
                },
            ),
            Intention::Right => (
                Segment::Arc {
                    center: Point::new(-half, half),
                    radius: half - off,
                    start_angle: 0.0,
                    sweep: -FRAC_PI_2,
                },
                Segment::Line {
                    start: Point::new(-half, off),
                    dir: Point::new(-1.0, 0.0),
                    len: exit_len,
                },
            ),
            Intention::Left => (
                Segment::Arc {
                    center: Point::new(half, half),
                    radius: half + off,
                    start_angle: PI,
                    sweep: FRAC_PI_2,
                },
                Segment::Line {
                    start: Point::new(half, -off),
                    dir: Point::new(1.0, 0.0),
                    len: exit_len,
                },
            ),
        };
        let s_entry = approach.length();
        let jl = turn.length();
        Path {
            origin: Branch::North,
            intention,
            exit: intention.exit_branch(Branch::North),
            segments: [approach, turn, exit],
            s_junction_entry: s_entry,
            junction_len: jl,
            total_length: s_entry + jl + exit_len,
        }
    });

    let mut paths = Vec::with_capacity(12);
    let mut current = north_paths.to_vec();
    for _ in 0..4 {
        paths.extend(current.iter().cloned());
        current = current.iter().map(Path::rotated_cw).collect();
    }

    let mut conflicts = vec![None; 144];
    for (i, a) in paths.iter().enumerate() {
        for (j, b) in paths.iter().enumerate() {
            if a.origin != b.origin {
                conflicts[i * 12 + j] = conflict_point(a, b);
            }
        }
    }

    Ok(IntersectionLayout {
        params,
        junction_half_width: half,
        paths,
        conflicts,
    })
}

/// First overlap point along `a` of two paths from distinct branches, found
/// analytically from the junction primitives. Merging paths overlap at the
/// start of the shared exit lane.
pub fn conflict_point(a: &Path, b: &Path) -> Option<ConflictPair> {
    let case = classify_conflict(a.origin, a.intention, b.origin, b.intention)?;
    let sa = a.junction_segment();
    let sb = b.junction_segment();

    let mut candidates: Vec<(f64, f64, Point)> = Vec::new();
    if a.exit == b.exit {
        let p = sa.end();
        candidates.push((a.s_junction_exit(), b.s_junction_exit(), p));
    }
    for p in segment_intersections(sa, sb) {
        if candidates.iter().any(|c| c.2.dist(p) < 1e-6) {
            continue;
        }
        if let (Some(ua), Some(ub)) = (sa.param_of(p), sb.param_of(p)) {
            candidates.push((a.s_junction_entry + ua, b.s_junction_entry + ub, p));
        }
    }
    let (s_a_star, s_b_star, point) = *candidates
        .iter()
        .min_by(|x, y| x.0.total_cmp(&y.0))?;
    let span = |pick: fn(&(f64, f64, Point)) -> f64| {
        candidates
            .iter()
            .map(pick)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s), hi.max(s)))
    };
    Some(ConflictPair {
        case,
        kind: case.kind(),
        s_a_star,
        s_b_star,
        point,
        span_a: span(|c| c.0),
        span_b: span(|c| c.1),
    })
}

fn segment_intersections(a: &Segment, b: &Segment) -> Vec<Point> {
    match (*a, *b) {
        (Segment::Line { start: p, dir: d, .. }, Segment::Line { start: q, dir: e, .. }) => {
            let den = d.cross(e);
            if den.abs() < EPS {
                return Vec::new();
            }
            let t = (q - p).cross(e) / den;
            vec![p + d * t]
        }
        (Segment::Line { start, dir, .. }, Segment::Arc { center, radius, .. })
        | (Segment::Arc { center, radius, .. }, Segment::Line { start, dir, .. }) => {
            line_circle(start, dir, center, radius)
        }
        (
            Segment::Arc {
                center: c1,
                radius: r1,
                ..
            },
            Segment::Arc {
                center: c2,
                radius: r2,
                ..
            },
        ) => circle_circle(c1, r1, c2, r2),
    }
}

fn line_circle(p: Point, d: Point, c: Point, r: f64) -> Vec<Point> {
    let f = p - c;
    let b = f.dot(d);
    let disc = b * b - (f.dot(f) - r * r);
    if disc < -EPS {
        Vec::new()
    } else if disc.abs() <= EPS {
        vec![p + d * (-b)]
    } else {
        let sq = disc.sqrt();
        vec![p + d * (-b - sq), p + d * (-b + sq)]
    }
}

fn circle_circle(c1: Point, r1: f64, c2: Point, r2: f64) -> Vec<Point> {
    let dv = c2 - c1;
    let d = dv.norm();
    if d < EPS || d > r1 + r2 + EPS || d < (r1 - r2).abs() - EPS {
        return Vec::new();
    }
    let a = (r1 * r1 - r2 * r2 + d * d) / (2.0 * d);
    let h2 = r1 * r1 - a * a;
    let base = c1 + dv * (a / d);
    if h2 <= EPS {
        return vec![base];
    }
    let h = h2.sqrt();
    let perp = Point::new(-dv.y, dv.x) * (1.0 / d);
    vec![base + perp * h, base - perp * h]
}
