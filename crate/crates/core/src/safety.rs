//! Forbidden / Negotiation / Free partition around a priority vehicle and
//! the longitudinal safe-following gap.
//!
//! Throughout, `A` is the vehicle holding the right-of-way and `B` the other
//! vehicle (or its virtual image on A's path). All lengths are
//! bumper-to-bumper.

use crate::scalar::Scalar;

/// Response time and braking capabilities of the priority vehicle (`a_*`)
/// and the other vehicle (`b_*`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrakeParams<T> {
    pub rho: T,
    pub a_max_brake: T,
    pub a_min_brake: T,
    pub b_max_brake: T,
    pub b_min_brake: T,
}

impl<T: Scalar> Default for BrakeParams<T> {
    /// ρ = 1 s, maximum braking 6 m/s², minimum braking 2 m/s² for both.
    fn default() -> Self {
        Self {
            rho: T::lit(1.0),
            a_max_brake: T::lit(6.0),
            a_min_brake: T::lit(2.0),
            b_max_brake: T::lit(6.0),
            b_min_brake: T::lit(2.0),
        }
    }
}

impl<T: Scalar> BrakeParams<T> {
    pub fn is_valid(&self) -> bool {
        let z = T::zero();
        self.rho >= z
            && self.a_min_brake > z
            && self.a_min_brake <= self.a_max_brake
            && self.b_min_brake > z
            && self.b_min_brake <= self.b_max_brake
    }
}

fn stop_dist<T: Scalar>(v: T, decel: T) -> T {
    v * v / (T::two() * decel)
}

/// Forbidden Area length behind A when both share a drive intention:
/// `[v_b ρ + v_b²/2b_max − v_a²/2a_max]⁺`.
pub fn forbidden_same_intention<T: Scalar>(v_a: T, v_b: T, p: &BrakeParams<T>) -> T {
    (v_b * p.rho + stop_dist(v_b, p.b_max_brake) - stop_dist(v_a, p.a_max_brake)).positive_part()
}

/// Forbidden Area length behind A for differing intentions:
/// `[v_b²/2b_min − v_a²/2a_max]⁺`. There is no response-time term.
pub fn forbidden_rear<T: Scalar>(v_a: T, v_b: T, p: &BrakeParams<T>) -> T {
    (stop_dist(v_b, p.b_min_brake) - stop_dist(v_a, p.a_max_brake)).positive_part()
}

/// Distance from A's front bumper to the Free Area ahead of it:
/// `[v_a ρ + v_a²/2a_min − v_b²/2b_max]⁺`.
pub fn free_boundary_front<T: Scalar>(v_a: T, v_b: T, p: &BrakeParams<T>) -> T {
    (v_a * p.rho + stop_dist(v_a, p.a_min_brake) - stop_dist(v_b, p.b_max_brake)).positive_part()
}

/// Inner edge of the Negotiation Area: the same expression as the free
/// boundary but with A braking at its maximum rate.
fn forbidden_front<T: Scalar>(v_a: T, v_b: T, p: &BrakeParams<T>) -> T {
    (v_a * p.rho + stop_dist(v_a, p.a_max_brake) - stop_dist(v_b, p.b_max_brake)).positive_part()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZoneLengths<T> {
    pub f_rear: T,
    pub f_front: T,
    pub n_front: T,
    free_boundary: T,
}

impl<T: Scalar> ZoneLengths<T> {
    /// Distance from A's front bumper to the Free Area (`f_front + n_front`).
    pub fn free_boundary(&self) -> T {
        self.free_boundary
    }
}

pub fn zone_partition<T: Scalar>(v_a: T, v_b: T, p: &BrakeParams<T>) -> ZoneLengths<T> {
    let free_boundary = free_boundary_front(v_a, v_b, p);
    // a_max >= a_min keeps the inner edge inside the boundary; min() guards
    // against rounding.
    let f_front = forbidden_front(v_a, v_b, p).min(free_boundary);
    ZoneLengths {
        f_rear: forbidden_rear(v_a, v_b, p),
        f_front,
        n_front: free_boundary - f_front,
        free_boundary,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Zone {
    Forbidden,
    Negotiation,
    Free,
}

/// Zone of B's virtual image `B'` relative to A, both given as front-bumper
/// positions on A's path.
pub fn classify_zone<T: Scalar>(
    virtual_front_b: T,
    len_b: T,
    front_a: T,
    len_a: T,
    zones: &ZoneLengths<T>,
) -> Zone {
    let ahead = (virtual_front_b - len_b) - front_a;
    let behind = (front_a - len_a) - virtual_front_b;
    if ahead >= T::zero() {
        if ahead < zones.f_front {
            Zone::Forbidden
        } else if ahead < zones.free_boundary {
            Zone::Negotiation
        } else {
            Zone::Free
        }
    } else if behind >= T::zero() {
        if behind < zones.f_rear {
            Zone::Forbidden
        } else {
            Zone::Free
        }
    } else {
        // Bodies overlap.
        Zone::Forbidden
    }
}

/// Minimum bumper-to-bumper gap a follower keeps to its leader.
pub fn safe_follow_gap<T: Scalar>(v_follower: T, v_leader: T, p: &BrakeParams<T>) -> T {
    forbidden_same_intention(v_leader, v_follower, p)
}
