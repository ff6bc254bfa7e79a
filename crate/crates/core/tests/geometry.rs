use rowsim::geometry::{build_layout, classify_conflict, map_virtual, LayoutParams, Point};
use rowsim::{Branch, ConflictCase, Intention, IntersectionLayout, Path};

const STEP: f64 = 0.01;

fn layout() -> IntersectionLayout {
    build_layout(LayoutParams::default()).unwrap()
}

fn samples(p: &Path) -> Vec<(f64, Point)> {
    let n = (p.junction_len / STEP).ceil() as usize;
    (0..=n)
        .map(|i| {
            let s = p.s_junction_entry + (i as f64 * STEP).min(p.junction_len);
            (s, p.point_at(s))
        })
        .collect()
}

/// Brute-force overlap points of two junction segments: local minima of the
/// sampled point-to-path distance that come within two samples of zero.
/// Returns (s on a, s on b) for each, in order along `a`.
fn sampled_overlaps(a: &Path, b: &Path) -> Vec<(f64, f64)> {
    let sa = samples(a);
    let sb = samples(b);
    let nearest: Vec<(f64, f64)> = sa
        .iter()
        .map(|(_, p)| {
            sb.iter()
                .map(|(s, q)| (p.dist(*q), *s))
                .min_by(|x, y| x.0.total_cmp(&y.0))
                .unwrap()
        })
        .collect();
    let mut out = Vec::new();
    for i in 0..nearest.len() {
        let d = nearest[i].0;
        let left = if i > 0 { nearest[i - 1].0 } else { f64::INFINITY };
        let right = nearest.get(i + 1).map_or(f64::INFINITY, |x| x.0);
        if d < 2.0 * STEP && d <= left && d <= right {
            out.push((sa[i].0, nearest[i].1));
        }
    }
    out
}

fn all_movements() -> Vec<(Branch, Intention)> {
    Branch::ALL
        .iter()
        .flat_map(|&b| Intention::ALL.iter().map(move |&i| (b, i)))
        .collect()
}

#[test]
fn twelve_paths_with_expected_lengths() {
    let l = layout();
    assert_eq!(l.paths().len(), 12);
    for p in l.paths() {
        assert!((p.s_junction_entry - 197.0).abs() < 1e-9);
        let expected = match p.intention {
            Intention::Straight => 6.0,
            Intention::Right => std::f64::consts::FRAC_PI_2 * 1.5,
            Intention::Left => std::f64::consts::FRAC_PI_2 * 4.5,
        };
        assert!((p.junction_len - expected).abs() < 1e-9, "{p:?}");
        assert!((p.total_length - (197.0 + expected + 97.0)).abs() < 1e-9);
        // Entry and exit points lie on the junction boundary.
        let entry = p.point_at(p.s_junction_entry);
        let exit = p.point_at(p.s_junction_exit());
        for q in [entry, exit] {
            assert!((q.x.abs().max(q.y.abs()) - 3.0).abs() < 1e-9, "{q:?}");
        }
    }
}

#[test]
fn conflict_points_match_brute_force_sampling() {
    let l = layout();
    let mut checked = 0;
    for (oa, ia) in all_movements() {
        for (ob, ib) in all_movements() {
            if oa == ob {
                continue;
            }
            let (a, b) = (l.path(oa, ia), l.path(ob, ib));
            let found = sampled_overlaps(a, b);
            match l.conflict(oa, ia, ob, ib) {
                None => assert!(found.is_empty(), "{oa:?}{ia:?} vs {ob:?}{ib:?}: {found:?}"),
                Some(c) => {
                    assert!(!found.is_empty(), "{oa:?}{ia:?} vs {ob:?}{ib:?}");
                    let (first_a, first_b) = found[0];
                    assert!((c.s_a_star - first_a).abs() <= 0.05, "{c:?} vs {found:?}");
                    assert!((c.s_b_star - first_b).abs() <= 0.05, "{c:?} vs {found:?}");
                    let last_a = found.last().unwrap().0;
                    assert!((c.span_a.0 - first_a).abs() <= 0.05);
                    assert!((c.span_a.1 - last_a).abs() <= 0.05);
                    assert!((a.point_at(c.s_a_star).dist(c.point)) < 1e-6);
                    assert!((b.point_at(c.s_b_star).dist(c.point)) < 1e-6);
                    checked += 1;
                }
            }
        }
    }
    assert!(checked > 0);
}

#[test]
fn merges_meet_at_the_shared_exit() {
    let l = layout();
    for (oa, ia) in all_movements() {
        for (ob, ib) in all_movements() {
            let Some(c) = (oa != ob).then(|| l.conflict(oa, ia, ob, ib)).flatten() else {
                continue;
            };
            let same_exit = ia.exit_branch(oa) == ib.exit_branch(ob);
            assert_eq!(same_exit, c.case.kind() == rowsim::geometry::ConflictKind::Merge);
        }
    }
}

#[test]
fn table_is_symmetric() {
    let l = layout();
    for (oa, ia) in all_movements() {
        for (ob, ib) in all_movements() {
            if oa == ob {
                continue;
            }
            let ab = l.conflict(oa, ia, ob, ib);
            let ba = l.conflict(ob, ib, oa, ia);
            assert_eq!(ab.is_some(), ba.is_some());
            if let (Some(ab), Some(ba)) = (ab, ba) {
                // Stars are first along each viewer's own path; the spans
                // cover both crossings and must agree.
                let sw = ba.swapped();
                assert_eq!(ab.case, ba.case);
                for (x, y) in [(ab.span_a, sw.span_a), (ab.span_b, sw.span_b)] {
                    assert!((x.0 - y.0).abs() < 1e-9 && (x.1 - y.1).abs() < 1e-9);
                }
            }
        }
    }
}

#[test]
fn table_is_rotation_invariant() {
    let l = layout();
    for (oa, ia) in all_movements() {
        for (ob, ib) in all_movements() {
            if oa == ob {
                continue;
            }
            let base = l.conflict(oa, ia, ob, ib).copied();
            for q in 1..4 {
                let r = l.conflict(oa.rotate(q), ia, ob.rotate(q), ib).copied();
                assert_eq!(base.map(|c| c.case), r.map(|c| c.case));
                if let (Some(x), Some(y)) = (base, r) {
                    assert!((x.s_a_star - y.s_a_star).abs() < 1e-9);
                    assert!((x.s_b_star - y.s_b_star).abs() < 1e-9);
                }
            }
        }
    }
}

#[test]
fn every_case_occurs() {
    let mut seen = std::collections::HashSet::new();
    for (oa, ia) in all_movements() {
        for (ob, ib) in all_movements() {
            if let Some(c) = classify_conflict(oa, ia, ob, ib) {
                seen.insert(c);
            }
        }
    }
    use ConflictCase::*;
    for c in [A, B, C, D, E, F, G] {
        assert!(seen.contains(&c), "{c:?}");
    }
}

#[test]
fn virtual_image_keeps_distance_to_overlap() {
    assert_eq!(map_virtual(190.0, 200.0, 205.0), 185.0);
    assert_eq!(map_virtual(205.0, 200.0, 205.0), 200.0);
    let l = layout();
    let c = l
        .conflict(Branch::North, Intention::Straight, Branch::East, Intention::Straight)
        .unwrap();
    for pos in [150.0, 190.0, 199.0] {
        let img = c.map_virtual(pos);
        assert!(((c.s_a_star - img) - (c.s_b_star - pos)).abs() < 1e-12);
    }
}
