use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rowsim::control::free_flow_time;
use rowsim::geometry::build_layout;
use rowsim::strategy::rwa::{rwa_negotiate, Reply};
use rowsim::traffic::{form_platoons, gen_arrivals, kinematic_step, platoon_gap_threshold, QueueEntry};
use rowsim::{Branch, Intention, Kinematics64, SimConfig};

#[test]
fn poisson_count_matches_rate() {
    let cfg = SimConfig::default();
    // 400 veh/h over 10 h per lane and seed: mean 4000, sd about 63.
    let mut total = 0usize;
    let runs = 20;
    for seed in 0..runs {
        total += gen_arrivals(400.0, 36_000.0, seed, Branch::South, &cfg.intention_ratio).len();
    }
    let mean = total as f64 / runs as f64;
    let sd_of_mean = (4000.0f64).sqrt() / (runs as f64).sqrt();
    assert!((mean - 4000.0).abs() < 3.0 * sd_of_mean, "{mean}");
}

#[test]
fn interarrival_gaps_are_exponential() {
    let cfg = SimConfig::default();
    let a = gen_arrivals(600.0, 360_000.0, 3, Branch::West, &cfg.intention_ratio);
    let gaps: Vec<f64> = a.windows(2).map(|w| w[1].time - w[0].time).collect();
    let n = gaps.len() as f64;
    let mean = gaps.iter().sum::<f64>() / n;
    assert!((mean - 6.0).abs() < 0.1, "{mean}");
    // Memorylessness: P(gap > 6) = e^-1.
    let tail = gaps.iter().filter(|&&g| g > 6.0).count() as f64 / n;
    assert!((tail - (-1.0f64).exp()).abs() < 0.01, "{tail}");
}

#[test]
fn intention_mix_is_three_three_four() {
    let cfg = SimConfig::default();
    let mut counts = [0usize; 3];
    let mut n = 0;
    for lane in Branch::ALL {
        for e in gen_arrivals(800.0, 36_000.0, 11, lane, &cfg.intention_ratio) {
            counts[e.intention.index()] += 1;
            n += 1;
        }
    }
    let n = n as f64;
    let share = |i: Intention| counts[i.index()] as f64 / n;
    for (i, p) in [(Intention::Left, 0.3), (Intention::Right, 0.3), (Intention::Straight, 0.4)] {
        let sd = (p * (1.0 - p) / n).sqrt();
        assert!((share(i) - p).abs() < 4.0 * sd, "{i:?} {}", share(i));
    }
}

#[test]
fn lanes_are_independent_streams() {
    let cfg = SimConfig::default();
    let a = gen_arrivals(400.0, 1200.0, 5, Branch::North, &cfg.intention_ratio);
    let b = gen_arrivals(400.0, 1200.0, 5, Branch::East, &cfg.intention_ratio);
    assert_ne!(a.iter().map(|e| e.time).collect::<Vec<_>>(), b.iter().map(|e| e.time).collect::<Vec<_>>());
    assert!(a.iter().all(|e| e.lane == Branch::North));
}

#[test]
fn kinematic_step_examples() {
    let k = kinematic_step(Kinematics64 { s: 0.0, v: 0.0 }, 2.0, 0.1, 10.0);
    assert!((k.v - 0.2).abs() < 1e-12 && (k.s - 0.01).abs() < 1e-12);
    let k = kinematic_step(Kinematics64 { s: 10.0, v: 1.0 }, -6.0, 0.5, 10.0);
    assert_eq!(k.v, 0.0);
    assert!((k.s - 10.25).abs() < 1e-12);
    let k = kinematic_step(Kinematics64 { s: 0.0, v: 9.9 }, 2.0, 0.1, 10.0);
    assert_eq!(k.v, 10.0);
}

proptest! {
    #[test]
    fn kinematic_step_stays_in_bounds(
        s in -10.0..300.0f64, v in 0.0..15.0f64, a in -8.0..3.0f64, limit in 0.0..15.0f64,
    ) {
        let k = kinematic_step(Kinematics64 { s, v }, a, 0.1, limit);
        prop_assert!(k.v >= 0.0 && k.v <= limit);
        prop_assert!(k.s >= s);
    }

    #[test]
    fn platoon_ids_are_contiguous(
        spacing in proptest::collection::vec((0usize..3, 4.0..60.0f64), 1..12),
    ) {
        let cfg = SimConfig::default();
        let mut s = 190.0;
        let queue: Vec<QueueEntry> = spacing
            .iter()
            .map(|&(i, gap)| {
                s -= gap;
                QueueEntry { intention: Intention::ALL[i], s, v: 5.0, length: 3.5 }
            })
            .collect();
        let ids = form_platoons(&queue, &cfg.brake, cfg.standstill_gap);
        prop_assert_eq!(ids[0], 0);
        for w in 1..ids.len() {
            let step = ids[w] - ids[w - 1];
            prop_assert!(step <= 1);
            if step == 0 {
                prop_assert_eq!(queue[w].intention, queue[w - 1].intention);
            }
        }
    }
}

#[test]
fn platoon_threshold_includes_standstill_gap() {
    let cfg = SimConfig::default();
    // Twice (safe gap 10 m at 10 m/s + 1 m).
    assert!((platoon_gap_threshold(10.0, 10.0, &cfg.brake, 1.0) - 22.0).abs() < 1e-12);
    assert!((platoon_gap_threshold(0.0, 0.0, &cfg.brake, 1.0) - 2.0).abs() < 1e-12);
}

#[test]
fn free_flow_times_match_piecewise_profile() {
    let cfg = SimConfig::default();
    let layout = build_layout(cfg.layout).unwrap();
    let (v, w, a) = (cfg.speeds.straight, cfg.speeds.turn, cfg.a_comfort);
    let ramp_d = (v * v - w * w) / (2.0 * a);
    let ramp_t = (v - w) / a;
    for i in Intention::ALL {
        let p = layout.path(Branch::East, i);
        let expected = if i.is_turn() {
            (p.s_junction_entry - ramp_d) / v
                + ramp_t
                + p.junction_len / w
                + ramp_t
                + (p.total_length - p.s_junction_exit() - ramp_d) / v
        } else {
            p.total_length / v
        };
        let t = free_flow_time(p, &cfg);
        assert!((t - expected).abs() <= 3.0 * cfg.dt, "{i:?}: {t} vs {expected}");
    }
}

#[test]
fn half_acceptance_rate() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let n = 100_000;
    let acc = (0..n).filter(|_| rwa_negotiate(&mut rng, 0.5) == Reply::Accept).count() as f64;
    let sigma = (0.25 / n as f64).sqrt();
    assert!((acc / n as f64 - 0.5).abs() < 3.0 * sigma);
}
