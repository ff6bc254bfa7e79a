use rowsim::engine::simulate_logged;
use rowsim::scenario::{run_scenario, Scenario};
use rowsim::{simulate, ConfigError, SimConfig, StrategyKind};

fn short(lambda: f64, seed: u64, duration: f64) -> SimConfig {
    SimConfig {
        lambda,
        seed,
        duration,
        ..SimConfig::default()
    }
}

#[test]
fn no_demand_no_traffic() {
    for k in StrategyKind::ALL {
        let m = simulate(&short(0.0, 0, 300.0), k).unwrap().metrics;
        assert_eq!(m.throughput, 0);
        assert_eq!(m.injected, 0);
        assert_eq!(m.average_delay, 0.0);
        assert_eq!(m.messages_total, 0);
        assert_eq!(m.messages_per_vehicle, 0.0);
    }
}

#[test]
fn lone_vehicles_are_not_delayed() {
    let cfg = SimConfig::default();
    for i in ["straight", "left", "right"] {
        let sc = Scenario::parse(&format!("X 7 {i} s=0 v=10")).unwrap();
        for k in StrategyKind::ALL {
            let run = run_scenario(&sc, &cfg, k, 120.0).unwrap();
            let d = &run.outcome.metrics.delays;
            assert_eq!(d.len(), 1);
            assert!(d[0].completed);
            assert!(d[0].delay.abs() <= cfg.dt + 1e-9, "{k} {i}: {}", d[0].delay);
        }
    }
}

#[test]
fn busy_runs_stay_collision_free() {
    for k in StrategyKind::ALL {
        for seed in [3, 4] {
            let m = simulate(&short(800.0, seed, 300.0), k).unwrap().metrics;
            assert_eq!(m.collision_events, 0, "{k} seed {seed}");
            assert_eq!(m.rear_end_violations, 0, "{k} seed {seed}");
            assert!(m.throughput > 0);
        }
    }
}

#[test]
fn delay_never_negative_beyond_a_step() {
    for k in StrategyKind::ALL {
        let cfg = short(400.0, 6, 400.0);
        let m = simulate(&cfg, k).unwrap().metrics;
        for r in m.delays.iter().filter(|r| r.completed) {
            assert!(r.delay >= -cfg.dt - 1e-9, "{k}: {r:?}");
        }
        assert!(m.throughput <= m.injected);
    }
}

#[test]
fn same_seed_same_run() {
    for k in StrategyKind::ALL {
        let cfg = short(600.0, 9, 240.0);
        let a = simulate_logged(&cfg, k).unwrap();
        let b = simulate_logged(&cfg, k).unwrap();
        assert_eq!(a.metrics, b.metrics, "{k}");
        assert_eq!(a.log.to_text(), b.log.to_text(), "{k}");
        assert!(!a.log.events().is_empty());
        let c = simulate(&SimConfig { seed: 10, ..cfg.clone() }, k).unwrap();
        assert_ne!(a.metrics.delays, c.metrics.delays, "{k}");
    }
}

#[test]
fn config_parsing() {
    assert_eq!(SimConfig::parse("").unwrap(), SimConfig::default());
    assert_eq!(SimConfig::parse("# only a comment\n\n").unwrap(), SimConfig::default());
    let cfg = SimConfig::parse("lambda = 250\nseed = 4\nrss_tie_break = false\n").unwrap();
    assert_eq!(cfg.lambda, 250.0);
    assert_eq!(cfg.seed, 4);
    assert!(!cfg.rss_tie_break);
    assert!(matches!(
        SimConfig::parse("dt = -1"),
        Err(ConfigError::OutOfRange { key: "dt", .. })
    ));
    assert!(matches!(
        SimConfig::parse("accept_probability = 1.5"),
        Err(ConfigError::OutOfRange { key: "accept_probability", .. })
    ));
    assert!(matches!(
        SimConfig::parse("lamda = 3"),
        Err(ConfigError::UnknownKey { line: 1, .. })
    ));
    let round = SimConfig::parse(&cfg.to_text()).unwrap();
    assert_eq!(round, cfg);
}
