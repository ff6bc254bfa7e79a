//! Batches of independent runs over strategies, arrival rates and seeds,
//! written as CSV.
//!
//! `metrics.csv` holds one row per run. `delay.csv` and `throughput.csv`
//! hold mean and sample standard deviation per strategy and arrival rate.

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::SimConfig;
use crate::engine::simulate;
use crate::error::{SimError, SweepError};
use crate::metrics::{mean, std_dev};
use crate::strategy::StrategyKind;

pub const METRICS_FILE: &str = "metrics.csv";
pub const DELAY_FILE: &str = "delay.csv";
pub const THROUGHPUT_FILE: &str = "throughput.csv";

pub const METRICS_HEADER: [&str; 10] = [
    "strategy",
    "lambda",
    "seed",
    "avg_delay_s",
    "throughput",
    "ideal_throughput",
    "messages_total",
    "messages_per_vehicle",
    "deadlock_ties",
    "collisions",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub strategies: Vec<StrategyKind>,
    pub lambdas: Vec<f64>,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    /// Worker threads; `None` uses every core.
    pub jobs: Option<usize>,
}

impl SweepSpec {
    pub const DEFAULT_LAMBDAS: [f64; 5] = [100.0, 200.0, 400.0, 600.0, 800.0];

    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        SweepSpec {
            strategies: StrategyKind::ALL.to_vec(),
            lambdas: Self::DEFAULT_LAMBDAS.to_vec(),
            seeds: (0..10).collect(),
            out_dir: out_dir.into(),
            jobs: None,
        }
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        if self.strategies.is_empty() {
            return Err(SweepError::NoStrategies);
        }
        if self.lambdas.is_empty() {
            return Err(SweepError::NoLambdas);
        }
        if self.seeds.is_empty() {
            return Err(SweepError::NoSeeds);
        }
        Ok(())
    }

    /// Every (strategy, lambda, seed) in output order.
    pub fn runs(&self) -> Vec<(StrategyKind, f64, u64)> {
        let mut out = Vec::new();
        for &k in &self.strategies {
            for &l in &self.lambdas {
                for &s in &self.seeds {
                    out.push((k, l, s));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub strategy: StrategyKind,
    pub lambda: f64,
    pub seed: u64,
    pub avg_delay_s: f64,
    pub throughput: usize,
    pub ideal_throughput: usize,
    pub messages_total: u64,
    pub messages_per_vehicle: f64,
    pub deadlock_ties: u64,
    pub collisions: u64,
    /// Diagnostic of an aborted run.
    pub error: Option<String>,
}

impl SweepRow {
    fn record(&self) -> [String; 10] {
        [
            self.strategy.to_string(),
            self.lambda.to_string(),
            self.seed.to_string(),
            format!("{:.4}", self.avg_delay_s),
            self.throughput.to_string(),
            self.ideal_throughput.to_string(),
            self.messages_total.to_string(),
            format!("{:.4}", self.messages_per_vehicle),
            self.deadlock_ties.to_string(),
            self.collisions.to_string(),
        ]
    }
}

/// Runs one sweep cell. A collision aborts the run and is reported in the
/// row instead of the metrics.
pub fn run_one(template: &SimConfig, strategy: StrategyKind, lambda: f64, seed: u64) -> SweepRow {
    let mut cfg = template.clone();
    cfg.lambda = lambda;
    cfg.seed = seed;
    let mut row = SweepRow {
        strategy,
        lambda,
        seed,
        avg_delay_s: f64::NAN,
        throughput: 0,
        ideal_throughput: 0,
        messages_total: 0,
        messages_per_vehicle: f64::NAN,
        deadlock_ties: 0,
        collisions: 0,
        error: None,
    };
    match simulate(&cfg, strategy) {
        Ok(o) => {
            let m = o.metrics;
            row.avg_delay_s = m.average_delay;
            row.throughput = m.throughput;
            row.ideal_throughput = m.ideal_throughput;
            row.messages_total = m.messages_total;
            row.messages_per_vehicle = m.messages_per_vehicle;
            row.deadlock_ties = m.deadlock_tie_events;
            row.collisions = m.collision_events;
        }
        Err(e) => {
            if matches!(e, SimError::Collision { .. }) {
                row.collisions = 1;
            }
            row.error = Some(e.to_string());
        }
    }
    row
}

/// Mean and sample standard deviation of one quantity for one strategy and
/// arrival rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub strategy: StrategyKind,
    pub lambda: f64,
    pub runs: usize,
    pub mean: f64,
    pub sd: f64,
}

pub fn aggregate(rows: &[SweepRow], value: impl Fn(&SweepRow) -> f64) -> Vec<Aggregate> {
    let mut keys: Vec<(StrategyKind, f64)> = Vec::new();
    for r in rows {
        if !keys.contains(&(r.strategy, r.lambda)) {
            keys.push((r.strategy, r.lambda));
        }
    }
    keys.into_iter()
        .map(|(strategy, lambda)| {
            let xs: Vec<f64> = rows
                .iter()
                .filter(|r| r.strategy == strategy && r.lambda == lambda && r.error.is_none())
                .map(&value)
                .collect();
            Aggregate {
                strategy,
                lambda,
                runs: xs.len(),
                mean: mean(&xs).unwrap_or(f64::NAN),
                sd: std_dev(&xs),
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub files: Vec<PathBuf>,
}

impl SweepReport {
    pub fn collisions(&self) -> u64 {
        self.rows.iter().map(|r| r.collisions).sum()
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SweepError + '_ {
    move |source| SweepError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_aggregate(path: &Path, name: &str, aggs: &[Aggregate]) -> Result<(), SweepError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["strategy", "lambda", "runs", &format!("mean_{name}"), &format!("sd_{name}")])?;
    for a in aggs {
        w.write_record([
            a.strategy.to_string(),
            a.lambda.to_string(),
            a.runs.to_string(),
            format!("{:.4}", a.mean),
            format!("{:.4}", a.sd),
        ])?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Runs the sweep and writes its files. Runs are dispatched in batches of
/// one per worker; each finished batch is appended to `metrics.csv` in
/// sweep order, so an interrupted sweep leaves only whole rows behind.
pub fn run_sweep(spec: &SweepSpec, template: &SimConfig) -> Result<SweepReport, SweepError> {
    spec.validate()?;
    template.validate()?;
    fs::create_dir_all(&spec.out_dir).map_err(io_err(&spec.out_dir))?;
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(j) = spec.jobs {
            b = b.num_threads(j.max(1));
        }
        b.build().expect("thread pool")
    };
    let metrics_path = spec.out_dir.join(METRICS_FILE);
    let file = File::create(&metrics_path).map_err(io_err(&metrics_path))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(METRICS_HEADER)?;
    w.flush().map_err(io_err(&metrics_path))?;

    let runs = spec.runs();
    let batch = pool.current_num_threads().max(1);
    let mut rows = Vec::with_capacity(runs.len());
    for chunk in runs.chunks(batch) {
        let done: Vec<SweepRow> = pool.install(|| {
            chunk
                .par_iter()
                .map(|&(k, l, s)| run_one(template, k, l, s))
                .collect()
        });
        for r in &done {
            w.write_record(r.record())?;
        }
        w.flush().map_err(io_err(&metrics_path))?;
        rows.extend(done);
    }
    drop(w);

    let delay_path = spec.out_dir.join(DELAY_FILE);
    write_aggregate(&delay_path, "delay_s", &aggregate(&rows, |r| r.avg_delay_s))?;
    let thr_path = spec.out_dir.join(THROUGHPUT_FILE);
    write_throughput(&thr_path, &rows)?;
    Ok(SweepReport {
        rows,
        files: vec![metrics_path, delay_path, thr_path],
    })
}

fn write_throughput(path: &Path, rows: &[SweepRow]) -> Result<(), SweepError> {
    let thr = aggregate(rows, |r| r.throughput as f64);
    let ideal = aggregate(rows, |r| r.ideal_throughput as f64);
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "strategy",
        "lambda",
        "runs",
        "mean_throughput",
        "sd_throughput",
        "mean_ideal_throughput",
        "sd_ideal_throughput",
    ])?;
    for (t, i) in thr.iter().zip(&ideal) {
        w.write_record([
            t.strategy.to_string(),
            t.lambda.to_string(),
            t.runs.to_string(),
            format!("{:.4}", t.mean),
            format!("{:.4}", t.sd),
            format!("{:.4}", i.mean),
            format!("{:.4}", i.sd),
        ])?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Writes every row's diagnostics for aborted runs to `out`.
pub fn write_errors(rows: &[SweepRow], mut out: impl Write) -> std::io::Result<()> {
    for r in rows {
        if let Some(e) = &r.error {
            writeln!(out, "{} lambda={} seed={}: {e}", r.strategy, r.lambda, r.seed)?;
        }
    }
    Ok(())
}
