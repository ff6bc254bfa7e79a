use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rowsim::scenario::{run_scenario, Scenario};
use rowsim::sweep::{run_sweep, write_errors, SweepSpec};
use rowsim::{SimConfig, StrategyKind};

#[derive(Parser)]
#[command(name = "rowsim", version, about = "Intersection coordination simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every strategy, arrival rate and seed combination and write CSV.
    Sweep {
        /// Configuration file (key = value); defaults fill anything missing.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = ["rss".to_string(), "rwa".to_string(), "coop".to_string()])]
        strategies: Vec<String>,
        /// Arrival rates in vehicles per lane and hour.
        #[arg(long, value_delimiter = ',', default_values_t = SweepSpec::DEFAULT_LAMBDAS.to_vec())]
        lambdas: Vec<f64>,
        /// Seeds to run; defaults to 0 through 9.
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Replay a fixed scenario and print the junction entry order.
    Scenario {
        file: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// rss, rwa, coop or all.
        #[arg(long, default_value = "all")]
        strategy: String,
        /// Simulated seconds before giving up.
        #[arg(long, default_value_t = 120.0)]
        limit: f64,
        /// Write the event log of each run to this directory.
        #[arg(long)]
        log_dir: Option<PathBuf>,
    },
    /// Check a configuration file and print it with defaults filled in.
    Validate { file: PathBuf },
}

fn load_config(path: Option<&Path>) -> Result<SimConfig, String> {
    match path {
        None => Ok(SimConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            SimConfig::parse(&text).map_err(|e| format!("{}: {e}", p.display()))
        }
    }
}

fn parse_strategies(names: &[String]) -> Result<Vec<StrategyKind>, String> {
    if names.iter().any(|n| n == "all") {
        return Ok(StrategyKind::ALL.to_vec());
    }
    names
        .iter()
        .filter(|n| !n.trim().is_empty())
        .map(|n| n.parse())
        .collect()
}

fn sweep(
    config: Option<PathBuf>,
    out: PathBuf,
    strategies: Vec<String>,
    lambdas: Vec<f64>,
    seeds: Vec<u64>,
    jobs: Option<usize>,
) -> Result<ExitCode, String> {
    let template = load_config(config.as_deref())?;
    let spec = SweepSpec {
        strategies: parse_strategies(&strategies)?,
        lambdas,
        seeds: if seeds.is_empty() { (0..10).collect() } else { seeds },
        out_dir: out,
        jobs,
    };
    let report = run_sweep(&spec, &template).map_err(|e| e.to_string())?;
    for f in &report.files {
        println!("wrote {}", f.display());
    }
    let collisions = report.collisions();
    if collisions > 0 {
        let _ = write_errors(&report.rows, std::io::stderr());
        eprintln!("{collisions} run(s) ended in a collision");
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

fn scenario(
    file: PathBuf,
    config: Option<PathBuf>,
    strategy: String,
    limit: f64,
    log_dir: Option<PathBuf>,
) -> Result<ExitCode, String> {
    let cfg = load_config(config.as_deref())?;
    let text = fs::read_to_string(&file).map_err(|e| format!("{}: {e}", file.display()))?;
    let scn = Scenario::parse(&text).map_err(|e| format!("{}: {e}", file.display()))?;
    let kinds = parse_strategies(&[strategy])?;
    if let Some(d) = &log_dir {
        fs::create_dir_all(d).map_err(|e| format!("{}: {e}", d.display()))?;
    }
    let mut code = ExitCode::SUCCESS;
    for kind in kinds {
        let run = match run_scenario(&scn, &cfg, kind, limit) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("{kind}: {e}");
                code = ExitCode::FAILURE;
                continue;
            }
        };
        println!("{kind}: {}", run.names().join(", "));
        for e in &run.entries {
            println!("  {:<6} enter {:>7.2} s  clear {:>7.2} s", e.name, e.enter, e.clear);
        }
        let m = &run.outcome.metrics;
        if m.deadlock_events > 0 {
            println!("  deadlock detected");
        }
        let missing = scn.vehicles.len() - run.entries.len();
        if missing > 0 {
            println!("  {missing} vehicle(s) never entered within {limit} s");
        }
        if let Some(d) = &log_dir {
            let path = d.join(format!("{kind}.log"));
            let f = fs::File::create(&path).map_err(|e| format!("{}: {e}", path.display()))?;
            run.outcome
                .log
                .write_to(std::io::BufWriter::new(f))
                .map_err(|e| format!("{}: {e}", path.display()))?;
        }
    }
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sweep {
            config,
            out,
            strategies,
            lambdas,
            seeds,
            jobs,
        } => sweep(config, out, strategies, lambdas, seeds, jobs),
        Command::Scenario {
            file,
            config,
            strategy,
            limit,
            log_dir,
        } => scenario(file, config, strategy, limit, log_dir),
        Command::Validate { file } => load_config(Some(&file)).map(|cfg| {
            print!("{}", cfg.to_text());
            ExitCode::SUCCESS
        }),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(2)
    })
}
