use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, ValueEnum};

mod commands;
mod config;
mod output;
mod preset;

use output::{Report, Status};

const CONFIG_ERROR: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Tables of K, K1 and K_x with the Laplace-transform check.
    KernelEval,
    /// Tables of theta, theta_x and G against the eigenfunction series.
    GreenEval,
    /// Integral solution of the linear Dirichlet problem.
    SolveLinear,
    /// Junction phase through the weighted nonlinear problem.
    SolveEsjj,
    /// Steady profiles, kernel limits and decay against the a-priori bound.
    Asymptotics,
    /// The full check suite.
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::KernelEval => "kernel-eval",
            Command::GreenEval => "green-eval",
            Command::SolveLinear => "solve-linear",
            Command::SolveEsjj => "solve-esjj",
            Command::Asymptotics => "asymptotics",
            Command::Validate => "validate",
        }
    }
}

/// Run a memkernel experiment described by a TOML config.
///
/// Exit codes: 0 success, 1 a check failed, 2 configuration error (nothing is
/// written), 3 numerical failure.
#[derive(Debug, Parser)]
#[command(name = "memkernel", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    #[arg(long)]
    config: PathBuf,
    /// Directory receiving the CSV tables and report.json.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads; overrides the config, defaults to all cores.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    ExitCode::from(run(&cli))
}

fn run(cli: &Cli) -> u8 {
    let cfg = match config::load(&cli.config).and_then(|c| c.validate_for(cli.command).map(|_| c)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return CONFIG_ERROR;
        }
    };
    if let Some(n) = cli.threads.map(|n| n as usize).or(cfg.threads) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("config error: cannot start {n} threads: {e}");
            return CONFIG_ERROR;
        }
    }
    if let Err(e) = std::fs::create_dir_all(&cli.out) {
        eprintln!("config error: cannot create {}: {e}", cli.out.display());
        return CONFIG_ERROR;
    }

    let start = Instant::now();
    let (status, outcome, error) = match commands::run(cli.command, &cfg) {
        Ok(o) => {
            let status = if o.checks.iter().all(|c| c.passed) { Status::Success } else { Status::ValidationFailure };
            (status, o, None)
        }
        Err(e) => (Status::NumericalFailure, commands::Outcome::default(), Some(e.to_string())),
    };
    for t in &outcome.tables {
        if let Err(e) = t.write(&cli.out) {
            eprintln!("error: {e:#}");
            return Status::NumericalFailure.exit_code() as u8;
        }
    }
    for c in &outcome.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if let Some(e) = &error {
        eprintln!("numerical failure: {e}");
    }

    let report = Report {
        command: cli.command.name(),
        version: env!("CARGO_PKG_VERSION"),
        config: cli.config.display().to_string(),
        status,
        exit_code: status.exit_code(),
        seed: cfg.seed,
        threads: rayon::current_num_threads(),
        parameters: serde_json::to_value(&cfg).unwrap_or_default(),
        tolerances: serde_json::to_value(cfg.tolerances).unwrap_or_default(),
        checks: outcome.checks,
        outputs: outcome.tables.iter().map(|t| t.file.clone()).collect(),
        error,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    if let Err(e) = report.write(&cli.out) {
        eprintln!("error: {e:#}");
        return Status::NumericalFailure.exit_code() as u8;
    }
    println!("{} -> {}", report.command, cli.out.join("report.json").display());
    status.exit_code() as u8
}
