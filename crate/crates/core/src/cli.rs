//! `proactive simulate | sweep | analyze`.
//!
//! Exit status is 0 on success, 2 for configuration problems and 1 for
//! failures while running.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::RawConfig;
use crate::harness::{
    analytic_report, analytic_sweep, export_csv, run_sweep_with, write_csv, Execution,
    ExperimentConfig, SweepResult,
};

/// Caps the number of simulation threads.
pub const WORKERS_ENV: &str = "PROACTIVE_WORKERS";

pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "proactive", version, about = "Outage simulation and bounds for proactive resource allocation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every grid capacity and print per-capacity summary statistics.
    Simulate(CommonArgs),
    /// Run the capacity grid and write CSV.
    Sweep(CommonArgs),
    /// Evaluate closed forms only; nothing is simulated.
    Analyze(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Configuration file; may be omitted when `--set` supplies every key.
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub runs: Option<u64>,
    #[arg(long)]
    pub slots: Option<u64>,
    /// Output path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Extra `key=value` overrides, applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Execute runs on the calling thread only.
    #[arg(long)]
    pub serial: bool,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => EXIT_CONFIG,
            Self::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Config(m) => write!(f, "configuration error: {m}"),
            Self::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

fn load(args: &CommonArgs) -> Result<ExperimentConfig, CliError> {
    let config = |e: &dyn std::fmt::Display| CliError::Config(e.to_string());
    let source = match &args.config {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?,
        None => String::new(),
    };
    let mut raw = RawConfig::parse(&source).map_err(|e| config(&e))?;
    for pair in &args.overrides {
        raw.apply_override(pair).map_err(|e| config(&e))?;
    }
    let flags = [("seed", args.seed), ("runs", args.runs), ("slots", args.slots)];
    for (key, value) in flags {
        if let Some(v) = value {
            raw.set(key, v.to_string()).map_err(|e| config(&e))?;
        }
    }
    raw.into_experiment().map_err(|e| config(&e))
}

/// Reads the worker cap from the environment.
pub fn workers_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Config(format!("{WORKERS_ENV} must be a positive integer, got `{v}`"))),
        },
    }
}

fn emit_csv(result: &SweepResult, out: &Option<PathBuf>) -> Result<(), CliError> {
    match out {
        Some(path) => export_csv(result, path).map_err(|e| CliError::Runtime(e.to_string())),
        None => write_csv(result, std::io::stdout().lock()).map_err(|e| CliError::Runtime(e.to_string())),
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:e}")).unwrap_or_else(|| "n/a".into())
}

fn print_summary(result: &SweepResult) -> std::io::Result<()> {
    let mut out = std::io::stdout().lock();
    for row in &result.rows {
        writeln!(out, "capacity = {}", row.capacity)?;
        if let Some(p) = row.primary {
            writeln!(out, "measured_slots = {}", p.measured_slots)?;
            writeln!(out, "outage_slots = {}", p.outage_slots)?;
            writeln!(out, "outage_probability = {:e}", p.p_hat)?;
            writeln!(out, "ci95 = [{:e}, {:e}]", p.ci_low, p.ci_high)?;
        }
        if let Some(s) = row.secondary {
            writeln!(out, "secondary_outage_slots = {}", s.outage_slots)?;
            writeln!(out, "secondary_outage_probability = {:e}", s.p_hat)?;
            writeln!(out, "secondary_ci95 = [{:e}, {:e}]", s.ci_low, s.ci_high)?;
        }
        writeln!(out, "analytic_exact = {}", fmt_opt(row.analytic.exact))?;
        writeln!(out)?;
    }
    Ok(())
}

fn simulate(cfg: &ExperimentConfig, args: &CommonArgs) -> Result<SweepResult, CliError> {
    let execution = if args.serial { Execution::Serial } else { Execution::Parallel };
    run_sweep_with(cfg, execution).map_err(|e| CliError::Runtime(e.to_string()))
}

pub fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Runtime(e.to_string());
    match &cli.command {
        Command::Simulate(args) => {
            let cfg = load(args)?;
            let result = simulate(&cfg, args)?;
            print_summary(&result).map_err(io)?;
            if args.out.is_some() {
                emit_csv(&result, &args.out)?;
            }
        }
        Command::Sweep(args) => {
            let cfg = load(args)?;
            let result = simulate(&cfg, args)?;
            emit_csv(&result, &args.out)?;
        }
        Command::Analyze(args) => {
            let cfg = load(args)?;
            let report = analytic_report(&cfg);
            let mut out = std::io::stdout().lock();
            for (k, v) in &report.entries {
                writeln!(out, "{k} = {v}").map_err(io)?;
            }
            drop(out);
            if args.out.is_some() {
                let result = analytic_sweep(&cfg).map_err(|e| CliError::Runtime(e.to_string()))?;
                emit_csv(&result, &args.out)?;
            }
        }
    }
    Ok(())
}

/// Parses `argv`, sizes the thread pool and dispatches. Returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = workers_from_env().and_then(|workers| match workers {
        None => dispatch(&cli),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Runtime(e.to_string()))?
            .install(|| dispatch(&cli)),
    });
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("proactive: {e}");
            e.exit_code()
        }
    }
}
