//! `coopcache`: run, sweep and inspect cooperative-caching simulations.
//!
//! Exit codes: 0 success, 1 usage error, 2 configuration error, 3 runtime
//! error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use coopcache::config::{apply_overrides, parse_config_file, ConfigError};
use coopcache::report::{execute_run, load_trace, write_atomic};
use coopcache::sweep::{run_sweep, sweep_csv, SweepAxis};
use coopcache::workload::build_catalog;
use coopcache::{Error, RunConfig};

#[derive(Parser)]
#[command(name = "coopcache", version, about = "Cooperative caching simulator for cloudlet-based mobile clouds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Configuration file.
    config: PathBuf,
    /// Override a key, e.g. `--set cache.policy=gds`. Repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,
    /// Skip the WAN-slower-than-LAN sanity check.
    #[arg(long)]
    allow_odd_links: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one configuration and write summary.txt, metrics.csv and outcomes.csv.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Output directory (overrides `output.dir`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the Cartesian product of axis values on one shared trace.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// `axis=v1,v2,...` with axis in policy|discovery|dissemination|consistency|capacity|cooperation.
        #[arg(long = "axis", required = true, value_name = "AXIS=VALUES")]
        axes: Vec<SweepAxis>,
        /// Comparison CSV path (default: `<output.dir>/sweep.csv`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate the configured workload and write it as a trace file.
    GenTrace {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Trace file path (default: `<output.dir>/trace.csv`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a configuration and print it fully resolved.
    Validate {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Catalog(_) | Error::Topology(_) => Failure::Config(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn load(args: &ConfigArgs) -> Result<RunConfig, Failure> {
    let mut cfg = parse_config_file(&args.config)?;
    apply_overrides(&mut cfg, &args.overrides)?;
    if args.allow_odd_links {
        cfg.allow_odd_links = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn ensure_parent(path: &std::path::Path) -> Result<(), Failure> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            std::fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("{}: {e}", dir.display())))
        }
        _ => Ok(()),
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run { cfg, out } => {
            let mut cfg = load(&cfg)?;
            if let Some(dir) = out {
                cfg.output_dir = dir;
            }
            let run = execute_run(&cfg)?;
            let m = &run.output.metrics;
            println!(
                "{} requests, cloudlet hit ratio {:.4}, mean latency {:.1} us -> {}",
                m.requests,
                m.overall_cloudlet_hit_ratio,
                m.latency_mean_us,
                cfg.output_dir.display()
            );
        }
        Command::Sweep { cfg, axes, out } => {
            let cfg = load(&cfg)?;
            let rows = run_sweep(&cfg, &axes)?;
            let path = out.unwrap_or_else(|| cfg.output_dir.join("sweep.csv"));
            ensure_parent(&path)?;
            write_atomic(&path, &sweep_csv(&axes, &rows))?;
            println!("{} runs -> {}", rows.len(), path.display());
        }
        Command::GenTrace { cfg, out } => {
            let cfg = load(&cfg)?;
            let catalog = build_catalog(&cfg.catalog, cfg.seed)?;
            let trace = load_trace(&cfg, &catalog)?;
            let path = out.unwrap_or_else(|| cfg.output_dir.join("trace.csv"));
            ensure_parent(&path)?;
            write_atomic(&path, &trace.to_text())?;
            println!("{} requests -> {}", trace.len(), path.display());
        }
        Command::Validate { cfg } => {
            let cfg = load(&cfg)?;
            print!("{}", cfg.echo());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
