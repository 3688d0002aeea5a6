use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod output;

use config::{Format, RunConfig};

/// Capacity bounds and degradability checks for the flagged depolarizing channel.
#[derive(Parser)]
#[command(name = "flagcap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit the bound curves for one dimension as CSV or JSON.
    Bounds(RunArgs),
    /// Run degradability certificates, covariance and entropy cross-checks.
    Verify(RunArgs),
    /// Maximize coherent and mutual information numerically and compare with closed forms.
    Optimize(RunArgs),
    /// Write one curve file per dimension plus the gap inset table.
    FigureData(RunArgs),
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// Input dimension (repeatable for figure-data).
    #[arg(long = "d", value_name = "D")]
    d: Vec<usize>,
    #[arg(long)]
    p_min: Option<f64>,
    #[arg(long)]
    p_max: Option<f64>,
    /// Number of grid points, endpoints included.
    #[arg(long)]
    steps: Option<usize>,
    /// Single depolarizing probability (verify, optimize).
    #[arg(long)]
    p: Option<f64>,
    /// Flag overlap parameter.
    #[arg(long)]
    c: Option<f64>,
    /// Pure-flag angle; selects the pure-flag channel in optimize.
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Certificate tolerance on the Choi residual.
    #[arg(long)]
    tol_cert: Option<f64>,
    /// Output file (bounds, verify, optimize) or directory (figure-data).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Optional key = value config file; flags take precedence.
    #[arg(long, env = "FLAGCAP_CONFIG")]
    config: Option<PathBuf>,
    /// Largest dimension accepted by the matrix checks.
    #[arg(long)]
    memory_cap: Option<usize>,
    /// Optimizer restarts (at least 8 are always run).
    #[arg(long)]
    restarts: Option<usize>,
    /// Kraus-channel JSON file to check instead of the built-in grid (verify).
    #[arg(long)]
    channel: Option<PathBuf>,
}

impl RunArgs {
    fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        if !self.d.is_empty() {
            cfg.d = self.d.clone();
        }
        macro_rules! over {
            ($($field:ident => $target:expr),* $(,)?) => {
                $(if let Some(v) = self.$field.clone() { $target = v; })*
            };
        }
        over! {
            p_min => cfg.p_min,
            p_max => cfg.p_max,
            steps => cfg.steps,
            seed => cfg.seed,
            tol_cert => cfg.tolerances.cert,
            format => cfg.format,
            memory_cap => cfg.memory_cap,
            restarts => cfg.restarts,
        }
        if self.p.is_some() {
            cfg.p = self.p;
        }
        if self.c.is_some() {
            cfg.c = self.c;
        }
        if self.theta.is_some() {
            cfg.theta = self.theta;
        }
        if self.out.is_some() {
            cfg.output_path = self.out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Distinguishes failed checks (exit 1) from bad invocations (exit 2).
pub enum Failure {
    Usage(anyhow::Error),
    Check(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Self::Usage(e)
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Bounds(a) => commands::bounds(&a.resolve()?),
        Command::Verify(a) => {
            let cfg = a.resolve()?;
            match &a.channel {
                Some(path) => commands::verify_channel(&cfg, path),
                None => commands::verify(&cfg),
            }
        }
        Command::Optimize(a) => commands::optimize(&a.resolve()?),
        Command::FigureData(a) => commands::figure_data(&a.resolve()?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("flagcap: check failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("flagcap: {e:#}");
            ExitCode::from(2)
        }
    }
}
