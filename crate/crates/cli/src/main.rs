//! `nlse`: run, check and time the NLSE integrators.

mod run;
mod study;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nlse_core::config::RunConfig;
use nlse_core::Error;

#[derive(Parser)]
#[command(name = "nlse", version, about = "Explicit finite-difference integrators for the cubic NLSE")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a test problem and write frames plus a summary.
    Run(RunArgs),
    /// Print the linear stability bounds for a grid.
    Stability(StabilityArgs),
    /// Soliton convergence table over a list of spacings.
    Converge(ConvergeArgs),
    /// Chunk-size sweep and serial vs parallel timing.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
    Csv,
}

/// Options shared by commands that build a run configuration. Every flag
/// overrides the config key of the same name.
#[derive(Args, Default)]
struct RunOptions {
    /// Config file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// soliton, vortex2d or vortex_ring.
    #[arg(long)]
    problem: Option<String>,
    /// single or double.
    #[arg(long)]
    precision: Option<String>,
    /// cd or 2shoc.
    #[arg(long)]
    scheme: Option<String>,
    /// dirichlet, msd or l0.
    #[arg(long)]
    bc: Option<String>,
    /// Tile extents, e.g. 16x16.
    #[arg(long)]
    tile: Option<String>,
    #[arg(long)]
    workers: Option<String>,
    /// Steps between frames.
    #[arg(long = "chunk-size")]
    chunk_size: Option<String>,
    #[arg(long)]
    frames: Option<String>,
    #[arg(long = "t-end")]
    t_end: Option<String>,
    #[arg(long)]
    dt: Option<String>,
    /// Run with a time step above the recommended bound.
    #[arg(long = "force-dt")]
    force_dt: bool,
    /// Also write each 1D frame as CSV.
    #[arg(long)]
    csv: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Any other config key, as KEY=VALUE; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl RunOptions {
    fn build(&self) -> nlse_core::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(p) = &self.problem {
            cfg.set("problem", p)?;
        }
        let flags = [
            ("precision", &self.precision),
            ("scheme", &self.scheme),
            ("bc", &self.bc),
            ("tile", &self.tile),
            ("workers", &self.workers),
            ("chunk_size", &self.chunk_size),
            ("frames", &self.frames),
            ("t_end", &self.t_end),
            ("dt", &self.dt),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        for pair in &self.set {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| Error::config(pair.as_str(), "expected KEY=VALUE"))?;
            cfg.set(key.trim(), value)?;
        }
        if self.force_dt {
            cfg.force_dt = true;
        }
        if self.csv {
            cfg.csv = true;
        }
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    options: RunOptions,
    /// Print the summary as JSON instead of text.
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Args)]
struct StabilityArgs {
    /// Read dimension, a and h from a config file instead.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    #[arg(long, default_value_t = 0.1)]
    h: f64,
    /// Time step to check against the bounds.
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Args)]
struct ConvergeArgs {
    /// cd or 2shoc.
    #[arg(long, default_value = "cd")]
    scheme: String,
    #[arg(long, default_value = "msd")]
    bc: String,
    /// Comma-separated spacings, coarsest first.
    #[arg(long, value_delimiter = ',', default_value = "0.2,0.1,0.05")]
    h: Vec<f64>,
    #[arg(long = "t-end", default_value_t = 5.0)]
    t_end: f64,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Args)]
struct BenchArgs {
    /// Points in the 1D soliton grid.
    #[arg(long, default_value_t = 100_000)]
    points: usize,
    /// Steps per timed run.
    #[arg(long, default_value_t = 1000)]
    steps: u64,
    /// Comma-separated chunk sizes; defaults to 1, 2, 5, 10, ... up to `steps`.
    #[arg(long = "chunk-sizes", value_delimiter = ',')]
    chunk_sizes: Vec<u64>,
    #[arg(long, default_value = "cd")]
    scheme: String,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Tile extent for the 1D grid.
    #[arg(long)]
    tile: Option<usize>,
    #[arg(long, default_value_t = 3)]
    repetitions: usize,
    /// Worker count for the serial vs parallel comparison.
    #[arg(long = "parallel-workers", default_value_t = 4)]
    parallel_workers: usize,
    /// Steps for the serial vs parallel comparison; 0 skips it.
    #[arg(long = "parallel-steps", default_value_t = 10)]
    parallel_steps: u64,
    /// Copy tiles into worker-local buffers (scratch) or read shared arrays (direct).
    #[arg(long, default_value = "scratch")]
    halo: String,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Diverged { .. }) => 3,
        Some(e) if e.is_config_error() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run::run(&args),
        Command::Stability(args) => study::stability(&args),
        Command::Converge(args) => study::converge(&args),
        Command::Bench(args) => study::bench(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
