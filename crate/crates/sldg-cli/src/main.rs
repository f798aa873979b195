//! `sldg` binary: parse flags, layer them over config file / environment /
//! defaults, and dispatch to the subcommand drivers.
//!
//! Precedence for every setting: flag > `SLDG_THREADS` (threads only) >
//! config file > built-in default.

use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use sldg_cli::commands;
use sldg_cli::config::{Command, RunConfig};

#[derive(Parser)]
#[command(
    name = "sldg",
    version,
    about = "Mixed-precision semi-Lagrangian discontinuous Galerkin advection toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sweep n_double from order down to 0 and tabulate L2 error against
    /// the all-double run plus relative mass drift
    Accuracy(CommonArgs),
    /// Project an initial condition, advect it, and write a snapshot file
    Advect(CommonArgs),
    /// Measure effective bandwidth and speedup against the all-double
    /// baseline on a streaming-sized grid
    Bench(CommonArgs),
    /// Run the Strang-split Vlasov–Poisson demonstrator and emit per-step
    /// diagnostics
    Vlasov(CommonArgs),
}

impl Cmd {
    fn command(&self) -> Command {
        match self {
            Cmd::Accuracy(_) => Command::Accuracy,
            Cmd::Advect(_) => Command::Advect,
            Cmd::Bench(_) => Command::Bench,
            Cmd::Vlasov(_) => Command::Vlasov,
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Cmd::Accuracy(a) | Cmd::Advect(a) | Cmd::Bench(a) | Cmd::Vlasov(a) => a,
        }
    }
}

#[derive(Args)]
struct CommonArgs {
    /// key=value config file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,

    /// Polynomial order o (coefficients per cell)
    #[arg(long)]
    order: Option<usize>,

    /// Leading coefficients kept in f64 (defaults to order: all-double)
    #[arg(long = "double-coeffs")]
    double_coeffs: Option<usize>,

    /// Number of grid cells
    #[arg(long)]
    cells: Option<usize>,

    /// Number of advection / Strang steps
    #[arg(long)]
    steps: Option<usize>,

    /// Shift per step in cell widths (ν)
    #[arg(long)]
    nu: Option<f64>,

    /// Time step for the Vlasov demonstrator
    #[arg(long)]
    dt: Option<f64>,

    /// Initial condition: smooth | oscillatory
    #[arg(long)]
    ic: Option<String>,

    /// Seed for the oscillatory profile's phases
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads: a count or "auto" (SLDG_THREADS is the fallback)
    #[arg(long)]
    threads: Option<String>,

    /// Table format: csv | json
    #[arg(long)]
    format: Option<String>,

    /// Output path (table file; snapshot path for `advect`)
    #[arg(long)]
    output: Option<PathBuf>,

    /// Inner-loop flavor: specialized | generic
    #[arg(long)]
    kernel: Option<String>,

    /// Untimed warmup repetitions before benchmarking
    #[arg(long)]
    warmup: Option<usize>,

    /// Timed repetitions per layout (the median is reported)
    #[arg(long)]
    repeats: Option<usize>,

    /// Assert the working set is streaming-sized (≥ 4× last-level cache)
    #[arg(long)]
    streaming: bool,
}

fn build_config(command: Command, a: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = RunConfig::defaults(command);
    if let Some(path) = &a.config {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        cfg.apply_config_text(&text)
            .with_context(|| format!("parsing config file {}", path.display()))?;
    }
    // The --threads flag outranks SLDG_THREADS, so a malformed variable
    // only matters when no flag is given.
    if a.threads.is_none() {
        cfg.apply_env(std::env::var("SLDG_THREADS").ok().as_deref())?;
    }
    if let Some(v) = a.order {
        cfg.order = v;
    }
    if let Some(v) = a.double_coeffs {
        cfg.double_coeffs = Some(v);
    }
    if let Some(v) = a.cells {
        cfg.cells = v;
    }
    if let Some(v) = a.steps {
        cfg.steps = v;
    }
    if let Some(v) = a.nu {
        cfg.nu = v;
    }
    if let Some(v) = a.dt {
        cfg.dt = v;
    }
    if let Some(v) = &a.ic {
        cfg.ic = v.parse()?;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = &a.threads {
        cfg.threads = v.parse()?;
    }
    if let Some(v) = &a.format {
        cfg.format = v.parse()?;
    }
    if let Some(v) = &a.output {
        cfg.output = Some(v.clone());
    }
    if let Some(v) = &a.kernel {
        cfg.kernel = v.parse()?;
    }
    if let Some(v) = a.warmup {
        cfg.warmup = v;
    }
    if let Some(v) = a.repeats {
        cfg.repeats = v;
    }
    if a.streaming {
        cfg.streaming = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let cfg = build_config(cli.command.command(), cli.command.args())?;
    commands::dispatch(&cfg)
}
