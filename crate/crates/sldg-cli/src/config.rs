//! Run configuration: per-command defaults, `key=value` config files, and
//! the merge order `defaults < config file < SLDG_THREADS < flags`.
//!
//! The config-file keys mirror the long flag names exactly (without the
//! leading dashes), so any command line can be written down as a file and
//! vice versa; [`RunConfig::to_config_text`] produces that form and
//! [`RunConfig::apply_config_text`] consumes it.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use sldg_core::KernelKind;

use crate::ic::InitialCondition;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Accuracy,
    Advect,
    Bench,
    Vlasov,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Accuracy => "accuracy",
            Command::Advect => "advect",
            Command::Bench => "bench",
            Command::Vlasov => "vlasov",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => bail!("unknown format `{other}` (expected csv or json)"),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelChoice {
    Specialized,
    Generic,
}

impl KernelChoice {
    pub fn to_kind(self) -> KernelKind {
        match self {
            KernelChoice::Specialized => KernelKind::Specialized,
            KernelChoice::Generic => KernelKind::Generic,
        }
    }
}

impl FromStr for KernelChoice {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "specialized" => Ok(KernelChoice::Specialized),
            "generic" => Ok(KernelChoice::Generic),
            other => bail!("unknown kernel `{other}` (expected specialized or generic)"),
        }
    }
}

impl fmt::Display for KernelChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelChoice::Specialized => "specialized",
            KernelChoice::Generic => "generic",
        })
    }
}

/// Worker-thread request: `auto` defers to the runtime default.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Threads {
    Auto,
    Count(usize),
}

impl FromStr for Threads {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(Threads::Auto);
        }
        let n: usize = s.parse().with_context(|| format!("bad thread count `{s}`"))?;
        if n == 0 {
            bail!("thread count must be at least 1");
        }
        Ok(Threads::Count(n))
    }
}

impl fmt::Display for Threads {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threads::Auto => f.write_str("auto"),
            Threads::Count(n) => write!(f, "{n}"),
        }
    }
}

/// One fully-resolved run. Field meanings follow the flags of the same
/// name; `double_coeffs = None` means "as many 64-bit coefficients as the
/// order", i.e. the pure double layout in 1D and the diagonal rule
/// `j_x + j_v < order` in phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub order: usize,
    pub double_coeffs: Option<usize>,
    pub cells: usize,
    pub steps: usize,
    pub nu: f64,
    pub dt: f64,
    pub ic: InitialCondition,
    pub seed: u64,
    pub threads: Threads,
    pub format: OutputFormat,
    pub output: Option<PathBuf>,
    pub kernel: KernelChoice,
    pub warmup: usize,
    pub repeats: usize,
    pub streaming: bool,
}

impl RunConfig {
    pub fn defaults(command: Command) -> Self {
        let (cells, steps) = match command {
            Command::Accuracy => (256, 10_000),
            Command::Advect => (256, 100),
            Command::Bench => (1 << 24, 50),
            Command::Vlasov => (32, 100),
        };
        RunConfig {
            command,
            order: 4,
            double_coeffs: None,
            cells,
            steps,
            nu: 2.25,
            dt: 0.1,
            ic: InitialCondition::Smooth,
            seed: 0,
            threads: Threads::Auto,
            format: OutputFormat::Csv,
            output: None,
            kernel: KernelChoice::Specialized,
            warmup: 5,
            repeats: 5,
            streaming: false,
        }
    }

    /// The number of wide coefficients actually in effect.
    pub fn resolved_double_coeffs(&self) -> usize {
        self.double_coeffs.unwrap_or(self.order)
    }

    /// Apply one `key=value` assignment using the flag names as keys.
    pub fn apply_assignment(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "order" => self.order = parse(key, value)?,
            "double-coeffs" => self.double_coeffs = Some(parse(key, value)?),
            "cells" => self.cells = parse(key, value)?,
            "steps" => self.steps = parse(key, value)?,
            "nu" => self.nu = parse(key, value)?,
            "dt" => self.dt = parse(key, value)?,
            "ic" => self.ic = value.parse()?,
            "seed" => self.seed = parse(key, value)?,
            "threads" => self.threads = value.parse()?,
            "format" => self.format = value.parse()?,
            "output" => self.output = Some(PathBuf::from(value)),
            "kernel" => self.kernel = value.parse()?,
            "warmup" => self.warmup = parse(key, value)?,
            "repeats" => self.repeats = parse(key, value)?,
            "streaming" => self.streaming = parse(key, value)?,
            other => bail!("unknown config key `{other}`"),
        }
        Ok(())
    }

    /// Parse a whole config file: one `key=value` per line, `#` comments
    /// and blank lines ignored.
    pub fn apply_config_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .with_context(|| format!("line {}: expected key=value, got `{line}`", lineno + 1))?;
            self.apply_assignment(key.trim(), value.trim())
                .with_context(|| format!("line {}", lineno + 1))?;
        }
        Ok(())
    }

    /// Serialize to the config-file form. Applying the result onto the
    /// same command's defaults reproduces this config exactly.
    pub fn to_config_text(&self) -> String {
        let mut out = String::new();
        let mut push = |k: &str, v: String| {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        };
        push("order", self.order.to_string());
        if let Some(d) = self.double_coeffs {
            push("double-coeffs", d.to_string());
        }
        push("cells", self.cells.to_string());
        push("steps", self.steps.to_string());
        push("nu", self.nu.to_string());
        push("dt", self.dt.to_string());
        push("ic", self.ic.to_string());
        push("seed", self.seed.to_string());
        push("threads", self.threads.to_string());
        push("format", self.format.to_string());
        if let Some(p) = &self.output {
            push("output", p.display().to_string());
        }
        push("kernel", self.kernel.to_string());
        push("warmup", self.warmup.to_string());
        push("repeats", self.repeats.to_string());
        push("streaming", self.streaming.to_string());
        out
    }

    pub fn apply_env(&mut self, sldg_threads: Option<&str>) -> Result<()> {
        if let Some(s) = sldg_threads {
            self.threads = s.parse().context("SLDG_THREADS")?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.order == 0 || self.order > 64 {
            bail!("--order must be in 1..=64");
        }
        let d_max = match self.command {
            // Phase-space wide rule: (j_x, j_v) wide iff j_x + j_v < d.
            Command::Vlasov => 2 * self.order - 1,
            _ => self.order,
        };
        if let Some(d) = self.double_coeffs {
            if d > d_max {
                bail!("--double-coeffs must be at most {d_max} for this command");
            }
        }
        if self.cells == 0 {
            bail!("--cells must be at least 1");
        }
        if !self.nu.is_finite() {
            bail!("--nu must be finite");
        }
        if !self.dt.is_finite() || self.dt < 0.0 {
            bail!("--dt must be finite and non-negative");
        }
        if self.repeats == 0 {
            bail!("--repeats must be at least 1");
        }
        Ok(())
    }

    /// Install a thread pool honoring the request and run `f` inside it.
    pub fn with_thread_pool<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T> {
        match self.threads {
            Threads::Auto => Ok(f()),
            Threads::Count(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .context("building thread pool")?;
                Ok(pool.install(f))
            }
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    value.parse().with_context(|| format!("bad value `{value}` for `{key}`"))
}
