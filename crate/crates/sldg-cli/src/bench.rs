//! Timed benchmark runner: achieved bandwidth, speedup against the
//! all-64-bit baseline, and memory reduction.
//!
//! The traffic model counts coefficient bytes only — each step streams
//! every cell once in and once out, so `bytes_per_step = 2·N·(8d+4(o−d))`
//! — and the arithmetic model is `4o−1` flops per degree of freedom.
//! Matrix and index traffic are excluded: the update matrices are a few
//! hundred bytes and stay cache-resident.
//!
//! Speedup is a time ratio at identical (order, cells, steps, threads,
//! kernel): the d = o baseline always runs first in the same invocation so
//! the two timings share machine state. Bandwidth figures only mean
//! something when the working set is streaming-sized (≥ 4× the last-level
//! cache); smaller runs record a warning in the report instead of failing.

use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sldg_core::{
    advect_constant_with, CoefficientGrid, Domain1D, KernelKind, PrecisionLayout,
};

use crate::config::{KernelChoice, Threads};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub order: usize,
    pub double_coeffs: usize,
    pub cells: usize,
    pub steps: usize,
    pub warmup: usize,
    pub repeats: usize,
    pub threads: Threads,
    pub kernel: KernelChoice,
    pub nu: f64,
    pub streaming: bool,
}

impl BenchConfig {
    pub fn bytes_per_cell(&self) -> u64 {
        (8 * self.double_coeffs + 4 * (self.order - self.double_coeffs)) as u64
    }

    /// One load and one store of every cell per step.
    pub fn bytes_per_step(&self) -> u64 {
        2 * self.cells as u64 * self.bytes_per_cell()
    }

    /// Resident coefficient bytes: the ping-pong pair of grids.
    pub fn working_set_bytes(&self) -> u64 {
        2 * self.cells as u64 * self.bytes_per_cell()
    }

    fn validate(&self) -> Result<()> {
        if self.order == 0 || self.order > 64 {
            bail!("order must be in 1..=64");
        }
        if self.double_coeffs > self.order {
            bail!("double-coeffs must be at most the order");
        }
        if self.cells == 0 || self.steps == 0 || self.repeats == 0 {
            bail!("cells, steps and repeats must all be at least 1");
        }
        if self.streaming && self.working_set_bytes() < 4 * llc_bytes() {
            bail!(
                "streaming run requires a working set of at least 4x the last-level \
                 cache ({} bytes), got {} bytes",
                4 * llc_bytes(),
                self.working_set_bytes()
            );
        }
        Ok(())
    }
}

/// One timed configuration. `bandwidth_gbs`, `speedup` and `memorydown`
/// are the report columns; the rest documents how they were obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub order: usize,
    pub n_double: usize,
    pub bandwidth_gbs: f64,
    pub speedup: f64,
    pub memorydown: f64,
    pub elapsed_s: f64,
    pub flops_per_dof: usize,
    pub bytes_per_step: u64,
    pub cells: usize,
    pub steps: usize,
    pub kernel: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// Last-level cache size in bytes, from sysfs, with a 32 MiB fallback
/// when the hierarchy is not exposed.
pub fn llc_bytes() -> u64 {
    read_cache_size("/sys/devices/system/cpu/cpu0/cache/index3/size")
        .unwrap_or(32 * 1024 * 1024)
}

fn read_cache_size(path: &str) -> Option<u64> {
    parse_cache_size(std::fs::read_to_string(path).ok()?.trim())
}

fn parse_cache_size(s: &str) -> Option<u64> {
    let (digits, scale) = match s.as_bytes().last()? {
        b'K' => (&s[..s.len() - 1], 1024),
        b'M' => (&s[..s.len() - 1], 1024 * 1024),
        b'G' => (&s[..s.len() - 1], 1024 * 1024 * 1024),
        _ => (s, 1),
    };
    digits.parse::<u64>().ok().map(|v| v * scale)
}

/// Deterministic coefficient fill for benchmarking: an aperiodic O(1)
/// pattern with the c_j ~ decaying-mode shape, cheap enough that grid
/// setup does not dominate a large-N run.
pub fn fill_grid(cells: usize, layout: PrecisionLayout) -> Result<CoefficientGrid> {
    let dom = Domain1D::new(0.0, 1.0, cells)?;
    let o = layout.order();
    let mut grid = CoefficientGrid::new(dom, layout);
    let mut values = vec![0.0f64; o];
    for i in 0..cells {
        // Golden-ratio stride: fills [-1, 1) without short cycles.
        let t = (i as f64 * 0.618_033_988_749_894_9).fract() * 2.0 - 1.0;
        let mut scale = 1.0;
        for (j, v) in values.iter_mut().enumerate() {
            *v = t * scale * if j % 2 == 0 { 1.0 } else { -0.5 };
            scale *= 0.25;
        }
        grid.set_cell(i, &values)?;
    }
    Ok(grid)
}

/// Advance `steps` constant-ν advections ping-pong between two buffers and
/// return the final state (the same loop the timed path runs, so timed and
/// untimed results are identical by construction).
pub fn run_advection_loop(
    grid: &mut CoefficientGrid,
    scratch: &mut CoefficientGrid,
    nu: f64,
    steps: usize,
    kernel: KernelKind,
) -> Result<KernelKind> {
    let mut used = kernel;
    for _ in 0..steps {
        used = advect_constant_with(grid, nu, scratch, kernel)?;
        std::mem::swap(grid, scratch);
    }
    Ok(used)
}

struct Timing {
    median_s: f64,
    kernel_used: KernelKind,
}

fn time_layout(cfg: &BenchConfig, layout: PrecisionLayout) -> Result<Timing> {
    let mut grid = fill_grid(cfg.cells, layout)?;
    let mut scratch = CoefficientGrid::new(*grid.domain(), layout);
    let body = |grid: &mut CoefficientGrid, scratch: &mut CoefficientGrid| -> Result<Timing> {
        let mut kernel_used =
            run_advection_loop(grid, scratch, cfg.nu, cfg.warmup, cfg.kernel.to_kind())?;
        let mut samples = Vec::with_capacity(cfg.repeats);
        for _ in 0..cfg.repeats {
            let start = Instant::now();
            kernel_used = run_advection_loop(grid, scratch, cfg.nu, cfg.steps, cfg.kernel.to_kind())?;
            samples.push(start.elapsed().as_secs_f64());
        }
        samples.sort_by(|a, b| a.total_cmp(b));
        Ok(Timing { median_s: samples[samples.len() / 2], kernel_used })
    };
    match cfg.threads {
        Threads::Auto => body(&mut grid, &mut scratch),
        Threads::Count(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .context("building thread pool")?;
            pool.install(|| body(&mut grid, &mut scratch))
        }
    }
}

fn kernel_name(kind: KernelKind) -> &'static str {
    match kind {
        KernelKind::Specialized => "specialized",
        KernelKind::Generic => "generic",
    }
}

/// Run the baseline (d = order) and then the requested configuration, and
/// return both reports in that order. The baseline's speedup is 1 by
/// definition; the target's is baseline time over target time.
pub fn run_bench(cfg: &BenchConfig) -> Result<(BenchReport, BenchReport)> {
    cfg.validate()?;
    let warning = if !cfg.streaming && cfg.working_set_bytes() < 4 * llc_bytes() {
        Some(format!(
            "working set {} bytes is below 4x the last-level cache ({} bytes); \
             bandwidth reflects cache, not memory",
            cfg.working_set_bytes(),
            4 * llc_bytes()
        ))
    } else {
        None
    };

    let baseline_cfg = BenchConfig { double_coeffs: cfg.order, ..cfg.clone() };
    let base = time_layout(&baseline_cfg, PrecisionLayout::all_wide(cfg.order)?)?;
    let target = time_layout(cfg, PrecisionLayout::new(cfg.order, cfg.double_coeffs)?)?;

    let report = |c: &BenchConfig, t: &Timing, speedup: f64| BenchReport {
        order: c.order,
        n_double: c.double_coeffs,
        bandwidth_gbs: c.bytes_per_step() as f64 * c.steps as f64 / t.median_s / 1e9,
        speedup,
        memorydown: PrecisionLayout::new(c.order, c.double_coeffs)
            .expect("validated")
            .memory_reduction(),
        elapsed_s: t.median_s,
        flops_per_dof: 4 * c.order - 1,
        bytes_per_step: c.bytes_per_step(),
        cells: c.cells,
        steps: c.steps,
        kernel: kernel_name(t.kernel_used).to_string(),
        warning: warning.clone(),
    };
    let base_report = report(&baseline_cfg, &base, 1.0);
    let target_report = report(cfg, &target, base.median_s / target.median_s);
    Ok((base_report, target_report))
}

pub const CSV_HEADER: &str = "order,n_double,bandwidth_gbs,speedup,memorydown";

/// CSV with the exact five-column header; floats use shortest-round-trip
/// formatting so parsing the row back yields identical values.
pub fn emit_csv(reports: &[BenchReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.order, r.n_double, r.bandwidth_gbs, r.speedup, r.memorydown
        ));
    }
    out
}

pub fn emit_json(reports: &[BenchReport]) -> Result<String> {
    Ok(serde_json::to_string_pretty(reports)?)
}
