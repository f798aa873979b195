//! The four subcommands: accuracy sweep, single advection with snapshot,
//! benchmark, and the Vlasov–Poisson demonstrator.
//!
//! Each command produces its table through a pure `*_rows` function (used
//! directly by the test suite) plus a thin emitter that formats CSV or
//! JSON and writes to `--output` or stdout. Numerical columns print with
//! `f64`'s shortest-round-trip formatting, so re-parsing a table yields
//! bit-identical values.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sldg_core::{
    l2_error, phase_l2_norm, phase_mass, project_function, project_phase_function, total_mass,
    CoefficientGrid, Domain1D, FieldMode, PhaseLayout, PhaseSpaceGrid, PrecisionLayout,
    VlasovStepper,
};

use crate::bench::{self, BenchConfig};
use crate::config::{Command, OutputFormat, RunConfig};
use crate::ic;
use crate::snapshot;

fn deliver(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(path) => fs::write(path, text)
            .with_context(|| format!("writing output {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Denominator for relative mass drift. Both built-in profiles have zero
/// mean, where "relative to initial mass" divides by rounding noise, so
/// the scale falls back to the L1 cell-average mass h·Σ|c_i0| of the
/// initial state.
pub fn mass_scale(grid: &CoefficientGrid) -> f64 {
    let h = grid.domain().cell_width();
    let mut l1 = 0.0;
    for i in 0..grid.cells() {
        l1 += grid.coeff(i, 0).abs();
    }
    total_mass(grid).abs().max(h * l1).max(f64::MIN_POSITIVE)
}

pub fn relative_mass_drift(initial: &CoefficientGrid, end: &CoefficientGrid) -> f64 {
    (total_mass(end) - total_mass(initial)).abs() / mass_scale(initial)
}

// ---------------------------------------------------------------------
// accuracy
// ---------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub order: usize,
    pub n_double: usize,
    pub error: f64,
    pub error_mass: f64,
}

pub const ACCURACY_CSV_HEADER: &str = "order,n_double,error,error_mass";

/// One row per d ∈ {o, …, 1, 0}: project the chosen profile, advect
/// `steps` times by ν, and compare against the d = o run of the same
/// invocation (modal L2 distance) alongside the relative mass drift.
pub fn accuracy_rows(cfg: &RunConfig) -> Result<Vec<AccuracyRow>> {
    let dom = Domain1D::new(0.0, 1.0, cfg.cells)?;
    let profile = ic::profile(cfg.ic, dom.width(), cfg.seed);
    let o = cfg.order;
    let kind = cfg.kernel.to_kind();
    cfg.with_thread_pool(|| -> Result<Vec<AccuracyRow>> {
        let mut rows = Vec::with_capacity(o + 1);
        let mut reference: Option<CoefficientGrid> = None;
        for d in (0..=o).rev() {
            let layout = PrecisionLayout::new(o, d)?;
            let initial = project_function(|x| profile(x), dom, layout)?;
            let mut cur = initial.clone();
            let mut scratch = CoefficientGrid::new(dom, layout);
            bench::run_advection_loop(&mut cur, &mut scratch, cfg.nu, cfg.steps, kind)?;
            let reference = reference.get_or_insert_with(|| cur.clone());
            rows.push(AccuracyRow {
                order: o,
                n_double: d,
                error: l2_error(&cur, reference)?,
                error_mass: relative_mass_drift(&initial, &cur),
            });
        }
        Ok(rows)
    })?
}

pub fn accuracy_csv(rows: &[AccuracyRow]) -> String {
    let mut out = String::from(ACCURACY_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", r.order, r.n_double, r.error, r.error_mass));
    }
    out
}

pub fn cmd_accuracy(cfg: &RunConfig) -> Result<()> {
    let rows = accuracy_rows(cfg)?;
    let text = match cfg.format {
        OutputFormat::Csv => accuracy_csv(&rows),
        OutputFormat::Json => serde_json::to_string_pretty(&rows)? + "\n",
    };
    deliver(cfg.output.as_deref(), &text)
}

// ---------------------------------------------------------------------
// advect
// ---------------------------------------------------------------------

/// Project, advect `steps` times by ν, write the snapshot, and print a
/// one-line summary (mass, L2 norm, largest |coefficient|).
pub fn cmd_advect(cfg: &RunConfig) -> Result<()> {
    let grid = advect_final_state(cfg)?;
    let path = cfg
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from("snapshot.sldg"));
    snapshot::write_snapshot(&path, &grid)?;
    let mut max_coeff = 0.0f64;
    for i in 0..grid.cells() {
        for j in 0..grid.order() {
            max_coeff = max_coeff.max(grid.coeff(i, j).abs());
        }
    }
    println!(
        "mass={} l2_norm={} max_coeff={} snapshot={}",
        total_mass(&grid),
        sldg_core::l2_norm(&grid),
        max_coeff,
        path.display()
    );
    Ok(())
}

pub fn advect_final_state(cfg: &RunConfig) -> Result<CoefficientGrid> {
    let dom = Domain1D::new(0.0, 1.0, cfg.cells)?;
    let profile = ic::profile(cfg.ic, dom.width(), cfg.seed);
    let layout = PrecisionLayout::new(cfg.order, cfg.resolved_double_coeffs())?;
    let kind = cfg.kernel.to_kind();
    cfg.with_thread_pool(|| -> Result<CoefficientGrid> {
        let mut cur = project_function(|x| profile(x), dom, layout)?;
        let mut scratch = CoefficientGrid::new(dom, layout);
        bench::run_advection_loop(&mut cur, &mut scratch, cfg.nu, cfg.steps, kind)?;
        Ok(cur)
    })?
}

// ---------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------

pub fn cmd_bench(cfg: &RunConfig) -> Result<()> {
    let bcfg = BenchConfig {
        order: cfg.order,
        double_coeffs: cfg.resolved_double_coeffs(),
        cells: cfg.cells,
        steps: cfg.steps,
        warmup: cfg.warmup,
        repeats: cfg.repeats,
        threads: cfg.threads,
        kernel: cfg.kernel,
        nu: cfg.nu,
        streaming: cfg.streaming,
    };
    let (base, target) = bench::run_bench(&bcfg)?;
    if let Some(w) = &target.warning {
        eprintln!("warning: {w}");
    }
    // With d = o the "target" is a rerun of the baseline; one row suffices.
    let rows = if base.n_double == target.n_double { vec![target] } else { vec![base, target] };
    let text = match cfg.format {
        OutputFormat::Csv => bench::emit_csv(&rows),
        OutputFormat::Json => bench::emit_json(&rows)? + "\n",
    };
    deliver(cfg.output.as_deref(), &text)
}

// ---------------------------------------------------------------------
// vlasov
// ---------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VlasovRow {
    pub step: usize,
    pub time: f64,
    pub mass: f64,
    pub electric_energy: f64,
    pub l2_norm: f64,
}

pub const VLASOV_CSV_HEADER: &str = "step,time,mass,electric_energy,l2_norm";

/// The demonstrator setup: weak Landau damping on x ∈ [0, 4π) (mode
/// k = 0.5, amplitude 1%), Maxwellian in v on [−8, 8] so the periodic
/// v-boundary carries negligible mass.
pub fn vlasov_initial_grid(cfg: &RunConfig) -> Result<PhaseSpaceGrid> {
    let dom_x = Domain1D::new(0.0, 4.0 * std::f64::consts::PI, cfg.cells)?;
    let dom_v = Domain1D::new(-8.0, 8.0, cfg.cells)?;
    let layout = PhaseLayout::new(cfg.order, cfg.order, cfg.resolved_double_coeffs())?;
    let k = 2.0 * std::f64::consts::PI / dom_x.width();
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    Ok(project_phase_function(
        move |x, v| (1.0 + 0.01 * (k * x).cos()) * norm * (-0.5 * v * v).exp(),
        dom_x,
        dom_v,
        layout,
    )?)
}

/// Step-indexed diagnostics, including the step-0 row for the initial
/// state. The field is re-solved from the current state for each row so
/// every line describes the same instant.
pub fn vlasov_rows(cfg: &RunConfig) -> Result<Vec<VlasovRow>> {
    let mut f = vlasov_initial_grid(cfg)?;
    let kind = cfg.kernel.to_kind();
    cfg.with_thread_pool(|| -> Result<Vec<VlasovRow>> {
        let mut stepper = VlasovStepper::new(&f, cfg.dt, FieldMode::Poisson, kind)?;
        let mut warned = false;
        let mut rows = Vec::with_capacity(cfg.steps + 1);
        let mut push_row = |step: usize, f: &PhaseSpaceGrid, stepper: &VlasovStepper| -> Result<()> {
            let field = stepper.solve_field(f)?;
            rows.push(VlasovRow {
                step,
                time: step as f64 * cfg.dt,
                mass: phase_mass(f),
                electric_energy: field.electric_energy(),
                l2_norm: phase_l2_norm(f),
            });
            Ok(())
        };
        push_row(0, &f, &stepper)?;
        for s in 1..=cfg.steps {
            stepper.step(&mut f)?;
            push_row(s, &f, &stepper)?;
            if !warned {
                let ratio = sldg_core::boundary_mass_ratio(&f);
                if ratio > 1e-12 {
                    eprintln!(
                        "warning: step {s}: {ratio:.3e} of the mass sits in the outermost \
                         v-cells; the periodic v-boundary is no longer physical"
                    );
                    warned = true;
                }
            }
        }
        Ok(rows)
    })?
}

pub fn vlasov_csv(rows: &[VlasovRow]) -> String {
    let mut out = String::from(VLASOV_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.step, r.time, r.mass, r.electric_energy, r.l2_norm
        ));
    }
    out
}

pub fn cmd_vlasov(cfg: &RunConfig) -> Result<()> {
    let rows = vlasov_rows(cfg)?;
    let text = match cfg.format {
        OutputFormat::Csv => vlasov_csv(&rows),
        OutputFormat::Json => serde_json::to_string_pretty(&rows)? + "\n",
    };
    deliver(cfg.output.as_deref(), &text)
}

pub fn dispatch(cfg: &RunConfig) -> Result<()> {
    match cfg.command {
        Command::Accuracy => cmd_accuracy(cfg),
        Command::Advect => cmd_advect(cfg),
        Command::Bench => cmd_bench(cfg),
        Command::Vlasov => cmd_vlasov(cfg),
    }
}
