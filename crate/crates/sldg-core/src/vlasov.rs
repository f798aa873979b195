//! Vlasov–Poisson time stepping on the phase-space grid.
//!
//! The normalized electrostatic system is
//!
//! ```text
//! ∂f/∂t + v ∂f/∂x + E(x,t) ∂f/∂v = 0,      ∂E/∂x = ρ(x,t) − ρ̄,
//! ```
//!
//! with ρ(x) = ∫ f dv, ρ̄ its spatial mean, periodic x, and the zero-mean
//! gauge ∫ E dx = 0. Both characteristic fields are advections with a
//! coefficient that is constant along the advected direction, so each is a
//! family of independent 1D constant-shift steps — one per perpendicular
//! cell and quadrature node — handled by [`advect_rows`]. A Strang split
//!
//! ```text
//! x-advect dt/2  →  solve field  →  v-advect dt  →  x-advect dt/2
//! ```
//!
//! gives second-order accuracy in dt.
//!
//! The shift of an x-row depends on v, which varies inside a v-cell, so the
//! sweep works in a per-cell nodal representation along the perpendicular
//! axis: the modal lane index is exchanged for values at the Gauss nodes of
//! that cell (an exactly invertible square transform), every node gets its
//! own CFL number, and the result is transformed back. The nodal scratch
//! grids are always full f64: the transforms densely mix lanes, which would
//! launder narrow-lane rounding into wide lanes if scratch were mixed too.
//! The mixed-precision layout applies to the long-lived modal state only.
//!
//! Velocity space is treated as periodic. That is only physical while f is
//! negligible at the v-boundary; [`crate::phase::boundary_mass_ratio`]
//! measures the violated mass so callers can warn.

use alloc::vec;
use alloc::vec::Vec;

use crate::advect::{advect_rows, KernelKind, SweepAxis};
use crate::basis::{legendre_all_into, QuadratureRule, MAX_QUADRATURE_NODES};
use crate::error::{Error, Result};
use crate::grid::{CoefficientGrid, PrecisionLayout};
use crate::phase::{PhaseLayout, PhaseSpaceGrid};
use crate::project::total_mass;

/// Integrate f over v: ρ_{i,j} = h_v Σ_iv c_{(i,iv),(j,0)}.
///
/// Only the jv = 0 lane survives because ∫ P_jv dv vanishes for jv ≥ 1.
/// The v-cell sum runs in ascending order, so the result is deterministic.
/// The density is returned as a full-f64 modal grid over the x-domain.
pub fn compute_density(f: &PhaseSpaceGrid) -> Result<CoefficientGrid> {
    let nx = f.dom_x().cells();
    let nv = f.dom_v().cells();
    let ox = f.layout().order_x();
    let ov = f.layout().order_v();
    let hv = f.dom_v().cell_width();
    let mut rho = CoefficientGrid::new(*f.dom_x(), PrecisionLayout::all_wide(ox)?);
    let mut cell = vec![0.0; f.layout().lanes()];
    let mut acc = vec![0.0; ox];
    for ix in 0..nx {
        acc.iter_mut().for_each(|a| *a = 0.0);
        for iv in 0..nv {
            f.get_cell(f.cell_index(ix, iv), &mut cell)?;
            for jx in 0..ox {
                acc[jx] += cell[jx * ov];
            }
        }
        for a in acc.iter_mut() {
            *a *= hv;
        }
        rho.set_cell(ix, &acc)?;
    }
    Ok(rho)
}

/// Q_j(x) = ∫_{-1}^{x} P_j: Q_0 = x + 1, Q_j = (P_{j+1} − P_{j-1})/(2j+1).
fn legendre_antiderivative_into(x: f64, out: &mut [f64]) {
    let o = out.len();
    let mut p = [0.0; MAX_QUADRATURE_NODES + 1];
    legendre_all_into(x, &mut p[..o + 1]);
    out[0] = x + 1.0;
    for j in 1..o {
        out[j] = (p[j + 1] - p[j - 1]) / (2.0 * j as f64 + 1.0);
    }
}

/// The field solve's output: the density it came from, the modal
/// coefficients of ∂E/∂x actually used (zero when the field is switched
/// off), and E sampled where the v-sweep needs it.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    rho: CoefficientGrid,
    /// Modal coefficients of E' per cell; ρ − ρ̄ for the Poisson field.
    source: CoefficientGrid,
    /// E at each cell's left edge, zero-mean gauged.
    e_left: Vec<f64>,
    /// E at the `order` Gauss–Legendre nodes of each cell, row-major.
    e_nodes: Vec<f64>,
}

impl FieldState {
    /// Solve ∂E/∂x = ρ − ρ̄ with periodic E and ∫E dx = 0.
    ///
    /// Within cell i, E(ξ) = F_i + (h/2) Σ_j s_{ij} Q_j(ξ) where s = ρ − ρ̄
    /// and F is accumulated across cells via the exact cell increment
    /// h·s_{i0}. The gauge constant is removed with the exact per-cell
    /// integral ∫cell E dx = h F_i + (h²/4)(2 s_{i0} − (2/3) s_{i1}).
    pub fn solve_poisson(rho: CoefficientGrid) -> Result<Self> {
        let o = rho.order();
        let n = rho.cells();
        let dom = *rho.domain();
        let h = dom.cell_width();
        let rho_bar = total_mass(&rho) / dom.width();
        let mut source = CoefficientGrid::new(dom, PrecisionLayout::all_wide(o)?);
        let mut cell = vec![0.0; o];
        for i in 0..n {
            rho.get_cell(i, &mut cell)?;
            cell[0] -= rho_bar;
            source.set_cell(i, &cell)?;
        }

        let mut e_left = vec![0.0; n];
        for i in 0..n - 1 {
            e_left[i + 1] = e_left[i] + h * source.coeff(i, 0);
        }
        let rule = QuadratureRule::gauss_legendre(o)?;
        let mut q = vec![0.0; o];
        let mut e_nodes = vec![0.0; n * o];
        for i in 0..n {
            for (k, &xi) in rule.nodes().iter().enumerate() {
                legendre_antiderivative_into(xi, &mut q);
                let mut acc = 0.0;
                for j in 0..o {
                    acc += source.coeff(i, j) * q[j];
                }
                e_nodes[i * o + k] = e_left[i] + 0.5 * h * acc;
            }
        }

        // ∫_{-1}^{1} Q_0 = 2, ∫ Q_1 = −2/3, ∫ Q_j = 0 for j ≥ 2.
        let mut integral = 0.0;
        for i in 0..n {
            let s1 = if o > 1 { source.coeff(i, 1) } else { 0.0 };
            integral += h * e_left[i]
                + 0.25 * h * h * (2.0 * source.coeff(i, 0) - (2.0 / 3.0) * s1);
        }
        let mean = integral / dom.width();
        e_left.iter_mut().for_each(|e| *e -= mean);
        e_nodes.iter_mut().for_each(|e| *e -= mean);

        Ok(Self { rho, source, e_left, e_nodes })
    }

    /// A switched-off field: E ≡ 0 exactly, density kept for diagnostics.
    pub fn zero_field(rho: CoefficientGrid) -> Result<Self> {
        let o = rho.order();
        let n = rho.cells();
        let source = CoefficientGrid::new(*rho.domain(), PrecisionLayout::all_wide(o)?);
        Ok(Self { rho, source, e_left: vec![0.0; n], e_nodes: vec![0.0; n * o] })
    }

    pub fn rho(&self) -> &CoefficientGrid {
        &self.rho
    }

    /// E at the order Gauss nodes of each cell, cell-major.
    pub fn e_nodes(&self) -> &[f64] {
        &self.e_nodes
    }

    /// Evaluate E inside cell i at reference coordinate ξ ∈ [-1, 1].
    pub fn e_at(&self, i: usize, xi: f64) -> f64 {
        let o = self.source.order();
        let mut q = [0.0; MAX_QUADRATURE_NODES];
        legendre_antiderivative_into(xi, &mut q[..o]);
        let mut acc = 0.0;
        for j in 0..o {
            acc += self.source.coeff(i, j) * q[j];
        }
        self.e_left[i] + 0.5 * self.source.domain().cell_width() * acc
    }

    /// ½ ∫ E² dx by per-cell Gauss quadrature.
    ///
    /// E is piecewise polynomial of degree ≤ order, so an (order+1)-node
    /// rule integrates E² exactly.
    pub fn electric_energy(&self) -> f64 {
        let o = self.source.order();
        let dom = self.source.domain();
        let rule = QuadratureRule::gauss_legendre(o + 1).expect("order is capped below 64");
        let mut total = 0.0;
        for i in 0..dom.cells() {
            let mut acc = 0.0;
            for (k, &xi) in rule.nodes().iter().enumerate() {
                let e = self.e_at(i, xi);
                acc += rule.weights()[k] * e * e;
            }
            total += 0.5 * dom.cell_width() * 0.5 * acc;
        }
        total
    }
}

/// Whether the acceleration field is solved self-consistently or forced
/// to zero (free streaming).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldMode {
    Poisson,
    Zero,
}

/// Transform the lanes of `f` along one axis from modal coefficients to
/// values at that axis's Gauss nodes, writing into the full-f64 `out`.
/// `table[q·o + j] = P_j(ξ_q)` for the transformed axis.
fn modal_to_nodal(
    f: &PhaseSpaceGrid,
    table: &[f64],
    along: SweepAxis,
    out: &mut PhaseSpaceGrid,
) -> Result<()> {
    let ox = f.layout().order_x();
    let ov = f.layout().order_v();
    let lanes = f.layout().lanes();
    let mut vals = vec![0.0; lanes];
    let mut nodal = vec![0.0; lanes];
    for cell in 0..f.cells() {
        f.get_cell(cell, &mut vals)?;
        match along {
            SweepAxis::V => {
                for jx in 0..ox {
                    for q in 0..ov {
                        let mut acc = 0.0;
                        for jv in 0..ov {
                            acc += vals[jx * ov + jv] * table[q * ov + jv];
                        }
                        nodal[jx * ov + q] = acc;
                    }
                }
            }
            SweepAxis::X => {
                for q in 0..ox {
                    for jv in 0..ov {
                        let mut acc = 0.0;
                        for jx in 0..ox {
                            acc += vals[jx * ov + jv] * table[q * ox + jx];
                        }
                        nodal[q * ov + jv] = acc;
                    }
                }
            }
        }
        out.set_cell(cell, &nodal)?;
    }
    Ok(())
}

/// Inverse of [`modal_to_nodal`]: c_j = (2j+1)/2 Σ_q w_q P_j(ξ_q) u_q.
///
/// With o nodes this is the exact matrix inverse for degree < o, so a
/// round trip reproduces the modal coefficients up to rounding. The
/// destination may be mixed-precision; narrowing happens on store.
fn nodal_to_modal(
    nodal: &PhaseSpaceGrid,
    rule: &QuadratureRule,
    table: &[f64],
    along: SweepAxis,
    out: &mut PhaseSpaceGrid,
) -> Result<()> {
    let ox = nodal.layout().order_x();
    let ov = nodal.layout().order_v();
    let lanes = nodal.layout().lanes();
    let w = rule.weights();
    let mut vals = vec![0.0; lanes];
    let mut modal = vec![0.0; lanes];
    for cell in 0..nodal.cells() {
        nodal.get_cell(cell, &mut vals)?;
        match along {
            SweepAxis::V => {
                for jx in 0..ox {
                    for jv in 0..ov {
                        let mut acc = 0.0;
                        for q in 0..ov {
                            acc += w[q] * table[q * ov + jv] * vals[jx * ov + q];
                        }
                        modal[jx * ov + jv] = 0.5 * (2.0 * jv as f64 + 1.0) * acc;
                    }
                }
            }
            SweepAxis::X => {
                for jx in 0..ox {
                    for jv in 0..ov {
                        let mut acc = 0.0;
                        for q in 0..ox {
                            acc += w[q] * table[q * ox + jx] * vals[q * ov + jv];
                        }
                        modal[jx * ov + jv] = 0.5 * (2.0 * jx as f64 + 1.0) * acc;
                    }
                }
            }
        }
        out.set_cell(cell, &modal)?;
    }
    Ok(())
}

/// Strang-split Vlasov–Poisson integrator.
///
/// Owns the quadrature tables and two full-f64 nodal scratch grids so
/// repeated stepping performs no per-step allocation beyond the per-call
/// scratch of the cell transforms.
#[derive(Debug, Clone)]
pub struct VlasovStepper {
    dt: f64,
    mode: FieldMode,
    kernel: KernelKind,
    rule_x: QuadratureRule,
    rule_v: QuadratureRule,
    table_x: Vec<f64>,
    table_v: Vec<f64>,
    nodal: PhaseSpaceGrid,
    nodal_out: PhaseSpaceGrid,
    nus: Vec<f64>,
}

impl VlasovStepper {
    pub fn new(
        grid: &PhaseSpaceGrid,
        dt: f64,
        mode: FieldMode,
        kernel: KernelKind,
    ) -> Result<Self> {
        if !dt.is_finite() || dt < 0.0 {
            return Err(Error::InvalidArgument("time step must be finite and non-negative"));
        }
        let ox = grid.layout().order_x();
        let ov = grid.layout().order_v();
        let rule_x = QuadratureRule::gauss_legendre(ox)?;
        let rule_v = QuadratureRule::gauss_legendre(ov)?;
        let table_x = rule_x.basis_table(ox);
        let table_v = rule_v.basis_table(ov);
        let all_wide = PhaseLayout::all_wide(ox, ov)?;
        let nodal = PhaseSpaceGrid::new(*grid.dom_x(), *grid.dom_v(), all_wide.clone());
        let nodal_out = PhaseSpaceGrid::new(*grid.dom_x(), *grid.dom_v(), all_wide);
        let nus = vec![0.0; (grid.dom_v().cells() * ov).max(grid.dom_x().cells() * ox)];
        Ok(Self {
            dt,
            mode,
            kernel,
            rule_x,
            rule_v,
            table_x,
            table_v,
            nodal,
            nodal_out,
            nus,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn mode(&self) -> FieldMode {
        self.mode
    }

    fn check(&self, f: &PhaseSpaceGrid) -> Result<()> {
        if f.dom_x() != self.nodal.dom_x()
            || f.dom_v() != self.nodal.dom_v()
            || f.layout().order_x() != self.nodal.layout().order_x()
            || f.layout().order_v() != self.nodal.layout().order_v()
        {
            return Err(Error::GridMismatch("stepper was built for a different grid"));
        }
        Ok(())
    }

    /// Advance f by one Strang step of length dt and return the field
    /// state solved at the half-step midpoint.
    pub fn step(&mut self, f: &mut PhaseSpaceGrid) -> Result<FieldState> {
        self.check(f)?;
        self.advect_x(f, 0.5 * self.dt)?;
        let field = self.solve_field(f)?;
        self.advect_v(f, self.dt, &field)?;
        self.advect_x(f, 0.5 * self.dt)?;
        Ok(field)
    }

    /// Solve the field for the current state without advancing it.
    pub fn solve_field(&self, f: &PhaseSpaceGrid) -> Result<FieldState> {
        let rho = compute_density(f)?;
        match self.mode {
            FieldMode::Poisson => FieldState::solve_poisson(rho),
            FieldMode::Zero => FieldState::zero_field(rho),
        }
    }

    /// x-advection over `dt_part`: per (v-cell, v-node) row, ν = v·dt/h_x.
    fn advect_x(&mut self, f: &mut PhaseSpaceGrid, dt_part: f64) -> Result<()> {
        modal_to_nodal(f, &self.table_v, SweepAxis::V, &mut self.nodal)?;
        let dom_v = *f.dom_v();
        let ov = f.layout().order_v();
        let factor = dt_part / f.dom_x().cell_width();
        for iv in 0..dom_v.cells() {
            let c = dom_v.cell_center(iv);
            let half = 0.5 * dom_v.cell_width();
            for (q, &xi) in self.rule_v.nodes().iter().enumerate() {
                self.nus[iv * ov + q] = (c + half * xi) * factor;
            }
        }
        let rows = dom_v.cells() * ov;
        advect_rows(
            &self.nodal,
            &self.nus[..rows],
            SweepAxis::X,
            &mut self.nodal_out,
            self.kernel,
        )?;
        nodal_to_modal(&self.nodal_out, &self.rule_v, &self.table_v, SweepAxis::V, f)
    }

    /// v-advection over `dt_part`: per (x-cell, x-node) row, ν = E·dt/h_v.
    fn advect_v(&mut self, f: &mut PhaseSpaceGrid, dt_part: f64, field: &FieldState) -> Result<()> {
        modal_to_nodal(f, &self.table_x, SweepAxis::X, &mut self.nodal)?;
        let nx = f.dom_x().cells();
        let ox = f.layout().order_x();
        let factor = dt_part / f.dom_v().cell_width();
        let e = field.e_nodes();
        if e.len() != nx * ox {
            return Err(Error::LengthMismatch { expected: nx * ox, got: e.len() });
        }
        for r in 0..nx * ox {
            self.nus[r] = e[r] * factor;
        }
        advect_rows(
            &self.nodal,
            &self.nus[..nx * ox],
            SweepAxis::V,
            &mut self.nodal_out,
            self.kernel,
        )?;
        nodal_to_modal(&self.nodal_out, &self.rule_x, &self.table_x, SweepAxis::X, f)
    }
}
