//! Phase-space (x, v) grids with tensor-product Legendre cells.
//!
//! A cell (ix, iv) carries order_x · order_v coefficients c_{jx,jv}; the
//! in-cell reconstruction is Σ c_{jx,jv} P_jx(ξ) P_jv(η). Coefficient
//! magnitudes decay like h_x^{jx} h_v^{jv}, so the precision split ranks by
//! total degree: (jx, jv) is stored wide (f64) iff jx + jv < d. With d = 0
//! everything is narrow; with d = order_x + order_v − 1 everything is wide.
//! This reduces to the 1D rule when one order is 1.
//!
//! Cells are linearized x-fastest (cell = iv·N_x + ix) so x-lines are
//! contiguous; within a cell, lanes are linearized v-fastest
//! (j = jx·order_v + jv). Both stores are cell-major like the 1D grid.

use alloc::vec;
use alloc::vec::Vec;

use crate::basis::{legendre_all_into, QuadratureRule, MAX_QUADRATURE_NODES};
use crate::error::{Error, Result};
use crate::grid::{narrow_value, Domain1D};
use crate::math;

/// Where a lane j = jx·order_v + jv lives inside a cell's stores.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Slot {
    Wide(usize),
    Narrow(usize),
}

/// Tensor order and total-degree precision split of a phase-space cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseLayout {
    order_x: usize,
    order_v: usize,
    wide_diag: usize,
    slots: Vec<Slot>,
    wide_count: usize,
}

impl PhaseLayout {
    /// (jx, jv) is wide iff jx + jv < wide_diag.
    pub fn new(order_x: usize, order_v: usize, wide_diag: usize) -> Result<Self> {
        if order_x == 0 || order_v == 0 {
            return Err(Error::InvalidArgument("phase orders must be >= 1"));
        }
        if order_x > MAX_QUADRATURE_NODES || order_v > MAX_QUADRATURE_NODES {
            return Err(Error::InvalidArgument("phase order exceeds 64"));
        }
        if wide_diag > order_x + order_v - 1 {
            return Err(Error::InvalidArgument("wide_diag exceeds max total degree + 1"));
        }
        let mut slots = Vec::with_capacity(order_x * order_v);
        let (mut nw, mut nn) = (0, 0);
        for jx in 0..order_x {
            for jv in 0..order_v {
                if jx + jv < wide_diag {
                    slots.push(Slot::Wide(nw));
                    nw += 1;
                } else {
                    slots.push(Slot::Narrow(nn));
                    nn += 1;
                }
            }
        }
        Ok(Self { order_x, order_v, wide_diag, slots, wide_count: nw })
    }

    pub fn all_wide(order_x: usize, order_v: usize) -> Result<Self> {
        Self::new(order_x, order_v, order_x + order_v - 1)
    }

    pub fn order_x(&self) -> usize {
        self.order_x
    }

    pub fn order_v(&self) -> usize {
        self.order_v
    }

    /// The d in "wide iff jx + jv < d".
    pub fn wide_diag(&self) -> usize {
        self.wide_diag
    }

    pub fn lanes(&self) -> usize {
        self.order_x * self.order_v
    }

    pub fn wide_count(&self) -> usize {
        self.wide_count
    }

    pub fn narrow_count(&self) -> usize {
        self.lanes() - self.wide_count
    }

    pub fn bytes_per_cell(&self) -> usize {
        8 * self.wide_count() + 4 * self.narrow_count()
    }

    #[inline]
    pub(crate) fn slot(&self, j: usize) -> Slot {
        self.slots[j]
    }

    /// Layout of the axis-swapped grid; the wide set is preserved because
    /// the total degree jx + jv is symmetric.
    pub fn transposed(&self) -> Self {
        Self::new(self.order_v, self.order_x, self.wide_diag)
            .expect("transposed layout is valid by construction")
    }
}

/// Mixed-precision coefficients for every (x, v) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceGrid {
    dom_x: Domain1D,
    dom_v: Domain1D,
    layout: PhaseLayout,
    wide_store: Vec<f64>,
    narrow_store: Vec<f32>,
}

impl PhaseSpaceGrid {
    pub fn new(dom_x: Domain1D, dom_v: Domain1D, layout: PhaseLayout) -> Self {
        let cells = dom_x.cells() * dom_v.cells();
        let (nw, nn) = (layout.wide_count(), layout.narrow_count());
        Self {
            dom_x,
            dom_v,
            layout,
            wide_store: vec![0.0; cells * nw],
            narrow_store: vec![0.0; cells * nn],
        }
    }

    pub fn dom_x(&self) -> &Domain1D {
        &self.dom_x
    }

    pub fn dom_v(&self) -> &Domain1D {
        &self.dom_v
    }

    pub fn layout(&self) -> &PhaseLayout {
        &self.layout
    }

    pub fn cells(&self) -> usize {
        self.dom_x.cells() * self.dom_v.cells()
    }

    #[inline]
    pub fn cell_index(&self, ix: usize, iv: usize) -> usize {
        iv * self.dom_x.cells() + ix
    }

    pub fn memory_bytes(&self) -> usize {
        self.cells() * self.layout.bytes_per_cell()
    }

    pub(crate) fn wide_store(&self) -> &[f64] {
        &self.wide_store
    }

    pub(crate) fn narrow_store(&self) -> &[f32] {
        &self.narrow_store
    }

    pub(crate) fn stores_mut(&mut self) -> (&mut [f64], &mut [f32]) {
        (&mut self.wide_store, &mut self.narrow_store)
    }

    /// Coefficient c_{(ix,iv),(jx,jv)} promoted to f64.
    pub fn coeff(&self, ix: usize, iv: usize, jx: usize, jv: usize) -> f64 {
        let cell = self.cell_index(ix, iv);
        let j = jx * self.layout.order_v() + jv;
        match self.layout.slot(j) {
            Slot::Wide(off) => self.wide_store[cell * self.layout.wide_count() + off],
            Slot::Narrow(off) => {
                f64::from(self.narrow_store[cell * self.layout.narrow_count() + off])
            }
        }
    }

    /// Copy one cell's lanes (v-fastest order) into `out`.
    pub fn get_cell(&self, cell: usize, out: &mut [f64]) -> Result<()> {
        if cell >= self.cells() {
            return Err(Error::IndexOutOfRange { index: cell, len: self.cells() });
        }
        if out.len() != self.layout.lanes() {
            return Err(Error::LengthMismatch { expected: self.layout.lanes(), got: out.len() });
        }
        let (nw, nn) = (self.layout.wide_count(), self.layout.narrow_count());
        for (j, o) in out.iter_mut().enumerate() {
            *o = match self.layout.slot(j) {
                Slot::Wide(off) => self.wide_store[cell * nw + off],
                Slot::Narrow(off) => f64::from(self.narrow_store[cell * nn + off]),
            };
        }
        Ok(())
    }

    /// Store one cell's lanes, narrowing those outside the wide set.
    pub fn set_cell(&mut self, cell: usize, values: &[f64]) -> Result<()> {
        if cell >= self.cells() {
            return Err(Error::IndexOutOfRange { index: cell, len: self.cells() });
        }
        if values.len() != self.layout.lanes() {
            return Err(Error::LengthMismatch {
                expected: self.layout.lanes(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let (nw, nn) = (self.layout.wide_count(), self.layout.narrow_count());
        // Validate every narrow lane before writing anything, so a failed
        // store leaves the cell as it was.
        for (j, &v) in values.iter().enumerate() {
            if matches!(self.layout.slot(j), Slot::Narrow(_)) {
                narrow_value(v)?;
            }
        }
        for (j, &v) in values.iter().enumerate() {
            match self.layout.slot(j) {
                Slot::Wide(off) => self.wide_store[cell * nw + off] = v,
                Slot::Narrow(off) => {
                    self.narrow_store[cell * nn + off] = v as f32;
                }
            }
        }
        Ok(())
    }

    /// Axis-swapped copy: cell (ix, iv) ↦ (iv, ix), lane (jx, jv) ↦ (jv, jx).
    /// Values are copied within their precision class, so the result is
    /// bit-exact and transposing twice is the identity.
    pub fn transposed(&self) -> PhaseSpaceGrid {
        let layout_t = self.layout.transposed();
        let mut out = PhaseSpaceGrid::new(self.dom_v, self.dom_x, layout_t);
        let (nx, nv) = (self.dom_x.cells(), self.dom_v.cells());
        let (ox, ov) = (self.layout.order_x(), self.layout.order_v());
        let (nw, nn) = (self.layout.wide_count(), self.layout.narrow_count());
        for iv in 0..nv {
            for ix in 0..nx {
                let cell = iv * nx + ix;
                let cell_t = ix * nv + iv;
                for jx in 0..ox {
                    for jv in 0..ov {
                        let j = jx * ov + jv;
                        let j_t = jv * ox + jx;
                        match (self.layout.slot(j), out.layout.slot(j_t)) {
                            (Slot::Wide(a), Slot::Wide(b)) => {
                                out.wide_store[cell_t * nw + b] =
                                    self.wide_store[cell * nw + a];
                            }
                            (Slot::Narrow(a), Slot::Narrow(b)) => {
                                out.narrow_store[cell_t * nn + b] =
                                    self.narrow_store[cell * nn + a];
                            }
                            // jx + jv is invariant under the swap, so the
                            // class can never change.
                            _ => unreachable!("transpose changed a lane's precision class"),
                        }
                    }
                }
            }
        }
        out
    }

    /// Convert to another precision split of the same tensor order.
    pub fn with_layout(&self, layout: PhaseLayout) -> Result<Self> {
        if layout.order_x() != self.layout.order_x() || layout.order_v() != self.layout.order_v()
        {
            return Err(Error::GridMismatch("tensor orders differ"));
        }
        let mut out = Self::new(self.dom_x, self.dom_v, layout);
        let mut cell = vec![0.0; self.layout.lanes()];
        for c in 0..self.cells() {
            self.get_cell(c, &mut cell)?;
            out.set_cell(c, &cell)?;
        }
        Ok(out)
    }
}

/// Project f(x, v) onto the grid with per-dimension Gauss quadrature
/// (node counts default to max(order, 8) in each dimension).
pub fn project_phase_function<F>(
    f: F,
    dom_x: Domain1D,
    dom_v: Domain1D,
    layout: PhaseLayout,
) -> Result<PhaseSpaceGrid>
where
    F: Fn(f64, f64) -> f64,
{
    let (ox, ov) = (layout.order_x(), layout.order_v());
    let qx = crate::project::default_projection_nodes(ox);
    let qv = crate::project::default_projection_nodes(ov);
    let rx = QuadratureRule::gauss_legendre(qx)?;
    let rv = QuadratureRule::gauss_legendre(qv)?;
    let tx = rx.basis_table(ox);
    let tv = rv.basis_table(ov);
    let (hx, hv) = (dom_x.cell_width(), dom_v.cell_width());
    let mut grid = PhaseSpaceGrid::new(dom_x, dom_v, layout.clone());
    let mut samples = vec![0.0; qx * qv];
    let mut cell = vec![0.0; ox * ov];
    for iv in 0..dom_v.cells() {
        for ix in 0..dom_x.cells() {
            let xc = dom_x.cell_center(ix);
            let vc = dom_v.cell_center(iv);
            for (qxi, &xn) in rx.nodes().iter().enumerate() {
                for (qvi, &vn) in rv.nodes().iter().enumerate() {
                    samples[qxi * qv + qvi] = f(xc + 0.5 * hx * xn, vc + 0.5 * hv * vn);
                }
            }
            for jx in 0..ox {
                for jv in 0..ov {
                    let mut acc = 0.0;
                    for qxi in 0..qx {
                        let px = tx[qxi * ox + jx] * rx.weights()[qxi];
                        let mut inner = 0.0;
                        for qvi in 0..qv {
                            inner +=
                                rv.weights()[qvi] * samples[qxi * qv + qvi] * tv[qvi * ov + jv];
                        }
                        acc += px * inner;
                    }
                    cell[jx * ov + jv] = 0.25
                        * (2.0 * jx as f64 + 1.0)
                        * (2.0 * jv as f64 + 1.0)
                        * acc;
                }
            }
            grid.set_cell(iv * dom_x.cells() + ix, &cell)?;
        }
    }
    Ok(grid)
}

/// Evaluate the reconstruction at (x, v), with periodic wrap in both axes.
pub fn evaluate_phase(grid: &PhaseSpaceGrid, x: f64, v: f64) -> f64 {
    let (ox, ov) = (grid.layout.order_x(), grid.layout.order_v());
    let locate = |dom: &Domain1D, y: f64| -> (usize, f64) {
        let t = (y - dom.x_min()) / dom.cell_width();
        let base = math::floor(t);
        let xi = 2.0 * (t - base) - 1.0;
        let n = dom.cells() as i64;
        ((base as i64).rem_euclid(n) as usize, xi)
    };
    let (ix, xi) = locate(&grid.dom_x, x);
    let (iv, eta) = locate(&grid.dom_v, v);
    let mut px = [0.0; MAX_QUADRATURE_NODES];
    let mut pv = [0.0; MAX_QUADRATURE_NODES];
    legendre_all_into(xi, &mut px[..ox]);
    legendre_all_into(eta, &mut pv[..ov]);
    let cell = grid.cell_index(ix, iv);
    let mut lanes = vec![0.0; ox * ov];
    grid.get_cell(cell, &mut lanes).expect("cell in range by construction");
    let mut acc = 0.0;
    for jx in 0..ox {
        let mut inner = 0.0;
        for jv in 0..ov {
            inner += lanes[jx * ov + jv] * pv[jv];
        }
        acc += px[jx] * inner;
    }
    acc
}

/// Total mass h_x·h_v·Σ c_{(0,0)}, accumulated serially cell-by-cell.
pub fn phase_mass(grid: &PhaseSpaceGrid) -> f64 {
    let (nw, nn) = (grid.layout.wide_count(), grid.layout.narrow_count());
    let mut acc = 0.0;
    match grid.layout.slot(0) {
        Slot::Wide(off) => {
            for c in 0..grid.cells() {
                acc += grid.wide_store[c * nw + off];
            }
        }
        Slot::Narrow(off) => {
            for c in 0..grid.cells() {
                acc += f64::from(grid.narrow_store[c * nn + off]);
            }
        }
    }
    grid.dom_x.cell_width() * grid.dom_v.cell_width() * acc
}

/// L2 norm over phase space:
/// sqrt(Σ_cells h_x h_v Σ_lanes c² / ((2jx+1)(2jv+1))).
pub fn phase_l2_norm(grid: &PhaseSpaceGrid) -> f64 {
    let (ox, ov) = (grid.layout.order_x(), grid.layout.order_v());
    let mut lanes = vec![0.0; ox * ov];
    let mut acc = 0.0;
    for c in 0..grid.cells() {
        grid.get_cell(c, &mut lanes).expect("cell in range");
        for jx in 0..ox {
            for jv in 0..ov {
                let cc = lanes[jx * ov + jv];
                acc += cc * cc / ((2.0 * jx as f64 + 1.0) * (2.0 * jv as f64 + 1.0));
            }
        }
    }
    math::sqrt(grid.dom_x.cell_width() * grid.dom_v.cell_width() * acc)
}

/// L2 distance between two grids of identical domains and tensor order.
pub fn phase_l2_error(a: &PhaseSpaceGrid, b: &PhaseSpaceGrid) -> Result<f64> {
    if a.dom_x != b.dom_x || a.dom_v != b.dom_v {
        return Err(Error::GridMismatch("phase domains differ"));
    }
    if a.layout.order_x() != b.layout.order_x() || a.layout.order_v() != b.layout.order_v() {
        return Err(Error::GridMismatch("phase orders differ"));
    }
    let lanes_n = a.layout.lanes();
    let (ox, ov) = (a.layout.order_x(), a.layout.order_v());
    let mut la = vec![0.0; lanes_n];
    let mut lb = vec![0.0; lanes_n];
    let mut acc = 0.0;
    for c in 0..a.cells() {
        a.get_cell(c, &mut la).expect("cell in range");
        b.get_cell(c, &mut lb).expect("cell in range");
        for jx in 0..ox {
            for jv in 0..ov {
                let d = la[jx * ov + jv] - lb[jx * ov + jv];
                acc += d * d / ((2.0 * jx as f64 + 1.0) * (2.0 * jv as f64 + 1.0));
            }
        }
    }
    Ok(math::sqrt(a.dom_x.cell_width() * a.dom_v.cell_width() * acc))
}

/// Fraction of L1 mass sitting in the outermost v-cell rows. The v-domain
/// is a truncation of ℝ treated as periodic, which is only physical while
/// the distribution stays negligible at the cut; drivers warn when this
/// ratio grows past ~1e-12.
pub fn boundary_mass_ratio(grid: &PhaseSpaceGrid) -> f64 {
    let (nx, nv) = (grid.dom_x.cells(), grid.dom_v.cells());
    let mut total = 0.0;
    let mut boundary = 0.0;
    for iv in 0..nv {
        for ix in 0..nx {
            let m = grid.coeff(ix, iv, 0, 0).abs();
            total += m;
            if iv == 0 || iv == nv - 1 {
                boundary += m;
            }
        }
    }
    if total == 0.0 {
        0.0
    } else {
        boundary / total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doms() -> (Domain1D, Domain1D) {
        (
            Domain1D::new(0.0, 1.0, 4).unwrap(),
            Domain1D::new(-2.0, 2.0, 3).unwrap(),
        )
    }

    #[test]
    fn layout_wide_set_by_total_degree() {
        let l = PhaseLayout::new(3, 2, 2).unwrap();
        // wide: (0,0), (0,1), (1,0); narrow: (1,1), (2,0), (2,1)
        assert_eq!(l.wide_count(), 3);
        assert_eq!(l.narrow_count(), 3);
        assert_eq!(l.slot(0), Slot::Wide(0)); // (0,0)
        assert_eq!(l.slot(1), Slot::Wide(1)); // (0,1)
        assert_eq!(l.slot(2), Slot::Wide(2)); // (1,0)
        assert_eq!(l.slot(3), Slot::Narrow(0)); // (1,1)
        assert_eq!(l.slot(4), Slot::Narrow(1)); // (2,0)
        assert_eq!(l.bytes_per_cell(), 3 * 8 + 3 * 4);
        assert!(PhaseLayout::new(3, 2, 5).is_err());
        assert_eq!(PhaseLayout::all_wide(3, 2).unwrap().narrow_count(), 0);
    }

    #[test]
    fn one_dimensional_degeneration_matches_1d_rule() {
        // With order_v = 1 the rule "jx + 0 < d" is the 1D "j < d".
        let l = PhaseLayout::new(4, 1, 2).unwrap();
        assert_eq!(l.wide_count(), 2);
        assert_eq!(l.narrow_count(), 2);
    }

    #[test]
    fn set_get_round_trip_and_classes() {
        let (dx, dv) = doms();
        let layout = PhaseLayout::new(2, 2, 2).unwrap(); // narrow: (1,1) only
        let mut g = PhaseSpaceGrid::new(dx, dv, layout);
        let vals = [0.1, 0.2, 0.3, 0.1]; // lanes (0,0),(0,1),(1,0),(1,1)
        g.set_cell(5, &vals).unwrap();
        assert_eq!(g.coeff(1, 1, 0, 0), 0.1); // cell 5 = iv1*4 + ix1
        assert_eq!(g.coeff(1, 1, 1, 0), 0.3);
        assert_eq!(g.coeff(1, 1, 1, 1), f64::from(0.1f32));
        let mut out = [0.0; 4];
        g.get_cell(5, &mut out).unwrap();
        assert_eq!(out[..3], vals[..3]);
        assert_eq!(out[3], f64::from(0.1f32));
        assert!(g.set_cell(12, &vals).is_err());
        assert!(g.set_cell(0, &vals[..3]).is_err());
        assert!(g.set_cell(0, &[0.0, 0.0, 0.0, 1e39]).is_err());
    }

    #[test]
    fn memory_accounting() {
        let (dx, dv) = doms();
        let g = PhaseSpaceGrid::new(dx, dv, PhaseLayout::new(2, 2, 2).unwrap());
        assert_eq!(g.memory_bytes(), 12 * (3 * 8 + 4));
    }

    #[test]
    fn projection_of_separable_function() {
        let (dx, dv) = doms();
        let g = project_phase_function(
            |x, v| (1.0 + x) * v,
            dx,
            dv,
            PhaseLayout::all_wide(3, 3).unwrap(),
        )
        .unwrap();
        // Exact tensor polynomial: reconstruction reproduces it pointwise.
        for &(x, v) in &[(0.12, -1.7), (0.77, 0.3), (0.5, 1.99)] {
            let want = (1.0 + x) * v;
            assert!((evaluate_phase(&g, x, v) - want).abs() < 1e-13);
        }
        // Modes beyond degree (1,1) vanish.
        assert!(g.coeff(2, 1, 2, 0).abs() < 1e-14);
        assert!(g.coeff(2, 1, 0, 2).abs() < 1e-14);
    }

    #[test]
    fn mass_and_norm_of_constant() {
        let (dx, dv) = doms();
        let g =
            project_phase_function(|_, _| 0.5, dx, dv, PhaseLayout::all_wide(2, 2).unwrap())
                .unwrap();
        // Domain measure is 1 × 4.
        assert!((phase_mass(&g) - 2.0).abs() < 1e-14);
        assert!((phase_l2_norm(&g) - (0.25f64 * 4.0).sqrt()).abs() < 1e-13);
        assert!((phase_l2_error(&g, &g).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn transpose_is_a_bit_exact_involution() {
        let (dx, dv) = doms();
        let layout = PhaseLayout::new(3, 2, 2).unwrap();
        let g = project_phase_function(
            |x, v| (3.0 * x).sin() * (-v * v).exp() + 0.1 * x * v,
            dx,
            dv,
            layout,
        )
        .unwrap();
        let t = g.transposed();
        assert_eq!(t.dom_x(), g.dom_v());
        assert_eq!(t.layout().order_x(), 2);
        // Coefficients swap indices exactly.
        assert_eq!(t.coeff(2, 3, 1, 2), g.coeff(3, 2, 2, 1));
        let back = t.transposed();
        assert_eq!(back, g);
    }

    #[test]
    fn boundary_ratio_flags_wide_distributions() {
        let dx = Domain1D::new(0.0, 1.0, 4).unwrap();
        let dv = Domain1D::new(-6.0, 6.0, 16).unwrap();
        let narrow = project_phase_function(
            |_, v| (-v * v).exp(),
            dx,
            dv,
            PhaseLayout::all_wide(2, 2).unwrap(),
        )
        .unwrap();
        assert!(boundary_mass_ratio(&narrow) < 1e-12);
        let wide = project_phase_function(
            |_, v| (-v * v / 36.0).exp(),
            dx,
            dv,
            PhaseLayout::all_wide(2, 2).unwrap(),
        )
        .unwrap();
        assert!(boundary_mass_ratio(&wide) > 1e-3);
    }
}
