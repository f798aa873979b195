//! Projection onto the per-cell basis, reconstruction, mass and L2 norms.
//!
//! Projection of f onto cell i (center x_i, width h) is
//!
//! ```text
//! c_ij = (2j+1)/2 Σ_q w_q f(x_i + (h/2) ξ_q) P_j(ξ_q)
//! ```
//!
//! which is the Gauss–Legendre approximation of the L2-orthogonal
//! projection; it is exact when f is a polynomial of degree ≤ 2·quad_n − 1
//! inside the cell. Reductions (mass, norms) always run serially in cell
//! order so results do not depend on thread count.

use alloc::vec;

use crate::basis::{legendre_all_into, QuadratureRule, MAX_QUADRATURE_NODES};
use crate::error::{Error, Result};
use crate::grid::{CoefficientGrid, Domain1D, PrecisionLayout};
use crate::math;

/// Default projection quadrature: exact for the basis itself, and
/// over-integrating (≥ 8 nodes) for non-polynomial initial data so that
/// projection error stays below scheme error.
pub fn default_projection_nodes(order: usize) -> usize {
    order.max(8)
}

/// Project `f` with an explicit node count (`quad_n ≥ layout.order()`).
pub fn project_function_with<F>(
    f: F,
    dom: Domain1D,
    layout: PrecisionLayout,
    quad_n: usize,
) -> Result<CoefficientGrid>
where
    F: Fn(f64) -> f64,
{
    let o = layout.order();
    if quad_n < o {
        return Err(Error::InvalidArgument("projection quadrature has fewer nodes than the order"));
    }
    let rule = QuadratureRule::gauss_legendre(quad_n)?;
    let table = rule.basis_table(o);
    let h = dom.cell_width();
    let mut grid = CoefficientGrid::new(dom, layout);
    let mut samples = vec![0.0; quad_n];
    let mut cell = vec![0.0; o];
    for i in 0..dom.cells() {
        let xc = dom.cell_center(i);
        for (s, &xi) in samples.iter_mut().zip(rule.nodes()) {
            *s = f(xc + 0.5 * h * xi);
        }
        for (j, c) in cell.iter_mut().enumerate() {
            let mut acc = 0.0;
            for q in 0..quad_n {
                acc += rule.weights()[q] * samples[q] * table[q * o + j];
            }
            *c = 0.5 * (2.0 * j as f64 + 1.0) * acc;
        }
        grid.set_cell(i, &cell)?;
    }
    Ok(grid)
}

/// Project `f` with the default node count.
pub fn project_function<F>(f: F, dom: Domain1D, layout: PrecisionLayout) -> Result<CoefficientGrid>
where
    F: Fn(f64) -> f64,
{
    let quad_n = default_projection_nodes(layout.order());
    project_function_with(f, dom, layout, quad_n)
}

/// Evaluate the piecewise-polynomial reconstruction at `x`.
///
/// `x` is wrapped periodically into [x_min, x_max); the owning cell is the
/// half-open interval [x_{i-1/2}, x_{i+1/2}) containing the wrapped point.
pub fn evaluate(grid: &CoefficientGrid, x: f64) -> f64 {
    let dom = grid.domain();
    let o = grid.order();
    let t = (x - dom.x_min()) / dom.cell_width();
    let base = math::floor(t);
    let xi = 2.0 * (t - base) - 1.0;
    let n = dom.cells() as i64;
    let i = (base as i64).rem_euclid(n) as usize;

    let mut cell = [0.0; MAX_QUADRATURE_NODES];
    grid.get_cell(i, &mut cell[..o]).expect("cell index in range by construction");
    let mut basis = [0.0; MAX_QUADRATURE_NODES];
    legendre_all_into(xi, &mut basis[..o]);
    let mut acc = 0.0;
    for j in 0..o {
        acc += cell[j] * basis[j];
    }
    acc
}

/// h · Σ_i c_i0 — the integral of the reconstruction over the domain.
///
/// c_0 is the cell average, so this is exact for the stored data. The sum
/// runs in ascending cell order, serially, for bit-reproducibility.
pub fn total_mass(grid: &CoefficientGrid) -> f64 {
    let h = grid.domain().cell_width();
    let n = grid.cells();
    let mut acc = 0.0;
    if grid.layout().wide() > 0 {
        let d = grid.layout().wide();
        for i in 0..n {
            acc += grid.wide_store()[i * d];
        }
    } else {
        let nn = grid.layout().narrow();
        for i in 0..n {
            acc += f64::from(grid.narrow_store()[i * nn]);
        }
    }
    h * acc
}

/// L2 norm of the reconstruction: sqrt(Σ_i h Σ_j c_ij² / (2j+1)).
///
/// Follows from ∫_{-1}^{1} P_j P_l = 2 δ_{jl}/(2j+1) and the ξ → x scaling
/// factor h/2.
pub fn l2_norm(grid: &CoefficientGrid) -> f64 {
    let o = grid.order();
    let h = grid.domain().cell_width();
    let mut cell = [0.0; MAX_QUADRATURE_NODES];
    let mut acc = 0.0;
    for i in 0..grid.cells() {
        grid.get_cell(i, &mut cell[..o]).expect("cell index in range");
        for (j, &c) in cell[..o].iter().enumerate() {
            acc += c * c / (2.0 * j as f64 + 1.0);
        }
    }
    math::sqrt(h * acc)
}

/// L2 distance between two reconstructions on the same domain and order.
///
/// Layouts may differ (that is the point: comparing a mixed-precision run
/// against an all-f64 reference); both sides promote to f64 first.
pub fn l2_error(a: &CoefficientGrid, b: &CoefficientGrid) -> Result<f64> {
    if a.domain() != b.domain() {
        return Err(Error::GridMismatch("domains differ"));
    }
    if a.order() != b.order() {
        return Err(Error::GridMismatch("orders differ"));
    }
    let o = a.order();
    let h = a.domain().cell_width();
    let mut ca = [0.0; MAX_QUADRATURE_NODES];
    let mut cb = [0.0; MAX_QUADRATURE_NODES];
    let mut acc = 0.0;
    for i in 0..a.cells() {
        a.get_cell(i, &mut ca[..o]).expect("cell index in range");
        b.get_cell(i, &mut cb[..o]).expect("cell index in range");
        for j in 0..o {
            let d = ca[j] - cb[j];
            acc += d * d / (2.0 * j as f64 + 1.0);
        }
    }
    Ok(math::sqrt(h * acc))
}
