//! Semi-Lagrangian DG advection: shift decomposition, the exact two-cell
//! update matrices, and the constant-shift / per-row sweeps.
//!
//! See the crate-level docs for the derivation of the update
//! `c_i ← A·c_{i−i*−1} + B·c_{i−i*}`. This module computes A and B by exact
//! Gauss–Legendre quadrature on the two characteristic sub-intervals and
//! drives the kernels over whole grids. Everything arithmetic happens in
//! f64; mixed-precision storage only enters at the final store of each
//! destination cell.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::basis::{legendre_all_into, QuadratureRule, MAX_QUADRATURE_NODES};
use crate::error::{Error, Result};
use crate::grid::{narrow_value, CoefficientGrid};
use crate::kernel::{self, ChunkKernel, LineTask};
use crate::math;
use crate::par;
use crate::phase::{PhaseSpaceGrid, Slot};

/// Which inner-loop implementation to run. Both produce bit-identical
/// results; `Specialized` falls back to `Generic` when no monomorphized
/// kernel exists for the grid's (order, wide) pair. The advection entry
/// points return the kind that actually ran.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Specialized,
    Generic,
}

/// ν = i* + α with i* = ⌊ν⌋ and α ∈ [0, 1).
///
/// The integer part becomes a cell rotation; only α enters the matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftDecomposition {
    nu: f64,
    i_star: i64,
    alpha: f64,
}

impl ShiftDecomposition {
    pub fn new(nu: f64) -> Result<Self> {
        if !nu.is_finite() {
            return Err(Error::NonFinite);
        }
        if nu.abs() >= 9.007_199_254_740_992e15 {
            // Beyond 2^53 the fractional part is not representable at all.
            return Err(Error::InvalidArgument("CFL number too large to split"));
        }
        let mut base = math::floor(nu);
        let mut alpha = nu - base;
        // For nu just below an integer, nu - floor(nu) can round up to
        // exactly 1.0; fold that into the integer part.
        if alpha >= 1.0 {
            base += 1.0;
            alpha = 0.0;
        }
        Ok(Self { nu, i_star: base as i64, alpha })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn i_star(&self) -> i64 {
        self.i_star
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// The update matrices for one fractional shift α and order o:
///
/// ```text
/// far_jl  = (2j+1)/2 ∫_{-1}^{2α-1} P_l(ξ + 2 − 2α) P_j(ξ) dξ
/// near_jl = (2j+1)/2 ∫_{2α-1}^{1}  P_l(ξ − 2α)     P_j(ξ) dξ
/// ```
///
/// `far` weights the upstream cell i − i* − 1, `near` the cell i − i*.
/// Each integrand has degree ≤ 2(o−1), so mapping the sub-interval onto
/// [-1, 1] and applying the o-node Gauss–Legendre rule is exact.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftMatrices {
    alpha: f64,
    order: usize,
    far: Vec<f64>,
    near: Vec<f64>,
}

impl ShiftMatrices {
    pub fn new(alpha: f64, order: usize) -> Result<Self> {
        if !alpha.is_finite() || !(0.0..1.0).contains(&alpha) {
            return Err(Error::InvalidArgument("fractional shift must lie in [0, 1)"));
        }
        let rule = QuadratureRule::gauss_legendre(order)?;
        let o = order;
        let mut far = vec![0.0; o * o];
        let mut near = vec![0.0; o * o];
        let mut pj = [0.0; MAX_QUADRATURE_NODES];
        let mut pl = [0.0; MAX_QUADRATURE_NODES];
        for (q, &x) in rule.nodes().iter().enumerate() {
            let w = rule.weights()[q];
            // Far piece, mapped by ξ = (α−1) + αx: target coordinate runs
            // over [−1, 2α−1], source coordinate ξ + 2 − 2α over [1−2α, 1].
            legendre_all_into((alpha - 1.0) + alpha * x, &mut pj[..o]);
            legendre_all_into((1.0 - alpha) + alpha * x, &mut pl[..o]);
            for j in 0..o {
                for l in 0..o {
                    far[j * o + l] += w * pj[j] * pl[l];
                }
            }
            // Near piece, mapped by ξ = α + (1−α)x: target over [2α−1, 1],
            // source coordinate ξ − 2α over [−1, 1−2α].
            legendre_all_into(alpha + (1.0 - alpha) * x, &mut pj[..o]);
            legendre_all_into(-alpha + (1.0 - alpha) * x, &mut pl[..o]);
            for j in 0..o {
                for l in 0..o {
                    near[j * o + l] += w * pj[j] * pl[l];
                }
            }
        }
        for j in 0..o {
            let row_scale = 0.5 * (2.0 * j as f64 + 1.0);
            for l in 0..o {
                far[j * o + l] *= row_scale * alpha;
                near[j * o + l] *= row_scale * (1.0 - alpha);
            }
        }
        Ok(Self { alpha, order, far, near })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Row-major o×o weights of the farther upstream cell.
    pub fn far(&self) -> &[f64] {
        &self.far
    }

    /// Row-major o×o weights of the nearer upstream cell.
    pub fn near(&self) -> &[f64] {
        &self.near
    }
}

fn select_kernel(kind: KernelKind, order: usize, wide: usize) -> (ChunkKernel, KernelKind) {
    match kind {
        KernelKind::Generic => (kernel::generic_chunk as ChunkKernel, KernelKind::Generic),
        KernelKind::Specialized => match kernel::specialized(order, wide) {
            Some(k) => (k, KernelKind::Specialized),
            None => (kernel::generic_chunk as ChunkKernel, KernelKind::Generic),
        },
    }
}

/// dst cell i = src cell (i + shift) mod cells, copied bit-exactly.
fn rotate_copy<T: Copy>(src: &[T], dst: &mut [T], per_cell: usize, cells: usize, shift: usize) {
    if per_cell == 0 {
        return;
    }
    let split = (cells - shift) * per_cell;
    let s = shift * per_cell;
    dst[..split].copy_from_slice(&src[s..]);
    dst[split..].copy_from_slice(&src[..s]);
}

/// One constant-shift step: dst ← advect(src) by ν cell widths.
///
/// Preconditions: same domain and layout; `src` and `dst` must be distinct
/// buffers (enforced by the borrow checker — the step is a projection of
/// the translated field, which reads two source cells per destination cell
/// and cannot run in place). Integer ν is a bit-exact cell rotation. On a
/// narrow-store overflow the destination contents are unspecified and a
/// deterministic error (independent of threading) is returned.
pub fn advect_constant_with(
    src: &CoefficientGrid,
    nu: f64,
    dst: &mut CoefficientGrid,
    kernel_kind: KernelKind,
) -> Result<KernelKind> {
    if src.domain() != dst.domain() || src.layout() != dst.layout() {
        return Err(Error::GridMismatch("advection needs identical domain and layout"));
    }
    let dec = ShiftDecomposition::new(nu)?;
    let n = src.cells();
    let o = src.order();
    let d = src.layout().wide();
    if dec.alpha() == 0.0 {
        let s = (-dec.i_star()).rem_euclid(n as i64) as usize;
        let (dw, dn) = dst.stores_mut();
        rotate_copy(src.wide_store(), dw, d, n, s);
        rotate_copy(src.narrow_store(), dn, o - d, n, s);
        return Ok(kernel_kind);
    }
    let mats = ShiftMatrices::new(dec.alpha(), o)?;
    let shift = (-dec.i_star() - 1).rem_euclid(n as i64) as usize;
    let task = LineTask {
        src_wide: src.wide_store(),
        src_narrow: src.narrow_store(),
        far_mat: mats.far(),
        near_mat: mats.near(),
        order: o,
        wide: d,
        cells: n,
        shift,
    };
    let (run, used) = select_kernel(kernel_kind, o, d);
    let (dw, dn) = dst.stores_mut();
    let ok = par::process_cell_chunks(dw, dn, d, o - d, |first, wc, nc| run(&task, first, wc, nc));
    if ok {
        Ok(used)
    } else {
        Err(kernel::first_overflow(&task).expect("overflow vanished on deterministic rescan"))
    }
}

/// [`advect_constant_with`] using the specialized kernel when available.
pub fn advect_constant(
    src: &CoefficientGrid,
    nu: f64,
    dst: &mut CoefficientGrid,
) -> Result<KernelKind> {
    advect_constant_with(src, nu, dst, KernelKind::Specialized)
}

/// Direction of a phase-space sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    X,
    V,
}

/// Advect every 1D row of a phase-space grid with its own CFL number.
///
/// A row is one line of cells along `axis` together with one perpendicular
/// basis lane: for `SweepAxis::X`, row (iv, jv) holds the order_x modal
/// coefficients of lane jv in every x-cell, and `nus[iv·order_v + jv]`
/// gives its shift; for `SweepAxis::V`, rows are (ix, jx) with
/// `nus[ix·order_x + jx]`. The 1D update is linear over the perpendicular
/// index, so this is exactly "apply [`advect_constant`] per line" for any
/// perpendicular representation (modal or nodal). Matrices are cached per
/// distinct α within the call.
///
/// The v-axis sweep runs on a transposed copy so both directions share the
/// contiguous x-line path; transposition is a bit-exact permutation.
pub fn advect_rows(
    src: &PhaseSpaceGrid,
    nus: &[f64],
    axis: SweepAxis,
    dst: &mut PhaseSpaceGrid,
    kernel_kind: KernelKind,
) -> Result<KernelKind> {
    if src.dom_x() != dst.dom_x() || src.dom_v() != dst.dom_v() || src.layout() != dst.layout() {
        return Err(Error::GridMismatch("row advection needs identical grids"));
    }
    match axis {
        SweepAxis::X => advect_rows_x(src, nus, dst, kernel_kind),
        SweepAxis::V => {
            let src_t = src.transposed();
            let mut dst_t =
                PhaseSpaceGrid::new(*src_t.dom_x(), *src_t.dom_v(), src_t.layout().clone());
            let used = advect_rows_x(&src_t, nus, &mut dst_t, kernel_kind)?;
            *dst = dst_t.transposed();
            Ok(used)
        }
    }
}

fn advect_rows_x(
    src: &PhaseSpaceGrid,
    nus: &[f64],
    dst: &mut PhaseSpaceGrid,
    kernel_kind: KernelKind,
) -> Result<KernelKind> {
    let nx = src.dom_x().cells();
    let nv = src.dom_v().cells();
    let ox = src.layout().order_x();
    let ov = src.layout().order_v();
    let rows = nv * ov;
    if nus.len() != rows {
        return Err(Error::LengthMismatch { expected: rows, got: nus.len() });
    }

    let mut decs = Vec::with_capacity(rows);
    let mut cache: BTreeMap<u64, ShiftMatrices> = BTreeMap::new();
    for &nu in nus {
        let dec = ShiftDecomposition::new(nu)?;
        if dec.alpha() != 0.0 {
            let key = dec.alpha().to_bits();
            if !cache.contains_key(&key) {
                cache.insert(key, ShiftMatrices::new(dec.alpha(), ox)?);
            }
        }
        decs.push(dec);
    }
    // Row lines are gathered into all-f64 scratch, so the kernel runs the
    // (ox, ox) configuration; narrowing happens at scatter.
    let (run, used) = select_kernel(kernel_kind, ox, ox);

    let nw = src.layout().wide_count();
    let nn = src.layout().narrow_count();
    let (dw, dn) = dst.stores_mut();
    let outcome = for_line_chunks(dw, dn, nx * nw, nx * nn, |iv, wc, nc| {
        process_x_line(src, &decs, &cache, run, iv, wc, nc)
    });
    match outcome {
        Ok(()) => Ok(used),
        Err((_, e)) => Err(e),
    }
}

/// Advect all lanes of the x-cell-line `iv`, writing into that line's
/// chunks of the destination stores. Errors carry the line index so the
/// caller can pick the lowest one deterministically.
fn process_x_line(
    src: &PhaseSpaceGrid,
    decs: &[ShiftDecomposition],
    cache: &BTreeMap<u64, ShiftMatrices>,
    run: ChunkKernel,
    iv: usize,
    wc: &mut [f64],
    nc: &mut [f32],
) -> core::result::Result<(), (usize, Error)> {
    let nx = src.dom_x().cells();
    let ox = src.layout().order_x();
    let ov = src.layout().order_v();
    let nw = src.layout().wide_count();
    let nn = src.layout().narrow_count();
    let mut line_src = vec![0.0f64; nx * ox];
    let mut line_dst = vec![0.0f64; nx * ox];
    for jv in 0..ov {
        let dec = &decs[iv * ov + jv];
        if dec.alpha() == 0.0 {
            // Integer shift: rotate this lane bit-exactly within its
            // precision class.
            let s = (-dec.i_star()).rem_euclid(nx as i64) as usize;
            for ix in 0..nx {
                let src_cell = iv * nx + (ix + s) % nx;
                for jx in 0..ox {
                    match src.layout().slot(jx * ov + jv) {
                        Slot::Wide(off) => {
                            wc[ix * nw + off] = src.wide_store()[src_cell * nw + off];
                        }
                        Slot::Narrow(off) => {
                            nc[ix * nn + off] = src.narrow_store()[src_cell * nn + off];
                        }
                    }
                }
            }
            continue;
        }
        for ix in 0..nx {
            let cell = iv * nx + ix;
            for jx in 0..ox {
                line_src[ix * ox + jx] = match src.layout().slot(jx * ov + jv) {
                    Slot::Wide(off) => src.wide_store()[cell * nw + off],
                    Slot::Narrow(off) => f64::from(src.narrow_store()[cell * nn + off]),
                };
            }
        }
        let mats = &cache[&dec.alpha().to_bits()];
        let shift = (-dec.i_star() - 1).rem_euclid(nx as i64) as usize;
        let task = LineTask {
            src_wide: &line_src,
            src_narrow: &[],
            far_mat: mats.far(),
            near_mat: mats.near(),
            order: ox,
            wide: ox,
            cells: nx,
            shift,
        };
        let ok = run(&task, 0, &mut line_dst, &mut []);
        debug_assert!(ok, "all-f64 row kernel cannot overflow");
        for ix in 0..nx {
            for jx in 0..ox {
                let v = line_dst[ix * ox + jx];
                match src.layout().slot(jx * ov + jv) {
                    Slot::Wide(off) => wc[ix * nw + off] = v,
                    Slot::Narrow(off) => match narrow_value(v) {
                        Ok(c) => nc[ix * nn + off] = c,
                        Err(e) => return Err((iv, e)),
                    },
                }
            }
        }
    }
    Ok(())
}

/// Run `f(line, wide_chunk, narrow_chunk)` over per-line chunks of the
/// destination stores. On multiple failures the error with the lowest line
/// index wins, making the reported error independent of thread count.
#[cfg(feature = "parallel")]
fn for_line_chunks<F>(
    wide: &mut [f64],
    narrow: &mut [f32],
    w_line: usize,
    n_line: usize,
    f: F,
) -> core::result::Result<(), (usize, Error)>
where
    F: Fn(usize, &mut [f64], &mut [f32]) -> core::result::Result<(), (usize, Error)> + Sync,
{
    use rayon::prelude::*;

    type LineResult = core::result::Result<(), (usize, Error)>;
    fn earliest(a: LineResult, b: LineResult) -> LineResult {
        match (a, b) {
            (Ok(()), r) => r,
            (r, Ok(())) => r,
            (Err(x), Err(y)) => Err(if x.0 <= y.0 { x } else { y }),
        }
    }

    if w_line == 0 {
        narrow
            .par_chunks_mut(n_line)
            .enumerate()
            .map(|(iv, nc)| f(iv, &mut [], nc))
            .reduce(|| Ok(()), earliest)
    } else if n_line == 0 {
        wide.par_chunks_mut(w_line)
            .enumerate()
            .map(|(iv, wc)| f(iv, wc, &mut []))
            .reduce(|| Ok(()), earliest)
    } else {
        wide.par_chunks_mut(w_line)
            .zip(narrow.par_chunks_mut(n_line))
            .enumerate()
            .map(|(iv, (wc, nc))| f(iv, wc, nc))
            .reduce(|| Ok(()), earliest)
    }
}

#[cfg(not(feature = "parallel"))]
fn for_line_chunks<F>(
    wide: &mut [f64],
    narrow: &mut [f32],
    w_line: usize,
    n_line: usize,
    f: F,
) -> core::result::Result<(), (usize, Error)>
where
    F: Fn(usize, &mut [f64], &mut [f32]) -> core::result::Result<(), (usize, Error)> + Sync,
{
    let lines = if w_line == 0 { narrow.len() / n_line } else { wide.len() / w_line };
    let mut wide_rest = wide;
    let mut narrow_rest = narrow;
    for iv in 0..lines {
        let (wc, wr) = core::mem::take(&mut wide_rest).split_at_mut(w_line);
        let (nc, nr) = core::mem::take(&mut narrow_rest).split_at_mut(n_line);
        // Ascending order, so the first error is the lowest-index one.
        f(iv, wc, nc)?;
        wide_rest = wr;
        narrow_rest = nr;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Domain1D, PrecisionLayout};
    use crate::phase::{evaluate_phase, project_phase_function, PhaseLayout};
    use crate::project::{evaluate, l2_error, l2_norm, project_function, total_mass};
    use proptest::prelude::*;

    fn dom(n: usize) -> Domain1D {
        Domain1D::new(0.0, 1.0, n).unwrap()
    }

    fn wide(o: usize) -> PrecisionLayout {
        PrecisionLayout::all_wide(o).unwrap()
    }

    /// Independent reference for a matrix entry: direct quadrature of the
    /// defining integral on the raw sub-interval with a 24-node rule.
    fn entry_oracle(alpha: f64, o: usize, j: usize, l: usize, far: bool) -> f64 {
        let (a, b) = if far { (-1.0, 2.0 * alpha - 1.0) } else { (2.0 * alpha - 1.0, 1.0) };
        let rule = QuadratureRule::gauss_legendre(24).unwrap();
        let mut acc = 0.0;
        for (q, &x) in rule.nodes().iter().enumerate() {
            let xi = 0.5 * (a + b) + 0.5 * (b - a) * x;
            let src_arg = if far { xi + 2.0 - 2.0 * alpha } else { xi - 2.0 * alpha };
            let mut pj = [0.0; 16];
            let mut pl = [0.0; 16];
            legendre_all_into(xi, &mut pj[..o]);
            legendre_all_into(src_arg, &mut pl[..o]);
            acc += rule.weights()[q] * pj[j] * pl[l];
        }
        0.5 * (2.0 * j as f64 + 1.0) * 0.5 * (b - a) * acc
    }

    /// Exact-translation reference for one step: reconstruct the source,
    /// shift it by ν·h, and project cell by cell, splitting each target
    /// cell at the characteristic kink ξ = 2α−1 so the quadrature sees
    /// only polynomial pieces. Shares no code with the matrix path.
    fn oracle_translate(src: &CoefficientGrid, nu: f64) -> CoefficientGrid {
        let o = src.order();
        let domn = *src.domain();
        let h = domn.cell_width();
        let alpha = nu - nu.floor();
        let xi_kink = 2.0 * alpha - 1.0;
        let rule = QuadratureRule::gauss_legendre(o + 3).unwrap();
        let mut out = CoefficientGrid::new(domn, src.layout());
        let mut cell = alloc::vec![0.0; o];
        for i in 0..domn.cells() {
            let xc = domn.cell_center(i);
            cell.iter_mut().for_each(|c| *c = 0.0);
            for (lo, hi) in [(-1.0, xi_kink), (xi_kink, 1.0)] {
                let len = hi - lo;
                if len <= 0.0 {
                    continue;
                }
                for (q, &x) in rule.nodes().iter().enumerate() {
                    let xi = 0.5 * (lo + hi) + 0.5 * len * x;
                    let val = evaluate(src, xc + 0.5 * h * xi - nu * h);
                    let mut p = [0.0; MAX_QUADRATURE_NODES];
                    legendre_all_into(xi, &mut p[..o]);
                    for j in 0..o {
                        cell[j] += 0.5
                            * (2.0 * j as f64 + 1.0)
                            * 0.5
                            * len
                            * rule.weights()[q]
                            * val
                            * p[j];
                    }
                }
            }
            out.set_cell(i, &cell).unwrap();
        }
        out
    }

    #[test]
    fn decomposition_cases() {
        let d = ShiftDecomposition::new(2.25).unwrap();
        assert_eq!((d.i_star(), d.alpha()), (2, 0.25));
        let d = ShiftDecomposition::new(-0.25).unwrap();
        assert_eq!((d.i_star(), d.alpha()), (-1, 0.75));
        let d = ShiftDecomposition::new(3.0).unwrap();
        assert_eq!((d.i_star(), d.alpha()), (3, 0.0));
        // Just below an integer: the fraction rounds to 1.0 and must fold.
        let d = ShiftDecomposition::new(-1e-18).unwrap();
        assert_eq!((d.i_star(), d.alpha()), (0, 0.0));
        assert!(ShiftDecomposition::new(f64::NAN).is_err());
        assert!(ShiftDecomposition::new(f64::INFINITY).is_err());
        assert!(ShiftDecomposition::new(1e16).is_err());
    }

    #[test]
    fn integer_shift_matrices_are_trivial() {
        let m = ShiftMatrices::new(0.0, 5).unwrap();
        assert!(m.far().iter().all(|&x| x == 0.0));
        for j in 0..5 {
            for l in 0..5 {
                let want = if j == l { 1.0 } else { 0.0 };
                assert!((m.near()[j * 5 + l] - want).abs() < 1e-15, "B[{j},{l}]");
            }
        }
    }

    #[test]
    fn first_order_upwind_weights() {
        let m = ShiftMatrices::new(0.5, 1).unwrap();
        assert!((m.far()[0] - 0.5).abs() < 1e-15);
        assert!((m.near()[0] - 0.5).abs() < 1e-15);
        let m = ShiftMatrices::new(0.3, 1).unwrap();
        assert!((m.far()[0] - 0.3).abs() < 1e-15);
        assert!((m.near()[0] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn matrices_match_direct_quadrature() {
        for &alpha in &[0.125, 0.5, 0.73, 0.999] {
            for o in [1usize, 2, 3, 4, 6] {
                let m = ShiftMatrices::new(alpha, o).unwrap();
                for j in 0..o {
                    for l in 0..o {
                        let f = entry_oracle(alpha, o, j, l, true);
                        let n = entry_oracle(alpha, o, j, l, false);
                        assert!(
                            (m.far()[j * o + l] - f).abs() < 1e-14,
                            "far α={alpha} o={o} [{j},{l}]: {} vs {f}",
                            m.far()[j * o + l]
                        );
                        assert!(
                            (m.near()[j * o + l] - n).abs() < 1e-14,
                            "near α={alpha} o={o} [{j},{l}]"
                        );
                    }
                }
            }
        }
        assert!(ShiftMatrices::new(1.0, 3).is_err());
        assert!(ShiftMatrices::new(-0.1, 3).is_err());
    }

    proptest! {
        /// Mass row and constant column sum to the identity's.
        #[test]
        fn conservation_identities(alpha in 0.0f64..1.0, o in 1usize..9) {
            let m = ShiftMatrices::new(alpha, o).unwrap();
            for l in 0..o {
                let s = m.far()[l] + m.near()[l];
                let want = if l == 0 { 1.0 } else { 0.0 };
                prop_assert!((s - want).abs() < 1e-14, "mass row l={l}: {s}");
            }
            for j in 0..o {
                let s = m.far()[j * o] + m.near()[j * o];
                let want = if j == 0 { 1.0 } else { 0.0 };
                prop_assert!((s - want).abs() < 1e-14, "constant col j={j}: {s}");
            }
        }
    }

    #[test]
    fn zero_shift_is_identity_bitwise() {
        let g = project_function(|x| (6.3 * x).sin(), dom(16), PrecisionLayout::new(3, 1).unwrap())
            .unwrap();
        let mut out = CoefficientGrid::new(dom(16), g.layout());
        advect_constant(&g, 0.0, &mut out).unwrap();
        assert_eq!(g, out);
    }

    #[test]
    fn integer_shift_rotates_bitwise() {
        let layout = PrecisionLayout::new(4, 2).unwrap();
        let g = project_function(|x| (6.3 * x).sin() + x, dom(12), layout).unwrap();
        let mut out = CoefficientGrid::new(dom(12), layout);
        advect_constant(&g, 5.0, &mut out).unwrap();
        let mut a = [0.0; 4];
        let mut b = [0.0; 4];
        for i in 0..12 {
            out.get_cell(i, &mut a).unwrap();
            g.get_cell((i + 12 - 5) % 12, &mut b).unwrap();
            assert_eq!(a, b, "cell {i}");
        }
        // Negative integer shift rotates the other way.
        advect_constant(&g, -3.0, &mut out).unwrap();
        for i in 0..12 {
            out.get_cell(i, &mut a).unwrap();
            g.get_cell((i + 3) % 12, &mut b).unwrap();
            assert_eq!(a, b, "cell {i} (negative)");
        }
    }

    #[test]
    fn upwind_hand_example() {
        // o=1, two cells [1, 0], ν=0.5: each cell keeps half and receives
        // half of its upstream neighbour.
        let mut g = CoefficientGrid::new(dom(2), wide(1));
        g.set_cell(0, &[1.0]).unwrap();
        g.set_cell(1, &[0.0]).unwrap();
        let mut out = CoefficientGrid::new(dom(2), wide(1));
        advect_constant(&g, 0.5, &mut out).unwrap();
        assert!((out.coeff(0, 0) - 0.5).abs() < 1e-15);
        assert!((out.coeff(1, 0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn matches_translate_and_reproject_oracle() {
        let g = project_function(
            |x| (2.0 * core::f64::consts::PI * x).sin() + 0.4 * (4.0 * core::f64::consts::PI * x).cos(),
            dom(8),
            wide(3),
        )
        .unwrap();
        for &nu in &[0.3, 1.3, -0.7, 2.25] {
            let mut out = CoefficientGrid::new(dom(8), wide(3));
            advect_constant(&g, nu, &mut out).unwrap();
            let want = oracle_translate(&g, nu);
            for i in 0..8 {
                for j in 0..3 {
                    assert!(
                        (out.coeff(i, j) - want.coeff(i, j)).abs() < 1e-13,
                        "ν={nu} cell {i} mode {j}: {} vs {}",
                        out.coeff(i, j),
                        want.coeff(i, j)
                    );
                }
            }
        }
    }

    #[test]
    fn single_step_mass_conservation() {
        let g = project_function(
            |x| 2.0 + (2.0 * core::f64::consts::PI * x).sin(),
            dom(64),
            wide(4),
        )
        .unwrap();
        let mut out = CoefficientGrid::new(dom(64), wide(4));
        advect_constant(&g, 0.37, &mut out).unwrap();
        let rel = (total_mass(&out) - total_mass(&g)).abs() / total_mass(&g).abs();
        assert!(rel < 1e-13, "relative drift {rel}");
    }

    #[test]
    fn two_cell_locality() {
        // Perturb one source cell; only destinations reading it change.
        let layout = wide(3);
        let base = project_function(|x| (6.3 * x).sin(), dom(16), layout).unwrap();
        let mut bumped = base.clone();
        let mut cell = [0.0; 3];
        bumped.get_cell(7, &mut cell).unwrap();
        cell[1] += 0.5;
        bumped.set_cell(7, &cell).unwrap();
        let nu = 2.25; // i* = 2: dst i reads src cells i−3 and i−2
        let mut a = CoefficientGrid::new(dom(16), layout);
        let mut b = CoefficientGrid::new(dom(16), layout);
        advect_constant(&base, nu, &mut a).unwrap();
        advect_constant(&bumped, nu, &mut b).unwrap();
        for i in 0..16 {
            let touched = (i + 16 - 3) % 16 == 7 || (i + 16 - 2) % 16 == 7;
            let mut ca = [0.0; 3];
            let mut cb = [0.0; 3];
            a.get_cell(i, &mut ca).unwrap();
            b.get_cell(i, &mut cb).unwrap();
            assert_eq!(ca != cb, touched, "cell {i}");
        }
    }

    #[test]
    fn reversibility_bounded_by_projection_loss() {
        let g0 = project_function(
            |x| (2.0 * core::f64::consts::PI * x).sin(),
            dom(32),
            wide(3),
        )
        .unwrap();
        let mut g1 = CoefficientGrid::new(dom(32), wide(3));
        let mut g2 = CoefficientGrid::new(dom(32), wide(3));
        advect_constant(&g0, 0.6, &mut g1).unwrap();
        advect_constant(&g1, -0.6, &mut g2).unwrap();
        // Translation preserves the L2 norm, and the step is an orthogonal
        // projection of the translate, so the per-step projection loss is
        // sqrt(‖g0‖² − ‖g1‖²) by Pythagoras.
        let loss = (l2_norm(&g0).powi(2) - l2_norm(&g1).powi(2)).max(0.0).sqrt();
        let rev = l2_error(&g2, &g0).unwrap();
        assert!(rev <= 2.0 * loss + 1e-14, "rev {rev} vs loss {loss}");
    }

    #[test]
    fn specialized_and_generic_agree_bitwise() {
        let layout = PrecisionLayout::new(4, 2).unwrap();
        let g = project_function(|x| (7.1 * x).sin() * (1.0 + x), dom(64), layout).unwrap();
        let mut a = CoefficientGrid::new(dom(64), layout);
        let mut b = CoefficientGrid::new(dom(64), layout);
        let ka = advect_constant_with(&g, 2.25, &mut a, KernelKind::Specialized).unwrap();
        let kb = advect_constant_with(&g, 2.25, &mut b, KernelKind::Generic).unwrap();
        assert_eq!(ka, KernelKind::Specialized);
        assert_eq!(kb, KernelKind::Generic);
        assert_eq!(a.wide_store(), b.wide_store());
        assert_eq!(a.narrow_store(), b.narrow_store());
    }

    #[test]
    fn unsupported_order_falls_back_to_generic() {
        let layout = wide(7);
        let g = project_function(|x| x, dom(8), layout).unwrap();
        let mut out = CoefficientGrid::new(dom(8), layout);
        let used = advect_constant_with(&g, 0.5, &mut out, KernelKind::Specialized).unwrap();
        assert_eq!(used, KernelKind::Generic);
    }

    #[test]
    fn narrow_overflow_reported_deterministically() {
        let layout = PrecisionLayout::new(2, 1).unwrap();
        let mut g = CoefficientGrid::new(dom(4), layout);
        for i in 0..4 {
            let c0 = if i % 2 == 0 { 1e39 } else { -1e39 };
            g.set_cell(i, &[c0, 0.0]).unwrap();
        }
        let mut out = CoefficientGrid::new(dom(4), layout);
        let err = advect_constant(&g, 0.5, &mut out).unwrap_err();
        assert!(matches!(err, Error::NarrowOverflow(v) if v.abs() > 3.4e38));
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn thread_count_does_not_change_bits() {
        let layout = PrecisionLayout::new(4, 1).unwrap();
        let g = project_function(
            |x| (2.0 * core::f64::consts::PI * x).sin() + 0.1 * (50.0 * x).cos(),
            dom(20_000), // several chunks
            layout,
        )
        .unwrap();
        let run_with = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            let mut out = CoefficientGrid::new(dom(20_000), layout);
            pool.install(|| advect_constant(&g, 2.25, &mut out)).unwrap();
            out
        };
        let one = run_with(1);
        let four = run_with(4);
        assert_eq!(one.wide_store(), four.wide_store());
        assert_eq!(one.narrow_store(), four.narrow_store());
    }

    fn sample_phase_grid(layout: PhaseLayout) -> PhaseSpaceGrid {
        let dx = Domain1D::new(0.0, 1.0, 8).unwrap();
        let dv = Domain1D::new(-1.0, 1.0, 3).unwrap();
        project_phase_function(
            |x, v| (2.0 * core::f64::consts::PI * x).sin() * (1.0 + 0.5 * v) + 0.2 * v * v,
            dx,
            dv,
            layout,
        )
        .unwrap()
    }

    #[test]
    fn rows_with_equal_shifts_match_constant_advection() {
        // All-wide tensor grid with order_v lanes advected by the same ν
        // must reproduce the 1D path bit-for-bit on every lane.
        let g = sample_phase_grid(PhaseLayout::all_wide(3, 2).unwrap());
        let mut out = PhaseSpaceGrid::new(*g.dom_x(), *g.dom_v(), g.layout().clone());
        let nus = vec![1.3; 3 * 2];
        advect_rows(&g, &nus, SweepAxis::X, &mut out, KernelKind::Specialized).unwrap();
        let dx = *g.dom_x();
        for iv in 0..3 {
            for jv in 0..2 {
                let mut line = CoefficientGrid::new(dx, wide(3));
                let mut cell = [0.0; 3];
                for ix in 0..8 {
                    for jx in 0..3 {
                        cell[jx] = g.coeff(ix, iv, jx, jv);
                    }
                    line.set_cell(ix, &cell).unwrap();
                }
                let mut line_out = CoefficientGrid::new(dx, wide(3));
                advect_constant(&line, 1.3, &mut line_out).unwrap();
                for ix in 0..8 {
                    for jx in 0..3 {
                        assert_eq!(
                            out.coeff(ix, iv, jx, jv),
                            line_out.coeff(ix, jx),
                            "iv={iv} jv={jv} ix={ix} jx={jx}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn rows_integer_shifts_rotate_lanes_bitwise() {
        let g = sample_phase_grid(PhaseLayout::new(3, 2, 2).unwrap());
        let mut out = PhaseSpaceGrid::new(*g.dom_x(), *g.dom_v(), g.layout().clone());
        let nus = vec![1.0; 6];
        advect_rows(&g, &nus, SweepAxis::X, &mut out, KernelKind::Specialized).unwrap();
        for iv in 0..3 {
            for ix in 0..8 {
                for jx in 0..3 {
                    for jv in 0..2 {
                        assert_eq!(
                            out.coeff(ix, iv, jx, jv),
                            g.coeff((ix + 7) % 8, iv, jx, jv)
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn rows_axis_v_matches_per_line_1d() {
        let g = sample_phase_grid(PhaseLayout::all_wide(3, 2).unwrap());
        let mut out = PhaseSpaceGrid::new(*g.dom_x(), *g.dom_v(), g.layout().clone());
        // One ν per (ix, jx) row.
        let nus: Vec<f64> = (0..8 * 3).map(|r| 0.15 * r as f64 - 1.0).collect();
        advect_rows(&g, &nus, SweepAxis::V, &mut out, KernelKind::Specialized).unwrap();
        let dv = *g.dom_v();
        for ix in 0..8 {
            for jx in 0..3 {
                let mut line = CoefficientGrid::new(dv, wide(2));
                let mut cell = [0.0; 2];
                for iv in 0..3 {
                    for jv in 0..2 {
                        cell[jv] = g.coeff(ix, iv, jx, jv);
                    }
                    line.set_cell(iv, &cell).unwrap();
                }
                let mut line_out = CoefficientGrid::new(dv, wide(2));
                advect_constant(&line, nus[ix * 3 + jx], &mut line_out).unwrap();
                for iv in 0..3 {
                    for jv in 0..2 {
                        assert_eq!(
                            out.coeff(ix, iv, jx, jv),
                            line_out.coeff(iv, jv),
                            "ix={ix} jx={jx} iv={iv} jv={jv}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn rows_mixed_layout_equals_widened_then_narrowed() {
        // Promoting to all-f64, advecting, and re-narrowing per lane must
        // equal advecting the mixed grid directly: the kernel sees the
        // same promoted inputs either way and narrowing is a pure function
        // of the result.
        let mixed_layout = PhaseLayout::new(3, 2, 2).unwrap();
        let g = sample_phase_grid(mixed_layout.clone());
        let nus: Vec<f64> = (0..6).map(|r| 0.4 + 0.3 * r as f64).collect();
        let mut direct = PhaseSpaceGrid::new(*g.dom_x(), *g.dom_v(), mixed_layout.clone());
        advect_rows(&g, &nus, SweepAxis::X, &mut direct, KernelKind::Specialized).unwrap();
        let wide_g = g.with_layout(PhaseLayout::all_wide(3, 2).unwrap()).unwrap();
        let mut wide_out =
            PhaseSpaceGrid::new(*g.dom_x(), *g.dom_v(), wide_g.layout().clone());
        advect_rows(&wide_g, &nus, SweepAxis::X, &mut wide_out, KernelKind::Specialized)
            .unwrap();
        let renarrowed = wide_out.with_layout(mixed_layout).unwrap();
        assert_eq!(direct, renarrowed);
    }

    #[test]
    fn rows_length_mismatch_is_rejected() {
        let g = sample_phase_grid(PhaseLayout::all_wide(3, 2).unwrap());
        let mut out = PhaseSpaceGrid::new(*g.dom_x(), *g.dom_v(), g.layout().clone());
        let err = advect_rows(&g, &[0.5; 5], SweepAxis::X, &mut out, KernelKind::Generic)
            .unwrap_err();
        assert!(matches!(err, Error::LengthMismatch { expected: 6, got: 5 }));
    }

    #[test]
    fn rows_move_the_reconstruction() {
        // Sanity at the function level: advecting in x by a quarter domain
        // moves features a quarter period.
        let g = sample_phase_grid(PhaseLayout::all_wide(4, 2).unwrap());
        let mut out = PhaseSpaceGrid::new(*g.dom_x(), *g.dom_v(), g.layout().clone());
        let nus = vec![2.0; 3 * 2]; // 2 of 8 cells = quarter domain
        advect_rows(&g, &nus, SweepAxis::X, &mut out, KernelKind::Specialized).unwrap();
        for &(x, v) in &[(0.3, -0.4), (0.7, 0.9)] {
            let before = evaluate_phase(&g, x - 0.25, v);
            let after = evaluate_phase(&out, x, v);
            assert!((before - after).abs() < 1e-12);
        }
    }
}
