//! Inner loops of the two-cell update c_i ← A·c_far + B·c_near.
//!
//! Two implementations share one algorithm: a generic kernel with runtime
//! order/precision-split, and a family of monomorphized kernels with both
//! baked in as const generics so the per-cell loops fully unroll. Both
//! execute the identical floating-point operation sequence (gather far and
//! near cells, accumulate the A terms left-to-right, then the B terms, then
//! store), so their outputs are bit-identical — the specialized path is a
//! speed choice, never a numerics choice.
//!
//! A kernel call covers a contiguous range of destination cells and returns
//! false if any narrow store would overflow f32; the caller rescans
//! serially to produce a deterministic error value.

use crate::basis::MAX_QUADRATURE_NODES;
use crate::error::Error;

/// Read-only context for one sweep over a periodic line of cells.
pub(crate) struct LineTask<'a> {
    pub src_wide: &'a [f64],
    pub src_narrow: &'a [f32],
    /// Weights of the farther upstream cell (i − i* − 1), row-major o×o.
    pub far_mat: &'a [f64],
    /// Weights of the nearer upstream cell (i − i*), row-major o×o.
    pub near_mat: &'a [f64],
    pub order: usize,
    pub wide: usize,
    pub cells: usize,
    /// far cell of dst i is (i + shift) mod cells; near cell follows it.
    pub shift: usize,
}

/// Processes dst cells [first, first + chunk_len) given the chunk's slices
/// of the destination stores. Returns false on narrow overflow.
pub(crate) type ChunkKernel = fn(&LineTask, usize, &mut [f64], &mut [f32]) -> bool;

#[inline(always)]
fn wrap(i: usize, n: usize) -> usize {
    // i < 2n always holds here, so one conditional subtraction suffices.
    if i >= n {
        i - n
    } else {
        i
    }
}

#[inline(always)]
fn load_spec<const O: usize, const D: usize>(t: &LineTask, cell: usize) -> [f64; O] {
    let nn = O - D;
    let mut out = [0.0; O];
    for j in 0..D {
        out[j] = t.src_wide[cell * D + j];
    }
    for j in D..O {
        out[j] = f64::from(t.src_narrow[cell * nn + (j - D)]);
    }
    out
}

fn spec_chunk<const O: usize, const D: usize>(
    t: &LineTask,
    first: usize,
    dst_wide: &mut [f64],
    dst_narrow: &mut [f32],
) -> bool {
    let nn = O - D;
    let chunk_cells = if D > 0 { dst_wide.len() / D } else { dst_narrow.len() / nn };
    for k in 0..chunk_cells {
        let far_cell = wrap(first + k + t.shift, t.cells);
        let near_cell = wrap(far_cell + 1, t.cells);
        let far = load_spec::<O, D>(t, far_cell);
        let near = load_spec::<O, D>(t, near_cell);
        for j in 0..O {
            let mut acc = 0.0;
            for l in 0..O {
                acc += t.far_mat[j * O + l] * far[l];
            }
            for l in 0..O {
                acc += t.near_mat[j * O + l] * near[l];
            }
            if j < D {
                dst_wide[k * D + j] = acc;
            } else {
                let c = acc as f32;
                if c.is_infinite() {
                    return false;
                }
                dst_narrow[k * nn + (j - D)] = c;
            }
        }
    }
    true
}

#[inline(always)]
fn load_generic(t: &LineTask, cell: usize, out: &mut [f64]) {
    let d = t.wide;
    let nn = t.order - d;
    for j in 0..d {
        out[j] = t.src_wide[cell * d + j];
    }
    for j in d..t.order {
        out[j] = f64::from(t.src_narrow[cell * nn + (j - d)]);
    }
}

pub(crate) fn generic_chunk(
    t: &LineTask,
    first: usize,
    dst_wide: &mut [f64],
    dst_narrow: &mut [f32],
) -> bool {
    let o = t.order;
    let d = t.wide;
    let nn = o - d;
    let chunk_cells = if d > 0 { dst_wide.len() / d } else { dst_narrow.len() / nn };
    let mut far = [0.0; MAX_QUADRATURE_NODES];
    let mut near = [0.0; MAX_QUADRATURE_NODES];
    for k in 0..chunk_cells {
        let far_cell = wrap(first + k + t.shift, t.cells);
        let near_cell = wrap(far_cell + 1, t.cells);
        load_generic(t, far_cell, &mut far[..o]);
        load_generic(t, near_cell, &mut near[..o]);
        for j in 0..o {
            let mut acc = 0.0;
            for l in 0..o {
                acc += t.far_mat[j * o + l] * far[l];
            }
            for l in 0..o {
                acc += t.near_mat[j * o + l] * near[l];
            }
            if j < d {
                dst_wide[k * d + j] = acc;
            } else {
                let c = acc as f32;
                if c.is_infinite() {
                    return false;
                }
                dst_narrow[k * nn + (j - d)] = c;
            }
        }
    }
    true
}

/// Recompute cells in ascending order and report the first narrow-store
/// overflow. Called only after a kernel signalled failure, so the scan is
/// off the hot path; its determinism makes the returned error independent
/// of chunking and thread count.
pub(crate) fn first_overflow(t: &LineTask) -> Option<Error> {
    let o = t.order;
    let d = t.wide;
    let mut far = [0.0; MAX_QUADRATURE_NODES];
    let mut near = [0.0; MAX_QUADRATURE_NODES];
    for i in 0..t.cells {
        let far_cell = wrap(i + t.shift, t.cells);
        let near_cell = wrap(far_cell + 1, t.cells);
        load_generic(t, far_cell, &mut far[..o]);
        load_generic(t, near_cell, &mut near[..o]);
        for j in d..o {
            let mut acc = 0.0;
            for l in 0..o {
                acc += t.far_mat[j * o + l] * far[l];
            }
            for l in 0..o {
                acc += t.near_mat[j * o + l] * near[l];
            }
            if (acc as f32).is_infinite() {
                return Some(Error::NarrowOverflow(acc));
            }
        }
    }
    None
}

macro_rules! spec_arms {
    ($o:expr, $d:expr; $(($O:literal, $D:literal)),+ $(,)?) => {
        match ($o, $d) {
            $(($O, $D) => Some(spec_chunk::<$O, $D> as ChunkKernel),)+
            _ => None,
        }
    };
}

/// The monomorphized kernel for (order, wide), if one was compiled in.
/// Covers the orders used in practice; other configurations run generic.
pub(crate) fn specialized(order: usize, wide: usize) -> Option<ChunkKernel> {
    spec_arms!(order, wide;
        (1, 0), (1, 1),
        (2, 0), (2, 1), (2, 2),
        (3, 0), (3, 1), (3, 2), (3, 3),
        (4, 0), (4, 1), (4, 2), (4, 3), (4, 4),
        (5, 0), (5, 1), (5, 2), (5, 3), (5, 4), (5, 5),
        (6, 0), (6, 1), (6, 2), (6, 3), (6, 4), (6, 5), (6, 6),
        (8, 0), (8, 1), (8, 2), (8, 3), (8, 4), (8, 5), (8, 6), (8, 7), (8, 8),
    )
}
