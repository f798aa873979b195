//! Chunked iteration over the destination stores of a grid.
//!
//! Every advection step writes each destination cell exactly once, so the
//! work can be partitioned into contiguous cell ranges with no
//! synchronization. The parallel and serial paths run the same per-chunk
//! closure over the same chunk boundaries; since no reduction happens here,
//! the output is bit-identical for any thread count.

/// Cells per work chunk. 8192 cells keeps a chunk's stores around a few
/// hundred KiB for typical orders — large enough to amortize dispatch,
/// small enough to balance load.
pub(crate) const CHUNK_CELLS: usize = 8192;

/// Run `f(first_cell, wide_chunk, narrow_chunk)` over cell chunks of the
/// destination stores. `f` returns false to poison the run (its chunk is
/// then in an unspecified state); the function returns whether every chunk
/// succeeded. `d` and `nn` are the per-cell wide/narrow value counts.
#[cfg(feature = "parallel")]
pub(crate) fn process_cell_chunks<F>(
    wide: &mut [f64],
    narrow: &mut [f32],
    d: usize,
    nn: usize,
    f: F,
) -> bool
where
    F: Fn(usize, &mut [f64], &mut [f32]) -> bool + Sync,
{
    use rayon::prelude::*;

    if d == 0 {
        narrow
            .par_chunks_mut(CHUNK_CELLS * nn)
            .enumerate()
            .map(|(k, nc)| f(k * CHUNK_CELLS, &mut [], nc))
            .reduce(|| true, |a, b| a && b)
    } else if nn == 0 {
        wide.par_chunks_mut(CHUNK_CELLS * d)
            .enumerate()
            .map(|(k, wc)| f(k * CHUNK_CELLS, wc, &mut []))
            .reduce(|| true, |a, b| a && b)
    } else {
        wide.par_chunks_mut(CHUNK_CELLS * d)
            .zip(narrow.par_chunks_mut(CHUNK_CELLS * nn))
            .enumerate()
            .map(|(k, (wc, nc))| f(k * CHUNK_CELLS, wc, nc))
            .reduce(|| true, |a, b| a && b)
    }
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn process_cell_chunks<F>(
    wide: &mut [f64],
    narrow: &mut [f32],
    d: usize,
    nn: usize,
    f: F,
) -> bool
where
    F: Fn(usize, &mut [f64], &mut [f32]) -> bool + Sync,
{
    let cells = if d == 0 { narrow.len() / nn } else { wide.len() / d };
    let mut wide_rest = wide;
    let mut narrow_rest = narrow;
    let mut first = 0;
    let mut ok = true;
    while first < cells {
        let take = CHUNK_CELLS.min(cells - first);
        let (wc, wr) = core::mem::take(&mut wide_rest).split_at_mut(take * d);
        let (nc, nr) = core::mem::take(&mut narrow_rest).split_at_mut(take * nn);
        ok = f(first, wc, nc) && ok;
        wide_rest = wr;
        narrow_rest = nr;
        first += take;
    }
    ok
}
