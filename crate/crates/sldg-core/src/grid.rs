//! Mixed-precision storage for per-cell Legendre coefficients.
//!
//! For smooth data the modal coefficients decay like c_j ~ h^j, so the low
//! modes carry almost all of the information (and all of the mass: c_0 is
//! the cell average). [`CoefficientGrid`] exploits this by keeping the first
//! `wide` coefficients of every cell in f64 and the remaining
//! `order - wide` in f32. Reads promote to f64 (exact); writes round the
//! narrow tail to nearest-even, and a write whose magnitude exceeds the f32
//! range is an error rather than a silent infinity.
//!
//! Layout: two buffers split by precision class, each cell-major — cell i's
//! wide coefficients live at `wide[i*d..(i+1)*d]` and its narrow ones at
//! `narrow[i*(o-d)..(i+1)*(o-d)]`. This keeps both streams contiguous and
//! unpadded, so a sweep touches exactly `8d + 4(o-d)` bytes per cell.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Uniform periodic 1D grid of `cells` half-open cells on [x_min, x_max).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain1D {
    x_min: f64,
    x_max: f64,
    cells: usize,
}

impl Domain1D {
    pub fn new(x_min: f64, x_max: f64, cells: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) {
            return Err(Error::NonFinite);
        }
        if !(x_max > x_min) || cells == 0 {
            return Err(Error::InvalidArgument("domain needs x_max > x_min and cells >= 1"));
        }
        Ok(Self { x_min, x_max, cells })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    /// Cell width h = (x_max - x_min) / N.
    pub fn cell_width(&self) -> f64 {
        self.width() / self.cells as f64
    }

    /// Center of cell i; cell i covers [x_min + i·h, x_min + (i+1)·h).
    pub fn cell_center(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.cell_width()
    }
}

/// Per-cell precision split: `wide` f64 coefficients, `order - wide` f32.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrecisionLayout {
    order: usize,
    wide: usize,
}

impl PrecisionLayout {
    /// `order` coefficients per cell, the first `wide` of them in f64.
    ///
    /// The order is capped at [`crate::basis::MAX_QUADRATURE_NODES`] so that
    /// every cell fits the fixed-size scratch buffers used on hot paths and
    /// exact projection quadrature stays available.
    pub fn new(order: usize, wide: usize) -> Result<Self> {
        if order == 0 || order > crate::basis::MAX_QUADRATURE_NODES {
            return Err(Error::InvalidArgument("order must be in 1..=64"));
        }
        if wide > order {
            return Err(Error::InvalidArgument("wide coefficient count exceeds order"));
        }
        Ok(Self { order, wide })
    }

    /// All coefficients in f64 (the reference configuration).
    pub fn all_wide(order: usize) -> Result<Self> {
        Self::new(order, order)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn wide(&self) -> usize {
        self.wide
    }

    pub fn narrow(&self) -> usize {
        self.order - self.wide
    }

    pub fn bytes_per_cell(&self) -> usize {
        8 * self.wide + 4 * self.narrow()
    }

    /// Memory footprint of the all-f64 layout divided by this layout's:
    /// 8o / (8d + 4(o−d)). Equals 1.0 when d = o, 2.0 when d = 0.
    pub fn memory_reduction(&self) -> f64 {
        (8 * self.order) as f64 / self.bytes_per_cell() as f64
    }
}

/// Round to f32 (nearest-even), rejecting values outside the f32 range.
///
/// Underflow to zero or a subnormal is fine; overflow to ±Inf is not, since
/// a single Inf silently destroys every later reduction over the grid.
#[inline]
pub(crate) fn narrow_value(v: f64) -> Result<f32> {
    let c = v as f32;
    if c.is_infinite() {
        return Err(Error::NarrowOverflow(v));
    }
    Ok(c)
}

/// Legendre coefficients for every cell of a 1D grid, split by precision.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientGrid {
    dom: Domain1D,
    layout: PrecisionLayout,
    wide_store: Vec<f64>,
    narrow_store: Vec<f32>,
}

impl CoefficientGrid {
    /// Zero-initialized grid.
    pub fn new(dom: Domain1D, layout: PrecisionLayout) -> Self {
        let n = dom.cells();
        Self {
            dom,
            layout,
            wide_store: vec![0.0; n * layout.wide()],
            narrow_store: vec![0.0; n * layout.narrow()],
        }
    }

    /// Reassemble a grid from its raw buffers (snapshot restore path).
    pub fn from_raw_parts(
        dom: Domain1D,
        layout: PrecisionLayout,
        wide_store: Vec<f64>,
        narrow_store: Vec<f32>,
    ) -> Result<Self> {
        if wide_store.len() != dom.cells() * layout.wide() {
            return Err(Error::LengthMismatch {
                expected: dom.cells() * layout.wide(),
                got: wide_store.len(),
            });
        }
        if narrow_store.len() != dom.cells() * layout.narrow() {
            return Err(Error::LengthMismatch {
                expected: dom.cells() * layout.narrow(),
                got: narrow_store.len(),
            });
        }
        Ok(Self { dom, layout, wide_store, narrow_store })
    }

    pub fn domain(&self) -> &Domain1D {
        &self.dom
    }

    pub fn layout(&self) -> PrecisionLayout {
        self.layout
    }

    pub fn cells(&self) -> usize {
        self.dom.cells()
    }

    pub fn order(&self) -> usize {
        self.layout.order()
    }

    /// Payload bytes: N · (8d + 4(o−d)). Excludes struct overhead.
    pub fn memory_bytes(&self) -> usize {
        self.cells() * self.layout.bytes_per_cell()
    }

    pub fn wide_store(&self) -> &[f64] {
        &self.wide_store
    }

    pub fn narrow_store(&self) -> &[f32] {
        &self.narrow_store
    }

    /// Both buffers mutably; used by the advection kernels, which write
    /// whole cells directly to avoid a bounce through a scratch slice.
    pub(crate) fn stores_mut(&mut self) -> (&mut [f64], &mut [f32]) {
        (&mut self.wide_store, &mut self.narrow_store)
    }

    fn check_cell(&self, i: usize) -> Result<()> {
        if i >= self.cells() {
            return Err(Error::IndexOutOfRange { index: i, len: self.cells() });
        }
        Ok(())
    }

    /// Coefficient c_ij as f64 (narrow slots promote exactly).
    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        let d = self.layout.wide();
        if j < d {
            self.wide_store[i * d + j]
        } else {
            let nn = self.layout.narrow();
            f64::from(self.narrow_store[i * nn + (j - d)])
        }
    }

    /// Copy cell i's coefficients into `out` (length must equal the order).
    pub fn get_cell(&self, i: usize, out: &mut [f64]) -> Result<()> {
        self.check_cell(i)?;
        if out.len() != self.order() {
            return Err(Error::LengthMismatch { expected: self.order(), got: out.len() });
        }
        let d = self.layout.wide();
        let nn = self.layout.narrow();
        out[..d].copy_from_slice(&self.wide_store[i * d..(i + 1) * d]);
        for (o, &v) in out[d..].iter_mut().zip(&self.narrow_store[i * nn..(i + 1) * nn]) {
            *o = f64::from(v);
        }
        Ok(())
    }

    /// Store cell i's coefficients, rounding slots ≥ wide to f32.
    ///
    /// Rejects non-finite input and narrow-slot values outside the f32
    /// range; on error the cell is left unmodified.
    pub fn set_cell(&mut self, i: usize, values: &[f64]) -> Result<()> {
        self.check_cell(i)?;
        if values.len() != self.order() {
            return Err(Error::LengthMismatch { expected: self.order(), got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let d = self.layout.wide();
        let nn = self.layout.narrow();
        // Validate the narrow tail before touching either store, so a
        // failing call leaves the cell in its previous state.
        let mut narrowed = [0.0f32; crate::basis::MAX_QUADRATURE_NODES];
        for (slot, &v) in narrowed[..nn].iter_mut().zip(&values[d..]) {
            *slot = narrow_value(v)?;
        }
        self.wide_store[i * d..(i + 1) * d].copy_from_slice(&values[..d]);
        self.narrow_store[i * nn..(i + 1) * nn].copy_from_slice(&narrowed[..nn]);
        Ok(())
    }

    /// Convert every cell to `layout`, re-rounding where precision shrinks.
    pub fn with_layout(&self, layout: PrecisionLayout) -> Result<Self> {
        if layout.order() != self.order() {
            return Err(Error::GridMismatch("layout order differs from grid order"));
        }
        let mut out = Self::new(self.dom, layout);
        let mut cell = vec![0.0; self.order()];
        for i in 0..self.cells() {
            self.get_cell(i, &mut cell)?;
            out.set_cell(i, &cell)?;
        }
        Ok(out)
    }
}
