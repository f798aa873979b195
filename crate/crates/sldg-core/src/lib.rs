//! Mixed-precision semi-Lagrangian discontinuous Galerkin (SLDG) advection.
//!
//! Each cell of a uniform periodic grid carries `order` Legendre modal
//! coefficients: on cell i with center x_i and width h,
//!
//! ```text
//! u(x) ≈ Σ_j c_ij P_j(ξ),   ξ = 2 (x - x_i) / h ∈ [-1, 1].
//! ```
//!
//! For constant-coefficient advection u_t + a u_x = 0 the exact solution
//! translates: u(x, t + Δt) = u(x - aΔt, t). Projecting the translated field
//! back onto the basis gives an update that couples exactly two upstream
//! cells. With ν = aΔt/h split as ν = i* + α, i* = ⌊ν⌋, α ∈ [0, 1), the
//! characteristic foot of cell i spans cells i - i* - 1 and i - i*, and
//!
//! ```text
//! c_i^{new} = A c_{i-i*-1} + B c_{i-i*}        (indices mod N)
//! ```
//!
//! The matrices depend only on α and the order. Substituting the upstream
//! expansion into c_j^{new} = (2j+1)/2 ∫ u(ξ - 2ν) P_j(ξ) dξ and splitting
//! the integral at the cell boundary crossing ξ = 2α - 1:
//!
//! ```text
//! A_jl = (2j+1)/2 ∫_{-1}^{2α-1} P_l(ξ + 2 - 2α) P_j(ξ) dξ
//! B_jl = (2j+1)/2 ∫_{2α-1}^{1}  P_l(ξ - 2α)     P_j(ξ) dξ
//! ```
//!
//! Both integrands are polynomials of degree ≤ 2(order-1), so an
//! order-node Gauss–Legendre rule on each subinterval is exact. The update
//! is unconditionally stable (it is an L2 projection of the exact solution)
//! and carries no CFL restriction beyond picking i* and α.
//!
//! The mixed-precision part: coefficient magnitudes decay like c_j ~ h^j for
//! smooth data, so the grid stores the first `wide` coefficients of each cell
//! in f64 and the remaining `order - wide` in f32. All arithmetic runs in
//! f64; narrowing happens once per store. See [`CoefficientGrid`].
//!
//! The crate is `no_std`-compatible (`alloc` required): disable the default
//! `std` feature and enable `libm` for the float shims. The `parallel`
//! feature (default, implies `std`) parallelizes the advection sweeps with
//! rayon; results are bit-identical for any thread count because every
//! destination cell is written independently and reductions stay serial.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod advect;
pub mod basis;
pub mod error;
pub mod grid;
mod kernel;
mod math;
mod par;
pub mod phase;
pub mod project;
pub mod vlasov;

pub use advect::{
    advect_constant, advect_constant_with, advect_rows, KernelKind, ShiftDecomposition,
    ShiftMatrices, SweepAxis,
};
pub use basis::{legendre_all, legendre_all_into, QuadratureRule, MAX_QUADRATURE_NODES};
pub use error::{Error, Result};
pub use grid::{CoefficientGrid, Domain1D, PrecisionLayout};
pub use phase::{
    boundary_mass_ratio, evaluate_phase, phase_l2_error, phase_l2_norm, phase_mass,
    project_phase_function, PhaseLayout, PhaseSpaceGrid,
};
pub use project::{evaluate, l2_error, l2_norm, project_function, project_function_with, total_mass};
pub use vlasov::{compute_density, FieldMode, FieldState, VlasovStepper};
