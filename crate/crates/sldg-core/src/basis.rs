//! Legendre polynomials and Gauss–Legendre quadrature on [-1, 1].
//!
//! The polynomials satisfy the three-term recurrence
//!
//! ```text
//! P_0(x) = 1,  P_1(x) = x,  (j+1) P_{j+1}(x) = (2j+1) x P_j(x) - j P_{j-1}(x)
//! ```
//!
//! and are orthogonal with ∫_{-1}^{1} P_j P_l dx = 2/(2j+1) δ_{jl}. An n-node
//! Gauss–Legendre rule integrates polynomials up to degree 2n-1 exactly.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Largest supported quadrature node count.
pub const MAX_QUADRATURE_NODES: usize = 64;

/// Evaluate P_0(x)..P_p(x) into `out`, where p = out.len() - 1.
///
/// Total function: `x` outside [-1, 1] is evaluated verbatim (callers are
/// expected to pass mapped cell coordinates).
pub fn legendre_all_into(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() == 1 {
        return;
    }
    out[1] = x;
    for j in 1..out.len() - 1 {
        let jf = j as f64;
        out[j + 1] = ((2.0 * jf + 1.0) * x * out[j] - jf * out[j - 1]) / (jf + 1.0);
    }
}

/// Evaluate P_0(x)..P_p(x), allocating the result.
pub fn legendre_all(p: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; p + 1];
    legendre_all_into(x, &mut out);
    out
}

/// Evaluate P_n(x) and its derivative P_n'(x) in one recurrence pass.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p_prev = 1.0;
    let mut p = x;
    for j in 1..n {
        let jf = j as f64;
        let p_next = ((2.0 * jf + 1.0) * x * p - jf * p_prev) / (jf + 1.0);
        p_prev = p;
        p = p_next;
    }
    // P_n'(x) = n (x P_n - P_{n-1}) / (x^2 - 1), valid away from x = ±1;
    // quadrature roots are interior so the denominator never vanishes here.
    let dp = (n as f64) * (x * p - p_prev) / (x * x - 1.0);
    (p, dp)
}

/// Gauss–Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// Build the n-node Gauss–Legendre rule.
    ///
    /// Nodes are the roots of P_n, found by Newton iteration from the
    /// cos(π(i - 1/4)/(n + 1/2)) starting guesses; weights are
    /// w_i = 2 / ((1 - x_i²) P_n'(x_i)²). The half rule is computed and
    /// mirrored so the node set is exactly symmetric about 0.
    pub fn gauss_legendre(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_QUADRATURE_NODES {
            return Err(Error::QuadratureOrder(n));
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let half = n / 2;
        for i in 0..half {
            // Root index counted from the right so guesses decrease with i.
            let k = (i + 1) as f64;
            let mut z = math::cos(core::f64::consts::PI * (k - 0.25) / (n as f64 + 0.5));
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, z);
                dp = d;
                let step = p / d;
                z -= step;
                if step.abs() <= 1e-16 && p.abs() <= 1e-15 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            // z is the i-th largest positive root; mirror to the left half.
            nodes[n - 1 - i] = z;
            nodes[i] = -z;
            weights[n - 1 - i] = w;
            weights[i] = w;
        }
        if n % 2 == 1 {
            let (_, dp) = legendre_with_derivative(n, 0.0);
            nodes[half] = 0.0;
            weights[half] = 2.0 / (dp * dp);
        }
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Σ_q w_q f(x_q), the quadrature approximation of ∫_{-1}^{1} f.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Table of basis values at the nodes: entry q*order + j is P_j(x_q).
    ///
    /// Shared by projection, reconstruction and the modal/nodal transforms.
    pub fn basis_table(&self, order: usize) -> Vec<f64> {
        let mut table = vec![0.0; self.len() * order];
        for (q, &x) in self.nodes.iter().enumerate() {
            legendre_all_into(x, &mut table[q * order..(q + 1) * order]);
        }
        table
    }
}
