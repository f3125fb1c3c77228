//! Gaussian quadrature rules.
//!
//! Nodes and weights are obtained by the Golub–Welsch method: the rule of
//! order n is the eigensystem of the n×n symmetric tridiagonal Jacobi
//! matrix of the orthogonal-polynomial family. Eigenvalues give the nodes;
//! weights follow from the first components of the normalized eigenvectors
//! scaled by the zeroth moment μ₀ of the weight function.
//!
//! Two families are provided:
//!
//! * **Gauss–Legendre** — weight 1 on [−1, 1] (μ₀ = 2), off-diagonal
//!   β_k = k/√(4k²−1); used for quadrature-space integrals after affine
//!   rescaling to a finite window.
//! * **Gauss–Hermite** — weight e^{−t²} on ℝ (μ₀ = √π), off-diagonal
//!   β_k = √(k/2); used for Gaussian phase averages.
//!
//! The tridiagonal eigensolver is a standard implicit-shift QL iteration
//! that accumulates only the first row of the eigenvector matrix, which is
//! all the weights need; it runs in O(n²) and does not overflow at large n
//! (unlike approaches that evaluate the polynomials themselves).

use crate::error::{CoreError, Result};

/// A quadrature rule: paired nodes and weights of equal length.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    /// Quadrature nodes, ascending.
    pub nodes: Vec<f64>,
    /// Quadrature weights, matched to `nodes`.
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// Integrate a function against this rule.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Maximum implicit-QL sweeps per eigenvalue before giving up.
const MAX_QL_SWEEPS: usize = 50;

/// Solve the symmetric tridiagonal eigenproblem defined by `diag` and
/// `offdiag` (lengths n and n−1), returning ascending eigenvalues paired
/// with μ₀ × (first eigenvector component)² — i.e. Gaussian quadrature
/// nodes and weights for the Jacobi matrix of an orthonormal polynomial
/// family with zeroth moment `mu0`.
fn golub_welsch(diag: &[f64], offdiag: &[f64], mu0: f64) -> Result<QuadratureRule> {
    let n = diag.len();
    assert_eq!(offdiag.len() + 1, n, "off-diagonal length must be n-1");
    let mut d = diag.to_vec();
    // e[i] couples rows i and i+1; e[n-1] is a zero sentinel.
    let mut e = offdiag.to_vec();
    e.push(0.0);
    let mut z = vec![0.0; n];
    z[0] = 1.0;

    for l in 0..n {
        let mut sweeps = 0;
        loop {
            // Find the first negligible coupling at or after row l.
            let mut m = l;
            while m + 1 < n {
                let scale = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * scale {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_QL_SWEEPS {
                return Err(CoreError::OptimizerStagnation(e[l].abs(), sweeps));
            }

            // Implicit Wilkinson-style shift from the leading 2×2 block.
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c) = (1.0_f64, 1.0_f64);
            let mut p = 0.0_f64;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    // Deflate: the rotation chain has annihilated early.
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                // Carry the first eigenvector row through the rotation.
                f = z[i + 1];
                z[i + 1] = s * z[i] + c * f;
                z[i] = c * z[i] - s * f;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).expect("eigenvalues are finite"));
    Ok(QuadratureRule {
        nodes: order.iter().map(|&i| d[i]).collect(),
        weights: order.iter().map(|&i| mu0 * z[i] * z[i]).collect(),
    })
}

/// Gauss–Legendre rule of order `n` on the reference interval [−1, 1].
///
/// # Errors
///
/// Returns [`CoreError::InvalidParameter`] for `n = 0`.
pub fn gauss_legendre(n: usize) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(CoreError::InvalidParameter(
            "quadrature order must be at least 1".into(),
        ));
    }
    let diag = vec![0.0; n];
    let offdiag: Vec<f64> = (1..n)
        .map(|k| {
            let k = k as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        })
        .collect();
    golub_welsch(&diag, &offdiag, 2.0)
}

/// Gauss–Legendre rule of order `n` rescaled to the interval [`lo`, `hi`].
///
/// # Errors
///
/// Returns [`CoreError::InvalidParameter`] for `n = 0` or a degenerate
/// interval.
pub fn gauss_legendre_on(n: usize, lo: f64, hi: f64) -> Result<QuadratureRule> {
    if !(hi > lo) {
        return Err(CoreError::InvalidParameter(format!(
            "quadrature interval [{lo}, {hi}] is empty"
        )));
    }
    let base = gauss_legendre(n)?;
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    Ok(QuadratureRule {
        nodes: base.nodes.iter().map(|t| mid + half * t).collect(),
        weights: base.weights.iter().map(|w| half * w).collect(),
    })
}

/// Gauss–Hermite rule of order `n` for the weight e^{−t²} on ℝ.
///
/// ∫ f(t) e^{−t²} dt ≈ Σ wᵢ f(tᵢ). The weights sum to √π.
///
/// # Errors
///
/// Returns [`CoreError::InvalidParameter`] for `n = 0`.
pub fn gauss_hermite(n: usize) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(CoreError::InvalidParameter(
            "quadrature order must be at least 1".into(),
        ));
    }
    let diag = vec![0.0; n];
    let offdiag: Vec<f64> = (1..n).map(|k| (k as f64 / 2.0).sqrt()).collect();
    golub_welsch(&diag, &offdiag, std::f64::consts::PI.sqrt())
}
