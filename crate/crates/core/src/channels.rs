//! Degradation channels: beamsplitter scattering against vacuum and
//! Gaussian phase fluctuation.
//!
//! Scattering mixes arm A with a vacuum ancilla on a beamsplitter of
//! transmittance η = cos²θ′ and traces the ancilla out. In the displaced
//! two-qubit encoding this has an exact 4×4 form — a rank-2 mixture
//!
//! ```text
//! ρ(η) = (𝒩²/2) [ (1−η)|00⟩⟨00| + ṽ₀ṽ₀† ],   ṽ₀ = w|00⟩ + s|01⟩ + √η|10⟩
//! ```
//!
//! with w = α(1+s) — zero for DPC (s = −1), α₀√2 for PAC (s = +1) — where
//! the A-side qubit basis is displaced by α√η and the B side by α. The
//! Fock-basis oracle [`scattering_fock_oracle`] rebuilds the same channel
//! by brute force from the tripartite unitary and validates the 4×4 form.
//!
//! Phase noise multiplies mode A by e^{iφn̂} with φ ~ N(0, σ²) and averages;
//! in the Fock basis that is elementwise damping of the A-coherences,
//! ρ[(a b),(a′b′)] ↦ g(a−a′)·ρ[(a b),(a′b′)], with g(Δ) = ⟨e^{iΔφ}⟩
//! evaluated by Gauss–Hermite quadrature (node-doubling certificate) or by
//! the exact Gaussian characteristic function e^{−Δ²σ²/2}.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::fock::{
    beamsplitter_op, coherent_amplitudes, displaced_one_amplitudes, DensityMatrix, HilbertSpec,
};
use crate::quadrature::gauss_hermite;
use crate::states::{build_state_fock, norm_const, ChannelKind};

type C64 = Complex64;

/// Convergence tolerance for the phase-average node-doubling ladder
/// (max elementwise change between consecutive node counts).
pub const PHASE_AVERAGE_TOL: f64 = 1e-9;
/// Gauss–Hermite node ladder for the phase average: start small, double
/// until the result is stationary.
pub const PHASE_AVERAGE_LADDER: [usize; 6] = [41, 81, 161, 321, 641, 1281];

// ═══════════════════════════════════════════════════════════════════════
// Scattering
// ═══════════════════════════════════════════════════════════════════════

/// Exact 4×4 scattered state in the displaced two-qubit basis
/// {D̂(α√η)|0⟩, D̂(α√η)|1⟩}_A ⊗ {D̂(α)|0⟩, D̂(α)|1⟩}_B.
///
/// # Errors
///
/// Returns [`CoreError::InvalidParameter`] for α₀ or η out of range.
pub fn scattering_mixture(kind: ChannelKind, alpha0: f64, eta: f64) -> Result<DensityMatrix> {
    if !alpha0.is_finite() || alpha0 < 0.0 {
        return Err(CoreError::InvalidParameter(format!(
            "alpha0 must be a nonnegative real, got {alpha0}"
        )));
    }
    if !eta.is_finite() || !(0.0..=1.0).contains(&eta) {
        return Err(CoreError::InvalidParameter(format!(
            "eta must lie in [0, 1], got {eta}"
        )));
    }
    let s = kind.sign();
    let alpha = alpha0 / 2.0_f64.sqrt();
    let w = alpha * (1.0 + s);
    let nn = norm_const(kind, alpha0).powi(2);

    // Flat order |q_A q_B⟩: 00, 01, 10, 11.
    let v0 = DVector::from_vec(vec![
        C64::new(w, 0.0),
        C64::new(s, 0.0),
        C64::new(eta.sqrt(), 0.0),
        C64::new(0.0, 0.0),
    ]);
    let mut m = &v0 * v0.adjoint();
    m[(0, 0)] += C64::new(1.0 - eta, 0.0);
    m *= C64::new(0.5 * nn, 0.0);

    DensityMatrix::new(HilbertSpec::new(&[2, 2])?, m)
}

/// Closed-form spectrum of the scattered DPC state, descending:
/// {(1+η)/2, (1−η)/2, 0, 0}.
pub fn scattering_spectrum_dp(eta: f64) -> [f64; 4] {
    [0.5 * (1.0 + eta), 0.5 * (1.0 - eta), 0.0, 0.0]
}

/// Closed-form spectrum of the scattered PAC state, descending:
/// {(α₀² + 1 ± √(α₀⁴ + 2α₀² + η²)) / (2(α₀²+1)), 0, 0}.
pub fn scattering_spectrum_pa(alpha0: f64, eta: f64) -> [f64; 4] {
    let n0 = alpha0 * alpha0;
    let root = (n0 * n0 + 2.0 * n0 + eta * eta).sqrt();
    let denom = 2.0 * (n0 + 1.0);
    [(n0 + 1.0 + root) / denom, (n0 + 1.0 - root) / denom, 0.0, 0.0]
}

/// Embed a state over displaced two-qubit bases into the two-mode Fock
/// basis: mode A basis {D̂(α_A)|0⟩, D̂(α_A)|1⟩}, mode B likewise with α_B.
///
/// # Errors
///
/// Returns [`CoreError::InvalidParameter`] unless `rho` is 4×4 over two
/// qubit modes and `space` has two equal-dimension modes.
pub fn embed_displaced_two_qubit(
    rho: &DensityMatrix,
    alpha_a: C64,
    alpha_b: C64,
    space: &HilbertSpec,
) -> Result<DensityMatrix> {
    if rho.space().mode_dims() != [2, 2] {
        return Err(CoreError::InvalidParameter(
            "embedding expects a two-qubit (4-dim) state".into(),
        ));
    }
    if space.n_modes() != 2 {
        return Err(CoreError::InvalidParameter(format!(
            "embedding target must be a two-mode space, got {} modes",
            space.n_modes()
        )));
    }
    let (da, db) = (space.mode_dim(0), space.mode_dim(1));
    let basis_a = [
        coherent_amplitudes(da, alpha_a),
        displaced_one_amplitudes(da, alpha_a),
    ];
    let basis_b = [
        coherent_amplitudes(db, alpha_b),
        displaced_one_amplitudes(db, alpha_b),
    ];
    // Columns of the 4 embedded product vectors, then ρ_F = E ρ E†.
    let mut e = DMatrix::<C64>::zeros(da * db, 4);
    for qa in 0..2 {
        for qb in 0..2 {
            for m in 0..da {
                for n in 0..db {
                    e[(m * db + n, qa * 2 + qb)] = basis_a[qa][m] * basis_b[qb][n];
                }
            }
        }
    }
    let m = &e * rho.matrix() * e.adjoint();
    Ok(DensityMatrix::from_parts_unchecked(space.clone(), m))
}

/// Brute-force scattering channel in the truncated Fock basis: build the
/// pair state, couple arm A to a vacuum ancilla with a beamsplitter of
/// transmittance η (θ′ = arccos√η, balanced phase convention), and trace
/// the ancilla out.
///
/// This is the independent oracle for [`scattering_mixture`]; the two
/// agree elementwise to better than 1e−7 once the 4×4 form is embedded
/// with A displaced by α√η.
///
/// # Errors
///
/// Propagates state-construction errors ([`CoreError::TruncationInadequate`],
/// shape errors) and parameter validation from the mixture path.
pub fn scattering_fock_oracle(
    kind: ChannelKind,
    alpha0: f64,
    eta: f64,
    space: &HilbertSpec,
) -> Result<DensityMatrix> {
    if !eta.is_finite() || !(0.0..=1.0).contains(&eta) {
        return Err(CoreError::InvalidParameter(format!(
            "eta must lie in [0, 1], got {eta}"
        )));
    }
    let psi = build_state_fock(kind, alpha0, space)?;
    let d = space.mode_dim(0);

    // Beamsplitter on (A, ancilla) in a dedicated two-mode space. The
    // ancilla starts in vacuum, so only the c′ = 0 column block of the
    // unitary acts: Φ[(a,c), b] = Σ_{a′} U[(a,c), (a′,0)] ψ[a′, b].
    let theta = eta.sqrt().acos();
    let bs_space = HilbertSpec::two_mode(d)?;
    let u = beamsplitter_op(&bs_space, (0, 1), theta, 0.0, std::f64::consts::PI)?;
    let u_cols = DMatrix::from_fn(d * d, d, |row, a_prime| u.matrix()[(row, a_prime * d)]);
    let psi_mat = psi.coefficient_matrix()?;
    let phi = u_cols * psi_mat; // (a,c) × b

    // ρ^{AB} = Tr_C |Φ⟩⟨Φ| = Σ_c v_c v_c† with v_c[(a,b)] = Φ[(a,c), b].
    let mut rho = DMatrix::<C64>::zeros(d * d, d * d);
    let mut v = DVector::<C64>::zeros(d * d);
    for c in 0..d {
        for a in 0..d {
            for b in 0..d {
                v[a * d + b] = phi[(a * d + c, b)];
            }
        }
        rho.gerc(C64::new(1.0, 0.0), &v, &v, C64::new(1.0, 0.0));
    }
    DensityMatrix::new(space.clone(), rho)
}

// ═══════════════════════════════════════════════════════════════════════
// Phase noise
// ═══════════════════════════════════════════════════════════════════════

/// Options for the Gauss–Hermite phase average.
#[derive(Debug, Clone, Copy)]
pub struct PhaseAverageOptions {
    /// Node-doubling convergence tolerance (max elementwise change).
    pub tol: f64,
    /// Largest node count tried before giving up.
    pub max_nodes: usize,
}

impl Default for PhaseAverageOptions {
    fn default() -> Self {
        Self {
            tol: PHASE_AVERAGE_TOL,
            max_nodes: *PHASE_AVERAGE_LADDER.last().expect("ladder nonempty"),
        }
    }
}

/// A phase-averaged state together with its convergence certificate.
#[derive(Debug, Clone)]
pub struct PhaseAveraged {
    /// The averaged state.
    pub rho: DensityMatrix,
    /// Gauss–Hermite node count that produced `rho` (1 when σ = 0).
    pub nodes: usize,
    /// Max elementwise change at the last node doubling (0 when σ = 0).
    pub residual: f64,
    /// Whether the doubling ladder met the tolerance.
    pub converged: bool,
}

/// Damping factors g(Δ) = Σ_k (w_k/√π) e^{iΔ√2σ t_k} for Δ = 0…d−1.
/// Symmetric nodes make the sum real; g(0) = 1 exactly up to the weight
/// sum, so the trace is preserved.
fn damping_factors(d: usize, sigma: f64, nodes: usize) -> Result<Vec<f64>> {
    let rule = gauss_hermite(nodes)?;
    let scale = 2.0_f64.sqrt() * sigma;
    let inv_sqrt_pi = std::f64::consts::PI.sqrt().recip();
    let mut g = vec![0.0; d];
    for (delta, slot) in g.iter_mut().enumerate() {
        let mut sum = 0.0;
        for (&t, &w) in rule.nodes.iter().zip(rule.weights.iter()) {
            sum += w * (delta as f64 * scale * t).cos();
        }
        *slot = sum * inv_sqrt_pi;
    }
    Ok(g)
}

/// Apply the A-mode damping profile g to a two-mode state.
fn damp_mode_a(rho: &DensityMatrix, g: &[f64]) -> DensityMatrix {
    let space = rho.space();
    let (da, db) = (space.mode_dim(0), space.mode_dim(1));
    let src = rho.matrix();
    let mut out = DMatrix::<C64>::zeros(da * db, da * db);
    for a in 0..da {
        for ap in 0..da {
            let factor = g[a.abs_diff(ap)];
            for b in 0..db {
                for bp in 0..db {
                    let (r, c) = (a * db + b, ap * db + bp);
                    out[(r, c)] = src[(r, c)] * factor;
                }
            }
        }
    }
    DensityMatrix::from_parts_unchecked(space.clone(), out)
}

fn phase_average_impl(
    rho: &DensityMatrix,
    sigma: f64,
    options: &PhaseAverageOptions,
) -> Result<PhaseAveraged> {
    if rho.space().n_modes() != 2 {
        return Err(CoreError::InvalidParameter(format!(
            "phase average expects a two-mode state, got {} modes",
            rho.space().n_modes()
        )));
    }
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(CoreError::InvalidParameter(format!(
            "sigma must be a nonnegative real, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(PhaseAveraged {
            rho: rho.clone(),
            nodes: 1,
            residual: 0.0,
            converged: true,
        });
    }

    let da = rho.space().mode_dim(0);
    let mut prev: Option<(usize, DensityMatrix)> = None;
    let mut best_residual = f64::INFINITY;
    for &nodes in PHASE_AVERAGE_LADDER.iter().filter(|&&n| n <= options.max_nodes) {
        let cur = damp_mode_a(rho, &damping_factors(da, sigma, nodes)?);
        if let Some((_, ref prev_rho)) = prev {
            let residual = (cur.matrix() - prev_rho.matrix())
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            best_residual = residual;
            if residual <= options.tol {
                return Ok(PhaseAveraged {
                    rho: cur,
                    nodes,
                    residual,
                    converged: true,
                });
            }
        }
        prev = Some((nodes, cur));
    }
    let (nodes, rho_best) = prev.expect("ladder has at least one entry");
    Ok(PhaseAveraged {
        rho: rho_best,
        nodes,
        residual: best_residual,
        converged: false,
    })
}

/// Average a two-mode state over a Gaussian phase on mode A:
/// ρ ↦ ∫dφ p(φ) e^{iφn̂_A} ρ e^{−iφn̂_A} with φ ~ N(0, σ²).
///
/// Evaluated by Gauss–Hermite quadrature with node doubling
/// (41 → 81 → … → `max_nodes`) until the result changes by at most
/// `options.tol` elementwise. σ = 0 returns the input exactly.
///
/// # Errors
///
/// [`CoreError::InvalidParameter`] for a non-two-mode input or σ < 0;
/// [`CoreError::QuadratureNonConvergence`] when the ladder is exhausted
/// above tolerance.
pub fn phase_average(
    rho: &DensityMatrix,
    sigma: f64,
    options: &PhaseAverageOptions,
) -> Result<PhaseAveraged> {
    let out = phase_average_impl(rho, sigma, options)?;
    if !out.converged {
        return Err(CoreError::QuadratureNonConvergence {
            nodes: out.nodes,
            residual: out.residual,
        });
    }
    Ok(out)
}

/// [`phase_average`] that reports non-convergence in the certificate
/// (`converged = false`) instead of failing, for callers that accept
/// best-effort results.
///
/// # Errors
///
/// Only parameter/shape validation can fail.
pub fn phase_average_relaxed(
    rho: &DensityMatrix,
    sigma: f64,
    options: &PhaseAverageOptions,
) -> Result<PhaseAveraged> {
    phase_average_impl(rho, sigma, options)
}

/// Exact Gaussian dephasing of mode A: damping by the characteristic
/// function g(Δ) = e^{−Δ²σ²/2}, the analytic limit of the quadrature.
///
/// # Errors
///
/// [`CoreError::InvalidParameter`] for a non-two-mode input or σ < 0.
pub fn dephase_exact(rho: &DensityMatrix, sigma: f64) -> Result<DensityMatrix> {
    if rho.space().n_modes() != 2 {
        return Err(CoreError::InvalidParameter(format!(
            "phase average expects a two-mode state, got {} modes",
            rho.space().n_modes()
        )));
    }
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(CoreError::InvalidParameter(format!(
            "sigma must be a nonnegative real, got {sigma}"
        )));
    }
    let da = rho.space().mode_dim(0);
    let g: Vec<f64> = (0..da)
        .map(|delta| (-0.5 * (delta as f64 * sigma).powi(2)).exp())
        .collect();
    Ok(damp_mode_a(rho, &g))
}

/// Full pipeline: build the pair state, scatter arm A at transmittance η,
/// then average over Gaussian phase noise of standard deviation σ.
///
/// # Errors
///
/// Propagates construction, truncation, and convergence errors from the
/// three stages.
pub fn noisy_channel_state(
    kind: ChannelKind,
    alpha0: f64,
    eta: f64,
    sigma: f64,
    space: &HilbertSpec,
    options: &PhaseAverageOptions,
) -> Result<PhaseAveraged> {
    let scattered = scattering_fock_oracle(kind, alpha0, eta, space)?;
    phase_average(&scattered, sigma, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{eig_hermitian, fock_dim_for, partial_trace, von_neumann_entropy};
    use crate::states::build_state_displaced;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn max_dev(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn lossless_mixture_is_the_pure_projector() {
        for kind in [ChannelKind::Dpc, ChannelKind::Pac] {
            let rho = scattering_mixture(kind, 1.2, 1.0).unwrap();
            let pure = build_state_displaced(kind, 1.2).to_density();
            assert!(max_dev(rho.matrix(), pure.matrix()) < 1e-14);
            assert_relative_eq!(rho.purity(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn mixture_trace_is_one() {
        for kind in [ChannelKind::Dpc, ChannelKind::Pac] {
            for alpha0 in [0.0, 0.5, 2.0] {
                for eta in [0.0, 0.3, 0.9] {
                    let rho = scattering_mixture(kind, alpha0, eta).unwrap();
                    assert_relative_eq!(rho.trace(), 1.0, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn mixture_spectra_match_closed_forms() {
        for alpha0 in [0.5, 1.0, 2.0] {
            for eta in [0.25, 0.5, 0.75] {
                let (vals_dp, _) =
                    eig_hermitian(&scattering_mixture(ChannelKind::Dpc, alpha0, eta).unwrap())
                        .unwrap();
                for (got, want) in vals_dp.iter().zip(scattering_spectrum_dp(eta)) {
                    assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
                }
                let (vals_pa, _) =
                    eig_hermitian(&scattering_mixture(ChannelKind::Pac, alpha0, eta).unwrap())
                        .unwrap();
                for (got, want) in vals_pa.iter().zip(scattering_spectrum_pa(alpha0, eta)) {
                    assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn mixture_matches_fock_oracle() {
        let (alpha0, eta) = (1.0, 0.7);
        let space = HilbertSpec::two_mode(fock_dim_for(alpha0)).unwrap();
        for kind in [ChannelKind::Dpc, ChannelKind::Pac] {
            let oracle = scattering_fock_oracle(kind, alpha0, eta, &space).unwrap();
            let alpha = alpha0 / 2.0_f64.sqrt();
            let embedded = embed_displaced_two_qubit(
                &scattering_mixture(kind, alpha0, eta).unwrap(),
                C64::new(alpha * eta.sqrt(), 0.0),
                C64::new(alpha, 0.0),
                &space,
            )
            .unwrap();
            let dev = max_dev(oracle.matrix(), embedded.matrix());
            assert!(dev < 1e-7, "{kind}: mixture vs oracle deviation {dev:.3e}");
        }
    }

    #[test]
    fn full_transmittance_oracle_preserves_the_input() {
        let space = HilbertSpec::two_mode(fock_dim_for(0.9)).unwrap();
        for kind in [ChannelKind::Dpc, ChannelKind::Pac] {
            let rho = scattering_fock_oracle(kind, 0.9, 1.0, &space).unwrap();
            let pure = build_state_fock(kind, 0.9, &space).unwrap().to_density();
            assert!(max_dev(rho.matrix(), pure.matrix()) < 1e-10);
        }
    }

    #[test]
    fn zero_transmittance_leaves_arm_a_in_vacuum() {
        let space = HilbertSpec::two_mode(fock_dim_for(1.0)).unwrap();
        let rho = scattering_fock_oracle(ChannelKind::Dpc, 1.0, 0.0, &space).unwrap();
        let rho_a = partial_trace(&rho, &[0]).unwrap();
        assert_relative_eq!(rho_a.matrix()[(0, 0)].re, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(von_neumann_entropy(&rho_a).unwrap(), 0.0, epsilon = 1e-8);
    }

    #[test]
    fn zero_sigma_is_the_identity_channel() {
        let space = HilbertSpec::two_mode(fock_dim_for(0.8)).unwrap();
        let rho = scattering_fock_oracle(ChannelKind::Pac, 0.8, 0.6, &space).unwrap();
        let out = phase_average(&rho, 0.0, &PhaseAverageOptions::default()).unwrap();
        assert!(out.converged);
        assert_eq!(out.nodes, 1);
        assert!(max_dev(out.rho.matrix(), rho.matrix()) == 0.0);
    }

    #[test]
    fn quadrature_matches_exact_dephasing() {
        let space = HilbertSpec::two_mode(fock_dim_for(1.0)).unwrap();
        let rho = scattering_fock_oracle(ChannelKind::Dpc, 1.0, 0.7, &space).unwrap();
        let sigma = 0.5;
        let out = phase_average(&rho, sigma, &PhaseAverageOptions::default()).unwrap();
        assert!(out.converged);
        assert!(out.residual <= PHASE_AVERAGE_TOL);
        let exact = dephase_exact(&rho, sigma).unwrap();
        let dev = max_dev(out.rho.matrix(), exact.matrix());
        assert!(dev < 5e-9, "quadrature vs exact characteristic fn: {dev:.3e}");
        // Trace and hermiticity survive the channel.
        assert_relative_eq!(out.rho.trace(), 1.0, epsilon = 1e-12);
        let m = out.rho.matrix();
        assert!(max_dev(m, &m.adjoint()) < 1e-14);
    }

    #[test]
    fn strong_dephasing_removes_a_coherences() {
        let space = HilbertSpec::two_mode(fock_dim_for(1.0)).unwrap();
        let rho = scattering_fock_oracle(ChannelKind::Pac, 1.0, 0.8, &space).unwrap();
        let out = dephase_exact(&rho, 10.0).unwrap();
        let d = space.mode_dim(1);
        let n = out.matrix().nrows();
        let mut worst = 0.0_f64;
        for r in 0..n {
            for c in 0..n {
                // Rows and columns in different A-number sectors.
                if r / d != c / d {
                    worst = worst.max(out.matrix()[(r, c)].norm());
                }
            }
        }
        assert!(worst < 1e-12, "residual A-coherence {worst:.3e}");
    }

    #[test]
    fn convergence_certificate_reports_failure_honestly() {
        // A tiny node cap cannot resolve sigma = 1.5.
        let space = HilbertSpec::two_mode(fock_dim_for(1.0)).unwrap();
        let rho = scattering_fock_oracle(ChannelKind::Dpc, 1.0, 0.7, &space).unwrap();
        let opts = PhaseAverageOptions {
            tol: 1e-9,
            max_nodes: 81,
        };
        assert!(matches!(
            phase_average(&rho, 1.5, &opts),
            Err(CoreError::QuadratureNonConvergence { .. })
        ));
        let relaxed = phase_average_relaxed(&rho, 1.5, &opts).unwrap();
        assert!(!relaxed.converged);
        assert!(relaxed.residual > 1e-9);
        assert_eq!(relaxed.nodes, 81);
    }

    #[test]
    fn pipeline_composes_the_stages() {
        let space = HilbertSpec::two_mode(fock_dim_for(0.7)).unwrap();
        let out = noisy_channel_state(
            ChannelKind::Pac,
            0.7,
            0.6,
            0.4,
            &space,
            &PhaseAverageOptions::default(),
        )
        .unwrap();
        let scattered = scattering_fock_oracle(ChannelKind::Pac, 0.7, 0.6, &space).unwrap();
        let direct = phase_average(&scattered, 0.4, &PhaseAverageOptions::default()).unwrap();
        assert!(max_dev(out.rho.matrix(), direct.rho.matrix()) == 0.0);
        assert!(out.converged);
    }
}
