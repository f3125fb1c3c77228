//! The two hybrid bipartite states: photon-depleted (DPC) and
//! photon-added (PAC) coherent pairs.
//!
//! Both start from two identical coherent beams |α⟩|α⟩ with α = α₀/√2 and
//! coherently delocalize a single photon operation across the pair:
//!
//! ```text
//! |ψ∓⟩ = 𝒩/√2 (â† ∓ b̂†) |α⟩|α⟩      (− DPC, + PAC)
//! ```
//!
//! with 𝒩 = 1 for DPC and 𝒩 = 1/√(1+α₀²) for PAC. Each state admits an
//! exact two-qubit representation over the displaced number basis
//! {D̂(α)|0⟩, D̂(α)|1⟩} per mode, which is orthonormal — that 4×4 encoding
//! is what makes the scattering channel exactly solvable.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::fock::{
    coherent_amplitudes, displaced_one_amplitudes, fock_dim_for, HilbertSpec, Ket,
};

type C64 = Complex64;

/// Which single-photon operation is delocalized across the pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelKind {
    /// Photon-depleted pair: the − superposition (annihilation-like).
    Dpc,
    /// Photon-added pair: the + superposition (creation on both arms).
    Pac,
}

impl ChannelKind {
    /// Superposition sign s: −1 for DPC, +1 for PAC.
    pub fn sign(self) -> f64 {
        match self {
            ChannelKind::Dpc => -1.0,
            ChannelKind::Pac => 1.0,
        }
    }

    /// Lower-case label used in I/O.
    pub fn label(self) -> &'static str {
        match self {
            ChannelKind::Dpc => "dpc",
            ChannelKind::Pac => "pac",
        }
    }
}

impl std::str::FromStr for ChannelKind {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dpc" => Ok(ChannelKind::Dpc),
            "pac" => Ok(ChannelKind::Pac),
            other => Err(CoreError::InvalidParameter(format!(
                "unknown channel kind {other:?} (expected \"dpc\" or \"pac\")"
            ))),
        }
    }
}

impl std::fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Physical parameters of a channel configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    alpha0: f64,
    eta: f64,
    sigma: f64,
}

impl ChannelParams {
    /// Validate and bundle the channel parameters.
    ///
    /// # Arguments
    ///
    /// * `alpha0` — input coherent amplitude α₀ ≥ 0 (so n₀ = α₀²)
    /// * `eta` — scattering transmittance η ∈ [0, 1]
    /// * `sigma` — phase-noise standard deviation σ ≥ 0 (radians)
    ///
    /// # Errors
    ///
    /// Returns [`CoreError::InvalidParameter`] when any value is outside
    /// its range or not finite.
    pub fn new(alpha0: f64, eta: f64, sigma: f64) -> Result<Self> {
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
        if !sigma.is_finite() || sigma < 0.0 {
            return Err(CoreError::InvalidParameter(format!(
                "sigma must be a nonnegative real, got {sigma}"
            )));
        }
        Ok(Self {
            alpha0,
            eta,
            sigma,
        })
    }

    /// Input coherent amplitude α₀.
    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    /// Scattering transmittance η.
    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Phase-noise standard deviation σ (radians).
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Per-mode coherent amplitude α = α₀/√2.
    pub fn alpha(&self) -> f64 {
        self.alpha0 / 2.0_f64.sqrt()
    }

    /// Mean input photon number n₀ = α₀².
    pub fn n0(&self) -> f64 {
        self.alpha0 * self.alpha0
    }
}

/// Normalization constant 𝒩 of the pair state: 1 for DPC,
/// 1/√(1+α₀²) for PAC.
pub fn norm_const(kind: ChannelKind, alpha0: f64) -> f64 {
    match kind {
        ChannelKind::Dpc => 1.0,
        ChannelKind::Pac => 1.0 / (1.0 + alpha0 * alpha0).sqrt(),
    }
}

/// Build |ψ⟩ = 𝒩/√2 (â† ± b̂†)|α⟩|α⟩ in the truncated Fock basis.
///
/// The amplitudes follow directly from the coherent expansion:
/// ψ[m,n] = 𝒩/√2 (√m c_{m−1} c_n ± c_m √n c_{n−1}) with c the coherent
/// coefficients of |α⟩. The result is renormalized exactly after checking
/// that the truncation loses less than 1e−10 of the norm.
///
/// # Errors
///
/// [`CoreError::InvalidParameter`] unless `space` has two equal-dimension
/// modes; [`CoreError::TruncationInadequate`] when the per-mode dimension
/// is too small for α₀ (the same rule the displacement operator uses) or
/// when the truncated norm deviates from one by more than 1e−10.
pub fn build_state_fock(kind: ChannelKind, alpha0: f64, space: &HilbertSpec) -> Result<Ket> {
    if alpha0 < 0.0 || !alpha0.is_finite() {
        return Err(CoreError::InvalidParameter(format!(
            "alpha0 must be a nonnegative real, got {alpha0}"
        )));
    }
    if space.n_modes() != 2 {
        return Err(CoreError::InvalidParameter(format!(
            "pair state needs a two-mode space, got {} modes",
            space.n_modes()
        )));
    }
    if space.mode_dim(0) != space.mode_dim(1) {
        return Err(CoreError::UnequalModeDims(
            space.mode_dim(0),
            space.mode_dim(1),
        ));
    }
    let d = space.mode_dim(0);
    if alpha0 * alpha0 + 6.0 * alpha0 + 10.0 > d as f64 {
        return Err(CoreError::TruncationInadequate(format!(
            "pair state at alpha0 = {alpha0} needs per-mode dimension > {:.0}, space has {d}",
            alpha0 * alpha0 + 6.0 * alpha0 + 10.0
        )));
    }

    let s = kind.sign();
    let norm = norm_const(kind, alpha0);
    let alpha = C64::new(alpha0 / 2.0_f64.sqrt(), 0.0);
    let c = coherent_amplitudes(d, alpha);
    let pref = norm / 2.0_f64.sqrt();

    let mut amps = DVector::<C64>::zeros(d * d);
    for m in 0..d {
        for n in 0..d {
            let a_term = if m == 0 {
                C64::new(0.0, 0.0)
            } else {
                c[m - 1] * (m as f64).sqrt() * c[n]
            };
            let b_term = if n == 0 {
                C64::new(0.0, 0.0)
            } else {
                c[m] * c[n - 1] * (n as f64).sqrt()
            };
            amps[m * d + n] = (a_term + b_term * s) * pref;
        }
    }

    let mut ket = Ket::new(space.clone(), amps)?;
    let res = (ket.norm() - 1.0).abs();
    if res > 1e-10 {
        return Err(CoreError::TruncationInadequate(format!(
            "truncated pair-state norm deviates from one by {res:.3e}"
        )));
    }
    ket.normalize()?;
    Ok(ket)
}

/// Build the exact two-qubit representation of the pair state over the
/// displaced number basis {D̂(α)|0⟩, D̂(α)|1⟩}⊗{D̂(α)|0⟩, D̂(α)|1⟩}.
///
/// The coefficients follow from â†|α⟩ = D̂(α)|1⟩ + α|α⟩ (α real):
///
/// ```text
/// (c₀₀, c₀₁, c₁₀, c₁₁) = (𝒩α₀(1+s)/2,  s𝒩/√2,  𝒩/√2,  0)
/// ```
///
/// so the DPC state carries no |α⟩|α⟩ component at all, while the PAC
/// state gains the coherent-coherent amplitude 𝒩α₀. `alpha0` must be a
/// nonnegative real (enforced upstream by [`ChannelParams`]).
pub fn build_state_displaced(kind: ChannelKind, alpha0: f64) -> Ket {
    let s = kind.sign();
    let norm = norm_const(kind, alpha0);
    let sqrt_half = 0.5_f64.sqrt();
    let amps = DVector::from_vec(vec![
        C64::new(norm * alpha0 * (1.0 + s) * 0.5, 0.0),
        C64::new(s * norm * sqrt_half, 0.0),
        C64::new(norm * sqrt_half, 0.0),
        C64::new(0.0, 0.0),
    ]);
    let space = HilbertSpec::new(&[2, 2]).expect("2x2 space is valid");
    Ket::new(space, amps).expect("4 amplitudes on a 4-dim space")
}

/// Gram matrix of the single-mode displaced basis {D̂(α)|0⟩, D̂(α)|1⟩}
/// with α = α₀/√2, computed from the truncated amplitudes.
///
/// Displaced number states are exactly orthonormal (D̂ is unitary), so the
/// result is the 2×2 identity up to truncation error; it is computed
/// rather than assumed so the encoding is checkable at any amplitude.
pub fn gram_matrix(alpha0: f64) -> DMatrix<C64> {
    let d = fock_dim_for(alpha0);
    let alpha = C64::new(alpha0 / 2.0_f64.sqrt(), 0.0);
    let b0 = coherent_amplitudes(d, alpha);
    let b1 = displaced_one_amplitudes(d, alpha);
    let basis = [b0, b1];
    DMatrix::from_fn(2, 2, |r, c| {
        basis[r]
            .iter()
            .zip(basis[c].iter())
            .map(|(x, y)| x.conj() * y)
            .sum()
    })
}

/// Binary entropy H₂(p) = −p log₂ p − (1−p) log₂(1−p) in bits, with the
/// endpoint convention H₂(0) = H₂(1) = 0.
pub fn binary_entropy_bits(p: f64) -> f64 {
    let mut s = 0.0;
    for q in [p, 1.0 - p] {
        if q > 0.0 {
            s -= q * q.log2();
        }
    }
    s
}

/// Closed-form reduced single-mode entropy of the PAC state in bits:
/// S(ρᴬ) = H₂((1+u)/2) with u = α₀√(α₀²+2)/(1+α₀²).
///
/// The DPC counterpart is exactly 1 bit for every α₀.
pub fn pac_reduced_entropy_closed(alpha0: f64) -> f64 {
    let n0 = alpha0 * alpha0;
    let u = alpha0 * (n0 + 2.0).sqrt() / (1.0 + n0);
    binary_entropy_bits(0.5 * (1.0 + u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::schmidt_entropy_bits;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::str::FromStr;

    #[test]
    fn kind_parsing_and_sign() {
        assert_eq!(ChannelKind::from_str("dpc").unwrap(), ChannelKind::Dpc);
        assert_eq!(ChannelKind::from_str("PAC").unwrap(), ChannelKind::Pac);
        assert!(ChannelKind::from_str("tmsv").is_err());
        assert_relative_eq!(ChannelKind::Dpc.sign(), -1.0);
        assert_relative_eq!(ChannelKind::Pac.sign(), 1.0);
        assert_eq!(ChannelKind::Pac.to_string(), "pac");
    }

    #[test]
    fn params_validation() {
        assert!(ChannelParams::new(1.0, 0.5, 0.3).is_ok());
        assert!(ChannelParams::new(-0.1, 0.5, 0.3).is_err());
        assert!(ChannelParams::new(1.0, 1.5, 0.3).is_err());
        assert!(ChannelParams::new(1.0, -0.1, 0.3).is_err());
        assert!(ChannelParams::new(1.0, 0.5, -0.3).is_err());
        assert!(ChannelParams::new(f64::NAN, 0.5, 0.3).is_err());
        let p = ChannelParams::new(2.0, 0.5, 0.3).unwrap();
        assert_relative_eq!(p.alpha(), 2.0 / 2.0_f64.sqrt());
        assert_relative_eq!(p.n0(), 4.0);
    }

    #[test]
    fn norm_constants() {
        assert_relative_eq!(norm_const(ChannelKind::Dpc, 1.7), 1.0);
        assert_relative_eq!(norm_const(ChannelKind::Pac, 1.0), 1.0 / 2.0_f64.sqrt());
    }

    #[test]
    fn vacuum_limit_is_single_photon_superposition() {
        let space = HilbertSpec::two_mode(12).unwrap();
        let s = 1.0 / 2.0_f64.sqrt();
        let dpc = build_state_fock(ChannelKind::Dpc, 0.0, &space).unwrap();
        // |1,0⟩ at flat 12, |0,1⟩ at flat 1.
        assert_relative_eq!(dpc.amplitudes()[12].re, s, epsilon = 1e-14);
        assert_relative_eq!(dpc.amplitudes()[1].re, -s, epsilon = 1e-14);
        let pac = build_state_fock(ChannelKind::Pac, 0.0, &space).unwrap();
        assert_relative_eq!(pac.amplitudes()[12].re, s, epsilon = 1e-14);
        assert_relative_eq!(pac.amplitudes()[1].re, s, epsilon = 1e-14);
    }

    #[test]
    fn states_are_normalized() {
        for kind in [ChannelKind::Dpc, ChannelKind::Pac] {
            for alpha0 in [0.5, 1.0, 3.0] {
                let space = HilbertSpec::two_mode(fock_dim_for(alpha0)).unwrap();
                let ket = build_state_fock(kind, alpha0, &space).unwrap();
                assert_relative_eq!(ket.norm(), 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn truncation_rule_is_enforced() {
        let space = HilbertSpec::two_mode(12).unwrap();
        assert!(matches!(
            build_state_fock(ChannelKind::Dpc, 2.0, &space),
            Err(CoreError::TruncationInadequate(_))
        ));
    }

    #[test]
    fn dpc_reduced_entropy_is_one_bit() {
        for alpha0 in [0.0, 0.7, 1.5, 3.0] {
            let space = HilbertSpec::two_mode(fock_dim_for(alpha0)).unwrap();
            let ket = build_state_fock(ChannelKind::Dpc, alpha0, &space).unwrap();
            assert_abs_diff_eq!(schmidt_entropy_bits(&ket).unwrap(), 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn pac_reduced_entropy_matches_closed_form() {
        // Reference values of H₂((1+u)/2), u = α₀√(α₀²+2)/(1+α₀²).
        let expected = [
            (0.0, 1.0),
            (0.5, 0.7219280948873626),
            (1.0, 0.3545789026652700),
            (2.0, 0.08146891501435273),
            (3.0, 0.02526612772711948),
        ];
        for &(alpha0, s_ref) in &expected {
            assert_abs_diff_eq!(pac_reduced_entropy_closed(alpha0), s_ref, epsilon = 1e-12);
            let space = HilbertSpec::two_mode(fock_dim_for(alpha0)).unwrap();
            let ket = build_state_fock(ChannelKind::Pac, alpha0, &space).unwrap();
            assert_abs_diff_eq!(schmidt_entropy_bits(&ket).unwrap(), s_ref, epsilon = 1e-6);
        }
    }

    #[test]
    fn pac_entropy_decays_with_amplitude() {
        let mut last = pac_reduced_entropy_closed(1.0);
        for alpha0 in [1.5, 2.0, 2.5, 3.0, 4.0] {
            let s = pac_reduced_entropy_closed(alpha0);
            assert!(s < last, "entropy must decay beyond alpha0 = 1");
            last = s;
        }
    }

    #[test]
    fn displaced_coefficients() {
        let s = 1.0 / 2.0_f64.sqrt();
        let dpc = build_state_displaced(ChannelKind::Dpc, 1.3);
        assert_abs_diff_eq!(dpc.amplitudes()[0].norm(), 0.0, epsilon = 1e-15);
        assert_relative_eq!(dpc.amplitudes()[1].re, -s, epsilon = 1e-14);
        assert_relative_eq!(dpc.amplitudes()[2].re, s, epsilon = 1e-14);
        assert_abs_diff_eq!(dpc.amplitudes()[3].norm(), 0.0, epsilon = 1e-15);
        assert_relative_eq!(dpc.norm(), 1.0, epsilon = 1e-14);

        // PAC at α₀ = 0 reduces to the DPC shape with a + sign.
        let pac0 = build_state_displaced(ChannelKind::Pac, 0.0);
        assert_abs_diff_eq!(pac0.amplitudes()[0].norm(), 0.0, epsilon = 1e-15);
        assert_relative_eq!(pac0.amplitudes()[1].re, s, epsilon = 1e-14);
        assert_relative_eq!(pac0.amplitudes()[2].re, s, epsilon = 1e-14);

        let alpha0 = 1.3;
        let norm = norm_const(ChannelKind::Pac, alpha0);
        let pac = build_state_displaced(ChannelKind::Pac, alpha0);
        assert_relative_eq!(pac.amplitudes()[0].re, norm * alpha0, epsilon = 1e-14);
        assert_relative_eq!(pac.norm(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn displaced_representation_matches_fock_state() {
        for (kind, alpha0) in [
            (ChannelKind::Dpc, 1.3),
            (ChannelKind::Pac, 1.3),
            (ChannelKind::Pac, 2.4),
        ] {
            let d = fock_dim_for(alpha0);
            let space = HilbertSpec::two_mode(d).unwrap();
            let fock = build_state_fock(kind, alpha0, &space).unwrap();

            // Embed the 4-component representation in the Fock basis.
            let alpha = C64::new(alpha0 / 2.0_f64.sqrt(), 0.0);
            let b0 = coherent_amplitudes(d, alpha);
            let b1 = displaced_one_amplitudes(d, alpha);
            let basis = [b0, b1];
            let compact = build_state_displaced(kind, alpha0);
            let mut embedded = DVector::<C64>::zeros(d * d);
            for qa in 0..2 {
                for qb in 0..2 {
                    let coeff = compact.amplitudes()[qa * 2 + qb];
                    if coeff.norm() == 0.0 {
                        continue;
                    }
                    for m in 0..d {
                        for n in 0..d {
                            embedded[m * d + n] += coeff * basis[qa][m] * basis[qb][n];
                        }
                    }
                }
            }

            let overlap: C64 = fock
                .amplitudes()
                .iter()
                .zip(embedded.iter())
                .map(|(a, b)| a.conj() * b)
                .sum();
            assert!(
                overlap.norm() > 1.0 - 1e-8,
                "{} alpha0={alpha0}: overlap {:.12}",
                kind,
                overlap.norm()
            );
        }
    }

    #[test]
    fn gram_matrix_is_identity() {
        for alpha0 in [0.0, 0.8, 2.5] {
            let g = gram_matrix(alpha0);
            assert_relative_eq!(g[(0, 0)].re, 1.0, epsilon = 1e-12);
            assert_relative_eq!(g[(1, 1)].re, 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(g[(0, 1)].norm(), 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(g[(1, 0)].norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn binary_entropy_endpoints_and_symmetry() {
        assert_relative_eq!(binary_entropy_bits(0.5), 1.0);
        assert_abs_diff_eq!(binary_entropy_bits(0.0), 0.0);
        assert_abs_diff_eq!(binary_entropy_bits(1.0), 0.0);
        assert_relative_eq!(
            binary_entropy_bits(0.3),
            binary_entropy_bits(0.7),
            epsilon = 1e-15
        );
    }
}
