//! Truncated Fock-space linear algebra.
//!
//! Every bosonic mode is truncated to a finite number basis |0⟩ … |d−1⟩.
//! Multi-mode objects live on the tensor product with **mode 0 slowest**:
//! the flat index of |n₀, n₁, …⟩ is n₀·(d₁d₂…) + n₁·(d₂…) + ….
//!
//! Unitaries are built as exponentials of anti-Hermitian generators
//! (displacement αâ†−α*â, phase iφn̂, beamsplitter hopping), evaluated
//! through a Hermitian eigendecomposition — one code path whose error is
//! controlled entirely by the truncation rule [`fock_dim_for`].
//!
//! All entropies are in bits (base-2 logarithms).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{CoreError, Result};

type C64 = Complex64;

/// Hermiticity tolerance for density matrices (max elementwise |ρ−ρ†|).
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Allowed deviation of a density-matrix trace from one.
pub const TRACE_TOL: f64 = 1e-10;
/// Eigenvalues of a density matrix may undershoot zero by at most this
/// much; they are clamped to zero. Anything lower is an error.
pub const EIGENVALUE_CLAMP: f64 = 1e-10;
/// Eigenvalues below this threshold are discarded from entropy sums.
pub const EIGENVALUE_FLOOR: f64 = 1e-14;

/// Per-mode truncation dimension adequate for coherent amplitude `alpha0`:
/// ⌈α₀² + 6α₀ + 12⌉ keeps the Poisson tail below 1e−10 and displacement
/// unitarity error below 1e−8.
pub fn fock_dim_for(alpha0: f64) -> usize {
    (alpha0 * alpha0 + 6.0 * alpha0 + 12.0).ceil() as usize
}

// ═══════════════════════════════════════════════════════════════════════
// Spaces
// ═══════════════════════════════════════════════════════════════════════

/// An ordered list of per-mode Fock truncations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HilbertSpec {
    mode_dims: Vec<usize>,
}

impl HilbertSpec {
    /// Create a space from per-mode dimensions (each ≥ 2).
    ///
    /// # Errors
    ///
    /// Returns [`CoreError::InvalidParameter`] if any dimension is below 2
    /// or the list is empty.
    pub fn new(mode_dims: &[usize]) -> Result<Self> {
        if mode_dims.is_empty() {
            return Err(CoreError::InvalidParameter(
                "a Hilbert space needs at least one mode".into(),
            ));
        }
        if let Some(&bad) = mode_dims.iter().find(|&&d| d < 2) {
            return Err(CoreError::InvalidParameter(format!(
                "every mode dimension must be at least 2, got {bad}"
            )));
        }
        Ok(Self {
            mode_dims: mode_dims.to_vec(),
        })
    }

    /// Single-mode space of dimension `dim`.
    pub fn single(dim: usize) -> Result<Self> {
        Self::new(&[dim])
    }

    /// Two-mode space with equal per-mode dimension `dim`.
    pub fn two_mode(dim: usize) -> Result<Self> {
        Self::new(&[dim, dim])
    }

    /// Number of modes.
    pub fn n_modes(&self) -> usize {
        self.mode_dims.len()
    }

    /// Dimension of mode `mode`.
    pub fn mode_dim(&self, mode: usize) -> usize {
        self.mode_dims[mode]
    }

    /// Per-mode dimensions.
    pub fn mode_dims(&self) -> &[usize] {
        &self.mode_dims
    }

    /// Total dimension (product of mode dimensions).
    pub fn dim(&self) -> usize {
        self.mode_dims.iter().product()
    }

    /// Flat-index stride of `mode` (mode 0 is slowest).
    pub fn stride(&self, mode: usize) -> usize {
        self.mode_dims[mode + 1..].iter().product()
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.n_modes() {
            Err(CoreError::ModeOutOfRange {
                mode,
                n_modes: self.n_modes(),
            })
        } else {
            Ok(())
        }
    }

    /// Concatenation of two spaces (tensor product ordering).
    pub fn tensor(&self, other: &HilbertSpec) -> HilbertSpec {
        let mut dims = self.mode_dims.clone();
        dims.extend_from_slice(&other.mode_dims);
        HilbertSpec { mode_dims: dims }
    }
}

// ═══════════════════════════════════════════════════════════════════════
// States
// ═══════════════════════════════════════════════════════════════════════

/// A pure state: complex amplitudes over the flat tensor basis.
#[derive(Debug, Clone)]
pub struct Ket {
    space: HilbertSpec,
    amplitudes: DVector<C64>,
}

impl Ket {
    /// Wrap amplitudes over `space`.
    ///
    /// # Errors
    ///
    /// Returns [`CoreError::InvalidParameter`] on a length mismatch.
    pub fn new(space: HilbertSpec, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(CoreError::InvalidParameter(format!(
                "amplitude length {} does not match space dimension {}",
                amplitudes.len(),
                space.dim()
            )));
        }
        Ok(Self { space, amplitudes })
    }

    /// The underlying space.
    pub fn space(&self) -> &HilbertSpec {
        &self.space
    }

    /// Amplitude vector.
    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// Normalize in place.
    ///
    /// # Errors
    ///
    /// Returns [`CoreError::InvalidParameter`] if the norm is numerically
    /// zero.
    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if n < 1e-154 {
            return Err(CoreError::InvalidParameter(
                "cannot normalize a zero vector".into(),
            ));
        }
        self.amplitudes /= C64::new(n, 0.0);
        Ok(())
    }

    /// Tensor product |self⟩ ⊗ |other⟩.
    pub fn tensor(&self, other: &Ket) -> Ket {
        Ket {
            space: self.space.tensor(&other.space),
            amplitudes: self.amplitudes.kronecker(&other.amplitudes),
        }
    }

    /// Density matrix |ψ⟩⟨ψ| of a normalized ket.
    pub fn to_density(&self) -> DensityMatrix {
        let m = &self.amplitudes * self.amplitudes.adjoint();
        DensityMatrix {
            space: self.space.clone(),
            matrix: m,
        }
    }

    /// Reshape a two-mode ket into its coefficient matrix C with
    /// ψ = Σ C[a,b] |a⟩|b⟩.
    ///
    /// # Errors
    ///
    /// Returns [`CoreError::InvalidParameter`] unless the space has exactly
    /// two modes.
    pub fn coefficient_matrix(&self) -> Result<DMatrix<C64>> {
        if self.space.n_modes() != 2 {
            return Err(CoreError::InvalidParameter(format!(
                "coefficient matrix needs a two-mode state, got {} modes",
                self.space.n_modes()
            )));
        }
        let (da, db) = (self.space.mode_dim(0), self.space.mode_dim(1));
        Ok(DMatrix::from_fn(da, db, |a, b| {
            self.amplitudes[a * db + b]
        }))
    }
}

/// Schmidt entropy (entanglement entropy) of a normalized two-mode ket,
/// in bits: the von Neumann entropy of either reduced state, computed from
/// the Gram matrix C C† of the coefficient matrix.
pub fn schmidt_entropy_bits(ket: &Ket) -> Result<f64> {
    let c = ket.coefficient_matrix()?;
    let gram = &c * c.adjoint();
    let eig = gram.symmetric_eigen();
    entropy_bits(eig.eigenvalues.as_slice())
}

// ═══════════════════════════════════════════════════════════════════════
// Density matrices
// ═══════════════════════════════════════════════════════════════════════

/// A mixed state: Hermitian, unit-trace, positive-semidefinite matrix.
///
/// The constructor enforces Hermiticity (to [`HERMITICITY_TOL`], then
/// symmetrizes exactly) and the unit trace (to [`TRACE_TOL`]). Positivity
/// is validated lazily wherever the spectrum is computed, since it costs a
/// full eigendecomposition.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    space: HilbertSpec,
    matrix: DMatrix<C64>,
}

impl DensityMatrix {
    /// Validate and wrap a density matrix.
    ///
    /// # Errors
    ///
    /// [`CoreError::InvalidParameter`] on a shape mismatch,
    /// [`CoreError::NonHermitian`] beyond [`HERMITICITY_TOL`], or
    /// [`CoreError::TraceDeviation`] beyond [`TRACE_TOL`].
    pub fn new(space: HilbertSpec, matrix: DMatrix<C64>) -> Result<Self> {
        let d = space.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(CoreError::InvalidParameter(format!(
                "matrix is {}x{}, space dimension is {d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let mut worst = 0.0_f64;
        for i in 0..d {
            for j in i..d {
                let dev = (matrix[(i, j)] - matrix[(j, i)].conj()).norm();
                worst = worst.max(dev);
            }
        }
        if worst > HERMITICITY_TOL {
            return Err(CoreError::NonHermitian(worst));
        }
        // Symmetrize away the residual so downstream eigensolves see an
        // exactly Hermitian matrix.
        let matrix = (&matrix + matrix.adjoint()) * C64::new(0.5, 0.0);
        let trace_dev = (matrix.trace().re - 1.0).abs().max(matrix.trace().im.abs());
        if trace_dev > TRACE_TOL {
            return Err(CoreError::TraceDeviation(trace_dev));
        }
        Ok(Self { space, matrix })
    }

    /// Internal constructor for matrices Hermitian and normalized by
    /// construction.
    pub(crate) fn from_parts_unchecked(space: HilbertSpec, matrix: DMatrix<C64>) -> Self {
        debug_assert_eq!(matrix.nrows(), space.dim());
        Self { space, matrix }
    }

    /// The underlying space.
    pub fn space(&self) -> &HilbertSpec {
        &self.space
    }

    /// Matrix view.
    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    /// Trace (real part; the imaginary part is zero for Hermitian input).
    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Purity Tr[ρ²] = Σ |ρ_ij|².
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Tensor product ρ ⊗ σ.
    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix {
            space: self.space.tensor(&other.space),
            matrix: self.matrix.kronecker(&other.matrix),
        }
    }
}

// ═══════════════════════════════════════════════════════════════════════
// Operators
// ═══════════════════════════════════════════════════════════════════════

/// A linear operator on a [`HilbertSpec`].
#[derive(Debug, Clone)]
pub struct Operator {
    space: HilbertSpec,
    matrix: DMatrix<C64>,
}

impl Operator {
    /// The underlying space.
    pub fn space(&self) -> &HilbertSpec {
        &self.space
    }

    /// Matrix view.
    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    /// Apply to a ket: A|ψ⟩.
    pub fn apply(&self, ket: &Ket) -> Ket {
        Ket {
            space: ket.space.clone(),
            amplitudes: &self.matrix * &ket.amplitudes,
        }
    }

    /// Conjugate a density matrix: A ρ A†.
    pub fn conjugate(&self, rho: &DensityMatrix) -> DensityMatrix {
        let m = &self.matrix * &rho.matrix * self.matrix.adjoint();
        DensityMatrix {
            space: rho.space.clone(),
            matrix: m,
        }
    }

    /// Operator product self · other.
    pub fn compose(&self, other: &Operator) -> Operator {
        Operator {
            space: self.space.clone(),
            matrix: &self.matrix * &other.matrix,
        }
    }

    /// Hermitian adjoint.
    pub fn adjoint(&self) -> Operator {
        Operator {
            space: self.space.clone(),
            matrix: self.matrix.adjoint(),
        }
    }
}

/// Embed a single-mode matrix on `mode` of `space` (identity elsewhere).
fn embed_single_mode(space: &HilbertSpec, mode: usize, small: &DMatrix<C64>) -> DMatrix<C64> {
    let pre: usize = space.mode_dims()[..mode].iter().product();
    let post: usize = space.mode_dims()[mode + 1..].iter().product();
    let id_pre = DMatrix::<C64>::identity(pre, pre);
    let id_post = DMatrix::<C64>::identity(post, post);
    id_pre.kronecker(small).kronecker(&id_post)
}

/// Single-mode annihilation matrix: ⟨n−1|â|n⟩ = √n.
fn annihilation_matrix(dim: usize) -> DMatrix<C64> {
    DMatrix::from_fn(dim, dim, |r, c| {
        if c == r + 1 {
            C64::new((c as f64).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Annihilation operator â on `mode`.
///
/// # Errors
///
/// Returns [`CoreError::ModeOutOfRange`] for a bad mode index.
pub fn annihilation_op(space: &HilbertSpec, mode: usize) -> Result<Operator> {
    space.check_mode(mode)?;
    let small = annihilation_matrix(space.mode_dim(mode));
    Ok(Operator {
        space: space.clone(),
        matrix: embed_single_mode(space, mode, &small),
    })
}

/// Creation operator â† on `mode`: ⟨n+1|â†|n⟩ = √(n+1), with the top
/// truncated level mapping to zero.
///
/// # Errors
///
/// Returns [`CoreError::ModeOutOfRange`] for a bad mode index.
pub fn creation_op(space: &HilbertSpec, mode: usize) -> Result<Operator> {
    space.check_mode(mode)?;
    let small = annihilation_matrix(space.mode_dim(mode)).adjoint();
    Ok(Operator {
        space: space.clone(),
        matrix: embed_single_mode(space, mode, &small),
    })
}

/// Number operator n̂ = â†â on `mode`.
///
/// # Errors
///
/// Returns [`CoreError::ModeOutOfRange`] for a bad mode index.
pub fn number_op(space: &HilbertSpec, mode: usize) -> Result<Operator> {
    space.check_mode(mode)?;
    let d = space.mode_dim(mode);
    let small = DMatrix::from_fn(d, d, |r, c| {
        if r == c {
            C64::new(r as f64, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    Ok(Operator {
        space: space.clone(),
        matrix: embed_single_mode(space, mode, &small),
    })
}

/// Exponential of an anti-Hermitian generator G, via the Hermitian
/// eigendecomposition of H = iG: exp(G) = V e^{−iλ} V†.
fn exp_antihermitian(g: &DMatrix<C64>) -> DMatrix<C64> {
    let h = g.map(|z| C64::new(0.0, 1.0) * z);
    debug_assert!(
        {
            let dev = (&h - h.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            dev < 1e-10
        },
        "generator must be anti-Hermitian"
    );
    let h = (&h + h.adjoint()) * C64::new(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let phases = DMatrix::from_diagonal(
        &eig.eigenvalues
            .map(|lambda| C64::new(0.0, -lambda).exp()),
    );
    &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}

/// Displacement operator D̂(α) = exp(αâ† − α*â) on `mode`.
///
/// # Errors
///
/// [`CoreError::ModeOutOfRange`] for a bad mode, or
/// [`CoreError::TruncationInadequate`] when |α|² + 6|α| + 10 exceeds the
/// mode dimension (the exponential would not be unitary to 1e−8).
pub fn displacement_op(space: &HilbertSpec, mode: usize, alpha: C64) -> Result<Operator> {
    space.check_mode(mode)?;
    let d = space.mode_dim(mode);
    let a = alpha.norm();
    if a * a + 6.0 * a + 10.0 > d as f64 {
        return Err(CoreError::TruncationInadequate(format!(
            "displacement |alpha| = {a:.3} needs dimension > {:.0}, space has {d}",
            a * a + 6.0 * a + 10.0
        )));
    }
    let lower = annihilation_matrix(d);
    let g = lower.adjoint() * alpha - lower * alpha.conj();
    let small = exp_antihermitian(&g);
    Ok(Operator {
        space: space.clone(),
        matrix: embed_single_mode(space, mode, &small),
    })
}

/// Phase-shift operator Û(φ) = e^{iφ n̂} on `mode` (diagonal e^{iφn}).
///
/// # Errors
///
/// Returns [`CoreError::ModeOutOfRange`] for a bad mode index.
pub fn phase_op(space: &HilbertSpec, mode: usize, phi: f64) -> Result<Operator> {
    space.check_mode(mode)?;
    let d = space.mode_dim(mode);
    let small = DMatrix::from_fn(d, d, |r, c| {
        if r == c {
            C64::new(0.0, phi * r as f64).exp()
        } else {
            C64::new(0.0, 0.0)
        }
    });
    Ok(Operator {
        space: space.clone(),
        matrix: embed_single_mode(space, mode, &small),
    })
}

/// The 2×2 mode-mixing matrix of a general beamsplitter:
///
/// ```text
/// T = |  cosθ e^{iφt}   sinθ e^{iφρ}  |
///     | −sinθ e^{−iφρ}  cosθ e^{−iφt} |
/// ```
pub fn beamsplitter_matrix(theta: f64, phi_t: f64, phi_rho: f64) -> [[C64; 2]; 2] {
    let (c, s) = (theta.cos(), theta.sin());
    [
        [
            C64::new(0.0, phi_t).exp() * c,
            C64::new(0.0, phi_rho).exp() * s,
        ],
        [
            -C64::new(0.0, -phi_rho).exp() * s,
            C64::new(0.0, -phi_t).exp() * c,
        ],
    ]
}

/// Principal matrix logarithm of a 2×2 unitary, via spectral projectors.
fn log_unitary_2x2(t: &[[C64; 2]; 2]) -> [[C64; 2]; 2] {
    let tr = t[0][0] + t[1][1];
    let det = t[0][0] * t[1][1] - t[0][1] * t[1][0];
    let disc = (tr * tr - det * 4.0).sqrt();
    let l1 = (tr + disc) * 0.5;
    let l2 = (tr - disc) * 0.5;
    // A unit-modulus eigenvalue has log iφ with φ the principal argument.
    let ln = |z: C64| C64::new(0.0, z.arg());
    if (l1 - l2).norm() < 1e-12 {
        // A unitary with a doubly degenerate eigenvalue is that scalar.
        let l = ln(l1);
        return [[l, C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), l]];
    }
    // Spectral projector onto the l1 eigenspace: (T − l2·I)/(l1 − l2).
    let inv = C64::new(1.0, 0.0) / (l1 - l2);
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            let id = if r == c {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            };
            let p1 = (t[r][c] - l2 * id) * inv;
            let p2 = id - p1;
            out[r][c] = ln(l1) * p1 + ln(l2) * p2;
        }
    }
    out
}

/// General beamsplitter unitary B̂ = exp(Σ_{kl} L_{kl} â†_k â_l) coupling
/// `modes`, where L is the matrix logarithm of [`beamsplitter_matrix`].
/// Its Heisenberg action reproduces the 2×2 matrix: B̂†âᵢB̂ = Σ Tᵢⱼâⱼ on
/// number sectors that fit inside the truncation (the beamsplitter
/// conserves total photon number). θ = π/4, φt = 0, φρ = π realizes the
/// balanced 50/50 splitter convention used by the scattering channel.
///
/// # Errors
///
/// [`CoreError::ModeOutOfRange`] for bad indices,
/// [`CoreError::InvalidParameter`] for equal indices, and
/// [`CoreError::UnequalModeDims`] if the two modes differ in dimension.
pub fn beamsplitter_op(
    space: &HilbertSpec,
    modes: (usize, usize),
    theta: f64,
    phi_t: f64,
    phi_rho: f64,
) -> Result<Operator> {
    let (mi, mj) = modes;
    space.check_mode(mi)?;
    space.check_mode(mj)?;
    if mi == mj {
        return Err(CoreError::InvalidParameter(
            "beamsplitter needs two distinct modes".into(),
        ));
    }
    if space.mode_dim(mi) != space.mode_dim(mj) {
        return Err(CoreError::UnequalModeDims(
            space.mode_dim(mi),
            space.mode_dim(mj),
        ));
    }

    let t = beamsplitter_matrix(theta, phi_t, phi_rho);
    let l = log_unitary_2x2(&t);
    let dim = space.dim();

    // A vanishing generator (T = 1, e.g. full transmittance) needs no
    // eigendecomposition: the scatterer is exactly the identity.
    if l.iter().flatten().all(|z| z.norm() == 0.0) {
        return Ok(Operator {
            space: space.clone(),
            matrix: DMatrix::identity(dim, dim),
        });
    }

    // Assemble G = Σ_{kl} L_{kl} â†_k â_l directly on the flat basis:
    // each term moves one quantum from mode l to mode k.
    let mode_of = [mi, mj];
    let mut g = DMatrix::<C64>::zeros(dim, dim);
    for col in 0..dim {
        // Occupations of the two coupled modes at this basis column.
        let occ = |m: usize| (col / space.stride(m)) % space.mode_dim(m);
        for (k, &mk) in mode_of.iter().enumerate() {
            for (lidx, &ml) in mode_of.iter().enumerate() {
                let coeff = l[k][lidx];
                if coeff.norm() == 0.0 {
                    continue;
                }
                if k == lidx {
                    // Diagonal term L_kk n̂_k.
                    g[(col, col)] += coeff * occ(mk) as f64;
                } else {
                    let (nk, nl) = (occ(mk), occ(ml));
                    if nl == 0 || nk + 1 >= space.mode_dim(mk) {
                        continue;
                    }
                    let row = col + space.stride(mk) - space.stride(ml);
                    let amp = ((nk as f64 + 1.0) * nl as f64).sqrt();
                    g[(row, col)] += coeff * amp;
                }
            }
        }
    }

    Ok(Operator {
        space: space.clone(),
        matrix: exp_antihermitian(&g),
    })
}

// ═══════════════════════════════════════════════════════════════════════
// Partial trace, spectra, entropy
// ═══════════════════════════════════════════════════════════════════════

/// Flat-space offsets of every multi-index over the given (dim, stride)
/// pairs, in mixed-radix counting order.
fn offset_table(dims_strides: &[(usize, usize)]) -> Vec<usize> {
    let total: usize = dims_strides.iter().map(|&(d, _)| d).product();
    let mut offsets = Vec::with_capacity(total);
    for mut idx in 0..total {
        let mut off = 0;
        for &(d, s) in dims_strides.iter().rev() {
            off += (idx % d) * s;
            idx /= d;
        }
        offsets.push(off);
    }
    offsets
}

/// Partial trace keeping the modes in `keep` (ascending original order).
///
/// # Errors
///
/// [`CoreError::InvalidParameter`] for an empty/duplicated keep set, or
/// [`CoreError::ModeOutOfRange`] for a bad index.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let space = rho.space();
    if keep.is_empty() {
        return Err(CoreError::InvalidParameter(
            "partial trace must keep at least one mode".into(),
        ));
    }
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    if keep_sorted.len() != keep.len() {
        return Err(CoreError::InvalidParameter(
            "keep set contains duplicate modes".into(),
        ));
    }
    for &m in &keep_sorted {
        space.check_mode(m)?;
    }

    let kept: Vec<(usize, usize)> = keep_sorted
        .iter()
        .map(|&m| (space.mode_dim(m), space.stride(m)))
        .collect();
    let traced: Vec<(usize, usize)> = (0..space.n_modes())
        .filter(|m| !keep_sorted.contains(m))
        .map(|m| (space.mode_dim(m), space.stride(m)))
        .collect();

    let kept_offsets = offset_table(&kept);
    let traced_offsets = if traced.is_empty() {
        vec![0]
    } else {
        offset_table(&traced)
    };

    let out_dim = kept_offsets.len();
    let src = rho.matrix();
    let mut out = DMatrix::<C64>::zeros(out_dim, out_dim);
    for (r, &ro) in kept_offsets.iter().enumerate() {
        for (c, &co) in kept_offsets.iter().enumerate() {
            let mut sum = C64::new(0.0, 0.0);
            for &to in &traced_offsets {
                sum += src[(ro + to, co + to)];
            }
            out[(r, c)] = sum;
        }
    }

    let out_space = HilbertSpec::new(
        &keep_sorted
            .iter()
            .map(|&m| space.mode_dim(m))
            .collect::<Vec<_>>(),
    )?;
    Ok(DensityMatrix {
        space: out_space,
        matrix: out,
    })
}

/// Hermitian eigendecomposition with the spectrum sorted descending.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvector columns matching
/// the eigenvalue order.
///
/// # Errors
///
/// Returns [`CoreError::NonHermitian`] if the matrix deviates from
/// Hermitian symmetry by more than 1e−10 (elementwise).
pub fn eig_hermitian(rho: &DensityMatrix) -> Result<(Vec<f64>, DMatrix<C64>)> {
    let m = rho.matrix();
    let dev = (m - m.adjoint())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if dev > 1e-10 {
        return Err(CoreError::NonHermitian(dev));
    }
    let sym = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("eigenvalues are finite")
    });
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Shannon entropy in bits of a spectrum, with density-matrix hygiene:
/// eigenvalues in [−[`EIGENVALUE_CLAMP`], 0) clamp to zero, anything more
/// negative is an error, and values below [`EIGENVALUE_FLOOR`] are dropped.
///
/// # Errors
///
/// Returns [`CoreError::NegativeEigenvalue`] for eigenvalues below the
/// clamping tolerance.
pub fn entropy_bits(eigenvalues: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for &lambda in eigenvalues {
        if lambda < -EIGENVALUE_CLAMP {
            return Err(CoreError::NegativeEigenvalue(lambda));
        }
        if lambda < EIGENVALUE_FLOOR {
            continue;
        }
        s -= lambda * lambda.log2();
    }
    Ok(s)
}

/// Von Neumann entropy S(ρ) = −Tr[ρ log₂ ρ] in bits.
///
/// # Errors
///
/// Propagates [`eig_hermitian`] and [`entropy_bits`] failures.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    let (values, _) = eig_hermitian(rho)?;
    entropy_bits(&values)
}

// ═══════════════════════════════════════════════════════════════════════
// Coherent and displaced-number amplitudes
// ═══════════════════════════════════════════════════════════════════════

/// Fock amplitudes of the coherent state |α⟩ = D̂(α)|0⟩:
/// ⟨n|α⟩ = e^{−|α|²/2} αⁿ/√(n!).
pub fn coherent_amplitudes(dim: usize, alpha: C64) -> DVector<C64> {
    let mut v = DVector::zeros(dim);
    let mut c = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    v[0] = c;
    for n in 1..dim {
        c = c * alpha / (n as f64).sqrt();
        v[n] = c;
    }
    v
}

/// Fock amplitudes of the displaced one-photon state D̂(α)|1⟩, from the
/// identity D̂(α)|1⟩ = (â† − α*)|α⟩:
/// ⟨n|D̂(α)|1⟩ = √n ⟨n−1|α⟩ − α* ⟨n|α⟩.
pub fn displaced_one_amplitudes(dim: usize, alpha: C64) -> DVector<C64> {
    let coh = coherent_amplitudes(dim, alpha);
    let mut v = DVector::zeros(dim);
    for n in 0..dim {
        let raise = if n == 0 {
            C64::new(0.0, 0.0)
        } else {
            coh[n - 1] * (n as f64).sqrt()
        };
        v[n] = raise - alpha.conj() * coh[n];
    }
    v
}
