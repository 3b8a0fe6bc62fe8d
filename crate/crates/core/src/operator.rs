//! Dense Hermitian operators, density matrices, and spectral decompositions.
//!
//! Everything here is finite-dimensional and dense. Inputs are symmetrized on
//! construction: the stored matrix is exactly Hermitian, and construction
//! fails if the raw input is further than [`tol::HERMITICITY`] from its own
//! adjoint. Eigendecompositions are made deterministic by sorting eigenvalues
//! ascending and fixing each eigenvector's phase so its largest-magnitude
//! component is real and positive.
//!
//! Subsystem ordering is system ⊗ environment everywhere, with row-major
//! index layout over (s, e) pairs.

use nalgebra::linalg::SymmetricEigen;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tol;
use crate::{CMatrix, CVector};

/// Which factor of a bipartite system ⊗ environment space to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    System,
    Environment,
}

/// Symmetrize `(A + A†)/2`, storing an exactly Hermitian matrix.
fn symmetrized(mat: &CMatrix) -> CMatrix {
    let n = mat.nrows();
    let mut out = CMatrix::zeros(n, n);
    for i in 0..n {
        out[(i, i)] = Complex64::new(mat[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let v = 0.5 * (mat[(i, j)] + mat[(j, i)].conj());
            out[(i, j)] = v;
            out[(j, i)] = v.conj();
        }
    }
    out
}

fn max_asymmetry(mat: &CMatrix) -> f64 {
    let n = mat.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            let d = (mat[(i, j)] - mat[(j, i)].conj()).norm();
            worst = worst.max(d);
        }
    }
    worst
}

fn ensure_finite(mat: &CMatrix, what: &str) -> Result<()> {
    if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "{what} has non-finite entries"
        )));
    }
    Ok(())
}

fn ensure_square(mat: &CMatrix, what: &str) -> Result<()> {
    if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
        return Err(Error::InvalidInput(format!(
            "{what} must be square and non-empty, got {}x{}",
            mat.nrows(),
            mat.ncols()
        )));
    }
    Ok(())
}

/// An observable or Hamiltonian on a finite-dimensional Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    dim: usize,
    mat: CMatrix,
}

impl HermitianOperator {
    /// Build from a dense matrix, symmetrizing `(A + A†)/2`.
    ///
    /// Rejects inputs whose asymmetry exceeds [`tol::HERMITICITY`]: a large
    /// asymmetry is a caller bug, not noise to be averaged away.
    pub fn new(mat: CMatrix) -> Result<Self> {
        ensure_square(&mat, "operator")?;
        ensure_finite(&mat, "operator")?;
        let asym = max_asymmetry(&mat);
        if asym > tol::HERMITICITY {
            return Err(Error::InvalidInput(format!(
                "operator is not Hermitian: max |A - A†| = {asym:.3e}"
            )));
        }
        let dim = mat.nrows();
        Ok(Self {
            dim,
            mat: symmetrized(&mat),
        })
    }

    /// Internal constructor for matrices already known exactly Hermitian.
    pub(crate) fn from_exact(mat: CMatrix) -> Self {
        let dim = mat.nrows();
        Self { dim, mat }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            mat: CMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            mat: CMatrix::identity(dim, dim),
        }
    }

    /// Diagonal operator with the given real entries.
    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let dim = diag.len();
        let mut mat = CMatrix::zeros(dim, dim);
        for (i, &d) in diag.iter().enumerate() {
            mat[(i, i)] = Complex64::new(d, 0.0);
        }
        Self { dim, mat }
    }

    pub fn pauli_x() -> Self {
        Self::from_exact(CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
            ],
        ))
    }

    pub fn pauli_y() -> Self {
        Self::from_exact(CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, -1.0),
                Complex64::new(0.0, 1.0),
                Complex64::new(0.0, 0.0),
            ],
        ))
    }

    pub fn pauli_z() -> Self {
        Self::from_real_diagonal(&[1.0, -1.0])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    /// Expectation value tr{A ρ}; real because both factors are Hermitian.
    pub fn expectation(&self, rho: &DensityMatrix) -> Result<f64> {
        if self.dim != rho.dim() {
            return Err(Error::DimensionMismatch(format!(
                "observable dim {} vs state dim {}",
                self.dim,
                rho.dim()
            )));
        }
        Ok(trace_product(&self.mat, rho.matrix()))
    }

    /// Hilbert–Schmidt inner product tr{A B}; real for Hermitian pairs.
    pub fn hs_inner(&self, other: &Self) -> f64 {
        trace_product(&self.mat, &other.mat)
    }

    pub fn hs_norm(&self) -> f64 {
        self.hs_inner(self).max(0.0).sqrt()
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self::from_exact(self.mat.map(|z| z * factor))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(format!(
                "operator dims {} vs {}",
                self.dim, other.dim
            )));
        }
        Ok(Self::from_exact(&self.mat + &other.mat))
    }

    /// Remove the identity component: A − (tr A / d) I.
    pub fn traceless_part(&self) -> Self {
        let shift = self.trace() / self.dim as f64;
        let mut mat = self.mat.clone();
        for i in 0..self.dim {
            mat[(i, i)] -= Complex64::new(shift, 0.0);
        }
        Self::from_exact(mat)
    }

    /// Kronecker product; system factor first.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        Ok(Self::from_exact(kronecker(&self.mat, &other.mat)?))
    }

    /// Eigendecomposition with ascending eigenvalues and the deterministic
    /// phase convention.
    pub fn eig(&self) -> Result<Spectrum> {
        eig_hermitian(&self.mat)
    }

    /// Apply a real scalar function to the spectrum: V f(diag) V†.
    ///
    /// Fails with a domain error when `f` returns a non-finite value at any
    /// eigenvalue.
    pub fn apply_function(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let spec = self.eig()?;
        let mut vals = Vec::with_capacity(spec.eigenvalues.len());
        for &w in &spec.eigenvalues {
            let y = f(w);
            if !y.is_finite() {
                return Err(Error::Domain(format!(
                    "function undefined at eigenvalue {w:.6e}"
                )));
            }
            vals.push(y);
        }
        Ok(Self::from_exact(symmetrized(&spec.rebuild(&vals))))
    }

    /// Whether `‖A² − A‖_max` is within projector tolerance.
    pub fn is_projector(&self) -> bool {
        let sq = &self.mat * &self.mat;
        (sq - &self.mat).iter().all(|z| z.norm() <= tol::PROJECTOR)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (&self.mat - &other.mat)
            .iter()
            .fold(0.0f64, |m, z| m.max(z.norm()))
    }
}

/// tr{A B} for Hermitian A, B (real up to rounding).
pub(crate) fn trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    acc
}

/// Kronecker product with a dimension guard.
pub(crate) fn kronecker(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    let joint = a
        .nrows()
        .checked_mul(b.nrows())
        .filter(|&d| d <= tol::MAX_DIM)
        .ok_or_else(|| {
            Error::InvalidInput(format!(
                "tensor-product dimension {}x{} exceeds the dense-backend cap {}",
                a.nrows(),
                b.nrows(),
                tol::MAX_DIM
            ))
        })?;
    let _ = joint;
    Ok(a.kronecker(b))
}

/// Eigendecomposition of a quantum state ρ (positive semidefinite, unit trace).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    mat: CMatrix,
}

impl DensityMatrix {
    /// Validate and store a state: Hermitian within tolerance, eigenvalues
    /// ≥ −[`tol::PSD`], trace within [`tol::TRACE`] of one. The stored matrix
    /// is symmetrized and rescaled to unit trace.
    pub fn new(mat: CMatrix) -> Result<Self> {
        ensure_square(&mat, "density matrix")?;
        ensure_finite(&mat, "density matrix")?;
        let asym = max_asymmetry(&mat);
        if asym > tol::HERMITICITY {
            return Err(Error::InvalidInput(format!(
                "density matrix is not Hermitian: max |A - A†| = {asym:.3e}"
            )));
        }
        let mut sym = symmetrized(&mat);
        let tr = sym.trace().re;
        if (tr - 1.0).abs() > tol::TRACE {
            return Err(Error::InvalidInput(format!(
                "density matrix trace {tr} is not 1"
            )));
        }
        sym /= Complex64::new(tr, 0.0);
        let spec = eig_hermitian(&sym)?;
        if let Some(&low) = spec.eigenvalues.first() {
            if low < -tol::PSD {
                return Err(Error::InvalidInput(format!(
                    "density matrix has negative eigenvalue {low:.3e}"
                )));
            }
        }
        let dim = sym.nrows();
        Ok(Self { dim, mat: sym })
    }

    pub(crate) fn from_exact(mat: CMatrix) -> Self {
        let dim = mat.nrows();
        Self { dim, mat }
    }

    /// Pure state |ψ⟩⟨ψ| from an unnormalized vector.
    pub fn pure(psi: &CVector) -> Result<Self> {
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if norm2 < 1e-300 || !norm2.is_finite() {
            return Err(Error::InvalidInput(
                "state vector has zero or non-finite norm".into(),
            ));
        }
        let mut mat = CMatrix::zeros(psi.len(), psi.len());
        for i in 0..psi.len() {
            for j in 0..psi.len() {
                mat[(i, j)] = psi[i] * psi[j].conj() / norm2;
            }
        }
        Ok(Self::from_exact(symmetrized(&mat)))
    }

    /// Basis state |k⟩⟨k|.
    pub fn basis_state(dim: usize, k: usize) -> Self {
        let mut mat = CMatrix::zeros(dim, dim);
        mat[(k, k)] = Complex64::new(1.0, 0.0);
        Self { dim, mat }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let mut mat = CMatrix::zeros(dim, dim);
        for i in 0..dim {
            mat[(i, i)] = Complex64::new(1.0 / dim as f64, 0.0);
        }
        Self { dim, mat }
    }

    /// Gibbs state e^{−βH}/Z, evaluated with a spectral shift so large |β|
    /// does not overflow.
    pub fn thermal(h: &HermitianOperator, beta: f64) -> Result<Self> {
        let spec = h.eig()?;
        let logits: Vec<f64> = spec.eigenvalues.iter().map(|&w| -beta * w).collect();
        let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = logits.iter().map(|&a| (a - m).exp()).collect();
        let z: f64 = weights.iter().sum();
        let probs: Vec<f64> = weights.iter().map(|&w| w / z).collect();
        Ok(Self::from_exact(symmetrized(&spec.rebuild(&probs))))
    }

    /// Mixture Σ_a p_a |a⟩⟨a| over the columns of a basis.
    pub fn mixture(basis: &Basis, probs: &[f64]) -> Result<Self> {
        if probs.len() != basis.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} probabilities for basis of dimension {}",
                probs.len(),
                basis.dim()
            )));
        }
        let sum: f64 = probs.iter().sum();
        if probs.iter().any(|&p| p < -tol::PSD) || (sum - 1.0).abs() > tol::TRACE {
            return Err(Error::InvalidInput(
                "mixture weights must be nonnegative and sum to 1".into(),
            ));
        }
        let spec = Spectrum {
            eigenvalues: probs.to_vec(),
            eigenvectors: basis.vectors().clone(),
        };
        Ok(Self::from_exact(symmetrized(&spec.rebuild(probs))))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn eig(&self) -> Result<Spectrum> {
        eig_hermitian(&self.mat)
    }

    /// Kronecker product ρ_S ⊗ ρ_E; system factor first.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        Ok(Self::from_exact(kronecker(&self.mat, &other.mat)?))
    }

    /// Reduced state over the kept factor of a (d_S, d_E) split.
    pub fn partial_trace(&self, dims: (usize, usize), keep: Subsystem) -> Result<Self> {
        let (ds, de) = dims;
        if ds * de != self.dim || ds == 0 || de == 0 {
            return Err(Error::DimensionMismatch(format!(
                "state dim {} does not factor as {}x{}",
                self.dim, ds, de
            )));
        }
        let kept = match keep {
            Subsystem::System => ds,
            Subsystem::Environment => de,
        };
        let mut out = CMatrix::zeros(kept, kept);
        match keep {
            Subsystem::System => {
                for s in 0..ds {
                    for sp in 0..ds {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for e in 0..de {
                            acc += self.mat[(s * de + e, sp * de + e)];
                        }
                        out[(s, sp)] = acc;
                    }
                }
            }
            Subsystem::Environment => {
                for e in 0..de {
                    for ep in 0..de {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for s in 0..ds {
                            acc += self.mat[(s * de + e, s * de + ep)];
                        }
                        out[(e, ep)] = acc;
                    }
                }
            }
        }
        Ok(Self::from_exact(symmetrized(&out)))
    }

    /// Conjugation U ρ U†.
    pub fn evolve(&self, u: &CMatrix) -> Result<Self> {
        if u.nrows() != self.dim || u.ncols() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "unitary is {}x{}, state dim {}",
                u.nrows(),
                u.ncols(),
                self.dim
            )));
        }
        let out = u * &self.mat * u.adjoint();
        Ok(Self::from_exact(symmetrized(&out)))
    }

    /// Trace distance ½‖ρ − σ‖₁.
    pub fn trace_distance(&self, other: &Self) -> Result<f64> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(format!(
                "state dims {} vs {}",
                self.dim, other.dim
            )));
        }
        let diff = &self.mat - &other.mat;
        let spec = eig_hermitian(&diff)?;
        Ok(0.5 * spec.eigenvalues.iter().map(|w| w.abs()).sum::<f64>())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (&self.mat - &other.mat)
            .iter()
            .fold(0.0f64, |m, z| m.max(z.norm()))
    }
}

/// Eigendecomposition with ascending eigenvalues and orthonormal columns.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl Spectrum {
    /// V diag(vals) V† for arbitrary replacement values.
    pub fn rebuild(&self, vals: &[f64]) -> CMatrix {
        let n = self.eigenvalues.len();
        let mut scaled = self.eigenvectors.clone();
        for k in 0..n {
            let v = Complex64::new(vals[k], 0.0);
            for i in 0..n {
                scaled[(i, k)] *= v;
            }
        }
        &scaled * self.eigenvectors.adjoint()
    }

    /// V diag(f(w)) V† with complex-valued f, e.g. exp(−iwt).
    pub fn rebuild_complex(&self, vals: &[Complex64]) -> CMatrix {
        let n = self.eigenvalues.len();
        let mut scaled = self.eigenvectors.clone();
        for k in 0..n {
            for i in 0..n {
                scaled[(i, k)] *= vals[k];
            }
        }
        &scaled * self.eigenvectors.adjoint()
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.rebuild(&self.eigenvalues)
    }
}

/// Hermitian eigendecomposition with deterministic ordering and phases.
///
/// Eigenvalues come out ascending; each eigenvector is rotated so that its
/// largest-magnitude component (lowest index on ties) is real and positive.
pub fn eig_hermitian(mat: &CMatrix) -> Result<Spectrum> {
    ensure_square(mat, "matrix")?;
    ensure_finite(mat, "matrix")?;
    let n = mat.nrows();
    let sym = symmetrized(mat);
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 4096)
        .ok_or_else(|| Error::NonConvergence("symmetric eigensolver failed to converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .expect("finite eigenvalues")
    });
    let mut eigenvalues = Vec::with_capacity(n);
    let mut eigenvectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvalues.push(eig.eigenvalues[src]);
        let col = eig.eigenvectors.column(src);
        // phase fix: largest-magnitude component real positive
        let mut k_max = 0;
        let mut best = -1.0f64;
        for (i, z) in col.iter().enumerate() {
            let a = z.norm();
            // strict > keeps the lowest index on exact ties
            if a > best {
                best = a;
                k_max = i;
            }
        }
        let pivot = col[k_max];
        let phase = if pivot.norm() > 0.0 {
            pivot.conj() / pivot.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..n {
            eigenvectors[(i, dst)] = col[i] * phase;
        }
    }
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// An orthonormal, complete measurement basis: unitary matrix of columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    dim: usize,
    vectors: CMatrix,
}

impl Basis {
    pub fn new(vectors: CMatrix) -> Result<Self> {
        ensure_square(&vectors, "basis")?;
        ensure_finite(&vectors, "basis")?;
        let gram = vectors.adjoint() * &vectors;
        let id = CMatrix::identity(vectors.nrows(), vectors.ncols());
        let dev = (gram - id).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        if dev > tol::UNITARITY {
            return Err(Error::InvalidInput(format!(
                "basis is not orthonormal: max |V†V - I| = {dev:.3e}"
            )));
        }
        let dim = vectors.nrows();
        Ok(Self { dim, vectors })
    }

    pub fn computational(dim: usize) -> Self {
        Self {
            dim,
            vectors: CMatrix::identity(dim, dim),
        }
    }

    /// The eigenbasis of a spectral decomposition.
    pub fn from_spectrum(spec: &Spectrum) -> Self {
        let dim = spec.eigenvalues.len();
        Self {
            dim,
            vectors: spec.eigenvectors.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vectors(&self) -> &CMatrix {
        &self.vectors
    }

    pub fn vector(&self, k: usize) -> CVector {
        CVector::from_column_slice(self.vectors.column(k).as_slice())
    }

    /// Rank-1 projector |a_k⟩⟨a_k|.
    pub fn projector(&self, k: usize) -> HermitianOperator {
        let col = self.vectors.column(k);
        let mut mat = CMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                mat[(i, j)] = col[i] * col[j].conj();
            }
        }
        HermitianOperator::from_exact(symmetrized(&mat))
    }

    /// Populations ⟨a|ρ|a⟩ of a state in this basis.
    pub fn populations(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        if rho.dim() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "basis dim {} vs state dim {}",
                self.dim,
                rho.dim()
            )));
        }
        let rot = self.vectors.adjoint() * rho.matrix() * &self.vectors;
        Ok((0..self.dim).map(|i| rot[(i, i)].re).collect())
    }
}

/// Orthogonal (in the Hilbert–Schmidt sense) traceless Hermitian basis of a
/// d-dimensional operator space: d²−1 generalized Gell-Mann matrices.
///
/// Together with the identity these span every Hermitian operator, so their
/// expectation values amount to full tomography.
pub fn traceless_hermitian_basis(dim: usize) -> Vec<HermitianOperator> {
    let mut out = Vec::with_capacity(dim * dim - 1);
    for i in 0..dim {
        for j in (i + 1)..dim {
            let mut sym = CMatrix::zeros(dim, dim);
            sym[(i, j)] = Complex64::new(1.0, 0.0);
            sym[(j, i)] = Complex64::new(1.0, 0.0);
            out.push(HermitianOperator::from_exact(sym));
            let mut asym = CMatrix::zeros(dim, dim);
            asym[(i, j)] = Complex64::new(0.0, -1.0);
            asym[(j, i)] = Complex64::new(0.0, 1.0);
            out.push(HermitianOperator::from_exact(asym));
        }
    }
    for k in 1..dim {
        let mut diag = vec![0.0; dim];
        for d in diag.iter_mut().take(k) {
            *d = 1.0;
        }
        diag[k] = -(k as f64);
        out.push(HermitianOperator::from_real_diagonal(&diag));
    }
    out
}
