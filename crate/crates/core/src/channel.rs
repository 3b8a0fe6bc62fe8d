//! CPTP maps as Kraus families, their trace-duals, and unitary dilations.
//!
//! A channel Λ: L(H_D) → L(H_d) is stored as Kraus operators {K_k} of shape
//! d×D satisfying Σ_k K_k†K_k = 1_D. Kraus families are never canonicalized;
//! two channels are compared behaviorally (by their action on states), not by
//! their Kraus lists, which are non-unique.

use num_complex::Complex64;

use crate::coarse::CoarseGraining;
use crate::error::{Error, Result};
use crate::operator::{Basis, DensityMatrix, HermitianOperator, Subsystem};
use crate::tol;
use crate::{CMatrix, CVector};

/// A CPTP map given by Kraus operators, input dimension D, output dimension d.
#[derive(Debug, Clone)]
pub struct KrausChannel {
    in_dim: usize,
    out_dim: usize,
    kraus_ops: Vec<CMatrix>,
}

impl KrausChannel {
    /// Validate shapes and the completeness sum Σ K†K = 1.
    pub fn new(kraus_ops: Vec<CMatrix>) -> Result<Self> {
        let first = kraus_ops.first().ok_or_else(|| {
            Error::InvalidInput("channel needs at least one Kraus operator".into())
        })?;
        let out_dim = first.nrows();
        let in_dim = first.ncols();
        if out_dim == 0 || in_dim == 0 {
            return Err(Error::InvalidInput(
                "Kraus operators must be non-empty".into(),
            ));
        }
        let mut sum = CMatrix::zeros(in_dim, in_dim);
        for (k, op) in kraus_ops.iter().enumerate() {
            if op.nrows() != out_dim || op.ncols() != in_dim {
                return Err(Error::DimensionMismatch(format!(
                    "Kraus operator {k} is {}x{}, expected {out_dim}x{in_dim}",
                    op.nrows(),
                    op.ncols()
                )));
            }
            if op.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "Kraus operator {k} has non-finite entries"
                )));
            }
            sum += op.adjoint() * op;
        }
        let id = CMatrix::identity(in_dim, in_dim);
        let dev = (sum - id).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        if dev > tol::KRAUS_COMPLETENESS {
            return Err(Error::InvalidInput(format!(
                "Kraus family is not trace preserving: max |ΣK†K - I| = {dev:.3e}"
            )));
        }
        Ok(Self {
            in_dim,
            out_dim,
            kraus_ops,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn kraus_ops(&self) -> &[CMatrix] {
        &self.kraus_ops
    }

    /// Λ(ρ) = Σ_k K_k ρ K_k†.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.in_dim {
            return Err(Error::DimensionMismatch(format!(
                "channel input dim {} vs state dim {}",
                self.in_dim,
                rho.dim()
            )));
        }
        let mut out = CMatrix::zeros(self.out_dim, self.out_dim);
        for k in &self.kraus_ops {
            out += k * rho.matrix() * k.adjoint();
        }
        DensityMatrix::new(out)
    }

    /// Trace-dual Λ*(O) = Σ_k K_k† O K_k, satisfying tr{Λ*(O)ρ} = tr{O Λ(ρ)}.
    pub fn adjoint_apply(&self, obs: &HermitianOperator) -> Result<HermitianOperator> {
        if obs.dim() != self.out_dim {
            return Err(Error::DimensionMismatch(format!(
                "channel output dim {} vs observable dim {}",
                self.out_dim,
                obs.dim()
            )));
        }
        let mut out = CMatrix::zeros(self.in_dim, self.in_dim);
        for k in &self.kraus_ops {
            out += k.adjoint() * obs.matrix() * k;
        }
        HermitianOperator::new(out)
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            in_dim: dim,
            out_dim: dim,
            kraus_ops: vec![CMatrix::identity(dim, dim)],
        }
    }

    /// Unitary conjugation as a single-Kraus channel.
    pub fn unitary(u: CMatrix) -> Result<Self> {
        let gram = u.adjoint() * &u;
        let id = CMatrix::identity(u.nrows(), u.ncols());
        let dev = (gram - id).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        if u.nrows() != u.ncols() || dev > tol::UNITARITY {
            return Err(Error::InvalidInput(format!(
                "matrix is not unitary: max |U†U - I| = {dev:.3e}"
            )));
        }
        Ok(Self {
            in_dim: u.ncols(),
            out_dim: u.nrows(),
            kraus_ops: vec![u],
        })
    }

    /// Completely dephasing map in a basis: Kraus family {|a⟩⟨a|}.
    pub fn dephasing(basis: &Basis) -> Self {
        let ops = (0..basis.dim())
            .map(|a| basis.projector(a).into_matrix())
            .collect();
        Self {
            in_dim: basis.dim(),
            out_dim: basis.dim(),
            kraus_ops: ops,
        }
    }

    /// The block-averaging channel of a coarse-graining: Kraus operators
    /// |a_{iμ}⟩⟨a_{iν}|/√V_i over each block's orthonormal basis, mapping
    /// ρ ↦ Σ_i tr{Π_i ρ} Π_i/V_i.
    pub fn coarse_graining(cg: &CoarseGraining) -> Result<Self> {
        let dim = cg.dim();
        let mut ops = Vec::new();
        for (proj, &rank) in cg.projectors().iter().zip(cg.ranks()) {
            let spec = proj.eig()?;
            // block basis = eigenvectors with eigenvalue 1
            let cols: Vec<usize> = spec
                .eigenvalues
                .iter()
                .enumerate()
                .filter(|(_, &w)| w > 0.5)
                .map(|(k, _)| k)
                .collect();
            debug_assert_eq!(cols.len(), rank);
            let scale = 1.0 / (rank as f64).sqrt();
            for &mu in &cols {
                for &nu in &cols {
                    let mut op = CMatrix::zeros(dim, dim);
                    for r in 0..dim {
                        for c in 0..dim {
                            op[(r, c)] = spec.eigenvectors[(r, mu)]
                                * spec.eigenvectors[(c, nu)].conj()
                                * scale;
                        }
                    }
                    ops.push(op);
                }
            }
        }
        Self::new(ops)
    }

    /// Discarding one factor of a bipartite space: Kraus family {1_S ⊗ ⟨e|}
    /// (keep system) or {⟨s| ⊗ 1_E} (keep environment).
    pub fn partial_trace(d_s: usize, d_e: usize, keep: Subsystem) -> Result<Self> {
        if d_s == 0 || d_e == 0 || d_s * d_e > tol::MAX_DIM {
            return Err(Error::InvalidInput(format!(
                "bad partial-trace dimensions {d_s}x{d_e}"
            )));
        }
        let joint = d_s * d_e;
        let mut ops = Vec::new();
        match keep {
            Subsystem::System => {
                for e in 0..d_e {
                    let mut op = CMatrix::zeros(d_s, joint);
                    for s in 0..d_s {
                        op[(s, s * d_e + e)] = Complex64::new(1.0, 0.0);
                    }
                    ops.push(op);
                }
            }
            Subsystem::Environment => {
                for s in 0..d_s {
                    let mut op = CMatrix::zeros(d_e, joint);
                    for e in 0..d_e {
                        op[(e, s * d_e + e)] = Complex64::new(1.0, 0.0);
                    }
                    ops.push(op);
                }
            }
        }
        Self::new(ops)
    }

    /// Qubit bit-flip: ρ ↦ (1−p)ρ + p XρX. Injective for p < 1/2.
    pub fn bit_flip(p: f64) -> Result<Self> {
        two_outcome_pauli(p, HermitianOperator::pauli_x().into_matrix())
    }

    /// Qubit phase-flip: ρ ↦ (1−p)ρ + p ZρZ. Injective for p < 1/2.
    pub fn phase_flip(p: f64) -> Result<Self> {
        two_outcome_pauli(p, HermitianOperator::pauli_z().into_matrix())
    }

    /// Qubit depolarizing: ρ ↦ (1−p)ρ + p·1/2. Injective for p < 1.
    pub fn depolarizing(p: f64) -> Result<Self> {
        check_unit_interval(p, "depolarizing probability")?;
        let id = CMatrix::identity(2, 2);
        let ops = vec![
            id * Complex64::new((1.0 - 0.75 * p).sqrt(), 0.0),
            HermitianOperator::pauli_x().into_matrix() * Complex64::new((0.25 * p).sqrt(), 0.0),
            HermitianOperator::pauli_y().into_matrix() * Complex64::new((0.25 * p).sqrt(), 0.0),
            HermitianOperator::pauli_z().into_matrix() * Complex64::new((0.25 * p).sqrt(), 0.0),
        ];
        Self::new(ops)
    }

    /// Qubit amplitude damping with decay probability γ. Injective for γ < 1;
    /// γ = 1 sends every state to |0⟩⟨0|.
    pub fn amplitude_damping(gamma: f64) -> Result<Self> {
        check_unit_interval(gamma, "damping probability")?;
        let mut k0 = CMatrix::identity(2, 2);
        k0[(1, 1)] = Complex64::new((1.0 - gamma).sqrt(), 0.0);
        let mut k1 = CMatrix::zeros(2, 2);
        k1[(0, 1)] = Complex64::new(gamma.sqrt(), 0.0);
        Self::new(vec![k0, k1])
    }

    /// Unitary dilation of a square channel: an isometry V|ψ⟩ = Σ_k K_k|ψ⟩⊗|k⟩
    /// completed to a full unitary on system ⊗ ancilla by deterministic
    /// Gram–Schmidt, with the ancilla reference state fixed to |0⟩.
    pub fn stinespring(&self) -> Result<DilationRecord> {
        if self.in_dim != self.out_dim {
            return Err(Error::Unsupported(format!(
                "dilation requires a square channel, got {} -> {}",
                self.in_dim, self.out_dim
            )));
        }
        let d = self.in_dim;
        let a_dim = self.kraus_ops.len();
        let n = d
            .checked_mul(a_dim)
            .filter(|&x| x <= tol::MAX_DIM)
            .ok_or_else(|| {
                Error::InvalidInput("dilation dimension exceeds the dense cap".into())
            })?;

        // isometry columns at joint index (s, k) = s*a_dim + k for input |j⟩⊗|0⟩
        let mut columns: Vec<CVector> = Vec::with_capacity(n);
        for j in 0..d {
            let mut col = CVector::zeros(n);
            for (k, op) in self.kraus_ops.iter().enumerate() {
                for s in 0..d {
                    col[s * a_dim + k] = op[(s, j)];
                }
            }
            columns.push(col);
        }

        // complete with canonical vectors, re-orthogonalized twice
        let mut completion: Vec<CVector> = Vec::with_capacity(n - d);
        let mut cand = 0;
        while columns.len() + completion.len() < n && cand < n {
            let mut v = CVector::zeros(n);
            v[cand] = Complex64::new(1.0, 0.0);
            cand += 1;
            for _ in 0..2 {
                for c in columns.iter().chain(completion.iter()) {
                    let overlap = c.dotc(&v);
                    v -= c * overlap;
                }
            }
            let norm = v.norm();
            if norm > 1e-8 {
                v /= Complex64::new(norm, 0.0);
                // phase convention: largest-magnitude component real positive
                let mut k_max = 0;
                let mut best = -1.0f64;
                for (i, z) in v.iter().enumerate() {
                    if z.norm() > best {
                        best = z.norm();
                        k_max = i;
                    }
                }
                let piv = v[k_max];
                v *= piv.conj() / piv.norm();
                completion.push(v);
            }
        }
        if columns.len() + completion.len() != n {
            return Err(Error::NonConvergence(
                "failed to complete the dilation isometry to a unitary".into(),
            ));
        }

        let mut unitary = CMatrix::zeros(n, n);
        let mut next_completion = completion.into_iter();
        for col in 0..n {
            let src = if col % a_dim == 0 {
                columns[col / a_dim].clone()
            } else {
                next_completion.next().expect("completion count matches")
            };
            for i in 0..n {
                unitary[(i, col)] = src[i];
            }
        }

        let gram = unitary.adjoint() * &unitary;
        let id = CMatrix::identity(n, n);
        let dev = (gram - id).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        if dev > tol::UNITARITY {
            return Err(Error::NonConvergence(format!(
                "dilation unitary failed the unitarity check: {dev:.3e}"
            )));
        }
        Ok(DilationRecord {
            system_dim: d,
            ancilla_dim: a_dim,
            dilation_unitary: unitary,
            ancilla_ref_index: 0,
        })
    }
}

fn check_unit_interval(p: f64, what: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&p) || !p.is_finite() {
        return Err(Error::InvalidInput(format!(
            "{what} must lie in [0, 1], got {p}"
        )));
    }
    Ok(())
}

fn two_outcome_pauli(p: f64, pauli: CMatrix) -> Result<KrausChannel> {
    check_unit_interval(p, "flip probability")?;
    let id = CMatrix::identity(2, 2);
    KrausChannel::new(vec![
        id * Complex64::new((1.0 - p).sqrt(), 0.0),
        pauli * Complex64::new(p.sqrt(), 0.0),
    ])
}

/// Unitary realization of a square channel on system ⊗ ancilla with the
/// ancilla prepared in the reference basis state.
#[derive(Debug, Clone)]
pub struct DilationRecord {
    system_dim: usize,
    ancilla_dim: usize,
    dilation_unitary: CMatrix,
    ancilla_ref_index: usize,
}

impl DilationRecord {
    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    pub fn ancilla_dim(&self) -> usize {
        self.ancilla_dim
    }

    pub fn unitary(&self) -> &CMatrix {
        &self.dilation_unitary
    }

    pub fn ancilla_ref_index(&self) -> usize {
        self.ancilla_ref_index
    }

    /// The joint state U(ρ ⊗ |0⟩⟨0|)U† before the ancilla is discarded.
    pub fn joint_state(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.system_dim {
            return Err(Error::DimensionMismatch(format!(
                "dilation system dim {} vs state dim {}",
                self.system_dim,
                rho.dim()
            )));
        }
        let anc = DensityMatrix::basis_state(self.ancilla_dim, self.ancilla_ref_index);
        rho.tensor(&anc)?.evolve(&self.dilation_unitary)
    }

    /// tr_A{U(ρ ⊗ |0⟩⟨0|)U†}; must reproduce the channel it was built from.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        self.joint_state(rho)?
            .partial_trace((self.system_dim, self.ancilla_dim), Subsystem::System)
    }
}
