//! Projective coarse-grainings and classical joint-outcome tables.
//!
//! A coarse-graining is a complete orthogonal family of projectors {Π_i}
//! partitioning the Hilbert space into blocks of rank V_i = tr Π_i. Rank-1
//! blocks recover an ordinary fine-grained projective measurement.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::operator::{Basis, DensityMatrix, HermitianOperator};
use crate::tol;

/// Complete orthogonal projector family {Π_i} with block ranks V_i.
#[derive(Debug, Clone)]
pub struct CoarseGraining {
    dim: usize,
    projectors: Vec<HermitianOperator>,
    ranks: Vec<usize>,
}

impl CoarseGraining {
    /// Validate a projector family: each idempotent, mutually orthogonal,
    /// summing to the identity, with integer ranks adding up to the dimension.
    pub fn new(projectors: Vec<HermitianOperator>) -> Result<Self> {
        let dim = projectors
            .first()
            .map(HermitianOperator::dim)
            .ok_or_else(|| {
                Error::InvalidInput("coarse-graining needs at least one projector".into())
            })?;
        let mut ranks = Vec::with_capacity(projectors.len());
        let mut total = HermitianOperator::zeros(dim);
        for (i, p) in projectors.iter().enumerate() {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "projector {i} has dim {} but the family lives in dim {dim}",
                    p.dim()
                )));
            }
            if !p.is_projector() {
                return Err(Error::InvalidInput(format!("block {i} is not idempotent")));
            }
            let tr = p.trace();
            let rank = tr.round();
            if (tr - rank).abs() > 1e-8 || rank < 1.0 {
                return Err(Error::InvalidInput(format!(
                    "block {i} has non-integer rank {tr}"
                )));
            }
            ranks.push(rank as usize);
            total = total.add(p)?;
        }
        for i in 0..projectors.len() {
            for j in (i + 1)..projectors.len() {
                let prod = projectors[i].matrix() * projectors[j].matrix();
                if prod.iter().any(|z| z.norm() > tol::PROJECTOR) {
                    return Err(Error::InvalidInput(format!(
                        "blocks {i} and {j} are not orthogonal"
                    )));
                }
            }
        }
        if total.max_abs_diff(&HermitianOperator::identity(dim)) > tol::PROJECTOR {
            return Err(Error::InvalidInput(
                "projector family does not sum to the identity".into(),
            ));
        }
        if ranks.iter().sum::<usize>() != dim {
            return Err(Error::InvalidInput(
                "block ranks do not add up to the dimension".into(),
            ));
        }
        Ok(Self {
            dim,
            projectors,
            ranks,
        })
    }

    /// Group consecutive columns of a basis into blocks of the given sizes.
    pub fn from_basis_blocks(basis: &Basis, blocks: &[usize]) -> Result<Self> {
        if blocks.iter().sum::<usize>() != basis.dim() || blocks.contains(&0) {
            return Err(Error::InvalidInput(format!(
                "block sizes {blocks:?} do not partition dimension {}",
                basis.dim()
            )));
        }
        let mut projectors = Vec::with_capacity(blocks.len());
        let mut start = 0;
        for &b in blocks {
            let mut proj = HermitianOperator::zeros(basis.dim());
            for k in start..start + b {
                proj = proj.add(&basis.projector(k))?;
            }
            projectors.push(proj);
            start += b;
        }
        Self::new(projectors)
    }

    /// Fine-grained measurement: every block rank 1.
    pub fn rank1(basis: &Basis) -> Result<Self> {
        let blocks = vec![1; basis.dim()];
        Self::from_basis_blocks(basis, &blocks)
    }

    /// The trivial single-block family Π = I.
    pub fn single_block(dim: usize) -> Result<Self> {
        Self::new(vec![HermitianOperator::identity(dim)])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    pub fn projectors(&self) -> &[HermitianOperator] {
        &self.projectors
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    /// Block probabilities p_i = tr{Π_i ρ}.
    pub fn probabilities(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        self.projectors.iter().map(|p| p.expectation(rho)).collect()
    }

    /// The block-uniform state Σ_i p_i Π_i / V_i.
    pub fn block_uniform_state(&self, probs: &[f64]) -> Result<DensityMatrix> {
        if probs.len() != self.projectors.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} probabilities for {} blocks",
                probs.len(),
                self.projectors.len()
            )));
        }
        let mut acc = HermitianOperator::zeros(self.dim);
        for ((p, proj), &rank) in probs.iter().zip(&self.projectors).zip(&self.ranks) {
            acc = acc.add(&proj.scale(p / rank as f64))?;
        }
        DensityMatrix::new(acc.into_matrix())
    }

    /// Each rank-1 refinement splits every block into single basis vectors of
    /// the block's own support; used to test refinement monotonicity.
    pub fn refine_to_rank1(&self) -> Result<CoarseGraining> {
        let mut projectors = Vec::with_capacity(self.dim);
        for p in &self.projectors {
            let spec = p.eig()?;
            for (k, &w) in spec.eigenvalues.iter().enumerate() {
                if w > 0.5 {
                    let col = spec.eigenvectors.column(k);
                    let mut mat = DMatrix::zeros(self.dim, self.dim);
                    for i in 0..self.dim {
                        for j in 0..self.dim {
                            mat[(i, j)] = col[i] * col[j].conj();
                        }
                    }
                    projectors.push(HermitianOperator::new(mat)?);
                }
            }
        }
        CoarseGraining::new(projectors)
    }
}

/// Joint outcome probabilities p_{ij} with their marginals.
#[derive(Debug, Clone)]
pub struct JointOutcomeTable {
    probabilities: DMatrix<f64>,
    row_marginals: Vec<f64>,
    col_marginals: Vec<f64>,
}

impl JointOutcomeTable {
    /// Validate and store: entries nonnegative (tiny negative rounding is
    /// clipped to zero), total probability one.
    pub fn new(probabilities: DMatrix<f64>) -> Result<Self> {
        let mut probs = probabilities;
        for v in probs.iter_mut() {
            if !v.is_finite() {
                return Err(Error::InvalidInput(
                    "outcome table has non-finite entries".into(),
                ));
            }
            if *v < 0.0 {
                if *v < -1e-12 {
                    return Err(Error::InvalidInput(format!(
                        "outcome table has negative entry {v:.3e}"
                    )));
                }
                *v = 0.0;
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > tol::TRACE {
            return Err(Error::InvalidInput(format!(
                "outcome probabilities sum to {total}, expected 1"
            )));
        }
        let row_marginals: Vec<f64> = (0..probs.nrows()).map(|i| probs.row(i).sum()).collect();
        let col_marginals: Vec<f64> = (0..probs.ncols()).map(|j| probs.column(j).sum()).collect();
        Ok(Self {
            probabilities: probs,
            row_marginals,
            col_marginals,
        })
    }

    pub fn probabilities(&self) -> &DMatrix<f64> {
        &self.probabilities
    }

    pub fn row_marginals(&self) -> &[f64] {
        &self.row_marginals
    }

    pub fn col_marginals(&self) -> &[f64] {
        &self.col_marginals
    }
}
