//! Entropy functionals: von Neumann, relative, diagonal, observational, and
//! the quantum and classical mutual informations. All values in nats.
//!
//! Support handling: eigenvalues below [`tol::SUPPORT_CUTOFF_REL`] times the
//! largest one are treated as exactly zero. The relative entropy returns
//! `f64::INFINITY` when more than [`tol::SUPPORT_LEAK`] of ρ's mass lies
//! outside σ's support; the quantity genuinely diverges there and a large
//! finite number would be a lie.

use crate::coarse::{CoarseGraining, JointOutcomeTable};
use crate::error::{Error, Result};
use crate::operator::{Basis, DensityMatrix, Subsystem};
use crate::tol;

fn support_cutoff(eigenvalues: &[f64]) -> f64 {
    let top = eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    tol::SUPPORT_CUTOFF_REL * top
}

fn shannon(probs: &[f64]) -> f64 {
    let cut = support_cutoff(probs);
    probs
        .iter()
        .filter(|&&p| p > cut)
        .map(|&p| -p * p.ln())
        .sum()
}

/// Von Neumann entropy S(ρ) = −tr{ρ ln ρ}.
pub fn von_neumann(rho: &DensityMatrix) -> Result<f64> {
    let spec = rho.eig()?;
    Ok(shannon(&spec.eigenvalues))
}

/// tr{ρ ln σ} evaluated on σ's support, plus the mass of ρ outside it.
///
/// The leak mass decides whether a relative entropy is finite; callers that
/// deliberately condition on a known pure factor (dilation bookkeeping) read
/// the cross term alone.
pub fn cross_term(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<(f64, f64)> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state dims {} vs {}",
            rho.dim(),
            sigma.dim()
        )));
    }
    let spec = sigma.eig()?;
    let cut = support_cutoff(&spec.eigenvalues);
    let weights = spec.eigenvectors.adjoint() * rho.matrix() * &spec.eigenvectors;
    let mut cross = 0.0;
    let mut leak = 0.0;
    for (k, &s) in spec.eigenvalues.iter().enumerate() {
        let w = weights[(k, k)].re.max(0.0);
        if s > cut {
            cross += w * s.ln();
        } else {
            leak += w;
        }
    }
    Ok((cross, leak))
}

/// Quantum relative entropy S(ρ‖σ) = tr{ρ(ln ρ − ln σ)}.
///
/// Returns `f64::INFINITY` when ρ has support mass beyond the leak tolerance
/// outside σ's support.
pub fn relative(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    let (cross, leak) = cross_term(rho, sigma)?;
    if leak > tol::SUPPORT_LEAK {
        return Ok(f64::INFINITY);
    }
    let s = von_neumann(rho)?;
    Ok(-s - cross)
}

/// Diagonal entropy: Shannon entropy of ρ's populations in the given basis.
pub fn diagonal(rho: &DensityMatrix, basis: &Basis) -> Result<f64> {
    let pops = basis.populations(rho)?;
    Ok(shannon(&pops))
}

/// Observational entropy −Σ_i p_i ln(p_i / V_i) for a coarse-graining.
pub fn observational(rho: &DensityMatrix, cg: &CoarseGraining) -> Result<f64> {
    if cg.dim() != rho.dim() {
        return Err(Error::DimensionMismatch(format!(
            "coarse-graining dim {} vs state dim {}",
            cg.dim(),
            rho.dim()
        )));
    }
    let probs = cg.probabilities(rho)?;
    let cut = support_cutoff(&probs);
    Ok(probs
        .iter()
        .zip(cg.ranks())
        .filter(|(&p, _)| p > cut)
        .map(|(&p, &v)| -p * (p / v as f64).ln())
        .sum())
}

/// Quantum mutual information I = S(ρ_S) + S(ρ_E) − S(ρ_SE).
pub fn mutual_information(rho_se: &DensityMatrix, dims: (usize, usize)) -> Result<f64> {
    let rho_s = rho_se.partial_trace(dims, Subsystem::System)?;
    let rho_e = rho_se.partial_trace(dims, Subsystem::Environment)?;
    Ok(von_neumann(&rho_s)? + von_neumann(&rho_e)? - von_neumann(rho_se)?)
}

/// Classical mutual information Σ_{ij} p_{ij} ln(p_{ij}/(s_i p_j)).
///
/// Zero-probability cells contribute nothing.
pub fn classical_mutual_information(table: &JointOutcomeTable) -> f64 {
    let p = table.probabilities();
    let mut acc = 0.0;
    for i in 0..p.nrows() {
        for j in 0..p.ncols() {
            let pij = p[(i, j)];
            if pij > 0.0 {
                let denom = table.row_marginals()[i] * table.col_marginals()[j];
                acc += pij * (pij / denom).ln();
            }
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::CVector;
    use nalgebra::DMatrix;
    use num_complex::Complex64;

    const TOL: f64 = 1e-12;

    fn plus_state() -> DensityMatrix {
        let mut psi = CVector::zeros(2);
        psi[0] = Complex64::new(1.0, 0.0);
        psi[1] = Complex64::new(1.0, 0.0);
        DensityMatrix::pure(&psi).unwrap()
    }

    #[test]
    fn pure_state_entropy_zero() {
        let rho = DensityMatrix::basis_state(2, 0);
        assert!(von_neumann(&rho).unwrap().abs() < TOL);
    }

    #[test]
    fn maximally_mixed_entropy_ln_d() {
        for d in [2usize, 3, 5] {
            let rho = DensityMatrix::maximally_mixed(d);
            assert!((von_neumann(&rho).unwrap() - (d as f64).ln()).abs() < TOL);
        }
    }

    #[test]
    fn binary_entropy_frozen_value() {
        // -(0.75 ln 0.75 + 0.25 ln 0.25), evaluated independently
        let expected = 0.5623351446188083;
        let rho = DensityMatrix::new(DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.75, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.25, 0.0),
            ],
        ))
        .unwrap();
        assert!((von_neumann(&rho).unwrap() - expected).abs() < TOL);
    }

    #[test]
    fn relative_entropy_to_self_is_zero() {
        let rho = plus_state();
        assert!(relative(&rho, &rho).unwrap().abs() < 1e-10);
    }

    #[test]
    fn relative_entropy_pure_vs_mixed() {
        let rho = DensityMatrix::basis_state(2, 0);
        let sigma = DensityMatrix::maximally_mixed(2);
        assert!((relative(&rho, &sigma).unwrap() - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn relative_entropy_support_violation_is_infinite() {
        let rho = DensityMatrix::maximally_mixed(2);
        let sigma = DensityMatrix::basis_state(2, 0);
        assert!(relative(&rho, &sigma).unwrap().is_infinite());
    }

    #[test]
    fn relative_entropy_dim_mismatch() {
        let rho = DensityMatrix::maximally_mixed(2);
        let sigma = DensityMatrix::maximally_mixed(3);
        assert!(relative(&rho, &sigma).is_err());
    }

    #[test]
    fn diagonal_entropy_of_plus_state() {
        let rho = plus_state();
        let basis = Basis::computational(2);
        assert!((diagonal(&rho, &basis).unwrap() - 2f64.ln()).abs() < TOL);
        // in its own eigenbasis the diagonal entropy is the vN entropy: 0
        let own = Basis::from_spectrum(&rho.eig().unwrap());
        assert!(diagonal(&rho, &own).unwrap() < 1e-9);
    }

    #[test]
    fn observational_entropy_dim_mismatch() {
        let cg = CoarseGraining::single_block(3).unwrap();
        let rho = DensityMatrix::maximally_mixed(2);
        assert!(observational(&rho, &cg).is_err());
    }

    #[test]
    fn observational_entropy_limits() {
        let rho = DensityMatrix::basis_state(4, 1);
        let basis = Basis::computational(4);
        // rank-1 blocks reduce to the diagonal entropy
        let fine = CoarseGraining::rank1(&basis).unwrap();
        assert!(
            (observational(&rho, &fine).unwrap() - diagonal(&rho, &basis).unwrap()).abs() < TOL
        );
        // single block gives ln d regardless of the state
        let trivial = CoarseGraining::single_block(4).unwrap();
        assert!((observational(&rho, &trivial).unwrap() - 4f64.ln()).abs() < TOL);
    }

    #[test]
    fn observational_entropy_of_block_uniform_state_is_von_neumann() {
        let basis = Basis::computational(4);
        let cg = CoarseGraining::from_basis_blocks(&basis, &[2, 2]).unwrap();
        let rho = cg.block_uniform_state(&[0.3, 0.7]).unwrap();
        let sobs = observational(&rho, &cg).unwrap();
        let svn = von_neumann(&rho).unwrap();
        assert!((sobs - svn).abs() < 1e-12);
    }

    #[test]
    fn mutual_information_product_and_bell() {
        let rho_s = DensityMatrix::maximally_mixed(2);
        let rho_e = DensityMatrix::basis_state(2, 1);
        let product = rho_s.tensor(&rho_e).unwrap();
        assert!(mutual_information(&product, (2, 2)).unwrap().abs() < 1e-10);

        let mut psi = CVector::zeros(4);
        psi[0] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        psi[3] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let bell = DensityMatrix::pure(&psi).unwrap();
        assert!((mutual_information(&bell, (2, 2)).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn mutual_information_classically_correlated() {
        let mut mat = DMatrix::zeros(4, 4);
        mat[(0, 0)] = Complex64::new(0.5, 0.0);
        mat[(3, 3)] = Complex64::new(0.5, 0.0);
        let rho = DensityMatrix::new(mat).unwrap();
        assert!((mutual_information(&rho, (2, 2)).unwrap() - 2f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn classical_mi_product_table_is_zero() {
        let t = JointOutcomeTable::new(DMatrix::from_row_slice(2, 2, &[0.06, 0.14, 0.24, 0.56]))
            .unwrap();
        assert!(classical_mutual_information(&t).abs() < 1e-12);
    }

    #[test]
    fn classical_mi_frozen_values() {
        let corr =
            JointOutcomeTable::new(DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.5])).unwrap();
        assert!((classical_mutual_information(&corr) - 2f64.ln()).abs() < 1e-12);

        // 0.8 ln 1.6 + 0.2 ln 0.4, evaluated independently
        let expected = 0.19274475702175742;
        let t =
            JointOutcomeTable::new(DMatrix::from_row_slice(2, 2, &[0.4, 0.1, 0.1, 0.4])).unwrap();
        assert!((classical_mutual_information(&t) - expected).abs() < 1e-12);
    }
}
