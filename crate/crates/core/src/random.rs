//! Seeded random instances: Haar unitaries, Hilbert–Schmidt-random states,
//! random Hermitian observables, and random coarse-grainings.
//!
//! Everything is driven by a [`ChaCha8Rng`] so a recorded seed reproduces an
//! instance bit-for-bit on any platform.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::coarse::CoarseGraining;
use crate::operator::{Basis, DensityMatrix, HermitianOperator};
use crate::{CMatrix, CVector};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derive a stream seed for item `index` of a batch rooted at `seed`.
///
/// SplitMix64 step; avoids correlated neighboring ChaCha streams without
/// carrying RNG state across items.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn ginibre(dim: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    CMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Haar-random unitary via QR of a Ginibre matrix with the phase of R's
/// diagonal absorbed into Q.
pub fn haar_unitary(dim: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let g = ginibre(dim, rng);
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for k in 0..dim {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..dim {
            q[(i, k)] *= phase;
        }
    }
    q
}

/// Hilbert–Schmidt-random density matrix GG†/tr{GG†}; full rank almost surely.
pub fn density(dim: usize, rng: &mut ChaCha8Rng) -> DensityMatrix {
    let g = ginibre(dim, rng);
    let w = &g * g.adjoint();
    let tr = w.trace().re;
    DensityMatrix::new(w / Complex64::new(tr, 0.0)).expect("Wishart matrix is a valid state")
}

/// Random Hermitian observable (G + G†)/2 with O(1) entries.
pub fn hermitian(dim: usize, rng: &mut ChaCha8Rng) -> HermitianOperator {
    let g = ginibre(dim, rng);
    let h = (&g + g.adjoint()) * Complex64::new(0.5, 0.0);
    HermitianOperator::new(h).expect("symmetrized matrix is Hermitian")
}

/// Random pure state from a normalized Gaussian vector.
pub fn pure(dim: usize, rng: &mut ChaCha8Rng) -> DensityMatrix {
    let psi = CVector::from_fn(dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    });
    DensityMatrix::pure(&psi).expect("Gaussian vector has nonzero norm")
}

/// Random Haar basis of dimension `dim`.
pub fn basis(dim: usize, rng: &mut ChaCha8Rng) -> Basis {
    Basis::new(haar_unitary(dim, rng)).expect("Haar matrix is unitary")
}

/// Random composition of `dim` into block sizes, each at least 1.
pub fn blocks(dim: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut remaining = dim;
    let mut out = Vec::new();
    while remaining > 0 {
        let b = rng.random_range(1..=remaining);
        out.push(b);
        remaining -= b;
    }
    out
}

/// Random coarse-graining: random block sizes over a Haar-random basis.
pub fn coarse_graining(dim: usize, rng: &mut ChaCha8Rng) -> CoarseGraining {
    let basis = basis(dim, rng);
    let blocks = blocks(dim, rng);
    CoarseGraining::from_basis_blocks(&basis, &blocks).expect("generated blocks partition dim")
}

/// Random probability vector (flat Dirichlet via exponential spacings).
pub fn probabilities(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut raw: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = raw.iter().sum();
    for p in &mut raw {
        *p /= total;
    }
    raw
}

/// Random state diagonal in the given basis.
pub fn diagonal_density(basis: &Basis, rng: &mut ChaCha8Rng) -> DensityMatrix {
    let probs = probabilities(basis.dim(), rng);
    DensityMatrix::mixture(basis, &probs).expect("valid mixture")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tol;

    #[test]
    fn haar_unitary_is_unitary_and_deterministic() {
        let mut r1 = rng(7);
        let u1 = haar_unitary(5, &mut r1);
        let gram = u1.adjoint() * &u1;
        let id = CMatrix::identity(5, 5);
        assert!((gram - id).iter().all(|z| z.norm() < tol::UNITARITY));

        let mut r2 = rng(7);
        let u2 = haar_unitary(5, &mut r2);
        assert_eq!(u1, u2);
    }

    #[test]
    fn random_density_is_valid() {
        let mut r = rng(3);
        let rho = density(6, &mut r);
        assert!((rho.matrix().trace().re - 1.0).abs() < 1e-12);
        let spec = rho.eig().unwrap();
        assert!(spec.eigenvalues.iter().all(|&w| w > -1e-12));
    }

    #[test]
    fn blocks_partition_dim() {
        let mut r = rng(11);
        for _ in 0..20 {
            let b = blocks(9, &mut r);
            assert_eq!(b.iter().sum::<usize>(), 9);
            assert!(b.iter().all(|&x| x >= 1));
        }
    }

    #[test]
    fn derive_seed_spreads() {
        let a = derive_seed(42, 0);
        let b = derive_seed(42, 1);
        assert_ne!(a, b);
        assert_eq!(a, derive_seed(42, 0));
    }
}
