//! Numerical tolerances used across the crate.
//!
//! Every threshold is pinned here so the behavior of validation and solving
//! is one place to audit. All are absolute unless stated otherwise.

/// Max-norm asymmetry allowed in an operator before symmetrization rejects it.
pub const HERMITICITY: f64 = 1e-8;

/// Allowed deviation of a density-matrix trace from one.
pub const TRACE: f64 = 1e-9;

/// Eigenvalues of a density matrix may undershoot zero by this much.
pub const PSD: f64 = 1e-9;

/// Eigenvalues below `SUPPORT_CUTOFF_REL * largest` are treated as outside
/// the support: they contribute nothing to entropy sums and logarithms.
pub const SUPPORT_CUTOFF_REL: f64 = 1e-12;

/// Probability mass outside a reference state's support that triggers the
/// divergent (+inf) branch of the relative entropy instead of a large
/// finite value.
pub const SUPPORT_LEAK: f64 = 1e-10;

/// Allowed deviation of a Kraus family's completeness sum from the identity.
pub const KRAUS_COMPLETENESS: f64 = 1e-10;

/// Allowed deviation from unitarity (max norm of U†U − I).
pub const UNITARITY: f64 = 1e-10;

/// Allowed deviation of projectors from idempotence/orthogonality.
pub const PROJECTOR: f64 = 1e-10;

/// Default residual bound for a converged constraint solve.
pub const CONSTRAINT: f64 = 1e-9;

/// Multiplier norm beyond which the dual solve is declared to be chasing a
/// boundary or infeasible point.
pub const MULTIPLIER_CAP: f64 = 1e6;

/// Default iteration cap for the dual solve.
pub const MAX_ITERATIONS: usize = 500;

/// Residual threshold for dropping a constraint operator as linearly
/// dependent on earlier ones (Hilbert–Schmidt Gram reduction).
pub const DEDUP_GRAM: f64 = 1e-10;

/// Targets of linearly dependent constraints may disagree with the implied
/// value by this much before the set is declared contradictory.
pub const DEDUP_TARGET: f64 = 1e-8;

/// Detection window for exact boundary population targets (0 or 1).
pub const BOUNDARY_DETECT: f64 = 1e-12;

/// Precondition checks on scenario inputs (diagonality, product form).
pub const PRECONDITION: f64 = 1e-9;

/// Solver-versus-closed-form agreement required for a scenario report to be
/// marked converged.
pub const SCENARIO_ORACLE: f64 = 1e-7;

/// Hard cap on tensor-product dimensions; dense desk-scale code only.
pub const MAX_DIM: usize = 4096;
