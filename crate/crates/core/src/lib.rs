//! Maximum-entropy state assignment and entropy production for
//! finite-dimensional quantum systems.
//!
//! An observer who measures only a limited set of observables, possibly
//! through a quantum channel, cannot reconstruct a system state completely.
//! The unbiased assignment compatible with the measured expectation values is
//! the maximum-entropy state, a Gibbs-like exponential-family member. The
//! relative entropy between the actual state and that assignment quantifies
//! the entropy produced by the missing information.
//!
//! The crate is organized in four layers:
//!
//! - [`operator`], [`coarse`], [`entropy`]: dense Hermitian linear algebra,
//!   projective coarse-grainings, and the entropy functionals built on them.
//! - [`channel`]: CPTP maps as Kraus families, their trace-duals, named noise
//!   channels, and unitary dilations.
//! - [`solver`]: the convex dual solve producing the maximum-entropy state
//!   for an arbitrary mix of direct and channel-routed linear constraints.
//! - [`scenario`]: end-to-end setups pairing the general solver against the
//!   closed-form answer known for each measurement scheme, emitting
//!   structured reports. [`scenario::batch`] runs many of them at once,
//!   in parallel when the `parallel` feature (default) is enabled.
//!
//! All entropies are in nats. States and operators are immutable after
//! construction and every operation is a pure function, so values can be
//! shared freely across threads.

pub mod channel;
pub mod coarse;
pub mod entropy;
pub mod error;
pub mod operator;
pub mod random;
pub mod scenario;
pub mod solver;
pub mod tol;

pub use channel::{DilationRecord, KrausChannel};
pub use coarse::{CoarseGraining, JointOutcomeTable};
pub use error::{Error, Result};
pub use operator::{
    traceless_hermitian_basis, Basis, DensityMatrix, HermitianOperator, Spectrum, Subsystem,
};
pub use solver::{Constraint, ConstraintSet, MaxEntSolution, RoutedConstraint, SolveOptions};

/// Dense complex matrix used throughout the crate.
pub type CMatrix = nalgebra::DMatrix<num_complex::Complex64>;
/// Dense complex vector.
pub type CVector = nalgebra::DVector<num_complex::Complex64>;
