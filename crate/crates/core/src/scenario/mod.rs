//! End-to-end measurement and channel setups, each pairing the general
//! constraint solver against the closed-form assignment known for that
//! scheme and emitting a structured [`ScenarioReport`].
//!
//! Reports carry a digest of their inputs so a CSV row can be traced back to
//! the exact matrices that produced it. A report is `converged` only when the
//! underlying solves converged and every recorded oracle delta is inside its
//! tolerance.

mod evolution;
mod measurement;
mod one_to_one;
mod open_system;
mod solve;

pub mod batch;

pub use batch::{run_batch, ScenarioSpec};
pub use evolution::{propagate, EvolutionSpec};
pub use measurement::{coarse_grained, dephasing_channel, fine_grained, obs_channel};
pub use one_to_one::one_to_one;
pub use open_system::{joint_coarse, open_system, KnowledgeGrade};
pub use solve::solve_report;

use std::collections::BTreeMap;

use sha2::{Digest, Sha256};

use crate::CMatrix;

/// Structured result of one scenario run: named scalar quantities plus the
/// deviations between independently computed routes to the same number.
#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub scenario_id: String,
    pub inputs_digest: String,
    pub seed: Option<u64>,
    pub quantities: BTreeMap<String, f64>,
    pub oracle_deltas: BTreeMap<String, f64>,
    pub converged: bool,
}

impl ScenarioReport {
    pub(crate) fn new(scenario_id: &str, inputs_digest: String) -> Self {
        Self {
            scenario_id: scenario_id.to_string(),
            inputs_digest,
            seed: None,
            quantities: BTreeMap::new(),
            oracle_deltas: BTreeMap::new(),
            converged: true,
        }
    }

    pub(crate) fn put(&mut self, name: &str, value: f64) {
        self.quantities.insert(name.to_string(), value);
    }

    /// Record an oracle deviation; the report stays converged only while
    /// every delta is finite and inside its tolerance.
    pub(crate) fn delta(&mut self, name: &str, value: f64, tolerance: f64) {
        self.oracle_deltas.insert(name.to_string(), value);
        if value.is_nan() || value.abs() > tolerance {
            self.converged = false;
        }
    }

    pub(crate) fn require(&mut self, ok: bool) {
        if !ok {
            self.converged = false;
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn max_oracle_delta(&self) -> f64 {
        self.oracle_deltas
            .values()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// |a − b| that treats two like-signed infinities as agreeing exactly.
pub(crate) fn diff_allowing_inf(a: f64, b: f64) -> f64 {
    if a.is_infinite() && b.is_infinite() && a.signum() == b.signum() {
        0.0
    } else {
        (a - b).abs()
    }
}

/// Reproducibility hash over a scenario's inputs.
pub(crate) struct InputDigest {
    hasher: Sha256,
}

impl InputDigest {
    pub fn new(scenario_id: &str) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(scenario_id.as_bytes());
        Self { hasher }
    }

    pub fn text(&mut self, s: &str) -> &mut Self {
        self.hasher.update([0u8]);
        self.hasher.update(s.as_bytes());
        self
    }

    pub fn int(&mut self, n: u64) -> &mut Self {
        self.hasher.update(n.to_le_bytes());
        self
    }

    pub fn real(&mut self, x: f64) -> &mut Self {
        self.hasher.update(x.to_le_bytes());
        self
    }

    pub fn matrix(&mut self, m: &CMatrix) -> &mut Self {
        self.int(m.nrows() as u64);
        self.int(m.ncols() as u64);
        for z in m.iter() {
            self.real(z.re).real(z.im);
        }
        self
    }

    pub fn finish(self) -> String {
        let digest = self.hasher.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Static description of one runnable scenario.
#[derive(Debug, Clone, Copy)]
pub struct ScenarioInfo {
    pub id: &'static str,
    pub summary: &'static str,
    pub required: &'static str,
}

/// Every scenario the crate can run, in the order the CLI lists them.
pub const REGISTRY: &[ScenarioInfo] = &[
    ScenarioInfo {
        id: "fine_grained",
        summary: "entropy production of a projective measurement in the evolving eigenbasis \
                  (diagonal-entropy change of a unitarily driven state)",
        required: "state, evolution",
    },
    ScenarioInfo {
        id: "coarse_grained",
        summary: "entropy production of a block-coarse projective measurement \
                  (observational-entropy change under unitary driving)",
        required: "state, blocks, evolution",
    },
    ScenarioInfo {
        id: "open_system",
        summary: "system-environment interaction with graded environment knowledge: \
                  none, initial energy, full initial state, or full final local states",
        required: "system_state, env_state, interaction, knowledge[, env_hamiltonian]",
    },
    ScenarioInfo {
        id: "joint_coarse",
        summary: "joint versus local coarse measurements on system and environment; \
                  the gap is the classical mutual information of the outcome table",
        required: "system_state, env_state, env_blocks, interaction[, env_basis]",
    },
    ScenarioInfo {
        id: "one_to_one",
        summary: "injective noise channel: output tomography recovers the input \
                  (zero production), entropy change computed through the unitary dilation",
        required: "channel, state",
    },
    ScenarioInfo {
        id: "dephasing_channel",
        summary: "complete dephasing: production equals the diagonal-entropy gap, \
                  measured directly and through the channel's trace-dual",
        required: "state[, basis]",
    },
    ScenarioInfo {
        id: "obs_channel",
        summary: "block-averaging channel: production equals the observational-entropy gap, \
                  measured directly and through the channel's trace-dual",
        required: "state, blocks[, basis]",
    },
    ScenarioInfo {
        id: "solve_mes",
        summary: "maximum-entropy assignment for an explicit constraint set, with \
                  residuals, multipliers, and the production relative to a reference state",
        required: "dim, state, constraints",
    },
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_ids_are_unique() {
        for (i, a) in REGISTRY.iter().enumerate() {
            for b in REGISTRY.iter().skip(i + 1) {
                assert_ne!(a.id, b.id);
            }
        }
    }

    #[test]
    fn digest_is_input_sensitive() {
        let m = CMatrix::identity(2, 2);
        let mut a = InputDigest::new("x");
        a.matrix(&m);
        let mut b = InputDigest::new("x");
        b.matrix(&(m.clone() * num_complex::Complex64::new(2.0, 0.0)));
        assert_ne!(a.finish(), b.finish());
    }

    #[test]
    fn inf_diff_convention() {
        assert_eq!(diff_allowing_inf(f64::INFINITY, f64::INFINITY), 0.0);
        assert!(diff_allowing_inf(f64::INFINITY, 1.0).is_infinite());
        assert!((diff_allowing_inf(2.0, 1.0) - 1.0).abs() < 1e-15);
    }
}
