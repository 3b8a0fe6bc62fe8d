//! Batch execution of independent scenarios.
//!
//! Every scenario is a pure function of its spec, so a batch can fan out
//! across threads without changing any result: reports come back in spec
//! order and are bit-identical to a sequential run. The parallel path needs
//! the `parallel` feature (on by default); without it, or with a thread count
//! of one, the batch runs sequentially.

use crate::channel::KrausChannel;
use crate::coarse::CoarseGraining;
use crate::error::Result;
use crate::operator::{Basis, DensityMatrix, HermitianOperator};
use crate::scenario::evolution::EvolutionSpec;
use crate::scenario::open_system::KnowledgeGrade;
use crate::scenario::{self, ScenarioReport};
use crate::solver::{ConstraintSet, SolveOptions};
use crate::CMatrix;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Owned inputs for one scenario run.
#[derive(Debug, Clone)]
pub enum ScenarioSpec {
    FineGrained {
        rho0: DensityMatrix,
        evolution: EvolutionSpec,
    },
    CoarseGrained {
        rho0: DensityMatrix,
        blocks: Vec<usize>,
        evolution: EvolutionSpec,
    },
    OpenSystem {
        system0: DensityMatrix,
        env0: DensityMatrix,
        interaction: CMatrix,
        env_hamiltonian: Option<HermitianOperator>,
        knowledge: KnowledgeGrade,
    },
    JointCoarse {
        joint0: DensityMatrix,
        dims: (usize, usize),
        env_cg: CoarseGraining,
        interaction: CMatrix,
    },
    OneToOne {
        channel: KrausChannel,
        rho: DensityMatrix,
    },
    DephasingChannel {
        basis: Basis,
        rho: DensityMatrix,
    },
    ObsChannel {
        cg: CoarseGraining,
        rho: DensityMatrix,
    },
    SolveMes {
        constraints: ConstraintSet,
        rho: DensityMatrix,
        options: SolveOptions,
    },
}

impl ScenarioSpec {
    pub fn scenario_id(&self) -> &'static str {
        match self {
            ScenarioSpec::FineGrained { .. } => "fine_grained",
            ScenarioSpec::CoarseGrained { .. } => "coarse_grained",
            ScenarioSpec::OpenSystem { .. } => "open_system",
            ScenarioSpec::JointCoarse { .. } => "joint_coarse",
            ScenarioSpec::OneToOne { .. } => "one_to_one",
            ScenarioSpec::DephasingChannel { .. } => "dephasing_channel",
            ScenarioSpec::ObsChannel { .. } => "obs_channel",
            ScenarioSpec::SolveMes { .. } => "solve_mes",
        }
    }

    pub fn run(&self) -> Result<ScenarioReport> {
        match self {
            ScenarioSpec::FineGrained { rho0, evolution } => {
                scenario::fine_grained(rho0, evolution)
            }
            ScenarioSpec::CoarseGrained {
                rho0,
                blocks,
                evolution,
            } => scenario::coarse_grained(rho0, blocks, evolution),
            ScenarioSpec::OpenSystem {
                system0,
                env0,
                interaction,
                env_hamiltonian,
                knowledge,
            } => scenario::open_system(
                system0,
                env0,
                interaction,
                env_hamiltonian.as_ref(),
                *knowledge,
            ),
            ScenarioSpec::JointCoarse {
                joint0,
                dims,
                env_cg,
                interaction,
            } => scenario::joint_coarse(joint0, *dims, env_cg, interaction),
            ScenarioSpec::OneToOne { channel, rho } => scenario::one_to_one(channel, rho),
            ScenarioSpec::DephasingChannel { basis, rho } => {
                scenario::dephasing_channel(basis, rho)
            }
            ScenarioSpec::ObsChannel { cg, rho } => scenario::obs_channel(cg, rho),
            ScenarioSpec::SolveMes {
                constraints,
                rho,
                options,
            } => scenario::solve_report(constraints, rho, options),
        }
    }
}

/// Run every spec sequentially, in order.
pub fn run_batch_sequential(specs: &[ScenarioSpec]) -> Vec<Result<ScenarioReport>> {
    specs.iter().map(ScenarioSpec::run).collect()
}

/// Run the batch on a dedicated thread pool; report order still follows spec
/// order.
#[cfg(feature = "parallel")]
pub fn run_batch_parallel(
    specs: &[ScenarioSpec],
    threads: usize,
) -> Result<Vec<Result<ScenarioReport>>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| crate::error::Error::InvalidInput(format!("thread pool: {e}")))?;
    Ok(pool.install(|| specs.par_iter().map(ScenarioSpec::run).collect()))
}

/// Run a batch, fanning out over `threads` workers when asked and available.
///
/// `None`, `Some(0)`, and `Some(1)` run sequentially. Without the `parallel`
/// feature every request degrades to the sequential path.
pub fn run_batch(specs: &[ScenarioSpec], threads: Option<usize>) -> Vec<Result<ScenarioReport>> {
    match threads {
        #[cfg(feature = "parallel")]
        Some(n) if n > 1 => {
            run_batch_parallel(specs, n).unwrap_or_else(|_| run_batch_sequential(specs))
        }
        _ => run_batch_sequential(specs),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;

    fn sample_specs() -> Vec<ScenarioSpec> {
        let mut rng = random::rng(61);
        let mut specs = Vec::new();
        for _ in 0..4 {
            let basis = random::basis(3, &mut rng);
            let rho = random::density(3, &mut rng);
            specs.push(ScenarioSpec::DephasingChannel { basis, rho });
            let cg = random::coarse_graining(4, &mut rng);
            let rho = random::density(4, &mut rng);
            specs.push(ScenarioSpec::ObsChannel { cg, rho });
        }
        specs
    }

    #[test]
    fn batch_reports_in_order() {
        let specs = sample_specs();
        let reports = run_batch(&specs, None);
        assert_eq!(reports.len(), specs.len());
        for (spec, rep) in specs.iter().zip(&reports) {
            assert_eq!(rep.as_ref().unwrap().scenario_id, spec.scenario_id());
        }
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_batch_matches_sequential() {
        let specs = sample_specs();
        let seq = run_batch_sequential(&specs);
        let par = run_batch_parallel(&specs, 4).unwrap();
        for (a, b) in seq.iter().zip(&par) {
            let (a, b) = (a.as_ref().unwrap(), b.as_ref().unwrap());
            assert_eq!(a.inputs_digest, b.inputs_digest);
            assert_eq!(a.quantities, b.quantities);
            assert_eq!(a.oracle_deltas, b.oracle_deltas);
        }
    }
}
