//! Declarative run configuration: operators, states, channels, and the
//! scenarios to run over them, in TOML.
//!
//! Complex numbers are `[re, im]` pairs and matrices are row-major lists of
//! rows. Validation is two-stage: TOML syntax first (reported with line and
//! column), then semantic checks that accumulate every error with the path of
//! the offending field instead of stopping at the first.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Deserialize;

use entroprod::scenario::{EvolutionSpec, KnowledgeGrade, ScenarioSpec};
use entroprod::{
    random, Basis, CMatrix, CoarseGraining, ConstraintSet, DensityMatrix, HermitianOperator,
    KrausChannel, SolveOptions, Subsystem,
};

pub type ComplexPair = [f64; 2];

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub seed: Option<u64>,
    pub output: Option<OutputSection>,
    pub tolerances: Option<ToleranceSection>,
    #[serde(default)]
    pub operators: BTreeMap<String, OperatorSpec>,
    #[serde(default)]
    pub states: BTreeMap<String, StateSpec>,
    #[serde(default)]
    pub channels: BTreeMap<String, ChannelSpec>,
    #[serde(default)]
    pub scenarios: Vec<ScenarioConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSection {
    pub constraint_tol: Option<f64>,
    pub multiplier_cap: Option<f64>,
    pub max_iterations: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    pub matrix: Vec<Vec<ComplexPair>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    pub kind: String,
    pub dim: Option<usize>,
    pub matrix: Option<Vec<Vec<ComplexPair>>>,
    pub vector: Option<Vec<ComplexPair>>,
    pub hamiltonian: Option<String>,
    pub beta: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub kind: String,
    pub p: Option<f64>,
    pub gamma: Option<f64>,
    pub basis: Option<String>,
    pub dim: Option<usize>,
    pub blocks: Option<Vec<usize>>,
    pub dims: Option<Vec<usize>>,
    pub keep: Option<String>,
    pub ops: Option<Vec<Vec<Vec<ComplexPair>>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub id: String,
    pub name: Option<String>,
    pub state: Option<String>,
    pub system_state: Option<String>,
    pub env_state: Option<String>,
    pub env_hamiltonian: Option<String>,
    pub knowledge: Option<String>,
    pub basis: Option<String>,
    pub blocks: Option<Vec<usize>>,
    pub env_blocks: Option<Vec<usize>>,
    pub env_basis: Option<String>,
    pub channel: Option<String>,
    pub dim: Option<usize>,
    pub evolution: Option<EvolutionConfig>,
    pub interaction: Option<InteractionConfig>,
    pub constraints: Option<Vec<ConstraintConfig>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    pub total_time: f64,
    pub steps: Option<usize>,
    pub schedule: Vec<SchedulePoint>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchedulePoint {
    pub time: f64,
    pub hamiltonian: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionConfig {
    pub hamiltonian: String,
    pub time: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintConfig {
    pub observable: Option<String>,
    pub preset: Option<String>,
    pub channel: Option<String>,
    pub target: Option<f64>,
    pub basis: Option<String>,
    pub index: Option<usize>,
    pub block: Option<usize>,
    pub blocks: Option<Vec<usize>>,
    pub hamiltonian: Option<String>,
    pub subsystem: Option<String>,
    pub dims: Option<Vec<usize>>,
}

/// One fully resolved scenario: a runnable spec plus its reporting identity.
#[derive(Debug)]
pub struct PlannedScenario {
    pub name: String,
    pub spec: ScenarioSpec,
    pub seed: u64,
}

/// A validated run: everything `run` needs, with all references resolved.
#[derive(Debug)]
pub struct RunPlan {
    pub seed: u64,
    pub output_dir: Option<String>,
    pub scenarios: Vec<PlannedScenario>,
}

/// Validation error collector; paths point at the offending config field.
#[derive(Default)]
struct Problems {
    items: Vec<String>,
}

impl Problems {
    fn push(&mut self, path: &str, msg: impl std::fmt::Display) {
        self.items.push(format!("{path}: {msg}"));
    }
}

fn fnv1a(text: &str) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for b in text.as_bytes() {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

fn parse_matrix(rows: &[Vec<ComplexPair>], path: &str, problems: &mut Problems) -> Option<CMatrix> {
    let n = rows.len();
    if n == 0 {
        problems.push(path, "matrix is empty");
        return None;
    }
    if rows.iter().any(|r| r.len() != n) {
        problems.push(
            path,
            "matrix rows must all have the same length as the row count",
        );
        return None;
    }
    let mut m = DMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        for (j, &[re, im]) in row.iter().enumerate() {
            m[(i, j)] = Complex64::new(re, im);
        }
    }
    Some(m)
}

struct Resolver {
    operators: BTreeMap<String, HermitianOperator>,
    states: BTreeMap<String, DensityMatrix>,
    channels: BTreeMap<String, KrausChannel>,
}

impl Resolver {
    fn operator(
        &self,
        name: &str,
        path: &str,
        problems: &mut Problems,
    ) -> Option<HermitianOperator> {
        match self.operators.get(name) {
            Some(op) => Some(op.clone()),
            None => {
                problems.push(path, format!("unresolved operator reference '{name}'"));
                None
            }
        }
    }

    fn state(&self, name: &str, path: &str, problems: &mut Problems) -> Option<DensityMatrix> {
        match self.states.get(name) {
            Some(s) => Some(s.clone()),
            None => {
                problems.push(path, format!("unresolved state reference '{name}'"));
                None
            }
        }
    }

    fn channel(&self, name: &str, path: &str, problems: &mut Problems) -> Option<KrausChannel> {
        match self.channels.get(name) {
            Some(c) => Some(c.clone()),
            None => {
                problems.push(path, format!("unresolved channel reference '{name}'"));
                None
            }
        }
    }

    /// A basis given as "computational" (needs a dimension hint) or as the
    /// eigenbasis of a named operator.
    fn basis(
        &self,
        spec: Option<&str>,
        dim_hint: Option<usize>,
        path: &str,
        problems: &mut Problems,
    ) -> Option<Basis> {
        match spec {
            None | Some("computational") => match dim_hint {
                Some(d) => Some(Basis::computational(d)),
                None => {
                    problems.push(path, "computational basis needs a dimension to infer");
                    None
                }
            },
            Some(name) => {
                let op = self.operator(name, path, problems)?;
                match op.eig() {
                    Ok(spec) => Some(Basis::from_spectrum(&spec)),
                    Err(e) => {
                        problems.push(path, e);
                        None
                    }
                }
            }
        }
    }
}

/// Parse the TOML text; syntax errors carry line/column from the parser.
pub fn parse_text(text: &str) -> Result<RawConfig, String> {
    toml::from_str::<RawConfig>(text).map_err(|e| format!("config parse error: {e}"))
}

/// Validate a parsed config and resolve every cross-reference, returning the
/// runnable plan or the full list of problems found.
pub fn validate(
    raw: &RawConfig,
    seed_override: Option<u64>,
    tol_override: Option<f64>,
) -> Result<RunPlan, Vec<String>> {
    let mut problems = Problems::default();
    let seed = seed_override.or(raw.seed).unwrap_or(0);

    let mut opts = SolveOptions::default();
    if let Some(t) = &raw.tolerances {
        if let Some(v) = t.constraint_tol {
            opts.constraint_tol = v;
        }
        if let Some(v) = t.multiplier_cap {
            opts.multiplier_cap = v;
        }
        if let Some(v) = t.max_iterations {
            opts.max_iterations = v;
        }
    }
    if let Some(v) = tol_override {
        opts.constraint_tol = v;
    }
    if !(opts.constraint_tol > 0.0 && opts.constraint_tol.is_finite()) {
        problems.push("tolerances.constraint_tol", "must be positive and finite");
    }

    let mut resolver = Resolver {
        operators: BTreeMap::new(),
        states: BTreeMap::new(),
        channels: BTreeMap::new(),
    };

    for (name, spec) in &raw.operators {
        let path = format!("operators.{name}");
        if let Some(m) = parse_matrix(&spec.matrix, &path, &mut problems) {
            match HermitianOperator::new(m) {
                Ok(op) => {
                    resolver.operators.insert(name.clone(), op);
                }
                Err(e) => problems.push(&path, e),
            }
        }
    }

    for (name, spec) in &raw.states {
        let path = format!("states.{name}");
        let state = build_state(name, spec, seed, &resolver, &path, &mut problems);
        if let Some(s) = state {
            resolver.states.insert(name.clone(), s);
        }
    }

    for (name, spec) in &raw.channels {
        let path = format!("channels.{name}");
        if let Some(c) = build_channel(spec, &resolver, &path, &mut problems) {
            resolver.channels.insert(name.clone(), c);
        }
    }

    if raw.scenarios.is_empty() {
        problems.push("scenarios", "at least one scenario is required");
    }

    let mut seen_names = BTreeSet::new();
    let mut planned = Vec::new();
    for (index, sc) in raw.scenarios.iter().enumerate() {
        let path = format!("scenarios[{index}]");
        let name = sc.name.clone().unwrap_or_else(|| sc.id.clone());
        // the name becomes a CSV field and a file name
        if name.is_empty() || name.contains([',', '\n', '/', '\\']) {
            problems.push(&path, format!("scenario name '{name}' is not usable"));
            continue;
        }
        if !seen_names.insert(name.clone()) {
            problems.push(&path, format!("duplicate scenario name '{name}'"));
            continue;
        }
        if let Some(spec) = build_scenario(sc, &resolver, opts, &path, &mut problems) {
            planned.push(PlannedScenario {
                name,
                spec,
                seed: random::derive_seed(seed, index as u64),
            });
        }
    }

    if problems.items.is_empty() {
        Ok(RunPlan {
            seed,
            output_dir: raw.output.as_ref().and_then(|o| o.dir.clone()),
            scenarios: planned,
        })
    } else {
        Err(problems.items)
    }
}

fn build_state(
    name: &str,
    spec: &StateSpec,
    seed: u64,
    resolver: &Resolver,
    path: &str,
    problems: &mut Problems,
) -> Option<DensityMatrix> {
    match spec.kind.as_str() {
        "literal" => {
            let rows = spec.matrix.as_ref().or_else(|| {
                problems.push(path, "literal state needs a matrix");
                None
            })?;
            let m = parse_matrix(rows, path, problems)?;
            match DensityMatrix::new(m) {
                Ok(s) => Some(s),
                Err(e) => {
                    problems.push(path, e);
                    None
                }
            }
        }
        "pure" => {
            let v = spec.vector.as_ref().or_else(|| {
                problems.push(path, "pure state needs a vector");
                None
            })?;
            if v.is_empty() {
                problems.push(path, "state vector is empty");
                return None;
            }
            let psi = entroprod::CVector::from_iterator(
                v.len(),
                v.iter().map(|&[re, im]| Complex64::new(re, im)),
            );
            match DensityMatrix::pure(&psi) {
                Ok(s) => Some(s),
                Err(e) => {
                    problems.push(path, e);
                    None
                }
            }
        }
        "thermal" => {
            let h_name = spec.hamiltonian.as_ref().or_else(|| {
                problems.push(path, "thermal state needs a hamiltonian reference");
                None
            })?;
            let beta = spec.beta.unwrap_or(1.0);
            let h = resolver.operator(h_name, path, problems)?;
            match DensityMatrix::thermal(&h, beta) {
                Ok(s) => Some(s),
                Err(e) => {
                    problems.push(path, e);
                    None
                }
            }
        }
        "maximally_mixed" => {
            let dim = require_dim(spec.dim, path, problems)?;
            Some(DensityMatrix::maximally_mixed(dim))
        }
        "random" => {
            let dim = require_dim(spec.dim, path, problems)?;
            let mut rng = random::rng(random::derive_seed(seed, fnv1a(name)));
            Some(random::density(dim, &mut rng))
        }
        other => {
            problems.push(
                path,
                format!(
                    "unknown state kind '{other}' \
                     (expected literal | pure | thermal | maximally_mixed | random)"
                ),
            );
            None
        }
    }
}

fn require_dim(dim: Option<usize>, path: &str, problems: &mut Problems) -> Option<usize> {
    match dim {
        Some(d) if d >= 1 => Some(d),
        _ => {
            problems.push(path, "needs dim >= 1");
            None
        }
    }
}

fn build_channel(
    spec: &ChannelSpec,
    resolver: &Resolver,
    path: &str,
    problems: &mut Problems,
) -> Option<KrausChannel> {
    let built = match spec.kind.as_str() {
        "bit_flip" | "phase_flip" | "depolarizing" => {
            let p = spec.p.or_else(|| {
                problems.push(path, "needs probability p");
                None
            })?;
            match spec.kind.as_str() {
                "bit_flip" => KrausChannel::bit_flip(p),
                "phase_flip" => KrausChannel::phase_flip(p),
                _ => KrausChannel::depolarizing(p),
            }
        }
        "amplitude_damping" => {
            let gamma = spec.gamma.or_else(|| {
                problems.push(path, "needs gamma");
                None
            })?;
            KrausChannel::amplitude_damping(gamma)
        }
        "dephasing" => {
            let basis = resolver.basis(spec.basis.as_deref(), spec.dim, path, problems)?;
            Ok(KrausChannel::dephasing(&basis))
        }
        "coarse_graining" => {
            let basis = resolver.basis(spec.basis.as_deref(), spec.dim, path, problems)?;
            let blocks = spec.blocks.as_ref().or_else(|| {
                problems.push(path, "coarse_graining channel needs blocks");
                None
            })?;
            CoarseGraining::from_basis_blocks(&basis, blocks)
                .and_then(|cg| KrausChannel::coarse_graining(&cg))
        }
        "partial_trace" => {
            let dims = spec.dims.as_ref().or_else(|| {
                problems.push(path, "partial_trace channel needs dims = [d_system, d_env]");
                None
            })?;
            if dims.len() != 2 {
                problems.push(path, "dims must have exactly two entries");
                return None;
            }
            let keep = match spec.keep.as_deref() {
                Some("environment") => Subsystem::Environment,
                Some("system") | None => Subsystem::System,
                Some(other) => {
                    problems.push(path, format!("unknown keep '{other}'"));
                    return None;
                }
            };
            KrausChannel::partial_trace(dims[0], dims[1], keep)
        }
        "kraus" => {
            let ops = spec.ops.as_ref().or_else(|| {
                problems.push(path, "kraus channel needs ops");
                None
            })?;
            let mut mats = Vec::with_capacity(ops.len());
            for (k, rows) in ops.iter().enumerate() {
                let nrows = rows.len();
                if nrows == 0 || rows.iter().any(|r| r.len() != rows[0].len()) {
                    problems.push(path, format!("kraus op {k} is not rectangular"));
                    return None;
                }
                let ncols = rows[0].len();
                let mut m = DMatrix::zeros(nrows, ncols);
                for (i, row) in rows.iter().enumerate() {
                    for (j, &[re, im]) in row.iter().enumerate() {
                        m[(i, j)] = Complex64::new(re, im);
                    }
                }
                mats.push(m);
            }
            KrausChannel::new(mats)
        }
        other => {
            problems.push(
                path,
                format!(
                    "unknown channel kind '{other}' (expected bit_flip | phase_flip | \
                     depolarizing | amplitude_damping | dephasing | coarse_graining | \
                     partial_trace | kraus)"
                ),
            );
            return None;
        }
    };
    match built {
        Ok(c) => Some(c),
        Err(e) => {
            problems.push(path, e);
            None
        }
    }
}

fn build_evolution(
    cfg: &EvolutionConfig,
    resolver: &Resolver,
    path: &str,
    problems: &mut Problems,
) -> Option<EvolutionSpec> {
    let mut schedule = Vec::with_capacity(cfg.schedule.len());
    for (i, point) in cfg.schedule.iter().enumerate() {
        let h = resolver.operator(
            &point.hamiltonian,
            &format!("{path}.schedule[{i}]"),
            problems,
        )?;
        schedule.push((point.time, h));
    }
    match EvolutionSpec::new(schedule, cfg.total_time, cfg.steps.unwrap_or(256)) {
        Ok(spec) => Some(spec),
        Err(e) => {
            problems.push(path, e);
            None
        }
    }
}

fn build_interaction(
    cfg: &InteractionConfig,
    expected_dim: usize,
    resolver: &Resolver,
    path: &str,
    problems: &mut Problems,
) -> Option<CMatrix> {
    let h = resolver.operator(&cfg.hamiltonian, path, problems)?;
    if h.dim() != expected_dim {
        problems.push(
            path,
            format!(
                "interaction Hamiltonian dim {} does not match the joint dimension {expected_dim}",
                h.dim()
            ),
        );
        return None;
    }
    let spec = match EvolutionSpec::constant(h, cfg.time, 1) {
        Ok(s) => s,
        Err(e) => {
            problems.push(path, e);
            return None;
        }
    };
    match entroprod::scenario::propagate(&spec) {
        Ok(u) => Some(u),
        Err(e) => {
            problems.push(path, e);
            None
        }
    }
}

fn build_scenario(
    sc: &ScenarioConfig,
    resolver: &Resolver,
    opts: SolveOptions,
    path: &str,
    problems: &mut Problems,
) -> Option<ScenarioSpec> {
    let need_state =
        |field: &Option<String>, what: &str, problems: &mut Problems| -> Option<DensityMatrix> {
            match field {
                Some(name) => resolver.state(name, &format!("{path}.{what}"), problems),
                None => {
                    problems.push(path, format!("scenario '{}' needs {what}", sc.id));
                    None
                }
            }
        };

    match sc.id.as_str() {
        "fine_grained" | "coarse_grained" => {
            let rho0 = need_state(&sc.state, "state", problems)?;
            let evo = sc.evolution.as_ref().or_else(|| {
                problems.push(path, "needs an evolution section");
                None
            })?;
            let evolution = build_evolution(evo, resolver, &format!("{path}.evolution"), problems)?;
            if sc.id == "fine_grained" {
                Some(ScenarioSpec::FineGrained { rho0, evolution })
            } else {
                let blocks = sc.blocks.clone().or_else(|| {
                    problems.push(path, "coarse_grained needs blocks");
                    None
                })?;
                Some(ScenarioSpec::CoarseGrained {
                    rho0,
                    blocks,
                    evolution,
                })
            }
        }
        "open_system" => {
            let system0 = need_state(&sc.system_state, "system_state", problems)?;
            let env0 = need_state(&sc.env_state, "env_state", problems)?;
            let knowledge = match &sc.knowledge {
                Some(k) => match KnowledgeGrade::parse(k) {
                    Ok(g) => g,
                    Err(e) => {
                        problems.push(&format!("{path}.knowledge"), e);
                        return None;
                    }
                },
                None => {
                    problems.push(path, "open_system needs knowledge");
                    return None;
                }
            };
            let env_hamiltonian = match &sc.env_hamiltonian {
                Some(name) => {
                    Some(resolver.operator(name, &format!("{path}.env_hamiltonian"), problems)?)
                }
                None => None,
            };
            let inter = sc.interaction.as_ref().or_else(|| {
                problems.push(path, "open_system needs an interaction section");
                None
            })?;
            let joint_dim = system0.dim() * env0.dim();
            let interaction = build_interaction(
                inter,
                joint_dim,
                resolver,
                &format!("{path}.interaction"),
                problems,
            )?;
            Some(ScenarioSpec::OpenSystem {
                system0,
                env0,
                interaction,
                env_hamiltonian,
                knowledge,
            })
        }
        "joint_coarse" => {
            let system0 = need_state(&sc.system_state, "system_state", problems)?;
            let env0 = need_state(&sc.env_state, "env_state", problems)?;
            let env_blocks = sc.env_blocks.clone().or_else(|| {
                problems.push(path, "joint_coarse needs env_blocks");
                None
            })?;
            let env_basis = resolver.basis(
                sc.env_basis.as_deref(),
                Some(env0.dim()),
                &format!("{path}.env_basis"),
                problems,
            )?;
            let env_cg = match CoarseGraining::from_basis_blocks(&env_basis, &env_blocks) {
                Ok(cg) => cg,
                Err(e) => {
                    problems.push(&format!("{path}.env_blocks"), e);
                    return None;
                }
            };
            let inter = sc.interaction.as_ref().or_else(|| {
                problems.push(path, "joint_coarse needs an interaction section");
                None
            })?;
            let dims = (system0.dim(), env0.dim());
            let interaction = build_interaction(
                inter,
                dims.0 * dims.1,
                resolver,
                &format!("{path}.interaction"),
                problems,
            )?;
            let joint0 = match system0.tensor(&env0) {
                Ok(j) => j,
                Err(e) => {
                    problems.push(path, e);
                    return None;
                }
            };
            Some(ScenarioSpec::JointCoarse {
                joint0,
                dims,
                env_cg,
                interaction,
            })
        }
        "one_to_one" => {
            let rho = need_state(&sc.state, "state", problems)?;
            let channel = match &sc.channel {
                Some(name) => resolver.channel(name, &format!("{path}.channel"), problems)?,
                None => {
                    problems.push(path, "one_to_one needs a channel");
                    return None;
                }
            };
            Some(ScenarioSpec::OneToOne { channel, rho })
        }
        "dephasing_channel" => {
            let rho = need_state(&sc.state, "state", problems)?;
            let basis = resolver.basis(
                sc.basis.as_deref(),
                Some(rho.dim()),
                &format!("{path}.basis"),
                problems,
            )?;
            Some(ScenarioSpec::DephasingChannel { basis, rho })
        }
        "obs_channel" => {
            let rho = need_state(&sc.state, "state", problems)?;
            let basis = resolver.basis(
                sc.basis.as_deref(),
                Some(rho.dim()),
                &format!("{path}.basis"),
                problems,
            )?;
            let blocks = sc.blocks.clone().or_else(|| {
                problems.push(path, "obs_channel needs blocks");
                None
            })?;
            let cg = match CoarseGraining::from_basis_blocks(&basis, &blocks) {
                Ok(cg) => cg,
                Err(e) => {
                    problems.push(&format!("{path}.blocks"), e);
                    return None;
                }
            };
            Some(ScenarioSpec::ObsChannel { cg, rho })
        }
        "solve_mes" => {
            let rho = need_state(&sc.state, "state", problems)?;
            let dim = sc.dim.unwrap_or(rho.dim());
            let constraint_cfgs = sc.constraints.as_ref().or_else(|| {
                problems.push(path, "solve_mes needs constraints");
                None
            })?;
            let mut cs = ConstraintSet::new(dim);
            for (i, cc) in constraint_cfgs.iter().enumerate() {
                build_constraint(
                    cc,
                    &mut cs,
                    &rho,
                    resolver,
                    &format!("{path}.constraints[{i}]"),
                    problems,
                );
            }
            Some(ScenarioSpec::SolveMes {
                constraints: cs,
                rho,
                options: opts,
            })
        }
        other => {
            let known: Vec<&str> = entroprod::scenario::REGISTRY.iter().map(|s| s.id).collect();
            problems.push(
                path,
                format!(
                    "unknown scenario id '{other}' (known: {})",
                    known.join(", ")
                ),
            );
            None
        }
    }
}

/// Expand one constraint entry (explicit observable or preset) into the set.
/// Omitted targets are measured from the reference state.
fn build_constraint(
    cc: &ConstraintConfig,
    cs: &mut ConstraintSet,
    rho: &DensityMatrix,
    resolver: &Resolver,
    path: &str,
    problems: &mut Problems,
) {
    let push_direct = |cs: &mut ConstraintSet,
                       op: HermitianOperator,
                       target: Option<f64>,
                       label: String,
                       problems: &mut Problems| {
        let target = match target {
            Some(t) => t,
            None => match op.expectation(rho) {
                Ok(t) => t,
                Err(e) => {
                    problems.push(path, e);
                    return;
                }
            },
        };
        if let Err(e) = cs.push_direct_labeled(op, target, label) {
            problems.push(path, e);
        }
    };

    match (&cc.preset, &cc.observable) {
        (None, Some(op_name)) => {
            let Some(op) = resolver.operator(op_name, path, problems) else {
                return;
            };
            match &cc.channel {
                None => push_direct(cs, op, cc.target, op_name.clone(), problems),
                Some(ch_name) => {
                    let Some(channel) = resolver.channel(ch_name, path, problems) else {
                        return;
                    };
                    let target = match cc.target {
                        Some(t) => t,
                        None => {
                            let out = match channel.apply(rho) {
                                Ok(o) => o,
                                Err(e) => {
                                    problems.push(path, e);
                                    return;
                                }
                            };
                            match op.expectation(&out) {
                                Ok(t) => t,
                                Err(e) => {
                                    problems.push(path, e);
                                    return;
                                }
                            }
                        }
                    };
                    let label = format!("{op_name} via {ch_name}");
                    if let Err(e) = cs.push_routed_labeled(op, channel, target, label) {
                        problems.push(path, e);
                    }
                }
            }
        }
        (Some(preset), None) => match preset.as_str() {
            "population" => {
                let Some(basis) =
                    resolver.basis(cc.basis.as_deref(), Some(cs.dim()), path, problems)
                else {
                    return;
                };
                let Some(index) = cc.index else {
                    problems.push(path, "population preset needs index");
                    return;
                };
                if index >= basis.dim() {
                    problems.push(
                        path,
                        format!("index {index} out of range for dim {}", basis.dim()),
                    );
                    return;
                }
                push_direct(
                    cs,
                    basis.projector(index),
                    cc.target,
                    format!("population[{index}]"),
                    problems,
                );
            }
            "coarse_population" => {
                let Some(basis) =
                    resolver.basis(cc.basis.as_deref(), Some(cs.dim()), path, problems)
                else {
                    return;
                };
                let Some(blocks) = &cc.blocks else {
                    problems.push(path, "coarse_population preset needs blocks");
                    return;
                };
                let cg = match CoarseGraining::from_basis_blocks(&basis, blocks) {
                    Ok(cg) => cg,
                    Err(e) => {
                        problems.push(path, e);
                        return;
                    }
                };
                let Some(block) = cc.block else {
                    problems.push(path, "coarse_population preset needs block");
                    return;
                };
                if block >= cg.len() {
                    problems.push(
                        path,
                        format!("block {block} out of range for {} blocks", cg.len()),
                    );
                    return;
                }
                push_direct(
                    cs,
                    cg.projectors()[block].clone(),
                    cc.target,
                    format!("coarse_population[{block}]"),
                    problems,
                );
            }
            "energy" => {
                let Some(h_name) = &cc.hamiltonian else {
                    problems.push(path, "energy preset needs hamiltonian");
                    return;
                };
                let Some(h) = resolver.operator(h_name, path, problems) else {
                    return;
                };
                push_direct(cs, h, cc.target, format!("energy({h_name})"), problems);
            }
            "local_tomography" => {
                let Some(dims) = &cc.dims else {
                    problems.push(
                        path,
                        "local_tomography preset needs dims = [d_system, d_env]",
                    );
                    return;
                };
                if dims.len() != 2 || dims[0] * dims[1] != cs.dim() {
                    problems.push(
                        path,
                        format!(
                            "dims {dims:?} do not factor the constraint dimension {}",
                            cs.dim()
                        ),
                    );
                    return;
                }
                let (keep, local_dim) = match cc.subsystem.as_deref() {
                    Some("environment") => (Subsystem::Environment, dims[1]),
                    Some("system") | None => (Subsystem::System, dims[0]),
                    Some(other) => {
                        problems.push(path, format!("unknown subsystem '{other}'"));
                        return;
                    }
                };
                let channel = match KrausChannel::partial_trace(dims[0], dims[1], keep) {
                    Ok(c) => c,
                    Err(e) => {
                        problems.push(path, e);
                        return;
                    }
                };
                let local = match channel.apply(rho) {
                    Ok(s) => s,
                    Err(e) => {
                        problems.push(path, e);
                        return;
                    }
                };
                for (j, op) in entroprod::traceless_hermitian_basis(local_dim)
                    .into_iter()
                    .enumerate()
                {
                    let target = match op.expectation(&local) {
                        Ok(t) => t,
                        Err(e) => {
                            problems.push(path, e);
                            return;
                        }
                    };
                    let label = format!("local_tomography[{j}]");
                    if let Err(e) = cs.push_routed_labeled(op, channel.clone(), target, label) {
                        problems.push(path, e);
                    }
                }
            }
            other => {
                problems.push(
                    path,
                    format!(
                        "unknown preset '{other}' (expected population | coarse_population | \
                         energy | local_tomography)"
                    ),
                );
            }
        },
        (Some(_), Some(_)) => {
            problems.push(path, "give either a preset or an observable, not both");
        }
        (None, None) => {
            problems.push(path, "constraint needs an observable or a preset");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qubit_config(entries: [[f64; 2]; 8]) -> String {
        let f = |v: f64| crate::output::fmt_f64(v);
        format!(
            "seed = 3\n\
             [states.q]\n\
             kind = \"literal\"\n\
             matrix = [[[{}, {}], [{}, {}]], [[{}, {}], [{}, {}]]]\n\
             [[scenarios]]\n\
             id = \"dephasing_channel\"\n\
             state = \"q\"\n",
            f(entries[0][0]),
            f(entries[0][1]),
            f(entries[1][0]),
            f(entries[1][1]),
            f(entries[2][0]),
            f(entries[2][1]),
            f(entries[3][0]),
            f(entries[3][1]),
        )
    }

    #[test]
    fn matrix_literal_round_trips_through_formatting() {
        // awkward binary fractions: emit with the lossless formatter and
        // re-parse; the stored matrix must be bit-identical
        let a = 1.0 / 3.0;
        let b = 2f64.ln() / 7.0;
        let entries = [
            [1.0 - a, 0.0],
            [0.1 * b, 0.07],
            [0.1 * b, -0.07],
            [a, 0.0],
            [0.0; 2],
            [0.0; 2],
            [0.0; 2],
            [0.0; 2],
        ];
        let text = qubit_config(entries);
        let raw = parse_text(&text).unwrap();
        let plan = validate(&raw, None, None).unwrap();
        assert_eq!(plan.scenarios.len(), 1);
        let ScenarioSpec::DephasingChannel { rho, .. } = &plan.scenarios[0].spec else {
            panic!("wrong scenario kind");
        };
        assert_eq!(rho.matrix()[(0, 0)].re.to_bits(), (1.0 - a).to_bits());
        assert_eq!(rho.matrix()[(0, 1)].re.to_bits(), (0.1 * b).to_bits());
        assert_eq!(rho.matrix()[(0, 1)].im.to_bits(), (0.07f64).to_bits());
        assert_eq!(rho.matrix()[(1, 1)].re.to_bits(), a.to_bits());
    }

    #[test]
    fn minimal_config_parses_and_validates() {
        let text = "\
            [states.q]\n\
            kind = \"maximally_mixed\"\n\
            dim = 2\n\
            [[scenarios]]\n\
            id = \"dephasing_channel\"\n\
            state = \"q\"\n";
        let raw = parse_text(text).unwrap();
        let plan = validate(&raw, None, None).unwrap();
        assert_eq!(plan.seed, 0);
        assert_eq!(plan.scenarios[0].name, "dephasing_channel");
    }

    #[test]
    fn non_hermitian_literal_is_rejected_with_path() {
        let text = "\
            [operators.bad]\n\
            matrix = [[[0.0, 0.0], [1.0, 0.0]], [[0.5, 0.0], [0.0, 0.0]]]\n\
            [states.q]\n\
            kind = \"maximally_mixed\"\n\
            dim = 2\n\
            [[scenarios]]\n\
            id = \"dephasing_channel\"\n\
            state = \"q\"\n";
        let raw = parse_text(text).unwrap();
        let errs = validate(&raw, None, None).unwrap_err();
        assert!(errs
            .iter()
            .any(|e| e.contains("operators.bad") && e.contains("Hermitian")));
    }

    #[test]
    fn random_states_depend_on_seed_and_name() {
        let text = "\
            [states.a]\n\
            kind = \"random\"\n\
            dim = 3\n\
            [states.b]\n\
            kind = \"random\"\n\
            dim = 3\n\
            [[scenarios]]\n\
            id = \"dephasing_channel\"\n\
            state = \"a\"\n";
        let raw = parse_text(text).unwrap();
        let p1 = validate(&raw, Some(5), None).unwrap();
        let p2 = validate(&raw, Some(5), None).unwrap();
        let p3 = validate(&raw, Some(6), None).unwrap();
        let state = |p: &RunPlan| match &p.scenarios[0].spec {
            ScenarioSpec::DephasingChannel { rho, .. } => rho.clone(),
            _ => unreachable!(),
        };
        assert_eq!(state(&p1).matrix(), state(&p2).matrix());
        assert_ne!(state(&p1).matrix(), state(&p3).matrix());
    }

    #[test]
    fn constraint_presets_expand_and_solve() {
        // energy, coarse_population, and local_tomography presets; omitted
        // targets are measured from the run state
        let text = "\
            [operators.h4]\n\
            matrix = [[[0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]],\n\
                      [[0.0, 0.0], [0.5, 0.0], [0.0, 0.0], [0.0, 0.0]],\n\
                      [[0.0, 0.0], [0.0, 0.0], [1.0, 0.0], [0.0, 0.0]],\n\
                      [[0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [1.5, 0.0]]]\n\
            [states.joint]\n\
            kind = \"thermal\"\n\
            hamiltonian = \"h4\"\n\
            beta = 0.9\n\
            [[scenarios]]\n\
            id = \"solve_mes\"\n\
            state = \"joint\"\n\
            dim = 4\n\
            constraints = [\n\
              { preset = \"energy\", hamiltonian = \"h4\" },\n\
              { preset = \"coarse_population\", blocks = [2, 2], block = 0 },\n\
              { preset = \"local_tomography\", subsystem = \"system\", dims = [2, 2] },\n\
            ]\n";
        let raw = parse_text(text).unwrap();
        let plan = validate(&raw, None, None).unwrap();
        let ScenarioSpec::SolveMes { constraints, .. } = &plan.scenarios[0].spec else {
            panic!("wrong scenario kind");
        };
        // energy + one block population are direct; local tomography expands
        // to d²−1 = 3 routed constraints
        assert_eq!(constraints.direct().len(), 2);
        assert_eq!(constraints.routed().len(), 3);

        let report = plan.scenarios[0].spec.run().unwrap();
        assert!(report.converged, "deltas: {:?}", report.oracle_deltas);
        // targets were measured from the state itself
        assert_eq!(report.quantities["consistent_reference"], 1.0);
        assert!(report.quantities["max_residual"] < 1e-9);
    }
}
