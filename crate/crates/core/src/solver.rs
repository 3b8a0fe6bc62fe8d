//! Maximum-entropy state assignment under linear expectation constraints.
//!
//! Given constraints tr{X_j ρ} = x_j on the input state, and constraints
//! tr{O_i Λ(ρ)} = o_i specified on the output of a known channel, the
//! unbiased assignment is the entropy maximizer
//!
//! ϱ = exp(−Σ_j ξ_j X_j − Σ_i λ_i Λ*(O_i)) / Z,
//!
//! an exponential-family state whose multipliers minimize the convex dual
//! ln Z(μ) + μ·targets. The dual gradient is exactly
//! target_k − tr{G_k ϱ_μ} (trace cyclicity makes the naive derivative formula
//! exact even for non-commuting generators), so the solve runs a quasi-Newton
//! iteration with analytic gradients and a backtracking line search, falling
//! back to plain gradient steps whenever the curvature update is rejected.
//!
//! Preprocessing keeps the dual well behaved:
//! - operators are orthogonalized against the identity (traceless projection,
//!   targets shifted accordingly), removing the flat normalization direction;
//! - linearly dependent operators are dropped by a Hilbert–Schmidt
//!   Gram–Schmidt pass; their targets must agree with the implied value, else
//!   the set is contradictory;
//! - exact boundary populations (a projector constraint with target 0 or 1)
//!   are peeled off up front and handled by restricting the solve to the
//!   admissible subspace, where the assignment is still well defined even
//!   though the corresponding multipliers would diverge.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::channel::KrausChannel;
use crate::entropy;
use crate::error::{Error, Result};
use crate::operator::{eig_hermitian, DensityMatrix, HermitianOperator};
use crate::tol;
use crate::CMatrix;

/// A direct constraint: known expectation of an observable on the input state.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub observable: HermitianOperator,
    pub target: f64,
    pub label: String,
}

/// A routed constraint: known expectation on the output of a channel,
/// pulled back to the input space through the channel's trace-dual.
#[derive(Debug, Clone)]
pub struct RoutedConstraint {
    pub observable: HermitianOperator,
    pub channel: KrausChannel,
    pub target: f64,
    pub label: String,
}

/// Constraints describing an observer's knowledge of a `dim`-dimensional state.
#[derive(Debug, Clone)]
pub struct ConstraintSet {
    dim: usize,
    direct: Vec<Constraint>,
    routed: Vec<RoutedConstraint>,
}

impl ConstraintSet {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            direct: Vec::new(),
            routed: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn direct(&self) -> &[Constraint] {
        &self.direct
    }

    pub fn routed(&self) -> &[RoutedConstraint] {
        &self.routed
    }

    pub fn len(&self) -> usize {
        self.direct.len() + self.routed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.direct.is_empty() && self.routed.is_empty()
    }

    pub fn push_direct(&mut self, observable: HermitianOperator, target: f64) -> Result<()> {
        let label = format!("direct[{}]", self.direct.len());
        self.push_direct_labeled(observable, target, label)
    }

    pub fn push_direct_labeled(
        &mut self,
        observable: HermitianOperator,
        target: f64,
        label: String,
    ) -> Result<()> {
        if observable.dim() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "constraint '{label}' has dim {}, expected {}",
                observable.dim(),
                self.dim
            )));
        }
        if !target.is_finite() {
            return Err(Error::InvalidInput(format!(
                "constraint '{label}' target is not finite"
            )));
        }
        self.direct.push(Constraint {
            observable,
            target,
            label,
        });
        Ok(())
    }

    pub fn push_routed(
        &mut self,
        observable: HermitianOperator,
        channel: KrausChannel,
        target: f64,
    ) -> Result<()> {
        let label = format!("routed[{}]", self.routed.len());
        self.push_routed_labeled(observable, channel, target, label)
    }

    pub fn push_routed_labeled(
        &mut self,
        observable: HermitianOperator,
        channel: KrausChannel,
        target: f64,
        label: String,
    ) -> Result<()> {
        if channel.in_dim() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "constraint '{label}': channel input dim {} vs constraint space {}",
                channel.in_dim(),
                self.dim
            )));
        }
        if observable.dim() != channel.out_dim() {
            return Err(Error::DimensionMismatch(format!(
                "constraint '{label}': observable dim {} vs channel output dim {}",
                observable.dim(),
                channel.out_dim()
            )));
        }
        if !target.is_finite() {
            return Err(Error::InvalidInput(format!(
                "constraint '{label}' target is not finite"
            )));
        }
        self.routed.push(RoutedConstraint {
            observable,
            channel,
            target,
            label,
        });
        Ok(())
    }
}

/// A constraint after pull-back: an input-space observable with its target.
#[derive(Debug, Clone)]
pub struct PulledConstraint {
    pub observable: HermitianOperator,
    pub target: f64,
    pub label: String,
}

/// Replace each routed constraint (O, Λ, o) by (Λ*(O), o); direct constraints
/// pass through unchanged and come first.
pub fn pull_back(cs: &ConstraintSet) -> Result<Vec<PulledConstraint>> {
    let mut out = Vec::with_capacity(cs.len());
    for c in cs.direct() {
        out.push(PulledConstraint {
            observable: c.observable.clone(),
            target: c.target,
            label: c.label.clone(),
        });
    }
    for r in cs.routed() {
        out.push(PulledConstraint {
            observable: r.channel.adjoint_apply(&r.observable)?,
            target: r.target,
            label: r.label.clone(),
        });
    }
    Ok(out)
}

/// Tunable solve parameters; the defaults are the crate-wide tolerances.
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub constraint_tol: f64,
    pub multiplier_cap: f64,
    pub max_iterations: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            constraint_tol: tol::CONSTRAINT,
            multiplier_cap: tol::MULTIPLIER_CAP,
            max_iterations: tol::MAX_ITERATIONS,
        }
    }
}

/// The solved maximum-entropy state with its dual data.
#[derive(Debug, Clone)]
pub struct MaxEntSolution {
    state: DensityMatrix,
    multipliers: Vec<f64>,
    log_partition: f64,
    residuals: Vec<f64>,
    iterations: usize,
    converged: bool,
    constraint_tol: f64,
    pulled: Vec<PulledConstraint>,
    support: Option<CMatrix>,
}

impl MaxEntSolution {
    pub fn state(&self) -> &DensityMatrix {
        &self.state
    }

    /// Multipliers in the order of the pulled-back constraint list (direct
    /// constraints first). Dropped-as-redundant and boundary-restricted
    /// constraints carry multiplier zero.
    pub fn multipliers(&self) -> &[f64] {
        &self.multipliers
    }

    pub fn log_partition(&self) -> f64 {
        self.log_partition
    }

    /// Signed residuals target_k − tr{G_k ϱ} per pulled constraint.
    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()))
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn constraint_tol(&self) -> f64 {
        self.constraint_tol
    }

    pub fn pulled_constraints(&self) -> &[PulledConstraint] {
        &self.pulled
    }

    /// The subspace isometry used when boundary populations restricted the
    /// solve; `None` for interior solves.
    pub fn support(&self) -> Option<&CMatrix> {
        self.support.as_ref()
    }

    /// Rebuild the state from the stored multipliers alone:
    /// exp(−Σ_k μ_k G_k)/Z, restricted to the boundary subspace when one was
    /// detected. Agreement with [`Self::state`] is the exponential-family
    /// reconstruction invariant.
    pub fn reconstruct_state(&self) -> Result<DensityMatrix> {
        let dim = self.state.dim();
        let mut exponent = CMatrix::zeros(dim, dim);
        for (mu, pc) in self.multipliers.iter().zip(&self.pulled) {
            exponent -= pc.observable.matrix() * Complex64::new(*mu, 0.0);
        }
        match &self.support {
            None => {
                let (rho, _) = exp_family_state(&exponent)?;
                Ok(rho)
            }
            Some(w) => {
                let reduced = w.adjoint() * exponent * w;
                let (rho_r, _) = exp_family_state(&reduced)?;
                let lifted = w * rho_r.matrix() * w.adjoint();
                DensityMatrix::new(lifted)
            }
        }
    }
}

/// Normalized exp(A)/tr{exp(A)} for Hermitian A, with the log-partition.
/// The spectrum is shifted by its maximum before exponentiating so large
/// multipliers cannot overflow.
fn exp_family_state(exponent: &CMatrix) -> Result<(DensityMatrix, f64)> {
    let spec = eig_hermitian(exponent)?;
    let m = spec
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = spec.eigenvalues.iter().map(|&w| (w - m).exp()).collect();
    let z: f64 = weights.iter().sum();
    let probs: Vec<f64> = weights.iter().map(|&w| w / z).collect();
    let mat = spec.rebuild(&probs);
    Ok((DensityMatrix::new(mat)?, m + z.ln()))
}

/// Dual objective value and gradient at the given multipliers:
/// value = ln tr{exp(−Σ μ_k G_k)} + Σ μ_k t_k, gradient_k = t_k − tr{G_k ϱ_μ}.
pub fn dual_objective(
    multipliers: &[f64],
    constraints: &[(HermitianOperator, f64)],
) -> Result<(f64, Vec<f64>)> {
    if multipliers.len() != constraints.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} multipliers for {} constraints",
            multipliers.len(),
            constraints.len()
        )));
    }
    if multipliers.iter().any(|m| !m.is_finite()) {
        return Err(Error::InvalidInput("multipliers must be finite".into()));
    }
    let dim = constraints
        .first()
        .map(|(op, _)| op.dim())
        .ok_or_else(|| Error::InvalidInput("empty constraint list".into()))?;
    let mut exponent = CMatrix::zeros(dim, dim);
    for (mu, (op, _)) in multipliers.iter().zip(constraints) {
        exponent -= op.matrix() * Complex64::new(*mu, 0.0);
    }
    let (rho, ln_z) = exp_family_state(&exponent)?;
    let mut value = ln_z;
    let mut gradient = Vec::with_capacity(constraints.len());
    for (mu, (op, target)) in multipliers.iter().zip(constraints) {
        value += mu * target;
        gradient.push(target - op.expectation(&rho)?);
    }
    Ok((value, gradient))
}

/// Outcome of the inner quasi-Newton minimization.
struct DualSolve {
    multipliers: Vec<f64>,
    state: DensityMatrix,
    iterations: usize,
    converged: bool,
}

/// Minimize the dual over the deduplicated traceless generators in `ops`.
/// Convergence is judged on `check`: the full active constraint list
/// (including operators dropped as linearly dependent, whose residuals are
/// signed combinations of the kept ones and can exceed any single component).
/// `labels` index into the caller's constraint list for error messages.
fn minimize_dual(
    ops: &[HermitianOperator],
    targets: &[f64],
    labels: &[&str],
    check: &[(HermitianOperator, f64)],
    dim: usize,
    opts: &SolveOptions,
) -> Result<DualSolve> {
    let n = ops.len();
    if n == 0 {
        return Ok(DualSolve {
            multipliers: Vec::new(),
            state: DensityMatrix::maximally_mixed(dim),
            iterations: 0,
            converged: true,
        });
    }

    let eval = |mu: &DVector<f64>| -> Result<(f64, DVector<f64>, DensityMatrix)> {
        let mut exponent = CMatrix::zeros(dim, dim);
        for (k, op) in ops.iter().enumerate() {
            exponent -= op.matrix() * Complex64::new(mu[k], 0.0);
        }
        let (rho, ln_z) = exp_family_state(&exponent)?;
        let mut value = ln_z;
        let mut grad = DVector::zeros(n);
        for (k, op) in ops.iter().enumerate() {
            value += mu[k] * targets[k];
            grad[k] = targets[k] - op.expectation(&rho)?;
        }
        Ok((value, grad, rho))
    };

    let check_residual = |rho: &DensityMatrix| -> Result<f64> {
        let mut worst = 0.0f64;
        for (op, target) in check {
            worst = worst.max((target - op.expectation(rho)?).abs());
        }
        Ok(worst)
    };

    let mut mu = DVector::<f64>::zeros(n);
    let mut h_inv = DMatrix::<f64>::identity(n, n);
    let (mut f, mut g, mut rho) = eval(&mu)?;
    let mut converged = false;
    let mut iterations = 0;

    for iter in 0..opts.max_iterations {
        iterations = iter;
        let res = g
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(check_residual(&rho)?);
        if res <= opts.constraint_tol {
            converged = true;
            break;
        }
        let worst = || {
            (0..n)
                .max_by(|&a, &b| g[a].abs().partial_cmp(&g[b].abs()).expect("finite"))
                .expect("nonempty")
        };
        // the dual minimum of any feasible set is the assignment's entropy,
        // which is nonnegative; a clearly negative value proves the targets
        // lie outside the set of quantum expectation values
        if f < -1e-6 {
            let k = worst();
            return Err(Error::Infeasible(format!(
                "dual objective is unbounded below; no state satisfies the targets \
                 (worst constraint '{}', residual {:.3e})",
                labels[k], g[k]
            )));
        }
        let cap = mu.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if cap > opts.multiplier_cap {
            let k = worst();
            return Err(Error::Infeasible(format!(
                "multiplier norm exceeded {:.1e}; constraint '{}' (residual {:.3e}) \
                 appears to sit on or outside the feasible boundary",
                opts.multiplier_cap, labels[k], g[k]
            )));
        }

        let mut direction = -(&h_inv * &g);
        let mut slope = direction.dot(&g);
        if slope >= 0.0 || slope.is_nan() {
            // curvature information went bad; restart from a gradient step
            h_inv = DMatrix::identity(n, n);
            direction = -g.clone();
            slope = -g.dot(&g);
        }

        // backtracking line search. Near the minimum the objective decrease
        // per step drops below f64 rounding while the gradient still shrinks
        // superlinearly, so a step is also accepted on a strict decrease of
        // the gradient norm, the quantity convergence is measured by.
        let allowance = 4.0 * f64::EPSILON * (1.0 + f.abs());
        let g_norm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut step = 1.0f64;
        let mut accepted = None;
        while step >= 1e-18 {
            let trial = &mu + &direction * step;
            let (f_t, g_t, rho_t) = eval(&trial)?;
            let sufficient_decrease = f_t <= f + 1e-4 * step * slope + allowance;
            let gradient_progress =
                g_t.iter().fold(0.0f64, |m, v| m.max(v.abs())) < g_norm && f_t <= f + allowance;
            if sufficient_decrease || gradient_progress {
                accepted = Some((trial, f_t, g_t, rho_t));
                break;
            }
            step *= 0.5;
        }
        let Some((mu_new, f_new, g_new, rho_new)) = accepted else {
            // progress below rounding; keep the current iterate and report
            break;
        };

        let s = &mu_new - &mu;
        let y = &g_new - &g;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            // BFGS update of the inverse Hessian approximation
            let rho_sy = 1.0 / sy;
            let hy = &h_inv * &y;
            let yhy = y.dot(&hy);
            let ss = &s * s.transpose();
            let hys = &hy * s.transpose();
            h_inv =
                h_inv - (&hys + hys.transpose()) * rho_sy + ss * (rho_sy * (1.0 + yhy * rho_sy));
        } else {
            // reject the curvature pair; next step is plain gradient descent
            h_inv = DMatrix::identity(n, n);
        }

        mu = mu_new;
        f = f_new;
        g = g_new;
        rho = rho_new;
    }

    if !converged {
        let res = g
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(check_residual(&rho)?);
        converged = res <= opts.constraint_tol;
    }

    Ok(DualSolve {
        multipliers: mu.iter().cloned().collect(),
        state: rho,
        iterations,
        converged,
    })
}

/// Hilbert–Schmidt vectorization of a Hermitian operator (an isometry, so
/// Euclidean inner products of these vectors equal tr{AB}).
fn hs_vector(op: &HermitianOperator) -> DVector<f64> {
    let d = op.dim();
    let m = op.matrix();
    let mut v = DVector::zeros(d * d);
    let mut idx = 0;
    let sqrt2 = std::f64::consts::SQRT_2;
    for i in 0..d {
        v[idx] = m[(i, i)].re;
        idx += 1;
    }
    for i in 0..d {
        for j in (i + 1)..d {
            v[idx] = sqrt2 * m[(i, j)].re;
            idx += 1;
            v[idx] = sqrt2 * m[(i, j)].im;
            idx += 1;
        }
    }
    v
}

struct DedupResult {
    kept: Vec<usize>,
}

/// Gram–Schmidt rank reduction over Hilbert–Schmidt vectors. Dependent
/// operators are dropped after verifying their target agrees with the value
/// implied by the kept ones.
fn deduplicate(ops: &[HermitianOperator], targets: &[f64], labels: &[&str]) -> Result<DedupResult> {
    let mut kept: Vec<usize> = Vec::new();
    let mut q: Vec<DVector<f64>> = Vec::new();
    // lower-triangular coords of kept vectors in the q-basis
    let mut r_rows: Vec<Vec<f64>> = Vec::new();

    for (k, op) in ops.iter().enumerate() {
        let v = hs_vector(op);
        let scale = v.norm().max(1.0);
        let mut coords = vec![0.0; q.len()];
        let mut resid = v.clone();
        for _ in 0..2 {
            for (l, ql) in q.iter().enumerate() {
                let c = ql.dot(&resid);
                coords[l] += c;
                resid -= ql * c;
            }
        }
        let rnorm = resid.norm();
        if rnorm > tol::DEDUP_GRAM * scale {
            q.push(&resid / rnorm);
            coords.push(rnorm);
            r_rows.push(coords);
            kept.push(k);
        } else {
            // dependent: back-substitute for the expansion in kept operators
            let m = kept.len();
            let mut alpha = vec![0.0; m];
            for j in (0..m).rev() {
                let mut c = coords[j];
                for (l, a) in alpha.iter().enumerate().skip(j + 1) {
                    c -= r_rows[l][j] * a;
                }
                alpha[j] = c / r_rows[j][j];
            }
            let implied: f64 = alpha
                .iter()
                .zip(&kept)
                .map(|(a, &ki)| a * targets[ki])
                .sum();
            if (targets[k] - implied).abs() > tol::DEDUP_TARGET {
                return Err(Error::Infeasible(format!(
                    "constraint '{}' duplicates earlier constraints but its target {:.6e} \
                     contradicts the implied value {:.6e}",
                    labels[k], targets[k], implied
                )));
            }
        }
    }
    Ok(DedupResult { kept })
}

/// Peel off exact boundary populations and build the admissible subspace.
/// Returns the isometry onto the subspace and the indices of the remaining
/// (non-boundary) constraints.
fn boundary_restriction(
    pulled: &[PulledConstraint],
    dim: usize,
) -> Result<Option<(CMatrix, Vec<usize>)>> {
    let mut forbidden = CMatrix::zeros(dim, dim);
    let mut remaining = Vec::new();
    let mut any_boundary = false;
    for (k, pc) in pulled.iter().enumerate() {
        let is_proj = pc.observable.is_projector();
        if is_proj && pc.target.abs() <= tol::BOUNDARY_DETECT {
            // no support on this block
            forbidden += pc.observable.matrix();
            any_boundary = true;
        } else if is_proj && (pc.target - 1.0).abs() <= tol::BOUNDARY_DETECT {
            // full support inside this block
            forbidden += CMatrix::identity(dim, dim) - pc.observable.matrix();
            any_boundary = true;
        } else {
            remaining.push(k);
        }
    }
    if !any_boundary {
        return Ok(None);
    }
    // admissible subspace = kernel of the accumulated forbidden projectors
    let spec = eig_hermitian(&forbidden)?;
    let cols: Vec<usize> = spec
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &w)| w.abs() < 1e-9)
        .map(|(i, _)| i)
        .collect();
    if cols.is_empty() {
        return Err(Error::Infeasible(
            "boundary population targets leave no admissible subspace".into(),
        ));
    }
    let mut w = CMatrix::zeros(dim, cols.len());
    for (dst, &src) in cols.iter().enumerate() {
        for i in 0..dim {
            w[(i, dst)] = spec.eigenvectors[(i, src)];
        }
    }
    Ok(Some((w, remaining)))
}

/// Solve for the maximum-entropy state consistent with the constraint set.
pub fn solve_mes(cs: &ConstraintSet, opts: &SolveOptions) -> Result<MaxEntSolution> {
    let pulled = pull_back(cs)?;
    let dim = cs.dim();

    let restriction = boundary_restriction(&pulled, dim)?;
    let (solve_dim, support, active): (usize, Option<CMatrix>, Vec<usize>) = match restriction {
        None => (dim, None, (0..pulled.len()).collect()),
        Some((w, remaining)) => (w.ncols(), Some(w), remaining),
    };

    // project the active constraints into the solve space and remove the
    // identity component
    let mut ops = Vec::with_capacity(active.len());
    let mut targets = Vec::with_capacity(active.len());
    let mut labels: Vec<&str> = Vec::with_capacity(active.len());
    for &k in &active {
        let pc = &pulled[k];
        let projected = match &support {
            None => pc.observable.clone(),
            Some(w) => HermitianOperator::new(w.adjoint() * pc.observable.matrix() * w)?,
        };
        let shift = projected.trace() / solve_dim as f64;
        ops.push(projected.traceless_part());
        targets.push(pc.target - shift);
        labels.push(&pc.label);
    }

    let dedup = deduplicate(&ops, &targets, &labels)?;
    let kept_ops: Vec<HermitianOperator> = dedup.kept.iter().map(|&i| ops[i].clone()).collect();
    let kept_targets: Vec<f64> = dedup.kept.iter().map(|&i| targets[i]).collect();
    let kept_labels: Vec<&str> = dedup.kept.iter().map(|&i| labels[i]).collect();
    let check: Vec<(HermitianOperator, f64)> =
        ops.iter().cloned().zip(targets.iter().cloned()).collect();

    let solved = minimize_dual(
        &kept_ops,
        &kept_targets,
        &kept_labels,
        &check,
        solve_dim,
        opts,
    )?;

    // lift back to the full space
    let state = match &support {
        None => solved.state.clone(),
        Some(w) => DensityMatrix::new(w * solved.state.matrix() * w.adjoint())?,
    };

    // multipliers in pulled order; dropped and boundary constraints get zero
    let mut multipliers = vec![0.0; pulled.len()];
    for (pos, &i) in dedup.kept.iter().enumerate() {
        multipliers[active[i]] = solved.multipliers[pos];
    }

    // log partition of the reconstruction formula at the reported multipliers
    let mut exponent = CMatrix::zeros(dim, dim);
    for (mu, pc) in multipliers.iter().zip(&pulled) {
        exponent -= pc.observable.matrix() * Complex64::new(*mu, 0.0);
    }
    let log_partition = match &support {
        None => exp_family_state(&exponent)?.1,
        Some(w) => exp_family_state(&(w.adjoint() * exponent * w))?.1,
    };

    let mut residuals = Vec::with_capacity(pulled.len());
    for pc in &pulled {
        residuals.push(pc.target - pc.observable.expectation(&state)?);
    }
    let max_res = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let converged = solved.converged && max_res <= opts.constraint_tol;

    Ok(MaxEntSolution {
        state,
        multipliers,
        log_partition,
        residuals,
        iterations: solved.iterations,
        converged,
        constraint_tol: opts.constraint_tol,
        pulled,
        support,
    })
}

/// Inverse-temperature solve: find β with tr{H e^{−βH}}/tr{e^{−βH}} = target.
///
/// The mean energy is strictly decreasing in β between the spectral extremes,
/// so a bracketed Newton iteration converges for any target strictly inside
/// the open spectral range. β may come out negative (population inversion).
pub fn solve_beta(h: &HermitianOperator, target_energy: f64) -> Result<f64> {
    let spec = h.eig()?;
    let w = &spec.eigenvalues;
    let (w_min, w_max) = (w[0], w[w.len() - 1]);
    if !(target_energy > w_min && target_energy < w_max) {
        return Err(Error::Infeasible(format!(
            "target energy {target_energy} is not strictly inside the spectral range \
             [{w_min}, {w_max}]"
        )));
    }

    let mean_energy = |beta: f64| -> (f64, f64) {
        let logits: Vec<f64> = w.iter().map(|&x| -beta * x).collect();
        let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = logits.iter().map(|&a| (a - m).exp()).collect();
        let z: f64 = weights.iter().sum();
        let e: f64 = w.iter().zip(&weights).map(|(&x, &q)| x * q / z).sum();
        let e2: f64 = w.iter().zip(&weights).map(|(&x, &q)| x * x * q / z).sum();
        (e, (e2 - e * e).max(0.0))
    };

    // bracket [lo, hi] with f(lo) > 0 > f(hi), f(β) = E(β) − target
    let mut lo = 0.0f64;
    let mut hi = 0.0f64;
    let f0 = mean_energy(0.0).0 - target_energy;
    let scale = 1.0 / (w_max - w_min).max(f64::MIN_POSITIVE);
    if f0 > 0.0 {
        let mut step = scale;
        hi = step;
        while mean_energy(hi).0 - target_energy > 0.0 {
            step *= 2.0;
            hi = step;
            if !hi.is_finite() {
                return Err(Error::NonConvergence("β bracket expansion diverged".into()));
            }
        }
    } else if f0 < 0.0 {
        let mut step = scale;
        lo = -step;
        while mean_energy(lo).0 - target_energy < 0.0 {
            step *= 2.0;
            lo = -step;
            if !lo.is_finite() {
                return Err(Error::NonConvergence("β bracket expansion diverged".into()));
            }
        }
    } else {
        return Ok(0.0);
    }

    let mut beta = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (e, var) = mean_energy(beta);
        let f = e - target_energy;
        if f.abs() <= 1e-13 * (1.0 + target_energy.abs()) {
            return Ok(beta);
        }
        if f > 0.0 {
            lo = beta;
        } else {
            hi = beta;
        }
        let newton = if var > 0.0 { beta + f / var } else { f64::NAN };
        beta = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    let (e, _) = mean_energy(beta);
    if (e - target_energy).abs() <= 1e-10 {
        Ok(beta)
    } else {
        Err(Error::NonConvergence(format!(
            "β solve stalled at residual {:.3e}",
            e - target_energy
        )))
    }
}

/// Entropy production Σ = S(ρ ‖ ϱ_max): the price of describing ρ by the
/// unbiased assignment built from its own measured expectation values.
///
/// ρ must actually reproduce the targets the assignment was solved under;
/// the production is defined relative to the observer's measurements of ρ.
pub fn entropy_production(rho: &DensityMatrix, mes: &MaxEntSolution) -> Result<f64> {
    for pc in &mes.pulled {
        let measured = pc.observable.expectation(rho)?;
        if (measured - pc.target).abs() >= mes.constraint_tol {
            return Err(Error::Inconsistent(format!(
                "state does not match constraint '{}': measured {:.12e}, target {:.12e}",
                pc.label, measured, pc.target
            )));
        }
    }
    entropy::relative(rho, &mes.state)
}
