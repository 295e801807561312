//! Two-phase minimal-Frobenius-norm feedback synthesis.
//!
//! Write K = eps * E with ||E||_F = 1. The inner phase minimizes
//!
//!   F_eps(E) = 1/2 sum_{i=1..m} lambda_i(Sym(A - eps B E))^2
//!
//! over unit-norm rank-m perturbations E by a projected Euler discretization
//! of the constrained gradient flow  Edot = -G(E) + <G(E), E> E  with free
//! gradient G(E) = -sum_i lambda_i z_i x_i^T, z_i = B^T x_i. The outer phase
//! runs a Newton iteration on f(eps) = F_eps(E(eps)) with f'(eps) =
//! -||G(eps)||_F, approaching from the left the smallest root eps*, at which
//! K = eps* E(eps*) is weakly dissipating.
//!
//! The `Plus` variant sums only positive parts (lambda_i^+)^2 and restricts
//! the gradient to the positive eigenvalues; it tolerates eigenvalues
//! crossing the origin and uncontrollable eigenvalues entering the rightmost
//! set, at the price of a gradient that is only continuous.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{ControlPair, FeedbackResult};
use crate::numerics::{spectral_norm, sym_eig};

/// Which functional drives the flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// All m rightmost eigenvalues enter the sum of squares.
    Plain,
    /// Only positive parts enter; gradient restricted to m_plus terms.
    Plus,
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Variant::Plain => write!(f, "gl"),
            Variant::Plus => write!(f, "gl+"),
        }
    }
}

/// Free gradient of the functional together with the eigen data it was
/// built from.
#[derive(Debug, Clone)]
pub struct GradientInfo {
    /// G = -sum over the included set of lambda_i z_i x_i^T, q x n.
    pub gradient: DMatrix<f64>,
    /// The m rightmost eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// Their eigenvectors, n x m.
    pub eigenvectors: DMatrix<f64>,
    /// z_i = B^T x_i, q x m.
    pub z_vectors: DMatrix<f64>,
    /// Number of positive eigenvalues among the m rightmost.
    pub m_plus: usize,
    /// Gap lambda_m - lambda_{m+1}; +inf when m = n. Simplicity monitor.
    pub gap_after_m: f64,
}

/// Unit-Frobenius-norm rank-m perturbation stored in factored form
/// E = Z * core * X^T with Z (q x r), core (r x r diagonal), X (n x r).
#[derive(Debug, Clone)]
pub struct PerturbationState {
    z_factor: DMatrix<f64>,
    core: DVector<f64>,
    x_factor: DMatrix<f64>,
    pub eps: f64,
    pub f_value: f64,
}

impl PerturbationState {
    /// Truncate a general q x n matrix to rank m, renormalize to unit
    /// Frobenius norm, and store the factors.
    pub fn from_matrix(e: &DMatrix<f64>, m: usize, eps: f64, f_value: f64) -> Result<Self> {
        let decomp = e.clone().svd(true, true);
        let u = decomp.u.expect("svd with u");
        let v_t = decomp.v_t.expect("svd with v");
        let sv = decomp.singular_values;
        let r = m.min(sv.len());
        let mut core = DVector::from_iterator(r, sv.iter().take(r).copied());
        let norm = core.norm();
        if norm <= 0.0 {
            return Err(Error::InvalidInput(
                "perturbation truncated to zero; cannot normalize".into(),
            ));
        }
        core /= norm;
        Ok(Self {
            z_factor: u.columns(0, r).clone_owned(),
            core,
            x_factor: v_t.rows(0, r).transpose(),
            eps,
            f_value,
        })
    }

    /// Dense E, q x n, with ||E||_F = 1.
    pub fn matrix(&self) -> DMatrix<f64> {
        &self.z_factor * DMatrix::from_diagonal(&self.core) * self.x_factor.transpose()
    }

    /// The n x r right factor whose columns approach the near-null invariant
    /// subspace at convergence.
    pub fn x_factor(&self) -> &DMatrix<f64> {
        &self.x_factor
    }

    pub fn rank(&self) -> usize {
        self.core.len()
    }
}

/// Functional value and free gradient at a given perturbation.
///
/// `m` may exceed q; the rank of E stays bounded by q regardless.
pub fn functional(
    pair: &ControlPair,
    e: &DMatrix<f64>,
    eps: f64,
    m: usize,
    variant: Variant,
) -> Result<(f64, GradientInfo)> {
    let (n, q) = (pair.n(), pair.q());
    if e.shape() != (q, n) {
        return Err(Error::InvalidInput(format!(
            "E must be {q}x{n}, got {}x{}",
            e.nrows(),
            e.ncols()
        )));
    }
    if m == 0 || m > n {
        return Err(Error::InvalidInput(format!(
            "m must lie in 1..={n}, got {m}"
        )));
    }
    let closed = pair.a() - pair.b() * e * eps;
    let eig = sym_eig(&closed)?;
    let values: Vec<f64> = eig.values.iter().take(m).copied().collect();
    let x = eig.vectors.columns(0, m).clone_owned();
    let z = pair.b().transpose() * &x;
    let m_plus = values.iter().filter(|&&v| v > 0.0).count();

    let mut f = 0.0;
    let mut gradient = DMatrix::zeros(q, n);
    for (i, &lam) in values.iter().enumerate() {
        let include = match variant {
            Variant::Plain => true,
            Variant::Plus => lam > 0.0,
        };
        if include {
            f += 0.5 * lam * lam;
            gradient -= z.column(i) * x.column(i).transpose() * lam;
        }
    }
    let gap_after_m = if m < n {
        values[m - 1] - eig.values[m]
    } else {
        f64::INFINITY
    };
    Ok((
        f,
        GradientInfo {
            gradient,
            eigenvalues: values,
            eigenvectors: x,
            z_vectors: z,
            m_plus,
            gap_after_m,
        },
    ))
}

/// Termination cause of an inner minimization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerStatus {
    /// Projected gradient below tolerance.
    Stationary,
    /// Functional at or below the zero tolerance.
    ReachedZero,
    /// Iteration budget exhausted.
    MaxIterations,
    /// No admissible step size decreased f.
    Stalled,
}

/// Options shared by the inner flow and the outer Newton iteration.
#[derive(Debug, Clone)]
pub struct GlOptions {
    /// Initial inner step size.
    pub step_size: f64,
    /// Relative stationarity tolerance of the inner flow.
    pub tol_grad: f64,
    /// Inner iteration budget per outer step.
    pub max_inner: usize,
    /// Outer Newton iteration budget.
    pub max_outer: usize,
    /// Terminate when f(eps) falls to or below this value.
    /// Default: 1e-12 * (1 + ||A||_F^2).
    pub tol_f: Option<f64>,
    /// Starting eps; default is the first-order underestimate
    /// lambda_max(Sym(A)) / ||B^T X_+||_2.
    pub eps0: Option<f64>,
}

impl Default for GlOptions {
    fn default() -> Self {
        Self {
            step_size: 0.1,
            tol_grad: 1e-9,
            max_inner: 500,
            max_outer: 80,
            tol_f: None,
            eps0: None,
        }
    }
}

/// One accepted projected-Euler step.
#[derive(Debug)]
pub struct InnerStep {
    pub e: DMatrix<f64>,
    pub f: f64,
    pub grad: GradientInfo,
    /// Step size after acceptance bookkeeping.
    pub step_size: f64,
    pub accepted_after_halvings: usize,
}

/// Inner solve outcome at fixed eps.
#[derive(Debug)]
pub struct InnerOutcome {
    pub e: DMatrix<f64>,
    pub f: f64,
    pub grad: GradientInfo,
    pub status: InnerStatus,
    pub iterations: usize,
    /// Smallest simplicity gap seen during the flow.
    pub min_gap: f64,
}

/// The inner solver at fixed eps: projected Euler steps on the rank-m
/// manifold with monotonicity enforcement.
pub struct InnerSolver<'a> {
    pair: &'a ControlPair,
    eps: f64,
    m: usize,
    variant: Variant,
    opts: &'a GlOptions,
}

impl<'a> InnerSolver<'a> {
    pub fn new(
        pair: &'a ControlPair,
        eps: f64,
        m: usize,
        variant: Variant,
        opts: &'a GlOptions,
    ) -> Self {
        Self {
            pair,
            eps,
            m,
            variant,
            opts,
        }
    }

    /// Euler step E + h (-G + beta E), retracted onto the rank-m manifold
    /// and the unit sphere. The step is halved (up to 30 times) until f does
    /// not increase.
    pub fn step(&self, e: &DMatrix<f64>, f: f64, grad: &GradientInfo, h: f64) -> Result<InnerStep> {
        let beta = grad.gradient.dot(e);
        let direction = -&grad.gradient + e * beta;
        let mut h = h;
        for halvings in 0..30 {
            if h < 1e-14 {
                break;
            }
            let candidate = truncate_normalize(&(e + &direction * h), self.m)?;
            let (f_new, grad_new) =
                functional(self.pair, &candidate, self.eps, self.m, self.variant)?;
            // accept up to the eigensolver noise floor of f: the noise is
            // linear in the eigenvalues while f is quadratic, so it enters
            // at relative size 2 dlambda / lambda. Steps that only shed
            // components orthogonal to the active eigenvectors leave f
            // unchanged at this resolution and must not be rejected.
            if f_new <= f * (1.0 + 1e-8) {
                return Ok(InnerStep {
                    e: candidate,
                    f: f_new,
                    grad: grad_new,
                    step_size: h,
                    accepted_after_halvings: halvings,
                });
            }
            h *= 0.5;
        }
        Err(Error::StagnatedStep(h))
    }

    /// Run the flow from `e0` until stationarity, zero functional, or budget.
    pub fn minimize(&self, e0: &DMatrix<f64>, f_zero_tol: f64) -> Result<InnerOutcome> {
        let mut e = truncate_normalize(e0, self.m)?;
        let (mut f, mut grad) = functional(self.pair, &e, self.eps, self.m, self.variant)?;
        let mut h = self.opts.step_size;
        let mut consecutive_accepts = 0usize;
        let mut min_gap = grad.gap_after_m;
        let mut iterations = 0usize;
        let mut status = InnerStatus::MaxIterations;
        let mut best_f = f;
        let mut stagnant = 0usize;
        while iterations < self.opts.max_inner {
            if f <= f_zero_tol {
                status = InnerStatus::ReachedZero;
                break;
            }
            let beta = grad.gradient.dot(&e);
            let projected = -&grad.gradient + &e * beta;
            if projected.norm() <= self.opts.tol_grad * (1.0 + grad.gradient.norm()) {
                status = InnerStatus::Stationary;
                break;
            }
            match self.step(&e, f, &grad, h) {
                Ok(step) => {
                    e = step.e;
                    f = step.f;
                    grad = step.grad;
                    min_gap = min_gap.min(grad.gap_after_m);
                    if step.accepted_after_halvings == 0 {
                        consecutive_accepts += 1;
                        if consecutive_accepts >= 5 {
                            h = step.step_size * 2.0;
                            consecutive_accepts = 0;
                        } else {
                            h = step.step_size;
                        }
                    } else {
                        consecutive_accepts = 0;
                        h = step.step_size;
                    }
                    // noise-slack acceptance means the loop no longer stalls
                    // by rejection at the f floor; detect flat progress here
                    if f < best_f * (1.0 - 1e-9) {
                        best_f = f;
                        stagnant = 0;
                    } else {
                        stagnant += 1;
                        if stagnant >= 25 {
                            status = InnerStatus::Stationary;
                            break;
                        }
                    }
                }
                Err(Error::StagnatedStep(_)) => {
                    status = InnerStatus::Stalled;
                    break;
                }
                Err(other) => return Err(other),
            }
            iterations += 1;
        }
        if f <= f_zero_tol {
            status = InnerStatus::ReachedZero;
        }
        Ok(InnerOutcome {
            e,
            f,
            grad,
            status,
            iterations,
            min_gap,
        })
    }
}

fn truncate_normalize(e: &DMatrix<f64>, m: usize) -> Result<DMatrix<f64>> {
    let state = PerturbationState::from_matrix(e, m, 0.0, 0.0)?;
    Ok(state.matrix())
}

/// One outer Newton iterate.
#[derive(Debug, Clone, serde::Serialize)]
pub struct OuterIterate {
    pub eps: f64,
    pub f: f64,
    pub f_prime: f64,
    pub inner_iterations: usize,
}

/// Record of the outer iteration.
#[derive(Debug, Clone, serde::Serialize)]
pub struct OuterTrace {
    pub iterates: Vec<OuterIterate>,
    pub converged: bool,
    pub eps_star: f64,
    pub warnings: Vec<String>,
}

/// Default m for the plain variant: positive eigenvalue count of Sym(A).
/// The plus variant adds two slack directions (capped at n) because its
/// functional is insensitive to overestimating m.
pub fn default_m(pair: &ControlPair, variant: Variant) -> Result<usize> {
    let eig = sym_eig(pair.a())?;
    let positive = eig.values.iter().filter(|&&v| v > 0.0).count();
    let m = match variant {
        Variant::Plain => positive.max(1),
        Variant::Plus => (positive + 2).max(1),
    };
    Ok(m.min(pair.n()))
}

/// Initial perturbation: the normalized steepest-descent direction at
/// eps -> 0+, built from the m rightmost eigenpairs of Sym(A). Falls back to
/// the normalized B^T when that direction vanishes (all relevant
/// eigenvalues uncontrollable or zero).
fn initial_perturbation(pair: &ControlPair, m: usize, variant: Variant) -> Result<DMatrix<f64>> {
    let eig = sym_eig(pair.a())?;
    let mm = m.min(pair.n());
    let mut direction = DMatrix::zeros(pair.q(), pair.n());
    for i in 0..mm {
        let lam = eig.values[i];
        let include = match variant {
            Variant::Plain => true,
            Variant::Plus => lam > 0.0,
        };
        if include {
            let x = eig.vectors.column(i);
            let z = pair.b().transpose() * x;
            direction += z * x.transpose() * lam;
        }
    }
    if direction.norm() <= 1e-14 * (1.0 + pair.a().norm()) {
        direction = pair.b().transpose().clone_owned();
    }
    Ok(direction)
}

fn initial_eps(pair: &ControlPair) -> Result<f64> {
    let eig = sym_eig(pair.a())?;
    let lambda_max = eig.values[0];
    let positive = eig.values.iter().filter(|&&v| v > 0.0).count();
    if lambda_max > 0.0 && positive > 0 {
        let x_plus = eig.vectors.columns(0, positive).clone_owned();
        let denom = spectral_norm(&(pair.b().transpose() * x_plus));
        if denom > 1e-12 {
            return Ok(lambda_max / denom);
        }
    }
    Ok(0.1 * pair.a().norm() / spectral_norm(pair.b()).max(f64::MIN_POSITIVE))
}

/// Two-phase solve: returns the weakly dissipating K = eps* E(eps*) of
/// locally minimal Frobenius norm together with the outer trace.
///
/// Non-convergence within the budget is reported through the trace (and the
/// result's `converged` flag), not as an error.
pub fn outer_solve(
    pair: &ControlPair,
    m: usize,
    variant: Variant,
    opts: &GlOptions,
) -> Result<(FeedbackResult, OuterTrace)> {
    let report = crate::model::is_dissipatable(pair, pair.default_tolerance())?;
    if !report.feasible {
        return Err(Error::NotDissipatable(format!(
            "A+A^T is not negative definite on ker(B^T): margin = {:.6e}",
            report.margin
        )));
    }
    let tol = pair.default_tolerance();
    let a_norm = pair.a().norm();
    let tol_f = opts.tol_f.unwrap_or(1e-12 * (1.0 + a_norm * a_norm));

    let mut warnings: Vec<String> = Vec::new();

    // Already weakly dissipative: the minimal feedback is K = 0.
    if sym_eig(pair.a())?.values[0] <= tol {
        let k = DMatrix::zeros(pair.q(), pair.n());
        let mut result = FeedbackResult::evaluate(pair, k, variant.to_string(), tol)?;
        result.converged = true;
        result
            .warnings
            .push("open-loop system already weakly dissipative; returning K = 0".into());
        let trace = OuterTrace {
            iterates: Vec::new(),
            converged: true,
            eps_star: 0.0,
            warnings: result.warnings.clone(),
        };
        return Ok((result, trace));
    }

    let mut eps = match opts.eps0 {
        Some(e0) if e0 > 0.0 => e0,
        _ => initial_eps(pair)?,
    };
    let mut e = truncate_normalize(&initial_perturbation(pair, m, variant)?, m)?;
    let mut iterates: Vec<OuterIterate> = Vec::new();
    let mut converged = false;
    let mut total_inner = 0usize;
    let mut coalescence_warned = false;

    let mut prev: Option<(f64, f64, DMatrix<f64>)> = None; // (eps, f, e)
    for _ in 0..opts.max_outer {
        let solver = InnerSolver::new(pair, eps, m, variant, opts);
        let outcome = solver.minimize(&e, tol_f)?;
        total_inner += outcome.iterations;
        e = outcome.e;
        let f = outcome.f;
        let f_prime = -outcome.grad.gradient.norm();

        if variant == Variant::Plain && !coalescence_warned && outcome.min_gap < 1e-10 * a_norm {
            coalescence_warned = true;
            warnings.push(format!(
                "simplicity assumption violated at eps = {eps:.6e}: gap between \
                 lambda_m and lambda_m+1 fell below {:.3e}; consider the gl+ variant",
                1e-10 * a_norm
            ));
        }

        // Backtrack if the warm-started inner solve landed on a worse branch.
        if let Some((prev_eps, prev_f, ref prev_e)) = prev {
            if f > prev_f && f > tol_f {
                let back = 0.5 * (prev_eps + eps);
                if (back - prev_eps).abs() > 1e-14 * prev_eps {
                    eps = back;
                    e = prev_e.clone();
                    prev = Some((prev_eps, prev_f, prev_e.clone()));
                    continue;
                }
            }
        }

        iterates.push(OuterIterate {
            eps,
            f,
            f_prime,
            inner_iterations: outcome.iterations,
        });

        if f <= tol_f {
            converged = true;
            // Newton lands inside the flat region f(eps) <= tol_f whose left
            // edge is eps*. Bisect back toward that edge: past it, the plus
            // variant silently lets eigenvalues sink below zero, and both
            // variants return a larger-than-minimal ||K||.
            let (mut lo, mut lo_e) = match prev {
                Some((prev_eps, _, prev_e)) => (prev_eps, prev_e),
                None => (0.0, e.clone()),
            };
            let mut hi = eps;
            let mut hi_e = e.clone();
            let mut hi_f = f;
            let mut hi_inner = 0usize;
            for _ in 0..20 {
                if hi - lo <= 1e-12 * hi {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                let mid_solver = InnerSolver::new(pair, mid, m, variant, opts);
                let mid_outcome = mid_solver.minimize(&lo_e, tol_f)?;
                total_inner += mid_outcome.iterations;
                if mid_outcome.f <= tol_f {
                    hi = mid;
                    hi_e = mid_outcome.e;
                    hi_f = mid_outcome.f;
                    hi_inner += mid_outcome.iterations;
                } else {
                    lo = mid;
                    lo_e = mid_outcome.e;
                }
            }
            eps = hi;
            e = hi_e;
            if let Some(last) = iterates.last_mut() {
                *last = OuterIterate {
                    eps,
                    f: hi_f,
                    f_prime,
                    inner_iterations: outcome.iterations + hi_inner,
                };
            }
            break;
        }
        if f_prime >= -1e-300 {
            warnings.push(format!(
                "gradient vanished at eps = {eps:.6e} with f = {f:.6e}; \
                 Newton cannot advance"
            ));
            break;
        }
        let mut step = -f / f_prime;
        if step < 1e-12 * eps {
            // near-stall: switch to the doubled step for the double root
            step = -2.0 * f / f_prime;
        }
        // the root is a double zero, so the Newton step never legitimately
        // exceeds the remaining distance by a large factor
        step = step.min(4.0 * eps);
        prev = Some((eps, f, e.clone()));
        eps += step;
    }

    let eps_star = eps;
    let k = &e * eps_star;
    if !converged {
        let last_f = iterates.last().map(|it| it.f).unwrap_or(f64::NAN);
        warnings.push(format!(
            "outer iteration stopped before f <= {tol_f:.3e} (last f = {last_f:.3e})"
        ));
        // identify uncontrollable blockers among the rightmost eigenpairs
        if let Ok((_, info)) = functional(pair, &e, eps_star, m, variant) {
            let b_scale = spectral_norm(pair.b());
            for (i, &lam) in info.eigenvalues.iter().enumerate() {
                let z_norm = info.z_vectors.column(i).norm();
                if lam.abs() > tol && z_norm <= 1e-8 * b_scale {
                    warnings.push(format!(
                        "uncontrollable eigenvalue lambda = {lam:.6e} \
                         (||B^T x|| = {z_norm:.3e}) blocks the functional"
                    ));
                }
            }
        }
    }

    // Classification cannot be stricter than the solver's own target:
    // converged f <= tol_f bounds |lambda_max| by sqrt(2 tol_f).
    let tol_classify = tol.max((2.0 * tol_f).sqrt());
    let mut result = FeedbackResult::evaluate(pair, k, variant.to_string(), tol_classify)?;
    result.iterations = total_inner;
    result.converged = converged;
    result.warnings = warnings.clone();
    let trace = OuterTrace {
        iterates,
        converged,
        eps_star,
        warnings,
    };
    Ok((result, trace))
}

/// Structural report of a converged minimal-norm feedback: the coalesced
/// eigenvalue count, the rank of K, and the alignment between the right
/// factor of E and the near-null invariant subspace.
///
/// The angle and residual are diagnostics with a resolution floor: near the
/// root the inner problem's curvature scales with the driven eigenvalues,
/// so the weak directions of E are only polished to roughly
/// sqrt(f) / gap rather than machine precision. At desk tolerances expect
/// angles around 1e-5..1e-4, not zero.
#[derive(Debug, Clone, serde::Serialize)]
pub struct LimitStructureReport {
    /// Eigenvalues of Sym(A-BK*) within the zero tolerance.
    pub m_effective: usize,
    pub rank_k: usize,
    pub rank_matches: bool,
    /// Largest principal angle (radians) between span(X-factor) and the
    /// near-null eigenspace.
    pub max_principal_angle: f64,
    /// Residual of E against the limit form B^T X D X^T with fitted
    /// diagonal D.
    pub limit_form_residual: f64,
}

/// Zero threshold for counting coalesced eigenvalues, consistent with a
/// solve that terminated at `f <= tol_f`: every driven eigenvalue then
/// satisfies |lambda| <= sqrt(2 tol_f).
pub fn coalescence_tolerance(pair: &ControlPair, tol_f: f64) -> f64 {
    let floor = 1e-6 * pair.a().norm();
    floor.max(1.05 * (2.0 * tol_f).sqrt())
}

pub fn limit_structure_check(
    pair: &ControlPair,
    result: &FeedbackResult,
    zero_tol: f64,
) -> Result<LimitStructureReport> {
    if !result.converged {
        return Err(Error::PreconditionViolated(
            "limit structure is only defined for converged results".into(),
        ));
    }
    let k = &result.k;
    let eps = k.norm();
    if eps <= 0.0 {
        return Err(Error::PreconditionViolated("K is zero".into()));
    }
    let e = k / eps;
    let closed = pair.closed_loop(k)?;
    let eig = sym_eig(&closed)?;
    let null_idx: Vec<usize> = (0..pair.n())
        .filter(|&i| eig.values[i].abs() <= zero_tol)
        .collect();
    let m_effective = null_idx.len();
    let rank_k = crate::numerics::rank(k, crate::numerics::ZeroThresholds::default())?;

    let mut x_null = DMatrix::zeros(pair.n(), m_effective);
    for (j, &i) in null_idx.iter().enumerate() {
        x_null.set_column(j, &eig.vectors.column(i));
    }

    // principal angles between span(E^T) (left singular directions of E^T,
    // i.e. the X-side factor) and the near-null eigenspace
    let state = PerturbationState::from_matrix(&e, m_effective.max(1), eps, 0.0)?;
    let x_factor = state.x_factor();
    let max_principal_angle = if m_effective == 0 {
        f64::NAN
    } else {
        let r = m_effective.min(x_factor.ncols());
        let cross = x_null.transpose() * x_factor.columns(0, r);
        let sv = cross.svd(false, false).singular_values;
        let cos_min = sv.min().clamp(-1.0, 1.0);
        cos_min.acos()
    };

    // limit form: E = B^T X D X^T with D diagonal fitted per column
    let limit_form_residual = if m_effective == 0 {
        f64::NAN
    } else {
        let z = pair.b().transpose() * &x_null; // q x m_eff
        let mut recon = DMatrix::zeros(pair.q(), pair.n());
        for j in 0..m_effective {
            let zj = z.column(j);
            let denom = zj.norm_squared();
            if denom > 0.0 {
                let d_j = (&e * x_null.column(j)).dot(&zj) / denom;
                recon += zj * x_null.column(j).transpose() * d_j;
            }
        }
        (&e - recon).norm()
    };

    Ok(LimitStructureReport {
        m_effective,
        rank_k,
        rank_matches: rank_k == m_effective,
        max_principal_angle,
        limit_form_residual,
    })
}
