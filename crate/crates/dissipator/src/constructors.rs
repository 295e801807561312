//! Direct dissipating-feedback constructors: the invariant-subspace formula,
//! the classical parametrization and its counterexample, the eigenvector
//! block parametrization, the definite-pencil family and its norm
//! minimization, plus strict-to-weak shrinking and the strictness shift.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{
    assemble_saddle, is_dissipatable, verify_dissipating, Classification, ControlPair,
    FeedbackResult,
};
use crate::numerics::{gen_sym_eig, spectral_norm, sym_eig, sym_part};
use crate::simplex::{nelder_mead, SimplexOptions, SimplexResult};

fn require_feasible(pair: &ControlPair) -> Result<()> {
    let report = is_dissipatable(pair, pair.default_tolerance())?;
    if report.feasible {
        Ok(())
    } else {
        Err(Error::NotDissipatable(format!(
            "A+A^T is not negative definite on ker(B^T): margin = {:.6e}",
            report.margin
        )))
    }
}

/// K = Y X^{-1} from the orthonormal basis [X; Y] of the invariant subspace
/// of the saddle matrix associated with its n positive eigenvalues. The
/// result is strictly dissipating with full row rank q.
pub fn spectral_feedback(pair: &ControlPair) -> Result<FeedbackResult> {
    require_feasible(pair)?;
    let eig = sym_eig(&assemble_saddle(pair))?;
    k_from_subspace(pair, &eig.values, &eig.vectors, "spectral")
}

/// Shared tail of the invariant-subspace constructors: select the n most
/// positive eigenpairs, split [X; Y], solve K = Y X^{-1}.
fn k_from_subspace(
    pair: &ControlPair,
    values: &DVector<f64>,
    vectors: &DMatrix<f64>,
    method: &str,
) -> Result<FeedbackResult> {
    let (n, q) = (pair.n(), pair.q());
    let positive = values.iter().filter(|&&v| v > 0.0).count();
    if positive < n {
        return Err(Error::NotDissipatable(format!(
            "saddle pencil has {positive} positive eigenvalues, need {n}"
        )));
    }
    let basis = vectors.columns(0, n);
    let x = basis.rows(0, n).clone_owned();
    let y = basis.rows(n, q).clone_owned();
    let x_lu = x.transpose().lu();
    let k_t = x_lu.solve(&y.transpose()).ok_or_else(|| {
        let sv = x.clone().svd(false, false).singular_values;
        Error::SingularSystem {
            context: "X block of the invariant subspace basis is singular".into(),
            condition: sv.max() / sv.min().max(f64::MIN_POSITIVE),
        }
    })?;
    FeedbackResult::evaluate(pair, k_t.transpose(), method, pair.default_tolerance())
}

/// Parameters of the classical parametrization: an SPD matrix R and a gain
/// matrix L, classically restricted to ||L||_2 < 1.
#[derive(Debug, Clone)]
pub struct SkeltonParams {
    pub r: DMatrix<f64>,
    pub l: DMatrix<f64>,
    allow_large_l: bool,
}

impl SkeltonParams {
    pub fn new(r: DMatrix<f64>, l: DMatrix<f64>) -> Self {
        Self {
            r,
            l,
            allow_large_l: false,
        }
    }

    /// Permit ||L||_2 >= 1. The parametrization then no longer guarantees a
    /// dissipating K, but such K do exist outside the classical family.
    pub fn with_l_norm_override(mut self) -> Self {
        self.allow_large_l = true;
        self
    }
}

/// Symmetric square root and inverse square root of an SPD matrix.
fn spd_sqrt_inv_sqrt(m: &DMatrix<f64>, what: &str) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let eig = sym_eig(m)?;
    if eig.values.min() <= 0.0 {
        return Err(Error::NotPositiveDefinite(format!(
            "{what}: smallest eigenvalue {:.6e}",
            eig.values.min()
        )));
    }
    let sqrt_vals = DVector::from_iterator(eig.values.len(), eig.values.iter().map(|v| v.sqrt()));
    let inv_sqrt_vals =
        DVector::from_iterator(eig.values.len(), eig.values.iter().map(|v| 1.0 / v.sqrt()));
    let sqrt = &eig.vectors * DMatrix::from_diagonal(&sqrt_vals) * eig.vectors.transpose();
    let inv_sqrt = &eig.vectors * DMatrix::from_diagonal(&inv_sqrt_vals) * eig.vectors.transpose();
    Ok((sqrt, inv_sqrt))
}

/// Classical parametrization specialized to C = I, with the sign flipped so
/// the returned K closes the loop as A - BK:
/// K = R^{-1} B^T - R^{-1/2} L Phi^{-1/2} with Phi = (B R^{-1} B^T - (A+A^T))^{-1}.
///
/// For ||L||_2 < 1 and Phi positive definite the result is strictly
/// dissipating.
pub fn skelton_feedback(pair: &ControlPair, params: &SkeltonParams) -> Result<FeedbackResult> {
    let (n, q) = (pair.n(), pair.q());
    if params.r.shape() != (q, q) {
        return Err(Error::InvalidInput(format!(
            "R must be {q}x{q}, got {}x{}",
            params.r.nrows(),
            params.r.ncols()
        )));
    }
    if params.l.shape() != (q, n) {
        return Err(Error::InvalidInput(format!(
            "L must be {q}x{n}, got {}x{}",
            params.l.nrows(),
            params.l.ncols()
        )));
    }
    let l_norm = spectral_norm(&params.l);
    if l_norm >= 1.0 && !params.allow_large_l {
        return Err(Error::PreconditionViolated(format!(
            "||L||_2 = {l_norm:.6} >= 1; use with_l_norm_override to allow"
        )));
    }
    let (_, r_inv_sqrt) = spd_sqrt_inv_sqrt(&params.r, "R")?;
    let r_inv = &r_inv_sqrt * &r_inv_sqrt;
    let q_mat = pair.a() + pair.a().transpose();
    let phi_inv = pair.b() * &r_inv * pair.b().transpose() - &q_mat;
    // Phi = phi_inv^{-1} is positive definite iff phi_inv is, and
    // Phi^{-1/2} = sqrt(phi_inv); no explicit inversion needed.
    let (phi_neg_half, _) = spd_sqrt_inv_sqrt(&sym_part(&phi_inv), "Phi^{-1}").map_err(|_| {
        Error::NotPositiveDefinite(
            "Phi = (B R^{-1} B^T - (A+A^T))^{-1} is not positive definite; \
                 try a larger R^{-1}"
                .into(),
        )
    })?;
    let k = &r_inv * pair.b().transpose() - &r_inv_sqrt * &params.l * &phi_neg_half;
    FeedbackResult::evaluate(pair, k, "skelton", pair.default_tolerance())
}

/// Report of the worked counterexample showing that ||L||_2 < 1 is not
/// necessary: with Q = diag(alpha, -alpha), B = e1, R^{-1} = alpha_hat and
/// L = B_tilde / 2, the definiteness matrix equals -I exactly while ||L||_2
/// can be made arbitrarily large.
#[derive(Debug, Clone)]
pub struct CounterexampleReport {
    pub l_norm: f64,
    /// -I + (B_tilde L + L^T B_tilde^T - B_tilde B_tilde^T), must equal -I.
    pub definiteness_matrix: DMatrix<f64>,
    /// ||B_tilde||_2 = sqrt(alpha_hat / (alpha_hat - alpha)).
    pub b_tilde_norm: f64,
    /// Distance of the definiteness matrix from -I in Frobenius norm.
    pub deviation_from_neg_identity: f64,
}

pub fn skelton_counterexample(alpha: f64, alpha_hat: f64) -> Result<CounterexampleReport> {
    if !(alpha > 0.0 && alpha_hat > alpha) {
        return Err(Error::InvalidInput(format!(
            "need alpha_hat > alpha > 0, got alpha = {alpha}, alpha_hat = {alpha_hat}"
        )));
    }
    let b_tilde_norm = (alpha_hat / (alpha_hat - alpha)).sqrt();
    let b_tilde = DMatrix::from_column_slice(2, 1, &[b_tilde_norm, 0.0]);
    let l = b_tilde.transpose() * 0.5; // 1x2
    let l_norm = spectral_norm(&l);
    let definiteness_matrix = -DMatrix::identity(2, 2)
        + (&b_tilde * &l + l.transpose() * b_tilde.transpose() - &b_tilde * b_tilde.transpose());
    let deviation_from_neg_identity = (&definiteness_matrix + DMatrix::identity(2, 2)).norm();
    Ok(CounterexampleReport {
        l_norm,
        definiteness_matrix,
        b_tilde_norm,
        deviation_from_neg_identity,
    })
}

/// Blocks of the orthogonal eigenvector matrix of the saddle matrix,
/// partitioned by the positive/negative eigenvalue split:
/// Q = [Q11, Q12; Q21, Q22] with the first n columns spanning the positive
/// invariant subspace.
#[derive(Debug, Clone)]
pub struct BlockParametrization {
    pub q11: DMatrix<f64>,
    pub q12: DMatrix<f64>,
    pub q21: DMatrix<f64>,
    pub q22: DMatrix<f64>,
    /// The n positive saddle eigenvalues, descending.
    pub lambda_plus: DVector<f64>,
    /// The q negative saddle eigenvalues, descending.
    pub lambda_minus: DVector<f64>,
}

impl BlockParametrization {
    pub fn new(pair: &ControlPair) -> Result<Self> {
        let (n, q) = (pair.n(), pair.q());
        let eig = sym_eig(&assemble_saddle(pair))?;
        if eig.values[n - 1] <= 0.0 {
            return Err(Error::NotDissipatable(
                "saddle matrix lacks n positive eigenvalues".into(),
            ));
        }
        Ok(Self {
            q11: eig.vectors.view((0, 0), (n, n)).clone_owned(),
            q12: eig.vectors.view((0, n), (n, q)).clone_owned(),
            q21: eig.vectors.view((n, 0), (q, n)).clone_owned(),
            q22: eig.vectors.view((n, n), (q, q)).clone_owned(),
            lambda_plus: eig.values.rows(0, n).clone_owned(),
            lambda_minus: eig.values.rows(n, q).clone_owned(),
        })
    }

    /// Smallest eigenvalue of the positive block.
    pub fn lambda_min_pos(&self) -> f64 {
        self.lambda_plus[self.lambda_plus.len() - 1]
    }

    /// Largest magnitude in the negative block; the values are sorted
    /// descending, so that is the last entry.
    pub fn lambda_max_neg_abs(&self) -> f64 {
        self.lambda_minus[self.lambda_minus.len() - 1].abs()
    }

    /// alpha = ||H2 (I - Q12 H2)^{-1} Q11||_2^2 for the gap condition.
    pub fn alpha(&self, h2: &DMatrix<f64>) -> Result<f64> {
        let n = self.q11.nrows();
        let i_minus = DMatrix::identity(n, n) - &self.q12 * h2;
        let inner = i_minus.clone().lu().solve(&self.q11).ok_or_else(|| {
            let sv = i_minus.svd(false, false).singular_values;
            Error::SingularSystem {
                context: "I - Q12 H2 is singular".into(),
                condition: sv.max() / sv.min().max(f64::MIN_POSITIVE),
            }
        })?;
        let s = spectral_norm(&(h2 * inner));
        Ok(s * s)
    }

    /// K = Q21 Q11^{-1} + (Q22 - Q21 Q11^{-1} Q12) H2. Requires the gap
    /// condition lambda_min(Lambda_+) > alpha * max|Lambda_-|.
    pub fn feedback(&self, pair: &ControlPair, h2: &DMatrix<f64>) -> Result<FeedbackResult> {
        let alpha = self.alpha(h2)?;
        let lambda_min_pos = self.lambda_min_pos();
        let lambda_max_neg_abs = self.lambda_max_neg_abs();
        if lambda_min_pos <= alpha * lambda_max_neg_abs {
            return Err(Error::AlphaConditionViolated {
                alpha,
                lambda_min_pos,
                lambda_max_neg_abs,
            });
        }
        let q21_q11_inv = self
            .q11
            .transpose()
            .lu()
            .solve(&self.q21.transpose())
            .ok_or_else(|| Error::SingularSystem {
                context: "Q11 is singular".into(),
                condition: f64::INFINITY,
            })?
            .transpose();
        let k = &q21_q11_inv + (&self.q22 - &q21_q11_inv * &self.q12) * h2;
        FeedbackResult::evaluate(pair, k, "block", pair.default_tolerance())
    }
}

/// Feedback from the eigenvector-block parametrization
/// K = Q21 Q11^{-1} + (Q22 - Q21 Q11^{-1} Q12) H2, valid whenever
/// alpha = ||H2 (I - Q12 H2)^{-1} Q11||_2^2 satisfies
/// lambda_min(Lambda_+) > alpha * max|Lambda_-|.
pub fn block_parametrized_feedback(
    pair: &ControlPair,
    h2: &DMatrix<f64>,
) -> Result<FeedbackResult> {
    require_feasible(pair)?;
    let (n, q) = (pair.n(), pair.q());
    if h2.shape() != (q, n) {
        return Err(Error::InvalidInput(format!(
            "H2 must be {q}x{n}, got {}x{}",
            h2.nrows(),
            h2.ncols()
        )));
    }
    BlockParametrization::new(pair)?.feedback(pair, h2)
}

/// Feedback from the definite pencil (M, D): take the n positive generalized
/// eigenpairs, split the D-orthonormal basis [X; Y], K = Y X^{-1}.
pub fn pencil_feedback(pair: &ControlPair, d: &DMatrix<f64>) -> Result<FeedbackResult> {
    let s = pair.n() + pair.q();
    if d.shape() != (s, s) {
        return Err(Error::InvalidInput(format!(
            "D must be {s}x{s}, got {}x{}",
            d.nrows(),
            d.ncols()
        )));
    }
    let eig = gen_sym_eig(&assemble_saddle(pair), d)?;
    k_from_subspace(pair, &eig.values, &eig.vectors, "pencil")
}

/// Result of the pencil norm minimization, carrying the best D found.
#[derive(Debug, Clone)]
pub struct PencilSearch {
    pub result: FeedbackResult,
    pub d: DMatrix<f64>,
    pub objective_evals: usize,
}

/// Local minimization of ||Y X^{-1}||_F over SPD pencils D = C C^T + delta I
/// with C lower triangular (diagonal exponentially reparametrized). Uses a
/// multi-start Nelder-Mead simplex; D = I is always among the starts.
pub fn pencil_minimize(pair: &ControlPair, budget: usize, seed: u64) -> Result<PencilSearch> {
    require_feasible(pair)?;
    let s = pair.n() + pair.q();
    let p = s * (s + 1) / 2;
    let delta = 1e-8;
    let saddle = assemble_saddle(pair);
    let n = pair.n();

    let theta_to_d = |theta: &[f64]| -> DMatrix<f64> {
        let mut c = DMatrix::zeros(s, s);
        let mut idx = 0;
        for i in 0..s {
            for j in 0..=i {
                c[(i, j)] = if i == j {
                    theta[idx].clamp(-30.0, 30.0).exp()
                } else {
                    theta[idx]
                };
                idx += 1;
            }
        }
        &c * c.transpose() + DMatrix::identity(s, s) * delta
    };

    const PENALTY: f64 = 1e6;
    let objective = |theta: &[f64]| -> f64 {
        let d = theta_to_d(theta);
        let Ok(eig) = gen_sym_eig(&saddle, &d) else {
            return PENALTY;
        };
        if eig.values.iter().filter(|&&v| v > 0.0).count() < n {
            return PENALTY;
        }
        let basis = eig.vectors.columns(0, n);
        let x = basis.rows(0, n).clone_owned();
        let y = basis.rows(n, pair.q()).clone_owned();
        match x.transpose().lu().solve(&y.transpose()) {
            Some(k_t) => k_t.norm(),
            None => PENALTY,
        }
    };

    let num_starts = 5;
    let per_start = (budget / num_starts).max(200);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut runs: Vec<(usize, SimplexResult)> = Vec::new();
    let mut evals = 0usize;
    for start in 0..num_starts {
        let x0: Vec<f64> = if start == 0 {
            vec![0.0; p] // C = I, hence D = I + delta I
        } else {
            (0..p).map(|_| rng.gen_range(-0.3..0.3)).collect()
        };
        let run = nelder_mead(
            &objective,
            &x0,
            &SimplexOptions {
                max_evals: per_start,
                ..Default::default()
            },
        );
        evals += run.evals;
        runs.push((start, run));
    }
    // deterministic merge: best objective, ties by start index
    runs.sort_by(|a, b| {
        a.1.f
            .partial_cmp(&b.1.f)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.0.cmp(&b.0))
    });
    let best = &runs[0].1;
    if best.f >= PENALTY {
        return Err(Error::NotDissipatable(
            "no feasible pencil encountered in the search".into(),
        ));
    }
    let d = theta_to_d(&best.x);
    let eig = gen_sym_eig(&saddle, &d)?;
    let mut result = k_from_subspace(pair, &eig.values, &eig.vectors, "pencil-min")?;
    result.iterations = evals;
    Ok(PencilSearch {
        result,
        d,
        objective_evals: evals,
    })
}

/// Shrink a strictly dissipating K1 along (1-rho) K1 until the rightmost
/// eigenvalue of the closed-loop symmetric part hits zero; the result is
/// weakly dissipating with strictly smaller norm.
pub fn shrink_to_weak(pair: &ControlPair, k1: &DMatrix<f64>) -> Result<FeedbackResult> {
    let tol = pair.default_tolerance();
    let v1 = verify_dissipating(pair, k1, tol)?;
    if v1.classification != Classification::Strict {
        return Err(Error::PreconditionViolated(format!(
            "shrink_to_weak needs a strictly dissipating K1, got {}",
            v1.classification
        )));
    }
    let lambda_max_open = sym_eig(pair.a())?.values[0];
    if lambda_max_open <= 0.0 {
        return Err(Error::AlreadyDissipative(
            "lambda_max(Sym(A)) <= 0: the open-loop system is already weakly dissipative".into(),
        ));
    }
    // g(rho) = lambda_max(Sym(A - B (1-rho) K1)); g(0) < 0, g(1) > 0.
    let g = |rho: f64| -> Result<f64> {
        let k = k1 * (1.0 - rho);
        Ok(sym_eig(&pair.closed_loop(&k)?)?.values[0])
    };
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut g_lo = g(lo)?;
    let mut g_hi = g(hi)?;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let g_mid = g(mid)?;
        if g_mid.abs() <= 1e-14 * (1.0 + lambda_max_open) {
            lo = mid;
            g_lo = g_mid;
            break;
        }
        if g_mid < 0.0 {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
            g_hi = g_mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    // secant polish from the bracket endpoints
    let mut rho = if (g_hi - g_lo).abs() > 0.0 {
        lo - g_lo * (hi - lo) / (g_hi - g_lo)
    } else {
        lo
    };
    rho = rho.clamp(0.0, 1.0);
    for _ in 0..4 {
        let g_rho = g(rho)?;
        if g_rho.abs() <= 1e-14 * (1.0 + lambda_max_open) {
            break;
        }
        let h = 1e-9;
        let slope = (g((rho + h).min(1.0))? - g_rho) / h;
        if slope.abs() < f64::MIN_POSITIVE {
            break;
        }
        rho = (rho - g_rho / slope).clamp(0.0, 1.0);
    }
    let k2 = k1 * (1.0 - rho);
    FeedbackResult::evaluate(pair, k2, "shrink", tol)
}

/// The shifted pair (A + delta I, B). Solving the weak problem on the shift
/// and applying the feedback to the original pair yields
/// lambda_max(Sym(A - BK)) = -delta up to solver tolerance.
pub fn shift_for_strictness(pair: &ControlPair, delta: f64) -> Result<ControlPair> {
    if delta < 0.0 {
        return Err(Error::InvalidInput("delta must be nonnegative".into()));
    }
    let shifted = pair.a() + DMatrix::identity(pair.n(), pair.n()) * delta;
    ControlPair::new(shifted, pair.b().clone())
}

/// Draw a seeded H2 whose alpha value satisfies the block-parametrization
/// spectral-gap condition with margin `safety` in (0, 1).
pub fn seeded_valid_h2(pair: &ControlPair, seed: u64, safety: f64) -> Result<DMatrix<f64>> {
    let (n, q) = (pair.n(), pair.q());
    let blocks = BlockParametrization::new(pair)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h2 = DMatrix::from_fn(q, n, |_, _| rng.gen_range(-1.0f64..1.0));
    let h2_norm = h2.norm();
    h2 /= h2_norm.max(f64::MIN_POSITIVE);
    // scale down until alpha * |lambda_-| <= safety * lambda_+
    let mut scale = 1.0;
    for _ in 0..200 {
        let candidate = &h2 * scale;
        if let Ok(alpha) = blocks.alpha(&candidate) {
            if alpha * blocks.lambda_max_neg_abs() <= safety * blocks.lambda_min_pos() {
                return Ok(candidate);
            }
        }
        scale *= 0.5;
    }
    Err(Error::GenerationFailed(
        "could not scale H2 into the alpha-feasible region".into(),
    ))
}

/// Pick R = rho I with the largest rho in {1, 1/2, 1/4, ...} making Phi
/// positive definite, for use as a default classical parametrization.
pub fn default_skelton_params(pair: &ControlPair) -> Result<SkeltonParams> {
    let q_dim = pair.q();
    let q_mat = pair.a() + pair.a().transpose();
    // demand a definiteness margin, not bare positivity: a borderline Phi
    // produces a borderline (possibly non-strict) closed loop
    let margin = 1e-6 * (1.0 + q_mat.norm());
    let mut rho = 1.0f64;
    for _ in 0..80 {
        let r_inv = 1.0 / rho;
        let phi_inv = pair.b() * pair.b().transpose() * r_inv - &q_mat;
        if sym_eig(&phi_inv)?.values.min() > margin {
            return Ok(SkeltonParams::new(
                DMatrix::identity(q_dim, q_dim) * rho,
                DMatrix::zeros(q_dim, pair.n()),
            ));
        }
        rho *= 0.5;
    }
    Err(Error::NotPositiveDefinite(
        "no rho in the sweep made Phi positive definite".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{is_dissipatable, zero_multiplicity_check};
    use approx::assert_relative_eq;

    fn pair_2x2() -> ControlPair {
        ControlPair::new(
            DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0])),
            DMatrix::from_column_slice(2, 1, &[1.0, 0.0]),
        )
        .unwrap()
    }

    fn pair_neg_identity() -> ControlPair {
        ControlPair::new(
            DMatrix::identity(3, 3) * -1.0,
            DMatrix::from_column_slice(3, 1, &[1.0, 0.5, -0.25]),
        )
        .unwrap()
    }

    #[test]
    fn spectral_feedback_2x2_closed_form() {
        let result = spectral_feedback(&pair_2x2()).unwrap();
        assert_eq!(result.classification, Classification::Strict);
        assert_relative_eq!(result.k[(0, 0)], 1.0 + 2.0f64.sqrt(), epsilon = 1e-10);
        assert_relative_eq!(result.k[(0, 1)], 0.0, epsilon = 1e-10);
        assert_eq!(result.rank, 1);
    }

    #[test]
    fn spectral_feedback_keeps_dissipative_input_dissipative() {
        let result = spectral_feedback(&pair_neg_identity()).unwrap();
        assert_eq!(result.classification, Classification::Strict);
        assert_eq!(result.rank, 1);
    }

    #[test]
    fn spectral_feedback_rejects_infeasible() {
        let pair = ControlPair::new(
            DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0])),
            DMatrix::from_column_slice(2, 1, &[0.0, 1.0]),
        )
        .unwrap();
        assert!(matches!(
            spectral_feedback(&pair),
            Err(Error::NotDissipatable(_))
        ));
    }

    #[test]
    fn skelton_worked_example() {
        // A = diag(1,-1), B = e1, R = I/3, L = 0:
        // Phi = diag(1, 1/2) > 0, returned K = R^{-1}B^T = [3, 0],
        // Sym(A-BK) = diag(-2, -1).
        let pair = pair_2x2();
        let params =
            SkeltonParams::new(DMatrix::from_element(1, 1, 1.0 / 3.0), DMatrix::zeros(1, 2));
        let result = skelton_feedback(&pair, &params).unwrap();
        assert_relative_eq!(result.k[(0, 0)], 3.0, epsilon = 1e-10);
        assert_relative_eq!(result.k[(0, 1)], 0.0, epsilon = 1e-10);
        assert_eq!(result.classification, Classification::Strict);
        assert_relative_eq!(result.sym_spectrum[0], -1.0, epsilon = 1e-10);
        assert_relative_eq!(result.sym_spectrum[1], -2.0, epsilon = 1e-10);
    }

    #[test]
    fn skelton_l_sweep_stays_strict() {
        let pair = pair_2x2();
        for i in 1..=9 {
            let l_norm = 0.1 + 0.099 * i as f64; // 0.199 .. 0.991
            let l = DMatrix::from_row_slice(1, 2, &[l_norm, 0.0]);
            let params = SkeltonParams::new(DMatrix::from_element(1, 1, 1.0 / 3.0), l);
            let result = skelton_feedback(&pair, &params).unwrap();
            assert_eq!(
                result.classification,
                Classification::Strict,
                "||L|| = {l_norm}"
            );
        }
    }

    #[test]
    fn skelton_rejects_large_l_without_override() {
        let pair = pair_2x2();
        let l = DMatrix::from_row_slice(1, 2, &[1.5, 0.0]);
        let params = SkeltonParams::new(DMatrix::from_element(1, 1, 1.0 / 3.0), l.clone());
        assert!(matches!(
            skelton_feedback(&pair, &params),
            Err(Error::PreconditionViolated(_))
        ));
        let params =
            SkeltonParams::new(DMatrix::from_element(1, 1, 1.0 / 3.0), l).with_l_norm_override();
        assert!(skelton_feedback(&pair, &params).is_ok());
    }

    #[test]
    fn skelton_rejects_indefinite_phi() {
        // R too large: B R^{-1} B^T barely lifts A+A^T, Phi^{-1} indefinite.
        let pair = pair_2x2();
        let params = SkeltonParams::new(DMatrix::from_element(1, 1, 10.0), DMatrix::zeros(1, 2));
        assert!(matches!(
            skelton_feedback(&pair, &params),
            Err(Error::NotPositiveDefinite(_))
        ));
    }

    #[test]
    fn counterexample_reference_values() {
        let report = skelton_counterexample(3.0, 4.0).unwrap();
        assert_relative_eq!(report.l_norm, 1.0, epsilon = 1e-12);
        assert!(report.deviation_from_neg_identity < 1e-12);

        let report = skelton_counterexample(8.0, 9.0).unwrap();
        assert_relative_eq!(report.l_norm, 1.5, epsilon = 1e-12);
        assert!(report.deviation_from_neg_identity < 1e-12);

        let report = skelton_counterexample(1.0, 100.0).unwrap();
        assert_relative_eq!(
            report.l_norm,
            0.5 * (100.0f64 / 99.0).sqrt(),
            epsilon = 1e-12
        );
        assert!(report.l_norm < 1.0);
        assert!(report.deviation_from_neg_identity < 1e-12);

        assert!(matches!(
            skelton_counterexample(4.0, 3.0),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn block_feedback_h2_zero_matches_spectral() {
        let pair = pair_2x2();
        let spectral = spectral_feedback(&pair).unwrap();
        let block = block_parametrized_feedback(&pair, &DMatrix::zeros(1, 2)).unwrap();
        assert!((spectral.k - block.k).norm() < 1e-8);
        assert_eq!(block.classification, Classification::Strict);
    }

    #[test]
    fn block_feedback_seeded_h2_strict_and_distinct() {
        let pair = pair_2x2();
        let h2 = seeded_valid_h2(&pair, 3, 0.5).unwrap();
        let result = block_parametrized_feedback(&pair, &h2).unwrap();
        assert_eq!(result.classification, Classification::Strict);
        let base = block_parametrized_feedback(&pair, &DMatrix::zeros(1, 2)).unwrap();
        assert!((result.k - base.k).norm() > 1e-10);
    }

    #[test]
    fn block_feedback_alpha_violation_reported() {
        let pair = pair_2x2();
        // enormous H2 forces alpha far past the admissible gap
        let h2 = DMatrix::from_row_slice(1, 2, &[50.0, -80.0]);
        match block_parametrized_feedback(&pair, &h2) {
            Err(Error::AlphaConditionViolated {
                alpha,
                lambda_min_pos,
                lambda_max_neg_abs,
            }) => {
                assert!(alpha * lambda_max_neg_abs >= lambda_min_pos);
            }
            other => panic!("expected AlphaConditionViolated, got {other:?}"),
        }
    }

    #[test]
    fn pencil_identity_matches_spectral_and_scaling_invariance() {
        let pair = pair_2x2();
        let spectral = spectral_feedback(&pair).unwrap();
        let d1 = pencil_feedback(&pair, &DMatrix::identity(3, 3)).unwrap();
        assert!((&spectral.k - &d1.k).norm() < 1e-8);
        let d2 = pencil_feedback(&pair, &(DMatrix::identity(3, 3) * 2.0)).unwrap();
        assert!((&d1.k - &d2.k).norm() < 1e-8);
    }

    #[test]
    fn pencil_seeded_spd_strict() {
        let pair = pair_2x2();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let raw = DMatrix::from_fn(3, 3, |_, _| rng.gen_range(-1.0..1.0));
            let d = &raw * raw.transpose() + DMatrix::identity(3, 3) * 0.3;
            let result = pencil_feedback(&pair, &d).unwrap();
            assert_eq!(result.classification, Classification::Strict);
        }
    }

    #[test]
    fn pencil_minimize_2x2_reaches_near_global() {
        let search = pencil_minimize(&pair_2x2(), 6000, 7).unwrap();
        assert_eq!(search.result.classification, Classification::Strict);
        // global weak optimum is ||K||_F = 1 at K = (1, 0)
        assert!(search.result.norm_frobenius >= 1.0 - 1e-3);
        assert!(
            search.result.norm_frobenius <= 1.05,
            "norm = {}",
            search.result.norm_frobenius
        );
    }

    #[test]
    fn shrink_to_weak_halves_hand_case() {
        let pair = pair_2x2();
        let k1 = DMatrix::from_row_slice(1, 2, &[2.0, 0.0]);
        let result = shrink_to_weak(&pair, &k1).unwrap();
        assert_eq!(result.classification, Classification::Weak);
        assert_relative_eq!(result.k[(0, 0)], 1.0, epsilon = 1e-6);
        assert_relative_eq!(result.k[(0, 1)], 0.0, epsilon = 1e-12);
        assert!(result.norm_frobenius < k1.norm());
        assert!(result.norm_spectral < spectral_norm(&k1));
        assert_eq!(
            zero_multiplicity_check(&pair, &result.k, pair.default_tolerance()).unwrap(),
            1
        );
    }

    #[test]
    fn shrink_to_weak_rejects_already_dissipative() {
        let pair = pair_neg_identity();
        let k1 = spectral_feedback(&pair).unwrap().k;
        assert!(matches!(
            shrink_to_weak(&pair, &k1),
            Err(Error::AlreadyDissipative(_))
        ));
    }

    #[test]
    fn shift_for_strictness_diagonal_case() {
        let pair = pair_2x2();
        let shifted = shift_for_strictness(&pair, 0.5).unwrap();
        assert_relative_eq!(shifted.a()[(0, 0)], 1.5, epsilon = 1e-15);
        assert_relative_eq!(shifted.a()[(1, 1)], -0.5, epsilon = 1e-15);
        // weak K for the shifted pair is [1.5, 0]; on the original pair the
        // rightmost symmetric eigenvalue sits at -0.5.
        let k = DMatrix::from_row_slice(1, 2, &[1.5, 0.0]);
        let v = verify_dissipating(&shifted, &k, 1e-10).unwrap();
        assert_eq!(v.classification, Classification::Weak);
        let v0 = verify_dissipating(&pair, &k, 1e-10).unwrap();
        assert_relative_eq!(v0.spectrum[0], -0.5, epsilon = 1e-12);

        let same = shift_for_strictness(&pair, 0.0).unwrap();
        assert_eq!(same.a(), pair.a());
    }

    #[test]
    fn default_skelton_params_produce_strict_feedback() {
        for pair in [pair_2x2(), pair_neg_identity()] {
            let params = default_skelton_params(&pair).unwrap();
            let result = skelton_feedback(&pair, &params).unwrap();
            assert_eq!(result.classification, Classification::Strict);
            assert!(
                is_dissipatable(&pair, pair.default_tolerance())
                    .unwrap()
                    .feasible
            );
        }
    }
}
