//! Problem instances and the structural diagnostics attached to them:
//! feasibility of dissipation, saddle-matrix inertia, feedback verification,
//! rank and multiplicity bounds, LMI constraint residuals.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::numerics::{rank, spectral_norm, svd, sym_eig, Inertia, ZeroThresholds};

/// The problem instance: a square system matrix A and a tall control matrix B
/// with full column rank and strictly fewer columns than rows.
#[derive(Debug, Clone)]
pub struct ControlPair {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
}

impl ControlPair {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::InvalidInput(format!(
                "A must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != a.nrows() {
            return Err(Error::InvalidInput(format!(
                "B must have {} rows, got {}",
                a.nrows(),
                b.nrows()
            )));
        }
        if b.ncols() >= a.nrows() || b.ncols() == 0 {
            return Err(Error::InvalidInput(format!(
                "B must be tall with 0 < q < n, got q = {} for n = {}",
                b.ncols(),
                a.nrows()
            )));
        }
        if !a.iter().all(|x| x.is_finite()) || !b.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidInput("non-finite entries".into()));
        }
        let sv = svd(&b)?.singular_values;
        if sv.min() <= 1e-10 * sv.max() {
            return Err(Error::RankDeficient(format!(
                "B has numerical column rank below {}: sigma_min/sigma_max = {:.3e}",
                b.ncols(),
                sv.min() / sv.max()
            )));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn q(&self) -> usize {
        self.b.ncols()
    }

    /// Scale-aware default tolerance for strict/weak classification.
    pub fn default_tolerance(&self) -> f64 {
        1e-8 * (1.0 + self.a.norm())
    }

    /// Closed-loop matrix A - BK.
    pub fn closed_loop(&self, k: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if k.nrows() != self.q() || k.ncols() != self.n() {
            return Err(Error::InvalidInput(format!(
                "K must be {}x{}, got {}x{}",
                self.q(),
                self.n(),
                k.nrows(),
                k.ncols()
            )));
        }
        Ok(&self.a - &self.b * k)
    }
}

/// The symmetric saddle matrix [-(A+A^T), B; B^T, 0] and its inertia.
#[derive(Debug, Clone)]
pub struct SaddleMatrix {
    pub matrix: DMatrix<f64>,
    pub inertia: Inertia,
}

impl SaddleMatrix {
    pub fn new(pair: &ControlPair) -> Result<Self> {
        let matrix = assemble_saddle(pair);
        let inertia = sym_eig(&matrix)?.inertia(ZeroThresholds::default());
        Ok(Self { matrix, inertia })
    }
}

/// Assemble [-(A+A^T), B; B^T, 0] without factorizing it.
pub fn assemble_saddle(pair: &ControlPair) -> DMatrix<f64> {
    let (n, q) = (pair.n(), pair.q());
    let mut m = DMatrix::zeros(n + q, n + q);
    let neg_q = -(pair.a() + pair.a().transpose());
    m.view_mut((0, 0), (n, n)).copy_from(&neg_q);
    m.view_mut((0, n), (n, q)).copy_from(pair.b());
    m.view_mut((n, 0), (q, n)).copy_from(&pair.b().transpose());
    m
}

/// Outcome of testing whether -(A+A^T) is positive definite on ker(B^T).
#[derive(Debug, Clone)]
pub struct FeasibilityReport {
    /// Orthonormal basis of ker(B^T), n x (n-q).
    pub kernel_basis: DMatrix<f64>,
    /// Eigenvalues of N^T (A+A^T) N, descending.
    pub restricted_spectrum: Vec<f64>,
    pub feasible: bool,
    /// Most positive restricted eigenvalue; feasible iff margin < -tol.
    pub margin: f64,
    /// Tolerance the decision was made against.
    pub tolerance: f64,
}

/// Orthonormal basis of the null space of B^T via the full SVD of B.
pub fn kernel_basis(b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (n, q) = (b.nrows(), b.ncols());
    if q >= n {
        return Err(Error::InvalidInput(format!("B must be tall, got {n}x{q}")));
    }
    let full = b.clone().svd(true, true);
    let u = full.u.as_ref().expect("SVD with compute_u");
    let sv = &full.singular_values;
    if sv.min() <= 1e-10 * sv.max() {
        return Err(Error::RankDeficient(
            "cannot form kernel basis: B is column rank deficient".into(),
        ));
    }
    // nalgebra's thin SVD returns n x q; complete to the orthogonal complement
    // by projecting out range(U) from the identity and re-orthonormalizing.
    let mut proj = DMatrix::identity(n, n) - u * u.transpose();
    let mut basis = DMatrix::zeros(n, n - q);
    let mut found = 0;
    for j in 0..n {
        if found == n - q {
            break;
        }
        let col = proj.column(j).clone_owned();
        let norm = col.norm();
        if norm > 1e-8 {
            let v = col / norm;
            // deflate so later columns stay orthogonal
            proj -= &v * v.transpose() * &proj;
            basis.set_column(found, &v);
            found += 1;
        }
    }
    if found < n - q {
        return Err(Error::RankDeficient(
            "kernel basis construction lost rank".into(),
        ));
    }
    // one Gram-Schmidt pass for orthonormality at working precision
    for j in 0..n - q {
        let mut v = basis.column(j).clone_owned();
        for i in 0..j {
            let u_i = basis.column(i).clone_owned();
            v -= &u_i * (u_i.dot(&v));
        }
        v /= v.norm();
        basis.set_column(j, &v);
    }
    Ok(basis)
}

/// Feasibility test of Problem P1: A+A^T negative definite on ker(B^T).
pub fn is_dissipatable(pair: &ControlPair, tol: f64) -> Result<FeasibilityReport> {
    let n_basis = kernel_basis(pair.b())?;
    let restricted = n_basis.transpose() * (pair.a() + pair.a().transpose()) * &n_basis;
    let eig = sym_eig(&restricted)?;
    let margin = eig.values[0];
    Ok(FeasibilityReport {
        kernel_basis: n_basis,
        restricted_spectrum: eig.values.iter().copied().collect(),
        feasible: margin < -tol,
        margin,
        tolerance: tol,
    })
}

/// Inertia of the saddle matrix; (n, q, 0) exactly when the pair is feasible.
pub fn saddle_inertia(pair: &ControlPair) -> Result<Inertia> {
    Ok(SaddleMatrix::new(pair)?.inertia)
}

/// How a candidate feedback classifies against the half-plane target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    /// lambda_max(Sym(A-BK)) < -tol: field of values in the open left half plane.
    Strict,
    /// |lambda_max(Sym(A-BK))| <= tol: boundary touches the imaginary axis.
    Weak,
    /// lambda_max(Sym(A-BK)) > tol: not dissipating.
    None,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Classification::Strict => write!(f, "strict"),
            Classification::Weak => write!(f, "weak"),
            Classification::None => write!(f, "none"),
        }
    }
}

/// Classification plus the full spectrum of Sym(A-BK), descending.
#[derive(Debug, Clone)]
pub struct Verification {
    pub classification: Classification,
    pub spectrum: Vec<f64>,
}

/// Classify a feedback K against tolerance `tol`.
pub fn verify_dissipating(pair: &ControlPair, k: &DMatrix<f64>, tol: f64) -> Result<Verification> {
    let closed = pair.closed_loop(k)?;
    let eig = sym_eig(&closed)?;
    let lambda_max = eig.values[0];
    let classification = if lambda_max < -tol {
        Classification::Strict
    } else if lambda_max.abs() <= tol {
        Classification::Weak
    } else {
        Classification::None
    };
    Ok(Verification {
        classification,
        spectrum: eig.values.iter().copied().collect(),
    })
}

/// Rank bound of the dissipating feedback: rank(Q_-^T (B + K^T)) >= t where
/// t counts the positive eigenvalues of Sym(A) and Q_- holds their
/// eigenvectors. Returns whether the bound holds.
pub fn rank_lower_bound_check(pair: &ControlPair, k: &DMatrix<f64>, tol: f64) -> Result<bool> {
    let verification = verify_dissipating(pair, k, tol)?;
    if verification.classification == Classification::None {
        return Err(Error::PreconditionViolated(
            "rank bound only applies to dissipating feedbacks".into(),
        ));
    }
    let eig = sym_eig(pair.a())?;
    let thresholds = ZeroThresholds::default();
    let t = eig.inertia(thresholds).positive;
    if t == 0 {
        return Ok(true);
    }
    let q_minus = eig.vectors.columns(0, t).clone_owned();
    let product = q_minus.transpose() * (pair.b() + k.transpose());
    Ok(rank(&product, thresholds)? >= t)
}

/// Multiplicity of the zero eigenvalue of Sym(A-BK) for a weakly dissipating
/// K; guaranteed to satisfy 0 < m <= q.
pub fn zero_multiplicity_check(pair: &ControlPair, k: &DMatrix<f64>, tol: f64) -> Result<usize> {
    let verification = verify_dissipating(pair, k, tol)?;
    if verification.classification != Classification::Weak {
        return Err(Error::PreconditionViolated(format!(
            "zero multiplicity applies to weakly dissipating feedbacks, got {}",
            verification.classification
        )));
    }
    let m = verification
        .spectrum
        .iter()
        .filter(|lam| lam.abs() <= tol)
        .count();
    if m == 0 || m > pair.q() {
        return Err(Error::PreconditionViolated(format!(
            "zero multiplicity {m} outside (0, q = {}]",
            pair.q()
        )));
    }
    Ok(m)
}

/// Residuals of the LMI constraints for a candidate K at norm bound gamma.
/// This certifies a candidate; it does not solve the LMI programs.
#[derive(Debug, Clone, serde::Serialize)]
pub struct LmiResiduals {
    /// lambda_max(A + A^T - BK - K^T B^T); feasible when <= 0.
    pub closed_loop_lambda_max: f64,
    /// lambda_min of [gamma I, K; K^T, gamma I]; feasible when >= 0,
    /// equivalently ||K||_2 <= gamma.
    pub two_norm_block_lambda_min: f64,
    /// gamma - ||K||_F^2; feasible for the Frobenius program when >= 0.
    pub frobenius_slack: f64,
}

pub fn lmi_residuals(pair: &ControlPair, k: &DMatrix<f64>, gamma: f64) -> Result<LmiResiduals> {
    if gamma <= 0.0 {
        return Err(Error::InvalidInput("gamma must be positive".into()));
    }
    let (n, q) = (pair.n(), pair.q());
    if k.nrows() != q || k.ncols() != n {
        return Err(Error::InvalidInput(format!(
            "K must be {q}x{n}, got {}x{}",
            k.nrows(),
            k.ncols()
        )));
    }
    let bk = pair.b() * k;
    let closed = pair.a() + pair.a().transpose() - &bk - bk.transpose();
    let closed_loop_lambda_max = sym_eig(&closed)?.values[0];

    let mut block = DMatrix::zeros(n + q, n + q);
    for i in 0..q {
        block[(i, i)] = gamma;
    }
    for i in 0..n {
        block[(q + i, q + i)] = gamma;
    }
    block.view_mut((0, q), (q, n)).copy_from(k);
    block.view_mut((q, 0), (n, q)).copy_from(&k.transpose());
    let block_eig = sym_eig(&block)?;
    let two_norm_block_lambda_min = block_eig.values[block_eig.values.len() - 1];

    Ok(LmiResiduals {
        closed_loop_lambda_max,
        two_norm_block_lambda_min,
        frobenius_slack: gamma - k.norm() * k.norm(),
    })
}

/// A computed feedback with its verification diagnostics.
#[derive(Debug, Clone)]
pub struct FeedbackResult {
    pub k: DMatrix<f64>,
    pub method: String,
    pub classification: Classification,
    /// Spectrum of Sym(A-BK), descending.
    pub sym_spectrum: Vec<f64>,
    pub norm_frobenius: f64,
    pub norm_spectral: f64,
    pub rank: usize,
    /// Iteration count for iterative methods, 0 for direct constructors.
    pub iterations: usize,
    pub converged: bool,
    pub warnings: Vec<String>,
}

impl FeedbackResult {
    /// Build the diagnostics for a computed K.
    pub fn evaluate(
        pair: &ControlPair,
        k: DMatrix<f64>,
        method: impl Into<String>,
        tol: f64,
    ) -> Result<Self> {
        let verification = verify_dissipating(pair, &k, tol)?;
        let norm_frobenius = k.norm();
        let norm_spectral = spectral_norm(&k);
        let rank = rank(&k, ZeroThresholds::default())?;
        Ok(Self {
            k,
            method: method.into(),
            classification: verification.classification,
            sym_spectrum: verification.spectrum,
            norm_frobenius,
            norm_spectral,
            rank,
            iterations: 0,
            converged: true,
            warnings: Vec::new(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DVector;

    pub(crate) fn pair_2x2() -> ControlPair {
        ControlPair::new(
            DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0])),
            DMatrix::from_column_slice(2, 1, &[1.0, 0.0]),
        )
        .unwrap()
    }

    #[test]
    fn control_pair_rejects_bad_shapes() {
        let a = DMatrix::identity(3, 3);
        assert!(ControlPair::new(a.clone(), DMatrix::zeros(3, 3)).is_err()); // q = n
        assert!(ControlPair::new(a.clone(), DMatrix::zeros(2, 1)).is_err()); // row mismatch
        assert!(matches!(
            ControlPair::new(a, DMatrix::zeros(3, 1)),
            Err(Error::RankDeficient(_))
        ));
    }

    #[test]
    fn kernel_basis_small_cases() {
        let b = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let n = kernel_basis(&b).unwrap();
        assert_eq!(n.shape(), (2, 1));
        assert_relative_eq!(n[(1, 0)].abs(), 1.0, epsilon = 1e-12);

        let b = DMatrix::from_columns(&[
            DVector::from_vec(vec![1.0, 0.0, 0.0]),
            DVector::from_vec(vec![0.0, 1.0, 0.0]),
        ]);
        let n = kernel_basis(&b).unwrap();
        assert_eq!(n.shape(), (3, 1));
        assert_relative_eq!(n[(2, 0)].abs(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn feasibility_negative_identity() {
        let pair = ControlPair::new(
            DMatrix::identity(3, 3) * -1.0,
            DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 0.5]),
        )
        .unwrap();
        let report = is_dissipatable(&pair, pair.default_tolerance()).unwrap();
        assert!(report.feasible);
        assert_relative_eq!(report.margin, -2.0, epsilon = 1e-10);
    }

    #[test]
    fn feasibility_blocked_by_kernel_direction() {
        // B = e2 leaves e1 in ker(B^T); A+A^T restricted there is [2] > 0.
        let pair = ControlPair::new(
            DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0])),
            DMatrix::from_column_slice(2, 1, &[0.0, 1.0]),
        )
        .unwrap();
        let report = is_dissipatable(&pair, pair.default_tolerance()).unwrap();
        assert!(!report.feasible);
        assert_relative_eq!(report.margin, 2.0, epsilon = 1e-10);
    }

    #[test]
    fn saddle_inertia_2x2_case() {
        let inertia = saddle_inertia(&pair_2x2()).unwrap();
        assert_eq!(
            inertia,
            Inertia {
                positive: 2,
                negative: 1,
                zero: 0
            }
        );
    }

    #[test]
    fn verify_classifications() {
        let pair = ControlPair::new(
            DMatrix::identity(2, 2) * -1.0,
            DMatrix::from_column_slice(2, 1, &[1.0, 0.0]),
        )
        .unwrap();
        let v = verify_dissipating(&pair, &DMatrix::zeros(1, 2), 1e-10).unwrap();
        assert_eq!(v.classification, Classification::Strict);

        let pair = pair_2x2();
        let k = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let v = verify_dissipating(&pair, &k, 1e-10).unwrap();
        assert_eq!(v.classification, Classification::Weak);
        assert_relative_eq!(v.spectrum[0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(v.spectrum[1], -1.0, epsilon = 1e-12);

        let v = verify_dissipating(&pair, &DMatrix::zeros(1, 2), 1e-10).unwrap();
        assert_eq!(v.classification, Classification::None);
    }

    #[test]
    fn verify_rejects_dimension_mismatch() {
        let pair = pair_2x2();
        let k = DMatrix::zeros(2, 2);
        assert!(matches!(
            verify_dissipating(&pair, &k, 1e-8),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn rank_bound_trivial_and_hand_case() {
        // A = -I has t = 0; bound holds for any dissipating K.
        let pair = ControlPair::new(
            DMatrix::identity(2, 2) * -1.0,
            DMatrix::from_column_slice(2, 1, &[1.0, 0.0]),
        )
        .unwrap();
        assert!(
            rank_lower_bound_check(&pair, &DMatrix::zeros(1, 2), pair.default_tolerance()).unwrap()
        );

        // A = diag(1,-1), B = e1, K = [2,0]: t = 1, Q_-^T(B+K^T) = [3].
        let pair = pair_2x2();
        let k = DMatrix::from_row_slice(1, 2, &[2.0, 0.0]);
        assert!(rank_lower_bound_check(&pair, &k, pair.default_tolerance()).unwrap());
    }

    #[test]
    fn rank_bound_requires_dissipating_k() {
        let pair = pair_2x2();
        assert!(matches!(
            rank_lower_bound_check(&pair, &DMatrix::zeros(1, 2), pair.default_tolerance()),
            Err(Error::PreconditionViolated(_))
        ));
    }

    #[test]
    fn zero_multiplicity_weak_case() {
        let pair = pair_2x2();
        let k = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        assert_eq!(zero_multiplicity_check(&pair, &k, 1e-10).unwrap(), 1);
        // strict K violates the precondition
        let k = DMatrix::from_row_slice(1, 2, &[2.0, 0.0]);
        assert!(matches!(
            zero_multiplicity_check(&pair, &k, 1e-10),
            Err(Error::PreconditionViolated(_))
        ));
    }

    #[test]
    fn lmi_residuals_reference_points() {
        let pair = ControlPair::new(
            DMatrix::identity(2, 2) * -1.0,
            DMatrix::from_column_slice(2, 1, &[1.0, 0.0]),
        )
        .unwrap();
        let k = DMatrix::zeros(1, 2);
        let res = lmi_residuals(&pair, &k, 1.0).unwrap();
        assert!(res.closed_loop_lambda_max <= 0.0);
        assert!(res.two_norm_block_lambda_min >= 0.0);
        assert!(res.frobenius_slack >= 0.0);

        // gamma = ||K||_2 makes the block constraint exactly tight
        let k = DMatrix::from_row_slice(1, 2, &[3.0, 4.0]);
        let res = lmi_residuals(&pair, &k, 5.0).unwrap();
        assert_relative_eq!(res.two_norm_block_lambda_min, 0.0, epsilon = 1e-10);
    }
}
