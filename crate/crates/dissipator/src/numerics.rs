//! Dense symmetric eigenvalue, SVD and linear-solve kernels.
//!
//! Every routine here is deterministic: identical input produces identical
//! output, including eigenvector signs. All other modules build on these
//! contracts instead of calling the backend directly.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Eigenvalue counts of a symmetric matrix relative to a zero threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct Inertia {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

/// Zero threshold used when classifying eigenvalues or singular values:
/// a value `x` counts as zero when `|x| <= max(atol, rtol * max_i |x_i|)`.
#[derive(Debug, Clone, Copy)]
pub struct ZeroThresholds {
    pub atol: f64,
    pub rtol: f64,
}

impl Default for ZeroThresholds {
    fn default() -> Self {
        Self {
            atol: 1e-10,
            rtol: 1e-8,
        }
    }
}

impl ZeroThresholds {
    /// Effective threshold for a spectrum with largest magnitude `max_abs`.
    pub fn cutoff(&self, max_abs: f64) -> f64 {
        self.atol.max(self.rtol * max_abs)
    }
}

/// Full spectrum of a symmetric matrix, eigenvalues sorted descending,
/// eigenvector columns matching the value order.
#[derive(Debug, Clone)]
pub struct SymEigDecomposition {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl SymEigDecomposition {
    /// Signature of the spectrum under the given thresholds.
    pub fn inertia(&self, thresholds: ZeroThresholds) -> Inertia {
        let max_abs = self.values.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        let cutoff = thresholds.cutoff(max_abs);
        let mut inertia = Inertia {
            positive: 0,
            negative: 0,
            zero: 0,
        };
        for &v in self.values.iter() {
            if v.abs() <= cutoff {
                inertia.zero += 1;
            } else if v > 0.0 {
                inertia.positive += 1;
            } else {
                inertia.negative += 1;
            }
        }
        inertia
    }
}

/// Thin SVD with singular values sorted descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub v_t: DMatrix<f64>,
}

fn check_finite(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "{what} has non-finite entries"
        )))
    }
}

/// Symmetric part (M + M^T)/2.
pub fn sym_part(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Skew-symmetric part (M - M^T)/2.
pub fn skew_part(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m - m.transpose()) * 0.5
}

/// Fix eigenvector signs so the largest-magnitude component of each column
/// is positive; ties broken by the first such component.
fn fix_column_signs(vectors: &mut DMatrix<f64>) {
    for mut col in vectors.column_iter_mut() {
        let mut best = 0usize;
        let mut best_abs = -1.0f64;
        for (i, &x) in col.iter().enumerate() {
            if x.abs() > best_abs {
                best_abs = x.abs();
                best = i;
            }
        }
        if col[best] < 0.0 {
            col.neg_mut();
        }
    }
}

/// Spectrum of a symmetric matrix, descending, with the sign convention above.
///
/// The input is symmetrized as (M + M^T)/2 before factorization; callers may
/// pass matrices that are symmetric only up to rounding.
pub fn sym_eig(m: &DMatrix<f64>) -> Result<SymEigDecomposition> {
    check_finite(m, "matrix")?;
    if !m.is_square() {
        return Err(Error::InvalidInput(format!(
            "expected square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let sym = sym_part(m);
    let eig = sym.symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (j, &i) in order.iter().enumerate() {
        vectors.set_column(j, &eig.eigenvectors.column(i));
    }
    fix_column_signs(&mut vectors);
    Ok(SymEigDecomposition { values, vectors })
}

/// Generalized symmetric-definite eigenproblem M v = lambda D v.
///
/// D must be symmetric positive definite; the problem is reduced to a
/// standard one through the Cholesky factor of D. The returned vectors are
/// D-orthonormal and the values are sorted descending.
pub fn gen_sym_eig(m: &DMatrix<f64>, d: &DMatrix<f64>) -> Result<SymEigDecomposition> {
    check_finite(m, "matrix")?;
    check_finite(d, "pencil matrix")?;
    if m.nrows() != d.nrows() || m.ncols() != d.ncols() {
        return Err(Error::InvalidInput(format!(
            "pencil dimension mismatch: {}x{} vs {}x{}",
            m.nrows(),
            m.ncols(),
            d.nrows(),
            d.ncols()
        )));
    }
    let chol = sym_part(d)
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("pencil matrix D".into()))?;
    let l = chol.l();
    // W = L^{-1} M L^{-T}, computed by two triangular solves.
    let y = l
        .solve_lower_triangular(&sym_part(m))
        .ok_or_else(|| Error::NotPositiveDefinite("Cholesky factor is singular".into()))?;
    let w = l
        .solve_lower_triangular(&y.transpose())
        .ok_or_else(|| Error::NotPositiveDefinite("Cholesky factor is singular".into()))?
        .transpose();
    let inner = sym_eig(&w)?;
    // Map vectors back: v = L^{-T} u. They are D-orthonormal by construction.
    let mut vectors = l
        .transpose()
        .solve_upper_triangular(&inner.vectors)
        .ok_or_else(|| Error::NotPositiveDefinite("Cholesky factor is singular".into()))?;
    fix_column_signs(&mut vectors);
    Ok(SymEigDecomposition {
        values: inner.values,
        vectors,
    })
}

/// Thin SVD, singular values descending.
pub fn svd(m: &DMatrix<f64>) -> Result<Svd> {
    check_finite(m, "matrix")?;
    let decomp = m.clone().svd(true, true);
    Ok(Svd {
        u: decomp.u.expect("SVD with compute_u"),
        singular_values: decomp.singular_values,
        v_t: decomp.v_t.expect("SVD with compute_v"),
    })
}

/// Numerical rank: number of singular values above the threshold cutoff.
pub fn rank(m: &DMatrix<f64>, thresholds: ZeroThresholds) -> Result<usize> {
    let sv = svd(m)?.singular_values;
    let cutoff = thresholds.cutoff(sv.max());
    Ok(sv.iter().filter(|&&s| s > cutoff).count())
}

/// Largest singular value (matrix 2-norm).
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Solve M Z = RHS by partially pivoted LU with a residual acceptance test.
pub fn solve_linear(m: &DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_finite(m, "matrix")?;
    check_finite(rhs, "right-hand side")?;
    if !m.is_square() {
        return Err(Error::InvalidInput(format!(
            "coefficient matrix must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() != rhs.nrows() {
        return Err(Error::InvalidInput(format!(
            "dimension mismatch: matrix is {}x{} but rhs has {} rows",
            m.nrows(),
            m.ncols(),
            rhs.nrows()
        )));
    }
    let condition_estimate = |m: &DMatrix<f64>| {
        let sv = m.clone().svd(false, false).singular_values;
        let smin = sv.min();
        if smin > 0.0 {
            sv.max() / smin
        } else {
            f64::INFINITY
        }
    };
    let lu = m.clone().lu();
    let z = lu.solve(rhs).ok_or_else(|| Error::SingularSystem {
        context: "LU solve failed".into(),
        condition: condition_estimate(m),
    })?;
    let residual = (m * &z - rhs).norm();
    let bound = 1e-10 * m.norm() * z.norm().max(1.0);
    if residual > bound.max(1e-10 * rhs.norm()) {
        return Err(Error::SingularSystem {
            context: format!("solution residual {residual:.3e} exceeds tolerance"),
            condition: condition_estimate(m),
        });
    }
    Ok(z)
}
