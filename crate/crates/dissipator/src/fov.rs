//! Field-of-values computations: numerical abscissa, boundary sampling over
//! a uniform angle grid, and flat-segment detection at the imaginary axis.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{verify_dissipating, Classification, ControlPair};
use crate::numerics::{skew_part, svd, sym_eig, sym_part};

/// One sampled boundary point: the supporting point of W(M) maximizing
/// Re(e^{i theta} z).
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct FovPoint {
    pub theta: f64,
    pub re: f64,
    pub im: f64,
}

/// Sampled boundary of the field of values.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct FovBoundary {
    pub points: Vec<FovPoint>,
    /// Rightmost extent, equal to the numerical abscissa.
    pub abscissa: f64,
    /// Half-length sigma of the vertical flat segment at the imaginary
    /// axis, when one exists.
    pub flat_segment: Option<f64>,
}

/// Numerical abscissa mu_2(M) = lambda_max(M + M^T) / 2, the rightmost
/// extent of W(M) for real M.
pub fn numerical_abscissa(m: &DMatrix<f64>) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::InvalidInput("matrix must be square".into()));
    }
    Ok(0.5 * sym_eig(&(m + m.transpose()))?.values[0])
}

/// Sample the boundary of W(M) at `num_angles` uniform angles (rounded up
/// to the next even count so theta = 0 and theta = pi are both on the grid).
///
/// For each theta the Hermitian part cos(theta) Sym(M) + i sin(theta)
/// Skew(M) is diagonalized through its real 2n x 2n symmetric embedding
/// [[cos S, -sin W], [sin W, cos S]]; the top eigenvector (u; v) gives the
/// unit vector x = u + iv and the boundary point z = x* M x.
pub fn fov_boundary(m: &DMatrix<f64>, num_angles: usize) -> Result<FovBoundary> {
    if !m.is_square() {
        return Err(Error::InvalidInput("matrix must be square".into()));
    }
    if num_angles < 8 {
        return Err(Error::InvalidInput(format!(
            "need at least 8 angles, got {num_angles}"
        )));
    }
    let num_angles = num_angles + num_angles % 2;
    let n = m.nrows();
    let s = sym_part(m);
    let w = skew_part(m);
    let mut points = Vec::with_capacity(num_angles);
    let mut embed = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..num_angles {
        let theta = 2.0 * std::f64::consts::PI * j as f64 / num_angles as f64;
        let (sin, cos) = theta.sin_cos();
        embed.view_mut((0, 0), (n, n)).copy_from(&(&s * cos));
        embed.view_mut((n, n), (n, n)).copy_from(&(&s * cos));
        embed.view_mut((0, n), (n, n)).copy_from(&(&w * -sin));
        embed.view_mut((n, 0), (n, n)).copy_from(&(&w * sin));
        let eig = sym_eig(&embed)?;
        let top = eig.vectors.column(0);
        let u = top.rows(0, n).clone_owned();
        let v = top.rows(n, n).clone_owned();
        // z = x* M x for x = u + iv, ||x|| = 1 by the embedding
        let mu = m * &u;
        let mv = m * &v;
        let re = u.dot(&mu) + v.dot(&mv);
        let im = u.dot(&mv) - v.dot(&mu);
        points.push(FovPoint { theta, re, im });
    }
    let abscissa = numerical_abscissa(m)?;
    Ok(FovBoundary {
        points,
        abscissa,
        flat_segment: None,
    })
}

impl FovBoundary {
    /// CSV with a `theta,re,im` header row, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta,re,im\n");
        for p in &self.points {
            out.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", p.theta, p.re, p.im));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("FovBoundary serializes")
    }
}

/// Half-length of the vertical flat segment of the boundary of W(A-BK) at
/// the imaginary axis: the spectral radius of Skew(A-BK) restricted to the
/// near-null eigenspace of Sym(A-BK). Requires K weakly dissipating with
/// zero multiplicity at least 2.
pub fn flat_segment(pair: &ControlPair, k: &DMatrix<f64>, tol: f64) -> Result<f64> {
    let verification = verify_dissipating(pair, k, tol)?;
    if verification.classification != Classification::Weak {
        return Err(Error::PreconditionViolated(format!(
            "flat segment needs a weakly dissipating K, got {}",
            verification.classification
        )));
    }
    let closed = pair.closed_loop(k)?;
    let eig = sym_eig(&closed)?;
    let null_idx: Vec<usize> = (0..pair.n())
        .filter(|&i| eig.values[i].abs() <= tol)
        .collect();
    if null_idx.len() < 2 {
        return Err(Error::NoFlatSegment(format!(
            "zero multiplicity {} < 2: the boundary is curved at the axis",
            null_idx.len()
        )));
    }
    let mut basis = DMatrix::zeros(pair.n(), null_idx.len());
    for (j, &i) in null_idx.iter().enumerate() {
        basis.set_column(j, &eig.vectors.column(i));
    }
    let restricted = basis.transpose() * skew_part(&closed) * &basis;
    // spectral radius of a skew-symmetric matrix equals its largest
    // singular value
    Ok(svd(&restricted)?.singular_values.max())
}
