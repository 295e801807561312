//! The JSON run report emitted by `dissipator solve`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use dissipator::model::Classification;

/// Matrices up to this element count are embedded in the report; larger
/// ones are written to a sibling CSV file.
pub const INLINE_LIMIT: usize = 10_000;

#[derive(Debug, Serialize, Deserialize)]
pub struct InputDigest {
    pub n: usize,
    pub q: usize,
    pub norm_a_frobenius: f64,
    pub norm_b_frobenius: f64,
    pub checksum_a: String,
    pub checksum_b: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct KPayload {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inline: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Convergence {
    pub converged: bool,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_final: Option<f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ShiftedReport {
    pub delta: f64,
    pub classification_shifted: Classification,
    pub classification_original: Classification,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub toolkit_version: String,
    pub method: String,
    pub parameters: serde_json::Value,
    pub input: InputDigest,
    pub k: KPayload,
    pub norm_frobenius: f64,
    pub norm_spectral: f64,
    pub classification: Classification,
    /// Leading (rightmost) eigenvalues of Sym(A - BK), descending.
    pub rightmost: Vec<f64>,
    pub convergence: Convergence,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shifted: Option<ShiftedReport>,
    pub seed: u64,
    pub wall_time_seconds: f64,
}

/// Canonical checksum of a matrix: dimensions plus 17-significant-digit
/// entries, hashed with SHA-256.
pub fn matrix_checksum(m: &DMatrix<f64>) -> String {
    let mut hasher = Sha256::new();
    hasher.update(format!("{}x{};", m.nrows(), m.ncols()));
    for v in m.iter() {
        hasher.update(format!("{v:.16e};"));
    }
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checksum_is_stable_and_distinguishes() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0 + 1e-15]);
        assert_eq!(matrix_checksum(&a), matrix_checksum(&a));
        assert_ne!(matrix_checksum(&a), matrix_checksum(&b));
        // transposed dims hash differently even with equal entry streams
        let c = DMatrix::from_row_slice(1, 4, &[1.0, 3.0, 2.0, 4.0]);
        assert_ne!(matrix_checksum(&a), matrix_checksum(&c));
    }
}
