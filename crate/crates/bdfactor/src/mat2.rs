//! Small helpers around 2x2 matrices.
//!
//! All block operations in this crate act on 2x2 real matrices; nalgebra's
//! `Matrix2` supplies the arithmetic, and the helpers here add the guarded
//! adjugate inverse and entrywise comparisons used throughout.

use crate::error::{Error, Result};
pub use nalgebra::Matrix2;

/// 2x2 real matrix used for all block computations.
pub type Mat2 = Matrix2<f64>;

/// Relative determinant guard below which a 2x2 matrix is treated as
/// singular: a matrix is rejected when `|det| <= DET_GUARD * max_entry^2`,
/// so uniformly tiny but well-conditioned matrices (factor polynomials at
/// the origin decay geometrically) still invert cleanly.
pub const DET_GUARD: f64 = 1e-14;

/// Row-major construction shorthand.
pub fn mat2(m11: f64, m12: f64, m21: f64, m22: f64) -> Mat2 {
    Mat2::new(m11, m12, m21, m22)
}

/// Diagonal 2x2 matrix.
pub fn diag2(d1: f64, d2: f64) -> Mat2 {
    Mat2::new(d1, 0.0, 0.0, d2)
}

/// Adjugate inverse with the relative determinant guard; `None` when
/// singular.
pub fn try_inv2(m: &Mat2) -> Option<Mat2> {
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let scale = max_abs(m);
    if !(det.abs() > DET_GUARD * scale * scale) {
        return None;
    }
    Some(Mat2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]) / det)
}

/// Adjugate inverse that reports a singular-transform error naming `what`.
pub fn inv2(m: &Mat2, what: &str) -> Result<Mat2> {
    try_inv2(m).ok_or_else(|| Error::SingularTransform(format!("{what} is numerically singular")))
}

/// Largest absolute entry.
pub fn max_abs(m: &Mat2) -> f64 {
    m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Largest absolute entry of the difference.
pub fn max_abs_diff(a: &Mat2, b: &Mat2) -> f64 {
    max_abs(&(a - b))
}

/// Eigenvalues of a symmetric 2x2 matrix (ascending).
pub fn sym_eigenvalues(m: &Mat2) -> (f64, f64) {
    let tr = m[(0, 0)] + m[(1, 1)];
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    (tr / 2.0 - disc, tr / 2.0 + disc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adjugate_inverse_matches_identity() {
        let m = mat2(2.0, 1.0, -1.0, 0.5);
        let inv = try_inv2(&m).unwrap();
        assert!(max_abs_diff(&(m * inv), &Mat2::identity()) < 1e-15);
        assert!(max_abs_diff(&(inv * m), &Mat2::identity()) < 1e-15);
    }

    #[test]
    fn singular_guard_triggers() {
        let m = mat2(1.0, 2.0, 0.5, 1.0 + 1e-16);
        assert!(try_inv2(&m).is_none());
        assert!(inv2(&m, "test matrix").is_err());
    }

    #[test]
    fn symmetric_eigenvalues() {
        let m = mat2(2.0, 1.0, 1.0, 2.0);
        let (lo, hi) = sym_eigenvalues(&m);
        assert!((lo - 1.0).abs() < 1e-14);
        assert!((hi - 3.0).abs() < 1e-14);
    }
}
