use num_complex::Complex64;

use super::{spectrum, DenseOperator, Matrix};
use crate::error::{Error, Result};

/// Shifts whose solve has a reciprocal condition estimate below this value
/// are rejected as singular.
pub const SINGULAR_RCOND: f64 = 1e-13;

fn one_norm(m: &Matrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// LU-based inverse together with the reciprocal 1-norm condition number
/// `1 / (‖M‖₁ ‖M⁻¹‖₁)`. `None` when the factorization hits an exact zero pivot.
pub(crate) fn inverse_with_rcond(m: &Matrix) -> Option<(Matrix, f64)> {
    let inv = m.clone().lu().try_inverse()?;
    if inv.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let denom = one_norm(m) * one_norm(&inv);
    let rcond = if denom > 0.0 { 1.0 / denom } else { 0.0 };
    Some((inv, rcond))
}

/// Inverse of a square matrix, or `None` when it is numerically singular.
pub(crate) fn checked_inverse(m: &Matrix) -> Option<Matrix> {
    match inverse_with_rcond(m) {
        Some((inv, rcond)) if rcond >= SINGULAR_RCOND => Some(inv),
        _ => None,
    }
}

/// `(M − zI)⁻¹` by a pivoted LU solve against the identity.
pub fn resolvent(m: &DenseOperator, z: Complex64) -> Result<DenseOperator> {
    let shifted = m.shifted(z);
    match checked_inverse(shifted.matrix()) {
        Some(inv) => Ok(DenseOperator::from_matrix_unchecked(inv)),
        None => {
            let nearest = spectrum(m).nearest(z).unwrap_or(z);
            Err(Error::SingularShift { z, nearest })
        }
    }
}
