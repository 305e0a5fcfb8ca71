use nalgebra::DVector;
use num_complex::Complex64;

use super::{DenseOperator, Matrix};

/// Largest dimension for which the spectral norm is taken from a full SVD.
/// Above it, power iteration on `M*M` is used.
pub const SVD_DIM_LIMIT: usize = 512;

const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITER: usize = 20_000;

/// Spectral norm (largest singular value).
pub fn op_norm(m: &DenseOperator) -> f64 {
    norm2(m.matrix())
}

pub(crate) fn norm2(m: &Matrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    if m.iter().all(|v| *v == Complex64::new(0.0, 0.0)) {
        return 0.0;
    }
    if m.nrows().max(m.ncols()) <= SVD_DIM_LIMIT {
        m.clone()
            .singular_values()
            .iter()
            .fold(0.0_f64, |acc, &s| acc.max(s))
    } else {
        power_iteration(m, POWER_TOL, POWER_MAX_ITER)
    }
}

/// Spectral norm by power iteration on `M*M`, stopping once the relative
/// change of the estimate drops below `rel_tol`.
pub fn op_norm_power_iteration(m: &DenseOperator, rel_tol: f64, max_iter: usize) -> f64 {
    power_iteration(m.matrix(), rel_tol, max_iter)
}

fn power_iteration(m: &Matrix, rel_tol: f64, max_iter: usize) -> f64 {
    let n = m.ncols();
    // Deterministic start with no special alignment to coordinate axes.
    let mut v = DVector::from_fn(n, |i, _| {
        let t = (i as f64 + 1.0) * 0.618_033_988_749_894_9;
        Complex64::new(1.0 + t.fract(), 0.5 * (t * 1.3).sin())
    });
    let norm = v.norm();
    v /= Complex64::new(norm, 0.0);

    let mut estimate = 0.0_f64;
    for _ in 0..max_iter {
        let w = m * &v;
        let u = m.adjoint() * &w;
        let u_norm = u.norm();
        if u_norm == 0.0 {
            return 0.0;
        }
        let next = u_norm.sqrt();
        v = u / Complex64::new(u_norm, 0.0);
        if (next - estimate).abs() <= rel_tol * next {
            // One Rayleigh step with the converged vector is sharper than the
            // growth-ratio estimate.
            return (m * &v).norm().max(next);
        }
        estimate = next;
    }
    estimate
}
