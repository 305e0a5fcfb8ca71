use nalgebra::DVector;
use num_complex::Complex64;

use super::Pencil;
use crate::error::{Error, Result};
use crate::operator::{norm2, DenseOperator, Matrix};
use crate::riesz::{projector_is_orthogonal, RieszProjection};

/// Eigenvalues above `−HERMITIAN_SLACK · ‖H‖` count as nonnegative.
pub const HERMITIAN_SLACK: f64 = 1e-10;

const GAMMA_RANGE: f64 = 1e3;
const BISECTION_STEPS: usize = 60;
const ORTHOGONALITY_TOL: f64 = 1e-8;

/// Smallest `γ ≥ 0` with `H + γQ*Q ⪰ 0` for both `H = A*B + B*A` and the
/// adjoint form `H' = AB* + BA*`.
#[derive(Debug, Clone)]
pub struct AnticommutatorReport {
    /// `max(gamma_direct, gamma_adjoint)`; `+∞` when no γ works.
    pub gamma_star: f64,
    pub gamma_direct: f64,
    pub gamma_adjoint: f64,
    /// A vector violating the bound for every γ, when one exists.
    pub infeasible_direction: Option<DVector<Complex64>>,
    /// `H = A*B + B*A`.
    pub hermitianized_form: DenseOperator,
    /// `H' = AB* + BA*`.
    pub adjoint_form: DenseOperator,
}

impl AnticommutatorReport {
    pub fn is_feasible(&self) -> bool {
        self.gamma_star.is_finite()
    }
}

pub fn anticommutator_lower_bound_check(
    a: &DenseOperator,
    b: &DenseOperator,
    rp: &RieszProjection,
) -> Result<AnticommutatorReport> {
    a.check_same_dim(b)?;
    a.check_same_dim(&rp.p)?;
    if !projector_is_orthogonal(rp, ORTHOGONALITY_TOL) {
        return Err(Error::NonOrthogonalProjector {
            defect: rp.p.hermitian_defect(),
        });
    }
    let (am, bm) = (a.matrix(), b.matrix());
    let h = hermitian_part(&(am.adjoint() * bm + bm.adjoint() * am));
    let h_adj = hermitian_part(&(am * bm.adjoint() + bm * am.adjoint()));
    let v = rp.range_basis()?.columns().clone();
    let q = rp.q.matrix();
    let qq = hermitian_part(&(q.adjoint() * q));

    let (gamma_direct, witness_direct) = minimal_gamma(&h, &v, &qq);
    let (gamma_adjoint, witness_adjoint) = minimal_gamma(&h_adj, &v, &qq);
    let infeasible_direction = if gamma_direct.is_infinite() {
        witness_direct
    } else if gamma_adjoint.is_infinite() {
        witness_adjoint
    } else {
        None
    };
    Ok(AnticommutatorReport {
        gamma_star: gamma_direct.max(gamma_adjoint),
        gamma_direct,
        gamma_adjoint,
        infeasible_direction,
        hermitianized_form: DenseOperator::from_matrix_unchecked(h),
        adjoint_form: DenseOperator::from_matrix_unchecked(h_adj),
    })
}

fn hermitian_part(m: &Matrix) -> Matrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Smallest eigenvalue of a Hermitian matrix and a unit eigenvector for it.
fn lowest_eigenpair(m: &Matrix) -> (f64, DVector<Complex64>) {
    let eig = m.clone().symmetric_eigen();
    let (k, &lambda) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .expect("nonempty matrix");
    (lambda, eig.eigenvectors.column(k).into_owned())
}

fn minimal_gamma(h: &Matrix, v: &Matrix, qq: &Matrix) -> (f64, Option<DVector<Complex64>>) {
    let hn = norm2(h);
    if hn == 0.0 {
        return (0.0, None);
    }
    let slack = HERMITIAN_SLACK * hn;
    if v.ncols() > 0 {
        // On ran(P) the Q-term vanishes, so no γ can help there.
        let (lambda, w) = lowest_eigenpair(&(v.adjoint() * h * v));
        if lambda < -slack {
            return (f64::INFINITY, Some(v * w));
        }
    }
    let feasible = |gamma: f64| lowest_eigenpair(&(h + qq * Complex64::new(gamma, 0.0))).0 >= -slack;
    if feasible(0.0) {
        return (0.0, None);
    }
    let mut hi = GAMMA_RANGE * hn;
    if !feasible(hi) {
        let (_, w) = lowest_eigenpair(&(h + qq * Complex64::new(hi, 0.0)));
        return (f64::INFINITY, Some(w));
    }
    let mut lo = 0.0;
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (hi, None)
}

/// Norms of `Q(B + δ(A − z))⁻¹` and `(B + δ(A − z))⁻¹Q` over decreasing δ.
#[derive(Debug, Clone)]
pub struct UniformBoundScan {
    pub deltas: Vec<f64>,
    pub left_norms: Vec<f64>,
    pub right_norms: Vec<f64>,
    pub singular_deltas: Vec<f64>,
    pub max_norm: f64,
    /// Both sequences vary by less than 10% over the last decade of δ.
    pub bounded: bool,
}

pub fn uniform_resolvent_bound_scan(
    a: &DenseOperator,
    b: &DenseOperator,
    rp: &RieszProjection,
    z: Complex64,
    deltas: &[f64],
) -> Result<UniformBoundScan> {
    if deltas.is_empty() || deltas.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
        return Err(Error::InvalidParameter("δ values must be positive and finite".into()));
    }
    if deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("δ values must be strictly decreasing".into()));
    }
    let pencil = Pencil::new(a, b)?;
    let q_blocks = pencil.split(rp.q.matrix());
    let mut kept = Vec::new();
    let mut left_norms = Vec::new();
    let mut right_norms = Vec::new();
    let mut singular_deltas = Vec::new();
    for &delta in deltas {
        // B + δ(A − z) = δ(A + B/δ − z)
        match pencil.block_resolvents(1.0 / delta, z) {
            Ok(blocks) => {
                let scale = Complex64::new(1.0 / delta, 0.0);
                let (mut left, mut right) = (0.0_f64, 0.0_f64);
                for (r, q) in blocks.iter().zip(&q_blocks) {
                    let inv = r * scale;
                    left = left.max(norm2(&(q * &inv)));
                    right = right.max(norm2(&(&inv * q)));
                }
                kept.push(delta);
                left_norms.push(left);
                right_norms.push(right);
            }
            Err(Error::SingularShift { .. }) => singular_deltas.push(delta),
            Err(other) => return Err(other),
        }
    }
    let max_norm = left_norms
        .iter()
        .chain(&right_norms)
        .copied()
        .fold(0.0, f64::max);
    let bounded = match kept.last() {
        Some(&smallest) => {
            let cutoff = smallest * 10.0 * (1.0 + 1e-12);
            let window = |norms: &[f64]| -> bool {
                let vals: Vec<f64> = kept
                    .iter()
                    .zip(norms)
                    .filter(|(d, _)| **d <= cutoff)
                    .map(|(_, n)| *n)
                    .collect();
                let max = vals.iter().copied().fold(0.0, f64::max);
                let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
                max == 0.0 || (max - min) / max < 0.1
            };
            window(&left_norms) && window(&right_norms)
        }
        None => false,
    };
    Ok(UniformBoundScan {
        deltas: kept,
        left_norms,
        right_norms,
        singular_deltas,
        max_norm,
        bounded,
    })
}

/// Values of `‖R_β − R_β̃‖ · ββ̃ / |β − β̃|` per pair, with
/// `R_β = (A + βB − z)⁻¹`.
#[derive(Debug, Clone)]
pub struct CauchyNetReport {
    pub pairs: Vec<(f64, f64)>,
    pub values: Vec<f64>,
    pub max: f64,
}

pub fn cauchy_net_check(
    a: &DenseOperator,
    b: &DenseOperator,
    z: Complex64,
    beta_pairs: &[(f64, f64)],
) -> Result<CauchyNetReport> {
    let pencil = Pencil::new(a, b)?;
    let mut values = Vec::with_capacity(beta_pairs.len());
    for &(b1, b2) in beta_pairs {
        if !(b1 > 0.0 && b2 > 0.0) || b1 == b2 {
            return Err(Error::InvalidParameter(format!(
                "β pair ({b1}, {b2}) must be positive and distinct"
            )));
        }
        let r1 = pencil.block_resolvents(b1, z)?;
        let r2 = pencil.block_resolvents(b2, z)?;
        let diff = r1
            .iter()
            .zip(&r2)
            .map(|(x, y)| norm2(&(x - y)))
            .fold(0.0, f64::max);
        values.push(diff * b1 * b2 / (b1 - b2).abs());
    }
    let max = values.iter().copied().fold(0.0, f64::max);
    Ok(CauchyNetReport {
        pairs: beta_pairs.to_vec(),
        values,
        max,
    })
}

/// `‖T_z − T_y − (z − y) T_z T_y‖`.
pub fn pseudo_resolvent_residual(tz: &DenseOperator, ty: &DenseOperator, z: Complex64, y: Complex64) -> f64 {
    let (mz, my) = (tz.matrix(), ty.matrix());
    norm2(&(mz - my - mz * my * (z - y)))
}

/// First-resolvent-identity residual of `T_w = (A + βB − w)⁻¹` at a large β.
pub fn pseudo_resolvent_check(
    a: &DenseOperator,
    b: &DenseOperator,
    z: Complex64,
    y: Complex64,
    beta_large: f64,
) -> Result<f64> {
    if z == y {
        return Err(Error::InvalidParameter("z and y must differ".into()));
    }
    let pencil = Pencil::new(a, b)?;
    let tz = pencil.block_resolvents(beta_large, z)?;
    let ty = pencil.block_resolvents(beta_large, y)?;
    Ok(tz
        .iter()
        .zip(&ty)
        .map(|(mz, my)| norm2(&(mz - my - mz * my * (z - y))))
        .fold(0.0, f64::max))
}
