//! Block inverse of `A + βB − z` through a Schur complement.
//!
//! The domain is split as `D ⊕ D⊥` with `D = ran(P)` and `D⊥` its complement
//! in the graph inner product of `A` (or `ran(Q)`). The codomain is split as
//! `ran(P) ⊕ ran(Q)`. In these coordinates
//!
//! ```text
//! A + βB − z = [ A11  A12 ]      R = A11⁻¹,
//!              [ A21  A22 ]      S = A22 − A21 R A12,
//! ```
//!
//! and the inverse is
//!
//! ```text
//! T = [ R + R A12 S⁻¹ A21 R   −R A12 S⁻¹ ]
//!     [ −S⁻¹ A21 R               S⁻¹     ].
//! ```

use num_complex::Complex64;

use super::shift;
use crate::error::{Error, Result};
use crate::operator::{
    graph_norm_complement, inverse_with_rcond, norm2, DenseOperator, Matrix, SubspaceBasis, SINGULAR_RCOND,
};
use crate::riesz::RieszProjection;

/// How the complement of `ran(P)` in the domain is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DomainSplit {
    /// Complement orthogonal to `ran(P)` in the `A`-graph inner product.
    #[default]
    GraphNorm,
    /// `ran(Q)`; appropriate when `P` maps the domain of `A` into itself.
    Projector,
}

#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    pub a11: Matrix,
    pub a12: Matrix,
    pub a21: Matrix,
    pub a22: Matrix,
    /// `A11⁻¹`.
    pub r: Matrix,
    /// `A22 − A21 R A12`.
    pub s: Matrix,
    pub basis_d: SubspaceBasis,
    pub basis_dperp: SubspaceBasis,
    pub z: Complex64,
    pub beta: f64,
    pub split: DomainSplit,
    /// Orthonormal basis `U` of `ran(Q)`.
    range_q: Matrix,
    /// `[V⁺P; U*Q]`, coordinates in the codomain split.
    codomain_coords: Matrix,
    /// `U*BU`.
    b_q: Matrix,
    /// `U*QW`.
    q_w: Matrix,
    /// `U*Q(A − z)W − A21 R A12`.
    e: Matrix,
    shifted: Matrix,
}

impl BlockDecomposition {
    /// `A + βB − z` on the full space.
    pub fn operator(&self) -> DenseOperator {
        DenseOperator::from_matrix_unchecked(self.shifted.clone())
    }

    /// `‖T M − I‖` and `‖M T − I‖` for `M = A + βB − z`.
    pub fn inverse_residuals(&self, t: &DenseOperator) -> (f64, f64) {
        let n = self.shifted.nrows();
        let id = Matrix::identity(n, n);
        (
            norm2(&(t.matrix() * &self.shifted - &id)),
            norm2(&(&self.shifted * t.matrix() - &id)),
        )
    }

    /// Tolerance for [`inverse_residuals`](Self::inverse_residuals):
    /// `1e-8 · (1 + ‖T‖ ‖M‖)`.
    pub fn residual_tolerance(&self, t: &DenseOperator) -> f64 {
        1e-8 * (1.0 + t.norm() * norm2(&self.shifted))
    }

    /// Norm of the first Neumann term, `‖X‖ / β`.
    pub fn neumann_ratio(&self) -> Result<f64> {
        Ok(norm2(&self.neumann_iterate()?.0) / self.beta)
    }

    /// `X = Qm⁻¹ Bq⁻¹ E` and `Qm⁻¹ Bq⁻¹`.
    fn neumann_iterate(&self) -> Result<(Matrix, Matrix)> {
        let qm_inv = invert(&self.q_w).ok_or(Error::ComplementNotInvertible)?;
        let bq_inv = invert(&self.b_q).ok_or(Error::ComplementNotInvertible)?;
        let lead = qm_inv * bq_inv;
        Ok((&lead * &self.e, lead))
    }

    /// Orthonormal basis of `ran(Q)` used for the codomain split.
    pub fn range_q(&self) -> &Matrix {
        &self.range_q
    }
}

fn invert(m: &Matrix) -> Option<Matrix> {
    match inverse_with_rcond(m) {
        Some((inv, rc)) if rc >= SINGULAR_RCOND => Some(inv),
        _ => None,
    }
}

pub fn block_decompose(
    a: &DenseOperator,
    b: &DenseOperator,
    rp: &RieszProjection,
    z: Complex64,
    beta: f64,
) -> Result<BlockDecomposition> {
    block_decompose_with(a, b, rp, z, beta, DomainSplit::GraphNorm)
}

pub fn block_decompose_with(
    a: &DenseOperator,
    b: &DenseOperator,
    rp: &RieszProjection,
    z: Complex64,
    beta: f64,
    split: DomainSplit,
) -> Result<BlockDecomposition> {
    a.check_same_dim(b)?;
    a.check_same_dim(&rp.p)?;
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::InvalidParameter("β must be positive".into()));
    }
    let n = a.dim();
    let basis_d = rp.range_basis()?;
    let range_q = rp.complement_range_basis()?.columns().clone();
    let basis_dperp = match split {
        DomainSplit::GraphNorm => graph_norm_complement(a, &basis_d)?,
        DomainSplit::Projector => SubspaceBasis::new(range_q.clone())?,
    };
    let r_dim = basis_d.rank();
    if r_dim + basis_dperp.rank() != n || range_q.ncols() != basis_dperp.rank() {
        return Err(Error::ComplementNotInvertible);
    }

    let v = basis_d.columns();
    let w = basis_dperp.columns();
    let (pm, qm) = (rp.p.matrix(), rp.q.matrix());
    // V is orthonormal, so V⁺ = V*.
    let l = v.adjoint() * pm;
    let m = range_q.adjoint() * qm;

    let a_minus_z = shift(a.matrix(), z);
    let shifted = &a_minus_z + b.matrix() * Complex64::new(beta, 0.0);
    let a11 = &l * &shifted * v;
    let a12 = &l * &shifted * w;
    let a21 = &m * &shifted * v;
    let a22 = &m * &shifted * w;

    let r = invert(&a11).ok_or(Error::EffectiveSingular { z })?;
    let s = &a22 - &a21 * &r * &a12;
    let b_q = range_q.adjoint() * b.matrix() * &range_q;
    let q_w = &m * w;
    let e = &m * &a_minus_z * w - &a21 * &r * &a12;

    let mut codomain_coords = Matrix::zeros(n, n);
    codomain_coords.rows_mut(0, r_dim).copy_from(&l);
    codomain_coords.rows_mut(r_dim, n - r_dim).copy_from(&m);

    let bd = BlockDecomposition {
        a11,
        a12,
        a21,
        a22,
        r,
        s,
        basis_d,
        basis_dperp,
        z,
        beta,
        split,
        range_q,
        codomain_coords,
        b_q,
        q_w,
        e,
        shifted,
    };
    if bd.s.nrows() > 0 && invert(&bd.s).is_none() {
        return Err(Error::SchurSingular { beta });
    }
    Ok(bd)
}

/// The block inverse `T` mapped back to the full space.
pub fn schur_inverse(bd: &BlockDecomposition) -> Result<DenseOperator> {
    let s_inv = if bd.s.nrows() > 0 {
        invert(&bd.s).ok_or(Error::SchurSingular { beta: bd.beta })?
    } else {
        Matrix::zeros(0, 0)
    };
    let (r_dim, q_dim) = (bd.r.nrows(), s_inv.nrows());
    let r = &bd.r;
    let ra12_sinv = r * &bd.a12 * &s_inv;
    let sinv_a21r = &s_inv * &bd.a21 * r;
    let t11 = r + &ra12_sinv * &bd.a21 * r;

    let n = r_dim + q_dim;
    let mut t = Matrix::zeros(n, n);
    t.view_mut((0, 0), (r_dim, r_dim)).copy_from(&t11);
    t.view_mut((0, r_dim), (r_dim, q_dim)).copy_from(&(-ra12_sinv));
    t.view_mut((r_dim, 0), (q_dim, r_dim)).copy_from(&(-sinv_a21r));
    t.view_mut((r_dim, r_dim), (q_dim, q_dim)).copy_from(&s_inv);

    let mut domain = Matrix::zeros(n, n);
    domain.columns_mut(0, r_dim).copy_from(bd.basis_d.columns());
    domain.columns_mut(r_dim, q_dim).copy_from(bd.basis_dperp.columns());
    Ok(DenseOperator::from_matrix_unchecked(domain * t * &bd.codomain_coords))
}

/// Relative size of the Neumann term below which the series is truncated.
const NEUMANN_CUTOFF: f64 = 1e-14;

/// `S⁻¹ ≈ (1/β) Σₖ (−X/β)ᵏ Qm⁻¹ Bq⁻¹` with `X = Qm⁻¹ Bq⁻¹ E`, where
/// `S = β Bq Qm + E`. Returns the partial sum and the number of terms used.
pub fn neumann_s_inverse(bd: &BlockDecomposition, max_terms: usize) -> Result<(Matrix, usize)> {
    if max_terms == 0 {
        return Err(Error::InvalidParameter("max_terms must be at least 1".into()));
    }
    let (x, lead) = bd.neumann_iterate()?;
    let ratio = norm2(&x) / bd.beta;
    if ratio >= 1.0 {
        return Err(Error::SeriesDiverges { first_term_norm: ratio });
    }
    let step = x * Complex64::new(-1.0 / bd.beta, 0.0);
    let mut term = lead * Complex64::new(1.0 / bd.beta, 0.0);
    let mut sum = term.clone();
    let mut used = 1;
    while used < max_terms {
        term = &step * &term;
        sum += &term;
        used += 1;
        if norm2(&term) < NEUMANN_CUTOFF * norm2(&sum) {
            break;
        }
    }
    Ok((sum, used))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::effective_operator;
    use crate::operator::{c64, resolvent};
    use crate::riesz::riesz_projector;

    fn three_node() -> (DenseOperator, DenseOperator, RieszProjection) {
        let a = DenseOperator::from_real_rows(&[&[1.0, -1.0, 0.0], &[-1.0, 1.0, 0.0], &[0.0, 0.0, 0.0]]).unwrap();
        let b = DenseOperator::from_real_rows(&[&[0.0, 0.0, 0.0], &[0.0, 2.0, -2.0], &[0.0, -1.0, 1.0]]).unwrap();
        let rp = riesz_projector(&b, c64(0.0, 0.0), 1e-13).unwrap();
        (a, b, rp)
    }

    fn direct(a: &DenseOperator, b: &DenseOperator, beta: f64, z: Complex64) -> DenseOperator {
        resolvent(&a.plus_scaled(beta, b).unwrap(), z).unwrap()
    }

    #[test]
    fn diagonal_split_inverts_blocks() {
        let a = DenseOperator::from_real_diagonal(&[2.0, 3.0]).unwrap();
        let b = DenseOperator::from_real_diagonal(&[0.0, 1.0]).unwrap();
        let rp = riesz_projector(&b, c64(0.0, 0.0), 1e-13).unwrap();
        let z = c64(0.0, 1.0);
        let bd = block_decompose(&a, &b, &rp, z, 10.0).unwrap();
        assert!(bd.a12.norm() < 1e-14 && bd.a21.norm() < 1e-14);
        let t = schur_inverse(&bd).unwrap();
        let expected =
            DenseOperator::from_diagonal(&[c64(1.0, 0.0) / (c64(2.0, 0.0) - z), c64(1.0, 0.0) / (c64(13.0, 0.0) - z)])
                .unwrap();
        assert!((&t - &expected).norm() < 1e-14);
    }

    #[test]
    fn three_node_matches_direct_solve() {
        let (a, b, rp) = three_node();
        let z = c64(-1.0, 0.0);
        let bd = block_decompose(&a, &b, &rp, z, 1e3).unwrap();
        let t = schur_inverse(&bd).unwrap();
        let d = direct(&a, &b, 1e3, z);
        assert!((&t - &d).norm() <= 1e-8 * t.norm());
        let (left, right) = bd.inverse_residuals(&t);
        let tol = bd.residual_tolerance(&t);
        assert!(left <= tol && right <= tol);
    }

    #[test]
    fn block_inverse_converges_to_limit() {
        let (a, b, rp) = three_node();
        let z = c64(-1.0, 0.0);
        let limit = effective_operator(&a, &rp).unwrap().embed_resolvent(z).unwrap();
        let scaled: Vec<f64> = [1e2, 1e3, 1e4, 1e5]
            .iter()
            .map(|&beta| {
                let t = schur_inverse(&block_decompose(&a, &b, &rp, z, beta).unwrap()).unwrap();
                beta * (&t - &limit).norm()
            })
            .collect();
        let max = scaled.iter().copied().fold(0.0, f64::max);
        let min = scaled.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(max / min < 2.0, "{scaled:?}");
    }

    #[test]
    fn projector_split_matches_projector_algebra() {
        let (a, b, rp) = three_node();
        let z = c64(-1.0, 0.0);
        let beta = 50.0;
        let bd = block_decompose_with(&a, &b, &rp, z, beta, DomainSplit::Projector).unwrap();
        let v = bd.basis_d.columns().clone();
        let u = bd.range_q().clone();
        let (p, q) = (rp.p.matrix(), rp.q.matrix());
        let am = a.matrix();
        let l = v.adjoint() * p;
        let m = u.adjoint() * q;
        let zc = Complex64::new(1.0, 0.0) * z;
        let expect11 = &l * (p * am * p) * &v - Matrix::identity(2, 2) * zc;
        let expect12 = &l * (p * am * q) * &u;
        let expect21 = &m * (q * am * p) * &v;
        let expect22 = &m * (q * am * q + q * b.matrix() * q * Complex64::new(beta, 0.0)) * &u
            - Matrix::identity(1, 1) * zc;
        assert!((&bd.a11 - expect11).norm() < 1e-12);
        assert!((&bd.a12 - expect12).norm() < 1e-12);
        assert!((&bd.a21 - expect21).norm() < 1e-12);
        assert!((&bd.a22 - expect22).norm() < 1e-12);
        let t = schur_inverse(&bd).unwrap();
        assert!((&t - &direct(&a, &b, beta, z)).norm() <= 1e-8 * t.norm());
    }

    #[test]
    fn neumann_agrees_with_direct_inverse() {
        let (a, b, rp) = three_node();
        let bd = block_decompose(&a, &b, &rp, c64(-1.0, 0.0), 1e4).unwrap();
        let direct_inv = bd.s.clone().try_inverse().unwrap();
        let (series, used) = neumann_s_inverse(&bd, 3).unwrap();
        assert_eq!(used, 3);
        assert!((&series - &direct_inv).norm() <= 1e-12 * direct_inv.norm());
        let (full, _) = neumann_s_inverse(&bd, 64).unwrap();
        assert!((&full - &direct_inv).norm() <= 1e-10);
    }

    #[test]
    fn neumann_closed_form_without_a() {
        // A = 0: E = −z Qm, so S⁻¹ = Qm⁻¹ (β Bq − z)⁻¹.
        let (_, b, rp) = three_node();
        let a = DenseOperator::zeros(3);
        let z = c64(-1.0, 0.0);
        let beta = 100.0;
        let bd = block_decompose(&a, &b, &rp, z, beta).unwrap();
        let closed = bd.q_w.clone().try_inverse().unwrap()
            * shift(&(&bd.b_q * Complex64::new(beta, 0.0)), z).try_inverse().unwrap();
        let (series, _) = neumann_s_inverse(&bd, 200).unwrap();
        assert!((&series - &closed).norm() <= 1e-12 * closed.norm());
    }

    #[test]
    fn neumann_first_term_scales_inversely_with_beta() {
        // PB = 0 removes β from A11, A12 and A21, so ‖X‖/β = (3/7)/β here and
        // the series diverges below β = 3/7.
        let (a, b, rp) = three_node();
        let z = c64(-1.0, 0.0);
        for beta in [1.0, 10.0, 1e3] {
            let bd = block_decompose(&a, &b, &rp, z, beta).unwrap();
            assert!((bd.neumann_ratio().unwrap() * beta - 3.0 / 7.0).abs() < 1e-12);
        }
        let bd = block_decompose(&a, &b, &rp, z, 0.25).unwrap();
        assert!(matches!(neumann_s_inverse(&bd, 10), Err(Error::SeriesDiverges { .. })));
        assert!(neumann_s_inverse(&block_decompose(&a, &b, &rp, z, 0.5).unwrap(), 10).is_ok());
    }
}
