//! Riesz spectral projectors by contour quadrature.
//!
//! For an isolated eigenvalue `λ₀` of `B` the Riesz projector is
//!
//! ```text
//! P = 1/(2πi) ∮_Γ (ζ − B)⁻¹ dζ
//! ```
//!
//! over a positively oriented circle `Γ` that encloses `λ₀` and no other
//! eigenvalue. On the circle `ζ(θ) = λ₀ + r e^{iθ}` the integrand is periodic
//! and analytic, so the trapezoidal rule
//!
//! ```text
//! P ≈ (1/N) Σₖ r e^{iθₖ} (ζₖ − B)⁻¹,   θₖ = 2πk/N
//! ```
//!
//! converges geometrically in `N`. The node count is doubled (reusing the old
//! nodes) until two successive estimates agree to the requested tolerance.
//!
//! The quasi-nilpotent part of `B` at `λ₀` vanishes exactly when `PB = 0`
//! (for `λ₀ = 0`); `‖PB‖` is recorded as the diagnostic for it.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fit::{loglog_fit, LogLogFit};
use crate::operator::{
    inverse_with_rcond, norm2, orthonormal_range, resolvent, spectrum, BlockStructure, DenseOperator,
    Matrix, SubspaceBasis, SINGULAR_RCOND,
};

/// Singular values of a projector inside this band make its rank ambiguous.
const RANK_AMBIGUITY_BAND: (f64, f64) = (0.25, 0.75);

/// Number of contour points used for the commutation diagnostic.
const COMMUTE_SAMPLES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RieszOptions {
    /// Eigenvalues within this distance of the center form the cluster.
    /// Defaults to `1e-8 · ‖B‖`.
    pub cluster_tol: Option<f64>,
    /// Contour radius as a fraction of the spectral gap.
    pub radius_fraction: f64,
    pub initial_nodes: usize,
    pub max_nodes: usize,
}

impl Default for RieszOptions {
    fn default() -> Self {
        Self {
            cluster_tol: None,
            radius_fraction: 0.5,
            initial_nodes: 32,
            max_nodes: 1 << 14,
        }
    }
}

/// A Riesz projector together with its contour and diagnostics.
#[derive(Debug, Clone)]
pub struct RieszProjection {
    pub p: DenseOperator,
    /// Complementary projection `I − P`.
    pub q: DenseOperator,
    pub center: Complex64,
    pub radius: f64,
    /// Quadrature nodes used by the accepted estimate.
    pub nodes: usize,
    /// Tolerance requested at construction.
    pub tol: f64,
    /// Distance from the cluster to the rest of the spectrum (`+∞` if none).
    pub gap: f64,
    /// Algebraic multiplicity of the cluster at `center`.
    pub cluster_multiplicity: usize,
    /// `‖P² − P‖`.
    pub residual_idempotent: f64,
    /// Maximum of `‖P(B−ζ)⁻¹ − (B−ζ)⁻¹P‖` over sample points on the contour.
    pub residual_commute: f64,
    /// `‖PB‖`.
    pub quasinilpotent_norm: f64,
    /// `‖B‖`, kept for relative tests.
    pub operator_norm: f64,
}

impl RieszProjection {
    /// Numerical rank: number of singular values of `P` above `1/2`.
    pub fn rank(&self) -> usize {
        self.p
            .matrix()
            .clone()
            .singular_values()
            .iter()
            .filter(|&&s| s > 0.5)
            .count()
    }

    /// Orthonormal basis of `ran(P)` from the left singular vectors of `P`
    /// with singular value above `1/2`.
    pub fn range_basis(&self) -> Result<SubspaceBasis> {
        basis_of_projector(&self.p)
    }

    /// Orthonormal basis of `ran(Q)`.
    pub fn complement_range_basis(&self) -> Result<SubspaceBasis> {
        basis_of_projector(&self.q)
    }
}

fn basis_of_projector(p: &DenseOperator) -> Result<SubspaceBasis> {
    let sv = p.matrix().clone().singular_values();
    if let Some(&s) = sv
        .iter()
        .find(|&&s| s > RANK_AMBIGUITY_BAND.0 && s < RANK_AMBIGUITY_BAND.1)
    {
        return Err(Error::RankCollapse { singular_value: s });
    }
    Ok(SubspaceBasis::from_orthonormal(orthonormal_range(p.matrix(), 0.5)))
}

/// Riesz projector of `b` at `center` with default options.
pub fn riesz_projector(b: &DenseOperator, center: Complex64, tol: f64) -> Result<RieszProjection> {
    riesz_projector_with(b, center, tol, &RieszOptions::default())
}

pub fn riesz_projector_with(
    b: &DenseOperator,
    center: Complex64,
    tol: f64,
    opts: &RieszOptions,
) -> Result<RieszProjection> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("quadrature tolerance must be positive".into()));
    }
    if !(opts.radius_fraction > 0.0 && opts.radius_fraction < 1.0) {
        return Err(Error::InvalidParameter("radius fraction must lie in (0, 1)".into()));
    }
    let operator_norm = b.norm();
    if operator_norm == 0.0 {
        // The zero operator carries no coupling; there is nothing to isolate.
        return Err(Error::NotIsolated {
            center,
            gap: 0.0,
            guard: 0.0,
        });
    }
    let cluster_tol = opts.cluster_tol.unwrap_or(1e-8 * operator_norm);
    let spec = spectrum(b);
    let (cluster, _) = spec.split_cluster(center, cluster_tol);
    if cluster.is_empty() {
        return Err(Error::NoEigenvalueNear {
            center,
            tol: cluster_tol,
        });
    }
    let gap = crate::operator::gap_from_spectrum(&spec, center, cluster_tol)?;
    let guard = 10.0 * cluster_tol;
    if gap <= guard {
        return Err(Error::NotIsolated { center, gap, guard });
    }
    let radius = if gap.is_finite() {
        opts.radius_fraction * gap
    } else {
        // Whole spectrum sits in the cluster; any circle enclosing σ(B) works.
        let spread = b.shifted(center).norm();
        4.0 * opts.radius_fraction * if spread > 0.0 { spread } else { 1.0 }
    };

    let structure = BlockStructure::of(&[b.matrix()]);
    let blocks: Vec<Matrix> = (0..structure.blocks().len())
        .map(|k| structure.extract(b.matrix(), k))
        .collect();

    let mut nodes = opts.initial_nodes.max(4);
    let mut sums: Vec<Matrix> = blocks
        .iter()
        .map(|blk| node_sum(blk, center, radius, nodes, 0, 1))
        .collect::<Result<_>>()?;
    loop {
        let doubled = nodes * 2;
        let mut max_update = 0.0_f64;
        let mut next = Vec::with_capacity(blocks.len());
        for (blk, sum) in blocks.iter().zip(&sums) {
            let odd = node_sum(blk, center, radius, doubled, 1, 2)?;
            let new_sum = sum + odd;
            let update = new_sum.clone() / Complex64::new(doubled as f64, 0.0)
                - sum.clone() / Complex64::new(nodes as f64, 0.0);
            max_update = max_update.max(norm2(&update));
            next.push(new_sum);
        }
        sums = next;
        nodes = doubled;
        if max_update <= tol {
            break;
        }
        if nodes >= opts.max_nodes {
            return Err(Error::QuadratureStall {
                nodes,
                last_update: max_update,
                tol,
            });
        }
    }

    let p_blocks: Vec<Matrix> = sums
        .into_iter()
        .map(|s| s / Complex64::new(nodes as f64, 0.0))
        .collect();

    let mut residual_idempotent = 0.0_f64;
    let mut quasinilpotent_norm = 0.0_f64;
    let mut residual_commute = 0.0_f64;
    for (blk, pb) in blocks.iter().zip(&p_blocks) {
        residual_idempotent = residual_idempotent.max(norm2(&(pb * pb - pb)));
        quasinilpotent_norm = quasinilpotent_norm.max(norm2(&(pb * blk)));
        for j in 0..COMMUTE_SAMPLES {
            let theta = 2.0 * PI * (j as f64 + 0.5) / COMMUTE_SAMPLES as f64;
            let zeta = center + Complex64::from_polar(radius, theta);
            let r = shifted_inverse(blk, zeta)?;
            residual_commute = residual_commute.max(norm2(&(pb * &r - &r * pb)));
        }
    }

    let p = DenseOperator::from_matrix_unchecked(structure.assemble(&p_blocks));
    let q = &DenseOperator::identity(b.dim()) - &p;
    Ok(RieszProjection {
        p,
        q,
        center,
        radius,
        nodes,
        tol,
        gap,
        cluster_multiplicity: cluster.len(),
        residual_idempotent,
        residual_commute,
        quasinilpotent_norm,
        operator_norm,
    })
}

/// `(B − ζ)⁻¹` for a block.
fn shifted_inverse(blk: &Matrix, zeta: Complex64) -> Result<Matrix> {
    let mut m = blk.clone();
    for i in 0..m.nrows() {
        m[(i, i)] -= zeta;
    }
    match inverse_with_rcond(&m) {
        Some((inv, rcond)) if rcond >= SINGULAR_RCOND => Ok(inv),
        _ => Err(Error::SingularShift { z: zeta, nearest: zeta }),
    }
}

/// `Σ r e^{iθₖ} (ζₖ − B)⁻¹` over `k = first, first + stride, … < total`
/// with `θₖ = 2πk/total`.
fn node_sum(
    blk: &Matrix,
    center: Complex64,
    radius: f64,
    total: usize,
    first: usize,
    stride: usize,
) -> Result<Matrix> {
    let n = blk.nrows();
    let mut acc = Matrix::zeros(n, n);
    let mut k = first;
    while k < total {
        let theta = 2.0 * PI * k as f64 / total as f64;
        let step = Complex64::from_polar(radius, theta);
        // (ζ − B)⁻¹ = −(B − ζ)⁻¹
        let r = shifted_inverse(blk, center + step)?;
        acc -= r * step;
        k += stride;
    }
    Ok(acc)
}

/// True iff `‖PB‖ ≤ tol · ‖B‖`.
pub fn quasinilpotent_vanishes(rp: &RieszProjection, tol: f64) -> bool {
    rp.quasinilpotent_norm <= tol * rp.operator_norm
}

/// True iff `‖P − P*‖ ≤ tol · ‖P‖`.
pub fn projector_is_orthogonal(rp: &RieszProjection, tol: f64) -> bool {
    let defect = rp.p.hermitian_defect();
    defect <= tol * rp.p.norm()
}

/// `‖−z(βB − z)⁻¹ − P‖`, the distance of the scaled resolvent from the
/// projector it converges to when the quasi-nilpotent part vanishes.
pub fn scaled_resolvent_deviation(
    b: &DenseOperator,
    p: &DenseOperator,
    z: Complex64,
    beta: f64,
) -> Result<f64> {
    let r = resolvent(&b.scale(beta), z).map_err(|_| Error::ShiftInSpectrum { beta, z })?;
    Ok((&r.scale_complex(-z) - p).norm())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LimitVerdict {
    /// `PB = 0`: `(βB − z)⁻¹ → −P/z` at rate `1/β`.
    Convergent,
    /// `BP ≠ 0`: `‖(βB − z)⁻¹‖` grows; the fitted log–log growth exponent
    /// of the resolvent norm is attached.
    Divergent { growth_exponent: Option<f64> },
}

/// Samples of `(βB − z)⁻¹` against its limit `−P/z`.
#[derive(Debug, Clone)]
pub struct LimitCurve {
    pub z: Complex64,
    pub betas: Vec<f64>,
    /// `d(β) = ‖(βB − z)⁻¹ + P/z‖`.
    pub deviations: Vec<f64>,
    /// `n(β) = ‖(βB − z)⁻¹‖`.
    pub resolvent_norms: Vec<f64>,
    /// `sup β · d(β)` over the samples.
    pub sup_beta_deviation: f64,
    pub verdict: LimitVerdict,
    pub growth_fit: Option<LogLogFit>,
}

impl LimitCurve {
    /// `β · d(β)` per sample.
    pub fn scaled_deviations(&self) -> Vec<f64> {
        self.betas
            .iter()
            .zip(&self.deviations)
            .map(|(b, d)| b * d)
            .collect()
    }
}

/// Tolerance, relative to `‖B‖`, below which `‖PB‖` counts as zero.
pub const QUASINILPOTENT_TOL: f64 = 1e-8;

/// Samples `(βB − z)⁻¹` over `betas` and compares it with `−P/z`.
pub fn scaled_resolvent_limit_check(
    b: &DenseOperator,
    rp: &RieszProjection,
    z: Complex64,
    betas: &[f64],
) -> Result<LimitCurve> {
    if z.norm() == 0.0 {
        return Err(Error::InvalidParameter("z must be nonzero".into()));
    }
    validate_betas(betas)?;
    let min_beta = 2.0 * z.norm() / rp.gap;
    if betas[0] < min_beta {
        return Err(Error::InvalidParameter(format!(
            "smallest β = {} is below 2|z|/gap = {min_beta}",
            betas[0]
        )));
    }
    let p_over_z = rp.p.scale_complex(z.inv());
    let mut deviations = Vec::with_capacity(betas.len());
    let mut resolvent_norms = Vec::with_capacity(betas.len());
    for &beta in betas {
        let r = resolvent(&b.scale(beta), z).map_err(|_| Error::ShiftInSpectrum { beta, z })?;
        deviations.push((&r + &p_over_z).norm());
        resolvent_norms.push(r.norm());
    }
    let sup_beta_deviation = betas
        .iter()
        .zip(&deviations)
        .map(|(b, d)| b * d)
        .fold(0.0, f64::max);
    let (verdict, growth_fit) = if quasinilpotent_vanishes(rp, QUASINILPOTENT_TOL) {
        (LimitVerdict::Convergent, None)
    } else {
        let fit = loglog_fit(betas, &resolvent_norms);
        (
            LimitVerdict::Divergent {
                growth_exponent: fit.map(|f| f.slope),
            },
            fit,
        )
    };
    Ok(LimitCurve {
        z,
        betas: betas.to_vec(),
        deviations,
        resolvent_norms,
        sup_beta_deviation,
        verdict,
        growth_fit,
    })
}

pub(crate) fn validate_betas(betas: &[f64]) -> Result<()> {
    if betas.is_empty() {
        return Err(Error::InvalidParameter("β grid is empty".into()));
    }
    if betas.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
        return Err(Error::InvalidParameter("β values must be positive and finite".into()));
    }
    if betas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("β values must be strictly increasing".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{c64, op_norm};

    fn zero() -> Complex64 {
        c64(0.0, 0.0)
    }

    fn graph_generator(b23: f64, b32: f64) -> DenseOperator {
        DenseOperator::from_real_rows(&[&[0.0, 0.0, 0.0], &[0.0, b23, -b23], &[0.0, -b32, b32]]).unwrap()
    }

    #[test]
    fn diagonal_projector() {
        let b = DenseOperator::from_real_diagonal(&[0.0, 1.0, 2.0]).unwrap();
        let rp = riesz_projector(&b, zero(), 1e-12).unwrap();
        let expected = DenseOperator::from_real_diagonal(&[1.0, 0.0, 0.0]).unwrap();
        assert!(op_norm(&(&rp.p - &expected)) < 1e-12);
        assert_eq!(rp.rank(), 1);
        assert!(quasinilpotent_vanishes(&rp, 1e-10));
        assert!(projector_is_orthogonal(&rp, 1e-10));
        assert!(rp.radius < rp.gap);
    }

    #[test]
    fn nilpotent_projector_is_identity() {
        let b = DenseOperator::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        let rp = riesz_projector(&b, zero(), 1e-12).unwrap();
        assert!(op_norm(&(&rp.p - &DenseOperator::identity(2))) < 1e-12);
        assert!((rp.quasinilpotent_norm - 1.0).abs() < 1e-12);
        assert!(!quasinilpotent_vanishes(&rp, 1e-8));
    }

    #[test]
    fn oblique_graph_projector() {
        // P = e1 e1ᵀ + (1/3)(0,1,1)ᵀ(0,1,2)
        let b = graph_generator(2.0, 1.0);
        let rp = riesz_projector(&b, zero(), 1e-12).unwrap();
        let third = 1.0 / 3.0;
        let expected = DenseOperator::from_real_rows(&[
            &[1.0, 0.0, 0.0],
            &[0.0, third, 2.0 * third],
            &[0.0, third, 2.0 * third],
        ])
        .unwrap();
        assert!(op_norm(&(&rp.p - &expected)) < 1e-10);
        let pb = &rp.p * &b;
        assert!(pb.matrix().iter().all(|v| v.norm() < 1e-12));
        assert!(quasinilpotent_vanishes(&rp, 1e-10));
        assert!(!projector_is_orthogonal(&rp, 1e-6));
        // P − P* has entries ±1/3: operator norm 1/3, Frobenius norm √2/3.
        assert!((rp.p.hermitian_defect() - 1.0 / 3.0).abs() < 1e-10);
        let fro = (rp.p.matrix() - rp.p.matrix().adjoint()).norm();
        assert!((fro - 2f64.sqrt() / 3.0).abs() < 1e-10 && fro > 0.4);
    }

    #[test]
    fn hermitian_projector_is_orthogonal() {
        let b = DenseOperator::from_real_rows(&[&[1.0, 1.0, 0.0], &[1.0, 1.0, 0.0], &[0.0, 0.0, 3.0]]).unwrap();
        let rp = riesz_projector(&b, zero(), 1e-12).unwrap();
        assert!(projector_is_orthogonal(&rp, 1e-10));
        assert_eq!(rp.rank(), 1);
    }

    #[test]
    fn zero_operator_rejected() {
        assert!(matches!(
            riesz_projector(&DenseOperator::zeros(3), zero(), 1e-10),
            Err(Error::NotIsolated { .. })
        ));
    }

    #[test]
    fn gap_below_guard_rejected() {
        let b = DenseOperator::from_real_diagonal(&[0.0, 1e-9, 1.0]).unwrap();
        let opts = RieszOptions {
            cluster_tol: Some(1e-10),
            ..RieszOptions::default()
        };
        assert!(matches!(
            riesz_projector_with(&b, zero(), 1e-10, &opts),
            Err(Error::NotIsolated { .. })
        ));
    }

    #[test]
    fn stall_when_node_budget_is_tiny() {
        let b = DenseOperator::from_real_diagonal(&[0.0, 1.0]).unwrap();
        let opts = RieszOptions {
            initial_nodes: 4,
            max_nodes: 8,
            ..RieszOptions::default()
        };
        assert!(matches!(
            riesz_projector_with(&b, zero(), 1e-15, &opts),
            Err(Error::QuadratureStall { .. })
        ));
    }

    #[test]
    fn scaled_resolvent_diagonal_closed_form() {
        let b = DenseOperator::from_real_diagonal(&[0.0, 1.0]).unwrap();
        let rp = riesz_projector(&b, zero(), 1e-12).unwrap();
        let z = c64(0.0, 1.0);
        let curve = scaled_resolvent_limit_check(&b, &rp, z, &[100.0]).unwrap();
        let expected = 1.0 / (c64(100.0, 0.0) - z).norm();
        assert!((curve.deviations[0] - expected).abs() < 1e-14);
        assert!((curve.sup_beta_deviation - 100.0 * expected).abs() < 1e-12);
        assert_eq!(curve.verdict, LimitVerdict::Convergent);
    }

    #[test]
    fn scaled_resolvent_projection_input() {
        // B = P: d(β) = 1/|β − z|.
        let b = DenseOperator::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]]).unwrap();
        let rp = riesz_projector(&b, zero(), 1e-12).unwrap();
        let z = c64(0.5, 0.5);
        let betas = [10.0, 100.0, 1000.0];
        let curve = scaled_resolvent_limit_check(&b, &rp, z, &betas).unwrap();
        for (beta, d) in betas.iter().zip(&curve.deviations) {
            assert!((d - 1.0 / (c64(*beta, 0.0) - z).norm()).abs() < 1e-12);
        }
        assert!(curve.sup_beta_deviation < 1.1);
    }

    #[test]
    fn scaled_resolvent_nilpotent_grows_linearly() {
        let b = DenseOperator::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        let rp = riesz_projector(&b, zero(), 1e-12).unwrap();
        let betas: Vec<f64> = (0..13).map(|k| 10f64.powf(1.0 + 0.25 * k as f64)).collect();
        let curve = scaled_resolvent_limit_check(&b, &rp, c64(1.0, 0.0), &betas).unwrap();
        match curve.verdict {
            LimitVerdict::Divergent {
                growth_exponent: Some(g),
            } => assert!((g - 1.0).abs() < 0.01, "{g}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn limit_check_guards() {
        let b = DenseOperator::from_real_diagonal(&[0.0, 1.0]).unwrap();
        let rp = riesz_projector(&b, zero(), 1e-12).unwrap();
        assert!(scaled_resolvent_limit_check(&b, &rp, zero(), &[10.0]).is_err());
        assert!(scaled_resolvent_limit_check(&b, &rp, c64(1.0, 0.0), &[1.0]).is_err());
        assert!(scaled_resolvent_limit_check(&b, &rp, c64(1.0, 0.0), &[20.0, 10.0]).is_err());
    }
}
