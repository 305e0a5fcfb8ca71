use num_complex::Complex64;

use super::shift;
use crate::error::{Error, Result};
use crate::operator::{checked_inverse, norm2, DenseOperator, Matrix, SubspaceBasis};
use crate::riesz::RieszProjection;

/// The compression `PAP` of `A` to `ran(P)`, written in a basis `V` of
/// `ran(P)`.
///
/// `coordinates` is the map `L = V⁺P`, which sends a vector to the
/// coordinates of its `P`-component, so that `LV = I` and `VL = P`.
#[derive(Debug, Clone)]
pub struct EffectiveOperator {
    basis: Matrix,
    coordinates: Matrix,
    compressed: Matrix,
}

impl EffectiveOperator {
    /// Assembles an effective operator from a basis, its coordinate map and
    /// the compressed matrix. Used for limits known in closed form.
    pub fn from_parts(basis: Matrix, coordinates: Matrix, compressed: Matrix) -> Result<Self> {
        let (n, r) = basis.shape();
        if coordinates.shape() != (r, n) {
            return Err(Error::DimensionMismatch {
                expected: r,
                found: coordinates.nrows(),
            });
        }
        if compressed.shape() != (r, r) {
            return Err(Error::DimensionMismatch {
                expected: r,
                found: compressed.nrows(),
            });
        }
        let defect = norm2(&(&coordinates * &basis - Matrix::identity(r, r)));
        if defect > 1e-8 {
            return Err(Error::InvalidParameter(format!(
                "coordinate map is not a left inverse of the basis (defect {defect:e})"
            )));
        }
        Ok(Self {
            basis,
            coordinates,
            compressed,
        })
    }

    /// `n × r` matrix whose columns span `ran(P)`.
    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    /// The `r × n` coordinate map `V⁺P`.
    pub fn coordinates(&self) -> &Matrix {
        &self.coordinates
    }

    /// The `r × r` matrix of the compression.
    pub fn compressed(&self) -> &Matrix {
        &self.compressed
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    /// `V · compressed · L`, which equals `PAP` on the full space.
    pub fn embedded(&self) -> DenseOperator {
        DenseOperator::from_matrix_unchecked(&self.basis * &self.compressed * &self.coordinates)
    }

    /// `V (compressed − z)⁻¹ L`, the full-space operator `P(PAP − z)⁻¹P`.
    pub fn embed_resolvent(&self, z: Complex64) -> Result<DenseOperator> {
        let inv = checked_inverse(&shift(&self.compressed, z)).ok_or(Error::EffectiveSingular { z })?;
        Ok(DenseOperator::from_matrix_unchecked(
            &self.basis * inv * &self.coordinates,
        ))
    }

    /// Eigenvalues of the compression.
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        if self.rank() == 0 {
            return Vec::new();
        }
        crate::operator::spectrum(&DenseOperator::from_matrix_unchecked(self.compressed.clone()))
            .eigenvalues()
            .to_vec()
    }
}

/// Compression of `a` to `ran(P)` in the orthonormal basis given by the
/// leading left singular vectors of `P`.
pub fn effective_operator(a: &DenseOperator, rp: &RieszProjection) -> Result<EffectiveOperator> {
    let basis = rp.range_basis()?;
    effective_operator_in_basis(a, rp, &basis)
}

/// Compression of `a` to `ran(P)` written in a caller-chosen basis of
/// `ran(P)`.
pub fn effective_operator_in_basis(
    a: &DenseOperator,
    rp: &RieszProjection,
    basis: &SubspaceBasis,
) -> Result<EffectiveOperator> {
    a.check_same_dim(&rp.p)?;
    if basis.ambient_dim() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: basis.ambient_dim(),
        });
    }
    let v = basis.columns();
    let p = rp.p.matrix();
    let leak = norm2(&(p * v - v));
    if leak > 1e-8 * (1.0 + norm2(v)) {
        return Err(Error::InvalidParameter(format!(
            "basis is not contained in ran(P) (‖PV − V‖ = {leak:e})"
        )));
    }
    let rank = rp.rank();
    if basis.rank() != rank {
        return Err(Error::RankDeficient {
            rank,
            columns: basis.rank(),
        });
    }
    let gram = v.adjoint() * v;
    let gram_inv = checked_inverse(&gram).ok_or(Error::RankDeficient {
        rank,
        columns: basis.rank(),
    })?;
    let coordinates = gram_inv * v.adjoint() * p;
    // PV = V, so the coordinates of PAPV are L·A·V.
    let compressed = &coordinates * a.matrix() * v;
    Ok(EffectiveOperator {
        basis: v.clone(),
        coordinates,
        compressed,
    })
}
