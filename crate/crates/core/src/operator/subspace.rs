use num_complex::Complex64;

use super::{DenseOperator, Matrix};
use crate::error::{Error, Result};

/// Columns spanning a subspace of `ℂⁿ`. The columns are linearly independent;
/// they need not be orthonormal.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    columns: Matrix,
}

impl SubspaceBasis {
    /// Validates that the columns are independent (condition below `1e12`).
    pub fn new(columns: Matrix) -> Result<Self> {
        let k = columns.ncols();
        if k > columns.nrows() {
            return Err(Error::RankDeficient {
                rank: columns.nrows(),
                columns: k,
            });
        }
        if k > 0 {
            let sv = columns.clone().singular_values();
            let smax = sv.iter().copied().fold(0.0, f64::max);
            let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
            if !(smax > 0.0) || smin < 1e-12 * smax {
                let rank = sv.iter().filter(|&&s| s >= 1e-12 * smax && s > 0.0).count();
                return Err(Error::RankDeficient { rank, columns: k });
            }
        }
        Ok(Self { columns })
    }

    pub(crate) fn from_orthonormal(columns: Matrix) -> Self {
        Self { columns }
    }

    /// Basis made of the given standard unit vectors.
    pub fn coordinate(ambient: usize, indices: &[usize]) -> Result<Self> {
        let mut m = Matrix::zeros(ambient, indices.len());
        for (c, &i) in indices.iter().enumerate() {
            if i >= ambient {
                return Err(Error::InvalidParameter(format!("index {i} outside dimension {ambient}")));
            }
            m[(i, c)] = Complex64::new(1.0, 0.0);
        }
        Self::new(m)
    }

    pub fn ambient_dim(&self) -> usize {
        self.columns.nrows()
    }

    pub fn rank(&self) -> usize {
        self.columns.ncols()
    }

    pub fn columns(&self) -> &Matrix {
        &self.columns
    }
}

/// Orthonormal basis for the range of `m`: eigenvectors of `m m*` whose
/// eigenvalue exceeds `threshold²`, largest first.
///
/// nalgebra's complex SVD loses accuracy in the singular vectors of
/// rank-deficient inputs (the recomposition error of a 4×4 oblique projector
/// reaches 1e-4), while the Hermitian eigensolver stays at rounding level.
pub(crate) fn orthonormal_range(m: &Matrix, threshold: f64) -> Matrix {
    let gram = m * m.adjoint();
    let gram = (&gram + gram.adjoint()).scale(0.5);
    let eig = gram.symmetric_eigen();
    let mut keep: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i] > threshold * threshold)
        .collect();
    keep.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    Matrix::from_fn(m.nrows(), keep.len(), |i, j| eig.eigenvectors[(i, keep[j])])
}

/// Complement of `span(D)` that is orthogonal to it in the graph inner
/// product `⟨x, y⟩ + ⟨Ax, Ay⟩`.
///
/// The complement is `{x : D*(I + A*A)x = 0}`, the Euclidean orthogonal
/// complement of `(I + A*A)D`. The returned columns are Euclidean-orthonormal.
pub fn graph_norm_complement(a: &DenseOperator, d: &SubspaceBasis) -> Result<SubspaceBasis> {
    let n = a.dim();
    if d.ambient_dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: d.ambient_dim(),
        });
    }
    // Re-validate: callers may have built the basis with `from_orthonormal`.
    let d = SubspaceBasis::new(d.columns().clone())?;
    let r = d.rank();
    if r == 0 {
        return Ok(SubspaceBasis::from_orthonormal(Matrix::identity(n, n)));
    }
    if r == n {
        return Ok(SubspaceBasis::from_orthonormal(Matrix::zeros(n, 0)));
    }
    let gram = Matrix::identity(n, n) + a.matrix().adjoint() * a.matrix();
    let image = gram * d.columns();
    let y = orthonormal_range(&image, 0.0);
    let y = y.columns(0, r).into_owned();
    let complement_projector = Matrix::identity(n, n) - &y * y.adjoint();
    let w = orthonormal_range(&complement_projector, 0.5);
    debug_assert_eq!(w.ncols(), n - r);
    Ok(SubspaceBasis::from_orthonormal(w))
}
