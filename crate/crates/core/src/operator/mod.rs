//! Dense complex operators and the basic spectral toolkit built on them.
//!
//! Every operator in this crate is a square complex matrix standing in for a
//! (possibly truncated) Hilbert-space operator. At finite dimension all of
//! them are bounded and closed, so resolvents, norms and spectra are computed
//! directly with dense factorizations.

mod blocks;
mod norm;
mod resolvent;
mod spectrum;
mod subspace;

pub use norm::{op_norm, op_norm_power_iteration, SVD_DIM_LIMIT};
pub use resolvent::{resolvent, SINGULAR_RCOND};
pub use spectrum::{default_cluster_tol, spectral_gap_at, spectrum, Spectrum, CONDITION_LIMIT};
pub use subspace::{graph_norm_complement, SubspaceBasis};

pub(crate) use blocks::BlockStructure;
pub(crate) use norm::norm2;
pub(crate) use resolvent::{checked_inverse, inverse_with_rcond};
pub(crate) use spectrum::gap_from_spectrum;
pub(crate) use subspace::orthonormal_range;

use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix.
pub type Matrix = DMatrix<Complex64>;

/// Shorthand for a complex number with real part `re` and imaginary part `im`.
#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// A square complex matrix with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    m: Matrix,
}

impl DenseOperator {
    /// Validates shape and finiteness.
    pub fn new(m: Matrix) -> Result<Self> {
        if m.nrows() == 0 {
            return Err(Error::InvalidOperator("dimension must be at least 1".into()));
        }
        if m.nrows() != m.ncols() {
            return Err(Error::InvalidOperator(format!(
                "operator must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if let Some((idx, _)) = m.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            let n = m.nrows();
            return Err(Error::InvalidOperator(format!(
                "non-finite entry at ({}, {})",
                idx % n,
                idx / n
            )));
        }
        Ok(Self { m })
    }

    /// Wraps a matrix produced by arithmetic on valid operators.
    pub(crate) fn from_matrix_unchecked(m: Matrix) -> Self {
        debug_assert!(m.is_square());
        Self { m }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_matrix_unchecked(Matrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_matrix_unchecked(Matrix::zeros(dim, dim))
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Result<Self> {
        let n = diag.len();
        Self::new(Matrix::from_fn(n, n, |i, j| {
            if i == j {
                diag[i]
            } else {
                Complex64::new(0.0, 0.0)
            }
        }))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Result<Self> {
        let d: Vec<Complex64> = diag.iter().map(|&x| c64(x, 0.0)).collect();
        Self::from_diagonal(&d)
    }

    /// Builds an operator from real row-major rows.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidOperator("rows must form a square array".into()));
        }
        Self::new(Matrix::from_fn(n, n, |i, j| c64(rows[i][j], 0.0)))
    }

    /// Builds an operator from complex row-major rows.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidOperator("rows must form a square array".into()));
        }
        Self::new(Matrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> Complex64) -> Result<Self> {
        Self::new(Matrix::from_fn(dim, dim, f))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    #[inline]
    pub fn matrix(&self) -> &Matrix {
        &self.m
    }

    pub fn into_matrix(self) -> Matrix {
        self.m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.m[(i, j)]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_matrix_unchecked(self.m.adjoint())
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::from_matrix_unchecked(&self.m * c64(c, 0.0))
    }

    pub fn scale_complex(&self, c: Complex64) -> Self {
        Self::from_matrix_unchecked(&self.m * c)
    }

    /// `M − zI`.
    pub fn shifted(&self, z: Complex64) -> Self {
        let mut m = self.m.clone();
        for i in 0..m.nrows() {
            m[(i, i)] -= z;
        }
        Self::from_matrix_unchecked(m)
    }

    /// `self + beta * other`.
    pub fn plus_scaled(&self, beta: f64, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(Self::from_matrix_unchecked(&self.m + &other.m * c64(beta, 0.0)))
    }

    pub fn norm(&self) -> f64 {
        op_norm(self)
    }

    /// `‖M − M*‖`.
    pub fn hermitian_defect(&self) -> f64 {
        norm2(&(&self.m - self.m.adjoint()))
    }

    /// True when `‖M − M*‖ ≤ rel_tol · max(‖M‖, tiny)`.
    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        let defect = self.hermitian_defect();
        defect == 0.0 || defect <= rel_tol * self.norm()
    }

    pub fn apply(&self, v: &nalgebra::DVector<Complex64>) -> nalgebra::DVector<Complex64> {
        &self.m * v
    }

    pub(crate) fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }
}

impl<'a> Add<&'a DenseOperator> for &'a DenseOperator {
    type Output = DenseOperator;

    fn add(self, rhs: &'a DenseOperator) -> DenseOperator {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        DenseOperator::from_matrix_unchecked(&self.m + &rhs.m)
    }
}

impl<'a> Sub<&'a DenseOperator> for &'a DenseOperator {
    type Output = DenseOperator;

    fn sub(self, rhs: &'a DenseOperator) -> DenseOperator {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        DenseOperator::from_matrix_unchecked(&self.m - &rhs.m)
    }
}

impl<'a> Mul<&'a DenseOperator> for &'a DenseOperator {
    type Output = DenseOperator;

    fn mul(self, rhs: &'a DenseOperator) -> DenseOperator {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        DenseOperator::from_matrix_unchecked(&self.m * &rhs.m)
    }
}

impl TryFrom<Matrix> for DenseOperator {
    type Error = Error;

    fn try_from(m: Matrix) -> Result<Self> {
        Self::new(m)
    }
}
