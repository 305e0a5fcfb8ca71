//! Large-coupling limits of `A + βB`.
//!
//! * [`effective_operator`]: the compression `PAP` on `ran(P)`.
//! * [`resolvent_error_curve`] / [`strong_error_curve`]: `e(β)` against the
//!   embedded limit resolvent, with a log–log rate fit.
//! * [`anticommutator_lower_bound_check`], [`uniform_resolvent_bound_scan`],
//!   [`cauchy_net_check`], [`pseudo_resolvent_check`]: hypothesis checks for
//!   bounded couplings.
//! * [`block_decompose`], [`schur_inverse`], [`neumann_s_inverse`]: the
//!   Schur-complement construction of the resolvent.

mod curves;
mod effective;
mod hypotheses;
mod schur;

pub(crate) use curves::error_curve_against;
pub use curves::{
    fit_rate, log_beta_grid, resolvent_error_curve, strong_error_curve, ConvergenceReport, ErrorMode,
};
pub use effective::{effective_operator, effective_operator_in_basis, EffectiveOperator};
pub use hypotheses::{
    anticommutator_lower_bound_check, cauchy_net_check, pseudo_resolvent_check,
    pseudo_resolvent_residual, uniform_resolvent_bound_scan, AnticommutatorReport, CauchyNetReport,
    UniformBoundScan, HERMITIAN_SLACK,
};
pub use schur::{
    block_decompose, block_decompose_with, neumann_s_inverse, schur_inverse, BlockDecomposition,
    DomainSplit,
};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::{checked_inverse, norm2, spectrum, BlockStructure, DenseOperator, Matrix};

/// `A + βB` split into the diagonal blocks that neither operator couples.
#[derive(Debug, Clone)]
pub(crate) struct Pencil {
    structure: BlockStructure,
    a: Vec<Matrix>,
    b: Vec<Matrix>,
}

impl Pencil {
    pub(crate) fn new(a: &DenseOperator, b: &DenseOperator) -> Result<Self> {
        a.check_same_dim(b)?;
        let structure = BlockStructure::of(&[a.matrix(), b.matrix()]);
        let n = structure.blocks().len();
        let a_blocks = (0..n).map(|k| structure.extract(a.matrix(), k)).collect();
        let b_blocks = (0..n).map(|k| structure.extract(b.matrix(), k)).collect();
        Ok(Self {
            structure,
            a: a_blocks,
            b: b_blocks,
        })
    }

    /// The whole space as one block.
    pub(crate) fn single_block(a: &DenseOperator, b: &DenseOperator) -> Result<Self> {
        a.check_same_dim(b)?;
        Ok(Self {
            structure: BlockStructure::single(a.dim()),
            a: vec![a.matrix().clone()],
            b: vec![b.matrix().clone()],
        })
    }

    pub(crate) fn split(&self, m: &Matrix) -> Vec<Matrix> {
        (0..self.a.len()).map(|k| self.structure.extract(m, k)).collect()
    }

    pub(crate) fn assemble(&self, pieces: &[Matrix]) -> Matrix {
        self.structure.assemble(pieces)
    }

    pub(crate) fn index_blocks(&self) -> &[Vec<usize>] {
        self.structure.blocks()
    }

    /// `(A + βB − z)⁻¹` per block.
    pub(crate) fn block_resolvents(&self, beta: f64, z: Complex64) -> Result<Vec<Matrix>> {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(a, b)| {
                let mut m = a + b * Complex64::new(beta, 0.0);
                for i in 0..m.nrows() {
                    m[(i, i)] -= z;
                }
                checked_inverse(&m).ok_or_else(|| {
                    let op = DenseOperator::from_matrix_unchecked(m.clone());
                    let nearest = spectrum(&op.shifted(-z)).nearest(z).unwrap_or(z);
                    Error::SingularShift { z, nearest }
                })
            })
            .collect()
    }

    /// `‖(A + βB − z)⁻¹ − T‖` for a `T` that respects the block structure,
    /// given as its blocks.
    pub(crate) fn resolvent_distance(&self, beta: f64, z: Complex64, target: &[Matrix]) -> Result<f64> {
        let blocks = self.block_resolvents(beta, z)?;
        Ok(blocks
            .iter()
            .zip(target)
            .map(|(r, t)| norm2(&(r - t)))
            .fold(0.0, f64::max))
    }
}

/// `M − zI` for a square matrix.
pub(crate) fn shift(m: &Matrix, z: Complex64) -> Matrix {
    let mut out = m.clone();
    for i in 0..out.nrows() {
        out[(i, i)] -= z;
    }
    out
}
