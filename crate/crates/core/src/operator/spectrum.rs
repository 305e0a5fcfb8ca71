use num_complex::Complex64;

use super::{BlockStructure, DenseOperator, Matrix};
use crate::error::{Error, Result};

/// Eigenvector condition estimates above this mark a spectrum as unreliable.
pub const CONDITION_LIMIT: f64 = 1e8;

/// Eigenvalues of a dense operator, repeated according to algebraic
/// multiplicity and sorted by real then imaginary part.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    eigenvalues: Vec<Complex64>,
    condition_estimate: f64,
    pub is_reliable: bool,
}

impl Spectrum {
    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Condition number of the (column-normalized) eigenvector matrix.
    /// Infinite for numerically defective operators.
    pub fn condition_estimate(&self) -> f64 {
        self.condition_estimate
    }

    pub fn nearest(&self, z: Complex64) -> Option<Complex64> {
        self.eigenvalues
            .iter()
            .copied()
            .min_by(|a, b| (a - z).norm().total_cmp(&(b - z).norm()))
    }

    /// Number of eigenvalues within `tol` of `center`.
    pub fn count_within(&self, center: Complex64, tol: f64) -> usize {
        self.eigenvalues
            .iter()
            .filter(|l| (*l - center).norm() <= tol)
            .count()
    }

    /// Splits the eigenvalues into the cluster within `tol` of `center` and
    /// the rest.
    pub fn split_cluster(&self, center: Complex64, tol: f64) -> (Vec<Complex64>, Vec<Complex64>) {
        self.eigenvalues
            .iter()
            .partition(|l| (*l - center).norm() <= tol)
    }

    /// Groups eigenvalues closer than `tol` (single linkage in sorted order)
    /// and returns `(representative, multiplicity)` pairs.
    pub fn grouped(&self, tol: f64) -> Vec<(Complex64, usize)> {
        let mut groups: Vec<(Complex64, usize)> = Vec::new();
        let mut used = vec![false; self.eigenvalues.len()];
        for i in 0..self.eigenvalues.len() {
            if used[i] {
                continue;
            }
            used[i] = true;
            let mut members = vec![self.eigenvalues[i]];
            let mut grew = true;
            while grew {
                grew = false;
                for j in 0..self.eigenvalues.len() {
                    if !used[j] && members.iter().any(|m| (m - self.eigenvalues[j]).norm() <= tol) {
                        used[j] = true;
                        members.push(self.eigenvalues[j]);
                        grew = true;
                    }
                }
            }
            let n = members.len();
            let mean = members.iter().sum::<Complex64>() / n as f64;
            groups.push((mean, n));
        }
        groups
    }
}

/// `1e-8 · ‖M‖`.
pub fn default_cluster_tol(m: &DenseOperator) -> f64 {
    1e-8 * m.norm()
}

/// Eigenvalues of `m` via a complex Schur decomposition (Hermitian blocks use
/// the symmetric eigensolver).
pub fn spectrum(m: &DenseOperator) -> Spectrum {
    let structure = BlockStructure::of(&[m.matrix()]);
    let mut eigenvalues = Vec::with_capacity(m.dim());
    let mut sigma_max = 0.0_f64;
    let mut sigma_min = f64::INFINITY;

    for k in 0..structure.blocks().len() {
        let block = structure.extract(m.matrix(), k);
        let (vals, smax, smin) = block_eigen(&block);
        eigenvalues.extend(vals);
        sigma_max = sigma_max.max(smax);
        sigma_min = sigma_min.min(smin);
    }

    eigenvalues.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let condition_estimate = if sigma_min > 0.0 && sigma_max.is_finite() {
        sigma_max / sigma_min
    } else {
        f64::INFINITY
    };
    Spectrum {
        eigenvalues,
        condition_estimate,
        is_reliable: condition_estimate <= CONDITION_LIMIT,
    }
}

/// Eigenvalues of one block plus the extreme singular values of its
/// normalized eigenvector matrix.
fn block_eigen(block: &Matrix) -> (Vec<Complex64>, f64, f64) {
    let n = block.nrows();
    if n == 1 {
        return (vec![block[(0, 0)]], 1.0, 1.0);
    }
    let fro = block.norm();
    if (block - block.adjoint()).norm() <= 1e-14 * fro {
        let vals = block
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .map(|&x| Complex64::new(x, 0.0))
            .collect();
        return (vals, 1.0, 1.0);
    }

    let (q, t) = block.clone().schur().unpack();
    let mut eigenvalues = Vec::with_capacity(n);
    let mut triangular = true;
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)].norm() > f64::EPSILON * fro {
            // 2x2 bump left on the diagonal: take its eigenvalues directly.
            let (a, b, c, d) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
            let half_tr = (a + d) * 0.5;
            let disc = (half_tr * half_tr - (a * d - b * c)).sqrt();
            eigenvalues.push(half_tr + disc);
            eigenvalues.push(half_tr - disc);
            triangular = false;
            i += 2;
        } else {
            eigenvalues.push(t[(i, i)]);
            i += 1;
        }
    }
    if !triangular {
        return (eigenvalues, f64::INFINITY, 0.0);
    }

    let y = triangular_eigenvectors(&t, fro);
    let mut v = q * y;
    for mut col in v.column_iter_mut() {
        let norm = col.norm();
        if !norm.is_finite() || norm == 0.0 {
            return (eigenvalues, f64::INFINITY, 0.0);
        }
        col /= Complex64::new(norm, 0.0);
    }
    let sv = v.singular_values();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    (eigenvalues, smax, smin)
}

/// Eigenvectors of an upper-triangular matrix by back substitution, with tiny
/// denominators clamped to `eps · ‖T‖` in the manner of LAPACK's `trevc`.
fn triangular_eigenvectors(t: &Matrix, scale: f64) -> Matrix {
    let n = t.nrows();
    let small = (f64::EPSILON * scale).max(f64::MIN_POSITIVE);
    let mut y = Matrix::zeros(n, n);
    for k in 0..n {
        let lambda = t[(k, k)];
        y[(k, k)] = Complex64::new(1.0, 0.0);
        for j in (0..k).rev() {
            let mut acc = Complex64::new(0.0, 0.0);
            for l in (j + 1)..=k {
                acc += t[(j, l)] * y[(l, k)];
            }
            let mut denom = t[(j, j)] - lambda;
            if denom.norm() < small {
                denom = Complex64::new(small, 0.0);
            }
            y[(j, k)] = -acc / denom;
        }
    }
    y
}

/// Distance from the cluster of eigenvalues within `cluster_tol` of `center`
/// to the rest of the spectrum; `+∞` when nothing else remains.
pub fn spectral_gap_at(m: &DenseOperator, center: Complex64, cluster_tol: f64) -> Result<f64> {
    gap_from_spectrum(&spectrum(m), center, cluster_tol)
}

pub(crate) fn gap_from_spectrum(spec: &Spectrum, center: Complex64, cluster_tol: f64) -> Result<f64> {
    let (cluster, rest) = spec.split_cluster(center, cluster_tol);
    if cluster.is_empty() {
        return Err(Error::NoEigenvalueNear {
            center,
            tol: cluster_tol,
        });
    }
    let gap = cluster
        .iter()
        .flat_map(|c| rest.iter().map(move |r| (c - r).norm()))
        .fold(f64::INFINITY, f64::min);
    Ok(gap)
}
