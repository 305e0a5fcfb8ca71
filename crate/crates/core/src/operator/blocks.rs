//! Decoupled diagonal blocks of a sparse-patterned dense matrix.
//!
//! Index sets that never interact through a nonzero entry can be treated as
//! independent operators. Spectra, contour integrals and Riesz projectors of
//! the model operators (Pauli doublets, diagonal potentials) split into many
//! tiny blocks this way.

use num_complex::Complex64;

use super::Matrix;

#[derive(Debug, Clone)]
pub(crate) struct BlockStructure {
    dim: usize,
    blocks: Vec<Vec<usize>>,
}

impl BlockStructure {
    /// Connected components of the undirected pattern graph with an edge
    /// `i – j` whenever any of the given matrices has a nonzero `(i, j)` entry.
    pub(crate) fn of(matrices: &[&Matrix]) -> Self {
        let dim = matrices[0].nrows();
        let mut parent: Vec<usize> = (0..dim).collect();

        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }

        let zero = Complex64::new(0.0, 0.0);
        for m in matrices {
            for j in 0..dim {
                for i in 0..dim {
                    if i != j && m[(i, j)] != zero {
                        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                        if ri != rj {
                            parent[ri.max(rj)] = ri.min(rj);
                        }
                    }
                }
            }
        }

        let mut roots: Vec<usize> = Vec::new();
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for i in 0..dim {
            let r = find(&mut parent, i);
            match roots.iter().position(|&x| x == r) {
                Some(k) => blocks[k].push(i),
                None => {
                    roots.push(r);
                    blocks.push(vec![i]);
                }
            }
        }
        Self { dim, blocks }
    }

    pub(crate) fn single(dim: usize) -> Self {
        Self {
            dim,
            blocks: vec![(0..dim).collect()],
        }
    }

    pub(crate) fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub(crate) fn extract(&self, m: &Matrix, block: usize) -> Matrix {
        let idx = &self.blocks[block];
        Matrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
    }

    /// Assembles a block-diagonal matrix from per-block pieces.
    pub(crate) fn assemble(&self, pieces: &[Matrix]) -> Matrix {
        let mut out = Matrix::zeros(self.dim, self.dim);
        for (idx, piece) in self.blocks.iter().zip(pieces) {
            for (a, &i) in idx.iter().enumerate() {
                for (b, &j) in idx.iter().enumerate() {
                    out[(i, j)] = piece[(a, b)];
                }
            }
        }
        out
    }
}
