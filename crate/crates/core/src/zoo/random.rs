//! Seeded random instances. The same seed gives bitwise identical matrices.

use std::collections::BTreeSet;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{graph_instance, HypothesisTag, ModelInstance};
use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::operator::{DenseOperator, Matrix};

fn complex_gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    })
}

fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    complex_gaussian(rng, n, n).qr().q()
}

fn hermitian_part(m: &Matrix) -> Matrix {
    (m + m.adjoint()).scale(0.5)
}

fn check_split(dim: usize, k: usize, what: &str) -> Result<()> {
    if dim < 2 || k == 0 || k >= dim {
        return Err(Error::InvalidParameter(format!(
            "{what} = {k} must lie in [1, {dim}) with dim >= 2"
        )));
    }
    Ok(())
}

/// Hermitian `A` with Gaussian entries and Hermitian `B` of the given rank,
/// with nonzero eigenvalues of magnitude in `[1, 2]` and random sign.
pub fn finite_rank_perturbation(dim: usize, rank: usize, seed: u64) -> Result<ModelInstance> {
    check_split(dim, rank, "rank")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = hermitian_part(&complex_gaussian(&mut rng, dim, dim));
    let v = random_unitary(&mut rng, dim);
    let lambda: Vec<f64> = (0..dim)
        .map(|k| {
            if k < rank {
                let mag = rng.random_range(1.0..=2.0);
                if rng.random_bool(0.5) {
                    mag
                } else {
                    -mag
                }
            } else {
                0.0
            }
        })
        .collect();
    let mut scaled = v.clone();
    for (j, &l) in lambda.iter().enumerate() {
        scaled.column_mut(j).scale_mut(l);
    }
    let b = hermitian_part(&(scaled * v.adjoint()));
    Ok(ModelInstance::new(
        "finite_rank_perturbation",
        "random Hermitian A, Hermitian B of fixed rank",
        DenseOperator::new(a)?,
        DenseOperator::new(b)?,
        &[
            HypothesisTag::SelfAdjoint,
            HypothesisTag::OrthogonalP,
            HypothesisTag::QuasinilpotentZero,
            HypothesisTag::RelBounded,
        ],
    )?
    .with_param("dim", dim)
    .with_param("rank", rank)
    .with_param("seed", seed))
}

/// Operator with a known isolated, semisimple eigenvalue and its exact
/// Riesz projector.
#[derive(Debug, Clone)]
pub struct PlantedEigenvalue {
    pub operator: DenseOperator,
    pub eigenvalue: Complex64,
    pub multiplicity: usize,
    pub projector: DenseOperator,
}

/// `S T S⁻¹` where `T = λ₀ I_m ⊕ U`, `U` upper triangular with diagonal at
/// distance at least 1 from `λ₀`, and `S` has condition number at most 4.
fn planted(rng: &mut ChaCha8Rng, dim: usize, mult: usize, lambda0: Complex64) -> PlantedEigenvalue {
    let mut t = Matrix::zeros(dim, dim);
    for i in 0..mult {
        t[(i, i)] = lambda0;
    }
    for i in mult..dim {
        let r = rng.random_range(1.0..=3.0);
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        t[(i, i)] = lambda0 + Complex64::from_polar(r, theta);
        for j in i + 1..dim {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            t[(i, j)] = Complex64::new(re, im).scale(0.3);
        }
    }
    let u1 = random_unitary(rng, dim);
    let u2 = random_unitary(rng, dim);
    let sigmas: Vec<f64> = (0..dim).map(|_| rng.random_range(0.5..=2.0)).collect();
    let mut s = u1.clone();
    let mut s_inv = u2.adjoint();
    for (k, &sig) in sigmas.iter().enumerate() {
        s.column_mut(k).scale_mut(sig);
        s_inv.column_mut(k).scale_mut(1.0 / sig);
    }
    let s = s * &u2;
    let s_inv = s_inv * u1.adjoint();
    let mut e = Matrix::zeros(dim, dim);
    for i in 0..mult {
        e[(i, i)] = Complex64::new(1.0, 0.0);
    }
    PlantedEigenvalue {
        operator: DenseOperator::from_matrix_unchecked(&s * t * &s_inv),
        eigenvalue: lambda0,
        multiplicity: mult,
        projector: DenseOperator::from_matrix_unchecked(&s * e * &s_inv),
    }
}

/// Random non-normal operator with a planted eigenvalue in the unit disk of
/// multiplicity `multiplicity`, isolated by a gap of at least 1.
pub fn planted_isolated_eigenvalue(dim: usize, multiplicity: usize, seed: u64) -> Result<PlantedEigenvalue> {
    if multiplicity == 0 || multiplicity > dim {
        return Err(Error::InvalidParameter(format!(
            "multiplicity {multiplicity} must lie in [1, {dim}]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = rng.random_range(0.0..1.0_f64).sqrt();
    let theta = rng.random_range(0.0..std::f64::consts::TAU);
    Ok(planted(&mut rng, dim, multiplicity, Complex64::from_polar(r, theta)))
}

/// Random complex `A` and non-normal `B` whose zero eigenvalue is semisimple
/// of multiplicity `kernel`, so `PB = 0` while `P` is oblique.
pub fn random_oblique_pair(dim: usize, kernel: usize, seed: u64) -> Result<ModelInstance> {
    check_split(dim, kernel, "kernel")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = complex_gaussian(&mut rng, dim, dim).scale(1.0 / (dim as f64).sqrt());
    let b = planted(&mut rng, dim, kernel, Complex64::new(0.0, 0.0)).operator;
    Ok(ModelInstance::new(
        "random_oblique_pair",
        "random complex A, non-normal B with semisimple kernel",
        DenseOperator::new(a)?,
        b,
        &[HypothesisTag::QuasinilpotentZero, HypothesisTag::RelBounded],
    )?
    .with_param("dim", dim)
    .with_param("kernel", kernel)
    .with_param("seed", seed))
}

/// Connected graph with symmetric weights and masses in `[0.5, 2]`, and a
/// connected cluster of `cluster_size` randomly chosen nodes.
pub fn random_symmetric_graph(nodes: usize, cluster_size: usize, seed: u64) -> Result<ModelInstance> {
    if nodes < 3 || cluster_size < 2 || cluster_size >= nodes {
        return Err(Error::InvalidParameter(format!(
            "need nodes >= 3 and cluster size in [2, nodes), got {nodes} and {cluster_size}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = DirectedGraph::new();
    for i in 0..nodes {
        g.add_node(format!("v{i}"), rng.random_range(0.5..=2.0))?;
    }
    let mut order: Vec<usize> = (0..nodes).collect();
    order.shuffle(&mut rng);
    let mut cluster = order[..cluster_size].to_vec();

    let mut pairs = BTreeSet::new();
    let mut connect = |g: &mut DirectedGraph, rng: &mut ChaCha8Rng, x: usize, y: usize| -> Result<()> {
        let key = (x.min(y), x.max(y));
        if x == y || !pairs.insert(key) {
            return Ok(());
        }
        let w = rng.random_range(0.5..=2.0);
        g.add_edge(x, y, w)?;
        g.add_edge(y, x, w)
    };
    for win in cluster.windows(2) {
        connect(&mut g, &mut rng, win[0], win[1])?;
    }
    // Attach every other node to a random earlier node so the graph is connected.
    for k in cluster_size..nodes {
        let parent = order[rng.random_range(0..k)];
        connect(&mut g, &mut rng, order[k], parent)?;
    }
    for x in 0..nodes {
        for y in x + 1..nodes {
            if rng.random_bool(0.15) {
                connect(&mut g, &mut rng, x, y)?;
            }
        }
    }
    cluster.sort_unstable();
    Ok(graph_instance("random_symmetric_graph", g, cluster)?
        .with_param("nodes", nodes)
        .with_param("cluster", cluster_size)
        .with_param("seed", seed))
}
