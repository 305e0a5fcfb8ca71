//! Collapse of a strongly coupled cluster `W` into a single supernode.
//!
//! Scaling the weights inside `W` by β splits the Laplacian as `A + βB`,
//! with `B` the Laplacian of the edges inside `W` and `A` the rest. As
//! β → ∞ the resolvent converges to the compression of `A` onto the kernel
//! side of the Riesz projector of `B` at zero. When the `W`-subgraph is
//! balanced (Kirchhoff), that compression is the Laplacian of the reduced
//! graph in which `W` becomes one node `w` with
//!
//! ```text
//! m(w) = Σ_{x∈W} m(x),   a(w, y) = Σ_{x∈W} a(x, y),   a(y, w) = Σ_{x∈W} a(y, x).
//! ```

use std::collections::HashMap;

use num_complex::Complex64;

use super::DirectedGraph;
use crate::coupling::{
    effective_operator_in_basis, resolvent_error_curve, ConvergenceReport, EffectiveOperator,
};
use crate::error::{Error, Result};
use crate::operator::{checked_inverse, norm2, spectrum, DenseOperator, Matrix, SubspaceBasis};
use crate::riesz::{riesz_projector, RieszProjection};

/// Per-node Kirchhoff deficits up to this size (relative to the largest
/// cluster weight) count as balanced.
pub const KIRCHHOFF_TOL: f64 = 1e-12;

const PROJECTOR_TOL: f64 = 1e-12;

/// How the value at the supernode is read off a function on `W`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SupernodeConvention {
    /// `(1/m(w)) Σ_{x∈W} m(x) f(x)`.
    #[default]
    MassWeighted,
    /// `(1/|W|) Σ_{x∈W} f(x)`; agrees with the default when `m ≡ 1` on `W`.
    Unweighted,
}

/// The example graph on nodes `1, 2, 3` with `a(1,2) = a(2,1) = a`,
/// `a(2,3) = b23`, `a(3,2) = b32` and unit masses. Its cluster is `{2, 3}`.
pub fn three_node_example(a: f64, b23: f64, b32: f64) -> DirectedGraph {
    let mut g = DirectedGraph::new();
    for id in ["1", "2", "3"] {
        g.add_node(id, 1.0).expect("valid node");
    }
    g.add_edge(0, 1, a).expect("valid edge");
    g.add_edge(1, 0, a).expect("valid edge");
    g.add_edge(1, 2, b23).expect("valid edge");
    g.add_edge(2, 1, b32).expect("valid edge");
    g
}

/// Validates a cluster and returns its nodes in increasing order.
fn validated_cluster(g: &DirectedGraph, w: &[usize]) -> Result<Vec<usize>> {
    let n = g.node_count();
    let mut sorted = w.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != w.len() {
        return Err(Error::InvalidCluster("cluster lists a node twice".into()));
    }
    if sorted.is_empty() {
        return Err(Error::InvalidCluster("cluster is empty".into()));
    }
    if sorted.len() >= n {
        return Err(Error::InvalidCluster("cluster must be a proper subset of the nodes".into()));
    }
    if let Some(&x) = sorted.iter().find(|&&x| x >= n) {
        return Err(Error::InvalidCluster(format!("node index {x} out of range")));
    }
    Ok(sorted)
}

fn membership(n: usize, w: &[usize]) -> Vec<bool> {
    let mut inside = vec![false; n];
    for &x in w {
        inside[x] = true;
    }
    inside
}

/// `(A, B)` with `B` the Laplacian of the edges inside `W` and `A` the
/// Laplacian of all other edges, so that `A + B` is the full Laplacian.
pub fn coupling_split(g: &DirectedGraph, w: &[usize]) -> Result<(DenseOperator, DenseOperator)> {
    let w = validated_cluster(g, w)?;
    let inside = membership(g.node_count(), &w);
    let a = g.laplacian_filtered(|e| !(inside[e.src] && inside[e.dst]));
    let b = g.laplacian_filtered(|e| inside[e.src] && inside[e.dst]);
    Ok((DenseOperator::new(a)?, DenseOperator::new(b)?))
}

/// Riesz projector at zero of the cluster Laplacian `B`, computed by
/// contour quadrature.
pub fn cluster_projector(g: &DirectedGraph, w: &[usize]) -> Result<RieszProjection> {
    let w = validated_cluster(g, w)?;
    let (_, b) = coupling_split(g, &w)?;
    let local = g.induced_subgraph(&w)?.laplacian()?;
    let tol = 1e-8 * local.norm().max(f64::MIN_POSITIVE);
    let multiplicity = spectrum(&local).count_within(Complex64::new(0.0, 0.0), tol);
    if multiplicity > 1 {
        return Err(Error::ClusterDisconnected { multiplicity });
    }
    riesz_projector(&b, Complex64::new(0.0, 0.0), PROJECTOR_TOL)
}

/// The averaging projector `J J♯`: identity off `W`, and on `W` the map
/// `f ↦ χ_W · ⟨value at w⟩` for the chosen convention.
pub fn mass_weighted_projector(
    g: &DirectedGraph,
    w: &[usize],
    convention: SupernodeConvention,
) -> Result<DenseOperator> {
    let reduced = reduce_graph(g, w, convention)?;
    Ok(DenseOperator::from_matrix_unchecked(
        reduced.isometry() * reduced.coisometry(),
    ))
}

/// A graph with the cluster `W` collapsed to a supernode, plus the maps
/// between functions on the two node sets.
#[derive(Debug, Clone)]
pub struct ReducedGraph {
    pub graph: DirectedGraph,
    /// Index of the supernode in `graph`.
    pub supernode: usize,
    /// Cluster nodes in the original graph, increasing.
    pub cluster: Vec<usize>,
    pub convention: SupernodeConvention,
    /// Reduced index of every original node.
    pub node_map: Vec<usize>,
    isometry: Matrix,
    coisometry: Matrix,
}

impl ReducedGraph {
    /// `J`: sends `δ_w` to `χ_W` and fixes the other indicators. Isometric
    /// for the mass-weighted inner products.
    pub fn isometry(&self) -> &Matrix {
        &self.isometry
    }

    /// `J♯`: reads the supernode value off `W` per the convention and keeps
    /// the other values. `J♯ J = I`; for the mass-weighted convention
    /// `J♯` is the adjoint of `J` in the mass-weighted inner products.
    pub fn coisometry(&self) -> &Matrix {
        &self.coisometry
    }

    pub fn laplacian(&self) -> Result<DenseOperator> {
        self.graph.laplacian()
    }

    pub fn supernode_id(&self) -> &str {
        &self.graph.node_ids()[self.supernode]
    }
}

pub fn reduce_graph(
    g: &DirectedGraph,
    w: &[usize],
    convention: SupernodeConvention,
) -> Result<ReducedGraph> {
    let w = validated_cluster(g, w)?;
    let n = g.node_count();
    let inside = membership(n, &w);
    let ids = g.node_ids();
    let masses = g.masses();

    let mut super_id = if w.len() == 1 {
        ids[w[0]].clone()
    } else {
        w.iter().map(|&x| ids[x].as_str()).collect::<Vec<_>>().join("+")
    };
    while w.len() > 1 && g.node_index(&super_id).is_some() {
        super_id.push('\'');
    }
    let super_mass: f64 = w.iter().map(|&x| masses[x]).sum();

    let mut reduced = DirectedGraph::new();
    let mut node_map = vec![0; n];
    let mut supernode = None;
    for x in 0..n {
        if inside[x] {
            let k = match supernode {
                Some(k) => k,
                None => {
                    let k = reduced.add_node(super_id.clone(), super_mass)?;
                    supernode = Some(k);
                    k
                }
            };
            node_map[x] = k;
        } else {
            node_map[x] = reduced.add_node(ids[x].clone(), masses[x])?;
        }
    }
    let supernode = supernode.expect("cluster is nonempty");

    // Aggregate in order of first appearance for a deterministic edge list.
    let mut order: Vec<(usize, usize)> = Vec::new();
    let mut weights: HashMap<(usize, usize), f64> = HashMap::new();
    for e in g.edges() {
        if inside[e.src] && inside[e.dst] {
            continue;
        }
        let key = (node_map[e.src], node_map[e.dst]);
        weights
            .entry(key)
            .and_modify(|v| *v += e.weight)
            .or_insert_with(|| {
                order.push(key);
                e.weight
            });
    }
    for key in order {
        reduced.add_edge(key.0, key.1, weights[&key])?;
    }

    let m = reduced.node_count();
    let one = Complex64::new(1.0, 0.0);
    let mut isometry = Matrix::zeros(n, m);
    let mut coisometry = Matrix::zeros(m, n);
    for x in 0..n {
        isometry[(x, node_map[x])] = one;
        let weight = if !inside[x] {
            1.0
        } else {
            match convention {
                SupernodeConvention::MassWeighted => masses[x] / super_mass,
                SupernodeConvention::Unweighted => 1.0 / w.len() as f64,
            }
        };
        coisometry[(node_map[x], x)] = Complex64::new(weight, 0.0);
    }

    Ok(ReducedGraph {
        graph: reduced,
        supernode,
        cluster: w,
        convention,
        node_map,
        isometry,
        coisometry,
    })
}

/// Outcome of [`verify_reduction`].
#[derive(Debug, Clone)]
pub struct ReductionReport {
    pub reduced: ReducedGraph,
    pub projector: RieszProjection,
    /// `‖P A P − J L_red J♯‖`.
    pub identification_residual: f64,
    /// Largest per-node Kirchhoff deficit of the `W`-subgraph.
    pub kirchhoff_deficit: f64,
    /// The `W`-subgraph is not balanced, so the reduced Laplacian need not be
    /// the limit. The convergence curve then uses the compression `PAP`.
    pub hypothesis_violation: bool,
    /// Compression of `A` in the basis given by the columns of `J`.
    pub compression: EffectiveOperator,
    pub convergence: ConvergenceReport,
}

/// Compares the large-coupling limit of `A + βB` with the reduced graph at
/// the real shift `z < 0`.
pub fn verify_reduction(
    g: &DirectedGraph,
    w: &[usize],
    z: f64,
    betas: &[f64],
    convention: SupernodeConvention,
) -> Result<ReductionReport> {
    if !(z.is_finite() && z < 0.0) {
        return Err(Error::InvalidParameter(format!("shift {z} must be real and negative")));
    }
    let w = validated_cluster(g, w)?;
    let (a, b) = coupling_split(g, &w)?;
    let projector = cluster_projector(g, &w)?;
    let reduced = reduce_graph(g, &w, convention)?;

    let sub = g.induced_subgraph(&w)?;
    let kirchhoff_deficit = sub.kirchhoff_deficit().into_iter().fold(0.0, f64::max);
    let scale = sub.edges().iter().map(|e| e.weight).fold(1.0, f64::max);
    let hypothesis_violation = kirchhoff_deficit > KIRCHHOFF_TOL * scale;

    let j = reduced.isometry();
    let js = reduced.coisometry();
    let l_red = reduced.laplacian()?;
    let pap = &(&projector.p * &a) * &projector.p;
    let identification_residual = norm2(&(pap.matrix() - j * l_red.matrix() * js));

    let compression = effective_operator_in_basis(&a, &projector, &SubspaceBasis::new(j.clone())?)?;

    let zc = Complex64::new(z, 0.0);
    let convergence = if hypothesis_violation {
        resolvent_error_curve(&a, &b, &projector, zc, betas)?
    } else {
        let inv = checked_inverse(l_red.shifted(zc).matrix()).ok_or(Error::EffectiveSingular { z: zc })?;
        let limit = DenseOperator::from_matrix_unchecked(j * inv * js);
        crate::coupling::error_curve_against(&a, &b, zc, betas, &limit)?
    };

    Ok(ReductionReport {
        reduced,
        projector,
        identification_residual,
        kirchhoff_deficit,
        hypothesis_violation,
        compression,
        convergence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::log_beta_grid;
    use crate::operator::{c64, op_norm};

    fn symmetric_example() -> (DirectedGraph, Vec<usize>) {
        // Path 0 – 1 – 2 – 3 – 4 with cluster {1, 2, 3}, mixed masses.
        let mut g = DirectedGraph::new();
        for (k, m) in [1.0, 2.0, 0.5, 1.5, 1.0].iter().enumerate() {
            g.add_node(format!("n{k}"), *m).unwrap();
        }
        for (x, y, a) in [(0, 1, 1.0), (1, 2, 2.0), (2, 3, 0.7), (3, 4, 1.3), (1, 3, 0.4)] {
            g.add_edge(x, y, a).unwrap();
            g.add_edge(y, x, a).unwrap();
        }
        (g, vec![1, 2, 3])
    }

    #[test]
    fn split_recovers_full_laplacian() {
        let g = three_node_example(1.0, 2.0, 1.0);
        let (a, b) = coupling_split(&g, &[1, 2]).unwrap();
        assert_eq!(&a + &b, g.laplacian().unwrap());
        let expected_b =
            DenseOperator::from_real_rows(&[&[0.0, 0.0, 0.0], &[0.0, 2.0, -2.0], &[0.0, -1.0, 1.0]]).unwrap();
        assert_eq!(b, expected_b);
    }

    #[test]
    fn three_node_projector_matches_closed_form() {
        let g = three_node_example(1.0, 2.0, 1.0);
        let rp = cluster_projector(&g, &[1, 2]).unwrap();
        let third = 1.0 / 3.0;
        let expected = DenseOperator::from_real_rows(&[
            &[1.0, 0.0, 0.0],
            &[0.0, third, 2.0 * third],
            &[0.0, third, 2.0 * third],
        ])
        .unwrap();
        assert!(op_norm(&(&rp.p - &expected)) < 1e-10);
    }

    #[test]
    fn symmetric_cluster_projector_is_mass_average() {
        let (g, w) = symmetric_example();
        let rp = cluster_projector(&g, &w).unwrap();
        let avg = mass_weighted_projector(&g, &w, SupernodeConvention::MassWeighted).unwrap();
        assert!(op_norm(&(&rp.p - &avg)) < 1e-10);
    }

    #[test]
    fn unit_mass_average_is_uniform() {
        let mut g = DirectedGraph::new();
        for k in 0..4 {
            g.add_node(k.to_string(), 1.0).unwrap();
        }
        for (x, y) in [(0, 1), (1, 2), (2, 3)] {
            g.add_edge(x, y, 1.0).unwrap();
            g.add_edge(y, x, 1.0).unwrap();
        }
        let rp = cluster_projector(&g, &[1, 2, 3]).unwrap();
        for x in 1..4 {
            for y in 1..4 {
                assert!((rp.p.get(x, y) - c64(1.0 / 3.0, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn disconnected_cluster_rejected() {
        let mut g = DirectedGraph::new();
        for k in 0..5 {
            g.add_node(k.to_string(), 1.0).unwrap();
        }
        for (x, y) in [(0, 1), (1, 2), (2, 3), (3, 4)] {
            g.add_edge(x, y, 1.0).unwrap();
            g.add_edge(y, x, 1.0).unwrap();
        }
        // {0, 1} and {3, 4} share no edge.
        assert!(matches!(
            cluster_projector(&g, &[0, 1, 3, 4]),
            Err(Error::ClusterDisconnected { multiplicity: 2 })
        ));
    }

    #[test]
    fn cluster_guards() {
        let g = three_node_example(1.0, 2.0, 1.0);
        assert!(matches!(cluster_projector(&g, &[0, 1, 2]), Err(Error::InvalidCluster(_))));
        assert!(matches!(cluster_projector(&g, &[]), Err(Error::InvalidCluster(_))));
        assert!(matches!(cluster_projector(&g, &[1, 1]), Err(Error::InvalidCluster(_))));
    }

    #[test]
    fn three_node_reduction() {
        let g = three_node_example(1.0, 2.0, 1.0);
        let r = reduce_graph(&g, &[1, 2], SupernodeConvention::MassWeighted).unwrap();
        assert_eq!(r.graph.node_count(), 2);
        assert_eq!(r.supernode_id(), "2+3");
        assert_eq!(r.graph.masses()[r.supernode], 2.0);
        assert_eq!(r.graph.weight(0, 1), 1.0);
        assert_eq!(r.graph.weight(1, 0), 1.0);
        assert_eq!(r.graph.total_mass(), g.total_mass());
    }

    #[test]
    fn singleton_cluster_is_identity() {
        let g = three_node_example(1.0, 2.0, 1.0);
        let r = reduce_graph(&g, &[1], SupernodeConvention::MassWeighted).unwrap();
        assert_eq!(r.graph, g);
        assert_eq!(r.isometry(), &Matrix::identity(3, 3));
    }

    #[test]
    fn star_leaves_aggregate() {
        let mut g = DirectedGraph::new();
        g.add_node("hub", 1.0).unwrap();
        for k in 0..3 {
            g.add_node(format!("leaf{k}"), 1.0 + k as f64).unwrap();
        }
        let weights = [(1.0, 0.5), (2.0, 0.25), (3.0, 4.0)];
        for (k, (out, back)) in weights.iter().enumerate() {
            g.add_edge(0, k + 1, *out).unwrap();
            g.add_edge(k + 1, 0, *back).unwrap();
        }
        g.add_edge(1, 2, 1.0).unwrap();
        g.add_edge(2, 3, 1.0).unwrap();
        let r = reduce_graph(&g, &[1, 2, 3], SupernodeConvention::MassWeighted).unwrap();
        let w = r.supernode;
        assert_eq!(r.graph.weight(0, w), 6.0);
        assert_eq!(r.graph.weight(w, 0), 4.75);
        assert_eq!(r.graph.masses()[w], 6.0);
    }

    #[test]
    fn isometry_preserves_weighted_inner_product() {
        let (g, w) = symmetric_example();
        let r = reduce_graph(&g, &w, SupernodeConvention::MassWeighted).unwrap();
        let mass = |ms: &[f64]| Matrix::from_diagonal(&nalgebra::DVector::from_iterator(
            ms.len(),
            ms.iter().map(|m| c64(*m, 0.0)),
        ));
        let m_full = mass(g.masses());
        let m_red = mass(r.graph.masses());
        let j = r.isometry();
        assert!((j.adjoint() * &m_full * j - &m_red).norm() < 1e-12);
        // J♯ = M_red⁻¹ Jᵀ M.
        let js = m_red.try_inverse().unwrap() * j.adjoint() * &m_full;
        assert!((js - r.coisometry()).norm() < 1e-12);
    }

    #[test]
    fn reduced_laplacian_is_exact_compression() {
        let (g, w) = symmetric_example();
        let r = reduce_graph(&g, &w, SupernodeConvention::MassWeighted).unwrap();
        let l = g.laplacian().unwrap();
        let lhs = r.coisometry() * l.matrix() * r.isometry();
        assert!((lhs - r.laplacian().unwrap().matrix()).norm() < 1e-12);
    }

    #[test]
    fn symmetric_reduction_converges() {
        let (g, w) = symmetric_example();
        let betas = log_beta_grid(2.0, 5.0, 5);
        let rep = verify_reduction(&g, &w, -1.0, &betas, SupernodeConvention::MassWeighted).unwrap();
        assert!(!rep.hypothesis_violation);
        assert!(rep.identification_residual < 1e-10);
        let slope = rep.convergence.fitted_slope.unwrap();
        assert!((-1.2..=-0.8).contains(&slope), "{slope}");
    }

    #[test]
    fn three_node_is_flagged_but_compresses() {
        let g = three_node_example(1.0, 2.0, 1.0);
        let betas = log_beta_grid(2.0, 5.0, 5);
        let rep = verify_reduction(&g, &[1, 2], -1.0, &betas, SupernodeConvention::MassWeighted).unwrap();
        assert!(rep.hypothesis_violation);
        assert_eq!(rep.kirchhoff_deficit, 1.0);
        assert!(rep.identification_residual > 0.1);
        let third = 1.0 / 3.0;
        let expected = [[1.0, -1.0], [-third, third]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((rep.compression.compressed()[(i, j)] - c64(expected[i][j], 0.0)).norm() < 1e-10);
            }
        }
        let slope = rep.convergence.fitted_slope.unwrap();
        assert!((-1.2..=-0.8).contains(&slope), "{slope}");
    }

    #[test]
    fn verify_rejects_bad_shift() {
        let g = three_node_example(1.0, 2.0, 1.0);
        assert!(verify_reduction(&g, &[1, 2], 1.0, &[10.0], SupernodeConvention::MassWeighted).is_err());
    }

    #[test]
    fn unweighted_convention_matches_only_unit_masses() {
        let (g, w) = symmetric_example();
        let mw = mass_weighted_projector(&g, &w, SupernodeConvention::MassWeighted).unwrap();
        let uw = mass_weighted_projector(&g, &w, SupernodeConvention::Unweighted).unwrap();
        assert!(op_norm(&(&mw - &uw)) > 0.1);
        let unit = three_node_example(1.0, 1.0, 1.0);
        let mw = mass_weighted_projector(&unit, &[1, 2], SupernodeConvention::MassWeighted).unwrap();
        let uw = mass_weighted_projector(&unit, &[1, 2], SupernodeConvention::Unweighted).unwrap();
        assert!(op_norm(&(&mw - &uw)) < 1e-15);
    }
}
