//! Reproducible `(A, B)` pairs for the worked examples.
//!
//! Every generator returns a [`ModelInstance`] whose hypothesis tags are
//! checked when the instance is built; a tag that fails its check is an
//! error, never a silent label.

mod dirac;
mod random;

use std::collections::BTreeSet;
use std::fmt;

use num_complex::Complex64;

use crate::coupling::EffectiveOperator;
use crate::error::{Error, Result};
use crate::graph::{coupling_split, reduce_graph, three_node_example, DirectedGraph, SupernodeConvention, KIRCHHOFF_TOL};
use crate::operator::{DenseOperator, Matrix};
use crate::riesz::{projector_is_orthogonal, quasinilpotent_vanishes, riesz_projector, RieszProjection};

pub use dirac::{
    central_difference, dirac_weak_1d, doublet_momentum_model, lattice_dirac_forward, SpinorLayout,
};
pub use random::{
    finite_rank_perturbation, planted_isolated_eigenvalue, random_oblique_pair, random_symmetric_graph,
    PlantedEigenvalue,
};

/// Hypotheses of the convergence theorems that an instance may satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HypothesisTag {
    /// `A` and `B` are Hermitian.
    SelfAdjoint,
    /// The Riesz projector of `B` at zero is orthogonal.
    OrthogonalP,
    /// `PB = 0`.
    QuasinilpotentZero,
    /// The cluster subgraph has balanced in- and out-degrees.
    Kirchhoff,
    /// `B` is bounded relative to `A` (always true in finite dimension).
    RelBounded,
}

impl HypothesisTag {
    pub const ALL: [HypothesisTag; 5] = [
        HypothesisTag::SelfAdjoint,
        HypothesisTag::OrthogonalP,
        HypothesisTag::QuasinilpotentZero,
        HypothesisTag::Kirchhoff,
        HypothesisTag::RelBounded,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            HypothesisTag::SelfAdjoint => "self_adjoint",
            HypothesisTag::OrthogonalP => "orthogonal_P",
            HypothesisTag::QuasinilpotentZero => "quasinilpotent_zero",
            HypothesisTag::Kirchhoff => "kirchhoff",
            HypothesisTag::RelBounded => "rel_bounded",
        }
    }
}

impl fmt::Display for HypothesisTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

const SELF_ADJOINT_TOL: f64 = 1e-12;
const ORTHOGONAL_TOL: f64 = 1e-10;
const QUASINILPOTENT_TOL: f64 = 1e-8;
const PROJECTOR_TOL: f64 = 1e-12;

/// A graph together with its strongly coupled cluster.
#[derive(Debug, Clone)]
pub struct GraphSource {
    pub graph: DirectedGraph,
    pub cluster: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct ModelInstance {
    pub name: String,
    pub description: String,
    pub a: DenseOperator,
    pub b: DenseOperator,
    pub expected_limit: Option<EffectiveOperator>,
    pub tags: BTreeSet<HypothesisTag>,
    /// Riesz projector of `B` at zero, when zero is an isolated eigenvalue.
    pub projector: Option<RieszProjection>,
    /// Generator parameters, as `(name, value)` pairs in a fixed order.
    pub params: Vec<(String, String)>,
    pub graph: Option<GraphSource>,
}

impl ModelInstance {
    /// Builds an instance and verifies every tag.
    pub fn new(
        name: impl Into<String>,
        description: impl Into<String>,
        a: DenseOperator,
        b: DenseOperator,
        tags: &[HypothesisTag],
    ) -> Result<Self> {
        Self::build(name.into(), description.into(), a, b, tags, None)
    }

    /// Instance for the Laplacian split of a graph with cluster `w`.
    pub fn from_graph(
        name: impl Into<String>,
        description: impl Into<String>,
        graph: DirectedGraph,
        cluster: Vec<usize>,
        tags: &[HypothesisTag],
    ) -> Result<Self> {
        let (a, b) = coupling_split(&graph, &cluster)?;
        Self::build(
            name.into(),
            description.into(),
            a,
            b,
            tags,
            Some(GraphSource { graph, cluster }),
        )
    }

    fn build(
        name: String,
        description: String,
        a: DenseOperator,
        b: DenseOperator,
        tags: &[HypothesisTag],
        graph: Option<GraphSource>,
    ) -> Result<Self> {
        a.check_same_dim(&b)?;
        let projector = riesz_projector(&b, Complex64::new(0.0, 0.0), PROJECTOR_TOL).ok();
        let instance = Self {
            name,
            description,
            a,
            b,
            expected_limit: None,
            tags: tags.iter().copied().collect(),
            projector,
            params: Vec::new(),
            graph,
        };
        for &tag in &instance.tags {
            instance.verify_tag(tag)?;
        }
        Ok(instance)
    }

    pub fn with_expected_limit(mut self, limit: EffectiveOperator) -> Result<Self> {
        if limit.ambient_dim() != self.a.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.a.dim(),
                found: limit.ambient_dim(),
            });
        }
        self.expected_limit = Some(limit);
        Ok(self)
    }

    pub fn with_param(mut self, key: &str, value: impl fmt::Display) -> Self {
        self.params.push((key.to_string(), value.to_string()));
        self
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn has_tag(&self, tag: HypothesisTag) -> bool {
        self.tags.contains(&tag)
    }

    /// The Riesz projector, or the error explaining why it does not exist.
    pub fn require_projector(&self) -> Result<&RieszProjection> {
        let zero = Complex64::new(0.0, 0.0);
        match &self.projector {
            Some(p) => Ok(p),
            None => Err(riesz_projector(&self.b, zero, PROJECTOR_TOL)
                .err()
                .unwrap_or(Error::NoEigenvalueNear {
                    center: zero,
                    tol: PROJECTOR_TOL,
                })),
        }
    }

    /// Re-runs the check behind `tag`.
    pub fn verify_tag(&self, tag: HypothesisTag) -> Result<()> {
        let fail = |reason: String| Err(Error::TagVerification {
            tag: tag.as_str(),
            reason,
        });
        match tag {
            HypothesisTag::SelfAdjoint => {
                for (which, op) in [("A", &self.a), ("B", &self.b)] {
                    if !op.is_hermitian(SELF_ADJOINT_TOL) {
                        return fail(format!("{which} has ‖M − M*‖ = {:e}", op.hermitian_defect()));
                    }
                }
                Ok(())
            }
            HypothesisTag::OrthogonalP => match &self.projector {
                Some(p) if projector_is_orthogonal(p, ORTHOGONAL_TOL) => Ok(()),
                Some(p) => fail(format!("‖P − P*‖ = {:e}", p.p.hermitian_defect())),
                None => fail("zero is not an isolated eigenvalue of B".into()),
            },
            HypothesisTag::QuasinilpotentZero => match &self.projector {
                Some(p) if quasinilpotent_vanishes(p, QUASINILPOTENT_TOL) => Ok(()),
                Some(p) => fail(format!("‖PB‖ = {:e}", p.quasinilpotent_norm)),
                None => fail("zero is not an isolated eigenvalue of B".into()),
            },
            HypothesisTag::Kirchhoff => {
                let Some(src) = &self.graph else {
                    return fail("instance does not come from a graph".into());
                };
                let sub = src.graph.induced_subgraph(&src.cluster)?;
                let deficit = sub.kirchhoff_deficit().into_iter().fold(0.0, f64::max);
                let scale = sub.edges().iter().map(|e| e.weight).fold(1.0, f64::max);
                if deficit > KIRCHHOFF_TOL * scale {
                    return fail(format!("cluster Kirchhoff deficit {deficit:e}"));
                }
                Ok(())
            }
            HypothesisTag::RelBounded => {
                if self.b.norm().is_finite() {
                    Ok(())
                } else {
                    fail("‖B‖ is not finite".into())
                }
            }
        }
    }
}

/// `A = I`, `B = [[0, 1], [0, 0]]`: the resolvent of `A + βB` grows linearly
/// in β and has no limit.
pub fn nilpotent_counterexample() -> ModelInstance {
    let a = DenseOperator::identity(2);
    let b = DenseOperator::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).expect("finite entries");
    ModelInstance::new(
        "nilpotent_counterexample",
        "A = I, B = [[0,1],[0,0]]; (A + βB − z)⁻¹ grows without bound",
        a,
        b,
        &[HypothesisTag::RelBounded],
    )
    .expect("tags hold")
}

/// `B = diag(0, g, 2g, 1)` with a fixed Hermitian `A`: zero is isolated only
/// by the small gap `g`.
pub fn near_degenerate_b(gap: f64) -> Result<ModelInstance> {
    if !(gap > 0.0 && gap < 1.0) {
        return Err(Error::InvalidParameter(format!("gap {gap} must lie in (0, 1)")));
    }
    let c = |re, im| Complex64::new(re, im);
    let a = DenseOperator::from_rows(&[
        vec![c(2.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
        vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 1.0), c(0.0, 0.0)],
        vec![c(0.0, 0.0), c(0.0, -1.0), c(0.0, 0.0), c(1.0, 0.0)],
        vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)],
    ])?;
    let b = DenseOperator::from_real_diagonal(&[0.0, gap, 2.0 * gap, 1.0])?;
    Ok(ModelInstance::new(
        "near_degenerate_b",
        "B = diag(0, g, 2g, 1); norm convergence sets in only once β ≫ |z|/g",
        a,
        b,
        &[
            HypothesisTag::SelfAdjoint,
            HypothesisTag::OrthogonalP,
            HypothesisTag::QuasinilpotentZero,
            HypothesisTag::RelBounded,
        ],
    )?
    .with_param("gap", gap))
}

/// The three-node graph with cluster `{2, 3}` and its oblique limit
/// `[[a, −a], [−a/(1 + r), a/(1 + r)]]`, `r = b23/b32`, in the basis
/// `{e1, (0, 1, 1)}`.
pub fn three_node_instance(a: f64, b23: f64, b32: f64) -> Result<ModelInstance> {
    if !(a > 0.0 && b23 > 0.0 && b32 > 0.0) {
        return Err(Error::InvalidParameter("weights must be positive".into()));
    }
    let g = three_node_example(a, b23, b32);
    let r = b23 / b32;
    let c = 1.0 / (1.0 + r);
    let z = |x: f64| Complex64::new(x, 0.0);
    let basis = Matrix::from_row_slice(3, 2, &[z(1.0), z(0.0), z(0.0), z(1.0), z(0.0), z(1.0)]);
    let coords = Matrix::from_row_slice(2, 3, &[z(1.0), z(0.0), z(0.0), z(0.0), z(c), z(c * r)]);
    let compressed = Matrix::from_row_slice(2, 2, &[z(a), z(-a), z(-a * c), z(a * c)]);
    let mut tags = vec![HypothesisTag::QuasinilpotentZero, HypothesisTag::RelBounded];
    if b23 == b32 {
        tags.push(HypothesisTag::Kirchhoff);
    }
    Ok(ModelInstance::from_graph(
        "three_node_graph",
        "directed three-node graph, cluster {2,3} with weights b23, b32",
        g,
        vec![1, 2],
        &tags,
    )?
    .with_expected_limit(EffectiveOperator::from_parts(basis, coords, compressed)?)?
    .with_param("a", a)
    .with_param("b23", b23)
    .with_param("b32", b32))
}

/// Instance for a graph and cluster; balanced clusters carry the reduced
/// Laplacian as their expected limit.
pub fn graph_instance(name: &str, graph: DirectedGraph, cluster: Vec<usize>) -> Result<ModelInstance> {
    let sub = graph.induced_subgraph(&cluster)?;
    let deficit = sub.kirchhoff_deficit().into_iter().fold(0.0, f64::max);
    let scale = sub.edges().iter().map(|e| e.weight).fold(1.0, f64::max);
    let balanced = deficit <= KIRCHHOFF_TOL * scale;
    let mut tags = vec![HypothesisTag::QuasinilpotentZero, HypothesisTag::RelBounded];
    if balanced {
        tags.push(HypothesisTag::Kirchhoff);
    }
    let reduced = reduce_graph(&graph, &cluster, SupernodeConvention::MassWeighted)?;
    let limit = EffectiveOperator::from_parts(
        reduced.isometry().clone(),
        reduced.coisometry().clone(),
        reduced.laplacian()?.into_matrix(),
    )?;
    let instance = ModelInstance::from_graph(
        name,
        "graph Laplacian split by a strongly coupled cluster",
        graph,
        cluster,
        &tags,
    )?;
    if balanced {
        instance.with_expected_limit(limit)
    } else {
        Ok(instance)
    }
}

/// Parameter description for `zoo list`.
#[derive(Debug, Clone, Copy)]
pub struct ParamInfo {
    pub name: &'static str,
    pub kind: &'static str,
    pub default: Option<&'static str>,
    pub description: &'static str,
}

#[derive(Debug, Clone, Copy)]
pub struct GeneratorInfo {
    pub name: &'static str,
    pub summary: &'static str,
    pub params: &'static [ParamInfo],
}

const fn p(name: &'static str, kind: &'static str, default: Option<&'static str>, description: &'static str) -> ParamInfo {
    ParamInfo {
        name,
        kind,
        default,
        description,
    }
}

/// All generators with their parameter schemas.
pub fn generators() -> &'static [GeneratorInfo] {
    const GENERATORS: &[GeneratorInfo] = &[
        GeneratorInfo {
            name: "nilpotent_counterexample",
            summary: "A = I, B = [[0,1],[0,0]]; divergent resolvent",
            params: &[],
        },
        GeneratorInfo {
            name: "dirac_weak_1d",
            summary: "1+1-d Dirac doublet with left-chiral coupling (central differences)",
            params: &[
                p("n", "integer >= 8", Some("32"), "lattice sites"),
                p("length", "real > 0", Some("10"), "periodic domain length"),
                p("mass", "real > 0", Some("1"), "Dirac mass"),
                p("w03", "real or list of reals", Some("1"), "coupling samples per site"),
            ],
        },
        GeneratorInfo {
            name: "lattice_dirac_forward",
            summary: "forward-difference lattice Dirac with trapping potential",
            params: &[
                p("n", "integer >= 4", Some("16"), "lattice sites"),
                p("v", "list of reals", None, "potential per site; default 0 on sites 0..3, |j - 1.5| elsewhere"),
            ],
        },
        GeneratorInfo {
            name: "doublet_momentum_model",
            summary: "two fermions at fixed momentum, sigma_y coupling on the first",
            params: &[
                p("n", "integer >= 8", Some("32"), "lattice sites"),
                p("length", "real > 0", Some("10"), "periodic domain length"),
                p("mass", "real > 0", Some("1"), "mass"),
                p("k", "real", Some("0"), "transverse momentum (recorded only)"),
            ],
        },
        GeneratorInfo {
            name: "finite_rank_perturbation",
            summary: "random Hermitian A, Hermitian B of given rank",
            params: &[
                p("dim", "integer >= 2", Some("8"), "dimension"),
                p("rank", "integer in [1, dim)", Some("4"), "rank of B"),
            ],
        },
        GeneratorInfo {
            name: "near_degenerate_b",
            summary: "B = diag(0, g, 2g, 1) with fixed Hermitian A",
            params: &[p("gap", "real in (0, 1)", Some("0.01"), "gap g")],
        },
        GeneratorInfo {
            name: "three_node_graph",
            summary: "directed three-node graph with cluster {2,3}",
            params: &[
                p("a", "real > 0", Some("1"), "weight of 1 <-> 2"),
                p("b23", "real > 0", Some("2"), "weight 2 -> 3"),
                p("b32", "real > 0", Some("1"), "weight 3 -> 2"),
            ],
        },
        GeneratorInfo {
            name: "random_symmetric_graph",
            summary: "random connected symmetric graph with a connected cluster",
            params: &[
                p("nodes", "integer >= 3", Some("24"), "node count"),
                p("cluster", "integer in [2, nodes)", Some("6"), "cluster size"),
            ],
        },
        GeneratorInfo {
            name: "random_oblique_pair",
            summary: "random complex A, non-normal B with semisimple kernel",
            params: &[
                p("dim", "integer >= 2", Some("16"), "dimension"),
                p("kernel", "integer in [1, dim)", Some("4"), "dimension of ker B"),
            ],
        },
    ];
    GENERATORS
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::effective_operator;
    use crate::operator::{c64, op_norm, resolvent};

    #[test]
    fn nilpotent_resolvent_at_zero() {
        let inst = nilpotent_counterexample();
        let r = resolvent(&inst.a.plus_scaled(7.0, &inst.b).unwrap(), c64(0.0, 0.0)).unwrap();
        let expected = DenseOperator::from_real_rows(&[&[1.0, -7.0], &[0.0, 1.0]]).unwrap();
        assert!(op_norm(&(&r - &expected)) < 1e-14);
        assert!(!quasinilpotent_vanishes(inst.projector.as_ref().unwrap(), 1e-8));
        for beta in [10.0, 100.0, 1000.0] {
            let n = resolvent(&inst.a.plus_scaled(beta, &inst.b).unwrap(), c64(0.0, 0.0))
                .unwrap()
                .norm();
            // Singular values of [[1, −β], [0, 1]].
            let exact = ((beta * beta + 2.0 + beta * (beta * beta + 4.0).sqrt()) / 2.0).sqrt();
            assert!((n - exact).abs() < 1e-10 * exact);
        }
    }

    #[test]
    fn false_tags_are_rejected() {
        let a = DenseOperator::identity(2);
        let b = DenseOperator::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        for tag in [HypothesisTag::SelfAdjoint, HypothesisTag::QuasinilpotentZero, HypothesisTag::Kirchhoff] {
            assert!(matches!(
                ModelInstance::new("x", "", a.clone(), b.clone(), &[tag]),
                Err(Error::TagVerification { .. })
            ));
        }
    }

    #[test]
    fn three_node_expected_limit_matches_computation() {
        let inst = three_node_instance(1.0, 2.0, 1.0).unwrap();
        let rp = inst.projector.as_ref().unwrap();
        let expected = inst.expected_limit.as_ref().unwrap();
        let computed = effective_operator(&inst.a, rp).unwrap();
        assert!(op_norm(&(&expected.embedded() - &computed.embedded())) < 1e-10);
        assert!(!inst.has_tag(HypothesisTag::Kirchhoff));
    }

    #[test]
    fn near_degenerate_guards() {
        assert!(near_degenerate_b(0.0).is_err());
        assert!(near_degenerate_b(1.0).is_err());
        let inst = near_degenerate_b(1e-3).unwrap();
        assert!((inst.projector.as_ref().unwrap().gap - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn registry_names_are_unique() {
        let mut names: Vec<&str> = generators().iter().map(|g| g.name).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), generators().len());
    }
}
