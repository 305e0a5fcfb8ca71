//! Mass-weighted directed graphs and their Laplacians.
//!
//! The Laplacian acts as
//!
//! ```text
//! (L f)(x) = (1/m(x)) Σ_y a(x, y) (f(x) − f(y)),
//! ```
//!
//! and functions on the nodes carry the inner product
//! `⟨f, g⟩ = Σ_x m(x) conj(f(x)) g(x)`.

mod reduction;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::{DenseOperator, Matrix};

pub use reduction::{
    cluster_projector, coupling_split, mass_weighted_projector, reduce_graph, three_node_example,
    verify_reduction, ReducedGraph, ReductionReport, SupernodeConvention, KIRCHHOFF_TOL,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub weight: f64,
}

/// A finite directed graph with positive node masses and nonnegative edge
/// weights. Node order is insertion order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DirectedGraph {
    ids: Vec<String>,
    masses: Vec<f64>,
    edges: Vec<Edge>,
    index: HashMap<String, usize>,
    pairs: HashMap<(usize, usize), usize>,
}

impl DirectedGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, id: impl Into<String>, mass: f64) -> Result<usize> {
        let id = id.into();
        if id.is_empty() || id.chars().any(char::is_whitespace) {
            return Err(Error::InvalidGraph(format!("invalid node id {id:?}")));
        }
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::InvalidGraph(format!("node {id} has nonpositive mass {mass}")));
        }
        if self.index.contains_key(&id) {
            return Err(Error::InvalidGraph(format!("duplicate node {id}")));
        }
        let k = self.ids.len();
        self.index.insert(id.clone(), k);
        self.ids.push(id);
        self.masses.push(mass);
        Ok(k)
    }

    /// Adds the edge `src → dst` with weight `a(src, dst)`.
    pub fn add_edge(&mut self, src: usize, dst: usize, weight: f64) -> Result<()> {
        let n = self.ids.len();
        if src >= n || dst >= n {
            return Err(Error::InvalidGraph(format!("edge ({src}, {dst}) references a missing node")));
        }
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(Error::InvalidGraph(format!(
                "edge {} → {} has invalid weight {weight}",
                self.ids[src], self.ids[dst]
            )));
        }
        if self.pairs.contains_key(&(src, dst)) {
            return Err(Error::InvalidGraph(format!(
                "duplicate edge {} → {}",
                self.ids[src], self.ids[dst]
            )));
        }
        self.pairs.insert((src, dst), self.edges.len());
        self.edges.push(Edge { src, dst, weight });
        Ok(())
    }

    pub fn add_edge_by_id(&mut self, src: &str, dst: &str, weight: f64) -> Result<()> {
        let s = self.require(src)?;
        let d = self.require(dst)?;
        self.add_edge(s, d, weight)
    }

    fn require(&self, id: &str) -> Result<usize> {
        self.node_index(id)
            .ok_or_else(|| Error::InvalidGraph(format!("unknown node {id}")))
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn node_ids(&self) -> &[String] {
        &self.ids
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// `a(x, y)`, zero when there is no edge.
    pub fn weight(&self, x: usize, y: usize) -> f64 {
        self.pairs.get(&(x, y)).map_or(0.0, |&k| self.edges[k].weight)
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// Resolves node ids to indices.
    pub fn indices_of(&self, ids: &[impl AsRef<str>]) -> Result<Vec<usize>> {
        ids.iter().map(|id| self.require(id.as_ref())).collect()
    }

    /// Laplacian of the edges accepted by `keep`.
    pub(crate) fn laplacian_filtered(&self, keep: impl Fn(&Edge) -> bool) -> Matrix {
        let n = self.ids.len();
        let mut m = Matrix::zeros(n, n);
        for e in self.edges.iter().filter(|e| keep(e)) {
            // Self-loops contribute a(x,x)(f(x) − f(x)) = 0.
            if e.src == e.dst {
                continue;
            }
            let scale = e.weight / self.masses[e.src];
            m[(e.src, e.src)] += Complex64::new(scale, 0.0);
            m[(e.src, e.dst)] -= Complex64::new(scale, 0.0);
        }
        m
    }

    /// Matrix of the Laplacian in the standard node basis.
    pub fn laplacian(&self) -> Result<DenseOperator> {
        DenseOperator::new(self.laplacian_filtered(|_| true))
    }

    /// Per-node `|Σ_y a(x, y) − Σ_y a(y, x)|`, ignoring self-loops.
    pub fn kirchhoff_deficit(&self) -> Vec<f64> {
        let mut balance = vec![0.0; self.ids.len()];
        for e in self.edges.iter().filter(|e| e.src != e.dst) {
            balance[e.src] += e.weight;
            balance[e.dst] -= e.weight;
        }
        balance.into_iter().map(f64::abs).collect()
    }

    /// The subgraph on `nodes` (in the given order) with the edges between
    /// them.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Result<DirectedGraph> {
        let mut g = DirectedGraph::new();
        let mut local = HashMap::new();
        for &x in nodes {
            if x >= self.ids.len() {
                return Err(Error::InvalidCluster(format!("node index {x} out of range")));
            }
            local.insert(x, g.add_node(self.ids[x].clone(), self.masses[x])?);
        }
        for e in &self.edges {
            if let (Some(&s), Some(&d)) = (local.get(&e.src), local.get(&e.dst)) {
                g.add_edge(s, d, e.weight)?;
            }
        }
        Ok(g)
    }

    /// Relabels nodes: node `k` of the result is node `order[k]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Result<DirectedGraph> {
        let mut seen = vec![false; self.ids.len()];
        for &k in order {
            if k >= seen.len() || std::mem::replace(&mut seen[k], true) {
                return Err(Error::InvalidParameter("order is not a permutation".into()));
            }
        }
        if order.len() != self.ids.len() {
            return Err(Error::InvalidParameter("order is not a permutation".into()));
        }
        self.induced_subgraph(order)
    }

    /// Parses the text format
    ///
    /// ```text
    /// # comment
    /// node <id> <mass>
    /// edge <src> <dst> <weight>
    /// ```
    ///
    /// All `node` lines precede the `edge` lines.
    pub fn parse(text: &str) -> Result<DirectedGraph> {
        let mut g = DirectedGraph::new();
        let mut seen_edge = false;
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let err = |message: String| Error::GraphParse { line, message };
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let fields: Vec<&str> = content.split_whitespace().collect();
            let number = |s: &str, what: &str| -> Result<f64> {
                s.parse::<f64>()
                    .map_err(|_| err(format!("{what} {s:?} is not a number")))
            };
            match fields.as_slice() {
                ["node", id, mass] => {
                    if seen_edge {
                        return Err(err("node records must precede edge records".into()));
                    }
                    let mass = number(mass, "mass")?;
                    g.add_node(*id, mass).map_err(|e| err(e.to_string()))?;
                }
                ["edge", src, dst, weight] => {
                    seen_edge = true;
                    let weight = number(weight, "weight")?;
                    g.add_edge_by_id(src, dst, weight).map_err(|e| err(e.to_string()))?;
                }
                [kind, ..] if *kind == "node" || *kind == "edge" => {
                    return Err(err(format!("wrong number of fields for {kind}")));
                }
                [kind, ..] => return Err(err(format!("unknown record {kind:?}"))),
                [] => unreachable!(),
            }
        }
        if g.node_count() == 0 {
            return Err(Error::GraphParse {
                line: 0,
                message: "graph has no nodes".into(),
            });
        }
        Ok(g)
    }
}

impl FromStr for DirectedGraph {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

impl fmt::Display for DirectedGraph {
    /// Writes the text format accepted by [`DirectedGraph::parse`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (id, m) in self.ids.iter().zip(&self.masses) {
            writeln!(f, "node {id} {m}")?;
        }
        for e in &self.edges {
            writeln!(f, "edge {} {} {}", self.ids[e.src], self.ids[e.dst], e.weight)?;
        }
        Ok(())
    }
}
