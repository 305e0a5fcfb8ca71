//! Builds a [`ModelInstance`] from the `instance` section of a config.

use std::collections::BTreeMap;

use serde_json::Value;
use spectral_coupling::graph::DirectedGraph;
use spectral_coupling::zoo::{self, ModelInstance};

use crate::config::InstanceSpec;

#[derive(Debug, thiserror::Error)]
pub enum InstanceError {
    #[error("parameter `{name}`: {message}")]
    Param { name: String, message: String },
    #[error("graph file {path}: {message}")]
    GraphFile { path: String, message: String },
    #[error(transparent)]
    Model(#[from] spectral_coupling::Error),
}

struct Params<'a>(&'a BTreeMap<String, Value>);

impl Params<'_> {
    fn err<T>(name: &str, message: &str) -> Result<T, InstanceError> {
        Err(InstanceError::Param {
            name: name.into(),
            message: message.into(),
        })
    }

    fn usize(&self, name: &str, default: usize) -> Result<usize, InstanceError> {
        match self.0.get(name) {
            None => Ok(default),
            Some(v) => v
                .as_u64()
                .map(|x| x as usize)
                .map_or_else(|| Self::err(name, "expected a non-negative integer"), Ok),
        }
    }

    fn f64(&self, name: &str, default: f64) -> Result<f64, InstanceError> {
        match self.0.get(name) {
            None => Ok(default),
            Some(v) => v.as_f64().map_or_else(|| Self::err(name, "expected a number"), Ok),
        }
    }

    /// A list of `n` numbers, or one number repeated `n` times.
    fn samples(&self, name: &str, n: usize) -> Result<Option<Vec<f64>>, InstanceError> {
        match self.0.get(name) {
            None => Ok(None),
            Some(Value::Number(x)) => Ok(Some(vec![x.as_f64().unwrap_or(f64::NAN); n])),
            Some(Value::Array(xs)) => {
                let v: Option<Vec<f64>> = xs.iter().map(Value::as_f64).collect();
                match v {
                    Some(v) if v.len() == n => Ok(Some(v)),
                    Some(v) => Self::err(name, &format!("expected {n} values, got {}", v.len())),
                    None => Self::err(name, "expected numbers"),
                }
            }
            Some(_) => Self::err(name, "expected a number or a list of numbers"),
        }
    }
}

pub fn build_instance(spec: &InstanceSpec, seed: u64) -> Result<ModelInstance, InstanceError> {
    match spec {
        InstanceSpec::Generator { name, params } => build_generator(name, &Params(params), seed),
        InstanceSpec::GraphFile { path, cluster } => {
            let gerr = |message: String| InstanceError::GraphFile {
                path: path.display().to_string(),
                message,
            };
            let text = std::fs::read_to_string(path).map_err(|e| gerr(e.to_string()))?;
            let graph: DirectedGraph = text.parse().map_err(|e: spectral_coupling::Error| gerr(e.to_string()))?;
            let w = cluster
                .iter()
                .map(|id| {
                    graph
                        .node_index(id)
                        .ok_or_else(|| gerr(format!("cluster node `{id}` is not in the graph")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(zoo::graph_instance("graph_file", graph, w)?)
        }
    }
}

fn build_generator(name: &str, p: &Params<'_>, seed: u64) -> Result<ModelInstance, InstanceError> {
    let inst = match name {
        "nilpotent_counterexample" => zoo::nilpotent_counterexample(),
        "dirac_weak_1d" => {
            let n = p.usize("n", 32)?;
            let w03 = p.samples("w03", n)?.unwrap_or_else(|| vec![1.0; n]);
            zoo::dirac_weak_1d(n, p.f64("length", 10.0)?, p.f64("mass", 1.0)?, &w03)?
        }
        "lattice_dirac_forward" => {
            let n = p.usize("n", 16)?;
            let v = p
                .samples("v", n)?
                .unwrap_or_else(|| (0..n).map(|j| if j < 4 { 0.0 } else { j as f64 }).collect());
            zoo::lattice_dirac_forward(n, &v)?
        }
        "doublet_momentum_model" => zoo::doublet_momentum_model(
            p.usize("n", 32)?,
            p.f64("length", 10.0)?,
            p.f64("mass", 1.0)?,
            p.f64("k", 0.0)?,
        )?,
        "finite_rank_perturbation" => zoo::finite_rank_perturbation(p.usize("dim", 8)?, p.usize("rank", 4)?, seed)?,
        "near_degenerate_b" => zoo::near_degenerate_b(p.f64("gap", 0.01)?)?,
        "three_node_graph" => zoo::three_node_instance(p.f64("a", 1.0)?, p.f64("b23", 2.0)?, p.f64("b32", 1.0)?)?,
        "random_symmetric_graph" => zoo::random_symmetric_graph(p.usize("nodes", 24)?, p.usize("cluster", 6)?, seed)?,
        "random_oblique_pair" => zoo::random_oblique_pair(p.usize("dim", 16)?, p.usize("kernel", 4)?, seed)?,
        other => {
            return Err(InstanceError::Param {
                name: "generator".into(),
                message: format!("unknown generator `{other}`"),
            })
        }
    };
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn spec(name: &str, params: Value) -> InstanceSpec {
        InstanceSpec::Generator {
            name: name.into(),
            params: params.as_object().unwrap().clone().into_iter().collect(),
        }
    }

    #[test]
    fn every_registered_generator_builds_with_defaults() {
        for info in zoo::generators() {
            let inst = build_instance(&spec(info.name, json!({})), 1).unwrap();
            assert_eq!(inst.name, info.name);
        }
    }

    #[test]
    fn scalar_samples_broadcast() {
        let inst = build_instance(&spec("dirac_weak_1d", json!({"n": 8, "w03": 2.0})), 0).unwrap();
        assert_eq!(inst.b.get(0, 0).re, 1.0);
        let err = build_instance(&spec("dirac_weak_1d", json!({"n": 8, "w03": [1, 2]})), 0).unwrap_err();
        assert!(err.to_string().contains("expected 8 values"));
    }

    #[test]
    fn generator_errors_surface() {
        let err = build_instance(&spec("lattice_dirac_forward", json!({"n": 4, "v": 1})), 0).unwrap_err();
        assert!(matches!(err, InstanceError::Model(spectral_coupling::Error::EmptyKernel)));
    }
}
