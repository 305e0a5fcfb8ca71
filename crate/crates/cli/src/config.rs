//! Experiment configuration: a single JSON document.
//!
//! ```json
//! {
//!   "instance": { "generator": "doublet_momentum_model", "params": { "n": 32 } },
//!   "z_values": ["0,2", { "re": -1, "im": 0 }],
//!   "beta_grid": { "min_exponent": 2, "max_exponent": 5, "points_per_decade": 5 },
//!   "checks": ["rate", "riesz"],
//!   "output_dir": "out",
//!   "seed": 7,
//!   "expectation": "convergent"
//! }
//! ```
//!
//! Relative paths are resolved against the directory holding the config.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde_json::{json, Map, Value};
use spectral_coupling::zoo::generators;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("JSON syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },
}

fn field_err<T>(field: impl Into<String>, message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Field {
        field: field.into(),
        message: message.into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Check {
    Riesz,
    Rate,
    Schur,
    Anticommutator,
    UniformBound,
    Cauchy,
    PseudoResolvent,
    Reduction,
}

impl Check {
    pub const ALL: [Check; 8] = [
        Check::Riesz,
        Check::Rate,
        Check::Schur,
        Check::Anticommutator,
        Check::UniformBound,
        Check::Cauchy,
        Check::PseudoResolvent,
        Check::Reduction,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Check::Riesz => "riesz",
            Check::Rate => "rate",
            Check::Schur => "schur",
            Check::Anticommutator => "anticommutator",
            Check::UniformBound => "uniform_bound",
            Check::Cauchy => "cauchy",
            Check::PseudoResolvent => "pseudo_resolvent",
            Check::Reduction => "reduction",
        }
    }

    pub fn parse(s: &str) -> Option<Check> {
        Check::ALL.into_iter().find(|c| c.as_str() == s)
    }

    /// Whether the check runs once per shift or once per instance.
    pub fn per_shift(self) -> bool {
        !matches!(self, Check::Anticommutator)
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Expectation {
    #[default]
    Convergent,
    Divergent,
}

impl Expectation {
    pub fn as_str(self) -> &'static str {
        match self {
            Expectation::Convergent => "convergent",
            Expectation::Divergent => "divergent",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InstanceSpec {
    Generator {
        name: String,
        params: BTreeMap<String, Value>,
    },
    GraphFile {
        path: PathBuf,
        cluster: Vec<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaGrid {
    pub min_exponent: f64,
    pub max_exponent: f64,
    pub points_per_decade: usize,
}

impl BetaGrid {
    pub fn betas(&self) -> Vec<f64> {
        spectral_coupling::coupling::log_beta_grid(self.min_exponent, self.max_exponent, self.points_per_decade)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub instance: InstanceSpec,
    pub z_values: Vec<Complex64>,
    pub beta_grid: BetaGrid,
    pub checks: Vec<Check>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub expectation: Expectation,
}

const TOP_LEVEL: [&str; 7] = [
    "instance",
    "z_values",
    "beta_grid",
    "checks",
    "output_dir",
    "seed",
    "expectation",
];

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let value: Value = serde_json::from_str(text).map_err(|e| ConfigError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let Value::Object(obj) = value else {
            return field_err("<root>", "expected a JSON object");
        };
        if let Some(k) = obj.keys().find(|k| !TOP_LEVEL.contains(&k.as_str())) {
            return field_err(k.as_str(), "unknown field");
        }
        let instance = parse_instance(require(&obj, "instance")?, base_dir)?;
        let z_values = parse_z_values(require(&obj, "z_values")?)?;
        let beta_grid = parse_beta_grid(require(&obj, "beta_grid")?)?;
        let checks = parse_checks(obj.get("checks").unwrap_or(&Value::Array(Vec::new())))?;
        let output_dir = match require(&obj, "output_dir")? {
            Value::String(s) if !s.is_empty() => base_dir.join(s),
            _ => return field_err("output_dir", "expected a non-empty string"),
        };
        let seed = match obj.get("seed") {
            None => 0,
            Some(v) => v
                .as_u64()
                .map_or_else(|| field_err("seed", "expected a non-negative integer"), Ok)?,
        };
        let expectation = match obj.get("expectation") {
            None => Expectation::Convergent,
            Some(Value::String(s)) if s == "convergent" => Expectation::Convergent,
            Some(Value::String(s)) if s == "divergent" => Expectation::Divergent,
            Some(_) => return field_err("expectation", "expected \"convergent\" or \"divergent\""),
        };
        if checks.contains(&Check::Reduction) && !matches!(instance, InstanceSpec::GraphFile { .. }) {
            return field_err("checks", "`reduction` needs a graph_file instance");
        }
        Ok(Self {
            instance,
            z_values,
            beta_grid,
            checks,
            output_dir,
            seed,
            expectation,
        })
    }

    /// Normalized form: complex numbers as `{re, im}`, defaults filled in.
    pub fn to_json(&self) -> Value {
        let instance = match &self.instance {
            InstanceSpec::Generator { name, params } => json!({
                "generator": name,
                "params": params,
            }),
            InstanceSpec::GraphFile { path, cluster } => json!({
                "graph_file": path.display().to_string(),
                "cluster": cluster,
            }),
        };
        json!({
            "instance": instance,
            "z_values": self.z_values.iter().map(|z| complex_json(*z)).collect::<Vec<_>>(),
            "beta_grid": {
                "min_exponent": self.beta_grid.min_exponent,
                "max_exponent": self.beta_grid.max_exponent,
                "points_per_decade": self.beta_grid.points_per_decade,
            },
            "checks": self.checks.iter().map(|c| c.as_str()).collect::<Vec<_>>(),
            "output_dir": self.output_dir.display().to_string(),
            "seed": self.seed,
            "expectation": self.expectation.as_str(),
        })
    }
}

pub fn complex_json(z: Complex64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

fn require<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value, ConfigError> {
    obj.get(key)
        .map_or_else(|| field_err(key, "missing required field"), Ok)
}

fn parse_instance(v: &Value, base_dir: &Path) -> Result<InstanceSpec, ConfigError> {
    let Value::Object(obj) = v else {
        return field_err("instance", "expected an object");
    };
    match (obj.get("generator"), obj.get("graph_file")) {
        (Some(_), Some(_)) => field_err("instance", "give either `generator` or `graph_file`, not both"),
        (Some(g), None) => {
            if let Some(k) = obj.keys().find(|k| *k != "generator" && *k != "params") {
                return field_err(format!("instance.{k}"), "unknown field");
            }
            let Value::String(name) = g else {
                return field_err("instance.generator", "expected a string");
            };
            let Some(info) = generators().iter().find(|info| info.name == name) else {
                let known: Vec<&str> = generators().iter().map(|i| i.name).collect();
                return field_err(
                    "instance.generator",
                    format!("unknown generator `{name}` (known: {})", known.join(", ")),
                );
            };
            let params = match obj.get("params") {
                None => BTreeMap::new(),
                Some(Value::Object(p)) => p.clone().into_iter().collect(),
                Some(_) => return field_err("instance.params", "expected an object"),
            };
            if let Some(k) = params.keys().find(|k| !info.params.iter().any(|p| p.name == k.as_str())) {
                return field_err(
                    format!("instance.params.{k}"),
                    format!("unknown parameter for `{name}`"),
                );
            }
            Ok(InstanceSpec::Generator {
                name: name.clone(),
                params,
            })
        }
        (None, Some(f)) => {
            if let Some(k) = obj.keys().find(|k| *k != "graph_file" && *k != "cluster") {
                return field_err(format!("instance.{k}"), "unknown field");
            }
            let Value::String(path) = f else {
                return field_err("instance.graph_file", "expected a string");
            };
            let cluster = match obj.get("cluster") {
                Some(Value::Array(ids)) if !ids.is_empty() => ids
                    .iter()
                    .enumerate()
                    .map(|(i, id)| match id {
                        Value::String(s) => Ok(s.clone()),
                        Value::Number(n) => Ok(n.to_string()),
                        _ => field_err(format!("instance.cluster[{i}]"), "expected a node id"),
                    })
                    .collect::<Result<Vec<_>, _>>()?,
                _ => return field_err("instance.cluster", "expected a non-empty list of node ids"),
            };
            Ok(InstanceSpec::GraphFile {
                path: base_dir.join(path),
                cluster,
            })
        }
        (None, None) => field_err("instance", "expected `generator` or `graph_file`"),
    }
}

fn parse_complex(v: &Value, field: &str) -> Result<Complex64, ConfigError> {
    let z = match v {
        Value::String(s) => {
            let parts: Vec<&str> = s.split(',').map(str::trim).collect();
            match parts.as_slice() {
                [re, im] => match (re.parse::<f64>(), im.parse::<f64>()) {
                    (Ok(re), Ok(im)) => Complex64::new(re, im),
                    _ => return field_err(field, format!("cannot parse \"{s}\" as \"re,im\"")),
                },
                _ => return field_err(field, format!("expected \"re,im\", got \"{s}\"")),
            }
        }
        Value::Object(o) => {
            if o.len() != 2 {
                return field_err(field, "expected exactly the keys `re` and `im`");
            }
            match (o.get("re").and_then(Value::as_f64), o.get("im").and_then(Value::as_f64)) {
                (Some(re), Some(im)) => Complex64::new(re, im),
                _ => return field_err(field, "expected numeric `re` and `im`"),
            }
        }
        _ => return field_err(field, "expected \"re,im\" or {\"re\": .., \"im\": ..}"),
    };
    if !(z.re.is_finite() && z.im.is_finite()) {
        return field_err(field, "must be finite");
    }
    Ok(z)
}

fn parse_z_values(v: &Value) -> Result<Vec<Complex64>, ConfigError> {
    let Value::Array(items) = v else {
        return field_err("z_values", "expected a list");
    };
    if items.is_empty() {
        return field_err("z_values", "needs at least one shift");
    }
    items
        .iter()
        .enumerate()
        .map(|(i, item)| parse_complex(item, &format!("z_values[{i}]")))
        .collect()
}

fn parse_beta_grid(v: &Value) -> Result<BetaGrid, ConfigError> {
    let Value::Object(obj) = v else {
        return field_err("beta_grid", "expected an object");
    };
    if let Some(k) = obj
        .keys()
        .find(|k| !["min_exponent", "max_exponent", "points_per_decade"].contains(&k.as_str()))
    {
        return field_err(format!("beta_grid.{k}"), "unknown field");
    }
    let exponent = |key: &str| -> Result<f64, ConfigError> {
        match obj.get(key).and_then(Value::as_f64) {
            Some(x) if x.is_finite() => Ok(x),
            _ => field_err(format!("beta_grid.{key}"), "expected a finite number"),
        }
    };
    let min_exponent = exponent("min_exponent")?;
    let max_exponent = exponent("max_exponent")?;
    if min_exponent >= max_exponent {
        return field_err(
            "beta_grid",
            format!("min_exponent ({min_exponent}) must be below max_exponent ({max_exponent})"),
        );
    }
    let points_per_decade = match obj.get("points_per_decade") {
        None => 5,
        Some(p) => match p.as_u64() {
            Some(k) if k >= 1 => k as usize,
            _ => return field_err("beta_grid.points_per_decade", "expected an integer >= 1"),
        },
    };
    Ok(BetaGrid {
        min_exponent,
        max_exponent,
        points_per_decade,
    })
}

fn parse_checks(v: &Value) -> Result<Vec<Check>, ConfigError> {
    let Value::Array(items) = v else {
        return field_err("checks", "expected a list");
    };
    let mut checks = Vec::new();
    for (i, item) in items.iter().enumerate() {
        let field = format!("checks[{i}]");
        let Value::String(s) = item else {
            return field_err(field, "expected a check name");
        };
        let Some(c) = Check::parse(s) else {
            let known: Vec<&str> = Check::ALL.iter().map(|c| c.as_str()).collect();
            return field_err(field, format!("unknown check `{s}` (known: {})", known.join(", ")));
        };
        if checks.contains(&c) {
            return field_err(field, format!("check `{s}` listed twice"));
        }
        checks.push(c);
    }
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
        ExperimentConfig::parse(text, Path::new("/base"))
    }

    const GOOD: &str = r#"{
        "instance": {"generator": "near_degenerate_b", "params": {"gap": 0.01}},
        "z_values": ["0,1", {"re": -1, "im": 0}],
        "beta_grid": {"min_exponent": 0, "max_exponent": 3},
        "checks": ["riesz", "rate"],
        "output_dir": "out"
    }"#;

    #[test]
    fn parses_and_normalizes() {
        let c = parse(GOOD).unwrap();
        assert_eq!(c.z_values, vec![Complex64::new(0.0, 1.0), Complex64::new(-1.0, 0.0)]);
        assert_eq!(c.beta_grid.points_per_decade, 5);
        assert_eq!(c.output_dir, Path::new("/base/out"));
        assert_eq!(c.seed, 0);
        let echo = c.to_json();
        assert_eq!(echo["z_values"][0], json!({"re": 0.0, "im": 1.0}));
        assert_eq!(echo["expectation"], "convergent");
    }

    #[test]
    fn unknown_check_names_the_field() {
        let text = GOOD.replace("\"rate\"", "\"speed\"");
        match parse(&text).unwrap_err() {
            ConfigError::Field { field, message } => {
                assert_eq!(field, "checks[1]");
                assert!(message.contains("speed"));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn inverted_beta_grid_is_rejected() {
        let text = GOOD.replace("\"min_exponent\": 0", "\"min_exponent\": 4");
        assert!(matches!(parse(&text), Err(ConfigError::Field { field, .. }) if field == "beta_grid"));
    }

    #[test]
    fn syntax_errors_carry_the_line() {
        let err = parse("{\n  \"instance\": ,\n}").unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { line: 2, .. }));
    }

    #[test]
    fn unknown_fields_and_params_are_rejected() {
        let text = GOOD.replace("\"output_dir\"", "\"colour\": 1, \"output_dir\"");
        assert!(matches!(parse(&text), Err(ConfigError::Field { field, .. }) if field == "colour"));
        let text = GOOD.replace("\"gap\"", "\"gapp\"");
        assert!(matches!(parse(&text), Err(ConfigError::Field { field, .. }) if field == "instance.params.gapp"));
        let text = GOOD.replace("\"0,1\"", "\"0;1\"");
        assert!(matches!(parse(&text), Err(ConfigError::Field { field, .. }) if field == "z_values[0]"));
    }

    #[test]
    fn graph_instances_resolve_relative_paths() {
        let text = r#"{
            "instance": {"graph_file": "g.txt", "cluster": ["2", 3]},
            "z_values": ["-1,0"],
            "beta_grid": {"min_exponent": 1, "max_exponent": 4, "points_per_decade": 2},
            "checks": ["reduction"],
            "output_dir": "o"
        }"#;
        let c = parse(text).unwrap();
        assert_eq!(
            c.instance,
            InstanceSpec::GraphFile {
                path: PathBuf::from("/base/g.txt"),
                cluster: vec!["2".into(), "3".into()],
            }
        );
        let bad = GOOD.replace("\"riesz\"", "\"reduction\"");
        assert!(parse(&bad).is_err());
    }
}
