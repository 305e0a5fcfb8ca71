//! `sctool`: batch runner for large-coupling experiments.
//!
//! ```text
//! sctool run <config.json>       run checks, write report.json and curve CSVs
//! sctool validate <config.json>  parse and echo the normalized config
//! sctool zoo list                list generators and their parameters
//! ```
//!
//! Exit codes: 0 all checks pass, 1 a check failed, 2 bad config or instance,
//! 3 every β hit a singular shift in some check.

pub mod config;
pub mod instance;
pub mod output;
pub mod runner;

use std::fmt::Write as _;
use std::path::Path;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};
use spectral_coupling::zoo::{generators, ModelInstance};

use config::{complex_json, ExperimentConfig};
use runner::CheckOutcome;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "sctool", version, about = "Large-coupling resolvent experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the configured checks and write the report.
    Run { config: std::path::PathBuf },
    /// Parse a config and print its normalized form.
    Validate { config: std::path::PathBuf },
    /// Model zoo commands.
    Zoo {
        #[command(subcommand)]
        command: ZooCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum ZooCommand {
    /// List generators with their parameter schemas.
    List,
}

/// Result of [`run`]: the exit code and what was written.
#[derive(Debug)]
pub struct RunSummary {
    pub exit_code: i32,
    pub report: Value,
    pub outcomes: Vec<CheckOutcome>,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error("instance: {0}")]
    Instance(#[from] instance::InstanceError),
    #[error("SC_THREADS: {0}")]
    Threads(String),
    #[error("writing {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

fn thread_cap() -> Result<Option<usize>, RunError> {
    match std::env::var("SC_THREADS") {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(RunError::Threads(format!("expected a positive integer, got {s:?}"))),
        },
    }
}

fn instance_json(inst: &ModelInstance) -> Value {
    let params: serde_json::Map<String, Value> = inst
        .params
        .iter()
        .map(|(k, v)| (k.clone(), Value::String(v.clone())))
        .collect();
    let mut out = json!({
        "name": inst.name,
        "description": inst.description,
        "dim": inst.dim(),
        "tags": inst.tags.iter().map(|t| t.as_str()).collect::<Vec<_>>(),
        "params": params,
        "has_expected_limit": inst.expected_limit.is_some(),
    });
    if let Some(src) = &inst.graph {
        let ids = src.graph.node_ids();
        out["cluster"] = src.cluster.iter().map(|&i| ids[i].clone()).collect();
    }
    out
}

fn outcome_json(o: &CheckOutcome) -> Value {
    json!({
        "check": o.check.as_str(),
        "z": o.z.map(complex_json),
        "passed": o.passed,
        "threshold": o.threshold,
        "metrics": o.metrics,
        "note": o.note,
        "curve_file": o.curve_file(),
    })
}

/// Runs a parsed config and writes `report.json`, the curve CSVs and the
/// plotting stub into `config.output_dir`.
pub fn run_config(config: &ExperimentConfig) -> Result<RunSummary, RunError> {
    let threads = thread_cap()?;
    let inst = instance::build_instance(&config.instance, config.seed)?;
    let outcomes = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| RunError::Threads(e.to_string()))?
            .install(|| runner::run_checks(config, &inst)),
        None => runner::run_checks(config, &inst),
    };

    let exit_code = if outcomes.iter().any(|o| o.all_singular) {
        EXIT_NUMERICAL
    } else if outcomes.iter().any(|o| !o.passed) {
        EXIT_CHECK_FAILED
    } else {
        EXIT_OK
    };
    let passed = outcomes.iter().filter(|o| o.passed).count();
    let report = json!({
        "tool": "sctool",
        "version": env!("CARGO_PKG_VERSION"),
        "config": config.to_json(),
        "instance": instance_json(&inst),
        "checks": outcomes.iter().map(outcome_json).collect::<Vec<_>>(),
        "summary": {
            "passed": passed,
            "failed": outcomes.len() - passed,
            "exit_code": exit_code,
        },
    });

    let dir = &config.output_dir;
    let io = |path: &Path, source| RunError::Io {
        path: path.display().to_string(),
        source,
    };
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    for o in &outcomes {
        if let (Some(curve), Some(name)) = (&o.curve, o.curve_file()) {
            let path = dir.join(name);
            output::write_curve_csv(&path, &curve.betas, &curve.values).map_err(|e| io(&path, e))?;
        }
    }
    let plot = dir.join("plot_curves.py");
    std::fs::write(&plot, output::PLOT_SCRIPT).map_err(|e| io(&plot, e))?;
    let path = dir.join("report.json");
    std::fs::write(&path, output::to_json_string(&report)).map_err(|e| io(&path, e))?;

    Ok(RunSummary {
        exit_code,
        report,
        outcomes,
    })
}

pub fn zoo_listing() -> String {
    let mut s = String::new();
    for g in generators() {
        let _ = writeln!(s, "{}: {}", g.name, g.summary);
        for p in g.params {
            let default = p.default.map(|d| format!(", default {d}")).unwrap_or_default();
            let _ = writeln!(s, "    {} ({}{}): {}", p.name, p.kind, default, p.description);
        }
    }
    s
}

/// Entry point shared by the binary and the tests. Returns the exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match cli.command {
        Command::Zoo {
            command: ZooCommand::List,
        } => {
            print!("{}", zoo_listing());
            EXIT_OK
        }
        Command::Validate { config } => match ExperimentConfig::load(&config) {
            Ok(c) => {
                print!("{}", output::to_json_string(&c.to_json()));
                EXIT_OK
            }
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_CONFIG
            }
        },
        Command::Run { config } => {
            let result = ExperimentConfig::load(&config)
                .map_err(RunError::from)
                .and_then(|c| run_config(&c));
            match result {
                Ok(summary) => {
                    for o in &summary.outcomes {
                        let z = o.z.map(|z| format!(" z={}", z)).unwrap_or_default();
                        let status = if o.passed { "PASS" } else { "FAIL" };
                        println!("{status} {}{z}", o.check);
                    }
                    summary.exit_code
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    EXIT_CONFIG
                }
            }
        }
    }
}
