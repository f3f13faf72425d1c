//! Problem files, run-configuration files and objective bindings.
//!
//! A problem is either the name of a built-in benchmark (`"friedman8c"`,
//! `"rosenbrock"`, `"func3c"`) or an inline declaration:
//!
//! ```json
//! {
//!   "variables": [
//!     {"name": "solver", "type": "categorical", "labels": ["cg", "gmres"]},
//!     {"name": "tol", "type": "continuous", "lo": 1e-6, "hi": 1e-2},
//!     {"name": "blocks", "type": "integer", "lo": 1, "hi": 64}
//!   ],
//!   "direction": "minimize",
//!   "objective": {"command": ["python3", "objective.py"]}
//! }
//! ```
//!
//! A command objective receives one JSON object per evaluation on stdin,
//! mapping variable names to labels (categorical) or numbers, and must print a
//! single number on stdout.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Stdio};

use hybridbo_core::bench::{self, BenchmarkFn};
use hybridbo_core::domain::{Coordinate, EffectiveSpace};
use hybridbo_core::optimizer::ObjectiveError;
use hybridbo_core::{MixedPoint, ProblemSpec, RunConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("cannot parse {path}: {source}")]
    Parse { path: String, source: serde_json::Error },
    #[error("unknown benchmark `{0}`; valid names are: {names}", names = bench::BENCHMARK_NAMES.join(", "))]
    UnknownBenchmark(String),
    #[error("problem has no objective binding; add \"objective\": {{\"command\": [...]}}")]
    NoObjective,
    #[error("no problem given; pass --problem or add \"problem\" to the config file")]
    NoProblem,
    #[error("invalid problem: {0}")]
    Domain(#[from] hybridbo_core::domain::DomainError),
    #[error("invalid configuration: {0}")]
    Run(#[from] hybridbo_core::optimizer::ConfigError),
    #[error("{0}")]
    Invalid(String),
}

/// How to evaluate an inline problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveBinding {
    /// Program and arguments; see the module docs for the protocol.
    Command(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    #[serde(flatten)]
    pub spec: ProblemSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<ObjectiveBinding>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProblemSource {
    Benchmark(String),
    Inline(ProblemFile),
}

/// A run-configuration file: every [`RunConfig`] field is optional, and the
/// problem may be embedded. The resolved `config.json` written next to each
/// run has this shape, so it can be fed back to reproduce the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct RunFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<ProblemSource>,
    #[serde(flatten)]
    pub run: RunConfig,
}

fn read(path: &Path) -> Result<String, ConfigError> {
    fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.display().to_string(), source })
}

pub fn load_run_file(path: &Path) -> Result<RunFile, ConfigError> {
    let text = read(path)?;
    serde_json::from_str(&text).map_err(|source| ConfigError::Parse { path: path.display().to_string(), source })
}

/// Interpret a `--problem` argument: a benchmark name or a JSON file path.
pub fn problem_source(arg: &str) -> Result<ProblemSource, ConfigError> {
    if bench::BENCHMARK_NAMES.contains(&arg) || bench::by_name(arg).is_some() {
        return Ok(ProblemSource::Benchmark(arg.to_string()));
    }
    let path = Path::new(arg);
    if !path.exists() {
        return Err(ConfigError::UnknownBenchmark(arg.to_string()));
    }
    let text = read(path)?;
    let file: ProblemFile =
        serde_json::from_str(&text).map_err(|source| ConfigError::Parse { path: arg.to_string(), source })?;
    Ok(ProblemSource::Inline(file))
}

/// A problem ready to evaluate.
pub struct LoadedProblem {
    pub name: String,
    pub spec: ProblemSpec,
    pub space: EffectiveSpace,
    pub known_max: Option<f64>,
    objective: Evaluator,
}

enum Evaluator {
    Bench(Box<dyn BenchmarkFn>),
    Command(Vec<String>),
}

impl std::fmt::Debug for LoadedProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LoadedProblem").field("name", &self.name).field("spec", &self.spec).finish_non_exhaustive()
    }
}

impl LoadedProblem {
    pub fn load(source: &ProblemSource) -> Result<Self, ConfigError> {
        match source {
            ProblemSource::Benchmark(name) => {
                let b = bench::by_name(name).ok_or_else(|| ConfigError::UnknownBenchmark(name.clone()))?;
                Ok(Self::from_benchmark(b))
            }
            ProblemSource::Inline(file) => {
                let space = file.spec.effective()?;
                let argv = match &file.objective {
                    Some(ObjectiveBinding::Command(argv)) if !argv.is_empty() => argv.clone(),
                    Some(ObjectiveBinding::Command(_)) => {
                        return Err(ConfigError::Invalid("objective command must not be empty".into()))
                    }
                    None => return Err(ConfigError::NoObjective),
                };
                Ok(LoadedProblem {
                    name: argv[0].clone(),
                    spec: file.spec.clone(),
                    space,
                    known_max: None,
                    objective: Evaluator::Command(argv),
                })
            }
        }
    }

    pub fn from_benchmark(b: Box<dyn BenchmarkFn>) -> Self {
        LoadedProblem {
            name: b.name().to_string(),
            spec: b.problem().clone(),
            space: b.space().clone(),
            known_max: b.known_max(),
            objective: Evaluator::Bench(b),
        }
    }

    pub fn evaluate(&self, x: &MixedPoint) -> Result<f64, ObjectiveError> {
        match &self.objective {
            Evaluator::Bench(b) => b.evaluate(x).map_err(|e| ObjectiveError(e.to_string())),
            Evaluator::Command(argv) => run_command(argv, &point_json(&self.space, x)),
        }
    }
}

/// A point as a JSON object keyed by variable name.
pub fn point_json(space: &EffectiveSpace, x: &MixedPoint) -> serde_json::Value {
    let mut map = serde_json::Map::new();
    for ((name, coord), slot) in space.names().into_iter().zip(space.describe(x)).zip(&space.slots) {
        let value = match coord {
            Coordinate::Label(l) => serde_json::Value::String(l),
            Coordinate::Real(v) => match slot {
                hybridbo_core::domain::Slot::Con(j) if space.cons[*j].integer => serde_json::json!(v as i64),
                _ => serde_json::json!(v),
            },
        };
        map.insert(name.to_string(), value);
    }
    serde_json::Value::Object(map)
}

fn run_command(argv: &[String], input: &serde_json::Value) -> Result<f64, ObjectiveError> {
    let mut child = Command::new(&argv[0])
        .args(&argv[1..])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::inherit())
        .spawn()
        .map_err(|e| ObjectiveError(format!("cannot start `{}`: {e}", argv[0])))?;
    {
        let mut stdin = child.stdin.take().expect("piped stdin");
        writeln!(stdin, "{input}").map_err(|e| ObjectiveError(format!("cannot write to objective: {e}")))?;
    }
    let out = child.wait_with_output().map_err(|e| ObjectiveError(format!("objective did not finish: {e}")))?;
    if !out.status.success() {
        return Err(ObjectiveError(format!("objective exited with {}", out.status)));
    }
    let text = String::from_utf8_lossy(&out.stdout);
    text.trim().parse::<f64>().map_err(|_| ObjectiveError(format!("objective printed `{}`, expected a number", text.trim())))
}
