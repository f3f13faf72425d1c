//! Repeated runs over seeds and methods.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use hybridbo_core::domain::EffectiveSpace;
use hybridbo_core::optimizer::{self, Objective, ObjectiveError, RunConfig, RunTrace, Strategy};
use hybridbo_core::{MixedPoint, ProblemSpec};
use log::warn;
use rayon::prelude::*;
use serde::Serialize;

use crate::trace::{self, TraceError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Tree search with UCB selection.
    HybridM,
    /// Tree search with Dirichlet-Multinomial selection.
    HybridD,
    /// Uniform random search.
    Random,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::HybridM, Method::HybridD, Method::Random];

    pub fn name(self) -> &'static str {
        match self {
            Method::HybridM => "hybridm",
            Method::HybridD => "hybridd",
            Method::Random => "random",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| format!("unknown method `{s}`; valid methods are: hybridm, hybridd, random"))
    }
}

/// One arm of an experiment: a method plus the configuration it runs with.
#[derive(Debug, Clone)]
pub struct Arm {
    pub label: String,
    pub method: Method,
    pub config: RunConfig,
}

impl Arm {
    pub fn new(method: Method, config: RunConfig) -> Self {
        Arm { label: method.name().to_string(), method, config }
    }

    pub fn labelled(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }
}

pub fn run_one(
    arm: &Arm,
    problem: &ProblemSpec,
    objective: &(dyn Fn(&MixedPoint) -> Result<f64, ObjectiveError> + Sync),
    seed: u64,
) -> Result<RunTrace, optimizer::RunError> {
    let mut f = |x: &MixedPoint| objective(x);
    let f: &mut Objective<'_> = &mut f;
    match arm.method {
        Method::Random => optimizer::random_baseline(problem, f, arm.config.budget, seed),
        Method::HybridM | Method::HybridD => {
            let strategy = if arm.method == Method::HybridM { Strategy::Ucts } else { Strategy::Dirichlet };
            let cfg = RunConfig { seed, strategy, ..arm.config.clone() };
            optimizer::run(problem, f, &cfg)
        }
    }
}

/// Per-arm statistics over successful runs.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ArmSummary {
    pub label: String,
    pub method: Method,
    pub seeds: Vec<u64>,
    /// Pointwise mean of best-so-far over runs.
    pub mean: Vec<f64>,
    /// Pointwise sample standard deviation (0 for a single run).
    pub std: Vec<f64>,
    /// Final best value of every successful run, in seed order.
    pub finals: Vec<f64>,
    pub final_mean: f64,
    pub failures: Vec<(u64, String)>,
}

impl ArmSummary {
    pub fn from_traces(label: &str, method: Method, runs: &[(u64, &RunTrace)], failures: Vec<(u64, String)>) -> Self {
        let len = runs.iter().map(|(_, t)| t.records.len()).min().unwrap_or(0);
        let n = runs.len() as f64;
        let mut mean = vec![0.0; len];
        let mut std = vec![0.0; len];
        for i in 0..len {
            let vals: Vec<f64> = runs.iter().map(|(_, t)| t.records[i].best_so_far).collect();
            let m = vals.iter().sum::<f64>() / n;
            mean[i] = m;
            if runs.len() > 1 {
                std[i] = (vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0)).sqrt();
            }
        }
        let finals: Vec<f64> = runs.iter().filter_map(|(_, t)| t.best_value()).collect();
        let final_mean = if finals.is_empty() { f64::NAN } else { finals.iter().sum::<f64>() / finals.len() as f64 };
        ArmSummary {
            label: label.to_string(),
            method,
            seeds: runs.iter().map(|(s, _)| *s).collect(),
            mean,
            std,
            finals,
            final_mean,
            failures,
        }
    }
}

#[derive(Debug)]
pub struct BatchResult {
    /// `(arm index, seed, outcome)` for every run, arm-major then seed order.
    pub runs: Vec<(usize, u64, Result<RunTrace, String>)>,
    pub summaries: Vec<ArmSummary>,
}

impl BatchResult {
    pub fn trace(&self, arm: usize, seed: u64) -> Option<&RunTrace> {
        self.runs.iter().find(|(a, s, _)| *a == arm && *s == seed).and_then(|(_, _, r)| r.as_ref().ok())
    }
}

/// Run every arm on every seed. Runs execute in parallel on the rayon pool;
/// each owns its random streams, so results do not depend on scheduling.
/// Failed runs are logged and excluded from the statistics.
pub fn batch_experiment(
    arms: &[Arm],
    problem: &ProblemSpec,
    objective: &(dyn Fn(&MixedPoint) -> Result<f64, ObjectiveError> + Sync),
    seeds: &[u64],
) -> BatchResult {
    let jobs: Vec<(usize, u64)> = (0..arms.len()).flat_map(|a| seeds.iter().map(move |&s| (a, s))).collect();
    let runs: Vec<(usize, u64, Result<RunTrace, String>)> = jobs
        .par_iter()
        .map(|&(a, s)| (a, s, run_one(&arms[a], problem, objective, s).map_err(|e| e.to_string())))
        .collect();
    let summaries = arms
        .iter()
        .enumerate()
        .map(|(a, arm)| {
            let mut ok = Vec::new();
            let mut failures = Vec::new();
            for (_, seed, r) in runs.iter().filter(|(i, _, _)| *i == a) {
                match r {
                    Ok(t) => ok.push((*seed, t)),
                    Err(e) => {
                        warn!("{} seed {seed} failed and is excluded: {e}", arm.label);
                        failures.push((*seed, e.clone()));
                    }
                }
            }
            ArmSummary::from_traces(&arm.label, arm.method, &ok, failures)
        })
        .collect();
    BatchResult { runs, summaries }
}

/// Write `<label>/seed_<s>.csv` per run, `summary.csv` and `summary.json`.
pub fn write_batch(dir: &Path, result: &BatchResult, arms: &[Arm], space: &EffectiveSpace) -> Result<(), TraceError> {
    fs::create_dir_all(dir)?;
    for (a, seed, r) in &result.runs {
        if let Ok(t) = r {
            let sub = dir.join(&arms[*a].label);
            fs::create_dir_all(&sub)?;
            trace::write_trace(fs::File::create(sub.join(format!("seed_{seed}.csv")))?, t, space)?;
        }
    }
    let mut w = csv::Writer::from_path(dir.join("summary.csv"))?;
    w.write_record(["method", "iter", "mean", "std", "runs"])?;
    for s in &result.summaries {
        for i in 0..s.mean.len() {
            w.write_record([
                s.label.clone(),
                i.to_string(),
                format!("{}", s.mean[i]),
                format!("{}", s.std[i]),
                s.seeds.len().to_string(),
            ])?;
        }
    }
    w.flush()?;
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&result.summaries)? + "\n")?;
    Ok(())
}

/// Parse `a..b` (inclusive), `a..=b`, a single seed, or a comma list.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, String> {
    let s = s.trim();
    let num = |t: &str| t.trim().parse::<u64>().map_err(|_| format!("bad seed `{t}`"));
    if let Some((a, b)) = s.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        let (a, b) = (num(a)?, num(b)?);
        if b < a {
            return Err(format!("empty seed range {s}"));
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(num).collect()
}
