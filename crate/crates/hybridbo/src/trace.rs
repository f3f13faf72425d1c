//! Trace CSV files and run directories.
//!
//! One row per evaluation. Columns:
//!
//! | column | content |
//! |---|---|
//! | `iter` | 0-based evaluation index |
//! | `is_pilot` | `true` for pilot samples |
//! | one per variable | label (categorical) or number, declaration order |
//! | `y` | raw objective value |
//! | `best_so_far` | best raw value up to this row |
//! | `kernel` | kernel used for the proposal (empty for pilots) |
//! | `decisions` | tree node decisions taken for the proposal |
//! | `loglik_<k>`, `acq_<k>`, `crit_<k>` | scores of candidate kernel `k` (empty when not fitted) |
//!
//! Reals are written in the shortest form that parses back to the same `f64`.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use hybridbo_core::domain::{Coordinate, Direction, EffectiveSpace, Slot};
use hybridbo_core::optimizer::{RunTrace, TraceRecord};
use hybridbo_core::selection::CandidateScore;
use hybridbo_core::{KernelSpec, MixedPoint};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("row {row}: {message}")]
    Format { row: usize, message: String },
}

fn real(v: f64) -> String {
    format!("{v}")
}

fn header(space: &EffectiveSpace, kernels: &[KernelSpec]) -> Vec<String> {
    let mut h: Vec<String> = ["iter", "is_pilot"].iter().map(|s| s.to_string()).collect();
    h.extend(space.names().into_iter().map(String::from));
    h.extend(["y", "best_so_far", "kernel", "decisions"].iter().map(|s| s.to_string()));
    for k in kernels {
        let name = k.name();
        h.push(format!("loglik_{name}"));
        h.push(format!("acq_{name}"));
        h.push(format!("crit_{name}"));
    }
    h
}

pub fn write_trace<W: Write>(w: W, trace: &RunTrace, space: &EffectiveSpace) -> Result<(), TraceError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header(space, &trace.kernels))?;
    for r in &trace.records {
        let mut row = vec![r.iter.to_string(), r.is_pilot.to_string()];
        row.extend(space.describe(&r.point).into_iter().map(|c| match c {
            Coordinate::Label(l) => l,
            Coordinate::Real(v) => real(v),
        }));
        row.push(real(r.value));
        row.push(real(r.best_so_far));
        row.push(r.kernel.map(|k| trace.kernels[k].name()).unwrap_or_default());
        row.push(r.decisions.to_string());
        for k in 0..trace.kernels.len() {
            match r.scores.iter().find(|s| s.kernel == k) {
                Some(s) => row.extend([real(s.loglik), real(s.acq), real(s.criterion_value)]),
                None => row.extend([String::new(), String::new(), String::new()]),
            }
        }
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// Parse a trace written by [`write_trace`]. Wall times, the tree dump and the
/// final model are not part of the CSV and come back empty.
pub fn read_trace<R: Read>(r: R, space: &EffectiveSpace) -> Result<RunTrace, TraceError> {
    let mut rd = csv::Reader::from_reader(r);
    let head: Vec<String> = rd.headers()?.iter().map(String::from).collect();
    let nvars = space.slots.len();
    let fixed = 2 + nvars + 4;
    let bad = |row: usize, message: String| TraceError::Format { row, message };
    if head.len() < fixed || !(head.len() - fixed).is_multiple_of(3) {
        return Err(bad(0, format!("unexpected header with {} columns", head.len())));
    }
    let expected_names = space.names();
    if head[2..2 + nvars].iter().zip(&expected_names).any(|(a, b)| a != b) {
        return Err(bad(0, "variable columns do not match the problem".into()));
    }
    let mut kernels = Vec::new();
    for chunk in head[fixed..].chunks(3) {
        let name = chunk[0].strip_prefix("loglik_").ok_or_else(|| bad(0, format!("bad score column `{}`", chunk[0])))?;
        kernels.push(name.parse::<KernelSpec>().map_err(|e| bad(0, e.to_string()))?);
    }
    let has_cat = !space.cats.is_empty();
    let has_con = !space.cons.is_empty();
    let mut trace = RunTrace { direction: space.direction, kernels: kernels.clone(), ..RunTrace::default() };
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let f = |j: usize| -> Result<f64, TraceError> {
            rec[j].parse::<f64>().map_err(|_| bad(row, format!("`{}` is not a number", &rec[j])))
        };
        let mut point = MixedPoint { cat: vec![0; space.cats.len()], con: vec![0.0; space.cons.len()] };
        for (v, slot) in space.slots.iter().enumerate() {
            let cell = &rec[2 + v];
            match *slot {
                Slot::Cat(c) => {
                    point.cat[c] = space.cats[c]
                        .labels
                        .iter()
                        .position(|l| l == cell)
                        .ok_or_else(|| bad(row, format!("unknown label `{cell}`")))?;
                }
                Slot::Con(c) => point.con[c] = f(2 + v)?,
            }
        }
        let base = 2 + nvars;
        let kernel = match &rec[base + 2] {
            "" => None,
            name => Some(
                kernels
                    .iter()
                    .position(|k| k.name() == name)
                    .ok_or_else(|| bad(row, format!("kernel `{name}` has no score columns")))?,
            ),
        };
        let mut scores = Vec::new();
        for (k, spec) in kernels.iter().enumerate() {
            let j = fixed + 3 * k;
            if rec[j].is_empty() {
                continue;
            }
            scores.push(CandidateScore {
                kernel: k,
                loglik: f(j)?,
                acq: f(j + 1)?,
                n_params: spec.active_params(has_cat, has_con).len(),
                criterion_value: f(j + 2)?,
            });
        }
        let is_pilot = rec[1].parse::<bool>().map_err(|_| bad(row, "is_pilot must be true or false".into()))?;
        if is_pilot {
            trace.pilots += 1;
        }
        trace.records.push(TraceRecord {
            iter: rec[0].parse().map_err(|_| bad(row, "bad iteration".into()))?,
            is_pilot,
            point,
            value: f(base)?,
            best_so_far: f(base + 1)?,
            kernel,
            scores,
            decisions: rec[base + 3].parse().map_err(|_| bad(row, "bad decision count".into()))?,
            seconds: 0.0,
        });
    }
    Ok(trace)
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub problem: String,
    pub direction: Direction,
    pub evaluations: usize,
    pub pilots: usize,
    pub best_value: Option<f64>,
    pub best_iter: Option<usize>,
    pub best_point: serde_json::Value,
    pub known_max: Option<f64>,
    pub selection_counts: BTreeMap<String, usize>,
    pub final_kernel: Option<String>,
    pub final_params: BTreeMap<String, f64>,
    pub tree: &'static str,
}

pub fn summarize(name: &str, trace: &RunTrace, space: &EffectiveSpace, known_max: Option<f64>) -> RunSummary {
    let best = trace.best();
    let selection_counts =
        trace.kernels.iter().map(|k| k.name()).zip(trace.selection_counts()).collect::<BTreeMap<_, _>>();
    let (final_kernel, final_params) = match trace.final_model {
        Some((k, params)) => {
            let spec = trace.kernels[k];
            let active = spec.active_params(!space.cats.is_empty(), !space.cons.is_empty());
            (Some(spec.name()), active.into_iter().map(|h| (h.name().to_string(), params.get(h))).collect())
        }
        None => (None, BTreeMap::new()),
    };
    RunSummary {
        problem: name.to_string(),
        direction: trace.direction,
        evaluations: trace.records.len(),
        pilots: trace.pilots,
        best_value: best.map(|r| r.value),
        best_iter: best.map(|r| r.iter),
        best_point: best.map_or(serde_json::Value::Null, |r| crate::problem::point_json(space, &r.point)),
        known_max,
        selection_counts,
        final_kernel,
        final_params,
        tree: "tree.json",
    }
}

/// Write `trace.csv`, `timing.csv`, `summary.json` and `tree.json` into `dir`.
///
/// Everything except `timing.csv` is a pure function of the resolved
/// configuration.
pub fn write_run_dir(
    dir: &Path,
    name: &str,
    trace: &RunTrace,
    space: &EffectiveSpace,
    known_max: Option<f64>,
) -> Result<(), TraceError> {
    fs::create_dir_all(dir)?;
    write_trace(fs::File::create(dir.join("trace.csv"))?, trace, space)?;
    let mut timing = csv::Writer::from_path(dir.join("timing.csv"))?;
    timing.write_record(["iter", "seconds"])?;
    for r in &trace.records {
        timing.write_record([r.iter.to_string(), real(r.seconds)])?;
    }
    timing.flush()?;
    let summary = summarize(name, trace, space, known_max);
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    let tree = trace.tree.clone().unwrap_or_default();
    fs::write(dir.join("tree.json"), serde_json::to_string_pretty(&tree)? + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use hybridbo_core::optimizer::{run, RunConfig};
    use hybridbo_core::{Direction, ProblemSpec, VariableSpec};

    #[test]
    fn round_trip_small_run() {
        let problem = ProblemSpec::new(
            vec![
                VariableSpec::categorical("c", &["lo", "mid", "hi"]),
                VariableSpec::continuous("x", -1.0, 1.0),
                VariableSpec::integer("n", 1, 50),
            ],
            Direction::Minimize,
        );
        let space = problem.effective().unwrap();
        let cfg = RunConfig { n0: 3, budget: 6, ..RunConfig::default() };
        let mut f = |p: &MixedPoint| Ok((p.con[0] - 0.1).powi(2) + p.cat[0] as f64 + p.con[1] / 50.0);
        let trace = run(&problem, &mut f, &cfg).unwrap();
        let mut buf = Vec::new();
        write_trace(&mut buf, &trace, &space).unwrap();
        let back = read_trace(buf.as_slice(), &space).unwrap();
        let mut expected = trace.clone();
        expected.tree = None;
        expected.final_model = None;
        for r in &mut expected.records {
            r.seconds = 0.0;
        }
        assert_eq!(back, expected);
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("iter,is_pilot,c,x,n,y,best_so_far,kernel,decisions,loglik_mlp+matern,"));
    }
}
