//! The sequential optimization loop.
//!
//! Each sequential step:
//!
//! 1. picks the categorical part by walking the category tree,
//! 2. fits one GP per candidate kernel on the whole mixed history,
//! 3. scores every candidate by log-likelihood and by the largest expected
//!    improvement over the continuous slice at the chosen categories,
//! 4. keeps the kernel that wins the configured criterion and proposes that
//!    kernel's EI maximizer,
//! 5. evaluates the objective and back-propagates the value through the tree.
//!
//! Candidate fits are independent; an [`Executor`] decides how they are
//! scheduled. Every fit and acquisition search draws from its own random
//! substream, so results do not depend on the schedule.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use thiserror::Error;

use crate::domain::{DomainError, EffectiveSpace, EncodedPoint, Encoding, MixedPoint, ProblemSpec, SampleHistory};
use crate::gp::{self, FitConfig, GpError, GpModel};
use crate::kernels::{KernelParams, KernelSpec};
use crate::rng::{self, Rng, Stream};
use crate::search::{compass_search, CompassSettings};
use crate::selection::{self, CandidateScore, Criterion, SelectionError};
use crate::tree::{CategoryTree, TreeDump, TreeError};

pub use crate::tree::{RewardVariant, Strategy};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("pilot count must be at least 2, got {0}")]
    TooFewPilots(usize),
    #[error("budget {budget} is smaller than the pilot count {n0}")]
    BudgetBelowPilots { budget: usize, n0: usize },
    #[error("at least one candidate kernel is required")]
    NoKernels,
    #[error("epsilon must lie in [0, 1], got {0}")]
    Epsilon(f64),
    #[error("exploration constant must be finite and non-negative, got {0}")]
    ExplorationConstant(f64),
    #[error("acquisition search needs at least one probe")]
    NoProbes,
    #[error("initial Dirichlet parameter must be positive, got {0}")]
    InitialAlpha(f64),
    #[error("{0}")]
    Bounds(&'static str),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("invalid problem: {0}")]
    Domain(#[from] DomainError),
    #[error("every candidate kernel failed to fit at step {step}: {errors:?}")]
    AllFitsFailed { step: usize, errors: Vec<GpError> },
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("objective failed at evaluation {iteration}: {message}")]
    Objective { iteration: usize, message: String, partial: Box<RunTrace> },
}

/// Failure reported by an objective function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectiveError(pub String);

impl<S: Into<String>> From<S> for ObjectiveError {
    fn from(s: S) -> Self {
        ObjectiveError(s.into())
    }
}

/// Settings of the expected-improvement maximizer.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct EiSearch {
    /// Uniform probes drawn over the continuous slice.
    pub probes: usize,
    /// EI evaluations per compass-search refinement.
    pub refine_steps: usize,
    /// Number of best probes each refined separately.
    pub refine_starts: usize,
    /// Score candidate kernels by EI over the whole mixed space instead of the
    /// slice at the selected categories.
    pub unconditional: bool,
    /// Also refine from the best sample observed at the selected categories
    /// (or the overall best when that leaf has no samples yet).
    pub incumbent_start: bool,
}

impl Default for EiSearch {
    fn default() -> Self {
        EiSearch { probes: 100, refine_steps: 50, refine_starts: 1, unconditional: false, incumbent_start: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct RunConfig {
    /// Pilot samples evaluated before any model-guided sample.
    pub n0: usize,
    /// Total evaluations, pilots included.
    pub budget: usize,
    pub strategy: Strategy,
    pub criterion: Criterion,
    pub kernels: Vec<KernelSpec>,
    pub c_ucb: f64,
    pub epsilon: f64,
    pub ei: EiSearch,
    pub fit: FitConfig,
    pub encoding: Encoding,
    pub reward: RewardVariant,
    pub initial_alpha: f64,
    /// Start each kernel's first restart from its previous fit.
    pub warm_start: bool,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n0: 10,
            budget: 100,
            strategy: Strategy::Ucts,
            criterion: Criterion::RHalf,
            kernels: KernelSpec::defaults(),
            c_ucb: core::f64::consts::SQRT_2,
            epsilon: 0.1,
            ei: EiSearch::default(),
            fit: FitConfig::default(),
            encoding: Encoding::IntegerCode,
            reward: RewardVariant::Scaled,
            initial_alpha: 1.0,
            warm_start: true,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n0 < 2 {
            return Err(ConfigError::TooFewPilots(self.n0));
        }
        if self.budget < self.n0 {
            return Err(ConfigError::BudgetBelowPilots { budget: self.budget, n0: self.n0 });
        }
        if self.kernels.is_empty() {
            return Err(ConfigError::NoKernels);
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(ConfigError::Epsilon(self.epsilon));
        }
        if !(self.c_ucb >= 0.0 && self.c_ucb.is_finite()) {
            return Err(ConfigError::ExplorationConstant(self.c_ucb));
        }
        if self.ei.probes == 0 {
            return Err(ConfigError::NoProbes);
        }
        if !(self.initial_alpha > 0.0 && self.initial_alpha.is_finite()) {
            return Err(ConfigError::InitialAlpha(self.initial_alpha));
        }
        self.fit.bounds.validate().map_err(ConfigError::Bounds)
    }
}

/// Result of maximizing EI over continuous coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct AcqResult {
    pub point: MixedPoint,
    pub ei: f64,
}

fn encode_unit(space: &EffectiveSpace, cat_code: &[f64], cat: &[usize], unit: &[f64], encoding: Encoding) -> (MixedPoint, EncodedPoint) {
    let point = space.point_from_unit(cat.to_vec(), unit);
    let enc = match encoding {
        Encoding::IntegerCode => EncodedPoint {
            cat: cat_code.to_vec(),
            con: point.con.iter().zip(&space.cons).map(|(&x, v)| v.normalize(x)).collect(),
        },
        Encoding::OneHot => space.encode(&point, encoding).expect("point built inside the space"),
    };
    (point, enc)
}

/// Maximize EI over the continuous coordinates with the categories fixed to
/// `cat`: `settings.probes` uniform probes, then a bounded compass search from
/// each of the best `settings.refine_starts` probes. Relaxed integer coordinates are rounded before evaluation.
pub fn maximize_ei_conditional(
    model: &GpModel,
    cat: &[usize],
    space: &EffectiveSpace,
    encoding: Encoding,
    y_best: f64,
    settings: &EiSearch,
    rng: &mut Rng,
) -> AcqResult {
    maximize_ei_conditional_from(model, cat, space, encoding, y_best, settings, &[], rng)
}

/// [`maximize_ei_conditional`] with extra refinement starts given in unit
/// coordinates (typically the incumbent's continuous part).
#[allow(clippy::too_many_arguments)]
pub fn maximize_ei_conditional_from(
    model: &GpModel,
    cat: &[usize],
    space: &EffectiveSpace,
    encoding: Encoding,
    y_best: f64,
    settings: &EiSearch,
    starts: &[Vec<f64>],
    rng: &mut Rng,
) -> AcqResult {
    let cat_code: Vec<f64> = cat.iter().map(|&i| i as f64).collect();
    let d = space.cons.len();
    let ei_at = |unit: &[f64]| {
        let (_, enc) = encode_unit(space, &cat_code, cat, unit, encoding);
        model.expected_improvement(&enc, y_best)
    };
    if d == 0 {
        let point = MixedPoint { cat: cat.to_vec(), con: Vec::new() };
        return AcqResult { point, ei: ei_at(&[]) };
    }
    // best probes, highest EI first
    let keep = settings.refine_starts.max(1);
    let mut top: Vec<(f64, Vec<f64>)> = Vec::with_capacity(keep + 1);
    let mut unit = vec![0.0; d];
    for _ in 0..settings.probes.max(1) {
        for u in unit.iter_mut() {
            *u = rng.random::<f64>();
        }
        let e = ei_at(&unit);
        if top.len() < keep || e > top[top.len() - 1].0 {
            let at = top.iter().position(|(v, _)| e > *v).unwrap_or(top.len());
            top.insert(at, (e, unit.clone()));
            top.truncate(keep);
        }
    }
    let (mut best_ei, mut best_unit) = top[0].clone();
    if settings.refine_steps > 0 {
        let lo = vec![0.0; d];
        let hi = vec![1.0; d];
        let compass = CompassSettings { initial_step: 0.05, min_step: 1e-6, max_evals: settings.refine_steps + 1 };
        let mut origins: Vec<Vec<f64>> = top.into_iter().map(|(_, u)| u).collect();
        origins.extend(starts.iter().filter(|s| s.len() == d).cloned());
        for x0 in origins {
            let r = compass_search(ei_at, &x0, &lo, &hi, compass);
            if r.value > best_ei {
                best_ei = r.value;
                best_unit = r.x;
            }
        }
    }
    let point = space.point_from_unit(cat.to_vec(), &best_unit);
    AcqResult { point, ei: best_ei }
}

/// EI maximum over the whole mixed space: probes draw categories too, then the
/// best probe's continuous part is refined with its categories fixed.
pub fn maximize_ei_unconditional(
    model: &GpModel,
    space: &EffectiveSpace,
    encoding: Encoding,
    y_best: f64,
    settings: &EiSearch,
    rng: &mut Rng,
) -> AcqResult {
    let mut best: Option<AcqResult> = None;
    for _ in 0..settings.probes.max(1) {
        let p = space.random_point(rng);
        let enc = space.encode(&p, encoding).expect("point built inside the space");
        let ei = model.expected_improvement(&enc, y_best);
        if best.as_ref().is_none_or(|b| ei > b.ei) {
            best = Some(AcqResult { point: p, ei });
        }
    }
    let best = best.expect("at least one probe");
    let refined = maximize_ei_conditional(
        model,
        &best.point.cat,
        space,
        encoding,
        y_best,
        &EiSearch { probes: 1, ..*settings },
        rng,
    );
    if refined.ei > best.ei { refined } else { best }
}

/// Runs independent per-kernel jobs. Implementations may run them
/// concurrently but must return results in index order.
pub trait Executor {
    fn map(&self, n: usize, job: &(dyn Fn(usize) -> CandidateOutcome + Sync)) -> Vec<CandidateOutcome>;
}

/// Runs jobs one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Serial;

impl Executor for Serial {
    fn map(&self, n: usize, job: &(dyn Fn(usize) -> CandidateOutcome + Sync)) -> Vec<CandidateOutcome> {
        (0..n).map(job).collect()
    }
}

/// A fitted candidate together with its acquisition maximum.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub kernel: usize,
    pub model: GpModel,
    pub acq: AcqResult,
}

pub type CandidateOutcome = Result<Candidate, GpError>;

/// One proposal and how it was chosen.
#[derive(Debug, Clone)]
pub struct Proposal {
    pub point: MixedPoint,
    /// Index into the configured kernel list.
    pub kernel: usize,
    /// One score per candidate that was fitted, in kernel order.
    pub scores: Vec<CandidateScore>,
    pub params: KernelParams,
    pub ei: f64,
    /// Tree node decisions taken for this proposal.
    pub decisions: u64,
    /// Failed candidate fits, by kernel index.
    pub failures: Vec<(usize, GpError)>,
}

/// Optimizer state between evaluations.
#[derive(Debug, Clone)]
pub struct Optimizer {
    space: EffectiveSpace,
    cfg: RunConfig,
    tree: CategoryTree,
    history: SampleHistory,
    encoded: Vec<EncodedPoint>,
    tree_rng: Rng,
    step: usize,
    warm: Vec<Option<KernelParams>>,
}

impl Optimizer {
    pub fn new(space: EffectiveSpace, cfg: RunConfig) -> Result<Self, RunError> {
        cfg.validate()?;
        let tree = CategoryTree::new(space.arities(), cfg.initial_alpha);
        let tree_rng = rng::substream(cfg.seed, Stream::Tree);
        let warm = vec![None; cfg.kernels.len()];
        Ok(Optimizer { space, cfg, tree, history: SampleHistory::new(), encoded: Vec::new(), tree_rng, step: 0, warm })
    }

    pub fn space(&self) -> &EffectiveSpace {
        &self.space
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn tree(&self) -> &CategoryTree {
        &self.tree
    }

    pub fn history(&self) -> &SampleHistory {
        &self.history
    }

    /// Sequential proposals made so far.
    pub fn step(&self) -> usize {
        self.step
    }

    /// Record an evaluation (raw objective value) and back-propagate it.
    pub fn observe(&mut self, point: MixedPoint, raw_value: f64) -> Result<(), RunError> {
        let enc = self.space.encode(&point, self.cfg.encoding)?;
        let reward = self.space.direction.to_internal(raw_value);
        self.tree.backpropagate(&point.cat, reward, self.cfg.strategy, self.cfg.reward)?;
        self.encoded.push(enc);
        self.history.push(point, reward);
        Ok(())
    }

    /// Unit coordinates of the best sample at leaf `cat`, falling back to the
    /// overall best sample.
    fn incumbent_unit(&self, cat: &[usize]) -> Vec<Vec<f64>> {
        let points = self.history.points();
        let values = self.history.values();
        let best_where = |pred: &dyn Fn(&MixedPoint) -> bool| {
            (0..points.len()).filter(|&i| pred(&points[i])).max_by(|&a, &b| values[a].total_cmp(&values[b]).then(b.cmp(&a)))
        };
        let idx = best_where(&|p| p.cat == cat).or_else(|| best_where(&|_| true));
        idx.map(|i| points[i].con.iter().zip(&self.space.cons).map(|(&x, v)| v.normalize(x)).collect()).into_iter().collect()
    }

    /// Run one loop body and return the next point to evaluate.
    ///
    /// The very first sequential step uses a single kernel drawn at random;
    /// later steps fit every candidate and apply the criterion.
    pub fn propose_next(&mut self, executor: &dyn Executor) -> Result<Proposal, RunError> {
        let step = self.step;
        let decisions_before = self.tree.decisions();
        let path = self.tree.select(self.cfg.strategy, self.cfg.c_ucb, self.cfg.epsilon, &mut self.tree_rng);
        let decisions = self.tree.decisions() - decisions_before;

        let kernels: Vec<usize> = if step == 0 {
            let mut r = rng::substream(self.cfg.seed, Stream::InitialKernel);
            vec![r.random_range(0..self.cfg.kernels.len())]
        } else {
            (0..self.cfg.kernels.len()).collect()
        };
        let y_best = self.history.best().map_or(f64::NEG_INFINITY, |(_, v)| v);
        let starts = if self.cfg.ei.incumbent_start { self.incumbent_unit(&path) } else { Vec::new() };
        let job = |slot: usize| -> CandidateOutcome {
            let k = kernels[slot];
            let seed = rng::derive_seed(self.cfg.seed, Stream::Fit { iteration: step as u64, kernel: k as u64 });
            let warm = if self.cfg.warm_start { self.warm[k].as_ref() } else { None };
            let model = gp::fit_from(&self.encoded, self.history.values(), &self.cfg.kernels[k], &self.cfg.fit, seed, warm)?;
            let mut acq_rng = rng::substream(self.cfg.seed, Stream::Acquisition { iteration: step as u64, kernel: k as u64 });
            let acq = if self.cfg.ei.unconditional {
                maximize_ei_unconditional(&model, &self.space, self.cfg.encoding, y_best, &self.cfg.ei, &mut acq_rng)
            } else {
                maximize_ei_conditional_from(&model, &path, &self.space, self.cfg.encoding, y_best, &self.cfg.ei, &starts, &mut acq_rng)
            };
            Ok(Candidate { kernel: k, model, acq })
        };
        let outcomes = executor.map(kernels.len(), &job);

        let mut fitted = Vec::with_capacity(outcomes.len());
        let mut failures = Vec::new();
        for (slot, outcome) in outcomes.into_iter().enumerate() {
            match outcome {
                Ok(c) => fitted.push(c),
                Err(e) => failures.push((kernels[slot], e)),
            }
        }
        if fitted.is_empty() {
            return Err(RunError::AllFitsFailed { step, errors: failures.into_iter().map(|(_, e)| e).collect() });
        }
        for c in &fitted {
            self.warm[c.kernel] = Some(*c.model.params());
        }
        let mut scores: Vec<CandidateScore> = fitted
            .iter()
            .map(|c| CandidateScore {
                kernel: c.kernel,
                loglik: c.model.log_marginal_likelihood(),
                acq: c.acq.ei,
                n_params: c.model.param_count(),
                criterion_value: 0.0,
            })
            .collect();
        let n = self.history.len();
        selection::score_candidates(&mut scores, self.cfg.criterion, n, (n + 1).min(self.cfg.budget), self.cfg.budget)?;
        let winner = selection::select_kernel(&scores)?;
        let chosen = &fitted[winner];
        let acq = if self.cfg.ei.unconditional {
            let mut r = rng::substream(self.cfg.seed, Stream::Acquisition { iteration: step as u64, kernel: u64::MAX });
            maximize_ei_conditional_from(&chosen.model, &path, &self.space, self.cfg.encoding, y_best, &self.cfg.ei, &starts, &mut r)
        } else {
            chosen.acq.clone()
        };
        self.step += 1;
        Ok(Proposal {
            point: acq.point,
            kernel: chosen.kernel,
            scores,
            params: *chosen.model.params(),
            ei: acq.ei,
            decisions,
            failures,
        })
    }
}

/// One evaluation in a run.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub is_pilot: bool,
    pub point: MixedPoint,
    /// Raw objective value.
    pub value: f64,
    /// Best raw value so far (largest when maximizing, smallest when minimizing).
    pub best_so_far: f64,
    /// Kernel used for the proposal, as an index into [`RunTrace::kernels`].
    pub kernel: Option<usize>,
    pub scores: Vec<CandidateScore>,
    pub decisions: u64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunTrace {
    pub direction: crate::domain::Direction,
    pub kernels: Vec<KernelSpec>,
    pub pilots: usize,
    pub records: Vec<TraceRecord>,
    pub tree: Option<TreeDump>,
    /// Kernel and hyperparameters of the last proposal.
    pub final_model: Option<(usize, KernelParams)>,
}

impl RunTrace {
    /// Record with the best raw value (earliest on ties).
    pub fn best(&self) -> Option<&TraceRecord> {
        let mut best: Option<&TraceRecord> = None;
        for r in &self.records {
            let better = best.is_none_or(|b| self.direction.to_internal(r.value) > self.direction.to_internal(b.value));
            if better {
                best = Some(r);
            }
        }
        best
    }

    pub fn best_value(&self) -> Option<f64> {
        self.records.last().map(|r| r.best_so_far)
    }

    pub fn best_so_far(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.best_so_far).collect()
    }

    /// How often each configured kernel was selected.
    pub fn selection_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.kernels.len()];
        for r in &self.records {
            if let Some(k) = r.kernel {
                counts[k] += 1;
            }
        }
        counts
    }

    fn push(&mut self, mut record: TraceRecord) {
        let internal = self.direction.to_internal(record.value);
        record.best_so_far = match self.records.last() {
            Some(prev) if self.direction.to_internal(prev.best_so_far) >= internal => prev.best_so_far,
            _ => record.value,
        };
        self.records.push(record);
    }
}

/// Hooks for a run: how candidate fits are scheduled and how time is read.
pub struct RunHooks<'a> {
    pub executor: &'a dyn Executor,
    /// Monotone clock in seconds; `None` records zero durations.
    pub clock: Option<&'a dyn Fn() -> f64>,
}

impl Default for RunHooks<'_> {
    fn default() -> Self {
        RunHooks { executor: &Serial, clock: None }
    }
}

pub type Objective<'a> = dyn FnMut(&MixedPoint) -> Result<f64, ObjectiveError> + 'a;

/// Optimize `objective` over `problem`: pilots, then sequential proposals
/// until `cfg.budget` evaluations have been made.
pub fn run(problem: &ProblemSpec, objective: &mut Objective<'_>, cfg: &RunConfig) -> Result<RunTrace, RunError> {
    run_with(problem, objective, cfg, &RunHooks::default())
}

pub fn run_with(
    problem: &ProblemSpec,
    objective: &mut Objective<'_>,
    cfg: &RunConfig,
    hooks: &RunHooks<'_>,
) -> Result<RunTrace, RunError> {
    let space = problem.effective()?;
    let mut opt = Optimizer::new(space, cfg.clone())?;
    let now = || hooks.clock.map_or(0.0, |c| c());
    let mut trace = RunTrace { direction: problem.direction, kernels: cfg.kernels.clone(), pilots: cfg.n0, ..RunTrace::default() };

    let mut pilot_rng = rng::substream(cfg.seed, Stream::Pilots);
    let pilots = crate::domain::generate_pilots_with(opt.space(), cfg.n0, &mut pilot_rng)?;
    for (iter, point) in pilots.into_iter().enumerate() {
        let t0 = now();
        let value = evaluate(objective, &point, iter, &mut trace, &opt)?;
        opt.observe(point.clone(), value)?;
        let record =
            TraceRecord { iter, is_pilot: true, point, value, best_so_far: value, kernel: None, scores: Vec::new(), decisions: 0, seconds: now() - t0 };
        trace.push(record);
    }
    for iter in cfg.n0..cfg.budget {
        let t0 = now();
        let proposal = opt.propose_next(hooks.executor)?;
        let value = evaluate(objective, &proposal.point, iter, &mut trace, &opt)?;
        opt.observe(proposal.point.clone(), value)?;
        trace.final_model = Some((proposal.kernel, proposal.params));
        trace.push(TraceRecord {
            iter,
            is_pilot: false,
            point: proposal.point,
            value,
            best_so_far: value,
            kernel: Some(proposal.kernel),
            scores: proposal.scores,
            decisions: proposal.decisions,
            seconds: now() - t0,
        });
    }
    trace.tree = Some(opt.tree().dump());
    Ok(trace)
}

fn evaluate(
    objective: &mut Objective<'_>,
    point: &MixedPoint,
    iteration: usize,
    trace: &mut RunTrace,
    opt: &Optimizer,
) -> Result<f64, RunError> {
    let fail = |message: String, trace: &mut RunTrace| {
        let mut partial = core::mem::take(trace);
        partial.tree = Some(opt.tree().dump());
        RunError::Objective { iteration, message, partial: Box::new(partial) }
    };
    match objective(point) {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(v) => Err(fail(alloc::format!("non-finite objective value {v}"), trace)),
        Err(ObjectiveError(m)) => Err(fail(m, trace)),
    }
}

/// Uniform random search over the whole mixed space, in the same trace format.
pub fn random_baseline(problem: &ProblemSpec, objective: &mut Objective<'_>, budget: usize, seed: u64) -> Result<RunTrace, RunError> {
    let space = problem.effective()?;
    let mut rng = rng::substream(seed, Stream::Baseline);
    let mut trace = RunTrace { direction: problem.direction, ..RunTrace::default() };
    let dummy = Optimizer::new(space.clone(), RunConfig { n0: 2, budget: budget.max(2), ..RunConfig::default() })?;
    for iter in 0..budget {
        let point = space.random_point(&mut rng);
        let value = evaluate(objective, &point, iter, &mut trace, &dummy)?;
        trace.push(TraceRecord {
            iter,
            is_pilot: false,
            point,
            value,
            best_so_far: value,
            kernel: None,
            scores: Vec::new(),
            decisions: 0,
            seconds: 0.0,
        });
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Direction, VariableSpec};

    fn toy() -> ProblemSpec {
        ProblemSpec::new(
            vec![VariableSpec::categorical("c", &["a", "b", "c"]), VariableSpec::continuous("x", 0.0, 1.0)],
            Direction::Maximize,
        )
    }

    #[test]
    fn config_validation() {
        let ok = RunConfig::default();
        ok.validate().unwrap();
        assert_eq!(RunConfig { n0: 1, ..ok.clone() }.validate(), Err(ConfigError::TooFewPilots(1)));
        assert_eq!(
            RunConfig { n0: 10, budget: 5, ..ok.clone() }.validate(),
            Err(ConfigError::BudgetBelowPilots { budget: 5, n0: 10 })
        );
        assert_eq!(RunConfig { kernels: vec![], ..ok.clone() }.validate(), Err(ConfigError::NoKernels));
        assert_eq!(RunConfig { epsilon: 1.5, ..ok.clone() }.validate(), Err(ConfigError::Epsilon(1.5)));
    }

    #[test]
    fn budget_equal_to_pilots_is_pilots_only() {
        let cfg = RunConfig { n0: 5, budget: 5, ..RunConfig::default() };
        let mut f = |p: &MixedPoint| Ok(p.cat[0] as f64 + p.con[0]);
        let t = run(&toy(), &mut f, &cfg).unwrap();
        assert_eq!(t.records.len(), 5);
        assert!(t.records.iter().all(|r| r.is_pilot));
        let max = t.records.iter().map(|r| r.value).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(t.best_value(), Some(max));
    }

    #[test]
    fn objective_failure_keeps_partial_trace() {
        let cfg = RunConfig { n0: 3, budget: 6, kernels: vec![KernelSpec::DEFAULTS[1]], ..RunConfig::default() };
        let mut calls = 0;
        let mut f = |_: &MixedPoint| {
            calls += 1;
            if calls == 5 { Err(ObjectiveError::from("boom")) } else { Ok(calls as f64) }
        };
        match run(&toy(), &mut f, &cfg) {
            Err(RunError::Objective { iteration, message, partial }) => {
                assert_eq!(iteration, 4);
                assert_eq!(message, "boom");
                assert_eq!(partial.records.len(), 4);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn minimization_reports_raw_values() {
        let problem = ProblemSpec::new(vec![VariableSpec::continuous("x", -1.0, 1.0)], Direction::Minimize);
        let cfg = RunConfig { n0: 4, budget: 8, kernels: vec![KernelSpec::DEFAULTS[1]], ..RunConfig::default() };
        let mut f = |p: &MixedPoint| Ok(p.con[0] * p.con[0]);
        let t = run(&problem, &mut f, &cfg).unwrap();
        let best = t.best_so_far();
        assert!(best.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(t.best().unwrap().value, *best.last().unwrap());
    }

    #[test]
    fn baseline_is_seeded() {
        let mut f = |p: &MixedPoint| Ok(p.con[0]);
        let a = random_baseline(&toy(), &mut f, 7, 3).unwrap();
        let b = random_baseline(&toy(), &mut f, 7, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(random_baseline(&toy(), &mut f, 1, 3).unwrap().records.len(), 1);
    }
}
