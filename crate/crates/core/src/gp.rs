//! Gaussian-process surrogate: maximum-likelihood fitting, posterior
//! prediction and expected improvement.
//!
//! Targets are centered by their mean before fitting and the mean is added
//! back in [`GpModel::predict`]. Hyperparameters are fitted by a multi-restart
//! compass search over log-parameters; no likelihood gradients are used.

use alloc::vec::Vec;

use rand::Rng as _;
use thiserror::Error;

use crate::domain::EncodedPoint;
use crate::kernels::{self, GeometryCache, Hyper, KernelError, KernelParams, KernelSpec};
use crate::linalg::Cholesky;
use crate::math;
use crate::rng;
use crate::search::{compass_search, CompassSettings};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GpError {
    #[error("need at least 2 training points, got {0}")]
    TooFewPoints(usize),
    #[error("{points} points but {values} values")]
    LengthMismatch { points: usize, values: usize },
    #[error("non-finite training value at index {0}")]
    NonFinite(usize),
    #[error("all {restarts} likelihood restarts failed numerically for `{kernel}`")]
    AllRestartsFailed { restarts: usize, kernel: KernelSpec },
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Closed interval for one hyperparameter, in natural units.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct ParamBounds {
    pub lengthscale: Interval,
    pub amplitude: Interval,
    pub nugget: Interval,
    pub mlp: Interval,
}

impl Default for ParamBounds {
    fn default() -> Self {
        ParamBounds {
            lengthscale: Interval::new(1e-3, 10.0),
            amplitude: Interval::new(1e-4, 1e4),
            nugget: Interval::new(1e-8, 1e-1),
            mlp: Interval::new(1e-3, 1e3),
        }
    }
}

impl ParamBounds {
    pub fn get(&self, h: Hyper) -> Interval {
        match h {
            Hyper::CatLengthscale | Hyper::ConLengthscale => self.lengthscale,
            Hyper::MlpVariance | Hyper::MlpBias | Hyper::MlpWeight => self.mlp,
            Hyper::Amplitude => self.amplitude,
            Hyper::Nugget => self.nugget,
        }
    }

    /// Amplitude and nugget bounds multiplied by `variance`.
    pub fn scaled(&self, variance: f64) -> ParamBounds {
        let mul = |i: Interval| Interval::new(i.lo * variance, i.hi * variance);
        ParamBounds { amplitude: mul(self.amplitude), nugget: mul(self.nugget), ..*self }
    }

    pub fn validate(&self) -> Result<(), &'static str> {
        for i in [self.lengthscale, self.amplitude, self.nugget, self.mlp] {
            if !(i.lo > 0.0 && i.lo < i.hi && i.hi.is_finite()) {
                return Err("parameter bounds need 0 < lo < hi < inf");
            }
        }
        Ok(())
    }
}

/// Settings for [`fit`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct FitConfig {
    /// Number of local searches; the first starts from the warm start or defaults.
    pub restarts: usize,
    /// Likelihood evaluations allowed per restart.
    pub max_iterations: usize,
    /// Initial compass step in log-parameter space.
    pub initial_step: f64,
    /// Step size (log space) at which a local search stops.
    pub min_step: f64,
    /// Search box. Amplitude and nugget bounds are relative to the sample
    /// variance of the targets.
    pub bounds: ParamBounds,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig { restarts: 5, max_iterations: 30, initial_step: 1.0, min_step: 0.06, bounds: ParamBounds::default() }
    }
}

/// A fitted surrogate. Immutable once built.
#[derive(Debug, Clone)]
pub struct GpModel {
    spec: KernelSpec,
    params: KernelParams,
    active: Vec<Hyper>,
    points: Vec<EncodedPoint>,
    y_centered: Vec<f64>,
    y_mean: f64,
    chol: Cholesky,
    weights: Vec<f64>,
    loglik_evals: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    pub variance: f64,
}

impl Prediction {
    pub fn sd(&self) -> f64 {
        math::sqrt(self.variance)
    }
}

fn lml_from_factor(chol: &Cholesky, y: &[f64]) -> (f64, Vec<f64>) {
    let half = chol.solve_lower(y);
    let quad: f64 = half.iter().map(|v| v * v).sum();
    let n = y.len() as f64;
    let lml = -0.5 * quad - 0.5 * chol.log_det() - 0.5 * n * math::LN_2PI;
    (lml, chol.solve_upper(&half))
}

struct Problem<'a> {
    spec: &'a KernelSpec,
    active: &'a [Hyper],
    cache: &'a GeometryCache,
    y: &'a [f64],
    base: KernelParams,
}

impl Problem<'_> {
    fn params(&self, theta: &[f64]) -> KernelParams {
        let mut p = self.base;
        for (h, &t) in self.active.iter().zip(theta) {
            p.set_log(*h, t);
        }
        p
    }

    fn loglik(&self, theta: &[f64]) -> f64 {
        let p = self.params(theta);
        let mut k = self.cache.kernel_matrix(self.spec, &p);
        k.add_diagonal(p.get(Hyper::Nugget));
        match Cholesky::factor(&k) {
            Ok(c) => {
                let (lml, _) = lml_from_factor(&c, self.y);
                if lml.is_finite() { lml } else { f64::NEG_INFINITY }
            }
            Err(_) => f64::NEG_INFINITY,
        }
    }
}

/// Sample variance of the targets, or 1 when they are constant.
pub fn target_scale(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if var > 0.0 && var.is_finite() { var } else { 1.0 }
}

/// Starting hyperparameters derived from the data: unit-scale lengthscales,
/// the amplitude at the target variance and a small relative nugget.
pub fn default_start(y: &[f64], bounds: &ParamBounds) -> KernelParams {
    let scale = target_scale(y);
    let b = bounds.scaled(scale);
    KernelParams::default()
        .with(Hyper::CatLengthscale, 1.0)
        .with(Hyper::ConLengthscale, 0.3)
        .with(Hyper::Amplitude, scale.clamp(b.amplitude.lo, b.amplitude.hi))
        .with(Hyper::Nugget, (1e-6 * scale).clamp(b.nugget.lo, b.nugget.hi))
}

/// Fit a GP by maximizing the log marginal likelihood.
pub fn fit(x: &[EncodedPoint], y: &[f64], spec: &KernelSpec, cfg: &FitConfig, seed: u64) -> Result<GpModel, GpError> {
    fit_from(x, y, spec, cfg, seed, None)
}

/// Like [`fit`], with the first restart starting from `warm` when given.
pub fn fit_from(
    x: &[EncodedPoint],
    y: &[f64],
    spec: &KernelSpec,
    cfg: &FitConfig,
    seed: u64,
    warm: Option<&KernelParams>,
) -> Result<GpModel, GpError> {
    if x.len() != y.len() {
        return Err(GpError::LengthMismatch { points: x.len(), values: y.len() });
    }
    if x.len() < 2 {
        return Err(GpError::TooFewPoints(x.len()));
    }
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Err(GpError::NonFinite(i));
    }
    let n = y.len() as f64;
    let y_mean = y.iter().sum::<f64>() / n;
    let y_centered: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
    let active = spec.active_params(!x[0].cat.is_empty(), !x[0].con.is_empty());
    let cache = GeometryCache::new(x);
    let start = warm.copied().unwrap_or_else(|| default_start(y, &cfg.bounds));
    let problem = Problem { spec, active: &active, cache: &cache, y: &y_centered, base: start };

    let bounds = cfg.bounds.scaled(target_scale(y));
    let lo: Vec<f64> = active.iter().map(|&h| math::ln(bounds.get(h).lo)).collect();
    let hi: Vec<f64> = active.iter().map(|&h| math::ln(bounds.get(h).hi)).collect();
    let settings = CompassSettings {
        initial_step: cfg.initial_step,
        min_step: cfg.min_step,
        max_evals: cfg.max_iterations.max(1),
    };
    let mut rng = rng::seeded(seed);
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut evals = 0;
    for restart in 0..cfg.restarts.max(1) {
        let x0: Vec<f64> = if restart == 0 {
            active.iter().map(|&h| start.log(h)).collect()
        } else {
            lo.iter().zip(&hi).map(|(&l, &h)| l + rng.random::<f64>() * (h - l)).collect()
        };
        let r = compass_search(|t| problem.loglik(t), &x0, &lo, &hi, settings);
        evals += r.evals;
        if r.value.is_finite() && best.as_ref().is_none_or(|(_, b)| r.value > *b) {
            best = Some((r.x, r.value));
        }
    }
    let Some((theta, _)) = best else {
        return Err(GpError::AllRestartsFailed { restarts: cfg.restarts.max(1), kernel: *spec });
    };
    let mut model = GpModel::build(x.to_vec(), y, *spec, problem.params(&theta))?;
    model.loglik_evals = evals;
    Ok(model)
}

impl GpModel {
    /// Condition a GP with fixed hyperparameters on data. The nugget is raised
    /// if the Gram matrix is numerically singular.
    pub fn build(points: Vec<EncodedPoint>, y: &[f64], spec: KernelSpec, mut params: KernelParams) -> Result<Self, GpError> {
        if points.len() != y.len() {
            return Err(GpError::LengthMismatch { points: points.len(), values: y.len() });
        }
        if points.is_empty() {
            return Err(GpError::TooFewPoints(0));
        }
        let n = y.len() as f64;
        let y_mean = y.iter().sum::<f64>() / n;
        let y_centered: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
        let k = GeometryCache::new(&points).kernel_matrix(&spec, &params);
        let (chol, nugget) = kernels::factor_with_jitter(&k, params.get(Hyper::Nugget))?;
        params.set(Hyper::Nugget, nugget);
        let (_, weights) = lml_from_factor(&chol, &y_centered);
        let active = spec.active_params(!points[0].cat.is_empty(), !points[0].con.is_empty());
        Ok(GpModel { spec, params, active, points, y_centered, y_mean, chol, weights, loglik_evals: 0 })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    /// Hyperparameters that were fitted.
    pub fn active_params(&self) -> &[Hyper] {
        &self.active
    }

    /// Number of fitted kernel parameters (the `n_k` of information criteria).
    pub fn param_count(&self) -> usize {
        self.active.len()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[EncodedPoint] {
        &self.points
    }

    pub fn centered_targets(&self) -> &[f64] {
        &self.y_centered
    }

    pub fn target_mean(&self) -> f64 {
        self.y_mean
    }

    pub fn factor(&self) -> &Cholesky {
        &self.chol
    }

    /// Likelihood evaluations spent by the fit (0 for [`GpModel::build`]).
    pub fn loglik_evals(&self) -> usize {
        self.loglik_evals
    }

    /// `−½ yᵀK⁻¹y − ½ log|K| − (n/2) log 2π` on the centered targets.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let quad: f64 = self.y_centered.iter().zip(&self.weights).map(|(a, b)| a * b).sum();
        -0.5 * quad - 0.5 * self.chol.log_det() - 0.5 * self.y_centered.len() as f64 * math::LN_2PI
    }

    /// Posterior mean and latent variance (no nugget) at an encoded point.
    pub fn predict(&self, x: &EncodedPoint) -> Prediction {
        let kx = kernels::kernel_row(&self.spec, &self.params, x, &self.points);
        let mean = self.y_mean + kx.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>();
        let v = self.chol.solve_lower(&kx);
        let prior = kernels::compose(&self.spec, &self.params, x, x);
        let variance = (prior - v.iter().map(|a| a * a).sum::<f64>()).max(0.0);
        Prediction { mean, variance }
    }

    /// Expected improvement over `y_best` (maximization).
    pub fn expected_improvement(&self, x: &EncodedPoint, y_best: f64) -> f64 {
        let p = self.predict(x);
        ei_from_moments(p.mean, p.sd(), y_best)
    }
}

/// `(μ − y*) Φ(z) + σ φ(z)` with `z = (μ − y*)/σ`; `max(μ − y*, 0)` when `σ = 0`.
pub fn ei_from_moments(mean: f64, sd: f64, y_best: f64) -> f64 {
    let gap = mean - y_best;
    if !(sd > 0.0) {
        return gap.max(0.0);
    }
    let z = gap / sd;
    (gap * math::norm_cdf(z) + sd * math::norm_pdf(z)).max(0.0)
}
