//! Covariance kernels over encoded mixed points.
//!
//! A [`KernelSpec`] pairs a kernel on the categorical block with a kernel on
//! the continuous block and says how the two are combined. Hyperparameters
//! live in [`KernelParams`], stored as logarithms so that every value stays
//! strictly positive during fitting.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

use crate::domain::EncodedPoint;
use crate::linalg::{Cholesky, Matrix};
use crate::math;

/// Largest number of nugget escalations before a Gram matrix is declared singular.
pub const MAX_JITTER_STEPS: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("gram matrix not positive definite after raising the nugget to {nugget:e}")]
    NotPositiveDefinite { nugget: f64 },
    #[error("unknown kernel `{given}`; valid names are: {valid}")]
    UnknownName { given: String, valid: String },
    #[error("gram matrix needs at least one point")]
    Empty,
}

/// Kernel applied to the categorical block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CatKernel {
    Matern52,
    Mlp,
    /// Sum of an MLP arc-sine and a Matern 5/2 kernel, each with its own parameters.
    MlpPlusMatern52,
}

/// Kernel applied to the continuous block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConKernel {
    Matern52,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Composition {
    Sum,
    Product,
    SumPlusProduct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(into = "String", try_from = "String"))]
pub struct KernelSpec {
    pub cat_kernel: CatKernel,
    pub con_kernel: ConKernel,
    pub composition: Composition,
}

const fn spec(cat_kernel: CatKernel, composition: Composition) -> KernelSpec {
    KernelSpec { cat_kernel, con_kernel: ConKernel::Matern52, composition }
}

impl KernelSpec {
    /// The five default candidates.
    pub const DEFAULTS: [KernelSpec; 5] = [
        spec(CatKernel::Mlp, Composition::Sum),
        spec(CatKernel::Matern52, Composition::Sum),
        spec(CatKernel::MlpPlusMatern52, Composition::Sum),
        spec(CatKernel::Mlp, Composition::Product),
        spec(CatKernel::Mlp, Composition::SumPlusProduct),
    ];

    pub fn defaults() -> Vec<KernelSpec> {
        Self::DEFAULTS.to_vec()
    }

    /// Short name used in configuration files and on the command line.
    ///
    /// Non-default combinations get a descriptive name that also parses.
    pub fn name(&self) -> String {
        let cat = match self.cat_kernel {
            CatKernel::Matern52 => "matern",
            CatKernel::Mlp => "mlp",
            CatKernel::MlpPlusMatern52 => "mlpmatern",
        };
        let mut s = String::from(cat);
        s.push_str(match self.composition {
            Composition::Sum => "+matern",
            Composition::Product => "*matern",
            Composition::SumPlusProduct => "+matern+prod",
        });
        s
    }

    fn valid_names() -> String {
        let names: Vec<String> = Self::DEFAULTS.iter().map(KernelSpec::name).collect();
        names.join(", ")
    }

    /// Hyperparameters this kernel fits on a space with the given blocks.
    ///
    /// With a pure product the MLP variance duplicates the amplitude, so it
    /// is held at 1.
    pub fn active_params(&self, has_cat: bool, has_con: bool) -> Vec<Hyper> {
        let mut out = Vec::with_capacity(Hyper::COUNT);
        if has_cat {
            let mlp = matches!(self.cat_kernel, CatKernel::Mlp | CatKernel::MlpPlusMatern52);
            let matern = matches!(self.cat_kernel, CatKernel::Matern52 | CatKernel::MlpPlusMatern52);
            if matern {
                out.push(Hyper::CatLengthscale);
            }
            if mlp {
                let redundant = self.cat_kernel == CatKernel::Mlp && self.composition == Composition::Product;
                if !redundant {
                    out.push(Hyper::MlpVariance);
                }
                out.push(Hyper::MlpBias);
                out.push(Hyper::MlpWeight);
            }
        }
        if has_con {
            out.push(Hyper::ConLengthscale);
        }
        out.push(Hyper::Amplitude);
        out.push(Hyper::Nugget);
        out
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for KernelSpec {
    type Err = KernelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let (cat, rest) = if let Some(r) = t.strip_prefix("mlpmatern") {
            (CatKernel::MlpPlusMatern52, r)
        } else if let Some(r) = t.strip_prefix("mlp") {
            (CatKernel::Mlp, r)
        } else if let Some(r) = t.strip_prefix("matern") {
            (CatKernel::Matern52, r)
        } else {
            return Err(KernelError::UnknownName { given: s.into(), valid: Self::valid_names() });
        };
        let composition = match rest {
            "+matern" => Composition::Sum,
            "*matern" => Composition::Product,
            "+matern+prod" => Composition::SumPlusProduct,
            _ => return Err(KernelError::UnknownName { given: s.into(), valid: Self::valid_names() }),
        };
        Ok(KernelSpec { cat_kernel: cat, con_kernel: ConKernel::Matern52, composition })
    }
}

impl From<KernelSpec> for String {
    fn from(k: KernelSpec) -> String {
        k.name()
    }
}

impl TryFrom<String> for KernelSpec {
    type Error = KernelError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// Hyperparameter slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Hyper {
    CatLengthscale,
    ConLengthscale,
    MlpVariance,
    MlpBias,
    MlpWeight,
    Amplitude,
    Nugget,
}

impl Hyper {
    pub const COUNT: usize = 7;
    pub const ALL: [Hyper; 7] = [
        Hyper::CatLengthscale,
        Hyper::ConLengthscale,
        Hyper::MlpVariance,
        Hyper::MlpBias,
        Hyper::MlpWeight,
        Hyper::Amplitude,
        Hyper::Nugget,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Hyper::CatLengthscale => "cat_lengthscale",
            Hyper::ConLengthscale => "con_lengthscale",
            Hyper::MlpVariance => "mlp_variance",
            Hyper::MlpBias => "mlp_bias",
            Hyper::MlpWeight => "mlp_weight",
            Hyper::Amplitude => "amplitude",
            Hyper::Nugget => "nugget",
        }
    }
}

/// Kernel hyperparameters, held as natural logarithms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    log: [f64; Hyper::COUNT],
}

impl Default for KernelParams {
    fn default() -> Self {
        let mut p = KernelParams { log: [0.0; Hyper::COUNT] };
        p.set(Hyper::ConLengthscale, 0.5);
        p.set(Hyper::Nugget, 1e-6);
        p
    }
}

impl KernelParams {
    #[inline]
    pub fn get(&self, h: Hyper) -> f64 {
        math::exp(self.log[h as usize])
    }

    pub fn log(&self, h: Hyper) -> f64 {
        self.log[h as usize]
    }

    /// Panics if `value` is not strictly positive.
    pub fn set(&mut self, h: Hyper, value: f64) {
        assert!(value > 0.0, "{} must be positive, got {value}", h.name());
        self.log[h as usize] = math::ln(value);
    }

    pub fn set_log(&mut self, h: Hyper, log_value: f64) {
        self.log[h as usize] = log_value;
    }

    pub fn with(mut self, h: Hyper, value: f64) -> Self {
        self.set(h, value);
        self
    }
}

/// Matern 5/2 as a function of distance `r`.
#[inline]
pub fn matern52_r(r: f64, lengthscale: f64) -> f64 {
    let s = math::SQRT5 * r / lengthscale;
    (1.0 + s + s * s / 3.0) * math::exp(-s)
}

/// Matern 5/2 kernel `(1 + √5 r/ℓ + 5r²/(3ℓ²)) exp(−√5 r/ℓ)` with `r = ‖u − v‖`.
pub fn matern52(u: &[f64], v: &[f64], lengthscale: f64) -> Result<f64, KernelError> {
    check_dims(u, v)?;
    Ok(matern52_r(math::sqrt(sq_dist(u, v)), lengthscale))
}

/// MLP arc-sine kernel from the inner products `uᵀv`, `uᵀu` and `vᵀv`.
#[inline]
pub fn mlp_from_products(uv: f64, uu: f64, vv: f64, variance: f64, bias: f64, weight: f64) -> f64 {
    let num = weight * uv + bias;
    let den = math::sqrt(weight * uu + bias + 1.0) * math::sqrt(weight * vv + bias + 1.0);
    let arg = num / den;
    assert!(arg.abs() <= 1.0, "arc-sine argument {arg} outside [-1, 1]");
    variance * core::f64::consts::FRAC_2_PI * math::asin(arg)
}

pub fn mlp_arcsine(u: &[f64], v: &[f64], variance: f64, bias: f64, weight: f64) -> Result<f64, KernelError> {
    check_dims(u, v)?;
    Ok(mlp_from_products(dot(u, v), dot(u, u), dot(v, v), variance, bias, weight))
}

fn check_dims(u: &[f64], v: &[f64]) -> Result<(), KernelError> {
    if u.len() != v.len() {
        return Err(KernelError::DimensionMismatch(u.len(), v.len()));
    }
    Ok(())
}

#[inline]
fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

#[inline]
fn sq_dist(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Everything a composed kernel needs to know about a pair of points.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PairGeometry {
    pub cat_dist: f64,
    pub con_dist: f64,
    pub cat_dot: f64,
    pub cat_norm_u: f64,
    pub cat_norm_v: f64,
}

impl PairGeometry {
    pub fn new(p: &EncodedPoint, q: &EncodedPoint) -> Self {
        PairGeometry {
            cat_dist: math::sqrt(sq_dist(&p.cat, &q.cat)),
            con_dist: math::sqrt(sq_dist(&p.con, &q.con)),
            cat_dot: dot(&p.cat, &q.cat),
            cat_norm_u: dot(&p.cat, &p.cat),
            cat_norm_v: dot(&q.cat, &q.cat),
        }
    }
}

/// Hyperparameters in natural units, resolved once per kernel matrix.
#[derive(Debug, Clone, Copy)]
struct Natural {
    cat_l: f64,
    con_l: f64,
    mlp_var: f64,
    bias: f64,
    weight: f64,
    amp: f64,
}

impl Natural {
    fn new(p: &KernelParams) -> Self {
        Natural {
            cat_l: p.get(Hyper::CatLengthscale),
            con_l: p.get(Hyper::ConLengthscale),
            mlp_var: p.get(Hyper::MlpVariance),
            bias: p.get(Hyper::MlpBias),
            weight: p.get(Hyper::MlpWeight),
            amp: p.get(Hyper::Amplitude),
        }
    }
}

#[inline]
fn compose_natural(spec: &KernelSpec, p: &Natural, g: &PairGeometry) -> f64 {
    let mlp = || mlp_from_products(g.cat_dot, g.cat_norm_u, g.cat_norm_v, p.mlp_var, p.bias, p.weight);
    let k_cat = match spec.cat_kernel {
        CatKernel::Matern52 => matern52_r(g.cat_dist, p.cat_l),
        CatKernel::Mlp => mlp(),
        CatKernel::MlpPlusMatern52 => mlp() + matern52_r(g.cat_dist, p.cat_l),
    };
    let k_con = match spec.con_kernel {
        ConKernel::Matern52 => matern52_r(g.con_dist, p.con_l),
    };
    let k = match spec.composition {
        Composition::Sum => k_cat + k_con,
        Composition::Product => k_cat * k_con,
        Composition::SumPlusProduct => k_cat + k_con + k_cat * k_con,
    };
    p.amp * k
}

/// Evaluate a composed kernel on precomputed pair geometry.
pub fn compose_geometry(spec: &KernelSpec, params: &KernelParams, g: &PairGeometry) -> f64 {
    compose_natural(spec, &Natural::new(params), g)
}

/// Kernel values between `x` and every point of `points`.
pub fn kernel_row(spec: &KernelSpec, params: &KernelParams, x: &EncodedPoint, points: &[EncodedPoint]) -> Vec<f64> {
    let nat = Natural::new(params);
    points.iter().map(|p| compose_natural(spec, &nat, &PairGeometry::new(x, p))).collect()
}

/// Composed kernel value between two encoded points.
pub fn compose(spec: &KernelSpec, params: &KernelParams, p: &EncodedPoint, q: &EncodedPoint) -> f64 {
    compose_geometry(spec, params, &PairGeometry::new(p, q))
}

/// Pair geometry for every unordered pair of a point set.
#[derive(Debug, Clone)]
pub struct GeometryCache {
    n: usize,
    // lower triangle, row-major, diagonal included
    pairs: Vec<PairGeometry>,
}

impl GeometryCache {
    pub fn new(points: &[EncodedPoint]) -> Self {
        let n = points.len();
        let mut pairs = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in 0..=i {
                pairs.push(PairGeometry::new(&points[i], &points[j]));
            }
        }
        GeometryCache { n, pairs }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Kernel matrix without the nugget.
    pub fn kernel_matrix(&self, spec: &KernelSpec, params: &KernelParams) -> Matrix {
        let n = self.n;
        let nat = Natural::new(params);
        let mut m = Matrix::zeros(n);
        let mut idx = 0;
        for i in 0..n {
            for j in 0..=i {
                let k = compose_natural(spec, &nat, &self.pairs[idx]);
                idx += 1;
                m.set(i, j, k);
                m.set(j, i, k);
            }
        }
        m
    }
}

/// Gram matrix `K + ν_n I`, each entry computed once per unordered pair.
pub fn gram(points: &[EncodedPoint], spec: &KernelSpec, params: &KernelParams) -> Result<Matrix, KernelError> {
    if points.is_empty() {
        return Err(KernelError::Empty);
    }
    let mut m = GeometryCache::new(points).kernel_matrix(spec, params);
    m.add_diagonal(params.get(Hyper::Nugget));
    Ok(m)
}

/// Factor `K + ν I`, multiplying `ν` by 10 on failure at most
/// [`MAX_JITTER_STEPS`] times. Returns the factor and the nugget that worked.
pub fn factor_with_jitter(kernel: &Matrix, nugget: f64) -> Result<(Cholesky, f64), KernelError> {
    let mut nu = nugget;
    for step in 0..=MAX_JITTER_STEPS {
        let mut k = kernel.clone();
        k.add_diagonal(nu);
        match Cholesky::factor(&k) {
            Ok(c) => return Ok((c, nu)),
            Err(_) if step < MAX_JITTER_STEPS => nu *= 10.0,
            Err(_) => break,
        }
    }
    Err(KernelError::NotPositiveDefinite { nugget: nu })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_relative_eq;

    #[test]
    fn matern_at_zero_and_unit_distance() {
        assert_eq!(matern52(&[0.3, 0.1], &[0.3, 0.1], 0.7).unwrap(), 1.0);
        let expected = (1.0 + math::SQRT5 + 5.0 / 3.0) * math::exp(-math::SQRT5);
        assert_relative_eq!(matern52(&[0.0], &[1.0], 1.0).unwrap(), expected, epsilon = 1e-15);
        assert_relative_eq!(expected, 0.52399, epsilon = 1e-5);
        assert_eq!(matern52(&[0.0], &[1.0, 2.0], 1.0), Err(KernelError::DimensionMismatch(1, 2)));
    }

    #[test]
    fn mlp_at_origin_is_one_third() {
        assert_relative_eq!(mlp_arcsine(&[0.0], &[0.0], 1.0, 1.0, 1.0).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn composition_examples() {
        let p = EncodedPoint { cat: vec![1.0], con: vec![0.0] };
        let params = KernelParams::default()
            .with(Hyper::CatLengthscale, 1.0)
            .with(Hyper::ConLengthscale, 1.0)
            .with(Hyper::Amplitude, 1.0);
        let sum = spec(CatKernel::Matern52, Composition::Sum);
        assert_eq!(compose(&sum, &params, &p, &p), 2.0);
        let both = spec(CatKernel::Matern52, Composition::SumPlusProduct);
        assert_eq!(compose(&both, &params, &p, &p), 3.0);
        let q = EncodedPoint { cat: vec![1.0], con: vec![1.0] };
        let prod = spec(CatKernel::Matern52, Composition::Product);
        assert_relative_eq!(compose(&prod, &params, &p, &q), 0.52399, epsilon = 1e-5);
        let amp = params.with(Hyper::Amplitude, 2.5);
        assert_relative_eq!(compose(&sum, &amp, &p, &p), 5.0, epsilon = 1e-14);
    }

    #[test]
    fn mlp_plus_matern_sums_both() {
        let p = EncodedPoint { cat: vec![0.0], con: vec![] };
        let params = KernelParams::default();
        let k = compose(&spec(CatKernel::MlpPlusMatern52, Composition::Product), &params, &p, &p);
        assert_relative_eq!(k, 1.0 / 3.0 + 1.0, epsilon = 1e-14);
    }

    #[test]
    fn names_round_trip_in_order() {
        let names: Vec<String> = KernelSpec::DEFAULTS.iter().map(KernelSpec::name).collect();
        assert_eq!(names, ["mlp+matern", "matern+matern", "mlpmatern+matern", "mlp*matern", "mlp+matern+prod"]);
        for k in KernelSpec::DEFAULTS {
            assert_eq!(k.name().parse::<KernelSpec>().unwrap(), k);
        }
        let err = "rbf+matern".parse::<KernelSpec>().unwrap_err();
        assert!(matches!(err, KernelError::UnknownName { ref valid, .. } if valid.contains("mlp*matern")));
    }

    #[test]
    fn parameter_counts() {
        let [mlp_sum, mat_sum, mlpmat_sum, mlp_prod, mlp_both] = KernelSpec::DEFAULTS;
        assert_eq!(mlp_sum.active_params(true, true).len(), 6);
        assert_eq!(mat_sum.active_params(true, true).len(), 4);
        assert_eq!(mlpmat_sum.active_params(true, true).len(), 7);
        assert_eq!(mlp_prod.active_params(true, true).len(), 5);
        assert_eq!(mlp_both.active_params(true, true).len(), 6);
        assert_eq!(mlp_sum.active_params(false, true), vec![Hyper::ConLengthscale, Hyper::Amplitude, Hyper::Nugget]);
    }

    #[test]
    fn single_point_gram() {
        let p = EncodedPoint { cat: vec![2.0], con: vec![0.3] };
        let params = KernelParams::default();
        for k in KernelSpec::DEFAULTS {
            let g = gram(core::slice::from_ref(&p), &k, &params).unwrap();
            assert_eq!(g.get(0, 0), compose(&k, &params, &p, &p) + params.get(Hyper::Nugget));
        }
        assert_eq!(gram(&[], &KernelSpec::DEFAULTS[0], &params).unwrap_err(), KernelError::Empty);
    }

    #[test]
    fn jitter_rescues_duplicates() {
        let p = EncodedPoint { cat: vec![1.0], con: vec![0.5] };
        let pts = vec![p.clone(), p.clone(), p];
        let k = GeometryCache::new(&pts).kernel_matrix(&KernelSpec::DEFAULTS[1], &KernelParams::default());
        let (_, nu) = factor_with_jitter(&k, 1e-12).unwrap();
        assert!(nu >= 1e-12);
        let neg = Matrix::from_fn(2, |i, j| if i == j { -1.0 } else { 0.0 });
        assert!(matches!(factor_with_jitter(&neg, 1e-8), Err(KernelError::NotPositiveDefinite { .. })));
    }
}
