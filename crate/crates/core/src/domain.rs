//! Variables, mixed points, encodings, pilot design and sample history.
//!
//! A problem is declared as an ordered list of variables. Integer variables
//! are normalized away before anything else happens: a small integer range
//! becomes a categorical variable, a large one a continuous variable whose
//! values are rounded to the integer lattice. After normalization a
//! [`MixedPoint`] holds one category index per categorical variable and one
//! real per continuous variable, both in declaration order.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;
use thiserror::Error;

use crate::math;
use crate::rng;

/// Default count at or below which an integer variable is categorical.
pub const DEFAULT_INTEGER_THRESHOLD: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("problem declares no variables")]
    NoVariables,
    #[error("variable `{name}`: {reason}")]
    InvalidVariable { name: String, reason: String },
    #[error("duplicate variable name `{0}`")]
    DuplicateName(String),
    #[error("integer threshold must be at least 2, got {0}")]
    InvalidThreshold(usize),
    #[error("`{0}` is not an integer variable")]
    NotInteger(String),
    #[error("point has {got} {what} coordinates, expected {expected}")]
    Arity { what: &'static str, got: usize, expected: usize },
    #[error("category index {index} out of range for `{name}` ({count} categories)")]
    CategoryOutOfRange { name: String, index: usize, count: usize },
    #[error("value {value} outside [{lo}, {hi}] for `{name}`")]
    OutOfBounds { name: String, value: f64, lo: f64, hi: f64 },
    #[error("pilot count must be at least 1")]
    NoPilots,
}

/// Objective direction as declared by the user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Direction {
    #[default]
    Maximize,
    Minimize,
}

impl Direction {
    /// Map a raw objective value into the internal (maximization) convention.
    pub fn to_internal(self, raw: f64) -> f64 {
        match self {
            Direction::Maximize => raw,
            Direction::Minimize => -raw,
        }
    }

    /// Inverse of [`Direction::to_internal`].
    pub fn to_raw(self, internal: f64) -> f64 {
        self.to_internal(internal)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "type", rename_all = "lowercase"))]
pub enum VariableKind {
    Categorical { labels: Vec<String> },
    Continuous { lo: f64, hi: f64 },
    Integer { lo: i64, hi: i64 },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VariableSpec {
    pub name: String,
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub kind: VariableKind,
}

impl VariableSpec {
    pub fn categorical<S: ToString>(name: &str, labels: &[S]) -> Self {
        VariableSpec {
            name: name.into(),
            kind: VariableKind::Categorical { labels: labels.iter().map(|l| l.to_string()).collect() },
        }
    }

    pub fn continuous(name: &str, lo: f64, hi: f64) -> Self {
        VariableSpec { name: name.into(), kind: VariableKind::Continuous { lo, hi } }
    }

    pub fn integer(name: &str, lo: i64, hi: i64) -> Self {
        VariableSpec { name: name.into(), kind: VariableKind::Integer { lo, hi } }
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        let bad = |reason: &str| DomainError::InvalidVariable { name: self.name.clone(), reason: reason.into() };
        match &self.kind {
            VariableKind::Categorical { labels } => {
                if labels.len() < 2 {
                    return Err(bad("categorical variables need at least 2 labels"));
                }
                for (i, a) in labels.iter().enumerate() {
                    if labels[..i].contains(a) {
                        return Err(bad(&format!("duplicate label `{a}`")));
                    }
                }
            }
            VariableKind::Continuous { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(bad("continuous bounds need finite lo < hi"));
                }
            }
            VariableKind::Integer { lo, hi } => {
                if lo >= hi {
                    return Err(bad("integer bounds need lo <= hi - 1"));
                }
            }
        }
        Ok(())
    }
}

/// How a variable is treated after integer normalization.
#[derive(Debug, Clone, PartialEq)]
pub enum EffectiveKind {
    Categorical { labels: Vec<String> },
    /// `integer` marks a relaxed integer variable whose values are rounded.
    Continuous { lo: f64, hi: f64, integer: bool },
}

/// Decide how an integer variable is modeled: categorical when it takes at
/// most `threshold` values, otherwise a rounded continuous relaxation.
pub fn classify_integer_variable(spec: &VariableSpec, threshold: usize) -> Result<EffectiveKind, DomainError> {
    let VariableKind::Integer { lo, hi } = spec.kind else {
        return Err(DomainError::NotInteger(spec.name.clone()));
    };
    if threshold < 2 {
        return Err(DomainError::InvalidThreshold(threshold));
    }
    spec.validate()?;
    let count = (hi as i128 - lo as i128 + 1) as u128;
    if count <= threshold as u128 {
        Ok(EffectiveKind::Categorical { labels: (lo..=hi).map(|v| v.to_string()).collect() })
    } else {
        Ok(EffectiveKind::Continuous { lo: lo as f64, hi: hi as f64, integer: true })
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProblemSpec {
    pub variables: Vec<VariableSpec>,
    pub direction: Direction,
    #[cfg_attr(feature = "serde", serde(default = "default_threshold"))]
    pub integer_threshold: usize,
}

#[cfg(feature = "serde")]
fn default_threshold() -> usize {
    DEFAULT_INTEGER_THRESHOLD
}

impl ProblemSpec {
    pub fn new(variables: Vec<VariableSpec>, direction: Direction) -> Self {
        ProblemSpec { variables, direction, integer_threshold: DEFAULT_INTEGER_THRESHOLD }
    }

    /// Validate and normalize into the space the optimizer works in.
    pub fn effective(&self) -> Result<EffectiveSpace, DomainError> {
        if self.variables.is_empty() {
            return Err(DomainError::NoVariables);
        }
        if self.integer_threshold < 2 {
            return Err(DomainError::InvalidThreshold(self.integer_threshold));
        }
        let mut cats = Vec::new();
        let mut cons = Vec::new();
        let mut slots = Vec::with_capacity(self.variables.len());
        for (decl, var) in self.variables.iter().enumerate() {
            var.validate()?;
            if self.variables[..decl].iter().any(|v| v.name == var.name) {
                return Err(DomainError::DuplicateName(var.name.clone()));
            }
            let kind = match &var.kind {
                VariableKind::Categorical { labels } => EffectiveKind::Categorical { labels: labels.clone() },
                VariableKind::Continuous { lo, hi } => EffectiveKind::Continuous { lo: *lo, hi: *hi, integer: false },
                VariableKind::Integer { .. } => classify_integer_variable(var, self.integer_threshold)?,
            };
            match kind {
                EffectiveKind::Categorical { labels } => {
                    slots.push(Slot::Cat(cats.len()));
                    cats.push(CategoricalVar { name: var.name.clone(), labels });
                }
                EffectiveKind::Continuous { lo, hi, integer } => {
                    slots.push(Slot::Con(cons.len()));
                    cons.push(ContinuousVar { name: var.name.clone(), lo, hi, integer });
                }
            }
        }
        Ok(EffectiveSpace { cats, cons, slots, direction: self.direction })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalVar {
    pub name: String,
    pub labels: Vec<String>,
}

impl CategoricalVar {
    pub fn arity(&self) -> usize {
        self.labels.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousVar {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub integer: bool,
}

impl ContinuousVar {
    pub fn normalize(&self, x: f64) -> f64 {
        (x - self.lo) / (self.hi - self.lo)
    }

    /// Map a unit-interval coordinate back to declared units, rounding
    /// relaxed integers onto the lattice.
    pub fn denormalize(&self, u: f64) -> f64 {
        self.snap(self.lo + u.clamp(0.0, 1.0) * (self.hi - self.lo))
    }

    pub fn snap(&self, x: f64) -> f64 {
        let x = x.clamp(self.lo, self.hi);
        if self.integer {
            math::round(x).clamp(self.lo, self.hi)
        } else {
            x
        }
    }
}

/// Position of a declared variable inside a [`MixedPoint`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Cat(usize),
    Con(usize),
}

/// The normalized search space: every variable is categorical or continuous.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveSpace {
    pub cats: Vec<CategoricalVar>,
    pub cons: Vec<ContinuousVar>,
    /// One entry per declared variable, in declaration order.
    pub slots: Vec<Slot>,
    pub direction: Direction,
}

impl EffectiveSpace {
    pub fn arities(&self) -> Vec<usize> {
        self.cats.iter().map(CategoricalVar::arity).collect()
    }

    /// C, the number of category combinations (saturating).
    pub fn leaf_count(&self) -> u128 {
        self.cats.iter().fold(1u128, |acc, c| acc.saturating_mul(c.arity() as u128))
    }

    pub fn validate_point(&self, p: &MixedPoint) -> Result<(), DomainError> {
        if p.cat.len() != self.cats.len() {
            return Err(DomainError::Arity { what: "categorical", got: p.cat.len(), expected: self.cats.len() });
        }
        if p.con.len() != self.cons.len() {
            return Err(DomainError::Arity { what: "continuous", got: p.con.len(), expected: self.cons.len() });
        }
        for (&i, var) in p.cat.iter().zip(&self.cats) {
            if i >= var.arity() {
                return Err(DomainError::CategoryOutOfRange { name: var.name.clone(), index: i, count: var.arity() });
            }
        }
        for (&x, var) in p.con.iter().zip(&self.cons) {
            if !(x >= var.lo && x <= var.hi) {
                return Err(DomainError::OutOfBounds { name: var.name.clone(), value: x, lo: var.lo, hi: var.hi });
            }
        }
        Ok(())
    }

    /// Split encoding used by the kernels.
    pub fn encode(&self, p: &MixedPoint, scheme: Encoding) -> Result<EncodedPoint, DomainError> {
        self.validate_point(p)?;
        let cat = match scheme {
            Encoding::IntegerCode => p.cat.iter().map(|&i| i as f64).collect(),
            Encoding::OneHot => {
                let mut v = Vec::with_capacity(self.cats.iter().map(CategoricalVar::arity).sum());
                for (&i, var) in p.cat.iter().zip(&self.cats) {
                    v.extend((0..var.arity()).map(|k| if k == i { 1.0 } else { 0.0 }));
                }
                v
            }
        };
        let con = p.con.iter().zip(&self.cons).map(|(&x, var)| var.normalize(x)).collect();
        Ok(EncodedPoint { cat, con })
    }

    /// Flat encoding: categorical block followed by unit-scaled continuous block.
    pub fn encode_categorical(&self, p: &MixedPoint, scheme: Encoding) -> Result<Vec<f64>, DomainError> {
        let e = self.encode(p, scheme)?;
        let mut v = e.cat;
        v.extend(e.con);
        Ok(v)
    }

    /// Inverse of [`EffectiveSpace::encode_categorical`] for [`Encoding::IntegerCode`].
    pub fn decode_integer_code(&self, v: &[f64]) -> Result<MixedPoint, DomainError> {
        let expected = self.cats.len() + self.cons.len();
        if v.len() != expected {
            return Err(DomainError::Arity { what: "encoded", got: v.len(), expected });
        }
        let (c, x) = v.split_at(self.cats.len());
        let p = MixedPoint {
            cat: c.iter().map(|&f| math::round(f).max(0.0) as usize).collect(),
            con: x.iter().zip(&self.cons).map(|(&u, var)| var.lo + u * (var.hi - var.lo)).collect(),
        };
        self.validate_point(&p)?;
        Ok(p)
    }

    /// Build a point from a category path and unit-interval continuous coordinates.
    pub fn point_from_unit(&self, cat: Vec<usize>, unit: &[f64]) -> MixedPoint {
        MixedPoint { cat, con: unit.iter().zip(&self.cons).map(|(&u, var)| var.denormalize(u)).collect() }
    }

    pub fn random_point(&self, rng: &mut rng::Rng) -> MixedPoint {
        let cat = self.cats.iter().map(|c| rng.random_range(0..c.arity())).collect();
        let unit: Vec<f64> = (0..self.cons.len()).map(|_| rng.random::<f64>()).collect();
        self.point_from_unit(cat, &unit)
    }

    /// Display values of a point in declaration order.
    pub fn describe(&self, p: &MixedPoint) -> Vec<Coordinate> {
        self.slots
            .iter()
            .map(|slot| match *slot {
                Slot::Cat(i) => Coordinate::Label(self.cats[i].labels[p.cat[i]].clone()),
                Slot::Con(j) => Coordinate::Real(p.con[j]),
            })
            .collect()
    }

    /// Names of the declared variables, in declaration order.
    pub fn names(&self) -> Vec<&str> {
        self.slots
            .iter()
            .map(|slot| match *slot {
                Slot::Cat(i) => self.cats[i].name.as_str(),
                Slot::Con(j) => self.cons[j].name.as_str(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Coordinate {
    Label(String),
    Real(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Encoding {
    #[default]
    IntegerCode,
    OneHot,
}

/// One candidate configuration.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MixedPoint {
    pub cat: Vec<usize>,
    pub con: Vec<f64>,
}

/// A point after encoding: categorical block and unit-scaled continuous block.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EncodedPoint {
    pub cat: Vec<f64>,
    pub con: Vec<f64>,
}

/// Latin-hypercube continuous coordinates with uniformly drawn categories.
pub fn generate_pilots(space: &EffectiveSpace, n0: usize, seed: u64) -> Result<Vec<MixedPoint>, DomainError> {
    generate_pilots_with(space, n0, &mut rng::seeded(seed))
}

pub fn generate_pilots_with(space: &EffectiveSpace, n0: usize, rng: &mut rng::Rng) -> Result<Vec<MixedPoint>, DomainError> {
    if n0 == 0 {
        return Err(DomainError::NoPilots);
    }
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(space.cons.len());
    for _ in &space.cons {
        let mut strata: Vec<usize> = (0..n0).collect();
        strata.shuffle(rng);
        columns.push(strata.into_iter().map(|s| (s as f64 + rng.random::<f64>()) / n0 as f64).collect());
    }
    let mut pilots = Vec::with_capacity(n0);
    for i in 0..n0 {
        let cat = space.cats.iter().map(|c| rng.random_range(0..c.arity())).collect();
        let unit: Vec<f64> = columns.iter().map(|col| col[i]).collect();
        pilots.push(space.point_from_unit(cat, &unit));
    }
    Ok(pilots)
}

/// Evaluated samples, stored under the maximization convention.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SampleHistory {
    points: Vec<MixedPoint>,
    values: Vec<f64>,
    best: Vec<f64>,
}

impl SampleHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, point: MixedPoint, value: f64) {
        let best = self.best.last().map_or(value, |&b| if value > b { value } else { b });
        self.points.push(point);
        self.values.push(value);
        self.best.push(best);
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn points(&self) -> &[MixedPoint] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Best value among the first `i + 1` samples.
    pub fn best_so_far(&self, i: usize) -> f64 {
        self.best[i]
    }

    /// Index and value of the best sample (first one on ties).
    pub fn best(&self) -> Option<(usize, f64)> {
        let mut out: Option<(usize, f64)> = None;
        for (i, &v) in self.values.iter().enumerate() {
            if out.is_none_or(|(_, b)| v > b) {
                out = Some((i, v));
            }
        }
        out
    }
}
