//! Synthetic benchmark functions.
//!
//! - [`Friedman8C`]: Friedman's function with eight categorical switches, most
//!   of them inactive. Maximum 30.
//! - [`DiscreteRosenbrock`]: a negated, scaled Rosenbrock function where chosen
//!   dimensions only take the integers -5..=5, modeled as categories.
//!   Maximum 0.
//! - [`CategorySwitched`]: a different continuous function per category
//!   combination.
//!
//! All benchmarks are maximized.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use thiserror::Error;

use crate::domain::{Direction, DomainError, EffectiveSpace, MixedPoint, ProblemSpec, Slot, VariableSpec};
use crate::math;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenchError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("no function registered for categories {0:?}")]
    Unregistered(Vec<usize>),
    #[error("invalid benchmark configuration: {0}")]
    Config(String),
}

/// A deterministic objective with its domain.
pub trait BenchmarkFn: Send + Sync {
    fn name(&self) -> &str;
    fn problem(&self) -> &ProblemSpec;
    fn space(&self) -> &EffectiveSpace;
    fn evaluate(&self, x: &MixedPoint) -> Result<f64, BenchError>;
    /// Largest attainable value, when known.
    fn known_max(&self) -> Option<f64>;
}

fn build_space(problem: &ProblemSpec) -> EffectiveSpace {
    problem.effective().expect("benchmark domains are valid")
}

/// `10 sin(pi x1 x2) [x7=0] + 20 (x3-0.5)^2 + {10, -10, 5}[x9] x4 + 5 x5`.
///
/// Continuous `x1..x6` lie in `[0, 1]`; `x6`, `x8` and `x10..x14` are inactive.
#[derive(Debug, Clone)]
pub struct Friedman8C {
    problem: ProblemSpec,
    space: EffectiveSpace,
}

pub const FRIEDMAN_ARITIES: [usize; 8] = [3, 5, 3, 4, 4, 4, 2, 2];

impl Friedman8C {
    pub fn new() -> Self {
        let mut vars: Vec<VariableSpec> = (1..=6).map(|i| VariableSpec::continuous(&format!("x{i}"), 0.0, 1.0)).collect();
        for (j, &k) in FRIEDMAN_ARITIES.iter().enumerate() {
            let labels: Vec<String> = (0..k).map(|v| v.to_string()).collect();
            vars.push(VariableSpec::categorical(&format!("x{}", j + 7), &labels));
        }
        let problem = ProblemSpec::new(vars, Direction::Maximize);
        let space = build_space(&problem);
        Friedman8C { problem, space }
    }
}

impl Default for Friedman8C {
    fn default() -> Self {
        Self::new()
    }
}

/// Friedman-8C value of a point with `con = [x1..x6]` and `cat = [x7..x14]`.
pub fn friedman8c(x: &MixedPoint) -> f64 {
    let c = &x.con;
    let k = &x.cat;
    let first = if k[0] == 0 { 10.0 * math::sin(PI * c[0] * c[1]) } else { 0.0 };
    let slope = match k[2] {
        0 => 10.0,
        1 => -10.0,
        _ => 5.0,
    };
    first + 20.0 * (c[2] - 0.5) * (c[2] - 0.5) + slope * c[3] + 5.0 * c[4]
}

impl BenchmarkFn for Friedman8C {
    fn name(&self) -> &str {
        "friedman8c"
    }

    fn problem(&self) -> &ProblemSpec {
        &self.problem
    }

    fn space(&self) -> &EffectiveSpace {
        &self.space
    }

    fn evaluate(&self, x: &MixedPoint) -> Result<f64, BenchError> {
        self.space.validate_point(x)?;
        Ok(friedman8c(x))
    }

    fn known_max(&self) -> Option<f64> {
        Some(30.0)
    }
}

/// `-(1/10000) sum_i [100 (x_{i+1} - x_i^2)^2 + (x_i - 1)^2]` on `[-5, 5]^d`,
/// with the listed dimensions restricted to the integers -5..=5.
#[derive(Debug, Clone)]
pub struct DiscreteRosenbrock {
    problem: ProblemSpec,
    space: EffectiveSpace,
    name: String,
}

impl DiscreteRosenbrock {
    /// `discrete` holds 1-based dimension indices.
    pub fn new(d: usize, discrete: &[usize]) -> Result<Self, BenchError> {
        if d < 2 {
            return Err(BenchError::Config(format!("dimension must be at least 2, got {d}")));
        }
        if let Some(&bad) = discrete.iter().find(|&&i| i == 0 || i > d) {
            return Err(BenchError::Config(format!("discrete dimension {bad} outside 1..={d}")));
        }
        let labels: Vec<String> = (-5..=5).map(|v: i32| v.to_string()).collect();
        let vars = (1..=d)
            .map(|i| {
                let name = format!("x{i}");
                if discrete.contains(&i) {
                    VariableSpec::categorical(&name, &labels)
                } else {
                    VariableSpec::continuous(&name, -5.0, 5.0)
                }
            })
            .collect();
        let problem = ProblemSpec::new(vars, Direction::Maximize);
        let space = build_space(&problem);
        Ok(DiscreteRosenbrock { problem, space, name: format!("rosenbrock{d}") })
    }

    /// Seven dimensions, the last three discrete.
    pub fn standard() -> Self {
        Self::new(7, &[5, 6, 7]).expect("valid")
    }

    /// Coordinates in declaration order.
    pub fn coordinates(&self, x: &MixedPoint) -> Vec<f64> {
        self.space
            .slots
            .iter()
            .map(|s| match *s {
                Slot::Cat(i) => x.cat[i] as f64 - 5.0,
                Slot::Con(i) => x.con[i],
            })
            .collect()
    }
}

fn sq(x: f64) -> f64 {
    x * x
}

/// Scaled, negated Rosenbrock value of a real vector.
pub fn rosenbrock(x: &[f64]) -> f64 {
    let s: f64 = x.windows(2).map(|w| 100.0 * sq(w[1] - w[0] * w[0]) + sq(w[0] - 1.0)).sum();
    -s / 10000.0
}

impl BenchmarkFn for DiscreteRosenbrock {
    fn name(&self) -> &str {
        &self.name
    }

    fn problem(&self) -> &ProblemSpec {
        &self.problem
    }

    fn space(&self) -> &EffectiveSpace {
        &self.space
    }

    fn evaluate(&self, x: &MixedPoint) -> Result<f64, BenchError> {
        self.space.validate_point(x)?;
        Ok(rosenbrock(&self.coordinates(x)))
    }

    fn known_max(&self) -> Option<f64> {
        Some(0.0)
    }
}

pub type PieceFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// One continuous function per category combination.
pub struct CategorySwitched {
    name: String,
    problem: ProblemSpec,
    space: EffectiveSpace,
    pieces: BTreeMap<Vec<usize>, PieceFn>,
    known_max: Option<f64>,
}

impl fmt::Debug for CategorySwitched {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CategorySwitched")
            .field("name", &self.name)
            .field("pieces", &self.pieces.len())
            .field("known_max", &self.known_max)
            .finish()
    }
}

impl CategorySwitched {
    pub fn new(name: &str, problem: ProblemSpec) -> Result<Self, BenchError> {
        let space = problem.effective()?;
        Ok(CategorySwitched { name: name.into(), problem, space, pieces: BTreeMap::new(), known_max: None })
    }

    /// Register the function evaluated at category indices `cats`.
    pub fn register(&mut self, cats: Vec<usize>, f: PieceFn) -> Result<(), BenchError> {
        let arities = self.space.arities();
        if cats.len() != arities.len() || cats.iter().zip(&arities).any(|(&c, &k)| c >= k) {
            return Err(BenchError::Config(format!("category combination {cats:?} does not fit arities {arities:?}")));
        }
        self.pieces.insert(cats, f);
        Ok(())
    }

    pub fn with_known_max(mut self, value: f64) -> Self {
        self.known_max = Some(value);
        self
    }

    /// Number of registered combinations.
    pub fn registered(&self) -> usize {
        self.pieces.len()
    }

    /// Three categorical variables (3, 5 and 4 levels) and two continuous ones
    /// on `[0, 1]`. Every combination gets a quadratic bump with its own
    /// height and centre; the tallest (height 31) sits at categories
    /// `(2, 0, 3)`.
    pub fn default_instance() -> Self {
        let problem = ProblemSpec::new(
            alloc::vec![
                VariableSpec::categorical("a", &["a0", "a1", "a2"]),
                VariableSpec::categorical("b", &["b0", "b1", "b2", "b3", "b4"]),
                VariableSpec::categorical("c", &["c0", "c1", "c2", "c3"]),
                VariableSpec::continuous("t1", 0.0, 1.0),
                VariableSpec::continuous("t2", 0.0, 1.0),
            ],
            Direction::Maximize,
        );
        let mut f = CategorySwitched::new("func3c", problem).expect("valid");
        for a in 0..3 {
            for b in 0..5 {
                for c in 0..4 {
                    let (h, c1, c2) = default_piece(a, b, c);
                    f.register(alloc::vec![a, b, c], Box::new(move |t| h - 20.0 * (sq(t[0] - c1) + sq(t[1] - c2))))
                        .expect("in range");
                }
            }
        }
        f.with_known_max(31.0)
    }
}

fn default_piece(a: usize, b: usize, c: usize) -> (f64, f64, f64) {
    let match_bonus = if b == (a + c) % 5 { 15.0 } else { 0.0 };
    let h = 5.0 * a as f64 + 2.0 * c as f64 + match_bonus;
    let c1 = 0.1 + 0.8 * ((a * 7 + b * 3 + c) % 9) as f64 / 8.0;
    let c2 = 0.1 + 0.8 * ((a + b * 5 + c * 2) % 7) as f64 / 6.0;
    (h, c1, c2)
}

impl BenchmarkFn for CategorySwitched {
    fn name(&self) -> &str {
        &self.name
    }

    fn problem(&self) -> &ProblemSpec {
        &self.problem
    }

    fn space(&self) -> &EffectiveSpace {
        &self.space
    }

    fn evaluate(&self, x: &MixedPoint) -> Result<f64, BenchError> {
        self.space.validate_point(x)?;
        let f = self.pieces.get(&x.cat).ok_or_else(|| BenchError::Unregistered(x.cat.clone()))?;
        Ok(f(&x.con))
    }

    fn known_max(&self) -> Option<f64> {
        self.known_max
    }
}

/// Look a benchmark up by name: `friedman8c`, `rosenbrock` (7 dimensions, last
/// three discrete) or `func3c`.
pub fn by_name(name: &str) -> Option<Box<dyn BenchmarkFn>> {
    match name {
        "friedman8c" => Some(Box::new(Friedman8C::new())),
        "rosenbrock" | "rosenbrock7" => Some(Box::new(DiscreteRosenbrock::standard())),
        "func3c" => Some(Box::new(CategorySwitched::default_instance())),
        _ => None,
    }
}

pub const BENCHMARK_NAMES: [&str; 3] = ["friedman8c", "rosenbrock", "func3c"];
