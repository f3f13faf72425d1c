//! Mixed-variable Bayesian optimization.
//!
//! Categorical variables are searched with a Monte Carlo tree (UCB tree
//! search or a Dirichlet-Multinomial policy). All variables are modeled
//! jointly by a single Gaussian-process surrogate whose covariance kernel is
//! re-selected every iteration from a candidate family, using a rank-based
//! combination of log marginal likelihood and maximal expected improvement.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the command-line
//! harness and parallel execution live in the `hybridbo` crate.
//!
//! Module map:
//!
//! - [`domain`]: variable declarations, mixed points, encodings, pilot design
//!   and sample history.
//! - [`kernels`]: Matern 5/2, MLP arc-sine and their sum/product compositions.
//! - [`gp`]: maximum-likelihood GP fitting, prediction and expected improvement.
//! - [`tree`]: the category tree with UCB and Dirichlet selection policies.
//! - [`selection`]: kernel-selection criteria.
//! - [`optimizer`]: the sequential optimization loop.
//! - [`bench`]: synthetic benchmark functions and a random-search baseline.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod bench;
pub mod domain;
pub mod gp;
pub mod kernels;
pub mod linalg;
mod math;
pub mod optimizer;
pub mod rng;
pub mod search;
pub mod selection;
pub mod tree;

pub use domain::{
    Direction, EffectiveKind, EffectiveSpace, Encoding, MixedPoint, ProblemSpec, SampleHistory,
    VariableKind, VariableSpec,
};
pub use gp::{FitConfig, GpModel};
pub use kernels::{KernelParams, KernelSpec};
pub use optimizer::{RunConfig, RunTrace, Strategy};
pub use selection::Criterion;
