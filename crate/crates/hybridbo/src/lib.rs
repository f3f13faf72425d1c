//! File formats, batch experiments and the command-line harness around
//! [`hybridbo_core`].
//!
//! - [`problem`]: problem and run-configuration JSON files, objective bindings.
//! - [`trace`]: trace CSV writer/reader and run directories.
//! - [`batch`]: repeated runs over seeds and methods with summary statistics.
//! - [`exec`]: a rayon-backed executor for candidate kernel fits.
//! - [`oracle`]: slow reference computations used by `verify` and the tests.
//! - [`verify`]: on-demand oracle and property checks.

pub mod batch;
pub mod exec;
pub mod oracle;
pub mod problem;
pub mod trace;
pub mod verify;

pub use hybridbo_core as core;
