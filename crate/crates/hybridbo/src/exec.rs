use hybridbo_core::optimizer::{CandidateOutcome, Executor};
use rayon::prelude::*;

/// Fits candidate kernels on the rayon thread pool.
#[derive(Debug, Clone, Copy, Default)]
pub struct Rayon;

impl Executor for Rayon {
    fn map(&self, n: usize, job: &(dyn Fn(usize) -> CandidateOutcome + Sync)) -> Vec<CandidateOutcome> {
        (0..n).into_par_iter().map(job).collect()
    }
}
