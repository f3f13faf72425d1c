//! Deterministic random-number substreams.
//!
//! A single run seed expands into independent named streams so that the
//! order in which work is scheduled (serial or concurrent kernel fits) never
//! changes the numbers any piece of work sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type Rng = ChaCha8Rng;

/// Named purposes a run draws randomness for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Pilots,
    Tree,
    InitialKernel,
    /// Hyperparameter restarts for candidate `kernel` at sequential step `iteration`.
    Fit { iteration: u64, kernel: u64 },
    /// Acquisition probes for candidate `kernel` at sequential step `iteration`.
    Acquisition { iteration: u64, kernel: u64 },
    Baseline,
}

impl Stream {
    fn words(self) -> (u64, u64, u64) {
        match self {
            Stream::Pilots => (1, 0, 0),
            Stream::Tree => (2, 0, 0),
            Stream::InitialKernel => (3, 0, 0),
            Stream::Fit { iteration, kernel } => (4, iteration, kernel),
            Stream::Acquisition { iteration, kernel } => (5, iteration, kernel),
            Stream::Baseline => (6, 0, 0),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive the 64-bit seed for `stream` under the run seed `seed`.
pub fn derive_seed(seed: u64, stream: Stream) -> u64 {
    let (tag, a, b) = stream.words();
    let mut h = splitmix64(seed);
    h = splitmix64(h ^ tag);
    h = splitmix64(h ^ a);
    splitmix64(h ^ b.wrapping_mul(0x2545_f491_4f6c_dd1d))
}

/// A generator for `stream` under the run seed `seed`.
pub fn substream(seed: u64, stream: Stream) -> Rng {
    Rng::seed_from_u64(derive_seed(seed, stream))
}

/// A generator seeded directly.
pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}
