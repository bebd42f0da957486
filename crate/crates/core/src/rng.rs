//! Seeded random streams.
//!
//! Every trial gets its own ChaCha8 stream keyed by `(seed, trial)`, so the
//! draws of a trial do not depend on which worker runs it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TrialRng = ChaCha8Rng;

/// Independent substream for one trial of an experiment.
pub fn trial_rng(seed: u64, trial: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}
