// SPDX-License-Identifier: MIT OR Apache-2.0

//! Per-trial random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent stream for trial `trial` under `master_seed`.
///
/// Streams depend only on the pair, so results do not depend on how trials
/// are scheduled across workers.
pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}
