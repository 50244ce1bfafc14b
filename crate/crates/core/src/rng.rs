//! Counter-based random substreams.
//!
//! Every unit of parallel work (a trial, a dataset) draws from its own ChaCha
//! stream keyed by `(seed, index)`, so results do not depend on scheduling or
//! thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// The generator for work item `index` under `seed`.
pub fn substream(seed: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
