//! Per-run random streams.
//!
//! Every run draws from a ChaCha8 generator keyed by the master seed. The
//! 64-bit stream id packs the parameter-group index in the high 32 bits and
//! the run index in the low 32 bits, so any single run can be replayed
//! without touching the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn stream_id(group: usize, run: usize) -> u64 {
    debug_assert!(group < 1 << 32 && run < 1 << 32);
    ((group as u64) << 32) | run as u64
}

pub fn run_rng(master: u64, group: usize, run: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream_id(group, run));
    rng
}
