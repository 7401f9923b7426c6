//! Seeded random streams.
//!
//! Every run draws from `ChaCha8Rng`, which is portable and reproducible
//! across platforms. A run seed `s` yields independent streams by keeping the
//! key `seed_from_u64(s)` and varying the ChaCha stream id:
//!
//! * stream 0: first-round prior,
//! * stream `1 + a`: actor `a` of the roster (an organization, or an alliance).
//!
//! Ensemble repeat `k` runs with seed `base + k`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub const PRIOR_STREAM: u64 = 0;

pub fn stream(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn actor_stream(seed: u64, actor: usize) -> SimRng {
    stream(seed, 1 + actor as u64)
}

pub fn repeat_seed(base: u64, repeat: u64) -> u64 {
    base.wrapping_add(repeat)
}
