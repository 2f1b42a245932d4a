//! Seeded random streams.
//!
//! Every consumer of randomness gets its own ChaCha8 stream derived from the
//! experiment seed: agent `i` reads stream `i`, environment generation reads
//! [`ENV_STREAM`]. Streams never overlap, so the number of agents does not
//! perturb the environment draw and agents can be stepped in any order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream id reserved for environment generation.
pub const ENV_STREAM: u64 = u64::MAX;

pub fn split(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn agent_stream(seed: u64, agent: usize) -> SimRng {
    split(seed, agent as u64)
}

pub fn env_stream(seed: u64) -> SimRng {
    split(seed, ENV_STREAM)
}
