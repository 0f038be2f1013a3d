//! Counter-based random streams.
//!
//! A stream is addressed by `(seed, domain, index)`. The seed and domain are
//! mixed into a ChaCha key and the index selects the ChaCha stream, so any
//! replication can be regenerated on its own regardless of how work was
//! scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Well-separated stream domains used by the Monte Carlo harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    /// Null replications used for critical values.
    Null,
    /// Alternative replications used for power.
    Alternative,
    /// Independent null replications used for size checks.
    Size,
    /// Draws from limit laws.
    Limit,
    /// Anything else, namespaced by the caller.
    Custom(u64),
}

impl Domain {
    fn tag(self) -> u64 {
        match self {
            Domain::Null => 0x6e75_6c6c,
            Domain::Alternative => 0x616c_7465,
            Domain::Size => 0x7369_7a65,
            Domain::Limit => 0x6c69_6d69,
            Domain::Custom(c) => 0x4355_0000_0000_0000 ^ c,
        }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The stream for replication `index` of `domain` under `seed`.
pub fn stream(seed: u64, domain: Domain, index: u64) -> Stream {
    let mut state = seed ^ domain.tag().rotate_left(17);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}
