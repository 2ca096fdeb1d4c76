//! Seeded random streams.
//!
//! Every random quantity is drawn from a ChaCha20 generator keyed by the run
//! seed, with a fixed stream id per consumer. ChaCha20 output is specified
//! bit-for-bit, so a `(seed, stream)` pair yields the same numbers on every
//! platform and in every language with a conforming ChaCha20.
//!
//! Stream ids:
//!
//! | id        | consumer                          |
//! |-----------|-----------------------------------|
//! | 0         | `G` (BS to RIS)                   |
//! | 1, 2      | `g1`, `g2` (BS to users)          |
//! | 3, 4      | `h1`, `h2` (RIS to users)         |
//! | 5         | `h12` (U1 to U2)                  |
//! | 6         | `h_1r` (U1 to RIS)                |
//! | 7         | `h_r2` (RIS to U2)                |
//! | 64 + s    | initial slot-1 phases of start `s`|

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Channel members in stream-id order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    BsRis = 0,
    BsU1 = 1,
    BsU2 = 2,
    RisU1 = 3,
    RisU2 = 4,
    U1U2 = 5,
    U1Ris = 6,
    RisU2Relay = 7,
}

const PHASE_STREAM_BASE: u64 = 64;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn channel_rng(seed: u64, member: Stream) -> ChaCha20Rng {
    stream_rng(seed, member as u64)
}

pub fn phase_rng(seed: u64, start: usize) -> ChaCha20Rng {
    stream_rng(seed, PHASE_STREAM_BASE + start as u64)
}
