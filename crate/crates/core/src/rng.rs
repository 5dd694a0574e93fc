//! Seeded random streams.
//!
//! Every stream is a ChaCha8 generator keyed by a 64-bit seed and positioned
//! on one of its 2^64 independent streams. A `(seed, stream)` pair fully
//! determines the output, so chunked parallel sampling can give each chunk
//! its own stream and stay reproducible regardless of scheduling.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Identifier of the generator algorithm, recorded in reports.
pub const RNG_ALGORITHM: &str = "chacha8";

/// Address of a stream: seed plus stream index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamKey {
    pub seed: u64,
    pub stream: u64,
}

impl StreamKey {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// The key `offset` streams further along.
    pub fn offset(self, offset: u64) -> Self {
        Self {
            seed: self.seed,
            stream: self.stream.wrapping_add(offset),
        }
    }

    pub fn open(self) -> RngStream {
        RngStream::new(self.seed, self.stream)
    }
}

/// A positioned random stream.
#[derive(Debug, Clone)]
pub struct RngStream {
    key: StreamKey,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self {
            key: StreamKey { seed, stream },
            rng,
        }
    }

    pub fn key(&self) -> StreamKey {
        self.key
    }

    pub fn algorithm(&self) -> &'static str {
        RNG_ALGORITHM
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}
