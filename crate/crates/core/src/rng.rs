//! Reproducible random streams.
//!
//! Every random quantity is drawn from a ChaCha8 stream addressed by a
//! master seed plus a path of integer labels (experiment phase, sample-size
//! index, replication index, chunk index, ...). Distinct label paths give
//! independent streams, so work can be split across threads without
//! changing any result.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Paths are generated in chunks of this size, one stream per chunk.
pub const CHUNK_PATHS: usize = 4096;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A position in the stream tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    seed: u64,
    label: u64,
}

impl StreamKey {
    pub fn root(seed: u64) -> Self {
        Self { seed, label: 0 }
    }

    /// Child stream with one more label.
    pub fn child(self, label: u64) -> Self {
        Self {
            seed: self.seed,
            label: splitmix64(self.label ^ splitmix64(label.wrapping_add(0x5851_F42D_4C95_7F2D))),
        }
    }

    pub fn seed(self) -> u64 {
        self.seed
    }

    pub fn rng(self) -> StreamRng {
        let mut bytes = [0u8; 32];
        let words = [
            splitmix64(self.seed),
            splitmix64(self.seed ^ 0xA5A5_A5A5_A5A5_A5A5),
            splitmix64(self.label),
            splitmix64(self.label ^ 0x3C3C_3C3C_3C3C_3C3C),
        ];
        for (chunk, w) in bytes.chunks_exact_mut(8).zip(words) {
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        ChaCha8Rng::from_seed(bytes)
    }
}
