//! Deterministic RNG stream derivation.
//!
//! Every random draw in the crate comes from a [`StreamSeed`] that is derived
//! from a master seed through a path of integer keys, e.g.
//! `(master, probe id, replicate index, stick index)`. Two seeds with the same
//! path always produce the same ChaCha stream, independent of thread count or
//! scheduling order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// A node in the stream derivation tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamSeed {
    key: u64,
    stream: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl StreamSeed {
    pub fn new(master: u64) -> Self {
        Self {
            key: splitmix64(master),
            stream: 0,
        }
    }

    /// Derive an independent child stream keyed by `id`.
    pub fn child(&self, id: u64) -> Self {
        let key = splitmix64(self.key ^ splitmix64(id.wrapping_add(self.stream)));
        Self {
            key,
            stream: splitmix64(key ^ id),
        }
    }

    /// Child keyed by a string label (hashed with FNV-1a).
    pub fn named(&self, label: &str) -> Self {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in label.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01B3);
        }
        self.child(h)
    }

    pub fn rng(&self) -> SimRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.key);
        rng.set_stream(self.stream);
        rng
    }
}
