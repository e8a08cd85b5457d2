//! Seeded random streams.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`] whose seed is
//! derived from one master seed through a tree of labels:
//!
//! ```text
//! child(seed, label) = splitmix64(seed ^ splitmix64(label))
//! ```
//!
//! A stream for a path `[l0, l1, ...]` is `ChaCha8Rng::seed_from_u64` of the
//! folded seed. Work items (annealing cycles, copies, chains) each get their own
//! path, so results do not depend on scheduling or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// The splitmix64 finalizer.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SeedTree {
    seed: u64,
}

impl SeedTree {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn child(&self, label: u64) -> Self {
        Self {
            seed: splitmix64(self.seed ^ splitmix64(label)),
        }
    }

    pub fn path(&self, labels: &[u64]) -> Self {
        labels.iter().fold(*self, |t, &l| t.child(l))
    }

    pub fn rng(&self) -> StreamRng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// Convenience: a stream straight from a seed.
pub fn stream(seed: u64) -> StreamRng {
    SeedTree::new(seed).rng()
}
