//! Seeded, splittable randomness.
//!
//! Every consumer of randomness (tree node noise, top-up noise, exploration
//! coins, clock noise, value streams, schedules) draws from its own named
//! stream derived from the experiment seed. Two runs that share a seed share
//! every stream, so experiments can replay identical noise while changing a
//! single input.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type StreamRng = ChaCha8Rng;

/// Well-known stream labels.
pub mod stream {
    pub const TREE_NODES: u64 = 1;
    pub const TREE_TOP_UP: u64 = 2;
    pub const EXPLORATION: u64 = 3;
    pub const CLOCK_NOISE: u64 = 4;
    pub const VALUES: u64 = 5;
    pub const SCHEDULE: u64 = 6;
    pub const ARMS: u64 = 7;
    pub const BIDDERS: u64 = 8;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Root of a tree of independent generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
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

    /// Independent subtree, e.g. one per replica or per bidder.
    pub fn child(&self, label: u64) -> Self {
        Self {
            seed: splitmix64(self.seed ^ splitmix64(label.wrapping_add(0x5EED))),
        }
    }

    pub fn rng(&self, stream: u64) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

pub fn standard_normal<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}
