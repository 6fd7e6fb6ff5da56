//! Seeded random substreams.
//!
//! Every stochastic decision in a run draws from a stream identified by
//! `(master seed, purpose, generation, individual, mapping)`. The tuple is
//! folded through SplitMix64:
//!
//! ```text
//! h = splitmix64(seed)
//! for x in [purpose, generation, individual, mapping]:
//!     h = splitmix64(h ^ splitmix64(x))
//! ```
//!
//! and the 256-bit ChaCha8 key is the four successive SplitMix64 outputs
//! starting from `h`. Both steps are integer-only, so streams are identical
//! on every platform and independent of how work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the simulator.
pub type SimRng = ChaCha8Rng;

/// What a stream is used for. The discriminant is part of the hash input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Founders = 1,
    World = 2,
    Brain = 3,
    Selection = 4,
    Mutation = 5,
    Lod = 6,
    Analysis = 7,
    Replay = 8,
    Testbed = 9,
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Identifies one substream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub purpose: Purpose,
    pub generation: u64,
    pub individual: u64,
    pub mapping: u64,
}

impl StreamKey {
    pub fn new(seed: u64, purpose: Purpose) -> Self {
        Self {
            seed,
            purpose,
            generation: 0,
            individual: 0,
            mapping: 0,
        }
    }

    pub fn generation(mut self, generation: u64) -> Self {
        self.generation = generation;
        self
    }

    pub fn individual(mut self, individual: u64) -> Self {
        self.individual = individual;
        self
    }

    pub fn mapping(mut self, mapping: u64) -> Self {
        self.mapping = mapping;
        self
    }

    pub fn purpose(mut self, purpose: Purpose) -> Self {
        self.purpose = purpose;
        self
    }

    pub fn hash(&self) -> u64 {
        let mut h = splitmix64(self.seed);
        for x in [
            self.purpose as u64,
            self.generation,
            self.individual,
            self.mapping,
        ] {
            h = splitmix64(h ^ splitmix64(x));
        }
        h
    }

    pub fn rng(&self) -> SimRng {
        let mut key = [0u8; 32];
        let mut h = self.hash();
        for chunk in key.chunks_exact_mut(8) {
            h = splitmix64(h);
            chunk.copy_from_slice(&h.to_le_bytes());
        }
        SimRng::from_seed(key)
    }
}
