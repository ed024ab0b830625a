// SPDX-License-Identifier: MIT OR Apache-2.0

//! Seeded randomness.
//!
//! Everything random in the engine goes through ChaCha8 seeded from a `u64`
//! (rand_chacha's `seed_from_u64`), so streams are identical across
//! platforms and can be checkpointed by word position.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer, used to derive independent child seeds.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Serializable checkpoint of a [`ChaCha8Rng`] created with [`seeded`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    pub algorithm: String,
    pub seed: u64,
    /// Word position as a decimal string (u128 does not fit JSON numbers).
    pub word_pos: String,
}

impl RngState {
    pub fn capture(seed: u64, rng: &ChaCha8Rng) -> Self {
        Self {
            algorithm: "chacha8".to_string(),
            seed,
            word_pos: rng.get_word_pos().to_string(),
        }
    }

    pub fn restore(&self) -> Result<ChaCha8Rng> {
        if self.algorithm != "chacha8" {
            return Err(Error::Validation(format!(
                "unknown rng algorithm {:?}",
                self.algorithm
            )));
        }
        let pos: u128 = self
            .word_pos
            .parse()
            .map_err(|_| Error::Validation(format!("bad rng word_pos {:?}", self.word_pos)))?;
        let mut rng = seeded(self.seed);
        rng.set_word_pos(pos);
        Ok(rng)
    }
}
