//! Shared public-coin random tape.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Infinite random string readable by every node at any offset.
///
/// Word `i` is the `i`-th 64-bit output of a ChaCha8 stream keyed by the
/// seed, so reads are random-access and independent of evaluation order.
#[derive(Clone, Debug)]
pub struct RandomTape {
    seed: u64,
    base: ChaCha8Rng,
}

impl RandomTape {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            base: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn word(&self, index: u64) -> u64 {
        let mut rng = self.base.clone();
        rng.set_word_pos(u128::from(index) * 2);
        rng.next_u64()
    }
}

/// SplitMix64 finaliser, used for deterministic mixing and seed derivation.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent per-trial seed derived from a master seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix64(mix64(master) ^ index.wrapping_mul(0xd605_bbb5_8c8a_bbfd))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_access_matches_stream() {
        let tape = RandomTape::new(7);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let stream: Vec<u64> = (0..5).map(|_| rng.next_u64()).collect();
        let direct: Vec<u64> = (0..5).map(|i| tape.word(i)).collect();
        assert_eq!(stream, direct);
    }

    #[test]
    fn seeds_differ() {
        assert_ne!(RandomTape::new(1).word(0), RandomTape::new(2).word(0));
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
    }
}
