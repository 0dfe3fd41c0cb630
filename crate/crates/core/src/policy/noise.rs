use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// 64-bit key that expands deterministically into a 2-D standard Gaussian
/// noise vector. Storing the key is enough to regenerate the noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NoiseSeed(pub u64);

impl NoiseSeed {
    pub fn key(self) -> u64 {
        self.0
    }

    /// The initial noise `z` for this seed.
    pub fn noise(self) -> [f64; 2] {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        [StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)]
    }

    /// A child seed, independent of the parent noise, labelled by `tag`.
    pub fn derive(self, tag: u64) -> NoiseSeed {
        NoiseSeed(mix64(self.0 ^ mix64(tag.wrapping_add(0x9e37_79b9_7f4a_7c15))))
    }

    /// Draw a fresh seed from a generator.
    pub fn draw(rng: &mut impl RngCore) -> NoiseSeed {
        NoiseSeed(rng.next_u64())
    }
}

/// SplitMix64 finalizer.
pub fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}
