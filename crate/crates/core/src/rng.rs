//! Deterministic seeding.
//!
//! A run is fully determined by its seed. The low chain, the high chain and
//! the swap decisions each draw from their own ChaCha8 stream, seeded from
//! the run seed through fixed 64-bit mixing constants.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

const LOW_CHAIN: u64 = 0x9E37_79B9_7F4A_7C15;
const HIGH_CHAIN: u64 = 0xC2B2_AE3D_27D4_EB4F;
const SWAP: u64 = 0x1656_67B1_9E37_79F9;
const AUX: u64 = 0xD6E8_FEB8_6659_FD93;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn substream(seed: u64, constant: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(mix64(seed ^ constant))
}

/// The three sampler streams plus an auxiliary stream for evaluation work
/// (reference samples, RFF frequencies) that must not perturb the chains.
#[derive(Debug, Clone)]
pub struct RunStreams {
    pub low: StreamRng,
    pub high: StreamRng,
    pub swap: StreamRng,
}

impl RunStreams {
    pub fn from_seed(seed: u64) -> Self {
        RunStreams {
            low: substream(seed, LOW_CHAIN),
            high: substream(seed, HIGH_CHAIN),
            swap: substream(seed, SWAP),
        }
    }
}

pub fn aux_stream(seed: u64) -> StreamRng {
    substream(seed, AUX)
}

/// Uniform draw on `[0, 1)`.
#[inline]
pub fn uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>()
}
