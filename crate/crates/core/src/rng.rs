//! Deterministic random streams.
//!
//! Every random quantity in the crate is drawn from a ChaCha8 generator whose
//! 256-bit key is derived from a master seed and a path of stream
//! identifiers: the path is folded with the SplitMix64 finalizer and the key
//! is the next four SplitMix64 outputs. Two calls with the same seed and path
//! produce the same stream on every platform and for every thread count;
//! different paths give statistically independent streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream purposes, used as the first path element so that unrelated
/// consumers of one master seed never collide.
pub mod purpose {
    pub const PERTURB: u64 = 1;
    pub const FREQUENCIES: u64 = 2;
    pub const RESHUFFLE: u64 = 3;
    pub const ACTIVATION: u64 = 4;
    pub const COLOURING: u64 = 5;
    pub const MOTIF: u64 = 6;
    pub const STATIC: u64 = 7;
    pub const DISORDER: u64 = 8;
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `seed` and a path of identifiers.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    let mut h = splitmix64(seed);
    for (depth, &id) in path.iter().enumerate() {
        h = splitmix64(h ^ splitmix64(id ^ (depth as u64).wrapping_mul(GOLDEN)));
    }
    h
}

/// Generator for the stream identified by `(seed, path)`.
pub fn stream(seed: u64, path: &[u64]) -> StreamRng {
    let mut h = derive_seed(seed, path);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        h = splitmix64(h);
        chunk.copy_from_slice(&h.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Uniform draw in `[0, 1)` with 53 random bits.
#[inline]
pub fn unit(rng: &mut impl rand::RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn same_path_same_stream() {
        let mut a = stream(42, &[purpose::ACTIVATION, 3, 7]);
        let mut b = stream(42, &[purpose::ACTIVATION, 3, 7]);
        for _ in 0..16 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn path_order_matters() {
        let a = derive_seed(1, &[2, 3]);
        let b = derive_seed(1, &[3, 2]);
        let c = derive_seed(1, &[2, 3, 0]);
        assert_ne!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn unit_in_range() {
        let mut r = stream(0, &[]);
        for _ in 0..10_000 {
            let u = unit(&mut r);
            assert!((0.0..1.0).contains(&u));
        }
    }
}
