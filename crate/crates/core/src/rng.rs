//! Counter-based uniform generator.
//!
//! Every uniform is a pure function of `(seed, stream, counter)`, so a field
//! cell, a sample or an inner resample can be regenerated in any order and on
//! any worker with bit-identical results. The counter for a lattice site is
//! derived from its coordinates, never from a storage index, which is what
//! makes sub-boxes of differently sized fields agree.

use crate::lattice::Site;

/// Identifier written into every output file.
pub const PRNG_ALGORITHM: &str = "splitmix64-ctr-v1";

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A keyed stream of uniforms addressed by counter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
}

impl CounterRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let key = mix64(seed.wrapping_add(GOLDEN)) ^ mix64(stream.wrapping_mul(GOLDEN) ^ 0x5851_f42d_4c95_7f2d);
        CounterRng { key: mix64(key) }
    }

    #[inline]
    pub fn bits(&self, counter: u64) -> u64 {
        mix64(self.key ^ mix64(counter.wrapping_add(GOLDEN).wrapping_mul(0xd1b5_4a32_d192_ed03)))
    }

    /// Uniform on the open interval (0, 1); 0.5 itself is never produced.
    #[inline]
    pub fn uniform(&self, counter: u64) -> f64 {
        ((self.bits(counter) >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    #[inline]
    pub fn site_uniform(&self, site: Site) -> f64 {
        self.uniform(site_counter(site))
    }
}

#[inline]
fn zigzag(v: i32) -> u64 {
    ((v << 1) ^ (v >> 31)) as u32 as u64
}

/// Coordinate-derived counter: zigzag(x) in the high word, zigzag(y) low.
#[inline]
pub fn site_counter(site: Site) -> u64 {
    (zigzag(site.x) << 32) | zigzag(site.y)
}

/// Seed of sample `index` under a master seed. Depends only on the pair.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix64(mix64(master ^ 0x2545_f491_4f6c_dd1d).wrapping_add(index.wrapping_mul(GOLDEN)))
}
