//! Deterministic, domain-separated random streams.
//!
//! Every random draw in the toolkit comes from a ChaCha8 stream keyed by
//! (seed, domain string, key string, index). The derivation below and the
//! draw helpers are pinned here so identical inputs reproduce identical
//! samples regardless of worker count, crate versions, or call order.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer.
#[inline]
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
fn fnv1a64(h: u64, bytes: &[u8]) -> u64 {
    let mut h = h;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100_0000_01B3);
    }
    h
}

/// ChaCha8 stream keyed by (seed, domain, key, index).
pub(crate) fn stream(seed: u64, domain: &str, key: &str, index: u64) -> ChaCha8Rng {
    let mut h = 0xCBF2_9CE4_8422_2325u64; // FNV offset basis
    h = fnv1a64(h, domain.as_bytes());
    h = fnv1a64(h, &[0xFF]);
    h = fnv1a64(h, key.as_bytes());
    h = fnv1a64(h, &[0xFF]);
    let x0 = mix64(seed ^ h);
    let x1 = mix64(x0 ^ index);
    let x2 = mix64(x1 ^ h.rotate_left(32));
    let x3 = mix64(x2 ^ seed.rotate_left(17));
    let mut key32 = [0u8; 32];
    key32[0..8].copy_from_slice(&x0.to_le_bytes());
    key32[8..16].copy_from_slice(&x1.to_le_bytes());
    key32[16..24].copy_from_slice(&x2.to_le_bytes());
    key32[24..32].copy_from_slice(&x3.to_le_bytes());
    ChaCha8Rng::from_seed(key32)
}

/// Unbiased index in `0..n` via rejection sampling on the raw stream.
pub(crate) fn uniform_index(rng: &mut ChaCha8Rng, n: usize) -> usize {
    debug_assert!(n > 0);
    let n = n as u64;
    let zone = u64::MAX - (u64::MAX - n + 1) % n;
    loop {
        let r = rng.next_u64();
        if r <= zone {
            return (r % n) as usize;
        }
    }
}

/// Uniform f64 in [0, 1) with 53 random bits.
#[inline]
pub(crate) fn uniform_f64(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal draw (Box–Muller, first component).
pub(crate) fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1 = loop {
        let u = uniform_f64(rng);
        if u > 0.0 {
            break u;
        }
    };
    let u2 = uniform_f64(rng);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
