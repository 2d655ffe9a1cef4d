//! Seeded substreams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by
//! `(seed, stream_id)` with the ChaCha stream number set to a counter (the
//! resample or trial index). A work item's draws therefore depend only on
//! its own coordinates, never on scheduling, so parallel runs reproduce
//! sequential ones exactly on every platform.
//!
//! Key layout (32 bytes): `seed` as u64 LE, `stream_id` as u64 LE, then
//! sixteen zero bytes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn substream(seed: u64, stream_id: u64, counter: u64) -> StreamRng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&stream_id.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(counter);
    rng
}

/// 64-bit FNV-1a over the domain tag and parts, each terminated by `0xff`
/// (a byte that never occurs in UTF-8).
pub fn stream_id(domain: &str, parts: &[&str]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    for s in std::iter::once(domain).chain(parts.iter().copied()) {
        for &b in s.as_bytes().iter().chain(std::iter::once(&0xffu8)) {
            h ^= u64::from(b);
            h = h.wrapping_mul(PRIME);
        }
    }
    h
}

/// Uniform index in `0..n`, drawn through `u32` so the result does not
/// depend on the platform's pointer width.
#[inline]
pub fn uniform_index(rng: &mut StreamRng, n: usize) -> usize {
    let n = u32::try_from(n).expect("resampling population exceeds u32::MAX");
    rng.gen_range(0..n) as usize
}
