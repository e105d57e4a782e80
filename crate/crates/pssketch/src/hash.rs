//! Seeded 64-bit mixing used everywhere a keyed hash is needed: fingerprints,
//! counter-array row hashes, and presence filters. The finalizer is the
//! splitmix64 permutation, which is bijective on u64, so two keys collide for
//! a given seed only after truncation.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Mixes `key` under `seed` into a uniformly scrambled 64-bit value.
#[inline]
pub fn hash64(key: u64, seed: u64) -> u64 {
    let mut x = key ^ seed.wrapping_mul(GOLDEN_GAMMA);
    x ^= x >> 30;
    x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^= x >> 31;
    x
}

/// Derives the seed for row `index` of a multi-row structure from one master
/// seed, so configs carry a single seed but rows hash independently.
#[inline]
pub fn derive_seed(master: u64, index: u64) -> u64 {
    hash64(master.wrapping_add(index.wrapping_mul(GOLDEN_GAMMA)), !master)
}

/// Hashes an arbitrary byte string by folding 8-byte chunks through
/// [`hash64`]. Stable across platforms and releases, unlike the std hasher.
pub fn hash_bytes(bytes: &[u8], seed: u64) -> u64 {
    let mut h = seed ^ (bytes.len() as u64).wrapping_mul(GOLDEN_GAMMA);
    for chunk in bytes.chunks(8) {
        let mut buf = [0u8; 8];
        buf[..chunk.len()].copy_from_slice(chunk);
        h = hash64(u64::from_le_bytes(buf) ^ h, GOLDEN_GAMMA);
    }
    h
}
