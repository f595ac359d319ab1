/// Weyl increment used to space run indices before mixing (odd, so the map
/// `i -> base + (i + 1) * GOLDEN` is injective modulo 2^64).
pub const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function; a bijection on `u64`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for run `run_index` of a sweep:
/// `splitmix64(base_seed + (run_index + 1) * 0x9E3779B97F4A7C15)` with
/// wrapping arithmetic. Distinct indices give distinct seeds because both
/// steps are bijections.
pub fn derive_run_seed(base_seed: u64, run_index: u64) -> u64 {
    splitmix64(base_seed.wrapping_add(run_index.wrapping_add(1).wrapping_mul(GOLDEN)))
}
