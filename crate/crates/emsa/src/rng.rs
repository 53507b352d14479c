//! Counter-based random number derivation.
//!
//! Every random draw in the crate is a pure function of
//! `(master_seed, trial_index, counter)`, so Monte Carlo trials can be
//! evaluated in any order, on any number of threads, and still produce
//! bit-identical streams.

/// SplitMix64 finalizer: a full-avalanche 64-bit mixer.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hash `(seed, trial, counter)` into a well-mixed 64-bit word.
#[inline]
pub fn counter_hash(seed: u64, trial: u64, counter: u64) -> u64 {
    // Three chained avalanche rounds; each input enters through its own round
    // so that low-entropy counters still decorrelate.
    let a = mix(seed);
    let b = mix(a ^ trial.wrapping_mul(0xd6e8_feb8_6659_fd93));
    mix(b ^ counter.wrapping_mul(0xa076_1d64_78bd_642f))
}

/// Uniform draw in `[0, 1)` with a full 53-bit mantissa.
#[inline]
pub fn uniform_53(seed: u64, trial: u64, counter: u64) -> f64 {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    (counter_hash(seed, trial, counter) >> 11) as f64 * SCALE
}

/// Derive an independent sub-seed, e.g. one master seed per scan scale.
#[inline]
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    counter_hash(seed, stream, 0x5eed)
}
