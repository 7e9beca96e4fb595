//! Canonical random number stream.
//!
//! Every stochastic step in this crate (index shuffles, bag-size draws,
//! label flips, synthetic sampling, weight initialization) consumes the
//! same fully specified stream so that generated benchmarks and training
//! runs are reproducible bit-for-bit across releases and platforms:
//!
//! * generator: ChaCha with 8 rounds, keyed via `seed_from_u64`, read as
//!   64-bit words,
//! * bounded integers: 128-bit multiply-shift of one 64-bit word (no
//!   modulo, no rejection loop),
//! * shuffles: Fisher-Yates from the last element down,
//! * unit floats: top 53 bits of one word scaled by 2^-53,
//! * normals: Box-Muller over two unit floats.
//!
//! None of these helpers delegate to `rand` distribution code, so version
//! bumps of the `rand` ecosystem cannot silently change our streams.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// The generator behind every seeded operation in this crate.
pub type CanonicalRng = ChaCha8Rng;

/// Create the canonical generator for a 64-bit seed.
pub fn seeded(seed: u64) -> CanonicalRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Create the canonical generator for a (seed, stream) pair.
///
/// Streams with the same seed are decorrelated; used for per-epoch
/// shuffle orders during training.
pub fn seeded_stream(seed: u64, stream: u64) -> CanonicalRng {
    let mut rng = seeded(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform draw from the inclusive range `[lo, hi]`.
///
/// Maps one 64-bit word onto the range by widening multiplication, which
/// keeps the draw free of modulo bias (residual bias is below
/// `range / 2^64`).
pub fn bounded_inclusive(rng: &mut impl RngCore, lo: u64, hi: u64) -> u64 {
    debug_assert!(lo <= hi);
    let range = hi - lo + 1; // hi = u64::MAX is not a use case here
    let word = rng.next_u64();
    lo + (((word as u128) * (range as u128)) >> 64) as u64
}

/// Fisher-Yates shuffle over the canonical stream.
pub fn shuffle<T>(rng: &mut impl RngCore, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = bounded_inclusive(rng, 0, i as u64) as usize;
        items.swap(i, j);
    }
}

/// Uniform float in `[0, 1)` with 53 bits of precision.
pub fn unit_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal draw via Box-Muller; consumes exactly two words.
pub fn standard_normal(rng: &mut impl RngCore) -> f64 {
    // First uniform shifted into (0, 1] so the log is finite.
    let u1 = ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
    let u2 = unit_f64(rng);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_words() {
        let mut a = seeded(42);
        let mut b = seeded(42);
        for _ in 0..32 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn streams_decorrelate() {
        let mut a = seeded_stream(42, 1);
        let mut b = seeded_stream(42, 2);
        let same = (0..32).filter(|_| a.next_u64() == b.next_u64()).count();
        assert_eq!(same, 0);
    }

    #[test]
    fn bounded_covers_range_inclusively() {
        let mut rng = seeded(7);
        let mut seen = [false; 5];
        for _ in 0..1000 {
            let v = bounded_inclusive(&mut rng, 3, 7);
            assert!((3..=7).contains(&v));
            seen[(v - 3) as usize] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut rng = seeded(11);
        let mut items: Vec<usize> = (0..100).collect();
        shuffle(&mut rng, &mut items);
        let mut sorted = items.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..100).collect::<Vec<_>>());
        assert_ne!(items, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn unit_f64_stays_in_range() {
        let mut rng = seeded(3);
        for _ in 0..10_000 {
            let u = unit_f64(&mut rng);
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn normals_have_plausible_moments() {
        let mut rng = seeded(5);
        let n = 50_000;
        let draws: Vec<f64> = (0..n).map(|_| standard_normal(&mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "var {var}");
    }
}
