//! Deterministic pseudo-random generator used throughout the pipeline.
//!
//! Everything that needs randomness (synthetic corpora, t-SNE initialization,
//! stratified folds, calibration splits) draws from SplitMix64 so that a seed
//! fully determines every artifact, independently of platform or library
//! versions. SplitMix64 is the 64-bit counter-based generator of Steele,
//! Lea and Flood ("Fast splittable pseudorandom number generators", 2014):
//! the state advances by the golden-ratio constant 0x9E3779B97F4A7C15 and the
//! output is a `xor`-shift/multiply finalizer of the state.

/// SplitMix64 generator. Cheap to construct; copy freely.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
    spare_gaussian: Option<f64>,
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 {
            state: seed,
            spare_gaussian: None,
        }
    }

    /// Derives an independent substream, e.g. one per family or per sample.
    /// Distinct `stream` ids give decorrelated sequences for the same seed.
    pub fn substream(seed: u64, stream: u64) -> Self {
        SplitMix64::new(mix(seed ^ stream.wrapping_mul(GOLDEN).wrapping_add(0x63_1BCD)))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix(self.state)
    }

    /// Uniform in [0, 1) with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in [0, n). Uses the multiply-shift bound mapping.
    pub fn next_below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }

    pub fn next_byte(&mut self) -> u8 {
        (self.next_u64() >> 56) as u8
    }

    /// Standard normal via Box–Muller; one spare value is cached.
    pub fn next_gaussian(&mut self) -> f64 {
        if let Some(g) = self.spare_gaussian.take() {
            return g;
        }
        // Avoid ln(0): shift u1 away from zero.
        let u1 = (self.next_u64() >> 11) as f64 + 0.5;
        let u1 = u1 * (1.0 / (1u64 << 53) as f64);
        let u2 = self.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_gaussian = Some(r * theta.sin());
        r * theta.cos()
    }

    /// In-place Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, slice: &mut [T]) {
        for i in (1..slice.len()).rev() {
            let j = self.next_below(i as u64 + 1) as usize;
            slice.swap(i, j);
        }
    }
}
