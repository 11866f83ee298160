//! Reproducible randomness: a splittable SplitMix64 generator.
//!
//! The CLI promises bit-identical output for identical seeds, so randomness
//! must not depend on an external crate's stream stability. SplitMix64 is
//! small enough to own.

/// SplitMix64 stream. One 64-bit master seed is split per suite by hashing a
/// label into the state, so suites draw independent, reproducible streams.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Derive an independent stream for a named suite.
    pub fn split(&self, label: &str) -> Self {
        let mut h = 0xcbf2_9ce4_8422_2325u64; // FNV-1a offset basis
        for b in label.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x1000_0000_01b3);
        }
        let mut child = Self {
            state: self.state ^ h,
        };
        child.next_u64();
        child
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Log-uniform in [lo, hi); lo, hi > 0.
    pub fn log_range(&mut self, lo: f64, hi: f64) -> f64 {
        (self.range(lo.ln(), hi.ln())).exp()
    }

    /// Point of C² with |z| = r and uniform phases/angle split.
    pub fn on_sphere(&mut self, r: f64) -> [f64; 4] {
        use std::f64::consts::TAU;
        // radius split: |z1| = r cos a, |z2| = r sin a
        let a = self.range(0.0, 0.5 * std::f64::consts::PI);
        let t1 = self.range(0.0, TAU);
        let t2 = self.range(0.0, TAU);
        let r1 = r * a.cos();
        let r2 = r * a.sin();
        [r1 * t1.cos(), r1 * t1.sin(), r2 * t2.cos(), r2 * t2.sin()]
    }
}
