//! Seeded draws of conductances and initial conditions.
//!
//! Every random number comes from one SplitMix64 stream (`rand_xoshiro`)
//! whose state starts at the seed. Each output adds the increment
//! `0x9E3779B97F4A7C15` to the state and mixes the result with
//!
//! ```text
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! z =  z ^ (z >> 31)
//! ```
//!
//! (wrapping multiplication). A uniform draw is `(z >> 11) · 2⁻⁵³` in
//! `[0, 1)` mapped affinely onto the requested interval. Populations take
//! `g_L, g_Ca, g_K` for neuron 0, then neuron 1, and so on; initial
//! conditions continue the same stream.

use rand_core::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use synsync_core::neuron::{Conductances, DomainBox, ParameterRanges};

pub struct Stream(SplitMix64);

impl Stream {
    pub fn new(seed: u64) -> Self {
        Self(SplitMix64::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn in_range(&mut self, (lo, hi): (f64, f64)) -> f64 {
        lo + (hi - lo) * self.uniform()
    }
}

pub fn draw_population(stream: &mut Stream, ranges: &ParameterRanges, n: usize) -> Vec<Conductances> {
    (0..n)
        .map(|_| {
            let leak = stream.in_range(ranges.leak);
            let calcium = stream.in_range(ranges.calcium);
            let potassium = stream.in_range(ranges.potassium);
            Conductances::new(leak, calcium, potassium)
        })
        .collect()
}

/// `n` neurons from a fresh stream.
pub fn seeded_population(ranges: &ParameterRanges, seed: u64, n: usize) -> Vec<Conductances> {
    draw_population(&mut Stream::new(seed), ranges, n)
}

/// `(x, v)` uniform over each box.
pub fn draw_states(stream: &mut Stream, boxes: &[DomainBox]) -> Vec<(f64, f64)> {
    boxes
        .iter()
        .map(|b| {
            let x = stream.in_range((b.x_lo, b.x_hi));
            let v = stream.in_range((b.v_lo, b.v_hi));
            (x, v)
        })
        .collect()
}
