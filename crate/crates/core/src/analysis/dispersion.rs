//! Burst dispersion of a spike raster.

use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Burst {
    pub start: f64,
    pub end: f64,
    /// `(end - start) / period`, or infinity when a neuron is missing.
    pub dispersion: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct DispersionSeries {
    /// Median inter-spike interval across all neurons.
    pub period: f64,
    pub bursts: Vec<Burst>,
}

impl DispersionSeries {
    pub fn dispersions(&self) -> Vec<f64> {
        self.bursts.iter().map(|b| b.dispersion).collect()
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Cluster `(neuron, time)` spikes inside `window` into bursts separated by
/// gaps longer than a quarter of the median period.
/// Returns `None` when no neuron fires twice in the window.
pub fn spike_dispersion(spikes: &[(usize, f64)], n: usize, window: (f64, f64)) -> Option<DispersionSeries> {
    let mut inside: Vec<(usize, f64)> = spikes
        .iter()
        .copied()
        .filter(|&(i, t)| i < n && t >= window.0 && t <= window.1)
        .collect();
    inside.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut last = alloc::vec![f64::NAN; n];
    let mut isi = Vec::new();
    for &(i, t) in &inside {
        if !last[i].is_nan() {
            isi.push(t - last[i]);
        }
        last[i] = t;
    }
    if isi.is_empty() {
        return None;
    }
    let period = median(&mut isi);
    let gap = 0.25 * period;
    let mut bursts = Vec::new();
    let mut k = 0;
    while k < inside.len() {
        let start = inside[k].1;
        let mut seen = alloc::vec![false; n];
        let mut end = start;
        while k < inside.len() && inside[k].1 - end <= gap {
            seen[inside[k].0] = true;
            end = inside[k].1;
            k += 1;
        }
        let dispersion = if seen.iter().all(|&s| s) {
            (end - start) / period
        } else {
            f64::INFINITY
        };
        bursts.push(Burst { start, end, dispersion });
    }
    Some(DispersionSeries { period, bursts })
}
