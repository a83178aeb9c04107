//! Peak detection on sampled voltage traces.

use alloc::vec::Vec;

/// Streaming detector: one spike per complete excursion above the
/// threshold, at the parabola-refined peak. Excursions already under way at
/// the first sample or unfinished at the last are not reported.
#[derive(Debug, Clone)]
pub struct SpikeDetector {
    threshold: f64,
    dt: f64,
    prev: Option<(f64, f64)>,
    prev2: Option<(f64, f64)>,
    inside: bool,
    /// Excursion seen from its start.
    armed: bool,
    best: Option<(f64, f64)>,
}

impl SpikeDetector {
    pub fn new(threshold: f64, dt: f64) -> Self {
        Self {
            threshold,
            dt,
            prev: None,
            prev2: None,
            inside: false,
            armed: false,
            best: None,
        }
    }

    /// Feed the next sample; returns a spike time when an excursion ends.
    pub fn push(&mut self, t: f64, v: f64) -> Option<f64> {
        let mut out = None;
        let above = v > self.threshold;
        if above && !self.inside {
            self.inside = true;
            self.armed = self.prev.is_some();
            self.best = Some((v, t));
        } else if above {
            if let (Some((t1, v1)), Some((_, v0))) = (self.prev, self.prev2) {
                if v1 >= v0 && v1 > v && self.best.map_or(true, |b| v1 >= b.0) {
                    self.best = Some((v1, t1 + self.offset(v0, v1, v)));
                }
            }
            if self.best.map_or(true, |b| v > b.0) {
                self.best = Some((v, t));
            }
        } else if self.inside {
            self.inside = false;
            if self.armed {
                out = self.best.map(|b| b.1);
            }
            self.best = None;
        }
        self.prev2 = self.prev;
        self.prev = Some((t, v));
        out
    }

    /// Vertex of the parabola through three equally spaced samples, relative
    /// to the middle one.
    fn offset(&self, a: f64, b: f64, c: f64) -> f64 {
        let curv = a - 2.0 * b + c;
        if curv < 0.0 {
            0.5 * self.dt * (a - c) / curv
        } else {
            0.0
        }
    }
}

/// Spike times of one uniformly sampled trace.
pub fn detect_spikes(times: &[f64], v: &[f64], threshold: f64) -> Vec<f64> {
    let dt = if times.len() > 1 { times[1] - times[0] } else { 0.0 };
    let mut d = SpikeDetector::new(threshold, dt);
    times
        .iter()
        .zip(v)
        .filter_map(|(&t, &x)| d.push(t, x))
        .collect()
}
