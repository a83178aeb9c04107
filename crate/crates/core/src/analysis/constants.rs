//! Contraction constants of the return map.

use alloc::vec::Vec;

use crate::ifsim::{IfNetwork, IfNeuron};
use crate::neuron::{fast_flow, geometry_between, slow_flow, Flow, NullclineGeometry, SlowFlow};
use crate::numeric::{abs, maximize};
use crate::Result;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

const X_GRID: usize = 2000;
const M_GRID: usize = 50;

/// One neuron's contributions with their arg-max locations.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct NeuronConstants {
    /// `max |h|/H̄` on `[x̲(0), x̲(M)]`.
    pub slow_to_fast: f64,
    pub slow_to_fast_at: f64,
    /// `max H̄/|h|` on `[x̄(0), x̄(M)]`.
    pub fast_to_slow: f64,
    pub fast_to_slow_at: f64,
    /// `max_{m, m'} max_x H^m(x)/H^{m'}(x)`.
    pub fast_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ContractionConstants {
    /// `c_{𝒮→ℱ}`.
    pub slow_to_fast: f64,
    /// `c_{ℱ→𝒮}`.
    pub fast_to_slow: f64,
    /// `r̄_{ℱ→ℱ}`.
    pub fast_ratio: f64,
    /// `r̄ = r̄_{ℱ→ℱ}^{N+1}`.
    pub r_bar: f64,
    /// `c_{𝒮→ℱ} r̄ c_{ℱ→𝒮}`: the guaranteed contraction rate.
    pub product: f64,
    pub per_neuron: Vec<NeuronConstants>,
}

/// Points just left and right of each breakpoint, so grids see both
/// one-sided values.
fn straddle(bps: &[f64]) -> Vec<f64> {
    bps.iter()
        .flat_map(|&b| [b - 1e-12 * (1.0 + abs(b)), b, b + 1e-12 * (1.0 + abs(b))])
        .collect()
}

fn neuron_constants(n: &IfNeuron) -> Result<NeuronConstants> {
    let model = &n.model;
    let base = &n.base;
    let top = &n.top;
    let bps = straddle(&SlowFlow::new(model.clone(), *base, top.right_knee.x).breakpoints());

    let (a, b) = (base.left_knee.x, top.left_knee.x);
    let (sf_at, sf) = maximize(
        |x| Ok(abs(slow_flow(model, base, x)?) / fast_flow(model, top, x)?),
        a,
        b,
        X_GRID,
        &bps,
    )?;
    let (a, b) = (base.right_knee.x, top.right_knee.x);
    let (fs_at, fs) = maximize(
        |x| Ok(fast_flow(model, top, x)? / abs(slow_flow(model, base, x)?)),
        a,
        b,
        X_GRID,
        &bps,
    )?;
    Ok(NeuronConstants {
        slow_to_fast: sf,
        slow_to_fast_at: sf_at,
        fast_to_slow: fs,
        fast_to_slow_at: fs_at,
        fast_ratio: fast_ratio(n)?,
    })
}

/// Knees move right with the level, so `x ≤ x̄(min(m, m'))` holds exactly
/// when both levels are at least the smallest one whose knee covers `x`;
/// the ratio maximum at `x` is then a max over that suffix of levels.
fn fast_ratio(n: &IfNeuron) -> Result<f64> {
    let model = &n.model;
    let levels: Vec<NullclineGeometry> = (0..=M_GRID)
        .map(|k| {
            let m = (model.margin * k as f64 / M_GRID as f64).min(model.margin);
            geometry_between(model, m, &n.base, &n.top)
        })
        .collect::<Result<_>>()?;
    let lo = n.base.left_knee.x;
    let hi = n.top.right_knee.x;
    let mut best = 1.0f64;
    let mut best_pair = None;
    for k in 0..=X_GRID {
        let x = lo + (hi - lo) * k as f64 / X_GRID as f64;
        let mut max_h = f64::NEG_INFINITY;
        let mut min_h = f64::INFINITY;
        let mut arg = (0, 0);
        for (idx, g) in levels.iter().enumerate() {
            if x > g.right_knee.x {
                continue;
            }
            let h = fast_flow(model, g, x)?;
            if h > max_h {
                max_h = h;
                arg.0 = idx;
            }
            if h < min_h {
                min_h = h;
                arg.1 = idx;
            }
        }
        if min_h.is_finite() && max_h / min_h > best {
            best = max_h / min_h;
            best_pair = Some((arg, x));
        }
    }
    if let Some(((i, j), x)) = best_pair {
        let (gi, gj) = (levels[i], levels[j]);
        let cap = gi.right_knee.x.min(gj.right_knee.x);
        let cell = (hi - lo) / X_GRID as f64;
        let (_, refined) = maximize(
            |y| Ok(fast_flow(model, &gi, y)? / fast_flow(model, &gj, y)?),
            (x - cell).max(lo),
            (x + cell).min(cap),
            8,
            &[],
        )?;
        best = best.max(refined);
    }
    Ok(best)
}

/// Evaluate every constant on the network's neurons.
pub fn contraction_constants(net: &IfNetwork) -> Result<ContractionConstants> {
    let per_neuron = net
        .neurons()
        .iter()
        .map(neuron_constants)
        .collect::<Result<Vec<_>>>()?;
    let fold = |f: fn(&NeuronConstants) -> f64| per_neuron.iter().map(f).fold(0.0, f64::max);
    let slow_to_fast = fold(|c| c.slow_to_fast);
    let fast_to_slow = fold(|c| c.fast_to_slow);
    let fast_ratio = fold(|c| c.fast_ratio).max(1.0);
    let r_bar = libm::pow(fast_ratio, (net.len() + 1) as f64);
    Ok(ContractionConstants {
        slow_to_fast,
        fast_to_slow,
        fast_ratio,
        r_bar,
        product: slow_to_fast * r_bar * fast_to_slow,
        per_neuron,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct MonotonicityVerdict {
    pub holds: bool,
    /// `1/r̄ - c_{𝒮→ℱ} c_{ℱ→𝒮}`.
    pub margin: f64,
}

pub fn check_monotonicity(c: &ContractionConstants) -> MonotonicityVerdict {
    let margin = 1.0 / c.r_bar - c.slow_to_fast * c.fast_to_slow;
    MonotonicityVerdict {
        holds: margin > 0.0,
        margin,
    }
}
