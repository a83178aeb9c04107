//! Synchronization analysis on top of the event engine: the phase metric,
//! contraction constants, existence and global convergence conditions, the
//! synchronous fixed point, and burst dispersion of spike rasters.

mod constants;
mod dispersion;
mod existence;
mod fixed_point;
mod global;
mod report;

use alloc::vec::Vec;

use crate::ifsim::IfNetwork;
use crate::Result;

pub use constants::{
    check_monotonicity, contraction_constants, ContractionConstants, MonotonicityVerdict,
    NeuronConstants,
};
pub use dispersion::{spike_dispersion, Burst, DispersionSeries};
pub use existence::{existence_condition, fast_roots, weak_limit, ExistenceVerdict, WeakLimitVerdict};
pub use fixed_point::{find_fixed_point, FixedPoint};
pub use global::{global_conditions, BiophysicalGlobal, GenericGlobal, GlobalOptions, GlobalVerdicts};
pub use report::{analyze, AnalysisOptions, AnalysisReport};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// `d(p, p') = max_i δ_i - min_i δ_i` with `δ_i = τ_i(x_i) - τ_i(x'_i)`.
pub fn phase_metric(net: &IfNetwork, p: &[f64], q: &[f64]) -> Result<f64> {
    let a = net.phases(p)?;
    let b = net.phases(q)?;
    Ok(phase_spread(&a, &b))
}

/// The metric on phase vectors directly.
pub fn phase_spread(a: &[f64], b: &[f64]) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        lo = lo.min(d);
        hi = hi.max(d);
    }
    if a.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

/// Whether a jump point's chain reaction recruits every neuron.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Membership {
    pub member: bool,
    /// Smallest-index neuron left out of the chain reaction.
    pub witness: Option<usize>,
    pub roots: Vec<usize>,
}

pub fn syn_region_membership(net: &IfNetwork, p: &[f64]) -> Result<Membership> {
    let point = net.absorb(p, true)?;
    let witness = point.firing.iter().position(|&f| !f);
    Ok(Membership {
        member: witness.is_none(),
        witness,
        roots: point.roots().to_vec(),
    })
}
