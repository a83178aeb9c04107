//! Iteration of the cycle map to its synchronous fixed point.

use alloc::vec::Vec;

use super::phase_metric;
use crate::ifsim::IfNetwork;
use crate::{Error, Result};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FixedPoint {
    pub point: Vec<f64>,
    pub iterations: usize,
    /// `d(p_K, p_{K-1})` at exit.
    pub residual: f64,
    /// `d(p_k, p*)` along the orbit.
    pub distances: Vec<f64>,
    /// `d(p_{k+1}, p*) / d(p_k, p*)` while `d(p_k, p*)` stays above the
    /// resolution floor.
    pub ratios: Vec<f64>,
    /// Largest ratio over the last half of `ratios`; zero if the orbit
    /// landed within the floor in one step.
    pub measured_ratio: f64,
}

/// Iterate `R` from a jump point until successive iterates are within `tol`.
/// Every iterate must lie in the synchronous region; the first one that
/// does not yields [`Error::NoInvariantSet`].
pub fn find_fixed_point(net: &IfNetwork, p0: &[f64], max_iter: usize, tol: f64) -> Result<FixedPoint> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(alloc::format!("tolerance {tol} must be positive")));
    }
    let mut orbit = alloc::vec![p0.to_vec()];
    let mut residual = f64::INFINITY;
    for k in 0..max_iter {
        let p = orbit.last().expect("nonempty");
        let point = net.absorb(p, true)?;
        if let Some(w) = point.firing.iter().position(|&f| !f) {
            return Err(Error::NoInvariantSet {
                iteration: k,
                witness: w,
            });
        }
        let out = net.spike_map(&point)?;
        let next = net.return_map(&out.x)?;
        residual = phase_metric(net, &next, p)?;
        orbit.push(next);
        if residual < tol {
            break;
        }
    }
    if !(residual < tol) {
        return Err(Error::NonConvergence {
            iterations: max_iter,
            residual,
        });
    }
    let star = orbit.last().expect("nonempty").clone();
    let distances = orbit
        .iter()
        .map(|p| phase_metric(net, p, &star))
        .collect::<Result<Vec<_>>>()?;
    let floor = 1e3 * tol;
    let ratios: Vec<f64> = distances
        .windows(2)
        .take_while(|w| w[0] > floor && w[1] > floor)
        .map(|w| w[1] / w[0])
        .collect();
    let measured_ratio = ratios[ratios.len() / 2..].iter().copied().fold(0.0, f64::max);
    Ok(FixedPoint {
        point: star,
        iterations: orbit.len() - 1,
        residual,
        distances,
        ratios,
        measured_ratio,
    })
}
