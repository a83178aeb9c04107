//! Global convergence conditions for the generic and the biophysical
//! integrate-and-fire networks.

use alloc::vec::Vec;

use super::constants::{check_monotonicity, ContractionConstants};
use super::existence::existence_condition;
use crate::ifsim::IfNetwork;
use crate::network::{min_tree_indegree, DEFAULT_EXACT_LIMIT};
use crate::neuron::slow_flow;
use crate::{Error, Result};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct GlobalOptions {
    /// `r_i ∈ (0, 1)`; `None` means 0.5 for every neuron.
    pub r: Option<Vec<f64>>,
    /// Landing spread of the spiking map.
    pub eta: f64,
    /// Box shrinkage `η* ≥ η`.
    pub eta_star: f64,
    pub exact_limit: usize,
}

impl Default for GlobalOptions {
    fn default() -> Self {
        Self {
            r: None,
            eta: 0.0,
            eta_star: 0.0,
            exact_limit: DEFAULT_EXACT_LIMIT,
        }
    }
}

/// Inputs and verdict of the generic-model condition.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct GenericGlobal {
    /// `x̲_i^ℱ = min_{j≠i} x̲_i(g_i d̄_i^𝒯(j))`.
    pub box_knee: Vec<f64>,
    /// Every `x̲_i^ℱ` lies strictly above `x̲_i`.
    pub box_nonempty: bool,
    pub eta: f64,
    pub eta_star: f64,
    /// `min_i (1 - r_i)(x̲_i^ℱ - x̲_i)`; `η*` must stay below it.
    pub eta_star_limit: f64,
    pub sufficient_monotonicity: bool,
    pub d_sp_upper: f64,
    pub d_syn: f64,
    pub d_sp: f64,
    pub r_eta: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub holds: bool,
}

/// Inputs and verdict of the spanning-tree condition.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct BiophysicalGlobal {
    /// `d̲_i`.
    pub min_indegree: Vec<f64>,
    pub min_indegree_exact: bool,
    pub compression: bool,
    /// `min_{i≠j} τ_j(x̄_j(0)) - τ_i(x̄_i(g_i d_i)) + τ_i(x̲_i(r_i g_i d̲_i))`.
    pub compression_margin: f64,
    pub d_sp_upper: f64,
    pub d_syn: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct GlobalVerdicts {
    pub monotonicity: bool,
    pub generic: GenericGlobal,
    pub biophysical: BiophysicalGlobal,
}

pub fn global_conditions(
    net: &IfNetwork,
    constants: &ContractionConstants,
    options: &GlobalOptions,
) -> Result<GlobalVerdicts> {
    let n = net.len();
    if n < 2 {
        return Err(Error::InvalidInput("global conditions need at least two neurons".into()));
    }
    let r = match &options.r {
        Some(r) if r.len() != n => {
            return Err(Error::InvalidInput(alloc::format!("{} r values for {n} neurons", r.len())))
        }
        Some(r) => r.clone(),
        None => alloc::vec![0.5; n],
    };
    if r.iter().any(|&v| !(v > 0.0 && v < 1.0)) {
        return Err(Error::InvalidInput("every r_i must lie in (0, 1)".into()));
    }
    if !(options.eta >= 0.0 && options.eta_star >= options.eta) {
        return Err(Error::InvalidInput(alloc::format!(
            "need 0 ≤ η ≤ η*, got η = {}, η* = {}",
            options.eta,
            options.eta_star
        )));
    }
    let monotonicity = check_monotonicity(constants);
    let contraction = 1.0 - constants.product;
    let g = net.graph();
    let mut upper = Vec::with_capacity(n);
    let mut period = Vec::with_capacity(n);
    for (i, ni) in net.neurons().iter().enumerate() {
        upper.push(ni.right_knee(g.gain(i) * g.in_degree(i))?);
        period.push(ni.period()?);
    }
    let tau = |i: usize, x: f64| net.neuron(i).phase(x);
    let lower: Vec<f64> = net.neurons().iter().map(|ni| ni.base.left_knee.x).collect();

    // Generic model.
    let mut box_knee = alloc::vec![f64::INFINITY; n];
    for j in 0..n {
        let v = existence_condition(net, j)?;
        for i in (0..n).filter(|&i| i != j) {
            let k = if v.reached_all { v.recruiting_knee[i] } else { lower[i] };
            box_knee[i] = box_knee[i].min(k);
        }
    }
    let box_nonempty = (0..n).all(|i| box_knee[i] > lower[i]);
    let eta_star_limit = (0..n)
        .map(|i| (1.0 - r[i]) * (box_knee[i] - lower[i]))
        .fold(f64::INFINITY, f64::min);
    let eta_star = options.eta_star;
    let mixed: Vec<f64> = (0..n)
        .map(|i| (1.0 - r[i]) * lower[i] + r[i] * box_knee[i])
        .collect();
    let shrunk: Vec<f64> = (0..n).map(|i| (box_knee[i] - eta_star).max(lower[i])).collect();
    let mut sufficient_monotonicity = true;
    let mut d_sp_upper = 0.0f64;
    let mut d_syn = f64::INFINITY;
    let mut d_sp = 0.0f64;
    for i in 0..n {
        let t_up = tau(i, upper[i])?;
        let t_mix = tau(i, mixed[i])?;
        let t_box = tau(i, shrunk[i])?;
        for j in (0..n).filter(|&j| j != i) {
            if !(t_up - t_mix < period[j]) {
                sufficient_monotonicity = false;
            }
        }
        d_sp_upper = d_sp_upper.max(2.0 * (t_up - t_box));
        d_syn = d_syn.min(t_box - t_mix);
        d_sp = d_sp.max(t_up);
    }
    let r_eta = if options.eta == 0.0 {
        0.0
    } else {
        eta_ratio(net, &upper, options.eta)?
    };
    let lhs = (n - 1) as f64 * d_sp_upper;
    let rhs = contraction * d_syn - r_eta * (d_sp - d_syn);
    let generic = GenericGlobal {
        box_nonempty,
        eta: options.eta,
        eta_star,
        eta_star_limit,
        sufficient_monotonicity,
        d_sp_upper,
        d_syn,
        d_sp,
        r_eta,
        lhs,
        rhs,
        margin: rhs - lhs,
        holds: monotonicity.holds
            && box_nonempty
            && eta_star < eta_star_limit
            && sufficient_monotonicity
            && lhs < rhs,
        box_knee,
    };

    // Biophysical model.
    let trees: Vec<_> = (0..n).map(|i| min_tree_indegree(g, i, options.exact_limit)).collect();
    let mut compression_margin = f64::INFINITY;
    let mut d_sp_upper = 0.0f64;
    let mut d_syn = f64::INFINITY;
    for i in 0..n {
        let ni = net.neuron(i);
        let level = g.gain(i) * trees[i].value;
        let t_up = tau(i, upper[i])?;
        let t_lo = tau(i, ni.left_knee(level)?)?;
        let t_half = tau(i, ni.left_knee(r[i] * level)?)?;
        for j in (0..n).filter(|&j| j != i) {
            compression_margin = compression_margin.min(period[j] - (t_up - t_half));
        }
        d_sp_upper = d_sp_upper.max(2.0 * (t_up - t_lo));
        d_syn = d_syn.min(t_lo - t_half);
    }
    let lhs = (n - 1) as f64 * d_sp_upper;
    let rhs = contraction * d_syn;
    let biophysical = BiophysicalGlobal {
        min_indegree: trees.iter().map(|t| t.value).collect(),
        min_indegree_exact: trees.iter().all(|t| t.exact),
        compression: compression_margin > 0.0,
        compression_margin,
        d_sp_upper,
        d_syn,
        lhs,
        rhs,
        margin: rhs - lhs,
        holds: monotonicity.holds && compression_margin > 0.0 && lhs < rhs,
    };
    Ok(GlobalVerdicts {
        monotonicity: monotonicity.holds,
        generic,
        biophysical,
    })
}

/// `r_η`: how far `h(x)/h(x⁺)` can exceed one when `x⁺` trails `x` by at
/// most `η`, clamped at zero.
fn eta_ratio(net: &IfNetwork, upper: &[f64], eta: f64) -> Result<f64> {
    const OUTER: usize = 400;
    const INNER: usize = 40;
    let mut worst = 1.0f64;
    for (i, ni) in net.neurons().iter().enumerate() {
        let lo = ni.base.left_knee.x;
        let h = |x: f64| slow_flow(&ni.model, &ni.base, x);
        for a in 0..=OUTER {
            let x = lo + (upper[i] - lo) * a as f64 / OUTER as f64;
            let hx = h(x)?;
            let from = (x - eta).max(lo);
            for b in 0..=INNER {
                let xp = from + (x - from) * b as f64 / INNER as f64;
                worst = worst.max(hx / h(xp)?);
            }
        }
    }
    Ok(worst - 1.0)
}
