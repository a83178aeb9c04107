//! Existence of a positively invariant synchronous region.

use alloc::vec::Vec;

use crate::ifsim::IfNetwork;
use crate::neuron::{knee_sensitivity, slow_flow};
use crate::numeric::abs;
use crate::{Error, Result};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Layered recruitment from one root.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ExistenceVerdict {
    pub root: usize,
    /// `τ_j(x̄_j(0)) ≤ min_i τ_i(x̄_i(g_i d_i))`.
    pub in_fast_set: bool,
    pub layers: Vec<Vec<usize>>,
    pub reached_all: bool,
    /// `d̄_i^T(j)` for every recruited neuron, zero elsewhere.
    pub recruiting_weight: Vec<f64>,
    /// `x̲_i(g_i d̄_i^T(j))`; the root and unreached neurons keep `x̲_i(0)`.
    pub recruiting_knee: Vec<f64>,
    /// Smallest slack `τ_i(x̲_i(g_i d̄_i)) - (τ_i(x̄_i(g_i d_i)) - τ_j(x̄_j(0)))`
    /// over recruited neurons.
    pub slack: f64,
}

/// Small-coupling version of the layered test, comparing knee velocities.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct WeakLimitVerdict {
    /// Decoupled periods agree to within `1e-9` relative.
    pub equal_periods: bool,
    pub period_spread: f64,
    pub layers: Vec<Vec<usize>>,
    pub holds: bool,
}

/// `N^fast`: roots whose decoupled period does not exceed any coupled
/// period.
pub fn fast_roots(net: &IfNetwork) -> Result<Vec<usize>> {
    let coupled = coupled_periods(net)?;
    let shortest = coupled.iter().copied().fold(f64::INFINITY, f64::min);
    let mut out = Vec::new();
    for j in 0..net.len() {
        if net.neuron(j).period()? <= shortest {
            out.push(j);
        }
    }
    Ok(out)
}

/// `τ_i(x̄_i(g_i d_i))`.
pub(crate) fn coupled_periods(net: &IfNetwork) -> Result<Vec<f64>> {
    let g = net.graph();
    (0..net.len())
        .map(|i| {
            let n = net.neuron(i);
            n.phase(n.right_knee(g.gain(i) * g.in_degree(i))?)
        })
        .collect()
}

pub fn existence_condition(net: &IfNetwork, root: usize) -> Result<ExistenceVerdict> {
    let n = net.len();
    if root >= n {
        return Err(Error::InvalidInput(alloc::format!(
            "root {root} out of range for {n} neurons"
        )));
    }
    let g = net.graph();
    let coupled = coupled_periods(net)?;
    let own = net.neuron(root).period()?;
    let in_fast_set = coupled.iter().all(|&p| own <= p);
    let mut member = alloc::vec![false; n];
    member[root] = true;
    let mut layers = alloc::vec![alloc::vec![root]];
    let mut recruiting_weight = alloc::vec![0.0; n];
    let mut recruiting_knee: Vec<f64> = net.neurons().iter().map(|m| m.base.left_knee.x).collect();
    let mut slack = f64::INFINITY;
    loop {
        let mut next = Vec::new();
        for i in 0..n {
            if member[i] {
                continue;
            }
            let dbar: f64 = g.incoming(i).filter(|e| member[e.source]).map(|e| e.weight).sum();
            let ni = net.neuron(i);
            let knee = ni.left_knee(g.gain(i) * dbar)?;
            let s = ni.phase(knee)? - (coupled[i] - own);
            if s > 0.0 {
                next.push((i, dbar, knee, s));
            }
        }
        if next.is_empty() {
            break;
        }
        let mut layer = Vec::with_capacity(next.len());
        for (i, dbar, knee, s) in next {
            member[i] = true;
            recruiting_weight[i] = dbar;
            recruiting_knee[i] = knee;
            slack = slack.min(s);
            layer.push(i);
        }
        layers.push(layer);
    }
    Ok(ExistenceVerdict {
        root,
        in_fast_set,
        layers,
        reached_all: member.iter().all(|&m| m),
        recruiting_weight,
        recruiting_knee,
        slack,
    })
}

/// Layered test with `τ'(x̄(0)) x̄'(0) d_i < τ'(x̲(0)) x̲'(0) d̄_i^T`, where
/// `τ' = 1/|h|`. The gain multiplies both sides and drops out.
pub fn weak_limit(net: &IfNetwork, root: usize) -> Result<WeakLimitVerdict> {
    let n = net.len();
    let g = net.graph();
    let mut periods = Vec::with_capacity(n);
    let mut lhs = Vec::with_capacity(n);
    let mut rate = Vec::with_capacity(n);
    for ni in net.neurons() {
        periods.push(ni.period()?);
        let (dl, dr) = knee_sensitivity(&ni.model, &ni.base)?;
        let hl = abs(slow_flow(&ni.model, &ni.base, ni.base.left_knee.x)?);
        let hr = abs(slow_flow(&ni.model, &ni.base, ni.base.right_knee.x)?);
        lhs.push(dr / hr);
        rate.push(dl / hl);
    }
    let lo = periods.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = periods.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let period_spread = hi - lo;
    let mut member = alloc::vec![false; n];
    member[root] = true;
    let mut layers = alloc::vec![alloc::vec![root]];
    loop {
        let next: Vec<usize> = (0..n)
            .filter(|&i| !member[i])
            .filter(|&i| {
                let dbar: f64 = g.incoming(i).filter(|e| member[e.source]).map(|e| e.weight).sum();
                lhs[i] * g.in_degree(i) < rate[i] * dbar
            })
            .collect();
        if next.is_empty() {
            break;
        }
        for &i in &next {
            member[i] = true;
        }
        layers.push(next);
    }
    let equal_periods = period_spread <= 1e-9 * hi;
    Ok(WeakLimitVerdict {
        equal_periods,
        period_spread,
        holds: equal_periods && member.iter().all(|&m| m),
        layers,
    })
}
