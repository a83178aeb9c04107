//! Weak-coupling (`g_i d_i ≤ M_i`) and localized-synapse checks.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{CouplingGraph, Sigmoid};
use crate::neuron::{compute_geometry, NeuronModel};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Level grid used to find the highest left knee.
const LEVELS: usize = 50;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct WeakCouplingCheck {
    pub neuron: usize,
    /// `g_i d_i`.
    pub level: f64,
    pub margin: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SynapseCheck {
    pub source: usize,
    pub target: usize,
    /// `[max_m v̲_j(m), E_j^th]`: the sigmoid must vanish at or below the
    /// first and equal one from the second on.
    pub window: (f64, f64),
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct CouplingReport {
    pub weak_coupling: Vec<WeakCouplingCheck>,
    pub synapses: Vec<SynapseCheck>,
}

impl CouplingReport {
    pub fn weak_coupling_holds(&self) -> bool {
        self.weak_coupling.iter().all(|c| c.passed)
    }

    pub fn synapses_localized(&self) -> bool {
        self.synapses.iter().all(|c| c.passed)
    }

    pub fn passed(&self) -> bool {
        self.weak_coupling_holds() && self.synapses_localized()
    }
}

/// Highest left-knee voltage over levels in `[0, M]`, or NaN when the
/// geometry is unavailable.
pub(crate) fn synaptic_cutoff(model: &NeuronModel) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for k in 0..=LEVELS {
        let m = model.margin * k as f64 / LEVELS as f64;
        match compute_geometry(model, m) {
            Ok(g) => best = best.max(g.left_knee.v),
            Err(_) => return f64::NAN,
        }
    }
    best
}

fn sigmoid_in_window(s: &Sigmoid, cutoff: f64, threshold: f64, v_lo: f64, v_hi: f64) -> Result<(), String> {
    let n = 400;
    for k in 0..=n {
        let v = threshold + (v_hi - threshold) * k as f64 / n as f64;
        let y = s.value(v);
        if y != 1.0 {
            return Err(format!("S({v}) = {y} above threshold"));
        }
        let v = v_lo + (cutoff - v_lo) * k as f64 / n as f64;
        let y = s.value(v);
        if y != 0.0 {
            return Err(format!("S({v}) = {y} at or below the cutoff"));
        }
    }
    Ok(())
}

/// Check every neuron's total coupling against its margin and every
/// synapse's activation against its presynaptic window.
pub fn validate_coupling(graph: &CouplingGraph, models: &[NeuronModel]) -> CouplingReport {
    let weak_coupling = (0..graph.len())
        .map(|i| {
            let level = graph.gain(i) * graph.in_degree(i);
            let margin = models.get(i).map_or(f64::NAN, |m| m.margin);
            WeakCouplingCheck {
                neuron: i,
                level,
                margin,
                passed: level <= margin * (1.0 + 1e-12),
            }
        })
        .collect();
    let cutoffs: Vec<f64> = models.iter().map(synaptic_cutoff).collect();
    let synapses = graph
        .edges()
        .iter()
        .map(|e| {
            let Some(pre) = models.get(e.source) else {
                return SynapseCheck {
                    source: e.source,
                    target: e.target,
                    window: (f64::NAN, f64::NAN),
                    passed: false,
                    detail: "no model for presynaptic neuron".into(),
                };
            };
            let window = (cutoffs[e.source], pre.threshold);
            let verdict = if !window.0.is_finite() {
                Err("presynaptic nullcline geometry unavailable".into())
            } else {
                sigmoid_in_window(&e.sigmoid, window.0, window.1, pre.domain.v_lo, pre.domain.v_hi)
            };
            SynapseCheck {
                source: e.source,
                target: e.target,
                window,
                passed: verdict.is_ok(),
                detail: verdict.err().unwrap_or_default(),
            }
        })
        .collect();
    CouplingReport {
        weak_coupling,
        synapses,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuron::Conductances;

    fn models(n: usize) -> Vec<NeuronModel> {
        (0..n)
            .map(|_| NeuronModel::three_timescale(Conductances::new(0.5, 2.0, 3.0), 30.0))
            .collect()
    }

    #[test]
    fn standard_network_passes_and_doubled_gain_fails() {
        let step = Sigmoid::Step { threshold: 0.01 };
        let g = CouplingGraph::ring(40, 36, 1.0, alloc::vec![0.01; 40], step).unwrap();
        let ms = models(40);
        let rep = validate_coupling(&g, &ms);
        assert!(rep.passed());
        let rep = validate_coupling(&g.with_scaled_gains(2.0), &ms);
        assert!(!rep.weak_coupling_holds());
        assert!((rep.weak_coupling[0].level - 0.72).abs() < 1e-12);
    }

    #[test]
    fn leaky_sigmoid_fails_with_edge_witness() {
        let mut g = CouplingGraph::new(2, alloc::vec![0.1; 2]).unwrap();
        g.add_edge(0, 1, 1.0, Sigmoid::Step { threshold: 0.01 }).unwrap();
        g.add_edge(1, 0, 1.0, Sigmoid::Logistic { center: 0.0, width: 0.05 }).unwrap();
        let rep = validate_coupling(&g, &models(2));
        assert!(rep.synapses[0].passed);
        assert!(!rep.synapses[1].passed);
        assert_eq!((rep.synapses[1].source, rep.synapses[1].target), (1, 0));
    }
}
