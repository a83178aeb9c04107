//! Directed synaptic coupling graph and graph-theoretic checks.

mod scc;
mod trees;
mod validate;

use alloc::format;
use alloc::vec::Vec;

use crate::numeric::{logistic, tanh};
use crate::{Error, Result};

pub use scc::{strong_connectivity, Connectivity};
pub use trees::{min_tree_indegree, TreeIndegree, DEFAULT_EXACT_LIMIT};
pub use validate::{validate_coupling, CouplingReport, SynapseCheck, WeakCouplingCheck};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Presynaptic activation `S(v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Sigmoid {
    /// 1 for `v >= threshold`, 0 below. Smoothed as
    /// `σ((v - threshold)/κ + 4)`, which is ≈ 0.98 at the threshold.
    Step { threshold: f64 },
    /// `σ((v - center)/width)`.
    Logistic { center: f64, width: f64 },
    /// `1/2 + 1/2 tanh((v - center)/width)`.
    Tanh { center: f64, width: f64 },
}

impl Sigmoid {
    /// Value with exact steps.
    pub fn value(&self, v: f64) -> f64 {
        match *self {
            Sigmoid::Step { threshold } => {
                if v >= threshold {
                    1.0
                } else {
                    0.0
                }
            }
            Sigmoid::Logistic { center, width } => logistic((v - center) / width),
            Sigmoid::Tanh { center, width } => 0.5 + 0.5 * tanh((v - center) / width),
        }
    }

    /// Value with steps replaced by a logistic of width `kappa` (exact for
    /// `kappa == 0`).
    pub fn smoothed(&self, v: f64, kappa: f64) -> f64 {
        match *self {
            Sigmoid::Step { threshold } if kappa > 0.0 => logistic((v - threshold) / kappa + 4.0),
            _ => self.value(v),
        }
    }
}

/// One synapse `source → target`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
    pub sigmoid: Sigmoid,
}

/// How a graph was generated.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Generator {
    /// Each neuron projects to its `k` successors modulo `n`.
    Ring { k: usize },
    AllToAll,
    Explicit,
}

/// Weighted directed graph with per-neuron gains `g_i`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct CouplingGraph {
    n: usize,
    edges: Vec<Edge>,
    gains: Vec<f64>,
    incoming: Vec<Vec<usize>>,
    generator: Generator,
}

impl CouplingGraph {
    /// Graph on `n` neurons without edges.
    pub fn new(n: usize, gains: Vec<f64>) -> Result<Self> {
        if gains.len() != n {
            return Err(Error::InvalidInput(format!(
                "{} gains for {n} neurons",
                gains.len()
            )));
        }
        if let Some(g) = gains.iter().find(|g| !(**g >= 0.0 && g.is_finite())) {
            return Err(Error::InvalidInput(format!("gain {g} is not a non-negative number")));
        }
        Ok(Self {
            n,
            edges: Vec::new(),
            gains,
            incoming: alloc::vec![Vec::new(); n],
            generator: Generator::Explicit,
        })
    }

    pub fn add_edge(&mut self, source: usize, target: usize, weight: f64, sigmoid: Sigmoid) -> Result<()> {
        if source >= self.n || target >= self.n {
            return Err(Error::InvalidInput(format!(
                "edge {source} -> {target} out of range for {} neurons",
                self.n
            )));
        }
        if source == target {
            return Err(Error::InvalidInput(format!("self-loop at neuron {source}")));
        }
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "edge {source} -> {target} has non-positive weight {weight}"
            )));
        }
        if self.incoming[target].iter().any(|&e| self.edges[e].source == source) {
            return Err(Error::InvalidInput(format!("duplicate edge {source} -> {target}")));
        }
        self.incoming[target].push(self.edges.len());
        self.edges.push(Edge {
            source,
            target,
            weight,
            sigmoid,
        });
        Ok(())
    }

    /// Directed ring: neuron `j` projects to `j+1, …, j+k (mod n)`.
    pub fn ring(n: usize, k: usize, weight: f64, gains: Vec<f64>, sigmoid: Sigmoid) -> Result<Self> {
        if n > 1 && (k == 0 || k >= n) {
            return Err(Error::InvalidInput(format!("ring on {n} neurons cannot have {k} neighbors")));
        }
        let mut g = Self::new(n, gains)?;
        if n > 1 {
            for j in 0..n {
                for s in 1..=k {
                    g.add_edge(j, (j + s) % n, weight, sigmoid)?;
                }
            }
        }
        g.generator = Generator::Ring { k };
        Ok(g)
    }

    pub fn all_to_all(n: usize, weight: f64, gains: Vec<f64>, sigmoid: Sigmoid) -> Result<Self> {
        let mut g = Self::new(n, gains)?;
        for j in 0..n {
            for i in 0..n {
                if i != j {
                    g.add_edge(j, i, weight, sigmoid)?;
                }
            }
        }
        g.generator = Generator::AllToAll;
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn gain(&self, i: usize) -> f64 {
        self.gains[i]
    }

    pub fn generator(&self) -> Generator {
        self.generator
    }

    /// Copy with every gain multiplied by `factor`.
    pub fn with_scaled_gains(&self, factor: f64) -> Self {
        let mut g = self.clone();
        for x in &mut g.gains {
            *x *= factor;
        }
        g
    }

    /// Incoming synapses of neuron `i`.
    pub fn incoming(&self, i: usize) -> impl Iterator<Item = &Edge> + '_ {
        self.incoming[i].iter().map(move |&e| &self.edges[e])
    }

    /// `α_ij`, or 0 without an edge `j → i`.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.incoming(i)
            .find(|e| e.source == j)
            .map_or(0.0, |e| e.weight)
    }

    /// `d_i = Σ_j α_ij`.
    pub fn in_degree(&self, i: usize) -> f64 {
        self.incoming(i).map(|e| e.weight).sum()
    }

    /// Out-neighbors of every neuron.
    pub fn successors(&self) -> Vec<Vec<usize>> {
        let mut out = alloc::vec![Vec::new(); self.n];
        for e in &self.edges {
            out[e.source].push(e.target);
        }
        out
    }

    /// `G_i = g_i Σ_j α_ij S_ij(v_j)`; steps are exact when `kappa == 0`.
    pub fn synaptic_drive(&self, i: usize, v: &[f64], kappa: f64) -> f64 {
        self.gains[i]
            * self
                .incoming(i)
                .map(|e| e.weight * e.sigmoid.smoothed(v[e.source], kappa))
                .sum::<f64>()
    }
}
