//! Smallest in-degree a neuron can see from earlier layers of a chain
//! reaction: `d̲_i = min_{j ≠ i} min_{T rooted at j} d̄_i^T`.
//!
//! A layering is a sequence `L_0 = {j}, L_1, …` covering every neuron in
//! which each member of `L_l` has an in-neighbor in `L_{l-1}`; `d̄_i^T` sums
//! the weights of `i`'s in-neighbors in layers before `i`'s own.

use alloc::collections::BTreeMap;

use super::CouplingGraph;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Default largest network solved exactly.
pub const DEFAULT_EXACT_LIMIT: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct TreeIndegree {
    pub value: f64,
    /// `false` when `value` is the lower bound `min_k α_ik`.
    pub exact: bool,
}

pub fn min_tree_indegree(graph: &CouplingGraph, i: usize, exact_limit: usize) -> TreeIndegree {
    let n = graph.len();
    let d_i = graph.in_degree(i);
    let lightest = graph
        .incoming(i)
        .map(|e| e.weight)
        .fold(f64::INFINITY, f64::min);
    if n <= 1 || !lightest.is_finite() {
        return TreeIndegree {
            value: d_i,
            exact: true,
        };
    }
    if n > exact_limit || n > 63 {
        return TreeIndegree {
            value: lightest,
            exact: false,
        };
    }
    let mut search = Search {
        graph,
        i,
        full: (1u64 << n) - 1,
        out: graph
            .successors()
            .iter()
            .map(|s| s.iter().fold(0u64, |m, &t| m | (1 << t)))
            .collect(),
        into_i: graph.incoming(i).fold(0u64, |m, e| m | (1 << e.source)),
        best: d_i,
        floor: lightest,
        seen: BTreeMap::new(),
    };
    for root in 0..n {
        if root == i || search.best <= search.floor {
            continue;
        }
        let bit = 1u64 << root;
        search.extend(bit, bit);
    }
    TreeIndegree {
        value: search.best,
        exact: true,
    }
}

struct Search<'a> {
    graph: &'a CouplingGraph,
    i: usize,
    full: u64,
    out: alloc::vec::Vec<u64>,
    into_i: u64,
    best: f64,
    floor: f64,
    seen: BTreeMap<(u64, u64), ()>,
}

impl Search<'_> {
    fn cost(&self, placed: u64) -> f64 {
        self.graph
            .incoming(self.i)
            .filter(|e| placed & (1 << e.source) != 0)
            .map(|e| e.weight)
            .sum()
    }

    fn reach(&self, layer: u64) -> u64 {
        self.out
            .iter()
            .enumerate()
            .filter(|(k, _)| layer & (1 << k) != 0)
            .fold(0u64, |m, (_, &o)| m | o)
    }

    /// Whether a layering can continue from `layer` to cover `rest`.
    fn completable(&self, mut layer: u64, mut rest: u64) -> bool {
        while rest != 0 {
            let next = self.reach(layer) & rest;
            if next == 0 {
                return false;
            }
            rest &= !next;
            layer = next;
        }
        true
    }

    fn extend(&mut self, placed: u64, last: u64) {
        if self.best <= self.floor || self.seen.insert((placed, last), ()).is_some() {
            return;
        }
        let cost = self.cost(placed);
        if cost >= self.best {
            return;
        }
        let ibit = 1u64 << self.i;
        let frontier = self.reach(last) & !placed;
        if last & self.into_i != 0 && frontier & ibit != 0 {
            let layer = frontier;
            let rest = self.full & !placed & !layer;
            if self.completable(layer, rest) {
                self.best = cost;
                if self.best <= self.floor {
                    return;
                }
            }
        }
        let candidates = frontier & !ibit;
        let mut sub = candidates;
        while sub != 0 {
            self.extend(placed | sub, sub);
            if self.best <= self.floor {
                return;
            }
            sub = (sub - 1) & candidates;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Sigmoid;

    fn step() -> Sigmoid {
        Sigmoid::Step { threshold: 0.0 }
    }

    #[test]
    fn ring_and_complete_graph() {
        let g = CouplingGraph::ring(6, 1, 1.0, alloc::vec![1.0; 6], step()).unwrap();
        for i in 0..6 {
            assert_eq!(min_tree_indegree(&g, i, 10), TreeIndegree { value: 1.0, exact: true });
        }
        let g = CouplingGraph::all_to_all(3, 1.0, alloc::vec![1.0; 3], step()).unwrap();
        assert_eq!(min_tree_indegree(&g, 0, 10).value, 1.0);
    }

    #[test]
    fn single_heavy_in_edge() {
        let mut g = CouplingGraph::new(3, alloc::vec![1.0; 3]).unwrap();
        g.add_edge(0, 1, 2.0, step()).unwrap();
        g.add_edge(1, 2, 1.0, step()).unwrap();
        g.add_edge(2, 0, 1.0, step()).unwrap();
        assert_eq!(min_tree_indegree(&g, 1, 10).value, 2.0);
    }

    #[test]
    fn two_neighbor_ring_needs_both_in_some_cases() {
        // In a ring where i receives from i-1 and i-2, rooting at i-1 lets i
        // fire in layer 1 with only one earlier in-neighbor.
        let g = CouplingGraph::ring(5, 2, 1.0, alloc::vec![1.0; 5], step()).unwrap();
        assert_eq!(min_tree_indegree(&g, 0, 10).value, 1.0);
        let big = CouplingGraph::ring(12, 2, 0.5, alloc::vec![1.0; 12], step()).unwrap();
        assert_eq!(min_tree_indegree(&big, 0, 10), TreeIndegree { value: 0.5, exact: false });
    }
}
