//! Strongly connected components (iterative Tarjan).

use alloc::vec::Vec;

use super::CouplingGraph;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// SCC decomposition of a coupling graph.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Connectivity {
    pub strongly_connected: bool,
    /// Every SCC, members sorted, components sorted by smallest member.
    pub components: Vec<Vec<usize>>,
    /// SCCs that receive no edge from outside themselves.
    pub independent: Vec<Vec<usize>>,
}

pub fn strong_connectivity(graph: &CouplingGraph) -> Connectivity {
    let n = graph.len();
    let succ = graph.successors();
    const UNSET: usize = usize::MAX;
    let mut index = alloc::vec![UNSET; n];
    let mut low = alloc::vec![0usize; n];
    let mut on_stack = alloc::vec![false; n];
    let mut stack = Vec::new();
    let mut comp_of = alloc::vec![UNSET; n];
    let mut components: Vec<Vec<usize>> = Vec::new();
    let mut next = 0usize;

    for start in 0..n {
        if index[start] != UNSET {
            continue;
        }
        let mut call: Vec<(usize, usize)> = alloc::vec![(start, 0)];
        index[start] = next;
        low[start] = next;
        next += 1;
        stack.push(start);
        on_stack[start] = true;
        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if let Some(&w) = succ[v].get(*pos) {
                *pos += 1;
                if index[w] == UNSET {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                while let Some(w) = stack.pop() {
                    on_stack[w] = false;
                    comp_of[w] = components.len();
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                components.push(comp);
            }
        }
    }

    let mut has_external_input = alloc::vec![false; components.len()];
    for e in graph.edges() {
        if comp_of[e.source] != comp_of[e.target] {
            has_external_input[comp_of[e.target]] = true;
        }
    }
    let mut independent: Vec<Vec<usize>> = components
        .iter()
        .enumerate()
        .filter(|(c, _)| !has_external_input[*c])
        .map(|(_, m)| m.clone())
        .collect();
    components.sort_by_key(|c| c[0]);
    independent.sort_by_key(|c| c[0]);
    Connectivity {
        strongly_connected: components.len() == 1,
        components,
        independent,
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
    fn ring_is_one_component() {
        let g = CouplingGraph::ring(5, 1, 1.0, alloc::vec![1.0; 5], step()).unwrap();
        let c = strong_connectivity(&g);
        assert!(c.strongly_connected);
        assert_eq!(c.independent.len(), 1);
    }

    #[test]
    fn disjoint_rings_and_followers() {
        let mut g = CouplingGraph::new(7, alloc::vec![1.0; 7]).unwrap();
        for (a, b) in [(0, 1), (1, 2), (2, 0), (3, 4), (4, 3)] {
            g.add_edge(a, b, 1.0, step()).unwrap();
        }
        let c = strong_connectivity(&g);
        assert!(!c.strongly_connected);
        assert_eq!(c.independent, alloc::vec![alloc::vec![0, 1, 2], alloc::vec![3, 4], alloc::vec![5], alloc::vec![6]]);

        let mut g = CouplingGraph::new(5, alloc::vec![1.0; 5]).unwrap();
        for (a, b) in [(0, 1), (1, 2), (2, 0), (2, 3), (3, 4)] {
            g.add_edge(a, b, 1.0, step()).unwrap();
        }
        let c = strong_connectivity(&g);
        assert_eq!(c.independent, alloc::vec![alloc::vec![0, 1, 2]]);
        assert_eq!(c.components.len(), 3);
    }
}
