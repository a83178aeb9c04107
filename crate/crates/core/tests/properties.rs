use proptest::prelude::*;

use synsync_core::analysis::{
    contraction_constants, fast_roots, find_fixed_point, phase_metric, phase_spread, syn_region_membership,
};
use synsync_core::ifsim::{IfNetwork, IfNeuron, IfOptions};
use synsync_core::network::{min_tree_indegree, CouplingGraph, Sigmoid};
use synsync_core::neuron::{Conductances, NeuronModel, TimeConstantProfile};

const STEP: Sigmoid = Sigmoid::Step { threshold: 0.01 };

fn cell(c: (f64, f64, f64), strip: f64) -> NeuronModel {
    NeuronModel::three_timescale(Conductances::new(c.0, c.1, c.2), strip)
}

fn family() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.3..0.75f64, 1.75..2.25f64, 2.75..3.25f64)
}

fn narrow() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.48..0.52f64, 1.98..2.02f64, 2.98..3.02f64)
}

/// Five nearly identical cells on a ring with two in-neighbours each.
fn ring5(cells: &[(f64, f64, f64)], gain: f64) -> IfNetwork {
    let models = cells
        .iter()
        .map(|&c| {
            let mut m = cell(c, 30.0);
            m.margin = 0.05;
            m
        })
        .collect();
    let graph = CouplingGraph::ring(5, 2, 1.0, vec![gain; 5], STEP).unwrap();
    IfNetwork::new(models, graph, IfOptions::default()).unwrap()
}

/// Jump point with phases `offsets` (neuron 0 pinned at its knee).
fn jump_point(net: &IfNetwork, offsets: &[f64]) -> Vec<f64> {
    let mut t = offsets.to_vec();
    t[0] = 0.0;
    net.from_phases(&t).unwrap()
}

/// Chain-reaction closure: keep adding any neuron sitting below its left
/// knee at the level set by already-firing in-neighbours, until nothing
/// changes.
fn closure_oracle(net: &IfNetwork, x: &[f64]) -> Vec<bool> {
    let n = net.len();
    let tau = net.phases(x).unwrap();
    let mut firing: Vec<bool> = tau.iter().map(|&t| t <= net.tie_tolerance()).collect();
    loop {
        let mut changed = false;
        for i in 0..n {
            if firing[i] {
                continue;
            }
            let w: f64 = (0..n).filter(|&j| firing[j]).map(|j| net.graph().weight(i, j)).sum();
            if w > 0.0 && x[i] < net.neuron(i).left_knee(net.graph().gain(i) * w).unwrap() {
                firing[i] = true;
                changed = true;
            }
        }
        if !changed {
            return firing;
        }
    }
}

/// Slow travel time for `ẋ = -x/τ` with `τ̲` near the knee and `τ̄` past the
/// breakpoint `x_b`.
fn log_phase(model: &NeuronModel, knee: f64, x: f64) -> f64 {
    let TimeConstantProfile::Piecewise { fast, slow, lower, .. } = model.time_constant else {
        unreachable!()
    };
    let xb = model.nullcline_root(0.0, lower).unwrap().max(knee);
    fast * (x.min(xb) / knee).ln() + slow * (x.max(xb) / xb).ln()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn phase_metric_is_a_pseudometric(
        a in prop::collection::vec(0.0..10.0f64, 4),
        b in prop::collection::vec(0.0..10.0f64, 4),
        c in prop::collection::vec(0.0..10.0f64, 4),
        shift in -5.0..5.0f64,
    ) {
        let ab = phase_spread(&a, &b);
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - phase_spread(&b, &a)).abs() < 1e-12);
        prop_assert!(ab <= phase_spread(&a, &c) + phase_spread(&c, &b) + 1e-12);
        let shifted: Vec<f64> = a.iter().map(|t| t + shift).collect();
        prop_assert!(phase_spread(&a, &shifted) < 1e-9);
    }

    #[test]
    fn tree_indegree_never_exceeds_the_indegree(
        n in 2usize..7,
        extra in prop::collection::vec((0usize..7, 0usize..7, 0.1..2.0f64), 0..12),
        ring_w in prop::collection::vec(0.1..2.0f64, 7),
    ) {
        let mut g = CouplingGraph::new(n, vec![0.1; n]).unwrap();
        for i in 0..n {
            g.add_edge(i, (i + 1) % n, ring_w[i], STEP).unwrap();
        }
        for &(s, t, w) in &extra {
            let (s, t) = (s % n, t % n);
            if s != t && g.weight(t, s) == 0.0 {
                g.add_edge(s, t, w, STEP).unwrap();
            }
        }
        for i in 0..n {
            let d = min_tree_indegree(&g, i, 10);
            let lightest = g.incoming(i).map(|e| e.weight).fold(f64::INFINITY, f64::min);
            prop_assert!(d.exact);
            prop_assert!(d.value <= g.in_degree(i) + 1e-12);
            prop_assert!(d.value >= lightest - 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn tabulated_phase_matches_the_log_formula(c in family(), strip in 0.5..30.0f64, u in 0.0..1.0f64) {
        let n = IfNeuron::new(cell(c, strip), 1e-9).unwrap();
        let (lo, hi) = n.slow_interval();
        let x = lo + u * (hi - lo);
        let want = log_phase(&n.model, lo, x);
        let got = n.phase(x).unwrap();
        prop_assert!((got - want).abs() <= 1e-8, "{got} vs {want}");
    }

    #[test]
    fn knees_move_right_with_the_level(c in family(), a in 0.0..0.36f64, b in 0.0..0.36f64) {
        let n = IfNeuron::new(cell(c, 30.0), 1e-9).unwrap();
        let (m1, m2) = (a.min(b), a.max(b));
        prop_assert!(n.left_knee(m1).unwrap() <= n.left_knee(m2).unwrap() + 1e-12);
        prop_assert!(n.right_knee(m1).unwrap() <= n.right_knee(m2).unwrap() + 1e-12);
    }

    #[test]
    fn scaling_time_constants_scales_periods_and_keeps_the_product(
        cells in prop::collection::vec(narrow(), 5),
        factor in 0.2..5.0f64,
    ) {
        let net = ring5(&cells, 0.025);
        let scaled_models = net
            .neurons()
            .iter()
            .map(|n| {
                let mut m = n.model.clone();
                m.time_constant = m.time_constant.scaled(factor);
                m
            })
            .collect();
        let scaled = IfNetwork::new(scaled_models, net.graph().clone(), IfOptions::default()).unwrap();
        for i in 0..5 {
            let (p, q) = (net.neuron(i).period().unwrap(), scaled.neuron(i).period().unwrap());
            prop_assert!((q - factor * p).abs() <= 1e-6 * q, "{q} vs {}", factor * p);
        }
        let a = contraction_constants(&net).unwrap().product;
        let b = contraction_constants(&scaled).unwrap().product;
        prop_assert!((a - b).abs() <= 1e-6 * a, "{a} vs {b}");
    }

    #[test]
    fn fast_roots_are_exactly_the_cells_no_slower_than_any_coupled_period(
        cells in prop::collection::vec(family(), 5),
        gain in 0.01..0.07f64,
    ) {
        let models = cells.iter().map(|&c| cell(c, 30.0)).collect();
        let graph = CouplingGraph::ring(5, 2, 1.0, vec![gain; 5], STEP).unwrap();
        let net = IfNetwork::new(models, graph, IfOptions::default()).unwrap();
        let shortest = (0..5)
            .map(|i| {
                let n = net.neuron(i);
                n.phase(n.right_knee(gain * net.graph().in_degree(i)).unwrap()).unwrap()
            })
            .fold(f64::INFINITY, f64::min);
        let want: Vec<usize> = (0..5).filter(|&i| net.neuron(i).period().unwrap() <= shortest).collect();
        prop_assert_eq!(fast_roots(&net).unwrap(), want);
    }

    #[test]
    fn membership_agrees_with_the_closure_oracle(
        cells in prop::collection::vec(narrow(), 5),
        offsets in prop::collection::vec(0.0..1.5f64, 5),
    ) {
        let net = ring5(&cells, 0.025);
        let x = jump_point(&net, &offsets);
        let m = syn_region_membership(&net, &x).unwrap();
        let oracle = closure_oracle(&net, &x);
        prop_assert_eq!(m.member, oracle.iter().all(|&f| f));
        prop_assert_eq!(m.witness, oracle.iter().position(|&f| !f));
    }

    #[test]
    fn moving_a_cell_toward_its_knee_keeps_membership(
        cells in prop::collection::vec(narrow(), 5),
        offsets in prop::collection::vec(0.0..1.5f64, 5),
        which in 1usize..5,
        keep in 0.0..1.0f64,
    ) {
        let net = ring5(&cells, 0.025);
        let mut t = offsets.clone();
        t[0] = 0.0;
        let x = net.from_phases(&t).unwrap();
        prop_assume!(syn_region_membership(&net, &x).unwrap().member);
        t[which] *= keep;
        let y = net.from_phases(&t).unwrap();
        prop_assert!(syn_region_membership(&net, &y).unwrap().member);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn return_map_contracts_inside_the_synchronous_region(
        cells in prop::collection::vec(narrow(), 5),
        a in prop::collection::vec(0.0..0.3f64, 5),
        b in prop::collection::vec(0.0..0.3f64, 5),
    ) {
        let net = ring5(&cells, 0.025);
        let product = contraction_constants(&net).unwrap().product;
        prop_assert!(product < 1.0);
        let (p, q) = (jump_point(&net, &a), jump_point(&net, &b));
        prop_assume!(syn_region_membership(&net, &p).unwrap().member);
        prop_assume!(syn_region_membership(&net, &q).unwrap().member);
        let d0 = phase_metric(&net, &p, &q).unwrap();
        prop_assume!(d0 > 1e-6);
        let d1 = phase_metric(&net, &net.cycle_map(&p).unwrap(), &net.cycle_map(&q).unwrap()).unwrap();
        prop_assert!(d1 <= product * d0 + 1e-9, "{d1} > {product} * {d0}");
    }

    #[test]
    fn fixed_point_does_not_depend_on_the_start(
        cells in prop::collection::vec(narrow(), 5),
        a in prop::collection::vec(0.0..0.3f64, 5),
        b in prop::collection::vec(0.0..0.3f64, 5),
    ) {
        let net = ring5(&cells, 0.025);
        let (p, q) = (jump_point(&net, &a), jump_point(&net, &b));
        prop_assume!(syn_region_membership(&net, &p).unwrap().member);
        prop_assume!(syn_region_membership(&net, &q).unwrap().member);
        let fp = find_fixed_point(&net, &p, 5000, 1e-11).unwrap();
        let fq = find_fixed_point(&net, &q, 5000, 1e-11).unwrap();
        let d = phase_metric(&net, &fp.point, &fq.point).unwrap();
        prop_assert!(d < 1e-8, "{d}");
    }
}
