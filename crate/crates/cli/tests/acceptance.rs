//! Acceptance suite: one PASS/FAIL line per criterion on stdout.

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use synapse_sync::config::{ExperimentConfig, Mode};
use synapse_sync::population::{seeded_population, Stream};
use synapse_sync::presets::{fig1, fig4};
use synapse_sync::run;
use synsync_core::analysis::{
    contraction_constants, existence_condition, fast_roots, find_fixed_point, phase_metric, syn_region_membership,
};
use synsync_core::ifsim::{IfNetwork, IfOptions};
use synsync_core::network::{CouplingGraph, Sigmoid};
use synsync_core::neuron::{
    check_family, compute_geometry, Branch, Conductances, NeuronModel, ParameterRanges, TravelDirection,
    TravelTimeTable, DEFAULT_TOLERANCE,
};
use synsync_core::odesim::{simulate, OdeOptions};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn criterion(n: usize, name: &str, limit: Option<f64>, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(f));
    let secs = start.elapsed().as_secs_f64();
    let (pass, detail) = match result {
        Ok(o) => {
            let in_time = limit.map_or(true, |l| secs < l);
            let mut detail = o.detail;
            if !in_time {
                detail.push_str(&format!("; over the {:.0} s budget", limit.unwrap()));
            }
            (o.pass && in_time, detail)
        }
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("panicked: {msg}"))
        }
    };
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    writeln!(out, "criterion {n:>2} {verdict} [{name}] {detail} ({secs:.2} s)").unwrap();
    pass
}

fn step() -> Sigmoid {
    Sigmoid::Step { threshold: 0.01 }
}

/// Five cells from a narrow box with margin 0.05, each driven by its two
/// predecessors with `g = factor · M / 2`.
fn five_cell_network(factor: f64) -> IfNetwork {
    let ranges = ParameterRanges {
        leak: (0.48, 0.52),
        calcium: (1.98, 2.02),
        potassium: (2.98, 3.02),
    };
    let models: Vec<NeuronModel> = seeded_population(&ranges, 5, 5)
        .into_iter()
        .map(|c| {
            let mut m = NeuronModel::three_timescale(c, 30.0);
            m.margin = 0.05;
            m
        })
        .collect();
    let graph = CouplingGraph::ring(5, 2, 1.0, vec![factor * 0.025; 5], step()).unwrap();
    IfNetwork::new(models, graph, IfOptions::default()).unwrap()
}

/// Jump point with phases uniform in `[0, spread]` and one root at phase 0,
/// redrawn until its chain reaction recruits everyone.
fn sample_syn_point(net: &IfNetwork, stream: &mut Stream, spread: f64) -> Vec<f64> {
    let n = net.len();
    for _ in 0..100_000 {
        let root = (stream.uniform() * n as f64) as usize % n;
        let phases: Vec<f64> = (0..n)
            .map(|i| if i == root { 0.0 } else { spread * stream.uniform() })
            .collect();
        let p = net.from_phases(&phases).unwrap();
        if syn_region_membership(net, &p).unwrap().member {
            return p;
        }
    }
    panic!("no synchronous-region point with phase spread {spread}");
}

fn c1_family_constants() -> Outcome {
    let template = NeuronModel::three_timescale(Conductances::new(0.5, 2.0, 3.0), 30.0);
    let rep = check_family(&template, &ParameterRanges::default(), 200);
    let pass = (rep.kernel_at_threshold - 1.4260).abs() < 1e-3
        && (rep.kernel_at_gate - 1.4833).abs() < 1e-3
        && (rep.margin_bound - 1.1003).abs() < 1e-3
        && rep.accepted
        && rep.margin == 0.36;
    outcome(
        pass,
        format!(
            "kernels {:.4}, {:.4}; bound {:.4}; M = {} accepted = {}",
            rep.kernel_at_threshold, rep.kernel_at_gate, rep.margin_bound, rep.margin, rep.accepted
        ),
    )
}

fn c2_knee_monotonicity() -> Outcome {
    let mut violations = 0;
    for c in seeded_population(&ParameterRanges::default(), 2, 5) {
        let model = NeuronModel::three_timescale(c, 30.0);
        let mut prev: Option<(f64, f64)> = None;
        for k in 0..50 {
            let m = 0.36 * k as f64 / 49.0;
            let g = compute_geometry(&model, m).unwrap();
            let cur = (g.left_knee.x, g.right_knee.x);
            if let Some(p) = prev {
                if cur.0 < p.0 || cur.1 < p.1 {
                    violations += 1;
                }
            }
            prev = Some(cur);
        }
    }
    outcome(violations == 0, format!("{violations} violations over 5 cells x 50 levels"))
}

/// One RK4 step of `x' = -x/τ`.
fn rk4_linear(x: f64, h: f64, tau: f64) -> f64 {
    let z = h / tau;
    x * (1.0 - z + z * z / 2.0 - z * z * z / 6.0 + z * z * z * z / 24.0)
}

/// Fixed-step RK4 for the lower-branch drift `x' = -x/τ(x)` (τ̲ on the
/// strip `x <= xb`, τ̄ beyond), with the breakpoint crossing located by
/// bisection.
fn dense_drift(x0: f64, duration: f64, xb: f64, strip_tau: f64, slow_tau: f64, h: f64) -> f64 {
    let (mut t, mut x) = (0.0, x0);
    while t < duration {
        let dt = h.min(duration - t);
        let tau = if x > xb { slow_tau } else { strip_tau };
        let y = rk4_linear(x, dt, tau);
        if x > xb && y < xb {
            let (mut lo, mut hi) = (0.0, dt);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if rk4_linear(x, mid, tau) > xb {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            t += hi;
            x = xb;
            continue;
        }
        x = y;
        t += dt;
    }
    x
}

fn c3_slow_flow_oracle() -> Outcome {
    let models: Vec<NeuronModel> = seeded_population(&ParameterRanges::default(), 3, 5)
        .into_iter()
        .map(|c| NeuronModel::three_timescale(c, 30.0))
        .collect();
    let graph = CouplingGraph::ring(5, 2, 1.0, vec![0.1; 5], step()).unwrap();
    let net = IfNetwork::new(models, graph, IfOptions::default()).unwrap();
    let mut stream = Stream::new(33);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let x: Vec<f64> = net.neurons().iter().map(|n| stream.in_range(n.slow_interval())).collect();
        let (end, dt) = net.advance_to_jump(&x).unwrap();
        for (i, n) in net.neurons().iter().enumerate() {
            let xb = n.model.nullcline_root(0.0, -0.258).unwrap();
            let h = 1e-6 * n.period().unwrap();
            let oracle = dense_drift(x[i], dt, xb, 30.0, 5.0, h);
            worst = worst.max((oracle - end[i]).abs());
        }
    }
    outcome(worst < 1e-8, format!("worst coordinate error {worst:.3e} over 20 states"))
}

fn c4_travel_time_tables() -> Outcome {
    let models: Vec<NeuronModel> = seeded_population(&ParameterRanges::default(), 4, 5)
        .into_iter()
        .map(|c| NeuronModel::three_timescale(c, 30.0))
        .collect();
    let graph = CouplingGraph::ring(5, 2, 1.0, vec![0.1; 5], step()).unwrap();
    let net = IfNetwork::new(models, graph, IfOptions::default()).unwrap();
    let mut stream = Stream::new(44);
    let mut worst = 0.0f64;
    for q in 0..100 {
        let n = net.neuron(q % 5);
        if q % 2 == 0 {
            let (lo, hi) = n.slow_interval();
            let x = stream.in_range((lo, hi));
            let xb = n.model.nullcline_root(0.0, -0.258).unwrap();
            let knee = n.base.left_knee.x;
            let exact = 30.0 * (x.min(xb) / knee).ln() + 5.0 * (x.max(xb) / xb).ln();
            worst = worst.max((n.slow_table().time(x).unwrap() - exact).abs());
        } else {
            let m = stream.in_range((0.0, n.model.margin));
            let top = n.right_knee(m).unwrap();
            let table =
                TravelTimeTable::build(n.fast_flow(m).unwrap(), TravelDirection::Fast { level: m }, DEFAULT_TOLERANCE)
                    .unwrap();
            let x = stream.in_range((n.base.left_knee.x, top));
            let exact = ((1.0 - x) / (1.0 - top)).ln();
            worst = worst.max((table.time(x).unwrap() - exact).abs());
        }
    }
    outcome(worst < 1e-8, format!("worst absolute error {worst:.3e} over 100 queries"))
}

fn c5_return_map_contraction() -> Outcome {
    let net = five_cell_network(1.0);
    let c = contraction_constants(&net).unwrap();
    let mut stream = Stream::new(55);
    let mut violations = 0;
    let mut worst_ratio = 0.0f64;
    for _ in 0..100 {
        let p = sample_syn_point(&net, &mut stream, 2.0);
        let q = sample_syn_point(&net, &mut stream, 2.0);
        let d0 = phase_metric(&net, &p, &q).unwrap();
        let d1 = phase_metric(&net, &net.cycle_map(&p).unwrap(), &net.cycle_map(&q).unwrap()).unwrap();
        if d1 > c.product * d0 + 1e-9 {
            violations += 1;
        }
        if d0 > 1e-9 {
            worst_ratio = worst_ratio.max(d1 / d0);
        }
    }
    outcome(
        violations == 0,
        format!(
            "{violations} violations in 100 pairs; worst ratio {worst_ratio:.4} vs bound {:.4}",
            c.product
        ),
    )
}

fn fixed_point_runs(net: &IfNetwork, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>, Vec<usize>) {
    let mut stream = Stream::new(seed);
    let (mut points, mut ratios, mut iters) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..20 {
        let p0 = sample_syn_point(net, &mut stream, 2.0);
        let fp = find_fixed_point(net, &p0, 2000, 1e-12).unwrap();
        points.push(fp.point);
        ratios.push(fp.measured_ratio);
        iters.push(fp.iterations);
    }
    (points, ratios, iters)
}

fn c6_fixed_point() -> Outcome {
    let net = five_cell_network(1.0);
    let c = contraction_constants(&net).unwrap();
    let (points, ratios, _) = fixed_point_runs(&net, 66);
    let mut spread = 0.0f64;
    for a in &points {
        for b in &points {
            spread = spread.max(phase_metric(&net, a, b).unwrap());
        }
    }
    let worst = ratios.iter().copied().fold(0.0, f64::max);
    outcome(
        spread < 1e-6 && worst <= c.product + 1e-6,
        format!("pairwise d {spread:.2e}; tail ratio {worst:.5} vs product {:.5}", c.product),
    )
}

fn c7_two_cell_comparison() -> Outcome {
    let fig = fig1(&ExperimentConfig::default()).unwrap();
    let [identical, hetero, diffusive] = &fig.runs[..] else {
        panic!("expected three runs");
    };
    let id = identical.dispersion.as_ref().map(|s| s.dispersions()).unwrap_or_default();
    let a = id.iter().take(3).any(|&d| d < 0.01);
    let het = hetero.dispersion.as_ref().map(|s| s.dispersions()).unwrap_or_default();
    let b = het.len() >= 5 && (0..5).any(|k| het[k..].iter().all(|&d| d < 0.05));
    let ratio = diffusive.orbit_deviation / hetero.orbit_deviation;
    let c = ratio >= 2.0;
    outcome(
        a && b && c,
        format!(
            "(a) {} first dispersions {:?}; (b) {} settled max {:.4}; (c) {} deviation {:.3} vs {:.3}, ratio {:.2}",
            if a { "ok" } else { "no" },
            id.iter().take(3).map(|d| format!("{d:.2e}")).collect::<Vec<_>>(),
            if b { "ok" } else { "no" },
            het.iter().skip(4).copied().fold(0.0, f64::max),
            if c { "ok" } else { "no" },
            diffusive.orbit_deviation,
            hetero.orbit_deviation,
            ratio
        ),
    )
}

fn ring_config() -> ExperimentConfig {
    ExperimentConfig {
        seed: 1,
        strip_taus: Some(vec![0.5, 30.0]),
        ..ExperimentConfig::default()
    }
}

fn c8_ring_contrast() -> Outcome {
    let fig = fig4(&ring_config()).unwrap();
    let series = |tau: f64| {
        fig.runs
            .iter()
            .find(|r| r.strip_tau == tau)
            .and_then(|r| r.dispersion.as_ref())
            .map(|s| s.dispersions())
            .unwrap_or_default()
    };
    let slow = series(30.0);
    let fast = series(0.5);
    let synced = slow.len() >= 3 && (0..3).any(|k| slow[k..].iter().all(|&d| d < 0.02));
    let spread = fast.len() >= 10 && fast[..10].iter().all(|&d| d > 0.02);
    let fmt = |v: &[f64]| v.iter().take(10).map(|d| format!("{d:.3}")).collect::<Vec<_>>().join(" ");
    outcome(
        synced && spread,
        format!("strip 30: {}; strip 0.5: {}", fmt(&slow), fmt(&fast)),
    )
}

fn c9_eps_sweep() -> Outcome {
    let cell = |a, b, c| NeuronModel::three_timescale(Conductances::new(a, b, c), 30.0);
    let models = vec![cell(0.4, 2.0, 3.0), cell(0.5, 2.1, 2.9), cell(0.6, 1.9, 3.1)];
    let graph = CouplingGraph::ring(3, 2, 1.0, vec![0.1; 3], step()).unwrap();
    let net = IfNetwork::new(models.clone(), graph.clone(), IfOptions::default()).unwrap();
    let x0 = [0.40, 0.50, 0.60];
    let run = net.simulate(&x0, 12, 0.0).unwrap();
    let if_times: Vec<Vec<f64>> = (0..3)
        .map(|i| run.raster.iter().filter(|e| e.neuron == i).map(|e| e.time).collect())
        .collect();
    let init: Vec<(f64, f64)> = models
        .iter()
        .zip(x0)
        .map(|(m, x)| {
            let g = compute_geometry(m, 0.0).unwrap();
            (x, g.branch_voltage(m, Branch::Lower, x).unwrap())
        })
        .collect();
    let mut gaps = Vec::new();
    for eps in [4e-3, 1e-3, 2.5e-4] {
        let mut o = OdeOptions::new(eps, 25.0);
        o.kappa = 1e-3 * (eps / 1e-3f64).sqrt();
        o.stride = 1000;
        let traj = simulate(&models, &graph, &init, &o).unwrap();
        let mut worst = 0.0f64;
        for (i, t_if) in if_times.iter().enumerate() {
            for (a, b) in traj.spike_times(i).iter().zip(t_if) {
                worst = worst.max((a - b).abs());
            }
        }
        gaps.push(worst);
    }
    outcome(
        gaps[0] > gaps[1] && gaps[1] > gaps[2],
        format!("worst spike-time gaps {:.3} > {:.3} > {:.3}", gaps[0], gaps[1], gaps[2]),
    )
}

fn entry_cycles(net: &IfNetwork, p: &[f64]) -> usize {
    let mut x = p.to_vec();
    for k in 0..5000 {
        if syn_region_membership(net, &x).unwrap().member {
            return k;
        }
        x = net.cycle_map(&x).unwrap();
    }
    5000
}

fn c10_rate_vs_gain() -> Outcome {
    let full = five_cell_network(1.0);
    let half = five_cell_network(0.5);
    for net in [&full, &half] {
        for j in fast_roots(net).unwrap() {
            assert!(existence_condition(net, j).unwrap().reached_all, "existence fails for root {j}");
        }
    }
    let (_, r_full, _) = fixed_point_runs(&full, 66);
    let (_, r_half, _) = fixed_point_runs(&half, 66);
    let a = r_full.iter().copied().fold(0.0, f64::max);
    let b = r_half.iter().copied().fold(0.0, f64::max);
    let change = (a - b).abs() / a;
    let spread_start: Vec<f64> = (0..5).map(|i| 0.3 * i as f64).collect();
    let entry = (
        entry_cycles(&full, &full.from_phases(&spread_start).unwrap()),
        entry_cycles(&half, &half.from_phases(&spread_start).unwrap()),
    );
    outcome(
        change < 0.10,
        format!(
            "ratio {a:.5} at g, {b:.5} at g/2, change {:.1}%; cycles to enter the synchronous region {} vs {}",
            100.0 * change,
            entry.0,
            entry.1
        ),
    )
}

fn c11_determinism() -> Outcome {
    let cfg = ring_config();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = run(&cfg, Mode::ReproduceFig4, a.path()).unwrap();
    let rb = run(&cfg, Mode::ReproduceFig4, b.path()).unwrap();
    let mut compared = 0;
    let mut identical = ra.files.len() == rb.files.len();
    for (fa, fb) in ra.files.iter().zip(&rb.files) {
        if fa.extension().is_some_and(|e| e == "csv") {
            compared += 1;
            identical &= std::fs::read(fa).unwrap() == std::fs::read(fb).unwrap();
        }
    }
    outcome(identical && compared == 2, format!("{compared} raster files compared, identical = {identical}"))
}

#[test]
fn acceptance_criteria() {
    let results = [
        criterion(1, "family constants", Some(1.0), c1_family_constants),
        criterion(2, "knee monotonicity", Some(5.0), c2_knee_monotonicity),
        criterion(3, "slow drift vs dense integration", Some(30.0), c3_slow_flow_oracle),
        criterion(4, "travel-time tables vs log formula", None, c4_travel_time_tables),
        criterion(5, "return-map contraction", Some(60.0), c5_return_map_contraction),
        criterion(6, "fixed point and tail rate", None, c6_fixed_point),
        criterion(7, "two-cell comparison", Some(60.0), c7_two_cell_comparison),
        criterion(8, "ring contrast over strip time constants", Some(120.0), c8_ring_contrast),
        criterion(9, "singular-limit agreement over eps", Some(300.0), c9_eps_sweep),
        criterion(10, "rate independent of coupling strength", None, c10_rate_vs_gain),
        criterion(11, "deterministic rasters", None, c11_determinism),
    ];
    let failed: Vec<usize> = (0..results.len()).filter(|&k| !results[k]).map(|k| k + 1).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
