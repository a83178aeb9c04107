//! Two-cell and ring reproductions with built-in defaults.
//!
//! `reproduce-fig1`: a Morris-Lecar pair coupled both ways with gain 0.67,
//! `ε = 0.02`, coupling from `t = 20` to 60. It runs an identical pair
//! `(0.5, 1, 2)`, the heterogeneous pair `(0.5, 1, 2)`/`(0.25, 0.5, 4)`, and
//! the heterogeneous pair under diffusive coupling whose gain matches the
//! peak of the synaptic run's linearized gain `k(t) = g (Ē - v) S'(v)`.
//!
//! `reproduce-fig4`: 20 three-timescale cells drawn from the reference
//! family, each projecting to its 7 successors with gain 0.03, `ε = 0.004`,
//! coupling from `t = 10` to 70, once per `τ̲` in `{0.5, 5, 30}`.

use std::path::{Path, PathBuf};

use serde::Serialize;
use synsync_core::analysis::DispersionSeries;
use synsync_core::network::{validate_coupling, CouplingGraph, Sigmoid};
use synsync_core::neuron::{Conductances, NeuronModel, ParameterRanges};
use synsync_core::odesim::{linearized_gains, simulate, CouplingMode, OdeTrajectory};

use crate::config::{ExperimentConfig, GraphKind, GraphSpec, Mode, Population, RangeSpec};
use crate::error::CliError;
use crate::experiment::{build_graph, build_model, ode_dispersion, ode_options, population, require_weak_coupling};
use crate::output::{ode_raster, write_raster, write_report};
use crate::population::{draw_states, Stream};

pub const FIG1_EPS: f64 = 0.02;
pub const FIG1_GAIN: f64 = 0.67;
pub const FIG1_ON: f64 = 20.0;
pub const FIG1_HORIZON: f64 = 60.0;
pub const FIG1_INITIAL: [(f64, f64); 2] = [(0.1, -0.3), (0.6, 0.2)];
pub const FIG1_REFERENCE: Conductances = Conductances::new(0.5, 1.0, 2.0);
pub const FIG1_DETUNED: Conductances = Conductances::new(0.25, 0.5, 4.0);

pub const FIG4_N: usize = 20;
pub const FIG4_NEIGHBORS: usize = 7;
pub const FIG4_GAIN: f64 = 0.03;
pub const FIG4_EPS: f64 = 0.004;
pub const FIG4_ON: f64 = 10.0;
pub const FIG4_HORIZON: f64 = 70.0;
pub const FIG4_STRIP_TAUS: [f64; 3] = [0.5, 5.0, 30.0];

#[derive(Debug, Clone)]
pub struct Fig1Run {
    pub label: &'static str,
    pub mode: CouplingMode,
    pub trajectory: OdeTrajectory,
    pub dispersion: Option<DispersionSeries>,
    pub gain: f64,
    /// Hausdorff distance in the phase plane between neuron 0's settled
    /// orbit and its decoupled limit cycle.
    pub orbit_deviation: f64,
}

#[derive(Debug, Clone)]
pub struct Fig1 {
    pub coupling_on_time: f64,
    /// Start of the settled window, halfway through the coupled interval.
    pub settle_time: f64,
    /// Decoupled heterogeneous pair.
    pub reference: OdeTrajectory,
    pub runs: Vec<Fig1Run>,
}

#[derive(Debug, Clone)]
pub struct Fig4Run {
    pub strip_tau: f64,
    pub mode: CouplingMode,
    pub trajectory: OdeTrajectory,
    pub dispersion: Option<DispersionSeries>,
}

#[derive(Debug, Clone)]
pub struct Fig4 {
    pub conductances: Vec<Conductances>,
    pub initial: Vec<(f64, f64)>,
    pub coupling_on_time: f64,
    pub runs: Vec<Fig4Run>,
}

fn distance_to_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let s = if len2 > 0.0 {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p.0 - a.0 - s * dx).hypot(p.1 - a.1 - s * dy)
}

fn orbit_points(t: &OdeTrajectory, neuron: usize, from: f64) -> Vec<(f64, f64)> {
    t.times
        .iter()
        .enumerate()
        .filter(|&(_, &s)| s >= from)
        .map(|(k, _)| (t.x[neuron][k], t.v[neuron][k]))
        .collect()
}

/// Largest distance from a point of `a` to the polyline `b`.
fn directed_distance(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    a.iter()
        .map(|&p| {
            b.windows(2)
                .map(|w| distance_to_segment(p, w[0], w[1]))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Symmetric Hausdorff distance between the `(x, v)` polylines of `neuron`
/// in `traj` and `reference`, both restricted to `t >= from`.
pub fn orbit_deviation(traj: &OdeTrajectory, reference: &OdeTrajectory, neuron: usize, from: f64) -> f64 {
    let a = orbit_points(traj, neuron, from);
    let b = orbit_points(reference, neuron, from);
    match (a.len(), b.len()) {
        (0, _) | (_, 0) => f64::NAN,
        (1, 1) => (a[0].0 - b[0].0).hypot(a[0].1 - b[0].1),
        (1, _) => directed_distance(&a, &b).max(directed_distance(&b, &[a[0], a[0]])),
        (_, 1) => directed_distance(&b, &a).max(directed_distance(&a, &[b[0], b[0]])),
        _ => directed_distance(&a, &b).max(directed_distance(&b, &a)),
    }
}

/// `max_t k(t)` over both cells of a synaptic run with gain `gain`.
pub fn peak_linearized_gain(models: &[NeuronModel], traj: &OdeTrajectory, gain: f64, from: f64) -> f64 {
    models
        .iter()
        .enumerate()
        .flat_map(|(i, m)| linearized_gains(m, traj, i, gain))
        .filter(|e| e.time >= from)
        .map(|e| e.k)
        .fold(0.0, f64::max)
}

pub fn fig1(cfg: &ExperimentConfig) -> Result<Fig1, CliError> {
    let gain = cfg.graph.as_ref().and_then(|g| g.gain).unwrap_or(FIG1_GAIN);
    let sigmoid = Sigmoid::Tanh {
        center: 0.0,
        width: 0.15,
    };
    let graph = CouplingGraph::all_to_all(2, 1.0, vec![gain; 2], sigmoid)?;
    let init: Vec<(f64, f64)> = match &cfg.initial {
        Some(rows) if rows.len() == 2 && rows.iter().all(|r| r.len() == 2) => rows.iter().map(|r| (r[0], r[1])).collect(),
        Some(_) => return Err(CliError::Validation("initial must hold 2 rows of [x, v]".into())),
        None => FIG1_INITIAL.to_vec(),
    };
    let mut opts = ode_options(cfg, cfg.eps.unwrap_or(FIG1_EPS), cfg.horizon.unwrap_or(FIG1_HORIZON));
    opts.coupling_on_time = cfg.coupling_on_time.unwrap_or(FIG1_ON);
    let identical = vec![NeuronModel::morris_lecar(FIG1_REFERENCE); 2];
    let detuned = vec![
        NeuronModel::morris_lecar(FIG1_REFERENCE),
        NeuronModel::morris_lecar(FIG1_DETUNED),
    ];
    require_weak_coupling(&validate_coupling(&graph, &detuned))?;
    let cases = [
        ("reference", &detuned, CouplingMode::Off),
        ("identical", &identical, CouplingMode::Synaptic),
        ("heterogeneous", &detuned, CouplingMode::Synaptic),
    ];
    let run = |models: &[NeuronModel], graph: &CouplingGraph, mode: CouplingMode| {
        let mut o = opts.clone();
        o.mode = mode;
        simulate(models, graph, &init, &o).map_err(CliError::from)
    };
    let results: Vec<Result<OdeTrajectory, CliError>> = std::thread::scope(|s| {
        let handles: Vec<_> = cases
            .iter()
            .map(|&(_, models, mode)| {
                let (run, graph) = (&run, &graph);
                s.spawn(move || run(models, graph, mode))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("simulation thread panicked")).collect()
    });
    let mut trajectories = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let on = opts.coupling_on_time;
    let settle = on + 0.5 * (opts.horizon - on);
    let diffusive_gain = match cfg.diffusive_gain {
        Some(g) => g,
        None => peak_linearized_gain(&detuned, &trajectories[2], gain, on),
    };
    let diffusive_graph = CouplingGraph::all_to_all(2, 1.0, vec![diffusive_gain; 2], sigmoid)?;
    trajectories.push(run(&detuned, &diffusive_graph, CouplingMode::Diffusive)?);
    let mut trajectories = trajectories.into_iter();
    let reference = trajectories.next().expect("reference run");
    let labels = [
        ("identical", CouplingMode::Synaptic, gain),
        ("heterogeneous", CouplingMode::Synaptic, gain),
        ("diffusive", CouplingMode::Diffusive, diffusive_gain),
    ];
    let runs = labels
        .into_iter()
        .zip(trajectories)
        .map(|((label, mode, gain), trajectory)| Fig1Run {
            label,
            mode,
            gain,
            dispersion: ode_dispersion(&trajectory, on),
            orbit_deviation: orbit_deviation(&trajectory, &reference, 0, settle),
            trajectory,
        })
        .collect();
    Ok(Fig1 {
        coupling_on_time: on,
        settle_time: settle,
        reference,
        runs,
    })
}

fn fig4_population(cfg: &ExperimentConfig) -> Population {
    cfg.population.clone().unwrap_or_else(|| {
        let r = ParameterRanges::default();
        Population::Ranges(RangeSpec {
            leak: [r.leak.0, r.leak.1],
            calcium: [r.calcium.0, r.calcium.1],
            potassium: [r.potassium.0, r.potassium.1],
            count: FIG4_N,
        })
    })
}

fn fig4_graph(cfg: &ExperimentConfig) -> GraphSpec {
    cfg.graph.clone().unwrap_or_else(|| GraphSpec {
        kind: GraphKind::Ring,
        neighbors: Some(FIG4_NEIGHBORS),
        gain: Some(FIG4_GAIN),
        ..GraphSpec::default()
    })
}

/// One ODE run per `τ̲`, sharing the population and the initial state.
pub fn fig4(cfg: &ExperimentConfig) -> Result<Fig4, CliError> {
    let mut stream = Stream::new(cfg.seed);
    let conductances = population(&fig4_population(cfg), &mut stream)?;
    let taus = cfg.strip_taus.clone().unwrap_or_else(|| FIG4_STRIP_TAUS.to_vec());
    let mut systems = Vec::with_capacity(taus.len());
    for &tau in &taus {
        let mut spec = cfg.model.clone();
        spec.strip_tau = Some(tau);
        let models = conductances
            .iter()
            .map(|&c| build_model(&spec, c))
            .collect::<Result<Vec<_>, _>>()?;
        let graph = build_graph(&fig4_graph(cfg), &models, spec.kind)?;
        require_weak_coupling(&validate_coupling(&graph, &models))?;
        systems.push((models, graph));
    }
    let initial = match &cfg.initial {
        Some(rows) if rows.len() == conductances.len() && rows.iter().all(|r| r.len() == 2) => {
            rows.iter().map(|r| (r[0], r[1])).collect()
        }
        Some(_) => {
            return Err(CliError::Validation(format!(
                "initial must hold {} rows of [x, v]",
                conductances.len()
            )))
        }
        None => {
            let boxes: Vec<_> = systems[0].0.iter().map(|m| m.domain).collect();
            draw_states(&mut stream, &boxes)
        }
    };
    let mut opts = ode_options(cfg, cfg.eps.unwrap_or(FIG4_EPS), cfg.horizon.unwrap_or(FIG4_HORIZON));
    opts.coupling_on_time = cfg.coupling_on_time.unwrap_or(FIG4_ON);
    let results: Vec<Result<OdeTrajectory, CliError>> = std::thread::scope(|s| {
        let handles: Vec<_> = systems
            .iter()
            .map(|(models, graph)| {
                let (opts, initial) = (&opts, &initial);
                s.spawn(move || simulate(models, graph, initial, opts).map_err(CliError::from))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("simulation thread panicked")).collect()
    });
    let mut runs = Vec::with_capacity(taus.len());
    for (&strip_tau, traj) in taus.iter().zip(results) {
        let trajectory = traj?;
        runs.push(Fig4Run {
            strip_tau,
            mode: opts.mode,
            dispersion: ode_dispersion(&trajectory, opts.coupling_on_time),
            trajectory,
        });
    }
    Ok(Fig4 {
        conductances,
        initial,
        coupling_on_time: opts.coupling_on_time,
        runs,
    })
}

#[derive(Debug, Serialize)]
struct RunEntry<'a> {
    label: String,
    raster: &'a str,
    mode: CouplingMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    gain: Option<f64>,
    spike_times: Vec<Vec<f64>>,
    dispersion: &'a Option<DispersionSeries>,
    #[serde(skip_serializing_if = "Option::is_none")]
    orbit_deviation: Option<f64>,
}

#[derive(Debug, Serialize)]
struct PresetReport<'a> {
    mode: Mode,
    seed: u64,
    coupling_on_time: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    conductances: Option<&'a [Conductances]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    initial: Option<&'a [(f64, f64)]>,
    runs: Vec<RunEntry<'a>>,
}

fn spike_times(traj: &OdeTrajectory) -> Vec<Vec<f64>> {
    (0..traj.x.len()).map(|i| traj.spike_times(i)).collect()
}

pub fn run_fig1(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let fig = fig1(cfg)?;
    let names: Vec<String> = fig.runs.iter().map(|r| format!("fig1_{}.csv", r.label)).collect();
    let mut files = Vec::new();
    for (run, name) in fig.runs.iter().zip(&names) {
        let path = out.join(name);
        write_raster(&path, &ode_raster(&run.trajectory))?;
        files.push(path);
    }
    let report = PresetReport {
        mode: Mode::ReproduceFig1,
        seed: cfg.seed,
        coupling_on_time: fig.coupling_on_time,
        conductances: None,
        initial: None,
        runs: fig
            .runs
            .iter()
            .zip(&names)
            .map(|(r, name)| RunEntry {
                label: r.label.to_string(),
                raster: name,
                mode: r.mode,
                gain: Some(r.gain),
                spike_times: spike_times(&r.trajectory),
                dispersion: &r.dispersion,
                orbit_deviation: Some(r.orbit_deviation),
            })
            .collect(),
    };
    let path = out.join(&cfg.outputs.report);
    write_report(&path, &report)?;
    files.push(path);
    Ok(files)
}

pub fn run_fig4(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let fig = fig4(cfg)?;
    let names: Vec<String> = fig.runs.iter().map(|r| format!("fig4_tau_{}.csv", r.strip_tau)).collect();
    let mut files = Vec::new();
    for (run, name) in fig.runs.iter().zip(&names) {
        let path = out.join(name);
        write_raster(&path, &ode_raster(&run.trajectory))?;
        files.push(path);
    }
    let report = PresetReport {
        mode: Mode::ReproduceFig4,
        seed: cfg.seed,
        coupling_on_time: fig.coupling_on_time,
        conductances: Some(&fig.conductances),
        initial: Some(&fig.initial),
        runs: fig
            .runs
            .iter()
            .zip(&names)
            .map(|(r, name)| RunEntry {
                label: format!("strip_tau={}", r.strip_tau),
                raster: name,
                mode: r.mode,
                gain: None,
                spike_times: spike_times(&r.trajectory),
                dispersion: &r.dispersion,
                orbit_deviation: None,
            })
            .collect(),
    };
    let path = out.join(&cfg.outputs.report);
    write_report(&path, &report)?;
    files.push(path);
    Ok(files)
}
