//! Mode dispatch: builds the network from a config, runs an engine and
//! writes the artifacts.

use std::path::{Path, PathBuf};

use serde::Serialize;
use synsync_core::analysis::{analyze, spike_dispersion, AnalysisOptions, AnalysisReport, DispersionSeries};
use synsync_core::ifsim::{IfNetwork, IfOptions, IfState};
use synsync_core::network::{strong_connectivity, validate_coupling, Connectivity, CouplingGraph, CouplingReport, Sigmoid};
use synsync_core::neuron::{
    check_assumptions, check_family, AssumptionReport, Conductances, FamilyReport, NeuronModel, ParameterRanges,
    TimeConstantProfile,
};
use synsync_core::odesim::{simulate, CouplingMode, IntegratorInfo, OdeOptions, OdeTrajectory};

use crate::config::{ExperimentConfig, GraphKind, GraphSpec, Mode, ModelKind, ModelSpec, Population};
use crate::error::CliError;
use crate::output::{ode_raster, write_raster, write_report, write_trajectory};
use crate::population::{draw_population, draw_states, Stream};
use crate::presets;

pub const DEFAULT_STRIP_TAU: f64 = 30.0;
pub const DEFAULT_N_CYCLES: usize = 20;
const ASSUMPTION_GRID: usize = 200;

/// Files written by [`run`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub mode: Mode,
    pub files: Vec<PathBuf>,
}

/// Neurons and graph built from a config, plus the stream positioned after
/// the population draws.
pub struct System {
    pub models: Vec<NeuronModel>,
    pub graph: CouplingGraph,
    pub stream: Stream,
}

impl System {
    pub fn conductances(&self) -> Vec<Conductances> {
        self.models.iter().map(|m| m.conductances).collect()
    }
}

pub fn build_model(spec: &ModelSpec, c: Conductances) -> Result<NeuronModel, CliError> {
    let mut m = match spec.kind {
        ModelKind::ThreeTimescale => NeuronModel::three_timescale(c, spec.strip_tau.unwrap_or(DEFAULT_STRIP_TAU)),
        ModelKind::MorrisLecar => {
            if spec.strip_tau.is_some() || spec.slow_tau.is_some() || spec.q.is_some() {
                return Err(CliError::Validation(
                    "strip_tau, slow_tau and q apply to three_timescale models only".into(),
                ));
            }
            NeuronModel::morris_lecar(c)
        }
    };
    if let TimeConstantProfile::Piecewise { q, slow, .. } = &mut m.time_constant {
        if let Some(v) = spec.q {
            *q = v;
        }
        if let Some(v) = spec.slow_tau {
            *slow = v;
        }
    }
    if let Some(v) = spec.margin {
        m.margin = v;
    }
    if let Some(v) = spec.threshold {
        m.threshold = v;
    }
    m.validate()?;
    Ok(m)
}

pub fn default_sigmoid(model: &NeuronModel, kind: ModelKind) -> Sigmoid {
    match kind {
        ModelKind::ThreeTimescale => Sigmoid::Step {
            threshold: model.threshold,
        },
        ModelKind::MorrisLecar => Sigmoid::Tanh {
            center: 0.0,
            width: 0.15,
        },
    }
}

pub fn default_eps(kind: ModelKind) -> f64 {
    match kind {
        ModelKind::ThreeTimescale => 4e-4,
        ModelKind::MorrisLecar => 0.02,
    }
}

fn check_range(name: &str, [lo, hi]: [f64; 2]) -> Result<(f64, f64), CliError> {
    if lo.is_finite() && hi.is_finite() && lo <= hi && lo > 0.0 {
        Ok((lo, hi))
    } else {
        Err(CliError::Validation(format!("population.ranges.{name} = [{lo}, {hi}] is not a positive interval")))
    }
}

/// Draw or copy the conductances, consuming the stream for ranges.
pub fn population(pop: &Population, stream: &mut Stream) -> Result<Vec<Conductances>, CliError> {
    match pop {
        Population::Explicit(list) => {
            if list.is_empty() {
                return Err(CliError::Validation("population.explicit is empty".into()));
            }
            Ok(list.iter().map(|&[gl, gca, gk]| Conductances::new(gl, gca, gk)).collect())
        }
        Population::Ranges(r) => {
            if r.count == 0 {
                return Err(CliError::Validation("population.ranges.count must be positive".into()));
            }
            let ranges = ParameterRanges {
                leak: check_range("leak", r.leak)?,
                calcium: check_range("calcium", r.calcium)?,
                potassium: check_range("potassium", r.potassium)?,
            };
            Ok(draw_population(stream, &ranges, r.count))
        }
    }
}

pub fn build_graph(spec: &GraphSpec, models: &[NeuronModel], kind: ModelKind) -> Result<CouplingGraph, CliError> {
    let n = models.len();
    let gains = match (&spec.gains, spec.gain) {
        (Some(g), _) => g.clone(),
        (None, Some(g)) => vec![g; n],
        (None, None) => return Err(CliError::Config("missing required fields: graph.gain".into())),
    };
    let sigmoid = spec.sigmoid.unwrap_or_else(|| default_sigmoid(&models[0], kind));
    let graph = match spec.kind {
        GraphKind::Ring => {
            let k = spec
                .neighbors
                .ok_or_else(|| CliError::Config("missing required fields: graph.neighbors".into()))?;
            CouplingGraph::ring(n, k, spec.weight, gains, sigmoid)?
        }
        GraphKind::AllToAll => CouplingGraph::all_to_all(n, spec.weight, gains, sigmoid)?,
        GraphKind::Explicit => {
            let edges = spec
                .edges
                .as_ref()
                .ok_or_else(|| CliError::Config("missing required fields: graph.edges".into()))?;
            let mut g = CouplingGraph::new(n, gains)?;
            for &(source, target, weight) in edges {
                g.add_edge(source, target, weight, sigmoid)?;
            }
            g
        }
    };
    Ok(graph)
}

pub fn build_system(cfg: &ExperimentConfig) -> Result<System, CliError> {
    let (pop, graph_spec) = cfg.require_system()?;
    let mut stream = Stream::new(cfg.seed);
    let models = population(pop, &mut stream)?
        .into_iter()
        .map(|c| build_model(&cfg.model, c))
        .collect::<Result<Vec<_>, _>>()?;
    let graph = build_graph(graph_spec, &models, cfg.model.kind)?;
    Ok(System { models, graph, stream })
}

/// Hard failure when some `g_i d_i` exceeds the margin `M_i`.
pub fn require_weak_coupling(report: &CouplingReport) -> Result<(), CliError> {
    let bad: Vec<String> = report
        .weak_coupling
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("neuron {} (g d = {} > M = {})", c.neuron, c.level, c.margin))
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(format!("weak coupling violated: {}", bad.join("; "))))
    }
}

fn initial_rows(cfg: &ExperimentConfig, n: usize, width: usize) -> Result<Option<Vec<Vec<f64>>>, CliError> {
    let Some(rows) = &cfg.initial else {
        return Ok(None);
    };
    if rows.len() != n || rows.iter().any(|r| r.len() != width) {
        return Err(CliError::Validation(format!(
            "initial must hold {n} rows of {width} number(s)"
        )));
    }
    Ok(Some(rows.clone()))
}

/// `(x, v)` per neuron: from the config, or uniform over each domain box.
pub fn ode_initial(cfg: &ExperimentConfig, sys: &mut System) -> Result<Vec<(f64, f64)>, CliError> {
    match initial_rows(cfg, sys.models.len(), 2)? {
        Some(rows) => Ok(rows.iter().map(|r| (r[0], r[1])).collect()),
        None => {
            let boxes: Vec<_> = sys.models.iter().map(|m| m.domain).collect();
            Ok(draw_states(&mut sys.stream, &boxes))
        }
    }
}

/// `x` per neuron: from the config, or uniform over each slow interval.
pub fn if_initial(cfg: &ExperimentConfig, sys: &mut System, net: &IfNetwork) -> Result<Vec<f64>, CliError> {
    match initial_rows(cfg, sys.models.len(), 1)? {
        Some(rows) => Ok(rows.iter().map(|r| r[0]).collect()),
        None => Ok(net
            .neurons()
            .iter()
            .map(|n| sys.stream.in_range(n.slow_interval()))
            .collect()),
    }
}

pub fn ode_options(cfg: &ExperimentConfig, eps: f64, horizon: f64) -> OdeOptions {
    let mut o = OdeOptions::new(eps, horizon);
    if let Some(k) = cfg.kappa {
        o.kappa = k;
    }
    if let Some(dt) = cfg.dt {
        o.dt = dt;
    }
    o.coupling_on_time = cfg.coupling_on_time.unwrap_or(0.0);
    o.mode = cfg.coupling.unwrap_or(CouplingMode::Synaptic);
    o.stride = cfg.outputs.stride.max(1);
    o
}

/// Burst dispersion of an ODE run after coupling starts.
pub fn ode_dispersion(traj: &OdeTrajectory, from: f64) -> Option<DispersionSeries> {
    let spikes: Vec<(usize, f64)> = traj.spikes.iter().map(|s| (s.neuron, s.time)).collect();
    let end = traj.times.last().copied().unwrap_or(0.0);
    spike_dispersion(&spikes, traj.x.len(), (from, end))
}

#[derive(Debug, Serialize)]
struct OdeReport {
    mode: Mode,
    seed: u64,
    conductances: Vec<Conductances>,
    coupling: CouplingReport,
    integrator: IntegratorInfo,
    initial: Vec<(f64, f64)>,
    spike_counts: Vec<usize>,
    dispersion: Option<DispersionSeries>,
}

#[derive(Debug, Serialize)]
struct IfReport {
    mode: Mode,
    seed: u64,
    conductances: Vec<Conductances>,
    coupling: CouplingReport,
    initial: Vec<f64>,
    periods: Vec<f64>,
    fast_times: Vec<f64>,
    dispersion: Option<DispersionSeries>,
    final_state: IfState,
}

#[derive(Debug, Serialize)]
struct CheckReport {
    mode: Mode,
    seed: u64,
    conductances: Vec<Conductances>,
    assumptions: Vec<AssumptionReport>,
    family: Option<FamilyReport>,
    coupling: CouplingReport,
    connectivity: Connectivity,
    passed: bool,
}

#[derive(Debug, Serialize)]
struct AnalyzeReport {
    mode: Mode,
    seed: u64,
    conductances: Vec<Conductances>,
    analysis: AnalysisReport,
}

/// Run `mode` with `cfg`, writing every artifact under `out_dir`.
pub fn run(cfg: &ExperimentConfig, mode: Mode, out_dir: &Path) -> Result<RunSummary, CliError> {
    if let Some(m) = cfg.mode {
        if m != mode {
            return Err(CliError::Config(format!(
                "config is for mode {m:?} but {mode:?} was requested"
            )));
        }
    }
    std::fs::create_dir_all(out_dir)?;
    let files = match mode {
        Mode::Ode => run_ode(cfg, out_dir)?,
        Mode::If => run_if(cfg, out_dir)?,
        Mode::Check => run_check(cfg, out_dir)?,
        Mode::Analyze => run_analyze(cfg, out_dir)?,
        Mode::ReproduceFig1 => presets::run_fig1(cfg, out_dir)?,
        Mode::ReproduceFig4 => presets::run_fig4(cfg, out_dir)?,
    };
    Ok(RunSummary { mode, files })
}

fn run_ode(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut sys = build_system(cfg)?;
    let horizon = cfg
        .horizon
        .ok_or_else(|| CliError::Config("missing required fields: horizon".into()))?;
    let opts = ode_options(cfg, cfg.eps.unwrap_or(default_eps(cfg.model.kind)), horizon);
    let coupling = validate_coupling(&sys.graph, &sys.models);
    if opts.mode != CouplingMode::Off {
        require_weak_coupling(&coupling)?;
    }
    let init = ode_initial(cfg, &mut sys)?;
    let traj = simulate(&sys.models, &sys.graph, &init, &opts)?;
    let mut files = Vec::new();
    let raster = out.join(&cfg.outputs.raster);
    write_raster(&raster, &ode_raster(&traj))?;
    files.push(raster);
    if let Some(name) = &cfg.outputs.trajectory {
        let path = out.join(name);
        write_trajectory(&path, &traj)?;
        files.push(path);
    }
    let report = OdeReport {
        mode: Mode::Ode,
        seed: cfg.seed,
        conductances: sys.conductances(),
        coupling,
        integrator: traj.info.clone(),
        initial: init,
        spike_counts: (0..sys.models.len()).map(|i| traj.spike_times(i).len()).collect(),
        dispersion: ode_dispersion(&traj, opts.coupling_on_time),
    };
    let path = out.join(&cfg.outputs.report);
    write_report(&path, &report)?;
    files.push(path);
    Ok(files)
}

fn run_if(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut sys = build_system(cfg)?;
    let coupling = validate_coupling(&sys.graph, &sys.models);
    require_weak_coupling(&coupling)?;
    let net = IfNetwork::new(sys.models.clone(), sys.graph.clone(), IfOptions::default())?;
    let init = if_initial(cfg, &mut sys, &net)?;
    let on = cfg.coupling_on_time.unwrap_or(0.0);
    let run = net.simulate(&init, cfg.n_cycles.unwrap_or(DEFAULT_N_CYCLES), on)?;
    let raster = out.join(&cfg.outputs.raster);
    write_raster(&raster, &run.raster)?;
    let spikes: Vec<(usize, f64)> = run.raster.iter().map(|e| (e.neuron, e.time)).collect();
    let end = run.final_state.time;
    let report = IfReport {
        mode: Mode::If,
        seed: cfg.seed,
        conductances: sys.conductances(),
        coupling,
        initial: init,
        periods: net.neurons().iter().map(|n| n.period()).collect::<Result<_, _>>()?,
        fast_times: run.fast_times.clone(),
        dispersion: spike_dispersion(&spikes, net.len(), (on, end)),
        final_state: run.final_state,
    };
    let path = out.join(&cfg.outputs.report);
    write_report(&path, &report)?;
    Ok(vec![raster, path])
}

fn run_check(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let sys = build_system(cfg)?;
    let assumptions: Vec<AssumptionReport> =
        sys.models.iter().map(|m| check_assumptions(m, ASSUMPTION_GRID)).collect();
    let family = match &cfg.population {
        Some(Population::Ranges(r)) => {
            let ranges = ParameterRanges {
                leak: (r.leak[0], r.leak[1]),
                calcium: (r.calcium[0], r.calcium[1]),
                potassium: (r.potassium[0], r.potassium[1]),
            };
            Some(check_family(&sys.models[0], &ranges, ASSUMPTION_GRID))
        }
        _ => None,
    };
    let coupling = validate_coupling(&sys.graph, &sys.models);
    let connectivity = strong_connectivity(&sys.graph);
    let failed_neurons: Vec<usize> = (0..assumptions.len()).filter(|&i| !assumptions[i].all_passed()).collect();
    let family_ok = family.as_ref().map_or(true, |f| f.accepted);
    let passed = failed_neurons.is_empty() && family_ok && coupling.passed() && connectivity.strongly_connected;
    let report = CheckReport {
        mode: Mode::Check,
        seed: cfg.seed,
        conductances: sys.conductances(),
        assumptions,
        family,
        coupling: coupling.clone(),
        connectivity: connectivity.clone(),
        passed,
    };
    let path = out.join(&cfg.outputs.report);
    write_report(&path, &report)?;
    require_weak_coupling(&coupling)?;
    if !passed {
        let mut why = Vec::new();
        if !failed_neurons.is_empty() {
            why.push(format!("assumptions fail for neurons {failed_neurons:?}"));
        }
        if !family_ok {
            why.push("the margin exceeds the family bound".into());
        }
        if !coupling.synapses_localized() {
            why.push("some synapse is active outside its presynaptic window".into());
        }
        if !connectivity.strongly_connected {
            why.push("the graph is not strongly connected".into());
        }
        return Err(CliError::Validation(why.join("; ")));
    }
    Ok(vec![path])
}

fn run_analyze(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut sys = build_system(cfg)?;
    require_weak_coupling(&validate_coupling(&sys.graph, &sys.models))?;
    let net = IfNetwork::new(sys.models.clone(), sys.graph.clone(), IfOptions::default())?;
    let options = AnalysisOptions {
        start: match cfg.initial {
            Some(_) => Some(if_initial(cfg, &mut sys, &net)?),
            None => None,
        },
        ..AnalysisOptions::default()
    };
    let report = AnalyzeReport {
        mode: Mode::Analyze,
        seed: cfg.seed,
        conductances: sys.conductances(),
        analysis: analyze(&net, &options)?,
    };
    let path = out.join(&cfg.outputs.report);
    write_report(&path, &report)?;
    Ok(vec![path])
}
