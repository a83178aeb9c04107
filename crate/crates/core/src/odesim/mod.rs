//! Finite-ε integration of the coupled network with explicit RK4.

mod spikes;

use alloc::vec::Vec;

use crate::network::{CouplingGraph, Sigmoid};
use crate::neuron::NeuronModel;
use crate::{Error, Result};

pub use spikes::{detect_spikes, SpikeDetector};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Escape from the domain box beyond this aborts the run.
pub const ESCAPE_LIMIT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CouplingMode {
    /// `(Ē_i - v_i) g_i Σ_j α_ij S_ij(v_j)`.
    Synaptic,
    /// `g_i Σ_j α_ij (v_j - v_i)`.
    Diffusive,
    Off,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct OdeOptions {
    pub eps: f64,
    pub dt: f64,
    /// Width of the logistic replacing every step.
    pub kappa: f64,
    pub horizon: f64,
    pub coupling_on_time: f64,
    pub mode: CouplingMode,
    /// Keep every `stride`-th step in the stored trajectory.
    pub stride: usize,
}

impl OdeOptions {
    /// `Δt = ε/20`, `κ = 10⁻³`, coupling on from the start.
    pub fn new(eps: f64, horizon: f64) -> Self {
        Self {
            eps,
            dt: eps / 20.0,
            kappa: 1e-3,
            horizon,
            coupling_on_time: 0.0,
            mode: CouplingMode::Synaptic,
            stride: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Spike {
    pub neuron: usize,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct IntegratorInfo {
    pub method: &'static str,
    pub dt: f64,
    pub eps: f64,
    /// `q` of the first piecewise time constant, if any.
    pub q: Option<f64>,
    pub kappa: f64,
    pub stride: usize,
    /// Largest distance outside any domain box seen at a step.
    pub max_excursion: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct OdeTrajectory {
    pub times: Vec<f64>,
    /// `x[i][k]` is neuron `i` at `times[k]`.
    pub x: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    /// Sorted by time, detected at every step.
    pub spikes: Vec<Spike>,
    pub info: IntegratorInfo,
}

impl OdeTrajectory {
    pub fn spike_times(&self, neuron: usize) -> Vec<f64> {
        self.spikes
            .iter()
            .filter(|s| s.neuron == neuron)
            .map(|s| s.time)
            .collect()
    }
}

struct Rhs<'a> {
    models: &'a [NeuronModel],
    graph: &'a CouplingGraph,
    opts: &'a OdeOptions,
    v: Vec<f64>,
    /// One sigmoid per source when all its synapses share it; lets each
    /// stage evaluate `S_j(v_j)` once per neuron.
    shared: Option<Vec<Option<Sigmoid>>>,
    activation: Vec<f64>,
    incoming: Vec<Vec<(usize, f64)>>,
}

impl<'a> Rhs<'a> {
    fn new(models: &'a [NeuronModel], graph: &'a CouplingGraph, opts: &'a OdeOptions) -> Self {
        let n = models.len();
        let mut shared: Vec<Option<Sigmoid>> = alloc::vec![None; n];
        let mut uniform = true;
        for e in graph.edges() {
            match shared[e.source] {
                None => shared[e.source] = Some(e.sigmoid),
                Some(s) if s != e.sigmoid => uniform = false,
                Some(_) => {}
            }
        }
        Self {
            models,
            graph,
            opts,
            v: alloc::vec![0.0; n],
            shared: uniform.then_some(shared),
            activation: alloc::vec![0.0; n],
            incoming: (0..n)
                .map(|i| graph.incoming(i).map(|e| (e.source, e.weight)).collect())
                .collect(),
        }
    }

    fn drive(&self, i: usize) -> f64 {
        match self.shared {
            Some(_) => {
                self.graph.gain(i)
                    * self.incoming[i]
                        .iter()
                        .map(|&(j, w)| w * self.activation[j])
                        .sum::<f64>()
            }
            None => self.graph.synaptic_drive(i, &self.v, self.opts.kappa),
        }
    }
}

impl Rhs<'_> {
    fn eval(&mut self, t: f64, y: &[f64], out: &mut [f64]) {
        let n = self.models.len();
        for i in 0..n {
            self.v[i] = y[2 * i + 1];
        }
        let coupled = t >= self.opts.coupling_on_time;
        let (eps, kappa) = (self.opts.eps, self.opts.kappa);
        if let (true, CouplingMode::Synaptic, Some(shared)) = (coupled, self.opts.mode, &self.shared) {
            for (j, s) in shared.iter().enumerate() {
                if let Some(s) = s {
                    self.activation[j] = s.smoothed(self.v[j], kappa);
                }
            }
        }
        for (i, m) in self.models.iter().enumerate() {
            let (x, v) = (y[2 * i], y[2 * i + 1]);
            let input = match self.opts.mode {
                _ if !coupled => 0.0,
                CouplingMode::Off => 0.0,
                CouplingMode::Synaptic => {
                    (m.reversal.excitatory - v) * self.drive(i)
                }
                CouplingMode::Diffusive => {
                    self.graph.gain(i)
                        * self.incoming[i]
                            .iter()
                            .map(|&(j, w)| w * (self.v[j] - v))
                            .sum::<f64>()
                }
            };
            out[2 * i] = (m.x_inf_smoothed(v, kappa) - x) / m.tau_eps(v, eps, kappa);
            out[2 * i + 1] = (m.f(x, v) + input) / eps;
        }
    }
}

/// Integrate from `init` (one `(x, v)` pair per neuron) over
/// `[0, horizon]`.
pub fn simulate(
    models: &[NeuronModel],
    graph: &CouplingGraph,
    init: &[(f64, f64)],
    opts: &OdeOptions,
) -> Result<OdeTrajectory> {
    let n = models.len();
    if graph.len() != n || init.len() != n || n == 0 {
        return Err(Error::InvalidInput(alloc::format!(
            "{n} models, {} graph nodes and {} initial states",
            graph.len(),
            init.len()
        )));
    }
    if !(opts.eps > 0.0 && opts.kappa > 0.0 && opts.horizon >= 0.0 && opts.stride > 0) {
        return Err(Error::InvalidInput(
            "need ε > 0, κ > 0, a non-negative horizon and a positive stride".into(),
        ));
    }
    let limit = opts.eps / 20.0;
    if !(opts.dt > 0.0 && opts.dt <= limit * (1.0 + 1e-12)) {
        return Err(Error::StepTooLarge { dt: opts.dt, limit });
    }
    for m in models {
        m.validate()?;
    }
    let mut y: Vec<f64> = init.iter().flat_map(|&(x, v)| [x, v]).collect();
    let steps = libm::ceil(opts.horizon / opts.dt - 1e-9) as usize;
    let stored = steps / opts.stride + 1;
    let mut traj = OdeTrajectory {
        times: Vec::with_capacity(stored),
        x: alloc::vec![Vec::with_capacity(stored); n],
        v: alloc::vec![Vec::with_capacity(stored); n],
        spikes: Vec::new(),
        info: IntegratorInfo {
            method: "rk4",
            dt: opts.dt,
            eps: opts.eps,
            q: models.iter().find_map(|m| match m.time_constant {
                crate::neuron::TimeConstantProfile::Piecewise { q, .. } => Some(q),
                _ => None,
            }),
            kappa: opts.kappa,
            stride: opts.stride,
            max_excursion: 0.0,
        },
    };
    let mut detectors: Vec<SpikeDetector> = models.iter().map(|m| SpikeDetector::new(m.threshold, opts.dt)).collect();
    let mut rhs = Rhs::new(models, graph, opts);
    let dim = 2 * n;
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        alloc::vec![0.0; dim],
        alloc::vec![0.0; dim],
        alloc::vec![0.0; dim],
        alloc::vec![0.0; dim],
        alloc::vec![0.0; dim],
    );
    let dt = opts.dt;
    for step in 0..=steps {
        let t = step as f64 * dt;
        for i in 0..n {
            let (x, v) = (y[2 * i], y[2 * i + 1]);
            let exc = models[i].domain.excursion(x, v);
            if !exc.is_finite() || exc > ESCAPE_LIMIT || x.is_nan() || v.is_nan() {
                return Err(Error::Unstable {
                    neuron: i,
                    time: t,
                    excursion: exc,
                });
            }
            traj.info.max_excursion = traj.info.max_excursion.max(exc);
            if let Some(s) = detectors[i].push(t, v) {
                traj.spikes.push(Spike { neuron: i, time: s });
            }
        }
        if step % opts.stride == 0 {
            traj.times.push(t);
            for i in 0..n {
                traj.x[i].push(y[2 * i]);
                traj.v[i].push(y[2 * i + 1]);
            }
        }
        if step == steps {
            break;
        }
        rhs.eval(t, &y, &mut k1);
        for j in 0..dim {
            tmp[j] = y[j] + 0.5 * dt * k1[j];
        }
        rhs.eval(t + 0.5 * dt, &tmp, &mut k2);
        for j in 0..dim {
            tmp[j] = y[j] + 0.5 * dt * k2[j];
        }
        rhs.eval(t + 0.5 * dt, &tmp, &mut k3);
        for j in 0..dim {
            tmp[j] = y[j] + dt * k3[j];
        }
        rhs.eval(t + dt, &tmp, &mut k4);
        for j in 0..dim {
            y[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
    }
    traj.spikes.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.neuron.cmp(&b.neuron)));
    Ok(traj)
}

/// Coefficients of the linearized synchronization error along one neuron's
/// trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ErrorGains {
    pub time: f64,
    /// `(τ'(v)(x - x_∞(v)) + τ(v) x_∞'(v)) / τ(v)²`.
    pub b: f64,
    /// `∂f/∂v - g m_∞(v)`.
    pub a: f64,
    /// `g (Ē - v) m_∞'(v)`.
    pub k: f64,
}

/// `b`, `a`, `k` at every stored sample of neuron `i`.
pub fn linearized_gains(model: &NeuronModel, traj: &OdeTrajectory, neuron: usize, g_coup: f64) -> Vec<ErrorGains> {
    let (eps, kappa) = (traj.info.eps, traj.info.kappa);
    let tau = |v: f64| model.tau_eps(v, eps, kappa);
    let xinf = |v: f64| model.x_inf_smoothed(v, kappa);
    let h = 1e-6;
    traj.times
        .iter()
        .zip(&traj.x[neuron])
        .zip(&traj.v[neuron])
        .map(|((&t, &x), &v)| {
            let ta = tau(v);
            let dtau = (tau(v + h) - tau(v - h)) / (2.0 * h);
            let dxinf = (xinf(v + h) - xinf(v - h)) / (2.0 * h);
            let m = model.activation.value(v);
            let dm = model.activation.derivative(v);
            ErrorGains {
                time: t,
                b: (dtau * (x - xinf(v)) + ta * dxinf) / (ta * ta),
                a: model.df_dv(x, v, 0.0) - g_coup * m,
                k: g_coup * (model.reversal.excitatory - v) * dm,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests;
