//! Singular-limit (ε → 0) network: decoupled slow drift to the left knees,
//! instantaneous chain-reaction firing, fast flow along the upper branches
//! with fast threshold modulation, and the return map.

use alloc::format;
use alloc::vec::Vec;

use crate::network::CouplingGraph;
use crate::neuron::{
    advance, compute_geometry, geometry_between, travel_time, FastFlow, NeuronModel, NullclineGeometry, SlowFlow,
    TravelDirection, TravelTimeTable, DEFAULT_TOLERANCE,
};
use crate::numeric::abs;
use crate::{Error, Result};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Engine tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IfOptions {
    /// Quadrature tolerance of the travel-time tables.
    pub tolerance: f64,
    /// Tie tolerance as a fraction of the shortest decoupled period.
    pub tie_fraction: f64,
}

impl Default for IfOptions {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
            tie_fraction: 1e-12,
        }
    }
}

/// One neuron prepared for the event engine.
#[derive(Debug, Clone)]
pub struct IfNeuron {
    pub model: NeuronModel,
    /// Geometry at level 0.
    pub base: NullclineGeometry,
    /// Geometry at the margin `M`.
    pub top: NullclineGeometry,
    slow: TravelTimeTable<SlowFlow>,
}

impl IfNeuron {
    pub fn new(model: NeuronModel, tolerance: f64) -> Result<Self> {
        model.validate()?;
        if !model.time_constant.is_three_timescale() {
            return Err(Error::InvalidInput(
                "the event engine needs a three-timescale time-constant profile".into(),
            ));
        }
        let base = compute_geometry(&model, 0.0)?;
        let top = compute_geometry(&model, model.margin)?;
        if !(top.left_knee.x < base.right_knee.x) {
            return Err(Error::Geometry(format!(
                "left knee at the margin ({}) is not below the right knee at 0 ({})",
                top.left_knee.x, base.right_knee.x
            )));
        }
        let flow = SlowFlow::new(model.clone(), base, top.right_knee.x);
        let slow = TravelTimeTable::build(flow, TravelDirection::Slow, tolerance)?;
        Ok(Self {
            model,
            base,
            top,
            slow,
        })
    }

    /// `τ(x)`: slow travel time from `x` to the left knee.
    pub fn phase(&self, x: f64) -> Result<f64> {
        self.slow.time(x)
    }

    /// `τ⁻¹(t)`.
    pub fn position(&self, t: f64) -> Result<f64> {
        self.slow.position(t)
    }

    /// Decoupled period `τ(x̄(0))`.
    pub fn period(&self) -> Result<f64> {
        self.phase(self.base.right_knee.x)
    }

    pub fn slow_table(&self) -> &TravelTimeTable<SlowFlow> {
        &self.slow
    }

    /// Slow interval `[x̲(0), x̄(M)]`.
    pub fn slow_interval(&self) -> (f64, f64) {
        (self.base.left_knee.x, self.top.right_knee.x)
    }

    /// Geometry at level `m`, reusing the stored endpoints.
    pub fn geometry(&self, m: f64) -> Result<NullclineGeometry> {
        if m >= 0.0 && m <= self.model.margin {
            geometry_between(&self.model, m, &self.base, &self.top)
        } else {
            compute_geometry(&self.model, m)
        }
    }

    /// `x̲(m)`.
    pub fn left_knee(&self, m: f64) -> Result<f64> {
        Ok(self.geometry(m)?.left_knee.x)
    }

    /// `x̄(m)`.
    pub fn right_knee(&self, m: f64) -> Result<f64> {
        Ok(self.geometry(m)?.right_knee.x)
    }

    /// Fast flow `H^m` on `[x̲(0), x̄(m)]`.
    pub fn fast_flow(&self, m: f64) -> Result<FastFlow> {
        Ok(FastFlow::new(
            self.model.clone(),
            self.geometry(m)?,
            self.base.left_knee.x,
        ))
    }
}

/// A state on the slow manifold.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct IfState {
    pub x: Vec<f64>,
    pub time: f64,
    pub cycle: usize,
}

/// A jump point together with its chain reaction.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SpikePoint {
    pub x: Vec<f64>,
    /// Layer 0 holds the knee-resident roots.
    pub layers: Vec<Vec<usize>>,
    pub firing: Vec<bool>,
    /// `m_i = g_i Σ_{j ∈ 𝒩_i ∩ 𝒩^ℱ} α_ij` for every neuron.
    pub levels: Vec<f64>,
    /// Tree edges `(k, j)`: `k` in the layer just before `j`'s.
    pub edges: Vec<(usize, usize)>,
    /// `d̄_j`: in-weight from earlier layers when `j` was recruited (0 for
    /// roots and non-firing neurons).
    pub recruiting_weight: Vec<f64>,
    /// Synapses were active; otherwise every level is 0.
    pub coupled: bool,
}

impl SpikePoint {
    pub fn firing_set(&self) -> Vec<usize> {
        (0..self.firing.len()).filter(|&i| self.firing[i]).collect()
    }

    pub fn all_fired(&self) -> bool {
        self.firing.iter().all(|&f| f)
    }

    pub fn roots(&self) -> &[usize] {
        &self.layers[0]
    }
}

/// Result of the spiking map.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeOutcome {
    pub x: Vec<f64>,
    /// Duration of the fast phase in `ε^q` units.
    pub fast_time: f64,
    /// Number of fast-flow segments between re-levelings.
    pub relevels: usize,
}

/// One emitted spike.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct RasterEvent {
    pub neuron: usize,
    pub cycle: usize,
    pub time: f64,
}

/// Output of [`IfNetwork::simulate`].
#[derive(Debug, Clone, PartialEq)]
pub struct IfRun {
    pub raster: Vec<RasterEvent>,
    /// The state at each jump point, before firing.
    pub jump_points: Vec<IfState>,
    /// Fast-phase duration of each cycle, `ε^q` units.
    pub fast_times: Vec<f64>,
    pub final_state: IfState,
}

/// Network of [`IfNeuron`]s on a coupling graph.
#[derive(Debug, Clone)]
pub struct IfNetwork {
    neurons: Vec<IfNeuron>,
    graph: CouplingGraph,
    tie_tol: f64,
    tolerance: f64,
}

impl IfNetwork {
    pub fn new(models: Vec<NeuronModel>, graph: CouplingGraph, options: IfOptions) -> Result<Self> {
        if models.len() != graph.len() {
            return Err(Error::InvalidInput(format!(
                "{} models for a graph on {} neurons",
                models.len(),
                graph.len()
            )));
        }
        if models.is_empty() {
            return Err(Error::InvalidInput("empty network".into()));
        }
        for (i, m) in models.iter().enumerate() {
            let level = graph.gain(i) * graph.in_degree(i);
            if level > m.margin * (1.0 + 1e-12) {
                return Err(Error::InvalidInput(format!(
                    "neuron {i}: coupling g d = {level} exceeds its margin {}",
                    m.margin
                )));
            }
        }
        let neurons = models
            .into_iter()
            .map(|m| IfNeuron::new(m, options.tolerance))
            .collect::<Result<Vec<_>>>()?;
        let mut shortest = f64::INFINITY;
        for n in &neurons {
            shortest = shortest.min(n.period()?);
        }
        Ok(Self {
            neurons,
            graph,
            tie_tol: options.tie_fraction * shortest,
            tolerance: options.tolerance,
        })
    }

    pub fn len(&self) -> usize {
        self.neurons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neurons.is_empty()
    }

    pub fn neuron(&self, i: usize) -> &IfNeuron {
        &self.neurons[i]
    }

    pub fn neurons(&self) -> &[IfNeuron] {
        &self.neurons
    }

    pub fn graph(&self) -> &CouplingGraph {
        &self.graph
    }

    pub fn tie_tolerance(&self) -> f64 {
        self.tie_tol
    }

    /// Phase vector `(τ_i(x_i))_i`.
    pub fn phases(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        x.iter()
            .zip(&self.neurons)
            .map(|(&xi, n)| n.phase(xi))
            .collect()
    }

    /// State with the given phases.
    pub fn from_phases(&self, t: &[f64]) -> Result<Vec<f64>> {
        self.check_len(t)?;
        t.iter()
            .zip(&self.neurons)
            .map(|(&ti, n)| n.position(ti))
            .collect()
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.len() {
            return Err(Error::InvalidInput(format!(
                "state of length {} for {} neurons",
                x.len(),
                self.len()
            )));
        }
        Ok(())
    }

    /// Drift every neuron along its slow branch until the first one reaches
    /// its left knee; returns the jump point and the elapsed time.
    pub fn advance_to_jump(&self, x: &[f64]) -> Result<(Vec<f64>, f64)> {
        let tau = self.phases(x)?;
        let dt = tau.iter().copied().fold(f64::INFINITY, f64::min);
        let out = tau
            .iter()
            .zip(&self.neurons)
            .zip(x)
            .map(|((&t, n), &xi)| {
                let rest = t - dt;
                if rest <= self.tie_tol {
                    Ok(n.base.left_knee.x)
                } else if dt == 0.0 {
                    Ok(xi)
                } else {
                    n.position(rest)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((out, dt))
    }

    /// Knee-resident neurons of a jump point.
    pub fn roots(&self, x: &[f64]) -> Result<Vec<usize>> {
        let tau = self.phases(x)?;
        Ok((0..self.len()).filter(|&i| tau[i] <= self.tie_tol).collect())
    }

    /// Chain reaction at a jump point. With `coupled` false only the roots
    /// fire.
    pub fn absorb(&self, x: &[f64], coupled: bool) -> Result<SpikePoint> {
        let n = self.len();
        let roots = self.roots(x)?;
        if roots.is_empty() {
            return Err(Error::InvalidInput(
                "absorb needs at least one neuron at its left knee".into(),
            ));
        }
        let mut firing = alloc::vec![false; n];
        for &r in &roots {
            firing[r] = true;
        }
        let mut layers = alloc::vec![roots];
        let mut edges = Vec::new();
        let mut recruiting_weight = alloc::vec![0.0; n];
        while coupled {
            let last = layers.last().expect("nonempty");
            let mut next = Vec::new();
            for j in 0..n {
                if firing[j] {
                    continue;
                }
                let nj = &self.neurons[j];
                if x[j] >= nj.top.left_knee.x {
                    continue;
                }
                let dbar: f64 = self
                    .graph
                    .incoming(j)
                    .filter(|e| firing[e.source])
                    .map(|e| e.weight)
                    .sum();
                if dbar > 0.0 && x[j] < nj.left_knee(self.graph.gain(j) * dbar)? {
                    next.push(j);
                    recruiting_weight[j] = dbar;
                    edges.extend(
                        self.graph
                            .incoming(j)
                            .filter(|e| last.contains(&e.source))
                            .map(|e| (e.source, j)),
                    );
                }
            }
            if next.is_empty() {
                break;
            }
            for &j in &next {
                firing[j] = true;
            }
            layers.push(next);
        }
        let levels = (0..n)
            .map(|i| if coupled { self.level(i, &firing) } else { 0.0 })
            .collect();
        Ok(SpikePoint {
            x: x.to_vec(),
            layers,
            firing,
            levels,
            edges,
            recruiting_weight,
            coupled,
        })
    }

    fn level(&self, i: usize, active: &[bool]) -> f64 {
        self.graph.gain(i)
            * self
                .graph
                .incoming(i)
                .filter(|e| active[e.source])
                .map(|e| e.weight)
                .sum::<f64>()
    }

    /// Spiking map `X⁺`: firing neurons flow right along their upper branches
    /// at their current levels; whoever reaches its right knee drops back to
    /// the lower branch (same `x`), lowering its targets' levels.
    pub fn spike_map(&self, point: &SpikePoint) -> Result<SpikeOutcome> {
        let n = self.len();
        let mut x = point.x.clone();
        let mut active = point.firing.clone();
        let mut fast_time = 0.0;
        let mut relevels = 0;
        loop {
            let mut knees = alloc::vec![f64::NAN; n];
            let mut levels = alloc::vec![0.0; n];
            loop {
                let mut dropped = false;
                for i in 0..n {
                    if active[i] {
                        levels[i] = if point.coupled { self.level(i, &active) } else { 0.0 };
                        knees[i] = self.neurons[i].right_knee(levels[i])?;
                    }
                }
                let snapshot = active.clone();
                for i in 0..n {
                    if snapshot[i] && x[i] >= knees[i] - 1e-13 {
                        active[i] = false;
                        dropped = true;
                    }
                }
                if !dropped {
                    break;
                }
            }
            if !active.iter().any(|&a| a) {
                break;
            }
            relevels += 1;
            if relevels > n {
                return Err(Error::InvariantViolation(format!(
                    "spiking map needed more than {n} fast segments"
                )));
            }
            let mut flows = Vec::with_capacity(n);
            let mut times = alloc::vec![f64::INFINITY; n];
            for i in 0..n {
                if active[i] {
                    let flow = self.neurons[i].fast_flow(levels[i])?;
                    times[i] = travel_time(&flow, x[i], knees[i], self.tolerance * 1e-3)?;
                    flows.push(Some(flow));
                } else {
                    flows.push(None);
                }
            }
            let tmin = times.iter().copied().fold(f64::INFINITY, f64::min);
            let tie = 1e-12 * (1.0 + tmin);
            fast_time += tmin;
            for i in 0..n {
                if let Some(flow) = &flows[i] {
                    x[i] = if times[i] - tmin <= tie {
                        knees[i]
                    } else {
                        advance(flow, x[i], tmin, self.tolerance * 1e-3)?.min(knees[i])
                    };
                }
            }
        }
        Ok(SpikeOutcome {
            x,
            fast_time,
            relevels,
        })
    }

    /// Return map `X⁺⁺`: slow drift from a post-spike state to the next
    /// jump point.
    pub fn return_map(&self, x_plus: &[f64]) -> Result<Vec<f64>> {
        Ok(self.advance_to_jump(x_plus)?.0)
    }

    /// One full cycle `R = X⁺⁺ ∘ X⁺` from a jump point.
    pub fn cycle_map(&self, x: &[f64]) -> Result<Vec<f64>> {
        let point = self.absorb(x, true)?;
        let out = self.spike_map(&point)?;
        self.return_map(&out.x)
    }

    /// Event-driven run for `n_cycles` jump events; coupling is off before
    /// `coupling_on_time`.
    pub fn simulate(&self, init: &[f64], n_cycles: usize, coupling_on_time: f64) -> Result<IfRun> {
        self.check_len(init)?;
        for (i, (&xi, nrn)) in init.iter().zip(&self.neurons).enumerate() {
            let (lo, hi) = nrn.slow_interval();
            if !(xi >= lo - 1e-12 && xi <= hi + 1e-12) {
                return Err(Error::InvalidInput(format!(
                    "initial x_{i} = {xi} outside the slow interval [{lo}, {hi}]"
                )));
            }
        }
        let mut state = IfState {
            x: init.iter().zip(&self.neurons).map(|(&xi, n)| {
                let (lo, hi) = n.slow_interval();
                xi.clamp(lo, hi)
            }).collect(),
            time: 0.0,
            cycle: 0,
        };
        let mut raster = Vec::new();
        let mut jump_points = Vec::with_capacity(n_cycles);
        let mut fast_times = Vec::with_capacity(n_cycles);
        for cycle in 0..n_cycles {
            let (x, dt) = self.advance_to_jump(&state.x)?;
            let time = state.time + dt;
            jump_points.push(IfState {
                x: x.clone(),
                time,
                cycle,
            });
            let point = self.absorb(&x, time >= coupling_on_time)?;
            for i in point.firing_set() {
                raster.push(RasterEvent {
                    neuron: i,
                    cycle,
                    time,
                });
            }
            let out = self.spike_map(&point)?;
            fast_times.push(out.fast_time);
            state = IfState {
                x: out.x,
                time,
                cycle: cycle + 1,
            };
        }
        Ok(IfRun {
            raster,
            jump_points,
            fast_times,
            final_state: state,
        })
    }
}

/// Largest absolute coordinate difference.
pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| abs(p - q)).fold(0.0, f64::max)
}
