//! JSON experiment configuration. The schema is documented in
//! `docs/config.md`.

use serde::{Deserialize, Serialize};
use synsync_core::network::Sigmoid;
use synsync_core::odesim::CouplingMode;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Ode,
    If,
    Check,
    Analyze,
    ReproduceFig1,
    ReproduceFig4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Step gating with the piecewise three-level time constant.
    #[default]
    ThreeTimescale,
    /// Smooth gating and `1/cosh` time constant.
    MorrisLecar,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// `τ̲`, the time constant just below threshold.
    pub strip_tau: Option<f64>,
    /// `τ̄`, the time constant far below threshold.
    pub slow_tau: Option<f64>,
    pub q: Option<f64>,
    pub margin: Option<f64>,
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeSpec {
    pub leak: [f64; 2],
    pub calcium: [f64; 2],
    pub potassium: [f64; 2],
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Population {
    /// `[g_L, g_Ca, g_K]` per neuron.
    Explicit(Vec<[f64; 3]>),
    /// Uniform draws from the seeded stream.
    Ranges(RangeSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    /// `j → j+1, …, j+neighbors (mod N)`.
    #[default]
    Ring,
    AllToAll,
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphSpec {
    pub kind: GraphKind,
    pub neighbors: Option<usize>,
    pub weight: f64,
    /// Common gain `g_i`.
    pub gain: Option<f64>,
    /// Per-neuron gains; overrides `gain`.
    pub gains: Option<Vec<f64>>,
    /// `[source, target, weight]` for `explicit` graphs.
    pub edges: Option<Vec<(usize, usize, f64)>>,
    /// Defaults to a step at the model threshold.
    pub sigmoid: Option<Sigmoid>,
}

impl Default for GraphSpec {
    fn default() -> Self {
        Self {
            kind: GraphKind::Ring,
            neighbors: None,
            weight: 1.0,
            gain: None,
            gains: None,
            edges: None,
            sigmoid: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Outputs {
    pub raster: String,
    pub report: String,
    /// Trajectory CSV of ODE runs; not written when absent.
    pub trajectory: Option<String>,
    /// Keep every `stride`-th integration step in the trajectory.
    pub stride: usize,
}

impl Default for Outputs {
    fn default() -> Self {
        Self {
            raster: "raster.csv".into(),
            report: "report.json".into(),
            trajectory: None,
            stride: 10,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub mode: Option<Mode>,
    pub seed: u64,
    pub population: Option<Population>,
    pub model: ModelSpec,
    pub graph: Option<GraphSpec>,
    pub eps: Option<f64>,
    pub kappa: Option<f64>,
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub n_cycles: Option<usize>,
    pub coupling_on_time: Option<f64>,
    pub coupling: Option<CouplingMode>,
    /// Gain of the diffusive run in `reproduce-fig1`; defaults to the peak
    /// linearized gain `g (Ē - v) S'(v)` of the synaptic run.
    pub diffusive_gain: Option<f64>,
    /// Per neuron `[x]` (integrate-and-fire) or `[x, v]` (ODE); drawn from
    /// the seeded stream when absent.
    pub initial: Option<Vec<Vec<f64>>>,
    /// `τ̲` values swept by `reproduce-fig4`.
    pub strip_taus: Option<Vec<f64>>,
    pub outputs: Outputs,
}

/// `a.b[2].c`, without the markers serde_ignored adds for options and
/// newtypes.
fn dotted(path: &serde_ignored::Path) -> String {
    use serde_ignored::Path;
    match path {
        Path::Root => String::new(),
        Path::Seq { parent, index } => format!("{}[{index}]", dotted(parent)),
        Path::Map { parent, key } => {
            let p = dotted(parent);
            if p.is_empty() {
                key.clone()
            } else {
                format!("{p}.{key}")
            }
        }
        Path::Some { parent } | Path::NewtypeStruct { parent } | Path::NewtypeVariant { parent } => dotted(parent),
    }
}

impl ExperimentConfig {
    /// Parse a JSON document, rejecting every unknown key at once.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let mut unknown = Vec::new();
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_ignored::deserialize(de, |path| unknown.push(dotted(&path)))
            .map_err(|e| CliError::Config(e.to_string()))?;
        if !unknown.is_empty() {
            return Err(CliError::Config(format!("unknown keys: {}", unknown.join(", "))));
        }
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Fields every non-preset mode needs.
    pub fn require_system(&self) -> Result<(&Population, &GraphSpec), CliError> {
        let mut missing = Vec::new();
        if self.population.is_none() {
            missing.push("population");
        }
        if self.graph.is_none() {
            missing.push("graph");
        }
        match (&self.population, &self.graph) {
            (Some(p), Some(g)) => Ok((p, g)),
            _ => Err(CliError::Config(format!("missing required fields: {}", missing.join(", ")))),
        }
    }
}
