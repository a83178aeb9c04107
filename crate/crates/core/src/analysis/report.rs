//! One-shot analysis of an integrate-and-fire network.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::constants::{check_monotonicity, contraction_constants, ContractionConstants, MonotonicityVerdict};
use super::existence::{existence_condition, fast_roots, weak_limit, ExistenceVerdict, WeakLimitVerdict};
use super::fixed_point::{find_fixed_point, FixedPoint};
use super::global::{global_conditions, GlobalOptions, GlobalVerdicts};
use crate::ifsim::IfNetwork;
use crate::network::{strong_connectivity, validate_coupling, Connectivity, CouplingReport};
use crate::neuron::{check_assumptions, AssumptionReport};
use crate::Result;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct AnalysisOptions {
    pub assumption_grid: usize,
    pub max_iter: usize,
    pub tolerance: f64,
    /// Start of the fixed-point search; every neuron at its left knee when
    /// absent.
    pub start: Option<Vec<f64>>,
    pub global: GlobalOptions,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            assumption_grid: 200,
            max_iter: 2000,
            tolerance: 1e-10,
            start: None,
            global: GlobalOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct AnalysisReport {
    pub assumptions: Vec<AssumptionReport>,
    pub coupling: CouplingReport,
    pub connectivity: Connectivity,
    pub constants: ContractionConstants,
    pub monotonicity: MonotonicityVerdict,
    pub fast_roots: Vec<usize>,
    /// One verdict per root in `fast_roots`.
    pub existence: Vec<ExistenceVerdict>,
    pub existence_holds: bool,
    pub weak_limit: Vec<WeakLimitVerdict>,
    pub fixed_point: Option<FixedPoint>,
    pub fixed_point_error: Option<String>,
    pub global: Option<GlobalVerdicts>,
}

impl AnalysisReport {
    /// Every assumption and coupling check passed.
    pub fn preconditions_hold(&self) -> bool {
        self.assumptions.iter().all(AssumptionReport::all_passed)
            && self.coupling.passed()
            && self.connectivity.strongly_connected
    }
}

pub fn analyze(net: &IfNetwork, options: &AnalysisOptions) -> Result<AnalysisReport> {
    let models: Vec<_> = net.neurons().iter().map(|n| n.model.clone()).collect();
    let assumptions = models
        .iter()
        .map(|m| check_assumptions(m, options.assumption_grid))
        .collect();
    let coupling = validate_coupling(net.graph(), &models);
    let connectivity = strong_connectivity(net.graph());
    let constants = contraction_constants(net)?;
    let monotonicity = check_monotonicity(&constants);
    let fast = fast_roots(net)?;
    let existence = fast
        .iter()
        .map(|&j| existence_condition(net, j))
        .collect::<Result<Vec<_>>>()?;
    let weak = fast
        .iter()
        .map(|&j| weak_limit(net, j))
        .collect::<Result<Vec<_>>>()?;
    let start = match &options.start {
        Some(p) => p.clone(),
        None => net.neurons().iter().map(|n| n.base.left_knee.x).collect(),
    };
    let (fixed_point, fixed_point_error) =
        match find_fixed_point(net, &start, options.max_iter, options.tolerance) {
            Ok(fp) => (Some(fp), None),
            Err(e) => (None, Some(e.to_string())),
        };
    let global = if net.len() >= 2 {
        Some(global_conditions(net, &constants, &options.global)?)
    } else {
        None
    };
    Ok(AnalysisReport {
        assumptions,
        coupling,
        connectivity,
        constants,
        monotonicity,
        existence_holds: existence.iter().all(|v| v.reached_all),
        fast_roots: fast,
        existence,
        weak_limit: weak,
        fixed_point,
        fixed_point_error,
        global,
    })
}
