//! Single-neuron model: vector field, nullcline geometry, slow and fast
//! branch flows, travel-time tables and assumption checks.

mod assumptions;
mod flow;
mod geometry;
mod travel;

use alloc::format;
use alloc::vec::Vec;

use crate::numeric::{logistic, sech2, tanh};
use crate::{Error, Result};

pub use assumptions::{
    check_assumptions, check_family, n_shape_kernel, AssumptionReport, Check, FamilyReport,
    ParameterRanges,
};
pub use flow::{fast_flow, slow_flow, FastFlow, Flow, SlowFlow, DEFAULT_H_MIN};
pub use geometry::{compute_geometry, geometry_between, knee_sensitivity, Branch, Knee, NullclineGeometry};
pub use travel::{advance, travel_time, TravelDirection, TravelTimeTable, DEFAULT_TOLERANCE};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Maximal conductances `(g_L, g_Ca, g_K)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Conductances {
    pub leak: f64,
    pub calcium: f64,
    pub potassium: f64,
}

impl Conductances {
    pub const fn new(leak: f64, calcium: f64, potassium: f64) -> Self {
        Self {
            leak,
            calcium,
            potassium,
        }
    }
}

/// Reversal potentials, including the excitatory synaptic reversal `Ē`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ReversalPotentials {
    pub leak: f64,
    pub calcium: f64,
    pub potassium: f64,
    pub excitatory: f64,
}

impl Default for ReversalPotentials {
    fn default() -> Self {
        Self {
            leak: -0.4,
            calcium: 1.0,
            potassium: -0.7,
            excitatory: 1.0,
        }
    }
}

/// A non-decreasing gating curve with range in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Activation {
    /// `1/2 + 1/2 tanh((v - center) / width)`.
    Tanh { center: f64, width: f64 },
    /// Heaviside step: 1 for `v >= at`, 0 below.
    Step { at: f64 },
}

impl Activation {
    pub fn value(&self, v: f64) -> f64 {
        match *self {
            Activation::Tanh { center, width } => 0.5 + 0.5 * tanh((v - center) / width),
            Activation::Step { at } => {
                if v >= at {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Derivative in `v`; zero away from the jump of a step.
    pub fn derivative(&self, v: f64) -> f64 {
        match *self {
            Activation::Tanh { center, width } => 0.5 / width * sech2((v - center) / width),
            Activation::Step { .. } => 0.0,
        }
    }

    /// Value with steps replaced by a logistic of width `kappa`.
    pub fn smoothed(&self, v: f64, kappa: f64) -> f64 {
        match *self {
            Activation::Step { at } if kappa > 0.0 => logistic((v - at) / kappa),
            _ => self.value(v),
        }
    }

    pub fn jump(&self) -> Option<f64> {
        match *self {
            Activation::Step { at } => Some(at),
            Activation::Tanh { .. } => None,
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        let ok = match *self {
            Activation::Tanh { center, width } => center.is_finite() && width > 0.0,
            Activation::Step { at } => at.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("{name}: malformed activation {self:?}")))
        }
    }
}

/// Time constant `τ_ε(v)` of the gating variable.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TimeConstantProfile {
    /// Three-timescale profile:
    /// `ε^q` for `v >= threshold`, `ε^q + fast` on `[lower, threshold)`,
    /// `ε^q + slow` below `lower`. The threshold is the model's.
    Piecewise {
        q: f64,
        fast: f64,
        slow: f64,
        lower: f64,
    },
    /// `1 / cosh((v - center) / width)`, independent of ε.
    InverseCosh { center: f64, width: f64 },
}

impl TimeConstantProfile {
    pub fn is_three_timescale(&self) -> bool {
        matches!(self, TimeConstantProfile::Piecewise { .. })
    }

    /// Scale every time constant by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        match *self {
            TimeConstantProfile::Piecewise {
                q,
                fast,
                slow,
                lower,
            } => TimeConstantProfile::Piecewise {
                q,
                fast: fast * factor,
                slow: slow * factor,
                lower,
            },
            TimeConstantProfile::InverseCosh { center, width } => {
                TimeConstantProfile::InverseCosh { center, width }
            }
        }
    }
}

/// The rectangle `[x_lo, x_hi] × [v_lo, v_hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct DomainBox {
    pub x_lo: f64,
    pub x_hi: f64,
    pub v_lo: f64,
    pub v_hi: f64,
}

impl Default for DomainBox {
    fn default() -> Self {
        Self {
            x_lo: 0.0,
            x_hi: 1.0,
            v_lo: -0.7,
            v_hi: 1.0,
        }
    }
}

impl DomainBox {
    pub fn contains(&self, x: f64, v: f64, tol: f64) -> bool {
        x >= self.x_lo - tol && x <= self.x_hi + tol && v >= self.v_lo - tol && v <= self.v_hi + tol
    }

    /// Largest distance by which `(x, v)` lies outside the box.
    pub fn excursion(&self, x: f64, v: f64) -> f64 {
        let dx = (self.x_lo - x).max(x - self.x_hi).max(0.0);
        let dv = (self.v_lo - v).max(v - self.v_hi).max(0.0);
        dx.max(dv)
    }
}

/// Fraction of the voltage range by which [`NeuronModel::eval_f`] may
/// leave the box (needed to probe the field just outside `∂𝒟`).
pub const VOLTAGE_COLLAR: f64 = 0.05;

/// One conductance-based neuron
/// `f(x, v) = g_L(E_L - v) + g_Ca m_∞(v)(E_Ca - v) + g_K x (E_K - v) + I`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct NeuronModel {
    pub conductances: Conductances,
    pub reversal: ReversalPotentials,
    pub applied_current: f64,
    /// Calcium activation `m_∞`.
    pub activation: Activation,
    /// Gating nullcline `x_∞`.
    pub gating: Activation,
    pub time_constant: TimeConstantProfile,
    pub threshold: f64,
    pub margin: f64,
    pub domain: DomainBox,
    /// Logistic width for step nonlinearities in ODE mode.
    pub smoothing: f64,
}

impl NeuronModel {
    /// Two-timescale Morris-Lecar cell with smooth `x_∞` and `τ(v)`.
    pub fn morris_lecar(conductances: Conductances) -> Self {
        Self {
            conductances,
            reversal: ReversalPotentials::default(),
            applied_current: 0.4,
            activation: Activation::Tanh {
                center: 0.0,
                width: 0.15,
            },
            gating: Activation::Tanh {
                center: -0.1,
                width: 0.145,
            },
            time_constant: TimeConstantProfile::InverseCosh {
                center: -0.1,
                width: 0.29,
            },
            threshold: 0.0,
            margin: 0.67,
            domain: DomainBox::default(),
            smoothing: 1e-3,
        }
    }

    /// Three-timescale Morris-Lecar cell with step `x_∞` at 0 and the
    /// piecewise time constant (`τ̄ = 5`, `q = 1/2`, breakpoint −0.258,
    /// threshold 0.01, margin 0.36).
    pub fn three_timescale(conductances: Conductances, fast_tau: f64) -> Self {
        Self {
            conductances,
            reversal: ReversalPotentials::default(),
            applied_current: 0.4,
            activation: Activation::Tanh {
                center: 0.0,
                width: 0.15,
            },
            gating: Activation::Step { at: 0.0 },
            time_constant: TimeConstantProfile::Piecewise {
                q: 0.5,
                fast: fast_tau,
                slow: 5.0,
                lower: -0.258,
            },
            threshold: 0.01,
            margin: 0.36,
            domain: DomainBox::default(),
            smoothing: 1e-3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.conductances;
        let r = &self.reversal;
        let d = &self.domain;
        let finite = [
            c.leak,
            c.calcium,
            c.potassium,
            r.leak,
            r.calcium,
            r.potassium,
            r.excitatory,
            self.applied_current,
            self.threshold,
            self.margin,
            self.smoothing,
            d.x_lo,
            d.x_hi,
            d.v_lo,
            d.v_hi,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite model parameter".into()));
        }
        if c.leak < 0.0 || c.calcium < 0.0 || c.potassium <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "conductances must be non-negative with g_K > 0: {c:?}"
            )));
        }
        if !(d.x_lo < d.x_hi && d.v_lo < d.v_hi) {
            return Err(Error::InvalidInput(format!("empty domain box {d:?}")));
        }
        if d.x_lo < 0.0 || d.x_hi > 1.0 {
            return Err(Error::InvalidInput(format!(
                "gating range of the box must lie in [0, 1]: {d:?}"
            )));
        }
        if r.excitatory < d.v_hi {
            return Err(Error::InvalidInput(format!(
                "excitatory reversal {} is below v_hi = {}",
                r.excitatory, d.v_hi
            )));
        }
        if self.margin < 0.0 || self.smoothing < 0.0 {
            return Err(Error::InvalidInput(
                "margin and smoothing must be non-negative".into(),
            ));
        }
        self.activation.validate("activation")?;
        self.gating.validate("gating")?;
        match self.time_constant {
            TimeConstantProfile::Piecewise {
                q,
                fast,
                slow,
                lower,
            } => {
                if !(q > 0.0 && q < 1.0 && fast > 0.0 && slow > 0.0 && lower < self.threshold) {
                    return Err(Error::InvalidInput(format!(
                        "malformed piecewise time constant {:?}",
                        self.time_constant
                    )));
                }
            }
            TimeConstantProfile::InverseCosh { center, width } => {
                if !(center.is_finite() && width > 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "malformed time constant {:?}",
                        self.time_constant
                    )));
                }
            }
        }
        Ok(())
    }

    /// `f(x, v)` without the synaptic term.
    pub fn f(&self, x: f64, v: f64) -> f64 {
        self.f_level(x, v, 0.0)
    }

    /// `f^m(x, v) = f(x, v) + (Ē - v) m`, exact nonlinearities.
    pub fn f_level(&self, x: f64, v: f64, m: f64) -> f64 {
        let c = &self.conductances;
        let r = &self.reversal;
        c.leak * (r.leak - v)
            + c.calcium * self.activation.value(v) * (r.calcium - v)
            + c.potassium * x * (r.potassium - v)
            + self.applied_current
            + (r.excitatory - v) * m
    }

    /// Checked `f^m(x, v)`: `x` must lie in the box and `v` in the box
    /// widened by [`VOLTAGE_COLLAR`] of its height.
    pub fn eval_f(&self, x: f64, v: f64, m: f64) -> Result<f64> {
        let d = &self.domain;
        if !(x >= d.x_lo && x <= d.x_hi) {
            return Err(Error::OutOfDomain {
                quantity: "x",
                value: x,
            });
        }
        let collar = VOLTAGE_COLLAR * (d.v_hi - d.v_lo);
        if !(v >= d.v_lo - collar && v <= d.v_hi + collar) {
            return Err(Error::OutOfDomain {
                quantity: "v",
                value: v,
            });
        }
        if !(m >= 0.0 && m.is_finite()) {
            return Err(Error::InvalidInput(format!("perturbation level {m} < 0")));
        }
        Ok(self.f_level(x, v, m))
    }

    /// `∂f/∂x = g_K (E_K - v)`.
    pub fn df_dx(&self, v: f64) -> f64 {
        self.conductances.potassium * (self.reversal.potassium - v)
    }

    /// `∂f^m/∂v`.
    pub fn df_dv(&self, x: f64, v: f64, m: f64) -> f64 {
        let c = &self.conductances;
        let r = &self.reversal;
        -c.leak
            + c.calcium
                * (self.activation.derivative(v) * (r.calcium - v) - self.activation.value(v))
            - c.potassium * x
            - m
    }

    /// Closed-form root `x^m(v)` of `f^m(·, v) = 0`.
    pub fn nullcline_root(&self, m: f64, v: f64) -> Result<f64> {
        if !(v > self.reversal.potassium) {
            return Err(Error::Geometry(format!(
                "x^m(v) is undefined at v = {v} <= E_K = {}",
                self.reversal.potassium
            )));
        }
        if !(m >= 0.0 && m.is_finite()) {
            return Err(Error::InvalidInput(format!("perturbation level {m} < 0")));
        }
        Ok(self.nullcline_x(m, v))
    }

    /// Unchecked `x^m(v)`; any real `m` is accepted.
    pub(crate) fn nullcline_x(&self, m: f64, v: f64) -> f64 {
        -self.f_level(0.0, v, m) / self.df_dx(v)
    }

    /// `d x^m / dv`, analytic.
    pub(crate) fn nullcline_slope(&self, m: f64, v: f64) -> f64 {
        let num = self.f_level(0.0, v, m);
        let dnum = self.df_dv(0.0, v, m);
        let den = self.conductances.potassium * (v - self.reversal.potassium);
        (dnum * den - num * self.conductances.potassium) / (den * den)
    }

    /// `∂x^m/∂m = (Ē - v) / (g_K (v - E_K))`.
    pub fn nullcline_level_sensitivity(&self, v: f64) -> f64 {
        (self.reversal.excitatory - v) / -self.df_dx(v)
    }

    /// Exact `x_∞(v)`.
    pub fn x_inf(&self, v: f64) -> f64 {
        self.gating.value(v)
    }

    /// Singular limit `τ̄(v)` of the time constant; only defined (and
    /// positive) below threshold for three-timescale profiles.
    pub fn slow_time_constant(&self, v: f64) -> Result<f64> {
        match self.time_constant {
            TimeConstantProfile::Piecewise {
                fast, slow, lower, ..
            } => {
                if v >= self.threshold {
                    Err(Error::Geometry(format!(
                        "slow time constant requested at v = {v} above threshold"
                    )))
                } else if v >= lower {
                    Ok(fast)
                } else {
                    Ok(slow)
                }
            }
            TimeConstantProfile::InverseCosh { center, width } => {
                Ok(1.0 / libm::cosh((v - center) / width))
            }
        }
    }

    /// Singular limit `λ̄(v) = lim ε^q / τ_ε(v)`.
    pub fn fast_rate_factor(&self, v: f64) -> f64 {
        match self.time_constant {
            TimeConstantProfile::Piecewise { .. } => {
                if v >= self.threshold {
                    1.0
                } else {
                    0.0
                }
            }
            TimeConstantProfile::InverseCosh { .. } => 0.0,
        }
    }

    /// `τ_ε(v)` with steps smoothed by `kappa` (exact when `kappa == 0`).
    pub fn tau_eps(&self, v: f64, eps: f64, kappa: f64) -> f64 {
        match self.time_constant {
            TimeConstantProfile::Piecewise {
                q,
                fast,
                slow,
                lower,
            } => {
                let base = libm::pow(eps, q);
                let (below_th, below_lo) = if kappa > 0.0 {
                    (
                        logistic((self.threshold - v) / kappa),
                        logistic((lower - v) / kappa),
                    )
                } else {
                    (
                        if v < self.threshold { 1.0 } else { 0.0 },
                        if v < lower { 1.0 } else { 0.0 },
                    )
                };
                base + fast * (below_th - below_lo) + slow * below_lo
            }
            TimeConstantProfile::InverseCosh { center, width } => {
                1.0 / libm::cosh((v - center) / width)
            }
        }
    }

    /// `x_∞(v)` with steps smoothed by `kappa`.
    pub fn x_inf_smoothed(&self, v: f64, kappa: f64) -> f64 {
        self.gating.smoothed(v, kappa)
    }

    /// Voltages at which `x_∞` or the time-constant limit jumps.
    pub fn voltage_breakpoints(&self) -> Vec<f64> {
        let mut out = Vec::new();
        if let Some(at) = self.gating.jump() {
            out.push(at);
        }
        if let TimeConstantProfile::Piecewise { lower, .. } = self.time_constant {
            out.push(lower);
            out.push(self.threshold);
        }
        out
    }

    /// Lowest voltage at which the nullcline is defined inside the box.
    pub(crate) fn v_floor(&self) -> f64 {
        let ek = self.reversal.potassium;
        if self.domain.v_lo > ek {
            self.domain.v_lo
        } else {
            ek + 1e-9 * (self.domain.v_hi - ek)
        }
    }
}
