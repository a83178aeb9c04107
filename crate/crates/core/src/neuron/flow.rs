//! Singular-limit flows along the lower (slow) and upper (fast) branches.

use alloc::format;
use alloc::vec::Vec;

use super::{Activation, Branch, NeuronModel, NullclineGeometry, TimeConstantProfile};
use crate::numeric::abs;
use crate::{Error, Result};

/// Default floor below which a flow rate counts as vanishing.
pub const DEFAULT_H_MIN: f64 = 1e-8;

/// A scalar flow `ẋ = rate(x)` on a closed interval, monotone in time.
pub trait Flow {
    fn rate(&self, x: f64) -> Result<f64>;
    fn interval(&self) -> (f64, f64);
    /// Points in the interval where `rate` may be discontinuous.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// With a step `x_∞` and a piecewise time constant every voltage
/// dependence is a step, so only the side of each breakpoint matters and
/// no branch inversion is needed.
fn stepwise(model: &NeuronModel) -> Option<(f64, f64, f64, f64, f64)> {
    match (model.gating, model.time_constant) {
        (Activation::Step { at }, TimeConstantProfile::Piecewise { fast, slow, lower, .. }) => {
            Some((at, lower, model.threshold, fast, slow))
        }
        _ => None,
    }
}

fn check_range(model: &NeuronModel, geo: &NullclineGeometry, branch: Branch, x: f64) -> Result<()> {
    let (lo, hi) = geo.branch_range(model, branch);
    let slack = 1e-12 * (1.0 + abs(x));
    if x >= lo - slack && x <= hi + slack {
        Ok(())
    } else {
        Err(Error::OffBranch { x, lo, hi })
    }
}

/// `h(x) = (-x + x_∞(v^sm(x))) / τ̄(v^sm(x))` at level 0.
pub fn slow_flow(model: &NeuronModel, base: &NullclineGeometry, x: f64) -> Result<f64> {
    if let Some((at, lower, threshold, fast, slow)) = stepwise(model) {
        check_range(model, base, Branch::Lower, x)?;
        let ge = |vb| base.branch_voltage_at_least(model, Branch::Lower, x, vb);
        if ge(threshold) {
            return Err(Error::Geometry(format!(
                "lower branch reaches the threshold at x = {x}"
            )));
        }
        let xinf = if ge(at) { 1.0 } else { 0.0 };
        let tau = if ge(lower) { fast } else { slow };
        return Ok((-x + xinf) / tau);
    }
    let v = base.branch_voltage(model, Branch::Lower, x)?;
    Ok((-x + model.x_inf(v)) / model.slow_time_constant(v)?)
}

/// `H^m(x) = λ̄(v^lg(m, x)) (-x + x_∞(v^lg(m, x)))` at the geometry's level.
pub fn fast_flow(model: &NeuronModel, level: &NullclineGeometry, x: f64) -> Result<f64> {
    if x > level.right_knee.x + 1e-12 * (1.0 + abs(x)) {
        return Err(Error::OffBranch {
            x,
            lo: f64::NEG_INFINITY,
            hi: level.right_knee.x,
        });
    }
    if let Some((at, _, threshold, _, _)) = stepwise(model) {
        check_range(model, level, Branch::Upper, x)?;
        let ge = |vb| level.branch_voltage_at_least(model, Branch::Upper, x, vb);
        let lambda = if ge(threshold) { 1.0 } else { 0.0 };
        let xinf = if ge(at) { 1.0 } else { 0.0 };
        return Ok(lambda * (-x + xinf));
    }
    let v = level.branch_voltage(model, Branch::Upper, x)?;
    Ok(model.fast_rate_factor(v) * (-x + model.x_inf(v)))
}

fn branch_breakpoints(
    model: &NeuronModel,
    geometry: &NullclineGeometry,
    branch: Branch,
    (a, b): (f64, f64),
) -> Vec<f64> {
    let (vlo, vhi) = geometry.branch_voltages(branch);
    let mut out: Vec<f64> = model
        .voltage_breakpoints()
        .into_iter()
        .filter(|&v| v > vlo && v < vhi)
        .map(|v| model.nullcline_x(geometry.level, v))
        .filter(|&x| x > a && x < b)
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

fn checked(x: f64, rate: f64, h_min: f64, sign: f64) -> Result<f64> {
    if !(rate * sign >= h_min) {
        return Err(Error::DegenerateFlow { x, rate });
    }
    Ok(rate)
}

/// Slow flow on `[x̲(0), x̄(M)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlowFlow {
    pub model: NeuronModel,
    pub base: NullclineGeometry,
    pub upper: f64,
    pub h_min: f64,
}

impl SlowFlow {
    pub fn new(model: NeuronModel, base: NullclineGeometry, upper: f64) -> Self {
        Self {
            model,
            base,
            upper,
            h_min: DEFAULT_H_MIN,
        }
    }
}

impl Flow for SlowFlow {
    fn rate(&self, x: f64) -> Result<f64> {
        let r = slow_flow(&self.model, &self.base, x)?;
        checked(x, r, self.h_min, -1.0)
    }

    fn interval(&self) -> (f64, f64) {
        (self.base.left_knee.x, self.upper)
    }

    fn breakpoints(&self) -> Vec<f64> {
        branch_breakpoints(&self.model, &self.base, Branch::Lower, self.interval())
    }
}

/// Fast flow `H^m` on `[x̲(0), x̄(m)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FastFlow {
    pub model: NeuronModel,
    pub level: NullclineGeometry,
    pub lower: f64,
    pub h_min: f64,
}

impl FastFlow {
    pub fn new(model: NeuronModel, level: NullclineGeometry, lower: f64) -> Self {
        Self {
            model,
            level,
            lower,
            h_min: DEFAULT_H_MIN,
        }
    }
}

impl Flow for FastFlow {
    fn rate(&self, x: f64) -> Result<f64> {
        let r = fast_flow(&self.model, &self.level, x)?;
        checked(x, r, self.h_min, 1.0)
    }

    fn interval(&self) -> (f64, f64) {
        (self.lower, self.level.right_knee.x)
    }

    fn breakpoints(&self) -> Vec<f64> {
        branch_breakpoints(&self.model, &self.level, Branch::Upper, self.interval())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuron::{compute_geometry, Conductances};

    #[test]
    fn piecewise_slow_flow_levels() {
        let model = NeuronModel::three_timescale(Conductances::new(0.3, 1.75, 2.75), 30.0);
        let base = compute_geometry(&model, 0.0).unwrap();
        let top = compute_geometry(&model, 0.36).unwrap();
        let flow = SlowFlow::new(model.clone(), base, top.left_knee.x);
        let bps = flow.breakpoints();
        assert_eq!(bps.len(), 1);
        let xb = bps[0];
        assert!((xb - 0.3503).abs() < 1e-3);
        let deep = 0.5 * (xb + top.left_knee.x);
        assert!((flow.rate(deep).unwrap() + deep / 5.0).abs() < 1e-15);
        let shallow = 0.5 * (base.left_knee.x + xb);
        assert!((flow.rate(shallow).unwrap() + shallow / 30.0).abs() < 1e-15);
    }

    #[test]
    fn stepwise_shortcut_matches_branch_inversion() {
        let model = NeuronModel::three_timescale(Conductances::new(0.3, 1.75, 2.75), 30.0);
        let base = compute_geometry(&model, 0.0).unwrap();
        let up = compute_geometry(&model, 0.2).unwrap();
        for k in 0..=400 {
            let x = base.left_knee.x + (up.right_knee.x - base.left_knee.x) * k as f64 / 400.0;
            let v = base.branch_voltage(&model, Branch::Lower, x).unwrap();
            let generic = (-x + model.x_inf(v)) / model.slow_time_constant(v).unwrap();
            assert_eq!(slow_flow(&model, &base, x).unwrap(), generic, "x = {x}");
            if x <= up.right_knee.x {
                let v = up.branch_voltage(&model, Branch::Upper, x).unwrap();
                let generic = model.fast_rate_factor(v) * (-x + model.x_inf(v));
                assert_eq!(fast_flow(&model, &up, x).unwrap(), generic);
            }
        }
    }

    #[test]
    fn piecewise_fast_flow_is_one_minus_x() {
        let model = NeuronModel::three_timescale(Conductances::new(0.5, 2.0, 3.0), 30.0);
        let base = compute_geometry(&model, 0.0).unwrap();
        for m in [0.0, 0.2, 0.36] {
            let g = compute_geometry(&model, m).unwrap();
            let flow = FastFlow::new(model.clone(), g, base.left_knee.x);
            for k in 0..=20 {
                let x = base.left_knee.x + (g.right_knee.x - base.left_knee.x) * k as f64 / 20.0;
                assert!((flow.rate(x).unwrap() - (1.0 - x)).abs() < 1e-15);
            }
            assert!(matches!(
                flow.rate(g.right_knee.x + 1e-3),
                Err(Error::OffBranch { .. })
            ));
        }
    }
}
