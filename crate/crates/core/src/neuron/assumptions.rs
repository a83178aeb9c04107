//! Structural checks on a neuron model: N-shape and intersection ordering,
//! existence of the singular limits of the time constant, and invariance of
//! the domain box under every admissible perturbation level.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{compute_geometry, Conductances, NeuronModel, TimeConstantProfile};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Outcome of one check with an optional `(a, b)` witness whose meaning is
/// given in `detail`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Check {
    pub passed: bool,
    pub detail: String,
    pub witness: Option<(f64, f64)>,
}

impl Check {
    fn pass(detail: String) -> Self {
        Self {
            passed: true,
            detail,
            witness: None,
        }
    }

    fn fail(detail: String, witness: Option<(f64, f64)>) -> Self {
        Self {
            passed: false,
            detail,
            witness,
        }
    }
}

/// Per-assumption verdicts for one neuron.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct AssumptionReport {
    /// N-shaped nullcline, single intersection with `x_∞` on the middle
    /// branch, `f` positive left of the nullcline and negative right of it.
    pub shape: Check,
    /// Singular limits `τ̄` (below threshold) and `λ̄` (above) exist and
    /// are positive.
    pub limits: Check,
    /// For every level in `[0, M]`: N-shape, knees straddle the threshold,
    /// the box is positively invariant; and `x̲(M) < x̄(0)`.
    pub robustness: Check,
    /// Knees non-decreasing in the level.
    pub knee_monotonicity: Check,
    /// `max_m v̲(m)`, the lower cutoff of the synaptic window.
    pub max_left_knee_v: f64,
    /// `min_m v̄(m)`.
    pub min_right_knee_v: f64,
}

impl AssumptionReport {
    pub fn all_passed(&self) -> bool {
        self.shape.passed && self.limits.passed && self.robustness.passed && self.knee_monotonicity.passed
    }
}

fn grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let n = n.max(1);
    (0..=n).map(move |k| lo + (hi - lo) * k as f64 / n as f64)
}

/// Run every structural check on `model`; `grid_density` is the number of
/// level samples in `[0, M]` (voltage and gating grids use 200 points).
pub fn check_assumptions(model: &NeuronModel, grid_density: usize) -> AssumptionReport {
    let mut report = AssumptionReport {
        shape: shape_check(model),
        limits: limits_check(model),
        robustness: Check::pass(String::new()),
        knee_monotonicity: Check::pass(String::new()),
        max_left_knee_v: f64::NAN,
        min_right_knee_v: f64::NAN,
    };
    if let Err(e) = model.validate() {
        report.robustness = Check::fail(format!("{e}"), None);
        report.knee_monotonicity = Check::fail(format!("{e}"), None);
        return report;
    }

    let mut max_vl = f64::NEG_INFINITY;
    let mut min_vr = f64::INFINITY;
    let mut prev: Option<(f64, f64, f64)> = None;
    let mut robustness: Option<Check> = None;
    let mut monotone: Option<Check> = None;
    let mut at_zero = None;
    let mut at_margin = None;
    let d = model.domain;
    for m in grid(0.0, model.margin, grid_density.max(1)) {
        let geo = match compute_geometry(model, m) {
            Ok(g) => g,
            Err(e) => {
                robustness.get_or_insert_with(|| Check::fail(format!("level m = {m}: {e}"), Some((m, f64::NAN))));
                continue;
            }
        };
        if m == 0.0 {
            at_zero = Some(geo);
        }
        at_margin = Some(geo);
        max_vl = max_vl.max(geo.left_knee.v);
        min_vr = min_vr.min(geo.right_knee.v);
        if !(geo.left_knee.v < model.threshold && model.threshold < geo.right_knee.v) {
            robustness.get_or_insert_with(|| {
                Check::fail(
                    format!(
                        "knee voltages ({}, {}) at m = {m} do not straddle the threshold {}",
                        geo.left_knee.v, geo.right_knee.v, model.threshold
                    ),
                    Some((m, geo.left_knee.v)),
                )
            });
        }
        if let Some((pm, pl, pr)) = prev {
            if geo.left_knee.x < pl || geo.right_knee.x < pr {
                monotone.get_or_insert_with(|| {
                    Check::fail(
                        format!("knees move left between m = {pm} and m = {m}"),
                        Some((pm, m)),
                    )
                });
            }
        }
        prev = Some((m, geo.left_knee.x, geo.right_knee.x));
        for x in grid(d.x_lo, d.x_hi, 200) {
            let bottom = model.f_level(x, d.v_lo, m);
            let top = model.f_level(x, d.v_hi, m);
            if bottom < 0.0 || top > 0.0 {
                robustness.get_or_insert_with(|| {
                    Check::fail(
                        format!("vector field leaves the box at x = {x}, m = {m} (f at v_lo = {bottom}, at v_hi = {top})"),
                        Some((x, m)),
                    )
                });
            }
        }
    }
    for v in grid(d.v_lo, d.v_hi, 200) {
        let xinf = model.x_inf(v);
        if -d.x_lo + xinf < 0.0 || -d.x_hi + xinf > 0.0 {
            robustness.get_or_insert_with(|| {
                Check::fail(format!("gating flow leaves the box at v = {v}"), Some((v, xinf)))
            });
        }
    }
    if let (Some(z), Some(top)) = (at_zero, at_margin) {
        if !(top.left_knee.x < z.right_knee.x) {
            robustness.get_or_insert_with(|| {
                Check::fail(
                    format!(
                        "left knee at the margin ({}) is not below the unperturbed right knee ({})",
                        top.left_knee.x, z.right_knee.x
                    ),
                    Some((top.left_knee.x, z.right_knee.x)),
                )
            });
        }
    }
    report.robustness = robustness.unwrap_or_else(|| {
        Check::pass(format!(
            "max left-knee voltage {max_vl} < threshold {} < min right-knee voltage {min_vr}",
            model.threshold
        ))
    });
    report.knee_monotonicity =
        monotone.unwrap_or_else(|| Check::pass("knees non-decreasing in m".into()));
    report.max_left_knee_v = max_vl;
    report.min_right_knee_v = min_vr;
    report
}

fn shape_check(model: &NeuronModel) -> Check {
    let geo = match compute_geometry(model, 0.0) {
        Ok(g) => g,
        Err(e) => return Check::fail(format!("{e}"), None),
    };
    let lo = model.v_floor();
    let hi = model.domain.v_hi;
    let n = 4000;
    let mut crossings = Vec::new();
    let mut prev_v = lo;
    let mut prev = model.nullcline_x(0.0, lo) - model.x_inf(lo);
    for v in grid(lo, hi, n).skip(1) {
        let cur = model.nullcline_x(0.0, v) - model.x_inf(v);
        if cur != 0.0 && prev != 0.0 && (cur > 0.0) != (prev > 0.0) {
            crossings.push(0.5 * (prev_v + v));
        }
        if cur != 0.0 {
            prev = cur;
            prev_v = v;
        }
    }
    if crossings.len() != 1 {
        return Check::fail(
            format!("x_∞ meets the nullcline {} times", crossings.len()),
            crossings.first().map(|&v| (v, model.x_inf(v))),
        );
    }
    let vc = crossings[0];
    if !(vc > geo.left_knee.v && vc < geo.right_knee.v) {
        return Check::fail(
            format!(
                "intersection at v ≈ {vc} is not on the middle branch ({}, {})",
                geo.left_knee.v, geo.right_knee.v
            ),
            Some((model.nullcline_x(0.0, vc), vc)),
        );
    }
    for v in grid(lo, hi, 200).skip(1) {
        let xn = model.nullcline_x(0.0, v);
        for (x, sign) in [(xn - 1e-3, 1.0), (xn + 1e-3, -1.0)] {
            if x >= model.domain.x_lo && x <= model.domain.x_hi && model.f(x, v) * sign <= 0.0 {
                return Check::fail(
                    format!("f has the wrong sign at (x, v) = ({x}, {v})"),
                    Some((x, v)),
                );
            }
        }
    }
    Check::pass(format!(
        "N-shaped with knees at v = {} and {}; x_∞ crosses at v ≈ {vc}",
        geo.left_knee.v, geo.right_knee.v
    ))
}

fn limits_check(model: &NeuronModel) -> Check {
    match model.time_constant {
        TimeConstantProfile::Piecewise {
            fast, slow, lower, ..
        } => {
            if fast > 0.0 && slow > 0.0 && lower < model.threshold {
                Check::pass(format!(
                    "τ̄ ∈ {{{fast}, {slow}}} below threshold, λ̄ = 1 above"
                ))
            } else {
                Check::fail(
                    format!("degenerate piecewise profile {:?}", model.time_constant),
                    None,
                )
            }
        }
        TimeConstantProfile::InverseCosh { .. } => Check::fail(
            "time constant is ε-independent: λ̄ vanishes above threshold".into(),
            None,
        ),
    }
}

/// `K(v) = (E_Ca - v)(v - E_K) m_∞'(v) - (E_Ca - E_K) m_∞(v)`; the nullcline
/// rises at `v` exactly when
/// `g_Ca K(v) > g_L (E_L - E_K) + (Ē - E_K) m + I`.
pub fn n_shape_kernel(model: &NeuronModel, v: f64) -> f64 {
    let r = &model.reversal;
    (r.calcium - v) * (v - r.potassium) * model.activation.derivative(v)
        - (r.calcium - r.potassium) * model.activation.value(v)
}

/// Conductance ranges of a randomly drawn population.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ParameterRanges {
    pub leak: (f64, f64),
    pub calcium: (f64, f64),
    pub potassium: (f64, f64),
}

impl Default for ParameterRanges {
    /// `g_L ∈ [0.3, 0.75]`, `g_Ca ∈ [1.75, 2.25]`, `g_K ∈ [2.75, 3.25]`.
    fn default() -> Self {
        Self {
            leak: (0.3, 0.75),
            calcium: (1.75, 2.25),
            potassium: (2.75, 3.25),
        }
    }
}

impl ParameterRanges {
    pub fn corners(&self) -> Vec<Conductances> {
        let mut out = Vec::with_capacity(8);
        for gl in [self.leak.0, self.leak.1] {
            for gca in [self.calcium.0, self.calcium.1] {
                for gk in [self.potassium.0, self.potassium.1] {
                    out.push(Conductances::new(gl, gca, gk));
                }
            }
        }
        out
    }

    pub fn contains(&self, c: &Conductances) -> bool {
        let within = |x: f64, (a, b): (f64, f64)| x >= a && x <= b;
        within(c.leak, self.leak) && within(c.calcium, self.calcium) && within(c.potassium, self.potassium)
    }
}

/// Closed-form worst-case margin bound over a conductance box.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FamilyReport {
    /// `K` at the threshold voltage.
    pub kernel_at_threshold: f64,
    /// `K` at the jump of `x_∞` (or the threshold when `x_∞` is smooth).
    pub kernel_at_gate: f64,
    /// Largest margin keeping both lines between the knees for every member.
    pub margin_bound: f64,
    pub margin: f64,
    pub accepted: bool,
    /// Full per-model checks at the eight corners of the box.
    pub corners: Vec<(Conductances, AssumptionReport)>,
}

/// Evaluate the family bound for `template` with conductances ranging over
/// `ranges`, plus the corner models' full reports.
pub fn check_family(template: &NeuronModel, ranges: &ParameterRanges, grid_density: usize) -> FamilyReport {
    let r = &template.reversal;
    let gate = template.gating.jump().unwrap_or(template.threshold);
    let k_th = n_shape_kernel(template, template.threshold);
    let k_gate = n_shape_kernel(template, gate);
    let leak_term = |gl: f64| gl * (r.leak - r.potassium);
    let worst_leak = leak_term(ranges.leak.0).max(leak_term(ranges.leak.1));
    let bound_at = |k: f64| {
        let ca = (ranges.calcium.0 * k).min(ranges.calcium.1 * k);
        (ca - worst_leak - template.applied_current) / (r.excitatory - r.potassium)
    };
    let margin_bound = bound_at(k_th).min(bound_at(k_gate));
    let corners: Vec<_> = ranges
        .corners()
        .into_iter()
        .map(|c| {
            let mut m = template.clone();
            m.conductances = c;
            (c, check_assumptions(&m, grid_density))
        })
        .collect();
    FamilyReport {
        kernel_at_threshold: k_th,
        kernel_at_gate: k_gate,
        margin_bound,
        margin: template.margin,
        accepted: template.margin < margin_bound && corners.iter().all(|(_, r)| r.all_passed()),
        corners,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ranges() -> ParameterRanges {
        ParameterRanges::default()
    }

    #[test]
    fn family_constants() {
        let t = NeuronModel::three_timescale(Conductances::new(0.5, 2.0, 3.0), 30.0);
        let rep = check_family(&t, &ranges(), 20);
        assert!((rep.kernel_at_threshold - 1.4260).abs() < 1e-3);
        assert!((rep.kernel_at_gate - 1.4833).abs() < 1e-3);
        assert!((rep.margin_bound - 1.1003).abs() < 1e-3);
        assert!(rep.accepted);
    }

    #[test]
    fn excessive_margin_is_rejected() {
        let mut t = NeuronModel::three_timescale(Conductances::new(0.5, 2.0, 3.0), 30.0);
        t.margin = 2.0;
        let rep = check_family(&t, &ranges(), 20);
        assert!(!rep.accepted);
        assert!(rep.corners.iter().any(|(_, r)| !r.robustness.passed));
    }

    #[test]
    fn smooth_profile_fails_the_limit_check() {
        let m = NeuronModel::morris_lecar(Conductances::new(0.5, 1.0, 2.0));
        let rep = check_assumptions(&m, 10);
        assert!(rep.shape.passed, "{:?}", rep.shape);
        assert!(!rep.limits.passed);
    }
}
