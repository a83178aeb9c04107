//! Knees and branches of the N-shaped nullcline `x = x^m(v)`.

use alloc::format;

use super::NeuronModel;
use crate::numeric::{abs, bisect, newton_bracketed};
use crate::{Error, Result};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Grid used to bracket the extrema of `x^m(v)`.
const KNEE_GRID: usize = 2000;
/// Voltage resolution of knee refinement.
const KNEE_VTOL: f64 = 1e-13;

/// A knee `(x, v)` of the nullcline.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Knee {
    pub x: f64,
    pub v: f64,
}

/// Which root of `f^m(x, v) = 0` in `v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `v^sm`: left of the left knee (the slow, silent branch).
    Lower,
    /// `v^md`: between the knees.
    Middle,
    /// `v^lg`: right of the right knee (the active branch).
    Upper,
}

/// Nullcline geometry at one perturbation level.
///
/// The branch functions are evaluated on demand by bracketed Newton on the
/// closed form `x^m(v)`, which is monotone on each branch.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct NullclineGeometry {
    pub level: f64,
    /// Local minimum of `x^m(v)`.
    pub left_knee: Knee,
    /// Local maximum of `x^m(v)`.
    pub right_knee: Knee,
    pub knee_tolerance: f64,
    v_floor: f64,
    v_ceiling: f64,
}

/// Locate the knees of the nullcline at level `m`.
pub fn compute_geometry(model: &NeuronModel, m: f64) -> Result<NullclineGeometry> {
    if !(m >= 0.0 && m.is_finite()) {
        return Err(Error::InvalidInput(format!("perturbation level {m} < 0")));
    }
    let geo = geometry_at(model, m)?;
    let d = &model.domain;
    for (name, k) in [("left", geo.left_knee), ("right", geo.right_knee)] {
        if !d.contains(k.x, k.v, 0.0) {
            return Err(Error::Geometry(format!(
                "{name} knee ({}, {}) at m = {m} lies outside the domain box",
                k.x, k.v
            )));
        }
    }
    Ok(geo)
}

/// Knee search without domain checks; `m` may be negative (used by
/// central differences).
pub(crate) fn geometry_at(model: &NeuronModel, m: f64) -> Result<NullclineGeometry> {
    let lo = model.v_floor();
    let hi = model.domain.v_hi;
    let step = (hi - lo) / KNEE_GRID as f64;
    let slope = |v: f64| model.nullcline_slope(m, v);

    let mut minima = [(0.0, false); 2];
    let mut count = 0usize;
    let mut prev_v = lo;
    let mut prev_s = slope(lo);
    for k in 1..=KNEE_GRID {
        let v = lo + step * k as f64;
        let s = slope(v);
        if (prev_s < 0.0 && s >= 0.0) || (prev_s > 0.0 && s <= 0.0) {
            let is_min = prev_s < 0.0;
            let root = bisect(|u| Ok(slope(u)), prev_v, v, KNEE_VTOL)?;
            if count < 2 {
                minima[count] = (root, is_min);
            }
            count += 1;
        }
        prev_v = v;
        prev_s = s;
    }
    if count != 2 || !minima[0].1 || minima[1].1 {
        return Err(Error::NotNShaped { level: m, extrema: count });
    }
    let (vl, vr) = (minima[0].0, minima[1].0);
    Ok(NullclineGeometry {
        level: m,
        left_knee: Knee {
            x: model.nullcline_x(m, vl),
            v: vl,
        },
        right_knee: Knee {
            x: model.nullcline_x(m, vr),
            v: vr,
        },
        knee_tolerance: 1e-10,
        v_floor: lo,
        v_ceiling: hi,
    })
}


/// `Ψ(v) = (f₀'(v)(v - E_K) - f₀(v)) / (Ē - E_K)` with `f₀ = f(0, ·)`:
/// `x^m(v)` rises exactly where `Ψ(v) > m`, so the knees at level `m` are
/// the two solutions of `Ψ(v) = m` and move toward each other as `m` grows.
pub(crate) fn knee_level(model: &NeuronModel, v: f64) -> f64 {
    let ek = model.reversal.potassium;
    let phi = model.df_dv(0.0, v, 0.0) * (v - ek) - model.f_level(0.0, v, 0.0);
    phi / (model.reversal.excitatory - ek)
}

/// Geometry at `m` between two already computed levels, located by
/// bisection of `Ψ(v) = m` inside the brackets the two levels provide.
pub fn geometry_between(
    model: &NeuronModel,
    m: f64,
    low: &NullclineGeometry,
    high: &NullclineGeometry,
) -> Result<NullclineGeometry> {
    if !(m >= low.level && m <= high.level) {
        return Err(Error::InvalidInput(format!(
            "level {m} outside [{}, {}]",
            low.level, high.level
        )));
    }
    if m == low.level {
        return Ok(*low);
    }
    if m == high.level {
        return Ok(*high);
    }
    let psi = |v: f64| Ok(knee_level(model, v) - m);
    let vl = bisect(psi, low.left_knee.v, high.left_knee.v, KNEE_VTOL)?;
    let vr = bisect(psi, high.right_knee.v, low.right_knee.v, KNEE_VTOL)?;
    Ok(NullclineGeometry {
        level: m,
        left_knee: Knee {
            x: model.nullcline_x(m, vl),
            v: vl,
        },
        right_knee: Knee {
            x: model.nullcline_x(m, vr),
            v: vr,
        },
        ..*low
    })
}

impl NullclineGeometry {
    /// Whether `v^sm(x)` (or `v^lg(x)`) is at least `vb`. Both outer
    /// branches are decreasing in `x`, so this is a comparison against
    /// `x^m(vb)`.
    pub fn branch_voltage_at_least(&self, model: &NeuronModel, branch: Branch, x: f64, vb: f64) -> bool {
        let (lo, hi) = self.branch_voltages(branch);
        if vb <= lo {
            true
        } else if vb > hi {
            false
        } else {
            x <= model.nullcline_x(self.level, vb)
        }
    }

    /// Voltage range `[lo, hi]` covered by `branch`.
    pub fn branch_voltages(&self, branch: Branch) -> (f64, f64) {
        match branch {
            Branch::Lower => (self.v_floor, self.left_knee.v),
            Branch::Middle => (self.left_knee.v, self.right_knee.v),
            Branch::Upper => (self.right_knee.v, self.v_ceiling),
        }
    }

    /// Gating range `[lo, hi]` covered by `branch` (inside the box voltage
    /// range).
    pub fn branch_range(&self, model: &NeuronModel, branch: Branch) -> (f64, f64) {
        let (a, b) = self.branch_voltages(branch);
        let xa = model.nullcline_x(self.level, a);
        let xb = model.nullcline_x(self.level, b);
        if xa <= xb {
            (xa, xb)
        } else {
            (xb, xa)
        }
    }

    /// `v^sm`, `v^md` or `v^lg` at gating value `x`.
    pub fn branch_voltage(&self, model: &NeuronModel, branch: Branch, x: f64) -> Result<f64> {
        let (lo, hi) = self.branch_range(model, branch);
        let slack = 1e-12 * (1.0 + abs(x));
        if !(x >= lo - slack && x <= hi + slack) {
            return Err(Error::OffBranch { x, lo, hi });
        }
        match branch {
            Branch::Lower if x <= self.left_knee.x => return Ok(self.left_knee.v),
            Branch::Upper if x >= self.right_knee.x => return Ok(self.right_knee.v),
            Branch::Middle if x <= self.left_knee.x => return Ok(self.left_knee.v),
            Branch::Middle if x >= self.right_knee.x => return Ok(self.right_knee.v),
            _ => {}
        }
        let (va, vb) = self.branch_voltages(branch);
        let m = self.level;
        let g = |v: f64| Ok(model.nullcline_x(m, v) - x);
        let dg = |v: f64| Ok(model.nullcline_slope(m, v));
        let guess = {
            let xa = model.nullcline_x(m, va);
            let xb = model.nullcline_x(m, vb);
            if (xb - xa).abs() > 0.0 && (xb - xa).is_finite() {
                va + (vb - va) * (x - xa) / (xb - xa)
            } else {
                0.5 * (va + vb)
            }
        };
        let v = newton_bracketed(g, dg, va, vb, guess, 1e-15)?;
        Ok(v)
    }
}

/// `(dx̲/dm, dx̄/dm)` at the geometry's level by the closed formula
/// `(Ē - v) / (-∂f/∂x)`, cross-checked by central differences.
pub fn knee_sensitivity(model: &NeuronModel, geometry: &NullclineGeometry) -> Result<(f64, f64)> {
    let left = model.nullcline_level_sensitivity(geometry.left_knee.v);
    let right = model.nullcline_level_sensitivity(geometry.right_knee.v);
    let h = 1e-4 * if model.margin > 0.0 { model.margin } else { 1.0 };
    let up = geometry_at(model, geometry.level + h)?;
    let down = geometry_at(model, geometry.level - h)?;
    let fd_left = (up.left_knee.x - down.left_knee.x) / (2.0 * h);
    let fd_right = (up.right_knee.x - down.right_knee.x) / (2.0 * h);
    for (formula, fd) in [(left, fd_left), (right, fd_right)] {
        if abs(formula - fd) > 0.01 * abs(formula) {
            return Err(Error::GeometryConsistency {
                formula,
                finite_difference: fd,
            });
        }
    }
    Ok((left, right))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuron::Conductances;

    fn family(gl: f64, gca: f64, gk: f64) -> NeuronModel {
        NeuronModel::three_timescale(Conductances::new(gl, gca, gk), 30.0)
    }

    #[test]
    fn knees_match_reference_values() {
        let g = compute_geometry(&family(0.3, 1.75, 2.75), 0.0).unwrap();
        assert!((g.left_knee.v + 0.2223).abs() < 1e-3);
        assert!((g.left_knee.x - 0.3438).abs() < 1e-3);
        assert!((g.right_knee.v - 0.0974).abs() < 1e-3);
        assert!((g.right_knee.x - 0.6803).abs() < 1e-3);
    }

    #[test]
    fn threshold_lines_sit_between_knees() {
        for gl in [0.3, 0.75] {
            for gca in [1.75, 2.25] {
                for gk in [2.75, 3.25] {
                    let model = family(gl, gca, gk);
                    for m in [0.0, 0.18, 0.36] {
                        let g = compute_geometry(&model, m).unwrap();
                        assert!(g.left_knee.v < 0.0 && g.right_knee.v > 0.01);
                        assert!(model.nullcline_slope(m, 0.0) > 0.0);
                        assert!(model.nullcline_slope(m, 0.01) > 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn knees_move_right_with_level() {
        let model = family(0.5, 2.0, 3.0);
        let a = compute_geometry(&model, 0.0).unwrap();
        let b = compute_geometry(&model, 0.1).unwrap();
        assert!(b.left_knee.x >= a.left_knee.x);
        assert!(b.right_knee.x >= a.right_knee.x);
    }

    #[test]
    fn bracketed_knees_match_grid_search() {
        let model = family(0.75, 1.75, 3.25);
        let lo = compute_geometry(&model, 0.0).unwrap();
        let hi = compute_geometry(&model, 0.36).unwrap();
        for m in [0.01, 0.1, 0.2, 0.35] {
            let a = compute_geometry(&model, m).unwrap();
            let b = geometry_between(&model, m, &lo, &hi).unwrap();
            assert!((a.left_knee.x - b.left_knee.x).abs() < 1e-12);
            assert!((a.right_knee.x - b.right_knee.x).abs() < 1e-12);
            assert!(knee_level(&model, a.left_knee.v).abs() - m < 1e-9);
        }
    }

    #[test]
    fn monotone_nullcline_is_rejected() {
        let model = family(0.5, 0.0, 3.0);
        assert!(matches!(
            compute_geometry(&model, 0.0),
            Err(Error::NotNShaped { .. })
        ));
    }

    #[test]
    fn branches_invert_the_nullcline_and_are_ordered() {
        let model = family(0.5, 2.0, 3.0);
        let g = compute_geometry(&model, 0.2).unwrap();
        let (lo, hi) = (g.left_knee.x, g.right_knee.x);
        for k in 1..200 {
            let x = lo + (hi - lo) * k as f64 / 200.0;
            let vs = g.branch_voltage(&model, Branch::Lower, x).unwrap();
            let vm = g.branch_voltage(&model, Branch::Middle, x).unwrap();
            let vl = g.branch_voltage(&model, Branch::Upper, x).unwrap();
            assert!(vs < vm && vm < vl, "{vs} {vm} {vl}");
            for v in [vs, vm, vl] {
                assert!(model.f_level(x, v, 0.2).abs() < 1e-10);
            }
        }
        assert!(matches!(
            g.branch_voltage(&model, Branch::Upper, hi + 0.01),
            Err(Error::OffBranch { .. })
        ));
    }

    #[test]
    fn knee_sensitivity_formula_and_ordering() {
        let model = family(0.3, 1.75, 2.75);
        let g = compute_geometry(&model, 0.0).unwrap();
        let (l, r) = knee_sensitivity(&model, &g).unwrap();
        let expect_r = (1.0 - g.right_knee.v) / (2.75 * (0.7 + g.right_knee.v));
        assert!((r - expect_r).abs() < 1e-14);
        assert!(r <= l);
    }
}
