//! Travel times along a branch flow and their inverses.

use alloc::format;
use alloc::vec::Vec;

use super::Flow;
use crate::numeric::{abs, integrate, newton_bracketed};
use crate::{Error, Result};

/// Default absolute quadrature tolerance of a table.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;
/// Minimum number of table cells.
const MIN_CELLS: usize = 10_000;

/// Which way the tabulated flow runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TravelDirection {
    /// Leftward flow on the lower branch; times are measured to the left end.
    Slow,
    /// Rightward flow on the upper branch at a level; times are measured to
    /// the right end.
    Fast { level: f64 },
}

/// `∫ 1/|rate|` over one breakpoint-free piece `[lo, hi]`, sampling the rate
/// strictly inside the piece so one-sided limits are used at its ends.
fn piece_time<F: Flow>(flow: &F, lo: f64, hi: f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    let delta = 1e-10 * (hi - lo) + 1e-14;
    let (inner_lo, inner_hi) = (lo + delta, hi - delta);
    let mut g = |x: f64| -> Result<f64> {
        let y = if inner_lo < inner_hi {
            x.clamp(inner_lo, inner_hi)
        } else {
            0.5 * (lo + hi)
        };
        Ok(1.0 / abs(flow.rate(y)?))
    };
    integrate(&mut g, a, b, tol)
}

fn pieces<F: Flow>(flow: &F) -> Vec<f64> {
    let (lo, hi) = flow.interval();
    let mut cuts = Vec::with_capacity(4);
    cuts.push(lo);
    cuts.extend(flow.breakpoints().into_iter().filter(|&x| x > lo && x < hi));
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts
}

fn check_inside<F: Flow>(flow: &F, x: f64) -> Result<()> {
    let (lo, hi) = flow.interval();
    let slack = 1e-12 * (1.0 + abs(lo) + abs(hi));
    if x >= lo - slack && x <= hi + slack {
        Ok(())
    } else {
        Err(Error::OffBranch { x, lo, hi })
    }
}

/// Time for the flow to carry a point between `a` and `b` (order-free),
/// splitting at the flow's breakpoints.
pub fn travel_time<F: Flow>(flow: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    check_inside(flow, a)?;
    check_inside(flow, b)?;
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    if a == b {
        return Ok(0.0);
    }
    let cuts = pieces(flow);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let (s, e) = (a.max(lo), b.min(hi));
        if s < e {
            total += piece_time(flow, lo, hi, s, e, tol * (e - s) / (b - a))?;
        }
    }
    Ok(total)
}

/// Position reached from `from` after time `dt` following the flow (left
/// for negative rates, right for positive ones).
pub fn advance<F: Flow>(flow: &F, from: f64, dt: f64, tol: f64) -> Result<f64> {
    check_inside(flow, from)?;
    if dt < 0.0 {
        return Err(Error::InvalidInput(format!("negative travel time {dt}")));
    }
    if dt == 0.0 {
        return Ok(from);
    }
    let (lo, hi) = flow.interval();
    let rightward = flow.rate(from.clamp(lo, hi))? > 0.0;
    let end = if rightward { hi } else { lo };
    let full = travel_time(flow, from, end, tol)?;
    if dt > full + tol {
        return Err(Error::OffBranch {
            x: from,
            lo,
            hi,
        });
    }
    if dt >= full {
        return Ok(end);
    }
    let cuts = pieces(flow);
    let mut elapsed = 0.0;
    let mut at = from;
    loop {
        let next_cut = if rightward {
            cuts.iter().copied().find(|&c| c > at).unwrap_or(hi)
        } else {
            cuts.iter().rev().copied().find(|&c| c < at).unwrap_or(lo)
        };
        let piece = if rightward { (at, next_cut) } else { (next_cut, at) };
        let span = travel_time(flow, piece.0, piece.1, tol)?;
        if elapsed + span >= dt {
            let (plo, phi) = piece_bounds(&cuts, piece.0, piece.1);
            let target = dt - elapsed;
            let start = at;
            let phi_fn = |y: f64| -> Result<f64> {
                let (s, e) = if rightward { (start, y) } else { (y, start) };
                let t = piece_time(flow, plo, phi, s, e, tol)?;
                Ok(if rightward { t - target } else { target - t })
            };
            let dphi = |y: f64| -> Result<f64> {
                let delta = 1e-10 * (phi - plo) + 1e-14;
                Ok(1.0 / abs(flow.rate(y.clamp(plo + delta, phi - delta))?))
            };
            let guess = if rightward {
                start + target / span * (next_cut - start)
            } else {
                start - target / span * (start - next_cut)
            };
            return newton_bracketed(phi_fn, dphi, piece.0, piece.1, guess, 1e-15);
        }
        elapsed += span;
        at = next_cut;
    }
}

fn piece_bounds(cuts: &[f64], a: f64, b: f64) -> (f64, f64) {
    let mid = 0.5 * (a + b);
    for w in cuts.windows(2) {
        if mid >= w[0] && mid <= w[1] {
            return (w[0], w[1]);
        }
    }
    (a, b)
}

/// Cumulative travel time `C(x) = ∫_{lo}^{x} dy / |rate(y)|` on a monotone
/// grid, with exact in-cell refinement for queries and inverses.
#[derive(Debug, Clone)]
pub struct TravelTimeTable<F: Flow> {
    flow: F,
    direction: TravelDirection,
    nodes: Vec<f64>,
    cumulative: Vec<f64>,
    /// Index into `cuts` of the piece containing each cell.
    cell_piece: Vec<usize>,
    cuts: Vec<f64>,
    tolerance: f64,
}

impl<F: Flow> TravelTimeTable<F> {
    /// Tabulate `flow` with absolute tolerance `tolerance`.
    pub fn build(flow: F, direction: TravelDirection, tolerance: f64) -> Result<Self> {
        let (lo, hi) = flow.interval();
        if !(lo < hi) {
            return Err(Error::InvalidInput(format!("empty travel interval [{lo}, {hi}]")));
        }
        if !(tolerance > 0.0) {
            return Err(Error::InvalidInput(format!("tolerance {tolerance} must be positive")));
        }
        let cuts = pieces(&flow);
        let mut nodes: Vec<f64> = (0..=MIN_CELLS)
            .map(|k| lo + (hi - lo) * k as f64 / MIN_CELLS as f64)
            .collect();
        nodes.extend(cuts.iter().copied());
        nodes.sort_by(f64::total_cmp);
        nodes.dedup_by(|a, b| abs(*a - *b) <= 1e-15 * (1.0 + abs(*b)));
        *nodes.last_mut().expect("nonempty") = hi;
        nodes[0] = lo;

        let cells = nodes.len() - 1;
        let cell_tol = (tolerance / cells as f64).max(1e-15);
        let mut cumulative = Vec::with_capacity(nodes.len());
        let mut cell_piece = Vec::with_capacity(cells);
        cumulative.push(0.0);
        let mut piece = 0;
        for k in 0..cells {
            let (a, b) = (nodes[k], nodes[k + 1]);
            while piece + 2 < cuts.len() && 0.5 * (a + b) > cuts[piece + 1] {
                piece += 1;
            }
            cell_piece.push(piece);
            let dt = piece_time(&flow, cuts[piece], cuts[piece + 1], a, b, cell_tol)?;
            cumulative.push(cumulative[k] + dt);
        }
        Ok(Self {
            flow,
            direction,
            nodes,
            cumulative,
            cell_piece,
            cuts,
            tolerance,
        })
    }

    pub fn flow(&self) -> &F {
        &self.flow
    }

    pub fn direction(&self) -> TravelDirection {
        self.direction
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.nodes[0], *self.nodes.last().expect("nonempty"))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Travel time across the whole interval.
    pub fn total(&self) -> f64 {
        *self.cumulative.last().expect("nonempty")
    }

    fn cell_of(&self, x: f64) -> usize {
        let k = self.nodes.partition_point(|&n| n <= x);
        k.saturating_sub(1).min(self.nodes.len() - 2)
    }

    fn cell_time(&self, k: usize, a: f64, b: f64) -> Result<f64> {
        let p = self.cell_piece[k];
        piece_time(
            &self.flow,
            self.cuts[p],
            self.cuts[p + 1],
            a,
            b,
            (self.tolerance * 1e-4).max(1e-15),
        )
    }

    /// `C(x)`: time from the left end to `x`.
    pub fn cumulative(&self, x: f64) -> Result<f64> {
        check_inside(&self.flow, x)?;
        let (lo, hi) = self.interval();
        let x = x.clamp(lo, hi);
        let k = self.cell_of(x);
        Ok(self.cumulative[k] + self.cell_time(k, self.nodes[k], x)?)
    }

    /// Inverse of [`Self::cumulative`].
    pub fn inverse_cumulative(&self, c: f64) -> Result<f64> {
        let total = self.total();
        if !(c >= -self.tolerance && c <= total + self.tolerance) {
            return Err(Error::InvalidInput(format!(
                "travel time {c} outside [0, {total}]"
            )));
        }
        let c = c.clamp(0.0, total);
        let k = self
            .cumulative
            .partition_point(|&t| t <= c)
            .saturating_sub(1)
            .min(self.nodes.len() - 2);
        let (a, b) = (self.nodes[k], self.nodes[k + 1]);
        let (ca, cb) = (self.cumulative[k], self.cumulative[k + 1]);
        if c <= ca {
            return Ok(a);
        }
        if c >= cb {
            return Ok(b);
        }
        let p = self.cell_piece[k];
        let (plo, phi) = (self.cuts[p], self.cuts[p + 1]);
        let delta = 1e-10 * (phi - plo) + 1e-14;
        let guess = a + (b - a) * (c - ca) / (cb - ca);
        newton_bracketed(
            |y| Ok(ca + self.cell_time(k, a, y)? - c),
            |y| Ok(1.0 / abs(self.flow.rate(y.clamp(plo + delta, phi - delta))?)),
            a,
            b,
            guess,
            1e-15 * (1.0 + abs(b)),
        )
    }

    /// Time for the flow to carry `x` to the end of the interval it flows
    /// toward: `τ(x)` for slow tables, time to the knee for fast ones.
    pub fn time(&self, x: f64) -> Result<f64> {
        let c = self.cumulative(x)?;
        Ok(match self.direction {
            TravelDirection::Slow => c,
            TravelDirection::Fast { .. } => self.total() - c,
        })
    }

    /// Inverse of [`Self::time`].
    pub fn position(&self, t: f64) -> Result<f64> {
        match self.direction {
            TravelDirection::Slow => self.inverse_cumulative(t),
            TravelDirection::Fast { .. } => self.inverse_cumulative(self.total() - t),
        }
    }

    /// Time between two points of the interval.
    pub fn time_between(&self, a: f64, b: f64) -> Result<f64> {
        Ok(abs(self.cumulative(b)? - self.cumulative(a)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Linear {
        lo: f64,
        hi: f64,
        tau: f64,
    }

    impl Flow for Linear {
        fn rate(&self, x: f64) -> Result<f64> {
            Ok(-x / self.tau)
        }
        fn interval(&self) -> (f64, f64) {
            (self.lo, self.hi)
        }
    }

    struct Scalloped;

    impl Flow for Scalloped {
        fn rate(&self, x: f64) -> Result<f64> {
            Ok(if x < 0.35 { -x / 30.0 } else { -x / 5.0 })
        }
        fn interval(&self) -> (f64, f64) {
            (0.3, 0.6)
        }
        fn breakpoints(&self) -> Vec<f64> {
            alloc::vec![0.35]
        }
    }

    #[test]
    fn linear_flow_log_formula() {
        let t = TravelTimeTable::build(
            Linear {
                lo: 0.25,
                hi: 0.7,
                tau: 5.0,
            },
            TravelDirection::Slow,
            DEFAULT_TOLERANCE,
        )
        .unwrap();
        assert!(t.len() > 10_000);
        assert_eq!(t.time(0.25).unwrap(), 0.0);
        for x in [0.26, 0.4, 0.55, 0.7] {
            let exact = 5.0 * libm::log(x / 0.25);
            assert!((t.time(x).unwrap() - exact).abs() < 1e-10);
            let back = t.position(exact).unwrap();
            assert!((back - x).abs() < 1e-12);
        }
    }

    #[test]
    fn discontinuous_flow_is_split_at_breakpoints() {
        let t = TravelTimeTable::build(Scalloped, TravelDirection::Slow, DEFAULT_TOLERANCE).unwrap();
        let exact = |x: f64| {
            if x < 0.35 {
                30.0 * libm::log(x / 0.3)
            } else {
                30.0 * libm::log(0.35 / 0.3) + 5.0 * libm::log(x / 0.35)
            }
        };
        for x in [0.31, 0.349_999, 0.35, 0.350_001, 0.5, 0.6] {
            assert!((t.time(x).unwrap() - exact(x)).abs() < 1e-10, "{x}");
        }
        assert!((travel_time(&Scalloped, 0.32, 0.45, 1e-12).unwrap() - (exact(0.45) - exact(0.32))).abs() < 1e-10);
        let y = advance(&Scalloped, 0.45, exact(0.45) - exact(0.33), 1e-13).unwrap();
        assert!((y - 0.33).abs() < 1e-11);
    }
}
