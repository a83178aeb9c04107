//! Scalar numerics: quadrature, bracketed roots, 1-D maximization.

use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

pub(crate) fn tanh(x: f64) -> f64 {
    libm::tanh(x)
}

pub(crate) fn sech2(x: f64) -> f64 {
    let c = libm::cosh(x);
    if c.is_finite() {
        1.0 / (c * c)
    } else {
        0.0
    }
}

/// Logistic `1 / (1 + e^{-z})`, overflow-safe.
pub(crate) fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

pub(crate) fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

const MAX_DEPTH: u32 = 48;

/// Adaptive Simpson quadrature of a fallible integrand to absolute
/// tolerance `tol`.
pub(crate) fn integrate<F>(f: &mut F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a)?;
    let fb = f(b)?;
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if abs(delta) <= 15.0 * tol || (m - a) <= 1e-15 * (1.0 + abs(m)) {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Numeric(format!(
            "adaptive quadrature did not converge on [{a}, {b}]"
        )));
    }
    let l = simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let r = simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Ok(l + r)
}

/// Root of `f` in `[lo, hi]` given a sign change, by bisection down to
/// `xtol`.
pub(crate) fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, xtol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut flo = f(lo)?;
    let fhi = f(hi)?;
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if (flo > 0.0) == (fhi > 0.0) {
        return Err(Error::Numeric(format!(
            "no sign change on [{lo}, {hi}] ({flo}, {fhi})"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= xtol || mid == lo || mid == hi {
            return Ok(mid);
        }
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Safeguarded Newton: root of `f` on `[lo, hi]` (sign change required),
/// using `df` when it keeps the iterate inside the bracket.
pub(crate) fn newton_bracketed<F, D>(
    mut f: F,
    mut df: D,
    mut lo: f64,
    mut hi: f64,
    guess: f64,
    xtol: f64,
) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
    D: FnMut(f64) -> Result<f64>,
{
    let flo = f(lo)?;
    let fhi = f(hi)?;
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if (flo > 0.0) == (fhi > 0.0) {
        return Err(Error::Numeric(format!(
            "no sign change on [{lo}, {hi}] ({flo}, {fhi})"
        )));
    }
    let rising = fhi > 0.0;
    let mut x = if guess > lo && guess < hi {
        guess
    } else {
        0.5 * (lo + hi)
    };
    for _ in 0..200 {
        let fx = f(x)?;
        if fx == 0.0 {
            return Ok(x);
        }
        if (fx > 0.0) == rising {
            hi = x;
        } else {
            lo = x;
        }
        if hi - lo <= xtol {
            return Ok(0.5 * (lo + hi));
        }
        let d = df(x)?;
        let mut next = if d != 0.0 && d.is_finite() {
            x - fx / d
        } else {
            f64::NAN
        };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        } else if abs(next - x) <= xtol {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// Maximum of `f` on `[a, b]`: dense grid (with the `extra` abscissae
/// inserted) followed by golden-section refinement around the best sample.
pub(crate) fn maximize<F>(mut f: F, a: f64, b: f64, samples: usize, extra: &[f64]) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    if b < a {
        return Err(Error::InvalidInput(format!("empty interval [{a}, {b}]")));
    }
    let mut grid: Vec<f64> = (0..=samples)
        .map(|k| a + (b - a) * k as f64 / samples as f64)
        .collect();
    grid.extend(extra.iter().copied().filter(|&e| e >= a && e <= b));
    grid.sort_by(|p, q| p.total_cmp(q));
    grid.dedup();
    let mut best = (grid[0], f64::NEG_INFINITY);
    let mut best_k = 0;
    let mut values = Vec::with_capacity(grid.len());
    for (k, &x) in grid.iter().enumerate() {
        let y = f(x)?;
        values.push(y);
        if y > best.1 {
            best = (x, y);
            best_k = k;
        }
    }
    let lo = grid[best_k.saturating_sub(1)];
    let hi = grid[(best_k + 1).min(grid.len() - 1)];
    if hi - lo <= 0.0 {
        return Ok(best);
    }
    let (x, y) = golden_max(&mut f, lo, hi, 1e-12 * (1.0 + abs(b - a)))?;
    if y > best.1 {
        best = (x, y);
    }
    Ok(best)
}

fn golden_max<F>(f: &mut F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..200 {
        if b - a <= tol {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc > fd { (c, fc) } else { (d, fd) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_integrates_smooth_functions() {
        let v = integrate(&mut |x: f64| Ok(libm::exp(x)), 0.0, 1.0, 1e-12).unwrap();
        assert!((v - (core::f64::consts::E - 1.0)).abs() < 1e-11);
        let v = integrate(&mut |x: f64| Ok(1.0 / x), 1.0, 10.0, 1e-12).unwrap();
        assert!((v - libm::log(10.0)).abs() < 1e-10);
    }

    #[test]
    fn newton_and_bisection_agree() {
        let f = |x: f64| Ok(x * x * x - 2.0);
        let a = bisect(f, 0.0, 2.0, 1e-14).unwrap();
        let b = newton_bracketed(f, |x: f64| Ok(3.0 * x * x), 0.0, 2.0, 1.0, 1e-14).unwrap();
        assert!((a - libm::cbrt(2.0)).abs() < 1e-13);
        assert!((b - libm::cbrt(2.0)).abs() < 1e-13);
    }

    #[test]
    fn maximize_finds_interior_and_endpoint_maxima() {
        let (x, y) = maximize(|x: f64| Ok(-(x - 0.3) * (x - 0.3)), 0.0, 1.0, 100, &[]).unwrap();
        assert!((x - 0.3).abs() < 1e-6 && y.abs() < 1e-12);
        let (x, _) = maximize(|x: f64| Ok(x), 0.0, 1.0, 10, &[]).unwrap();
        assert_eq!(x, 1.0);
    }
}
