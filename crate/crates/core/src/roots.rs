//! Bracketed scalar root finding.

use crate::error::{Error, Result};

/// Bisection on [lo, hi] until the bracket is narrower than `tol`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64, what: &'static str) -> Result<f64> {
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if !(fa.signum() != fb.signum()) || !fa.is_finite() || !fb.is_finite() {
        return Err(Error::NoSignChange { what });
    }
    for _ in 0..200 {
        if b - a <= tol {
            break;
        }
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Scan `n` uniform steps for the first sign change, then bisect inside it.
pub fn first_root<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    n: usize,
    tol: f64,
    what: &'static str,
) -> Result<f64> {
    let step = (hi - lo) / n as f64;
    let mut x0 = lo;
    let mut f0 = f(x0);
    if f0 == 0.0 {
        return Ok(x0);
    }
    for i in 1..=n {
        let x1 = if i == n { hi } else { lo + i as f64 * step };
        let f1 = f(x1);
        if f0.is_finite() && f1.is_finite() && (f1 == 0.0 || f0.signum() != f1.signum()) {
            return bisect(&f, x0, x1, tol, what);
        }
        x0 = x1;
        f0 = f1;
    }
    Err(Error::NoSignChange { what })
}
