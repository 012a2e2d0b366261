//! Adaptive Simpson quadrature.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 48;

/// Integrate `f` over [a, b] to the given relative tolerance (with an
/// absolute floor `abs_tol`). The interval is first cut into `panels`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    panels: usize,
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let mut coarse = Vec::with_capacity(panels);
    let mut scale = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let hi = if p + 1 == panels { b } else { lo + h };
        let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
        let s = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
        scale += s.abs();
        coarse.push((lo, hi, fa, fm, fb, s));
    }
    let tol = (rel_tol * scale).max(abs_tol);
    let mut total = 0.0;
    for (lo, hi, fa, fm, fb, s) in coarse {
        total += recurse(&f, lo, hi, fa, fm, fb, s, tol / panels as f64, MAX_DEPTH)?;
    }
    Ok(total)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 || !delta.is_finite() {
        return Err(Error::QuadratureNotConverged { a, b });
    }
    Ok(recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_gaussian() {
        let v = adaptive_simpson(|x| x * x * x, 0.0, 2.0, 1e-12, 0.0, 1).unwrap();
        assert!((v - 4.0).abs() < 1e-12);
        let g = adaptive_simpson(|x| (-x * x).exp(), -10.0, 10.0, 1e-12, 0.0, 8).unwrap();
        assert!((g - std::f64::consts::PI.sqrt()).abs() < 1e-11);
    }

    #[test]
    fn oscillatory() {
        let v = adaptive_simpson(|x| (50.0 * x).cos(), 0.0, 1.0, 1e-10, 1e-14, 16).unwrap();
        assert!((v - 50f64.sin() / 50.0).abs() < 1e-10);
    }
}
