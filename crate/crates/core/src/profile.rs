//! One-dimensional profile metrics.

use crate::error::{Error, Result};

fn argmax(y: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in y.iter().enumerate() {
        if v > y[best] {
            best = i;
        }
    }
    best
}

/// Half-maximum crossings (left, right) of the lobe that contains the
/// maximum, by linear interpolation.
pub fn half_max_crossings(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || y.len() < 3 {
        return Err(Error::invalid("profile", "need at least 3 samples with matching axes"));
    }
    let i0 = argmax(y);
    let half = 0.5 * y[i0];
    if !(half > 0.0) {
        return Err(Error::NoHalfCrossing);
    }
    let cross = |i: usize, j: usize| {
        let t = (y[i] - half) / (y[i] - y[j]);
        x[i] + t * (x[j] - x[i])
    };
    let mut l = i0;
    while l > 0 && y[l - 1] >= half {
        l -= 1;
    }
    if l == 0 {
        return Err(Error::NoHalfCrossing);
    }
    let mut r = i0;
    while r + 1 < y.len() && y[r + 1] >= half {
        r += 1;
    }
    if r + 1 == y.len() {
        return Err(Error::NoHalfCrossing);
    }
    Ok((cross(l, l - 1), cross(r, r + 1)))
}

/// Full width at half maximum of the central lobe.
pub fn fwhm(x: &[f64], y: &[f64]) -> Result<f64> {
    let (a, b) = half_max_crossings(x, y)?;
    Ok((b - a).abs())
}

/// Distance between the outermost half-maximum crossings; spans dips
/// inside the envelope.
pub fn outer_fwhm(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || y.len() < 3 {
        return Err(Error::invalid("profile", "need at least 3 samples with matching axes"));
    }
    let half = 0.5 * y[argmax(y)];
    if !(half > 0.0) {
        return Err(Error::NoHalfCrossing);
    }
    let l = y.iter().position(|&v| v >= half).unwrap();
    let r = y.iter().rposition(|&v| v >= half).unwrap();
    if l == 0 || r + 1 == y.len() {
        return Err(Error::NoHalfCrossing);
    }
    let cross = |i: usize, j: usize| {
        let t = (y[i] - half) / (y[i] - y[j]);
        x[i] + t * (x[j] - x[i])
    };
    Ok((cross(r, r + 1) - cross(l, l - 1)).abs())
}

/// FWHM for samples on a uniform axis of spacing `dx`.
pub fn fwhm_uniform(y: &[f64], dx: f64) -> Result<f64> {
    let x: Vec<f64> = (0..y.len()).map(|i| i as f64 * dx).collect();
    fwhm(&x, y)
}

/// Largest value outside the central lobe relative to the peak. The central
/// lobe ends at the first local minimum on each side of the maximum.
pub fn side_lobe_contrast(y: &[f64]) -> f64 {
    if y.is_empty() {
        return 0.0;
    }
    let i0 = argmax(y);
    let peak = y[i0];
    if !(peak > 0.0) {
        return 0.0;
    }
    let mut l = i0;
    while l > 0 && y[l - 1] <= y[l] {
        l -= 1;
    }
    let mut r = i0;
    while r + 1 < y.len() && y[r + 1] <= y[r] {
        r += 1;
    }
    let outside = y[..l].iter().chain(&y[r + 1..]).fold(0.0f64, |a, &b| a.max(b));
    outside / peak
}
