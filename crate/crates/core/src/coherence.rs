//! Spatiotemporal correlation functions from spectra by 2-D Fourier
//! transforms, and ring engineering with an azimuthal phase.
//!
//! Maps are envelopes: transforms run over detunings (q, Ω), so the optical
//! carrier never appears.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::{nearest, CrystalConfig, GainProfile, SpectralGrid, Spectrum2D};

/// Complex F(q, Ω), rows over q and columns over Ω.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralAmplitude {
    pub grid: SpectralGrid,
    pub values: Array2<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CorrelationOrder {
    G1,
    G2,
}

/// Unit-max correlation magnitude; rows over ξ (µm), columns over τ (fs).
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMap {
    pub xi: Vec<f64>,
    pub tau: Vec<f64>,
    pub values: Array2<f64>,
    pub order: CorrelationOrder,
}

impl CorrelationMap {
    pub fn at(&self, xi: f64, tau: f64) -> f64 {
        self.values[[nearest(&self.xi, xi), nearest(&self.tau, tau)]]
    }

    pub fn cut_tau(&self, xi: f64) -> Vec<f64> {
        self.values.row(nearest(&self.xi, xi)).to_vec()
    }

    pub fn cut_xi(&self, tau: f64) -> Vec<f64> {
        self.values.column(nearest(&self.tau, tau)).to_vec()
    }
}

/// Zero-padding factor applied before every transform.
pub const PAD: usize = 2;

/// F = (G sinh𝒢/𝒢 / sinh G)·e^{iΔL/2}; |F|² equals the spectrum.
pub fn spectral_amplitude(cfg: &CrystalConfig, grid: &SpectralGrid) -> Result<SpectralAmplitude> {
    cfg.check_grid_window(grid.omega[grid.omega.len() - 1])?;
    let l = cfg.length_um();
    let norm = crate::special::sinhc_sq(cfg.gain * cfg.gain);
    let rows: Vec<Vec<Complex64>> = grid
        .q
        .par_iter()
        .map(|&q| {
            grid.omega
                .iter()
                .map(|&w| match crate::spectrum::mismatch(cfg, q, w) {
                    Ok(d) => {
                        let dl = d * l;
                        let amp = GainProfile::new(cfg.gain, dl).sinhc / norm;
                        Complex64::from_polar(amp, 0.5 * dl)
                    }
                    Err(_) => Complex64::new(0.0, 0.0),
                })
                .collect()
        })
        .collect();
    let mut values = Array2::zeros((grid.q.len(), grid.omega.len()));
    for (i, r) in rows.into_iter().enumerate() {
        for (j, v) in r.into_iter().enumerate() {
            values[[i, j]] = v;
        }
    }
    Ok(SpectralAmplitude {
        grid: grid.clone(),
        values,
    })
}

fn fft_rows(a: &mut Array2<Complex64>, inverse: bool) {
    let n = a.ncols();
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    let slice = a.as_slice_mut().expect("standard layout");
    slice.par_chunks_mut(n).for_each(|row| fft.process(row));
}

/// Unnormalized 2-D DFT (forward: e^{−i…}); inverse carries no 1/N.
pub fn fft2(a: &Array2<Complex64>, inverse: bool) -> Array2<Complex64> {
    let mut out = a.as_standard_layout().to_owned();
    fft_rows(&mut out, inverse);
    let mut t = out.t().as_standard_layout().to_owned();
    fft_rows(&mut t, inverse);
    t.t().as_standard_layout().to_owned()
}

fn fftshift(a: &Array2<Complex64>) -> Array2<Complex64> {
    let (n1, n2) = a.dim();
    Array2::from_shape_fn((n1, n2), |(i, j)| a[[(i + n1 / 2) % n1, (j + n2 / 2) % n2]])
}

/// Conjugate delay axis for `n` samples of spacing `d` (after padding).
fn delay_axis(n: usize, d: f64) -> Vec<f64> {
    let step = 2.0 * PI / (n as f64 * d);
    (0..n).map(|k| (k as f64 - (n / 2) as f64) * step).collect()
}

fn transform(values: &Array2<Complex64>, dq: f64, domega: f64) -> (Vec<f64>, Vec<f64>, Array2<Complex64>) {
    let (n1, n2) = values.dim();
    let (m1, m2) = (PAD * n1, PAD * n2);
    let mut padded = Array2::zeros((m1, m2));
    padded.slice_mut(ndarray::s![..n1, ..n2]).assign(values);
    let out = fftshift(&fft2(&padded, false));
    (delay_axis(m1, dq), delay_axis(m2, domega), out)
}

fn unit_max(mut v: Array2<f64>) -> Array2<f64> {
    let m = v.iter().cloned().fold(0.0, f64::max);
    if m > 0.0 {
        v.mapv_inplace(|x| x / m);
    }
    v
}

/// |G⁽¹⁾(ξ, τ)|: magnitude of the 2-D transform of S(q, Ω).
pub fn g1_map(s: &Spectrum2D) -> Result<CorrelationMap> {
    let grid = s.grid()?;
    let c = s.values.mapv(|v| Complex64::new(v, 0.0));
    let (xi, tau, out) = transform(&c, grid.dq(), grid.domega());
    Ok(CorrelationMap {
        xi,
        tau,
        values: unit_max(out.mapv(|z| z.norm())),
        order: CorrelationOrder::G1,
    })
}

/// G⁽²⁾(ξ, τ) = |FT F|².
pub fn g2_map(f: &SpectralAmplitude) -> Result<CorrelationMap> {
    let (xi, tau, out) = transform(&f.values, f.grid.dq(), f.grid.domega());
    Ok(CorrelationMap {
        xi,
        tau,
        values: unit_max(out.mapv(|z| z.norm_sqr())),
        order: CorrelationOrder::G2,
    })
}

/// Semi-axes (q_a, Ω_a) of a ring-like |F|: the position of the maximum
/// along each axis cut.
pub fn ring_semi_axes(f: &SpectralAmplitude) -> (f64, f64) {
    let g = &f.grid;
    let i0 = nearest(&g.q, 0.0);
    let j0 = nearest(&g.omega, 0.0);
    let arg = |it: &mut dyn Iterator<Item = (f64, f64)>| {
        it.fold((0.0, -1.0), |best, (x, v)| if v > best.1 { (x.abs(), v) } else { best })
            .0
    };
    let qa = arg(&mut g.q.iter().enumerate().map(|(i, &q)| (q, f.values[[i, j0]].norm())));
    let wa = arg(&mut g.omega.iter().enumerate().map(|(j, &w)| (w, f.values[[i0, j]].norm())));
    (qa, wa)
}

/// F̃ = F·e^{ilψ}, ψ measured around the |F|² centroid in the plane
/// normalized by `scales` (q_a, Ω_a), or by the pre-fit semi-axes if None.
pub fn apply_azimuthal_phase(f: &SpectralAmplitude, l: i32, scales: Option<(f64, f64)>) -> SpectralAmplitude {
    if l == 0 {
        return f.clone();
    }
    let (mut qa, mut wa) = scales.unwrap_or_else(|| ring_semi_axes(f));
    if !(qa > 0.0) {
        qa = f.grid.dq();
    }
    if !(wa > 0.0) {
        wa = f.grid.domega();
    }
    let (mut sw, mut sq, mut so) = (0.0, 0.0, 0.0);
    for ((i, j), z) in f.values.indexed_iter() {
        let w = z.norm_sqr();
        sw += w;
        sq += w * f.grid.q[i];
        so += w * f.grid.omega[j];
    }
    let (qc, oc) = if sw > 0.0 { (sq / sw, so / sw) } else { (0.0, 0.0) };
    let values = Array2::from_shape_fn(f.values.dim(), |(i, j)| {
        let psi = ((f.grid.omega[j] - oc) / wa).atan2((f.grid.q[i] - qc) / qa);
        f.values[[i, j]] * Complex64::from_polar(1.0, l as f64 * psi)
    });
    SpectralAmplitude {
        grid: f.grid.clone(),
        values,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingFit {
    pub xi0: f64,
    pub tau0: f64,
    /// G⁽²⁾(0,0)/max.
    pub center_suppression: f64,
    /// RMS of ξ²/ξ₀² + τ²/τ₀² − 1 over the ridge points.
    pub residual: f64,
}

/// Bound on the ridge residual above which a map is not ring-like.
pub const RING_RESIDUAL_BOUND: f64 = 0.25;

fn bilinear(m: &CorrelationMap, x: f64, y: f64) -> Option<f64> {
    let (a, b) = (&m.xi, &m.tau);
    let fx = (x - a[0]) / (a[1] - a[0]);
    let fy = (y - b[0]) / (b[1] - b[0]);
    if fx < 0.0 || fy < 0.0 || fx > (a.len() - 1) as f64 || fy > (b.len() - 1) as f64 {
        return None;
    }
    let i = (fx.floor() as usize).min(a.len() - 2);
    let j = (fy.floor() as usize).min(b.len() - 2);
    let (ti, tj) = (fx - i as f64, fy - j as f64);
    let v = &m.values;
    Some(
        (1.0 - ti) * (1.0 - tj) * v[[i, j]]
            + ti * (1.0 - tj) * v[[i + 1, j]]
            + (1.0 - ti) * tj * v[[i, j + 1]]
            + ti * tj * v[[i + 1, j + 1]],
    )
}

/// Ridge points (ξ, τ): the maximum along rays from the origin, in the plane
/// scaled by the axis-cut maxima.
pub fn ridge_points(m: &CorrelationMap, n_rays: usize) -> Result<Vec<(f64, f64)>> {
    let i0 = nearest(&m.xi, 0.0);
    let j0 = nearest(&m.tau, 0.0);
    let far = |axis: &[f64], cut: Vec<f64>, c: usize| {
        let mut best = c;
        for (k, &v) in cut.iter().enumerate() {
            if v > cut[best] {
                best = k;
            }
        }
        (axis[best] - axis[c]).abs()
    };
    let sx = far(&m.xi, m.values.column(j0).to_vec(), i0);
    let st = far(&m.tau, m.values.row(i0).to_vec(), j0);
    if !(sx > 0.0 && st > 0.0) {
        return Err(Error::NotRingLike(f64::INFINITY));
    }
    let steps = 600;
    let rmax = 3.0;
    let mut pts = Vec::with_capacity(n_rays);
    for k in 0..n_rays {
        let a = 2.0 * PI * k as f64 / n_rays as f64;
        let (c, s) = (a.cos(), a.sin());
        let samples: Vec<f64> = (0..=steps)
            .map(|t| {
                let r = rmax * t as f64 / steps as f64;
                bilinear(m, r * sx * c, r * st * s).unwrap_or(0.0)
            })
            .collect();
        let mut best = 0;
        for (t, &v) in samples.iter().enumerate() {
            if v > samples[best] {
                best = t;
            }
        }
        let dr = rmax / steps as f64;
        let mut r = best as f64 * dr;
        if best > 0 && best < steps {
            let (y0, y1, y2) = (samples[best - 1], samples[best], samples[best + 1]);
            let den = y0 - 2.0 * y1 + y2;
            if den < 0.0 {
                r += 0.5 * (y0 - y2) / den * dr;
            }
        }
        pts.push((r * sx * c, r * st * s));
    }
    Ok(pts)
}

/// Least-squares a·ξ² + b·τ² = 1 through ridge points.
pub fn fit_ellipse(pts: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    let (mut s11, mut s12, mut s22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x, y) in pts {
        let (u, v) = (x * x, y * y);
        s11 += u * u;
        s12 += u * v;
        s22 += v * v;
        r1 += u;
        r2 += v;
    }
    let det = s11 * s22 - s12 * s12;
    if det.abs() < 1e-300 {
        return Err(Error::NotRingLike(f64::INFINITY));
    }
    let a = (r1 * s22 - r2 * s12) / det;
    let b = (s11 * r2 - s12 * r1) / det;
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::NotRingLike(f64::INFINITY));
    }
    let res = (pts
        .iter()
        .map(|&(x, y)| (a * x * x + b * y * y - 1.0).powi(2))
        .sum::<f64>()
        / pts.len() as f64)
        .sqrt();
    Ok((1.0 / a.sqrt(), 1.0 / b.sqrt(), res))
}

pub fn ring_fit(m: &CorrelationMap) -> Result<RingFit> {
    let pts = ridge_points(m, 360)?;
    let (xi0, tau0, residual) = fit_ellipse(&pts)?;
    if residual > RING_RESIDUAL_BOUND {
        return Err(Error::NotRingLike(residual));
    }
    let max = m.values.iter().cloned().fold(0.0, f64::max);
    Ok(RingFit {
        xi0,
        tau0,
        center_suppression: m.at(0.0, 0.0) / max,
        residual,
    })
}
