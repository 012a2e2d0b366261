//! Hong-Ou-Mandel curves for bright twin beams: g²₁₂(τ) and the normalized
//! variance of the difference signal, with visibility and mode counting.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::outer_fwhm;
use crate::quad::adaptive_simpson;
use crate::spectrum::{mismatch_taylor, CrystalConfig, GainProfile, Interaction};

/// Leading-order mismatch model with a Gaussian pump envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomModel {
    pub interaction: Interaction,
    /// Δ = c Ω² (type I) or c Ω (type II), rad/µm/fs^l.
    pub coeff: f64,
    pub length_um: f64,
    pub g_max: f64,
    pub tau_d_fs: f64,
}

impl HomModel {
    pub fn new(cfg: &CrystalConfig) -> Result<Self> {
        let tau = cfg.pump_duration_ps.ok_or(Error::MissingPumpDuration)?;
        let c = mismatch_taylor(cfg, 2)?;
        let coeff = match cfg.interaction {
            Interaction::TypeI => c[2],
            Interaction::TypeII => c[1],
        };
        Ok(Self {
            interaction: cfg.interaction,
            coeff,
            length_um: cfg.length_um(),
            g_max: cfg.gain,
            tau_d_fs: tau * 1e3,
        })
    }

    pub fn delta_l(&self, omega: f64) -> f64 {
        let p = match self.interaction {
            Interaction::TypeI => omega * omega,
            Interaction::TypeII => omega,
        };
        self.coeff * p * self.length_um
    }

    /// G(t) = G_max exp(−2 ln2 (t/τ_d)²).
    pub fn gain_at(&self, t: f64) -> f64 {
        self.g_max * (-2.0 * LN_2 * (t / self.tau_d_fs).powi(2)).exp()
    }

    /// Half width of the low-gain sinc² spectrum at half maximum.
    pub fn half_bandwidth(&self) -> f64 {
        // sinc²(x) = 1/2 at x = 1.39156
        let x = 2.0 * 1.391_557_377_922_737;
        let c = (self.coeff * self.length_um).abs();
        match self.interaction {
            Interaction::TypeI => (x / c).sqrt(),
            Interaction::TypeII => x / c,
        }
    }

    /// Upper Ω limit: six low-gain bandwidths, widened by √G for type I or G
    /// for type II when the gain exceeds 1.
    pub fn omega_max(&self) -> f64 {
        let widen = match self.interaction {
            Interaction::TypeI => self.g_max.max(1.0).sqrt(),
            Interaction::TypeII => self.g_max.max(1.0),
        };
        12.0 * self.half_bandwidth() * widen
    }
}

/// U = cosh𝒢 + i(ΔL/2𝒢) sinh𝒢, V = (G/𝒢) sinh𝒢, continued to imaginary 𝒢.
pub fn uv_functions(gain: f64, delta_l: f64) -> (Complex64, Complex64) {
    let p = GainProfile::new(gain, delta_l);
    (
        Complex64::new(p.cosh, 0.5 * delta_l * p.sinhc),
        Complex64::new(gain * p.sinhc, 0.0),
    )
}

impl HomModel {
    /// PDC photon flux vs time, ∫|V(Ω, t)|² dΩ over Ω ≥ 0.
    pub fn flux(&self, t: f64) -> Result<f64> {
        adaptive_simpson(|w| self.uv(w, t).1.norm_sqr(), 0.0, self.omega_max(), 1e-8, 1e-300, 64)
    }

    /// (∫I dt)² / ∫I² dt of the PDC flux: the window over which a pulse
    /// counts as stationary.
    pub fn effective_duration_fs(&self) -> Result<f64> {
        let span = 3.0 * self.tau_d_fs;
        let n = 601;
        let h = 2.0 * span / (n - 1) as f64;
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        for k in 0..n {
            let i = self.flux(-span + k as f64 * h)?;
            s1 += i;
            s2 += i * i;
        }
        Ok(s1 * s1 / s2 * h)
    }

    pub fn uv(&self, omega: f64, t: f64) -> (Complex64, Complex64) {
        uv_functions(self.gain_at(t), self.delta_l(omega))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomConfig {
    pub model: HomModel,
    /// Detection time T in fs; must exceed the dip width by far.
    pub detection_window_fs: f64,
    pub delays_fs: Vec<f64>,
    /// Detected spatial modes; divides the g² excess.
    pub spatial_modes: f64,
    pub rel_tol: f64,
}

impl HomConfig {
    pub fn new(cfg: &CrystalConfig, detection_window_fs: f64, delays_fs: Vec<f64>) -> Result<Self> {
        let model = HomModel::new(cfg)?;
        if !(detection_window_fs > 0.0) {
            return Err(Error::invalid("detection_window", "must be positive"));
        }
        if delays_fs.len() < 3 {
            return Err(Error::invalid("delays", "need at least 3 delays"));
        }
        let coherence = 1.0 / model.half_bandwidth();
        if detection_window_fs < 10.0 * coherence {
            return Err(Error::invalid("detection_window", "must be much longer than the dip"));
        }
        Ok(Self {
            model,
            detection_window_fs,
            delays_fs,
            spatial_modes: 1.0,
            rel_tol: 1e-6,
        })
    }

    /// T set to the effective duration of the PDC pulse.
    pub fn pulsed(cfg: &CrystalConfig, delays_fs: Vec<f64>) -> Result<Self> {
        let t = HomModel::new(cfg)?.effective_duration_fs()?;
        Self::new(cfg, t, delays_fs)
    }

    pub fn with_spatial_modes(mut self, m: f64) -> Result<Self> {
        if !(m >= 1.0) {
            return Err(Error::invalid("spatial_modes", "must be at least 1"));
        }
        self.spatial_modes = m;
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurveKind {
    G2,
    Nrf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomCurve {
    pub kind: CurveKind,
    pub delays_fs: Vec<f64>,
    pub values: Vec<f64>,
    pub extremum_delay: f64,
    pub extremum_value: f64,
    pub visibility: f64,
}

fn integrate(f: impl Fn(f64) -> f64, hi: f64, tau: f64, rel: f64) -> Result<f64> {
    // enough panels to resolve cos(2Ωτ)
    let panels = (64.0f64).max(8.0 * hi * tau.abs() / PI).min(1e6) as usize;
    adaptive_simpson(f, 0.0, hi, rel, 1e-300, panels)
}

/// The τ-dependent bracket [·] of the type-I or type-II expressions.
fn bracket(m: &HomModel, omega: f64, tau: f64, kind: CurveKind) -> f64 {
    let (u0, v0) = m.uv(omega, 0.0);
    let (_, vt) = m.uv(omega, tau);
    let (v0s, vts, u0s) = (v0.norm_sqr(), vt.norm_sqr(), u0.norm_sqr());
    let interference = match m.interaction {
        Interaction::TypeI => u0s * (2.0 * omega * tau).cos(),
        Interaction::TypeII => (u0.conj().powi(2) * Complex64::from_polar(1.0, 2.0 * omega * tau)).re,
    };
    v0s * match kind {
        CurveKind::G2 => v0s - vts + u0s - interference,
        CurveKind::Nrf => vts + interference,
    }
}

fn curve(hc: &HomConfig, kind: CurveKind) -> Result<HomCurve> {
    let m = &hc.model;
    let hi = m.omega_max();
    let norm = integrate(|w| m.uv(w, 0.0).1.norm_sqr(), hi, 0.0, hc.rel_tol)?;
    let values = hc
        .delays_fs
        .par_iter()
        .map(|&tau| {
            let num = integrate(|w| bracket(m, w, tau, kind), hi, tau, hc.rel_tol)?;
            Ok(match kind {
                CurveKind::G2 => 1.0 + num / (hc.detection_window_fs / PI * norm * norm * hc.spatial_modes),
                CurveKind::Nrf => 1.0 + num / norm,
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    let pick = |a: f64, b: f64| match kind {
        CurveKind::G2 => a < b,
        CurveKind::Nrf => a > b,
    };
    let mut k = 0;
    for (i, &v) in values.iter().enumerate() {
        if pick(v, values[k]) {
            k = i;
        }
    }
    let mut c = HomCurve {
        kind,
        delays_fs: hc.delays_fs.clone(),
        extremum_delay: hc.delays_fs[k],
        extremum_value: values[k],
        values,
        visibility: 0.0,
    };
    c.visibility = visibility(&c);
    Ok(c)
}

pub fn hom_g2_curve(hc: &HomConfig) -> Result<HomCurve> {
    curve(hc, CurveKind::G2)
}

pub fn hom_nrf_curve(hc: &HomConfig) -> Result<HomCurve> {
    curve(hc, CurveKind::Nrf)
}

/// Mean over the outer 10% of the delay axis, 5% from each end.
pub fn far_level(values: &[f64]) -> f64 {
    let k = ((values.len() as f64 * 0.05).ceil() as usize).max(1);
    let n = values.len();
    let s: f64 = values[..k].iter().chain(&values[n - k..]).sum();
    s / (2 * k) as f64
}

/// |g(∞) − g(extremum)| / g(∞).
pub fn visibility(c: &HomCurve) -> f64 {
    let inf = far_level(&c.values);
    (inf - c.extremum_value).abs() / inf
}

/// FWHM of the dip or peak measured from the far level.
pub fn extremum_width(c: &HomCurve) -> Result<f64> {
    let inf = far_level(&c.values);
    let depth: Vec<f64> = c.values.iter().map(|v| (v - inf).abs()).collect();
    crate::profile::fwhm(&c.delays_fs, &depth)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeCounts {
    pub peak_fwhm_fs: f64,
    pub pedestal_fwhm_fs: f64,
    pub pedestal_level: f64,
    pub g2_background: f64,
    pub m_temp: f64,
    pub m_tot: f64,
}

/// Peak and pedestal widths of a wide-range NRF curve. The pedestal level
/// is read 3-4 peak widths from the peak and the peak width is re-measured
/// above it until stable.
pub fn peak_and_pedestal(nrf: &HomCurve) -> Result<(f64, f64, f64)> {
    let x = &nrf.delays_fs;
    let y: Vec<f64> = nrf.values.iter().map(|v| v - 1.0).collect();
    let top = nrf.extremum_value - 1.0;
    let t0 = nrf.extremum_delay;
    let mut width = crate::profile::fwhm(x, &y)?;
    let mut level = 0.0;
    for _ in 0..8 {
        let ring: Vec<f64> = x
            .iter()
            .zip(&y)
            .filter(|(t, _)| {
                let d = (*t - t0).abs();
                d >= 3.0 * width && d <= 4.0 * width
            })
            .map(|(_, v)| *v)
            .collect();
        if ring.is_empty() {
            return Err(Error::invalid("delays", "axis too coarse to separate peak and pedestal"));
        }
        level = ring.iter().sum::<f64>() / ring.len() as f64;
        let half = level + 0.5 * (top - level);
        let above: Vec<f64> = y.iter().map(|v| (v - half).max(0.0)).collect();
        let lo = above.iter().position(|&v| v > 0.0);
        let hi = above.iter().rposition(|&v| v > 0.0);
        let (Some(lo), Some(hi)) = (lo, hi) else {
            return Err(Error::NoHalfCrossing);
        };
        if lo == 0 || hi + 1 == y.len() {
            return Err(Error::NoHalfCrossing);
        }
        let cross = |i: usize, j: usize| x[i] + (y[i] - half) / (y[i] - y[j]) * (x[j] - x[i]);
        let w = cross(hi, hi + 1) - cross(lo, lo - 1);
        let done = (w - width).abs() < 1e-6 * width;
        width = w;
        if done {
            break;
        }
    }
    let ped: Vec<f64> = y.iter().map(|v| v.min(level)).collect();
    let pedestal = outer_fwhm(x, &ped)?;
    Ok((width, pedestal, level + 1.0))
}

/// M_temp = pedestal FWHM / peak FWHM of the NRF curve; M_tot = 1/(g² − 1)
/// from the far level of the g² curve.
pub fn mode_counts(nrf: &HomCurve, g2: &HomCurve) -> Result<ModeCounts> {
    let (peak, pedestal, level) = peak_and_pedestal(nrf)?;
    let bg = far_level(&g2.values);
    if !(bg > 1.0) {
        return Err(Error::invalid("g2", "background must exceed 1"));
    }
    Ok(ModeCounts {
        peak_fwhm_fs: peak,
        pedestal_fwhm_fs: pedestal,
        pedestal_level: level,
        g2_background: bg,
        m_temp: pedestal / peak,
        m_tot: 1.0 / (bg - 1.0),
    })
}
