//! Phase mismatch, parametric gain and PDC spectra.

use std::f64::consts::PI;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersion::{Material, Polarization, C_UM_PER_FS};
use crate::error::{Error, Result};
use crate::roots;
use crate::special::{cosh_sq, sinhc_sq};

/// Polarization scheme `pump -> signal idler`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Interaction {
    /// e → o + o
    #[serde(rename = "typeI_e_oo")]
    TypeI,
    /// e → o + e
    #[serde(rename = "typeII_e_oe")]
    TypeII,
}

impl Interaction {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "typei" | "typei_e_oo" | "type-i" | "i" | "eoo" => Ok(Interaction::TypeI),
            "typeii" | "typeii_e_oe" | "type-ii" | "ii" | "eoe" => Ok(Interaction::TypeII),
            _ => Err(Error::Parse(format!("unknown interaction `{s}`"))),
        }
    }

    pub fn idler_polarization(self) -> Polarization {
        match self {
            Interaction::TypeI => Polarization::Ordinary,
            Interaction::TypeII => Polarization::Extraordinary,
        }
    }
}

/// Crystal, geometry and pump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrystalConfig {
    pub material: Material,
    pub length_mm: f64,
    /// Angle between pump wave vector and optic axis (rad).
    pub phi: f64,
    pub interaction: Interaction,
    pub pump_wavelength_nm: f64,
    pub gain: f64,
    /// Pump pulse FWHM in ps.
    pub pump_duration_ps: Option<f64>,
}

impl CrystalConfig {
    pub fn new(
        material: Material,
        length_mm: f64,
        phi: f64,
        interaction: Interaction,
        pump_wavelength_nm: f64,
        gain: f64,
    ) -> Result<Self> {
        let cfg = Self {
            material,
            length_mm,
            phi,
            interaction,
            pump_wavelength_nm,
            gain,
            pump_duration_ps: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length_mm > 0.0) {
            return Err(Error::invalid("length_L", "must be positive"));
        }
        if !(self.gain >= 0.0) || !self.gain.is_finite() {
            return Err(Error::invalid("gain_G", "must be finite and non-negative"));
        }
        if let Some(t) = self.pump_duration_ps {
            if !(t > 0.0) {
                return Err(Error::invalid("pump_duration_tau_d", "must be positive"));
            }
        }
        self.material.check_window(self.pump_wavelength_nm * 1e-3)?;
        self.material.check_window(2.0 * self.pump_wavelength_nm * 1e-3)?;
        Ok(())
    }

    pub fn with_gain(&self, gain: f64) -> Self {
        Self {
            gain,
            ..self.clone()
        }
    }

    pub fn with_phi(&self, phi: f64) -> Self {
        Self {
            phi,
            ..self.clone()
        }
    }

    pub fn with_duration_ps(&self, tau: f64) -> Self {
        Self {
            pump_duration_ps: Some(tau),
            ..self.clone()
        }
    }

    pub fn length_um(&self) -> f64 {
        self.length_mm * 1e3
    }

    pub fn omega_pump(&self) -> f64 {
        2.0 * PI * C_UM_PER_FS / (self.pump_wavelength_nm * 1e-3)
    }

    /// Degenerate carrier ω_p/2.
    pub fn omega0(&self) -> f64 {
        0.5 * self.omega_pump()
    }

    pub fn k_pump(&self) -> f64 {
        self.material
            .k_of_omega(Polarization::Extraordinary, self.omega_pump(), self.phi)
    }

    pub fn k_signal(&self, omega_detuning: f64) -> f64 {
        self.material
            .k_of_omega(Polarization::Ordinary, self.omega0() + omega_detuning, self.phi)
    }

    /// Idler wavevector magnitude for transverse wavevector `q_idler`.
    fn k_idler(&self, q_idler: f64, omega_detuning: f64) -> f64 {
        let w = self.omega0() - omega_detuning;
        match self.interaction {
            Interaction::TypeI => self.material.k_of_omega(Polarization::Ordinary, w, self.phi),
            Interaction::TypeII => {
                // direction depends on k itself; two fixed-point passes suffice
                let mut k = self.material.k_of_omega(Polarization::Extraordinary, w, self.phi);
                for _ in 0..3 {
                    let a = (q_idler / k).clamp(-1.0, 1.0).asin();
                    k = self
                        .material
                        .k_of_omega(Polarization::Extraordinary, w, self.phi + a);
                }
                k
            }
        }
    }

    pub fn check_grid_window(&self, omega_max: f64) -> Result<()> {
        for w in [self.omega0() + omega_max, self.omega0() - omega_max] {
            if w <= 0.0 {
                return Err(Error::invalid("omega_axis", "detuning exceeds the carrier"));
            }
            self.material.check_window(2.0 * PI * C_UM_PER_FS / w)?;
        }
        Ok(())
    }
}

/// Longitudinal mismatch Δ = k_sz(q,Ω) + k_iz(−q,−Ω) − k_p in rad/µm.
pub fn mismatch(cfg: &CrystalConfig, q: f64, omega: f64) -> Result<f64> {
    let ks = cfg.k_signal(omega);
    let ki = cfg.k_idler(-q, omega);
    kz_sum(ks, ki, q).map(|s| s - cfg.k_pump())
}

fn kz_sum(ks: f64, ki: f64, q: f64) -> Result<f64> {
    let q2 = q * q;
    let kmin = ks.min(ki);
    if q2 > kmin * kmin {
        return Err(Error::EvanescentWave { q2, k2: kmin * kmin });
    }
    Ok((ks * ks - q2).sqrt() + (ki * ki - q2).sqrt())
}

/// Collinear degenerate phase-matching angle (rad).
pub fn phase_matching_angle(
    material: &Material,
    interaction: Interaction,
    pump_wavelength_nm: f64,
) -> Result<f64> {
    let base = CrystalConfig {
        material: material.clone(),
        length_mm: 1.0,
        phi: 0.0,
        interaction,
        pump_wavelength_nm,
        gain: 0.0,
        pump_duration_ps: None,
    };
    base.validate()?;
    roots::first_root(
        |phi| mismatch(&base.with_phi(phi), 0.0, 0.0).unwrap_or(f64::NAN),
        1e-3,
        PI / 2.0 - 1e-3,
        400,
        1e-12,
        "collinear mismatch",
    )
}

/// Gain quantities at one mismatch: 𝒢² = G² − (ΔL/2)² and the stable
/// real forms of sinh𝒢/𝒢 and cosh𝒢.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainProfile {
    pub gamma_sq: f64,
    pub sinhc: f64,
    pub cosh: f64,
}

impl GainProfile {
    pub fn new(gain: f64, delta_l: f64) -> Self {
        let gamma_sq = gain * gain - 0.25 * delta_l * delta_l;
        Self {
            gamma_sq,
            sinhc: sinhc_sq(gamma_sq),
            cosh: cosh_sq(gamma_sq),
        }
    }

    /// (G/𝒢 · sinh𝒢 / sinh G)², equal to 1 at Δ = 0.
    pub fn spectral_weight(&self, gain: f64) -> f64 {
        let norm = sinhc_sq(gain * gain);
        (self.sinhc / norm).powi(2)
    }
}

pub fn gain_profile(cfg: &CrystalConfig, q: f64, omega: f64) -> Result<GainProfile> {
    let d = mismatch(cfg, q, omega)?;
    Ok(GainProfile::new(cfg.gain, d * cfg.length_um()))
}

/// Unnormalized spectrum at one point; 1 where Δ = 0.
pub fn spectrum_point(cfg: &CrystalConfig, q: f64, omega: f64) -> Result<f64> {
    Ok(gain_profile(cfg, q, omega)?.spectral_weight(cfg.gain))
}

/// Uniform transverse-wavevector and frequency-detuning axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralGrid {
    /// rad/µm
    pub q: Vec<f64>,
    /// rad/fs
    pub omega: Vec<f64>,
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    let d = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + i as f64 * d })
        .collect()
}

fn check_axis(name: &'static str, x: &[f64]) -> Result<()> {
    let n = x.len();
    if n < 2 {
        return Err(Error::invalid(name, "needs at least 2 samples"));
    }
    let d = x[1] - x[0];
    if !(d > 0.0) {
        return Err(Error::invalid(name, "must be strictly increasing"));
    }
    let scale = x[n - 1].abs().max(x[0].abs());
    for i in 0..n {
        if i > 0 && ((x[i] - x[i - 1]) - d).abs() > 1e-9 * scale.max(d) {
            return Err(Error::invalid(name, "spacing is not uniform"));
        }
        if (x[i] + x[n - 1 - i]).abs() > 1e-9 * scale.max(d) {
            return Err(Error::invalid(name, "not symmetric about zero"));
        }
    }
    Ok(())
}

impl SpectralGrid {
    pub fn new(q: Vec<f64>, omega: Vec<f64>) -> Result<Self> {
        check_axis("q_axis", &q)?;
        check_axis("omega_axis", &omega)?;
        Ok(Self { q, omega })
    }

    pub fn symmetric(n_q: usize, q_max: f64, n_omega: usize, omega_max: f64) -> Result<Self> {
        Self::new(linspace(-q_max, q_max, n_q), linspace(-omega_max, omega_max, n_omega))
    }

    pub fn dq(&self) -> f64 {
        self.q[1] - self.q[0]
    }

    pub fn domega(&self) -> f64 {
        self.omega[1] - self.omega[0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Normalization {
    #[serde(rename = "unit_max")]
    UnitMax,
    #[serde(rename = "raw")]
    Raw,
}

impl Normalization {
    pub fn as_str(self) -> &'static str {
        match self {
            Normalization::UnitMax => "unit_max",
            Normalization::Raw => "raw",
        }
    }
}

/// Real map over two axes; `values[[i, j]]` sits at `(axis1[i], axis2[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum2D {
    pub axis1_name: String,
    pub axis1: Vec<f64>,
    pub axis2_name: String,
    pub axis2: Vec<f64>,
    pub values: Array2<f64>,
    pub normalization: Normalization,
    pub masked_cells: usize,
}

impl Spectrum2D {
    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    pub fn normalize_unit_max(&mut self) {
        let m = self.max();
        if m > 0.0 {
            self.values.mapv_inplace(|v| v / m);
            self.normalization = Normalization::UnitMax;
        }
    }

    pub fn grid(&self) -> Result<SpectralGrid> {
        if self.axis1_name != "q" || self.axis2_name != "omega" {
            return Err(Error::invalid("spectrum", "expected (q, omega) axes"));
        }
        SpectralGrid::new(self.axis1.clone(), self.axis2.clone())
    }

    /// Cut along axis2 at the axis1 sample nearest `x1`.
    pub fn cut_axis2(&self, x1: f64) -> Vec<f64> {
        let i = nearest(&self.axis1, x1);
        self.values.row(i).to_vec()
    }

    /// Cut along axis1 at the axis2 sample nearest `x2`.
    pub fn cut_axis1(&self, x2: f64) -> Vec<f64> {
        let j = nearest(&self.axis2, x2);
        self.values.column(j).to_vec()
    }
}

pub(crate) fn nearest(axis: &[f64], x: f64) -> usize {
    let mut best = 0;
    for (i, &v) in axis.iter().enumerate() {
        if (v - x).abs() < (axis[best] - x).abs() {
            best = i;
        }
    }
    best
}

/// S(q, Ω), unit-max normalized. Evanescent cells are zero and counted.
pub fn spectrum_qomega(cfg: &CrystalConfig, grid: &SpectralGrid) -> Result<Spectrum2D> {
    let omax = grid.omega[grid.omega.len() - 1];
    cfg.check_grid_window(omax)?;
    let nq = grid.q.len();
    let nw = grid.omega.len();
    let kp = cfg.k_pump();
    let l = cfg.length_um();
    let ks: Vec<f64> = grid.omega.iter().map(|&w| cfg.k_signal(w)).collect();
    let ki_collinear: Vec<f64> = grid.omega.iter().map(|&w| cfg.k_idler(0.0, w)).collect();
    let rows: Vec<(Vec<f64>, usize)> = grid
        .q
        .par_iter()
        .map(|&q| {
            let mut row = vec![0.0; nw];
            let mut masked = 0;
            for j in 0..nw {
                let ki = match cfg.interaction {
                    Interaction::TypeI => ki_collinear[j],
                    Interaction::TypeII => cfg.k_idler(-q, grid.omega[j]),
                };
                match kz_sum(ks[j], ki, q) {
                    Ok(s) => row[j] = GainProfile::new(cfg.gain, (s - kp) * l).spectral_weight(cfg.gain),
                    Err(_) => masked += 1,
                }
            }
            (row, masked)
        })
        .collect();
    let mut values = Array2::zeros((nq, nw));
    let mut masked = 0;
    for (i, (row, m)) in rows.into_iter().enumerate() {
        masked += m;
        values.row_mut(i).assign(&ndarray::Array1::from(row));
    }
    let mut s = Spectrum2D {
        axis1_name: "q".into(),
        axis1: grid.q.clone(),
        axis2_name: "omega".into(),
        axis2: grid.omega.clone(),
        values,
        normalization: Normalization::Raw,
        masked_cells: masked,
    };
    s.normalize_unit_max();
    Ok(s)
}

/// Jacobian |∂(q_x, q_y, Ω)/∂(θ_x, θ_y, λ)| = 8π³n²c/λ⁴ at fixed index.
pub fn angular_jacobian(lambda_um: f64, n: f64) -> f64 {
    8.0 * PI.powi(3) * n * n * C_UM_PER_FS / lambda_um.powi(4)
}

fn bilinear(s: &Spectrum2D, x1: f64, x2: f64) -> f64 {
    let (a, b) = (&s.axis1, &s.axis2);
    if x1 < a[0] || x1 > a[a.len() - 1] || x2 < b[0] || x2 > b[b.len() - 1] {
        return 0.0;
    }
    let locate = |ax: &[f64], x: f64| {
        let d = ax[1] - ax[0];
        let f = ((x - ax[0]) / d).clamp(0.0, (ax.len() - 1) as f64);
        let i = (f.floor() as usize).min(ax.len() - 2);
        (i, f - i as f64)
    };
    let (i, ti) = locate(a, x1);
    let (j, tj) = locate(b, x2);
    let v = &s.values;
    (1.0 - ti) * (1.0 - tj) * v[[i, j]]
        + ti * (1.0 - tj) * v[[i + 1, j]]
        + (1.0 - ti) * tj * v[[i, j + 1]]
        + ti * tj * v[[i + 1, j + 1]]
}

fn resample_angular(s: &Spectrum2D, cfg: &CrystalConfig, jacobian: bool) -> Result<Spectrum2D> {
    let grid = s.grid()?;
    let w0 = cfg.omega0();
    let omax = grid.omega[grid.omega.len() - 1];
    let k0 = cfg.k_signal(0.0);
    let theta_axis: Vec<f64> = grid.q.iter().map(|q| q / k0).collect();
    let lam_lo = 2.0 * PI * C_UM_PER_FS / (w0 + omax);
    let lam_hi = 2.0 * PI * C_UM_PER_FS / (w0 - omax);
    let lambda_axis = linspace(lam_lo, lam_hi, grid.omega.len());
    let n0 = cfg.material.n(Polarization::Ordinary, 2.0 * PI * C_UM_PER_FS / w0, cfg.phi);
    let mut values = Array2::zeros((theta_axis.len(), lambda_axis.len()));
    for (j, &lam) in lambda_axis.iter().enumerate() {
        let omega = 2.0 * PI * C_UM_PER_FS / lam - w0;
        let k = cfg.k_signal(omega);
        let jac = if jacobian { angular_jacobian(lam, n0) } else { 1.0 };
        for (i, &th) in theta_axis.iter().enumerate() {
            values[[i, j]] = bilinear(s, th * k, omega) * jac;
        }
    }
    let mut out = Spectrum2D {
        axis1_name: "theta".into(),
        axis1: theta_axis,
        axis2_name: "lambda_um".into(),
        axis2: lambda_axis,
        values,
        normalization: Normalization::Raw,
        masked_cells: s.masked_cells,
    };
    out.normalize_unit_max();
    Ok(out)
}

/// Re-express S(q, Ω) on (θ, λ) with the λ⁻⁴ Jacobian.
pub fn to_wavelength_angular(s: &Spectrum2D, cfg: &CrystalConfig) -> Result<Spectrum2D> {
    resample_angular(s, cfg, true)
}

/// Tuning curves on (θ, λ) for several orientations, without the Jacobian.
pub fn tuning_curve(cfg: &CrystalConfig, phis: &[f64], grid: &SpectralGrid) -> Result<Vec<Spectrum2D>> {
    phis.iter()
        .map(|&phi| {
            let c = cfg.with_phi(phi);
            resample_angular(&spectrum_qomega(&c, grid)?, &c, false)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Topology {
    /// Branches cross at θ = 0, degenerate λ.
    CollinearDegenerate,
    /// Branches meet θ = 0 at two distinct wavelengths.
    Nondegenerate,
    /// Degenerate emission only at nonzero angle.
    NoncollinearRing,
    Empty,
}

/// Connected components (4-neighbour) of cells above `threshold`.
pub fn count_components(s: &Spectrum2D, threshold: f64) -> usize {
    let (n1, n2) = s.values.dim();
    let mut seen = Array2::from_elem((n1, n2), false);
    let mut count = 0;
    let mut stack = Vec::new();
    for i in 0..n1 {
        for j in 0..n2 {
            if seen[[i, j]] || s.values[[i, j]] <= threshold {
                continue;
            }
            count += 1;
            seen[[i, j]] = true;
            stack.push((i, j));
            while let Some((a, b)) = stack.pop() {
                let mut push = |x: usize, y: usize| {
                    if !seen[[x, y]] && s.values[[x, y]] > threshold {
                        seen[[x, y]] = true;
                        stack.push((x, y));
                    }
                };
                if a > 0 {
                    push(a - 1, b);
                }
                if a + 1 < n1 {
                    push(a + 1, b);
                }
                if b > 0 {
                    push(a, b - 1);
                }
                if b + 1 < n2 {
                    push(a, b + 1);
                }
            }
        }
    }
    count
}

/// Classify a tuning curve on (θ, λ) axes from where the bright region meets
/// the collinear line and the degenerate line.
pub fn classify_topology(s: &Spectrum2D, cfg: &CrystalConfig, threshold: f64) -> Topology {
    let lam0 = 2.0 * PI * C_UM_PER_FS / cfg.omega0();
    let i0 = nearest(&s.axis1, 0.0);
    let j0 = nearest(&s.axis2, lam0);
    if s.values[[i0, j0]] > threshold {
        return Topology::CollinearDegenerate;
    }
    if s.values.column(j0).iter().any(|&v| v > threshold) {
        return Topology::NoncollinearRing;
    }
    if s.values.row(i0).iter().any(|&v| v > threshold) {
        return Topology::Nondegenerate;
    }
    Topology::Empty
}

/// Fornberg finite-difference weights for derivative `m` on `nodes` at 0.
fn fd_weights(nodes: &[f64], m: usize) -> Vec<f64> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = nodes[0];
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i];
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

/// Taylor coefficients c_l (l = 0..=order) of Δ(Ω) at q = 0, in rad/µm/fs^l.
pub fn mismatch_taylor(cfg: &CrystalConfig, order: usize) -> Result<Vec<f64>> {
    let h = 0.02 * cfg.omega0();
    cfg.check_grid_window(6.0 * h)?;
    let half = (order / 2 + 3) as i32;
    let nodes: Vec<f64> = (-half..=half).map(|i| i as f64).collect();
    let samples: Vec<f64> = nodes
        .iter()
        .map(|&x| mismatch(cfg, 0.0, x * h))
        .collect::<Result<_>>()?;
    let mut fact = 1.0;
    let mut out = Vec::with_capacity(order + 1);
    for l in 0..=order {
        if l > 0 {
            fact *= l as f64;
        }
        let w = fd_weights(&nodes, l);
        let d: f64 = w.iter().zip(&samples).map(|(a, b)| a * b).sum::<f64>() / h.powi(l as i32);
        out.push(d / fact);
    }
    Ok(out)
}

/// FWHM in Ω of S(0, Ω) sampled on `n` points over ±`omega_max`.
pub fn omega_fwhm_at_q0(cfg: &CrystalConfig, omega_max: f64, n: usize) -> Result<f64> {
    let x = linspace(-omega_max, omega_max, n);
    let y: Vec<f64> = x
        .iter()
        .map(|&w| spectrum_point(cfg, 0.0, w))
        .collect::<Result<_>>()?;
    crate::profile::fwhm(&x, &y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GainRegime {
    #[serde(rename = "high")]
    High,
    /// B√P small everywhere: I ≈ I0 B² P and only I0·B² is identifiable.
    #[serde(rename = "low")]
    Low,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainFit {
    pub i0: f64,
    pub b: f64,
    /// G = B√P per point.
    pub gains: Vec<f64>,
    /// RMS of (model − data)/data.
    pub rel_residual: f64,
    pub regime: GainRegime,
    pub iterations: usize,
}

pub fn gain_model(i0: f64, b: f64, power: f64) -> f64 {
    i0 * (b * power.sqrt()).sinh().powi(2)
}

/// Fit I = I0 sinh²(B√P) by damped Gauss–Newton on relative residuals.
pub fn fit_gain(powers: &[f64], intensities: &[f64], max_rel_residual: f64) -> Result<GainFit> {
    if powers.len() != intensities.len() || powers.len() < 4 {
        return Err(Error::invalid("power_list", "need at least 4 (P, I) pairs"));
    }
    if powers.iter().any(|&p| !(p > 0.0)) || intensities.iter().any(|&i| !(i > 0.0)) {
        return Err(Error::invalid("power_list", "powers and intensities must be positive"));
    }
    let n = powers.len();
    let sq: Vec<f64> = powers.iter().map(|p| p.sqrt()).collect();

    // seed from the two brightest points
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| intensities[b].total_cmp(&intensities[a]));
    let (a, b) = (idx[0], idx[1]);
    let b0 = if (sq[a] - sq[b]).abs() > 1e-12 * sq[a] {
        // sinh(B√Pa)/sinh(B√Pb) = √(Ia/Ib)
        let target = 0.5 * (intensities[a] / intensities[b]).ln();
        let f = |bb: f64| {
            let lhs = if bb * sq[a].min(sq[b]) > 30.0 {
                bb * (sq[a] - sq[b])
            } else {
                ((bb * sq[a]).sinh() / (bb * sq[b]).sinh()).ln()
            };
            lhs - target
        };
        let hi = 50.0 / sq[a].max(sq[b]);
        roots::bisect(f, 1e-9 / sq[a], hi, 1e-14 / sq[a], "gain seed").unwrap_or(1.0 / sq[a])
    } else {
        1.0 / sq[a]
    };
    let i00 = intensities[a] / (b0 * sq[a]).sinh().powi(2);

    let resid = |ln_i0: f64, bb: f64| -> f64 {
        (0..n)
            .map(|k| {
                let m = ln_i0.exp() * (bb * sq[k]).sinh().powi(2);
                ((m - intensities[k]) / intensities[k]).powi(2)
            })
            .sum()
    };
    let mut p = [i00.ln(), b0];
    let mut cost = resid(p[0], p[1]);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    for it in 0..200 {
        iterations = it + 1;
        let (mut jtj, mut jtr) = ([[0.0; 2]; 2], [0.0; 2]);
        for k in 0..n {
            let s = (p[1] * sq[k]).sinh();
            let m = p[0].exp() * s * s;
            let r = (m - intensities[k]) / intensities[k];
            let j0 = m / intensities[k];
            let j1 = p[0].exp() * (2.0 * p[1] * sq[k]).sinh() * sq[k] / intensities[k];
            let jr = [j0, j1];
            for u in 0..2 {
                jtr[u] += jr[u] * r;
                for v in 0..2 {
                    jtj[u][v] += jr[u] * jr[v];
                }
            }
        }
        let mut improved = false;
        let mut converged = false;
        for _ in 0..30 {
            let a00 = jtj[0][0] * (1.0 + lambda);
            let a11 = jtj[1][1] * (1.0 + lambda);
            let det = a00 * a11 - jtj[0][1] * jtj[1][0];
            if det.abs() < 1e-300 {
                lambda *= 10.0;
                continue;
            }
            let d0 = -(a11 * jtr[0] - jtj[0][1] * jtr[1]) / det;
            let d1 = -(a00 * jtr[1] - jtj[1][0] * jtr[0]) / det;
            let trial = [p[0] + d0, (p[1] + d1).max(1e-12)];
            let c = resid(trial[0], trial[1]);
            if c.is_finite() && c < cost {
                let rel = (cost - c) / cost.max(1e-300);
                p = trial;
                cost = c;
                lambda = (lambda * 0.3).max(1e-12);
                improved = true;
                converged = rel < 1e-13;
                break;
            }
            lambda *= 10.0;
        }
        if !improved || converged || cost < 1e-28 {
            break;
        }
    }
    let rel_residual = (cost / n as f64).sqrt();
    if !(rel_residual <= max_rel_residual) {
        return Err(Error::FitDiverged(rel_residual));
    }
    let gmax = p[1] * sq.iter().cloned().fold(0.0, f64::max);
    Ok(GainFit {
        i0: p[0].exp(),
        b: p[1],
        gains: sq.iter().map(|s| p[1] * s).collect(),
        rel_residual,
        regime: if gmax < 0.3 { GainRegime::Low } else { GainRegime::High },
        iterations,
    })
}
