//! Joint spectral amplitude, Schmidt decomposition, gain redistribution,
//! covariance synthesis and reconstruction, Fedorov ratio and SFG mode
//! counting.

use std::f64::consts::LN_2;

use nalgebra::DMatrix;
use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::{fwhm, outer_fwhm};
use crate::rng;
use crate::special::{ln_sinh_sq, sinc};
use crate::dispersion::Polarization;
use crate::spectrum::{linspace, CrystalConfig, Interaction};

/// F(Ωs, Ωi); rows over Ωs, columns over Ωi.
#[derive(Debug, Clone, PartialEq)]
pub struct JointAmplitude {
    pub omega_s: Vec<f64>,
    pub omega_i: Vec<f64>,
    pub values: Array2<Complex64>,
}

impl JointAmplitude {
    pub fn from_fn(omega_s: Vec<f64>, omega_i: Vec<f64>, f: impl Fn(f64, f64) -> Complex64 + Sync) -> Self {
        let rows: Vec<Vec<Complex64>> = omega_s
            .par_iter()
            .map(|&ws| omega_i.iter().map(|&wi| f(ws, wi)).collect())
            .collect();
        let mut values = Array2::zeros((omega_s.len(), omega_i.len()));
        for (r, row) in rows.into_iter().enumerate() {
            for (c, v) in row.into_iter().enumerate() {
                values[[r, c]] = v;
            }
        }
        Self {
            omega_s,
            omega_i,
            values,
        }
    }

    pub fn ds(&self) -> f64 {
        step(&self.omega_s)
    }

    pub fn di(&self) -> f64 {
        step(&self.omega_i)
    }

    pub fn jsi(&self) -> Array2<f64> {
        self.values.mapv(|z| z.norm_sqr())
    }
}

fn step(x: &[f64]) -> f64 {
    if x.len() > 1 {
        x[1] - x[0]
    } else {
        1.0
    }
}

/// Pump spectral amplitude exp(−(Ωs+Ωi)²τ²/(8 ln 2)) for intensity FWHM τ (fs).
pub fn pump_envelope(sum: f64, tau_fs: f64) -> f64 {
    (-(sum * tau_fs).powi(2) / (8.0 * LN_2)).exp()
}

/// Collinear mismatch with nondegenerate pump frequency ω_p + Ωs + Ωi.
pub fn jsa_mismatch(cfg: &CrystalConfig, ws: f64, wi: f64) -> f64 {
    let m = &cfg.material;
    let w0 = cfg.omega0();
    let ks = m.k_of_omega(Polarization::Ordinary, w0 + ws, cfg.phi);
    let pol_i = match cfg.interaction {
        Interaction::TypeI => Polarization::Ordinary,
        Interaction::TypeII => Polarization::Extraordinary,
    };
    let ki = m.k_of_omega(pol_i, w0 + wi, cfg.phi);
    let kp = m.k_of_omega(Polarization::Extraordinary, 2.0 * w0 + ws + wi, cfg.phi);
    ks + ki - kp
}

fn jsa_value(cfg: &CrystalConfig, tau_fs: f64, ws: f64, wi: f64) -> Complex64 {
    let dl = jsa_mismatch(cfg, ws, wi) * cfg.length_um();
    Complex64::from_polar(pump_envelope(ws + wi, tau_fs) * sinc(0.5 * dl), 0.5 * dl)
}

fn tau_fs(cfg: &CrystalConfig) -> Result<f64> {
    cfg.pump_duration_ps.map(|t| t * 1e3).ok_or(Error::MissingPumpDuration)
}

/// Low-gain JSA on the given detuning axes.
pub fn build_jsa(cfg: &CrystalConfig, omega_s: Vec<f64>, omega_i: Vec<f64>) -> Result<JointAmplitude> {
    let tau = tau_fs(cfg)?;
    let wmax = omega_s
        .iter()
        .chain(&omega_i)
        .fold(0.0f64, |a, &b| a.max(b.abs()));
    cfg.check_grid_window(wmax)?;
    Ok(JointAmplitude::from_fn(omega_s, omega_i, |ws, wi| jsa_value(cfg, tau, ws, wi)))
}

/// Schmidt modes as discrete orthonormal vectors on the kernel axes.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtDecomposition {
    /// Non-increasing, summing to 1.
    pub lambdas: Vec<f64>,
    /// Row l is ψ_l sampled on `omega_s`.
    pub signal_modes: Array2<Complex64>,
    /// Row l is φ_l sampled on `omega_i`.
    pub idler_modes: Array2<Complex64>,
    pub omega_s: Vec<f64>,
    pub omega_i: Vec<f64>,
}

pub fn schmidt_number(lambdas: &[f64]) -> f64 {
    let s: f64 = lambdas.iter().sum();
    let s2: f64 = lambdas.iter().map(|l| l * l).sum();
    s * s / s2
}

impl SchmidtDecomposition {
    pub fn k(&self) -> f64 {
        schmidt_number(&self.lambdas)
    }

    pub fn n_modes(&self) -> usize {
        self.lambdas.len()
    }

    /// Per-mode gains G_l = G̃√Λ_l.
    pub fn mode_gains(&self, g_tilde: f64) -> Vec<f64> {
        self.lambdas.iter().map(|l| g_tilde * l.sqrt()).collect()
    }

    /// Keep the leading `n` modes and renormalize.
    pub fn truncate(&self, n: usize) -> Self {
        let n = n.min(self.n_modes()).max(1);
        let s: f64 = self.lambdas[..n].iter().sum();
        Self {
            lambdas: self.lambdas[..n].iter().map(|l| l / s).collect(),
            signal_modes: self.signal_modes.slice(ndarray::s![..n, ..]).to_owned(),
            idler_modes: self.idler_modes.slice(ndarray::s![..n, ..]).to_owned(),
            omega_s: self.omega_s.clone(),
            omega_i: self.omega_i.clone(),
        }
    }
}

/// Relative weight below which modes are dropped from the decomposition.
pub const MODE_CUTOFF: f64 = 1e-26;

fn svd_modes(
    kernel: DMatrix<Complex64>,
    omega_s: &[f64],
    omega_i: &[f64],
) -> Result<SchmidtDecomposition> {
    let total: f64 = kernel.iter().map(|z| z.norm_sqr()).sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateKernel);
    }
    let svd = kernel.svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let s2: Vec<f64> = order.iter().map(|&k| svd.singular_values[k].powi(2)).collect();
    let sum: f64 = s2.iter().sum();
    let keep = s2.iter().take_while(|&&v| v > MODE_CUTOFF * sum).count().max(1);
    let (ns, ni) = (omega_s.len(), omega_i.len());
    let mut signal = Array2::zeros((keep, ns));
    let mut idler = Array2::zeros((keep, ni));
    for (l, &k) in order.iter().take(keep).enumerate() {
        for r in 0..ns {
            signal[[l, r]] = u[(r, k)];
        }
        for c in 0..ni {
            idler[[l, c]] = vt[(k, c)];
        }
    }
    let kept: f64 = s2[..keep].iter().sum();
    Ok(SchmidtDecomposition {
        lambdas: s2[..keep].iter().map(|v| v / kept).collect(),
        signal_modes: signal,
        idler_modes: idler,
        omega_s: omega_s.to_vec(),
        omega_i: omega_i.to_vec(),
    })
}

/// SVD of the sampled kernel with midpoint weights √(ΔΩs ΔΩi) absorbed.
pub fn schmidt_decompose(f: &JointAmplitude) -> Result<SchmidtDecomposition> {
    let (ns, ni) = f.values.dim();
    let w = (f.ds() * f.di()).sqrt();
    let kernel = DMatrix::from_fn(ns, ni, |r, c| f.values[[r, c]] * w);
    svd_modes(kernel, &f.omega_s, &f.omega_i)
}

/// Λ̃_l = sinh²(G̃√Λ_l)/Σ sinh²(G̃√Λ_l); modes unchanged.
pub fn redistribute_gain(d: &SchmidtDecomposition, g_tilde: f64) -> SchmidtDecomposition {
    let lambdas = redistribute_lambdas(&d.lambdas, g_tilde);
    SchmidtDecomposition {
        lambdas,
        ..d.clone()
    }
}

pub fn redistribute_lambdas(lambdas: &[f64], g_tilde: f64) -> Vec<f64> {
    if g_tilde < 1e-6 {
        // sinh²x ≈ x²(1 + x²/3): weights ∝ Λ(1 + G̃²Λ/3)
        let w: Vec<f64> = lambdas.iter().map(|l| l * (1.0 + g_tilde * g_tilde * l / 3.0)).collect();
        let s: f64 = w.iter().sum();
        return w.iter().map(|v| v / s).collect();
    }
    let logs: Vec<f64> = lambdas
        .iter()
        .map(|l| {
            let x = g_tilde * l.sqrt();
            if x > 0.0 {
                ln_sinh_sq(x)
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|v| v / s).collect()
}

/// Unconditional and conditional widths and their ratio R.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WidthPair {
    pub unconditional: f64,
    pub conditional: f64,
    pub ratio: f64,
}

impl WidthPair {
    fn new(unconditional: f64, conditional: f64) -> Self {
        Self {
            unconditional,
            conditional,
            ratio: unconditional / conditional,
        }
    }
}

/// Widths along Ωs: FWHM of the marginal and of the slice through the JSI
/// maximum at fixed Ωi.
pub fn fedorov_ratio(omega_s: &[f64], jsi: &Array2<f64>) -> Result<WidthPair> {
    let marginal: Vec<f64> = jsi.rows().into_iter().map(|r| r.sum()).collect();
    let (mut bj, mut bv) = (0, -1.0);
    for ((_, j), &v) in jsi.indexed_iter() {
        if v > bv {
            (bj, bv) = (j, v);
        }
    }
    let slice = jsi.column(bj).to_vec();
    Ok(WidthPair::new(fwhm(omega_s, &marginal)?, fwhm(omega_s, &slice)?))
}

/// JSA on a symmetric axis stored only inside the band |Ωs + Ωi| ≲ pump
/// width, for kernels too large to hold densely.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedJsa {
    pub omega: Vec<f64>,
    /// Per signal row: first idler index and the stored values.
    pub rows: Vec<(usize, Vec<Complex64>)>,
}

/// Band half-width in units of the pump amplitude σ.
pub const BAND_SIGMAS: f64 = 8.0;

pub fn build_jsa_banded(cfg: &CrystalConfig, omega_max: f64, n: usize) -> Result<BandedJsa> {
    let tau = tau_fs(cfg)?;
    cfg.check_grid_window(omega_max)?;
    let omega = linspace(-omega_max, omega_max, n);
    let d = step(&omega);
    let sigma = 2.0 * LN_2.sqrt() / tau;
    let half = ((BAND_SIGMAS * sigma / d).ceil() as usize).max(1);
    let rows = (0..n)
        .into_par_iter()
        .map(|s| {
            let center = n - 1 - s;
            let lo = center.saturating_sub(half);
            let hi = (center + half).min(n - 1);
            let vals = (lo..=hi).map(|i| jsa_value(cfg, tau, omega[s], omega[i])).collect();
            (lo, vals)
        })
        .collect();
    Ok(BandedJsa { omega, rows })
}

impl BandedJsa {
    pub fn d(&self) -> f64 {
        step(&self.omega)
    }

    /// K = (Tr ρ)²/Tr ρ² with ρ the reduced signal kernel; equal to
    /// 1/ΣΛ² without an SVD.
    pub fn schmidt_number(&self) -> f64 {
        let n = self.rows.len();
        let overlap = |a: usize, b: usize| -> Complex64 {
            let (la, ref va) = self.rows[a];
            let (lb, ref vb) = self.rows[b];
            let lo = la.max(lb);
            let hi = (la + va.len()).min(lb + vb.len());
            let mut acc = Complex64::new(0.0, 0.0);
            for i in lo..hi {
                acc += va[i - la] * vb[i - lb].conj();
            }
            acc
        };
        let trace: f64 = (0..n).map(|s| overlap(s, s).re).sum();
        let reach = self.rows.iter().map(|r| r.1.len()).max().unwrap_or(0);
        let tr2: f64 = (0..n)
            .into_par_iter()
            .map(|s| {
                let lo = s.saturating_sub(reach);
                let hi = (s + reach).min(n - 1);
                (lo..=hi).map(|t| overlap(s, t).norm_sqr()).sum::<f64>()
            })
            .sum();
        trace * trace / tr2
    }

    pub fn marginal(&self) -> Vec<f64> {
        self.rows
            .iter()
            .map(|(_, v)| v.iter().map(|z| z.norm_sqr()).sum())
            .collect()
    }

    /// |F|² along Ωs at fixed idler index.
    pub fn column(&self, i: usize) -> Vec<f64> {
        self.rows
            .iter()
            .map(|(lo, v)| {
                if i >= *lo && i < lo + v.len() {
                    v[i - lo].norm_sqr()
                } else {
                    0.0
                }
            })
            .collect()
    }

    pub fn fedorov_ratio(&self) -> Result<WidthPair> {
        let (mut bi, mut bv) = (0, -1.0);
        for (lo, v) in &self.rows {
            for (k, z) in v.iter().enumerate() {
                if z.norm_sqr() > bv {
                    bv = z.norm_sqr();
                    bi = lo + k;
                }
            }
        }
        Ok(WidthPair::new(
            fwhm(&self.omega, &self.marginal())?,
            fwhm(&self.omega, &self.column(bi))?,
        ))
    }
}

/// cov[N_s(Ωs), N_i(Ωi)] = |Σ u_l v_l ψ_l(Ωs) φ_l(Ωi)|² per bin pair.
pub fn covariance_from_schmidt(d: &SchmidtDecomposition, gains: &[f64]) -> Array2<f64> {
    let (ns, ni) = (d.omega_s.len(), d.omega_i.len());
    let m = gains.len().min(d.n_modes());
    let uv: Vec<f64> = gains[..m].iter().map(|g| 0.5 * (2.0 * g).sinh()).collect();
    let rows: Vec<Vec<f64>> = (0..ns)
        .into_par_iter()
        .map(|r| {
            (0..ni)
                .map(|c| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for l in 0..m {
                        acc += d.signal_modes[[l, r]] * d.idler_modes[[l, c]] * uv[l];
                    }
                    acc.norm_sqr()
                })
                .collect()
        })
        .collect();
    Array2::from_shape_fn((ns, ni), |(r, c)| rows[r][c])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Detection {
    /// Signal and idler measured on separate spectrometers.
    TwoBeam,
    /// One spectrometer sees (E_s + E_i)/√2; needs identical axes.
    SingleBeam,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleOptions {
    pub n_pulses: usize,
    pub seed: u64,
    pub detection: Detection,
    /// Relative RMS pulse-to-pulse jitter of all mode gains.
    pub gain_jitter: f64,
}

/// Per-pulse photon numbers per spectral bin; rows are pulses.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEnsemble {
    pub omega_s: Vec<f64>,
    pub omega_i: Vec<f64>,
    pub signal: Array2<f64>,
    /// Absent for single-beam detection.
    pub idler: Option<Array2<f64>>,
    pub seed: u64,
}

/// Ensemble of two-mode squeezed Schmidt pairs as classical fields.
/// Mode l carries Wigner amplitudes α_l, β_l ~ CN(0, ½); the signal field is
/// Σ(u_l α_l + v_l β_l*)ψ_l and the idler Σ(u_l β_l + v_l α_l*)φ_l, so that
/// ⟨a_s a_i⟩ = u_l v_l. The symmetric-ordering vacuum ½ is removed per bin.
pub fn simulate_pulse_ensemble(
    d: &SchmidtDecomposition,
    gains: &[f64],
    opts: &EnsembleOptions,
) -> Result<SpectralEnsemble> {
    let m = gains.len().min(d.n_modes());
    if opts.detection == Detection::SingleBeam && d.omega_s != d.omega_i {
        return Err(Error::invalid("detection", "single-beam detection needs identical signal and idler axes"));
    }
    let (ns, ni) = (d.omega_s.len(), d.omega_i.len());
    let vac_s: Vec<f64> = (0..ns)
        .map(|r| 0.5 * (0..m).map(|l| d.signal_modes[[l, r]].norm_sqr()).sum::<f64>())
        .collect();
    let vac_i: Vec<f64> = (0..ni)
        .map(|c| 0.5 * (0..m).map(|l| d.idler_modes[[l, c]].norm_sqr()).sum::<f64>())
        .collect();
    let gains = &gains[..m];
    let pulses: Vec<(Vec<f64>, Vec<f64>)> = (0..opts.n_pulses)
        .into_par_iter()
        .map(|p| {
            let mut r = rng::stream(opts.seed, p as u64);
            let scale = if opts.gain_jitter > 0.0 {
                let z: f64 = r.sample(StandardNormal);
                (1.0 + opts.gain_jitter * z).max(0.0)
            } else {
                1.0
            };
            let mut cs = Vec::with_capacity(m);
            let mut ci = Vec::with_capacity(m);
            for &g in gains {
                let g = g * scale;
                let (u, v) = (g.cosh(), g.sinh());
                let mut cn = || {
                    let a: f64 = r.sample(StandardNormal);
                    let b: f64 = r.sample(StandardNormal);
                    Complex64::new(a, b) * 0.5
                };
                let (alpha, beta) = (cn(), cn());
                cs.push(alpha * u + beta.conj() * v);
                ci.push(beta * u + alpha.conj() * v);
            }
            let field = |modes: &Array2<Complex64>, c: &[Complex64], k: usize| {
                let mut acc = Complex64::new(0.0, 0.0);
                for l in 0..m {
                    acc += c[l] * modes[[l, k]];
                }
                acc
            };
            match opts.detection {
                Detection::TwoBeam => (
                    (0..ns).map(|k| field(&d.signal_modes, &cs, k).norm_sqr() - vac_s[k]).collect(),
                    (0..ni).map(|k| field(&d.idler_modes, &ci, k).norm_sqr() - vac_i[k]).collect(),
                ),
                Detection::SingleBeam => (
                    (0..ns)
                        .map(|k| {
                            let e = (field(&d.signal_modes, &cs, k) + field(&d.idler_modes, &ci, k))
                                * std::f64::consts::FRAC_1_SQRT_2;
                            e.norm_sqr() - 0.5 * (vac_s[k] + vac_i[k])
                        })
                        .collect(),
                    Vec::new(),
                ),
            }
        })
        .collect();
    let mut signal = Array2::zeros((opts.n_pulses, ns));
    let mut idler = match opts.detection {
        Detection::TwoBeam => Some(Array2::zeros((opts.n_pulses, ni))),
        Detection::SingleBeam => None,
    };
    for (p, (s, i)) in pulses.into_iter().enumerate() {
        for (k, v) in s.into_iter().enumerate() {
            signal[[p, k]] = v;
        }
        if let Some(id) = idler.as_mut() {
            for (k, v) in i.into_iter().enumerate() {
                id[[p, k]] = v;
            }
        }
    }
    Ok(SpectralEnsemble {
        omega_s: d.omega_s.clone(),
        omega_i: d.omega_i.clone(),
        signal,
        idler,
        seed: opts.seed,
    })
}

impl SpectralEnsemble {
    pub fn mean_signal(&self) -> Vec<f64> {
        column_means(&self.signal)
    }
}

fn column_means(a: &Array2<f64>) -> Vec<f64> {
    let n = a.nrows() as f64;
    a.columns().into_iter().map(|c| c.sum() / n).collect()
}

/// Var(N_fixed − N_scan) over scanned bins. Single-beam ensembles scan their
/// own bins; two-beam ensembles fix a signal bin and scan the idler.
pub fn variance_difference_trace(e: &SpectralEnsemble, fixed_bin: usize) -> Vec<f64> {
    let fixed = e.signal.column(fixed_bin);
    let scan = e.idler.as_ref().unwrap_or(&e.signal);
    let n = fixed.len() as f64;
    scan.columns()
        .into_iter()
        .map(|col| {
            let (mut s, mut s2) = (0.0, 0.0);
            for (a, b) in fixed.iter().zip(col.iter()) {
                let d = a - b;
                s += d;
                s2 += d * d;
            }
            let m = s / n;
            (s2 / n - m * m).max(0.0) * n / (n - 1.0)
        })
        .collect()
}

/// Sample covariance between signal and idler bins.
pub fn empirical_covariance(e: &SpectralEnsemble) -> Array2<f64> {
    let idler = e.idler.as_ref().unwrap_or(&e.signal);
    let n = e.signal.nrows();
    let ms = column_means(&e.signal);
    let mi = column_means(idler);
    let a = DMatrix::from_fn(n, e.signal.ncols(), |p, k| e.signal[[p, k]] - ms[k]);
    let b = DMatrix::from_fn(n, idler.ncols(), |p, k| idler[[p, k]] - mi[k]);
    let c = a.transpose() * b / (n as f64 - 1.0);
    Array2::from_shape_fn((c.nrows(), c.ncols()), |(r, k)| c[(r, k)])
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub decomposition: SchmidtDecomposition,
    /// Lowest-decile signal-idler correlation coefficient over bright bin
    /// pairs; near zero when the covariance is confined to the correlation
    /// band.
    pub background_fraction: f64,
    /// Background above `BACKGROUND_FLAG` degrades the modes.
    pub background_flagged: bool,
}

pub const BACKGROUND_FLAG: f64 = 0.01;

/// Bins dimmer than this fraction of the brightest are ignored.
pub const BRIGHT_BIN: f64 = 0.1;

/// Normalized coefficients below this count as noise when checking rank.
pub const RANK_FLOOR: f64 = 1e-3;

/// Modes from the SVD of √cov (negative covariances clipped to 0). The
/// coefficients come out ∝ (u_l v_l)², renormalized to sum to 1.
pub fn reconstruct_from_covariance(
    cov: &Array2<f64>,
    omega_s: &[f64],
    omega_i: &[f64],
    n_modes: usize,
) -> Result<SchmidtDecomposition> {
    let max = cov.iter().cloned().fold(0.0, f64::max);
    if !(max > 0.0) {
        return Err(Error::InsufficientEnsemble { rank: 0, requested: n_modes });
    }
    let (ns, ni) = cov.dim();
    let kernel = DMatrix::from_fn(ns, ni, |r, c| Complex64::new(cov[[r, c]].max(0.0).sqrt(), 0.0));
    let d = svd_modes(kernel, omega_s, omega_i)?;
    let rank = d.lambdas.iter().take_while(|&&l| l > RANK_FLOOR).count();
    if rank < n_modes {
        return Err(Error::InsufficientEnsemble { rank, requested: n_modes });
    }
    Ok(d.truncate(n_modes))
}

pub fn reconstruct_modes(e: &SpectralEnsemble, n_modes: usize) -> Result<Reconstruction> {
    if e.signal.nrows() < 2 {
        return Err(Error::InsufficientEnsemble { rank: 0, requested: n_modes });
    }
    let cov = empirical_covariance(e);
    let decomposition = reconstruct_from_covariance(&cov, &e.omega_s, &e.omega_i, n_modes)?;
    let idler = e.idler.as_ref().unwrap_or(&e.signal);
    let (ms, mi) = (column_means(&e.signal), column_means(idler));
    let sd = |a: &Array2<f64>, m: &[f64]| -> Vec<f64> {
        let n = a.nrows() as f64;
        a.columns()
            .into_iter()
            .zip(m)
            .map(|(c, mu)| (c.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
            .collect()
    };
    let (ss, si) = (sd(&e.signal, &ms), sd(idler, &mi));
    let bright = |m: &[f64]| {
        let top = m.iter().cloned().fold(0.0, f64::max);
        m.iter().map(|&v| v > BRIGHT_BIN * top).collect::<Vec<bool>>()
    };
    let (bs, bi) = (bright(&ms), bright(&mi));
    let mut r: Vec<f64> = cov
        .indexed_iter()
        .filter(|((a, b), _)| bs[*a] && bi[*b] && ss[*a] > 0.0 && si[*b] > 0.0)
        .map(|((a, b), v)| v / (ss[a] * si[b]))
        .collect();
    r.sort_by(f64::total_cmp);
    let background_fraction = if r.is_empty() { 0.0 } else { r[r.len() / 10] };
    Ok(Reconstruction {
        decomposition,
        background_fraction,
        background_flagged: background_fraction > BACKGROUND_FLAG,
    })
}

/// |⟨a|b⟩|² for discrete unit vectors.
pub fn mode_overlap(a: &[Complex64], b: &[Complex64]) -> f64 {
    let ip: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    let na: f64 = a.iter().map(|z| z.norm_sqr()).sum();
    let nb: f64 = b.iter().map(|z| z.norm_sqr()).sum();
    ip.norm_sqr() / (na * nb)
}

/// SFG spectrum split into the coherent peak and the incoherent pedestal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SfgSpectrum {
    /// Sum-frequency detuning Ωs + Ωi.
    pub omega: Vec<f64>,
    pub coherent: Vec<f64>,
    pub pedestal: Vec<f64>,
    pub coherent_fwhm: f64,
    pub pedestal_fwhm: Option<f64>,
    /// pedestal FWHM / peak FWHM
    pub r_tilde: Option<f64>,
}

fn convolve(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.norm_sqr() == 0.0 {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Coherent |Σ u_l v_l (ψ_l ⋆ φ_l)|² and pedestal Σ_{l≠l'} v_l² v_l'² |ψ_l ⋆ φ_l'|².
/// Signal and idler axes must share one spacing.
pub fn sfg_spectrum(d: &SchmidtDecomposition, gains: &[f64]) -> Result<SfgSpectrum> {
    let ds = step(&d.omega_s);
    if (ds - step(&d.omega_i)).abs() > 1e-9 * ds.abs() {
        return Err(Error::invalid("grid", "signal and idler spacing must match"));
    }
    let m = gains.len().min(d.n_modes());
    let omega: Vec<f64> = (0..d.omega_s.len() + d.omega_i.len() - 1)
        .map(|k| d.omega_s[0] + d.omega_i[0] + k as f64 * ds)
        .collect();
    let rows = |a: &Array2<Complex64>, l: usize| a.row(l).to_vec();
    let psi: Vec<Vec<Complex64>> = (0..m).map(|l| rows(&d.signal_modes, l)).collect();
    let phi: Vec<Vec<Complex64>> = (0..m).map(|l| rows(&d.idler_modes, l)).collect();
    let mut coherent_amp = vec![Complex64::new(0.0, 0.0); omega.len()];
    for l in 0..m {
        let uv = 0.5 * (2.0 * gains[l]).sinh();
        for (k, z) in convolve(&psi[l], &phi[l]).into_iter().enumerate() {
            coherent_amp[k] += z * uv;
        }
    }
    let v2: Vec<f64> = gains[..m].iter().map(|g| g.sinh().powi(2)).collect();
    let pedestal = (0..m)
        .into_par_iter()
        .map(|l| {
            let mut acc = vec![0.0; omega.len()];
            for lp in 0..m {
                if lp == l {
                    continue;
                }
                let w = v2[l] * v2[lp];
                for (k, z) in convolve(&psi[l], &phi[lp]).into_iter().enumerate() {
                    acc[k] += w * z.norm_sqr();
                }
            }
            acc
        })
        .collect::<Vec<_>>()
        // summed in order so the result does not depend on the thread count
        .into_iter()
        .fold(vec![0.0; omega.len()], |mut a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
            a
        });
    let coherent: Vec<f64> = coherent_amp.iter().map(|z| z.norm_sqr()).collect();
    let coherent_fwhm = fwhm(&omega, &coherent)?;
    let pedestal_fwhm = if pedestal.iter().any(|&v| v > 0.0) {
        outer_fwhm(&omega, &pedestal).ok()
    } else {
        None
    };
    Ok(SfgSpectrum {
        r_tilde: pedestal_fwhm.map(|p| p / coherent_fwhm),
        omega,
        coherent,
        pedestal,
        coherent_fwhm,
        pedestal_fwhm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn redistribution_small_gain_branch_is_continuous() {
        let l = [0.5, 0.3, 0.2];
        let a = redistribute_lambdas(&l, 0.999e-6);
        let b = redistribute_lambdas(&l, 1.001e-6);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn huge_gain_does_not_overflow() {
        let l = redistribute_lambdas(&[0.6, 0.4], 2000.0);
        assert!(l.iter().all(|v| v.is_finite()));
        assert!(l[0] > 0.999);
    }
}
