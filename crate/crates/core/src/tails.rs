//! Statistics of multiphoton processes driven by fluctuating light:
//! harmonic and four-wave-mixing push-forwards, correlation transfer,
//! survival/hazard analysis and Pareto tail estimation.

use crate::error::{Error, Result};
use crate::rng::Streams;
use crate::special::{double_factorial_odd, factorial, ln_erfc, ln_gamma, ln_gamma_q};
use crate::stats::{PhotonDistribution, PulseEnsemble};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Monotone map from fundamental photon number to process output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProcessMap {
    /// N_out = K·Nⁿ.
    PowerLawHarmonic { n: u32, k_eff: f64 },
    /// N_out = sinh²(κN).
    FwmSinh2 { kappa: f64 },
}

impl ProcessMap {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ProcessMap::PowerLawHarmonic { n, k_eff } => {
                if n == 0 {
                    return Err(Error::invalid("n", "harmonic order must be ≥ 1"));
                }
                if !(k_eff > 0.0) {
                    return Err(Error::invalid("k_eff", "must be positive"));
                }
            }
            ProcessMap::FwmSinh2 { kappa } => {
                if !(kappa > 0.0) {
                    return Err(Error::invalid("kappa", "must be positive"));
                }
            }
        }
        Ok(())
    }

    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            ProcessMap::PowerLawHarmonic { n, k_eff } => k_eff * x.max(0.0).powi(n as i32),
            ProcessMap::FwmSinh2 { kappa } => (kappa * x.max(0.0)).sinh().powi(2),
        }
    }

    pub fn inverse(&self, y: f64) -> f64 {
        match *self {
            ProcessMap::PowerLawHarmonic { n, k_eff } => (y.max(0.0) / k_eff).powf(1.0 / n as f64),
            ProcessMap::FwmSinh2 { kappa } => y.max(0.0).sqrt().asinh() / kappa,
        }
    }

    /// dN_out/dN evaluated at the preimage of `y`.
    pub fn jacobian_at_output(&self, y: f64) -> f64 {
        match *self {
            ProcessMap::PowerLawHarmonic { n, k_eff } => {
                let x = self.inverse(y);
                n as f64 * k_eff * x.powi(n as i32 - 1)
            }
            // 2κ sinh cosh = 2κ√(y(1+y))
            ProcessMap::FwmSinh2 { kappa } => 2.0 * kappa * (y * (1.0 + y)).sqrt(),
        }
    }

    /// ln of the preimage, taking ln y so that far tails stay finite.
    fn ln_inverse_from_ln(&self, ln_y: f64) -> f64 {
        match *self {
            ProcessMap::PowerLawHarmonic { n, k_eff } => (ln_y - k_eff.ln()) / n as f64,
            ProcessMap::FwmSinh2 { kappa } => asinh_sqrt_exp(ln_y).ln() - kappa.ln(),
        }
    }
}

/// arcsinh(√y) from ln y, exact to rounding for huge y.
fn asinh_sqrt_exp(ln_y: f64) -> f64 {
    if ln_y > 60.0 {
        0.5 * ln_y + 2f64.ln() + 0.25 * (-ln_y).exp()
    } else {
        (0.5 * ln_y).exp().asinh()
    }
}

/// Pump statistics with a closed-form tail law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PumpKind {
    Thermal,
    Superbunched,
}

/// Output law of `map` applied to photon numbers drawn from `input`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PushForward {
    pub input: PhotonDistribution,
    pub map: ProcessMap,
}

/// Closed-form family, when one exists for the (input, map) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Closed {
    WeibullHarmonic { n: f64, mean_out: f64 },
    GenGammaHarmonic { n: f64, mean_out: f64 },
    /// FWM from a gamma pump: u = arcsinh√y is gamma(shape, scale).
    FwmGamma { shape: f64, scale: f64 },
}

pub fn pushforward_pdf(d: &PhotonDistribution, map: ProcessMap) -> Result<PushForward> {
    d.validate()?;
    map.validate()?;
    Ok(PushForward { input: d.clone(), map })
}

impl PushForward {
    fn closed(&self) -> Option<Closed> {
        use PhotonDistribution as D;
        match (&self.input, self.map) {
            (D::Thermal { mean }, ProcessMap::PowerLawHarmonic { n, k_eff }) => Some(Closed::WeibullHarmonic {
                n: n as f64,
                mean_out: k_eff * factorial(n) * mean.powi(n as i32),
            }),
            (D::Superbunched { mean }, ProcessMap::PowerLawHarmonic { n, k_eff }) => {
                Some(Closed::GenGammaHarmonic {
                    n: n as f64,
                    mean_out: k_eff * double_factorial_odd(n) * mean.powi(n as i32),
                })
            }
            (d, ProcessMap::FwmSinh2 { kappa }) => {
                let (shape, scale) = d.gamma_params()?;
                // N ~ Γ(a, θ) ⇒ κN ~ Γ(a, κθ)
                Some(Closed::FwmGamma {
                    shape,
                    scale: kappa * scale,
                })
            }
            _ => None,
        }
    }

    pub fn has_closed_form(&self) -> bool {
        self.closed().is_some()
    }

    /// Output density; closed form when available.
    pub fn pdf(&self, y: f64) -> f64 {
        if !(y > 0.0) {
            return 0.0;
        }
        match self.closed() {
            Some(Closed::WeibullHarmonic { n, mean_out }) => {
                let nf = (ln_gamma(n + 1.0)).exp();
                let z = (nf * y / mean_out).powf(1.0 / n);
                (nf.ln() / n - n.ln() - mean_out.ln() / n - (1.0 - 1.0 / n) * y.ln() - z).exp()
            }
            Some(Closed::GenGammaHarmonic { n, mean_out }) => {
                let df = double_factorial_odd(n as u32);
                let z = (df * y / mean_out).powf(1.0 / n);
                (df.ln() / (2.0 * n)
                    - n.ln()
                    - 0.5 * (2.0 * std::f64::consts::PI).ln()
                    - mean_out.ln() / (2.0 * n)
                    - (1.0 - 1.0 / (2.0 * n)) * y.ln()
                    - 0.5 * z)
                    .exp()
            }
            Some(Closed::FwmGamma { shape, scale }) => {
                let u = y.sqrt().asinh();
                // du/dy = 1/(2√(y(1+y)))
                ((shape - 1.0) * u.ln() - u / scale - ln_gamma(shape) - shape * scale.ln()
                    - (2.0 * (y * (1.0 + y)).sqrt()).ln())
                .exp()
            }
            None => self.pdf_numeric(y),
        }
    }

    /// Change of variables P_in(g⁻¹(y))/g′(g⁻¹(y)), always numeric.
    pub fn pdf_numeric(&self, y: f64) -> f64 {
        if !(y > 0.0) {
            return 0.0;
        }
        let x = self.map.inverse(y);
        self.input.pdf(x) / self.map.jacobian_at_output(y)
    }

    pub fn ccdf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 1.0;
        }
        self.ln_ccdf_ln(y.ln()).exp()
    }

    pub fn cdf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        match self.closed() {
            Some(_) => -self.ln_ccdf_ln(y.ln()).exp_m1(),
            None => self.input.cdf(self.map.inverse(y)),
        }
    }

    /// ln C̄ as a function of ln y; finite far beyond f64 range of y.
    pub fn ln_ccdf_ln(&self, ln_y: f64) -> f64 {
        match self.closed() {
            Some(Closed::WeibullHarmonic { n, mean_out }) => {
                let nf = ln_gamma(n + 1.0);
                -((nf + ln_y - mean_out.ln()) / n).exp()
            }
            Some(Closed::GenGammaHarmonic { n, mean_out }) => {
                let df = double_factorial_odd(n as u32).ln();
                let z = ((df + ln_y - mean_out.ln()) / (2.0 * n)).exp();
                ln_erfc(z / std::f64::consts::SQRT_2)
            }
            Some(Closed::FwmGamma { shape, scale }) => ln_gamma_q(shape, asinh_sqrt_exp(ln_y) / scale),
            None => {
                let x = self.map.ln_inverse_from_ln(ln_y).exp();
                self.input.ccdf(x).ln()
            }
        }
    }

    /// −d ln C̄ / d ln y at ln y, by a symmetric difference.
    pub fn local_tail_slope(&self, ln_y: f64) -> f64 {
        let h = 1e-3 * ln_y.abs().max(1.0);
        -(self.ln_ccdf_ln(ln_y + h) - self.ln_ccdf_ln(ln_y - h)) / (2.0 * h)
    }
}

/// Hazard over N, H(N)/N = −ln C̄(N)/N, of a pump law.
pub fn hazard_over_n(d: &PhotonDistribution, x: f64) -> f64 {
    let ln_c = match d.gamma_params() {
        Some((a, th)) => ln_gamma_q(a, x / th),
        None => d.ccdf(x).ln(),
    };
    -ln_c / x
}

/// g⁽ᵐ⁾ of the n-th harmonic from the fundamental sequence;
/// `g[k − 1]` holds g⁽ᵏ⁾.
pub fn cf_transfer(g: &[f64], n: usize, m: usize) -> Result<f64> {
    if n == 0 || m == 0 {
        return Err(Error::invalid("order", "n and m must be ≥ 1"));
    }
    if g.len() < m * n {
        return Err(Error::invalid(
            "g",
            format!("need the fundamental sequence up to order {}", m * n),
        ));
    }
    Ok(g[m * n - 1] / g[n - 1].powi(m as i32))
}

/// Statistical efficiency ξ⁽ⁿ⁾ = ⟨N_out⟩/⟨N⟩ⁿ.
pub fn statistical_efficiency(pump: &[f64], out: &[f64], n: u32) -> Result<f64> {
    if pump.is_empty() || pump.len() != out.len() {
        return Err(Error::invalid("ensemble", "pump and output must be paired and non-empty"));
    }
    let len = pump.len() as f64;
    let mp = pump.iter().sum::<f64>() / len;
    if mp == 0.0 {
        return Err(Error::ZeroMean);
    }
    Ok(out.iter().sum::<f64>() / len / mp.powi(n as i32))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Enhancement {
    pub order: u32,
    pub xi: f64,
    pub xi_reference: f64,
    pub ratio: f64,
    pub std_error: f64,
}

/// ξ of a fluctuating pump over ξ of a reference (coherent or
/// pseudo-coherent) pump, with a bootstrap error on the fluctuating side.
pub fn statistical_enhancement(
    pump: &[f64],
    out: &[f64],
    pump_ref: &[f64],
    out_ref: &[f64],
    n: u32,
    seed: u64,
) -> Result<Enhancement> {
    let xi = statistical_efficiency(pump, out, n)?;
    let xi_reference = statistical_efficiency(pump_ref, out_ref, n)?;
    let se = crate::stats::poisson_bootstrap_se(pump.len(), crate::stats::BOOTSTRAP_RESAMPLES, seed, |w| {
        let (mut sw, mut sp, mut so) = (0.0, 0.0, 0.0);
        for i in 0..w.len() {
            sw += w[i];
            sp += w[i] * pump[i];
            so += w[i] * out[i];
        }
        (so / sw) / (sp / sw).powi(n as i32)
    });
    Ok(Enhancement {
        order: n,
        xi,
        xi_reference,
        ratio: xi / xi_reference,
        std_error: se / xi_reference,
    })
}

/// Elementwise process output; channels `pump` and `out`.
/// A zero FWM coupling is accepted here and maps everything to zero.
pub fn sample_process(e: &PulseEnsemble, map: ProcessMap) -> Result<PulseEnsemble> {
    if map != (ProcessMap::FwmSinh2 { kappa: 0.0 }) {
        map.validate()?;
    }
    let pump = e.values().to_vec();
    let out: Vec<f64> = pump.par_iter().map(|&x| map.apply(x)).collect();
    let mut r = PulseEnsemble::new(vec![("pump".into(), pump), ("out".into(), out)], e.seed)?;
    r.meta = e.meta.clone();
    r.meta.insert("process".into(), serde_json::to_string(&map).unwrap_or_default());
    Ok(r)
}

/// Sorted samples with the (i − ½)/n empirical CDF.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCcdf {
    pub sorted: Vec<f64>,
}

impl EmpiricalCcdf {
    pub fn new(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("samples", "empty"));
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("samples", "non-finite value"));
        }
        let mut sorted = samples.to_vec();
        sorted.par_sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Self { sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// C̄ at each sorted sample: 1 − (i − ½)/n.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let n = self.len() as f64;
        self.sorted
            .iter()
            .enumerate()
            .map(|(i, &x)| (x, 1.0 - (i as f64 + 0.5) / n))
            .collect()
    }

    /// C̄(x) with k = #{N ≤ x}: (n − k + ½)/n, and 1 below the smallest sample.
    pub fn at(&self, x: f64) -> f64 {
        let n = self.len() as f64;
        let k = self.sorted.partition_point(|&v| v <= x) as f64;
        if k == 0.0 {
            1.0
        } else {
            (n - k + 0.5) / n
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        let i = ((p * self.len() as f64) as usize).min(self.len() - 1);
        self.sorted[i]
    }
}

fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    if !(lo > 0.0 && hi > lo) {
        return Vec::new();
    }
    let n = ((hi / lo).log10() * per_decade as f64).ceil().max(1.0) as usize;
    (0..=n)
        .map(|i| lo * (hi / lo).powf(i as f64 / n as f64))
        .collect()
}

/// H(N)/N on a log grid between the 1% quantile and the (n−10)-th sample.
pub fn hazard_trend(c: &EmpiricalCcdf) -> Vec<(f64, f64)> {
    let lo = c.quantile(0.01).max(f64::MIN_POSITIVE);
    let hi = c.sorted[c.len().saturating_sub(11)];
    log_grid(lo, hi, 20)
        .into_iter()
        .map(|x| (x, -c.at(x).ln() / x))
        .collect()
}

/// Knee of the hazard curve: the first N where H/N drops below 10% of its
/// value at the 10% quantile. `None` when the curve never flattens.
pub fn knee_n_min(c: &EmpiricalCcdf) -> Option<f64> {
    let start = c.quantile(0.1);
    if !(start > 0.0) {
        return None;
    }
    let reference = -c.at(start).ln() / start;
    let hi = c.sorted[c.len().saturating_sub(11)];
    log_grid(start, hi, 20)
        .into_iter()
        .find(|&x| -c.at(x).ln() / x < 0.1 * reference)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParetoMle {
    /// Exponent of the density, 1 + s/Σln(N/N_min).
    pub pdf_exponent: f64,
    /// Survival-function exponent α = pdf_exponent − 1.
    pub alpha: f64,
    pub n_min: f64,
    pub s: usize,
    pub std_error: f64,
}

/// Maximum-likelihood Pareto exponent over samples ≥ `n_min`.
pub fn pareto_mle(samples: &[f64], n_min: f64) -> Result<ParetoMle> {
    if !(n_min > 0.0) {
        return Err(Error::invalid("n_min", "must be positive"));
    }
    // fixed chunks summed in order: same bits for any thread count
    let (s, sum) = samples
        .par_chunks(1 << 14)
        .map(|c| {
            c.iter()
                .filter(|&&x| x >= n_min)
                .fold((0usize, 0.0), |a, &x| (a.0 + 1, a.1 + (x / n_min).ln()))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    if s == 0 {
        return Err(Error::invalid("n_min", "no sample at or above the cutoff"));
    }
    if sum <= 0.0 {
        return Err(Error::AllAtBoundary);
    }
    let alpha = s as f64 / sum;
    Ok(ParetoMle {
        pdf_exponent: 1.0 + alpha,
        alpha,
        n_min,
        s,
        std_error: alpha / (s as f64).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub alpha: f64,
    pub intercept: f64,
    pub window: (f64, f64),
    /// Largest change of α when either window end moves by ±0.2 decade.
    pub uncertainty: f64,
    pub points: usize,
}

fn slope_fit(c: &EmpiricalCcdf, lo: f64, hi: f64) -> Option<(f64, f64, usize)> {
    let pts: Vec<(f64, f64)> = log_grid(lo, hi, 20)
        .into_iter()
        .map(|x| (x.ln(), c.at(x).ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((-slope, my - slope * mx, pts.len()))
}

/// Least-squares slope of ln C̄ against ln N inside `window`.
pub fn ccdf_tail_fit(c: &EmpiricalCcdf, window: (f64, f64)) -> Result<TailFit> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::invalid("window", "need 0 < lo < hi"));
    }
    let (alpha, intercept, points) =
        slope_fit(c, lo, hi).ok_or_else(|| Error::invalid("window", "fewer than 3 grid points"))?;
    let f = 10f64.powf(0.2);
    let mut uncertainty: f64 = 0.0;
    for (a, b) in [(lo * f, hi), (lo / f, hi), (lo, hi * f), (lo, hi / f)] {
        if let Some((al, _, _)) = slope_fit(c, a, b.min(c.sorted[c.len() - 1])) {
            uncertainty = uncertainty.max((al - alpha).abs());
        }
    }
    Ok(TailFit {
        alpha,
        intercept,
        window,
        uncertainty,
        points,
    })
}

/// Theoretical Pareto exponent of FWM pumped by M-mode light of gain κ⟨N⟩.
pub fn fwm_tail_exponent_prediction(kappa: f64, mean: f64, modes: f64, pump: PumpKind) -> Result<f64> {
    let kappa_mean = kappa * mean;
    if !(kappa_mean > 0.0) || !(modes >= 1.0) {
        return Err(Error::invalid("kappa_mean", "need κ⟨N⟩ > 0 and M ≥ 1"));
    }
    Ok(match pump {
        PumpKind::Thermal => modes / (2.0 * kappa_mean),
        PumpKind::Superbunched => modes / (4.0 * kappa_mean),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub ccdf: Vec<(f64, f64)>,
    pub hazard: Vec<(f64, f64)>,
    pub alpha_fit: Option<TailFit>,
    pub alpha_mle: Option<ParetoMle>,
    /// H/N at the top of the hazard grid.
    pub tail_index_trend: f64,
}

/// Full tail analysis. Without an explicit `n_min` the hazard knee is used;
/// the fit window runs from `n_min` to the point with 10 samples above it.
pub fn tail_report(samples: &[f64], n_min: Option<f64>, window: Option<(f64, f64)>) -> Result<TailReport> {
    let c = EmpiricalCcdf::new(samples)?;
    let hazard = hazard_trend(&c);
    let n_min = n_min.or_else(|| knee_n_min(&c));
    let top = c.sorted[c.len().saturating_sub(11)];
    let window = window.or_else(|| n_min.filter(|&m| m < top).map(|m| (m, top)));
    let alpha_fit = match window {
        Some(w) => ccdf_tail_fit(&c, w).ok(),
        None => None,
    };
    let alpha_mle = match n_min {
        Some(m) => pareto_mle(samples, m).ok(),
        None => None,
    };
    let ccdf = log_grid(c.sorted[0].max(c.quantile(0.001)).max(f64::MIN_POSITIVE), c.sorted[c.len() - 1], 40)
        .into_iter()
        .map(|x| (x, c.at(x)))
        .collect();
    Ok(TailReport {
        tail_index_trend: hazard.last().map_or(f64::NAN, |h| h.1),
        ccdf,
        hazard,
        alpha_fit,
        alpha_mle,
    })
}

/// Inverse-CDF Pareto samples with C̄(N) = (N/n_min)^−α.
pub fn sample_pareto(alpha: f64, n_min: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    if !(alpha > 0.0) || !(n_min > 0.0) {
        return Err(Error::invalid("alpha", "need α > 0 and n_min > 0"));
    }
    let streams = Streams::new(seed);
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let u: f64 = 1.0 - streams.get(i as u64).random::<f64>();
            n_min * u.powf(-1.0 / alpha)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanTrend {
    pub sizes: Vec<usize>,
    /// Median over replicates of the running mean at each size.
    pub median_means: Vec<f64>,
    pub slope: f64,
    pub slope_ci: (f64, f64),
}

/// Growth of the running mean with sample size; for α < 1 the log-log
/// slope approaches 1/α − 1. Replicates draw with replacement.
pub fn indefinite_mean_demo(samples: &[f64], sizes: &[usize], replicates: usize, seed: u64) -> Result<MeanTrend> {
    if sizes.len() < 2 || sizes.windows(2).any(|w| w[1] <= w[0]) || sizes[0] == 0 {
        return Err(Error::invalid("sizes", "need ≥ 2 increasing positive sizes"));
    }
    if samples.is_empty() || replicates < 2 {
        return Err(Error::invalid("samples", "need samples and ≥ 2 replicates"));
    }
    let top = *sizes.last().unwrap();
    let streams = Streams::new(seed);
    let ln_s: Vec<f64> = sizes.iter().map(|&s| (s as f64).ln()).collect();
    let runs: Vec<(Vec<f64>, f64)> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = streams.get(r as u64);
            let mut acc = 0.0;
            let mut means = Vec::with_capacity(sizes.len());
            let mut k = 0;
            for i in 1..=top {
                acc += samples[rng.random_range(0..samples.len())];
                if i == sizes[k] {
                    means.push(acc / i as f64);
                    k += 1;
                }
            }
            let ln_m: Vec<f64> = means.iter().map(|m| m.ln()).collect();
            (means, ls_slope(&ln_s, &ln_m))
        })
        .collect();
    let median = |mut v: Vec<f64>| {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v[v.len() / 2]
    };
    let median_means = (0..sizes.len())
        .map(|j| median(runs.iter().map(|r| r.0[j]).collect()))
        .collect();
    let mut slopes: Vec<f64> = runs.iter().map(|r| r.1).collect();
    slopes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pick = |q: f64| slopes[((q * (slopes.len() - 1) as f64).round()) as usize];
    Ok(MeanTrend {
        sizes: sizes.to_vec(),
        median_means,
        slope: pick(0.5),
        slope_ci: (pick(0.025), pick(0.975)),
    })
}

fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Kolmogorov–Smirnov distance between samples and a CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}
