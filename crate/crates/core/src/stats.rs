//! Photon-number distributions, samplers, correlation-function estimators and
//! beam-splitter interference statistics.
//!
//! Photon numbers are treated classically (continuous `N`) except in the
//! Mandel transform and the Fock-state beam-splitter law, which are discrete.

use crate::error::{Error, Result};
use crate::quad::adaptive_simpson;
use crate::rng::Streams;
use crate::special::{erf, gamma_p, gamma_q, ln_binomial, ln_gamma};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution, Exp1, Gamma, Normal, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Histogram with explicit bin edges; `probs` sums to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub probs: Vec<f64>,
}

impl Histogram {
    pub fn new(edges: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if edges.len() != weights.len() + 1 || weights.is_empty() {
            return Err(Error::invalid("edges", "need one more edge than bins"));
        }
        if edges.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("edges", "must be strictly increasing"));
        }
        if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::invalid("weights", "must be finite and non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::invalid("weights", "all zero"));
        }
        Ok(Self {
            edges,
            probs: weights.iter().map(|w| w / total).collect(),
        })
    }

    /// Counts samples into `edges`; samples outside are dropped.
    pub fn from_samples(samples: &[f64], edges: Vec<f64>) -> Result<Self> {
        let n = edges.len().saturating_sub(1);
        let mut counts = vec![0.0; n];
        for &x in samples {
            if x < edges[0] || x > edges[n] {
                continue;
            }
            let k = edges.partition_point(|&e| e <= x).saturating_sub(1).min(n - 1);
            counts[k] += 1.0;
        }
        Self::new(edges, counts)
    }

    pub fn n_bins(&self) -> usize {
        self.probs.len()
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn density(&self) -> Vec<f64> {
        self.probs
            .iter()
            .zip(self.edges.windows(2))
            .map(|(p, w)| p / (w[1] - w[0]))
            .collect()
    }

    /// Raw moment with the density uniform inside each bin.
    pub fn moment(&self, k: u32) -> f64 {
        let k1 = k as i32 + 1;
        self.probs
            .iter()
            .zip(self.edges.windows(2))
            .map(|(p, w)| p * (w[1].powi(k1) - w[0].powi(k1)) / (k1 as f64 * (w[1] - w[0])))
            .sum()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for (p, w) in self.probs.iter().zip(self.edges.windows(2)) {
            if x >= w[1] {
                acc += p;
            } else {
                if x > w[0] {
                    acc += p * (x - w[0]) / (w[1] - w[0]);
                }
                break;
            }
        }
        acc.min(1.0)
    }
}

/// Logarithmic bin edges from `lo` to at least `hi`, `per_decade` per decade.
pub fn log_edges(lo: f64, hi: f64, per_decade: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo) || per_decade == 0 {
        return Err(Error::invalid("log_edges", "need 0 < lo < hi"));
    }
    let step = 1.0 / per_decade as f64;
    let n = ((hi / lo).log10() / step).ceil() as usize;
    Ok((0..=n).map(|i| lo * 10f64.powf(i as f64 * step)).collect())
}

pub fn linear_edges(lo: f64, hi: f64, n_bins: usize) -> Result<Vec<f64>> {
    if !(hi > lo) || n_bins == 0 {
        return Err(Error::invalid("linear_edges", "need lo < hi and n ≥ 1"));
    }
    Ok((0..=n_bins)
        .map(|i| lo + (hi - lo) * i as f64 / n_bins as f64)
        .collect())
}

/// Default log binning for heavy-tailed displays.
pub const LOG_BINS_PER_DECADE: usize = 40;

/// Photon-number distribution families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhotonDistribution {
    Dirac { mean: f64 },
    Poisson { mean: f64 },
    /// Gaussian stand-in for bright coherent light (or detector noise).
    GaussianNoise { mean: f64, sigma: f64 },
    Thermal { mean: f64 },
    Superbunched { mean: f64 },
    #[serde(rename = "thermal_M")]
    ThermalM { mean: f64, modes: f64 },
    #[serde(rename = "superbunched_M")]
    SuperbunchedM { mean: f64, modes: f64 },
    Empirical(Histogram),
}

use PhotonDistribution as D;

impl PhotonDistribution {
    pub fn validate(&self) -> Result<()> {
        let (mean, modes, sigma) = match self {
            D::Dirac { mean } | D::Poisson { mean } | D::Thermal { mean } | D::Superbunched { mean } => {
                (*mean, 1.0, 0.0)
            }
            D::GaussianNoise { mean, sigma } => (*mean, 1.0, *sigma),
            D::ThermalM { mean, modes } | D::SuperbunchedM { mean, modes } => (*mean, *modes, 0.0),
            D::Empirical(h) => {
                if h.edges[0] < 0.0 {
                    return Err(Error::invalid("edges", "photon numbers are non-negative"));
                }
                return Ok(());
            }
        };
        if !(mean >= 0.0) || !mean.is_finite() {
            return Err(Error::invalid("mean", format!("must be ≥ 0, got {mean}")));
        }
        if !(modes >= 1.0) || !modes.is_finite() {
            return Err(Error::invalid("modes", format!("must be ≥ 1, got {modes}")));
        }
        if !(sigma >= 0.0) {
            return Err(Error::invalid("sigma", format!("must be ≥ 0, got {sigma}")));
        }
        Ok(())
    }

    pub fn thermal_modes(mean: f64, modes: f64) -> Result<Self> {
        let d = D::ThermalM { mean, modes };
        d.validate().map(|_| d)
    }

    pub fn superbunched_modes(mean: f64, modes: f64) -> Result<Self> {
        let d = D::SuperbunchedM { mean, modes };
        d.validate().map(|_| d)
    }

    /// Shape and scale when the family is a gamma distribution.
    pub fn gamma_params(&self) -> Option<(f64, f64)> {
        match *self {
            D::Thermal { mean } => Some((1.0, mean)),
            D::Superbunched { mean } => Some((0.5, 2.0 * mean)),
            D::ThermalM { mean, modes } => Some((modes, mean / modes)),
            D::SuperbunchedM { mean, modes } => Some((0.5 * modes, 2.0 * mean / modes)),
            _ => None,
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            D::Empirical(h) => h.moment(1),
            D::Dirac { mean }
            | D::Poisson { mean }
            | D::GaussianNoise { mean, .. }
            | D::Thermal { mean }
            | D::Superbunched { mean }
            | D::ThermalM { mean, .. }
            | D::SuperbunchedM { mean, .. } => *mean,
        }
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.moment(2) - m * m
    }

    /// Raw moment ⟨Nᵏ⟩.
    pub fn moment(&self, k: u32) -> f64 {
        if k == 0 {
            return 1.0;
        }
        if let Some((a, th)) = self.gamma_params() {
            // θᵏ Γ(a+k)/Γ(a) as a product, exact for integer steps
            return (0..k).map(|j| th * (a + j as f64)).product();
        }
        match self {
            D::Dirac { mean } => mean.powi(k as i32),
            D::Poisson { mean } => touchard(k, *mean),
            D::GaussianNoise { mean, sigma } => {
                let (mut prev, mut cur) = (1.0, *mean);
                for j in 2..=k {
                    let next = mean * cur + (j - 1) as f64 * sigma * sigma * prev;
                    prev = cur;
                    cur = next;
                }
                cur
            }
            D::Empirical(h) => h.moment(k),
            _ => unreachable!(),
        }
    }

    /// Normalized moment g⁽ⁿ⁾ = ⟨Nⁿ⟩/⟨N⟩ⁿ.
    pub fn g(&self, n: u32) -> f64 {
        self.moment(n) / self.mean().powi(n as i32)
    }

    /// Density (probability mass for Poisson at integer points; the Dirac
    /// family has no density and returns 0 away from its mean).
    pub fn pdf(&self, x: f64) -> f64 {
        if let Some((a, th)) = self.gamma_params() {
            return gamma_pdf(a, th, x);
        }
        match self {
            D::Dirac { mean } => {
                if x == *mean {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            D::Poisson { mean } => {
                if x >= 0.0 && x.fract() == 0.0 {
                    poisson_pmf(x as u64, *mean)
                } else {
                    0.0
                }
            }
            D::GaussianNoise { mean, sigma } => {
                let z = (x - mean) / sigma;
                (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
            }
            D::Empirical(h) => {
                let n = h.n_bins();
                if x < h.edges[0] || x > h.edges[n] {
                    return 0.0;
                }
                let k = h.edges.partition_point(|&e| e <= x).saturating_sub(1).min(n - 1);
                h.probs[k] / (h.edges[k + 1] - h.edges[k])
            }
            _ => unreachable!(),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if let Some((a, th)) = self.gamma_params() {
            return if x <= 0.0 { 0.0 } else { gamma_p(a, x / th) };
        }
        match self {
            D::Dirac { mean } => {
                if x >= *mean {
                    1.0
                } else {
                    0.0
                }
            }
            D::Poisson { mean } => {
                if x < 0.0 {
                    0.0
                } else if *mean == 0.0 {
                    1.0
                } else {
                    gamma_q(x.floor() + 1.0, *mean)
                }
            }
            D::GaussianNoise { mean, sigma } => {
                0.5 * (1.0 + erf((x - mean) / (sigma * std::f64::consts::SQRT_2)))
            }
            D::Empirical(h) => h.cdf(x),
            _ => unreachable!(),
        }
    }

    /// Survival function 1 − CDF, computed without cancellation where a
    /// closed form allows it.
    pub fn ccdf(&self, x: f64) -> f64 {
        if let Some((a, th)) = self.gamma_params() {
            return if x <= 0.0 { 1.0 } else { gamma_q(a, x / th) };
        }
        match self {
            D::Poisson { mean } if x >= 0.0 && *mean > 0.0 => gamma_p(x.floor() + 1.0, *mean),
            _ => 1.0 - self.cdf(x),
        }
    }

    /// Draw `n` pulses with per-pulse streams keyed by `(seed, index)`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<PulseEnsemble> {
        self.validate()?;
        let streams = Streams::new(seed);
        let draw = self.sampler()?;
        let values: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| draw(&mut streams.get(i as u64)))
            .collect();
        let mut e = PulseEnsemble::single("N", values, Some(seed));
        e.meta.insert(
            "distribution".into(),
            serde_json::to_string(self).unwrap_or_default(),
        );
        Ok(e)
    }

    #[allow(clippy::type_complexity)]
    fn sampler(&self) -> Result<Box<dyn Fn(&mut crate::rng::StreamRng) -> f64 + Send + Sync>> {
        Ok(match self.clone() {
            D::Dirac { mean } => Box::new(move |_| mean),
            D::Poisson { mean } => {
                if mean == 0.0 {
                    Box::new(|_| 0.0)
                } else {
                    let p = Poisson::new(mean).map_err(|e| Error::invalid("mean", e.to_string()))?;
                    Box::new(move |r| p.sample(r))
                }
            }
            D::GaussianNoise { mean, sigma } => {
                let g = Normal::new(mean, sigma).map_err(|e| Error::invalid("sigma", e.to_string()))?;
                Box::new(move |r| g.sample(r))
            }
            D::Thermal { mean } => Box::new(move |r| {
                let e: f64 = Exp1.sample(r);
                mean * e
            }),
            D::Superbunched { mean } => Box::new(move |r| {
                let z: f64 = StandardNormal.sample(r);
                mean * z * z
            }),
            d @ (D::ThermalM { .. } | D::SuperbunchedM { .. }) => {
                let (a, th) = d.gamma_params().unwrap();
                if th == 0.0 {
                    Box::new(|_| 0.0)
                } else {
                    let g = Gamma::new(a, th).map_err(|e| Error::invalid("modes", e.to_string()))?;
                    Box::new(move |r| g.sample(r))
                }
            }
            D::Empirical(h) => {
                let mut cum = Vec::with_capacity(h.n_bins());
                let mut acc = 0.0;
                for p in &h.probs {
                    acc += p;
                    cum.push(acc);
                }
                Box::new(move |r| {
                    let u: f64 = r.random::<f64>() * acc;
                    let k = cum.partition_point(|&c| c <= u).min(h.n_bins() - 1);
                    let v: f64 = r.random();
                    h.edges[k] + v * (h.edges[k + 1] - h.edges[k])
                })
            }
        })
    }
}

fn gamma_pdf(a: f64, th: f64, x: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    if th == 0.0 {
        return 0.0;
    }
    if x == 0.0 {
        return match a.partial_cmp(&1.0) {
            Some(std::cmp::Ordering::Less) => f64::INFINITY,
            Some(std::cmp::Ordering::Equal) => 1.0 / th,
            _ => 0.0,
        };
    }
    ((a - 1.0) * x.ln() - x / th - ln_gamma(a) - a * th.ln()).exp()
}

fn poisson_pmf(m: u64, mean: f64) -> f64 {
    if mean == 0.0 {
        return if m == 0 { 1.0 } else { 0.0 };
    }
    (m as f64 * mean.ln() - mean - ln_gamma(m as f64 + 1.0)).exp()
}

/// ⟨Nᵏ⟩ of a Poisson law via Stirling numbers of the second kind.
fn touchard(k: u32, lam: f64) -> f64 {
    let k = k as usize;
    let mut s = vec![vec![0.0f64; k + 1]; k + 1];
    s[0][0] = 1.0;
    for n in 1..=k {
        for j in 1..=n {
            s[n][j] = j as f64 * s[n - 1][j] + s[n - 1][j - 1];
        }
    }
    (1..=k).map(|j| s[k][j] * lam.powi(j as i32)).sum()
}

/// Per-pulse photon numbers on one or more named channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseEnsemble {
    pub channels: Vec<String>,
    pub data: Vec<Vec<f64>>,
    pub seed: Option<u64>,
    pub meta: BTreeMap<String, String>,
}

impl PulseEnsemble {
    pub fn single(name: &str, values: Vec<f64>, seed: Option<u64>) -> Self {
        Self {
            channels: vec![name.to_string()],
            data: vec![values],
            seed,
            meta: BTreeMap::new(),
        }
    }

    pub fn new(channels: Vec<(String, Vec<f64>)>, seed: Option<u64>) -> Result<Self> {
        let n = channels.first().map(|c| c.1.len()).unwrap_or(0);
        if channels.iter().any(|c| c.1.len() != n) {
            return Err(Error::invalid("channels", "unequal lengths"));
        }
        let (names, data) = channels.into_iter().unzip();
        Ok(Self {
            channels: names,
            data,
            seed,
            meta: BTreeMap::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.data.first().map_or(0, |c| c.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn values(&self) -> &[f64] {
        &self.data[0]
    }

    pub fn channel(&self, name: &str) -> Result<&[f64]> {
        self.channels
            .iter()
            .position(|c| c == name)
            .map(|i| self.data[i].as_slice())
            .ok_or_else(|| Error::invalid("channel", format!("no channel named `{name}`")))
    }
}

/// Moment convention for g⁽ⁿ⁾.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    ClassicalMoments,
    FactorialMoments,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CfEstimate {
    pub order: u32,
    pub value: f64,
    pub std_error: f64,
    pub convention: Convention,
}

pub const BOOTSTRAP_RESAMPLES: usize = 200;

fn moment_term(x: f64, n: u32, conv: Convention) -> f64 {
    match conv {
        Convention::ClassicalMoments => x.powi(n as i32),
        Convention::FactorialMoments => (0..n).map(|j| x - j as f64).product(),
    }
}

fn g_point(values: &[f64], n: u32, conv: Convention) -> Result<f64> {
    let len = values.len() as f64;
    let mean = values.iter().sum::<f64>() / len;
    if mean == 0.0 || !mean.is_finite() {
        return Err(Error::ZeroMean);
    }
    // scaling by the mean keeps high powers in range; the factorial
    // falling terms need the raw counts
    let num = match conv {
        Convention::ClassicalMoments => {
            values.iter().map(|&x| (x / mean).powi(n as i32)).sum::<f64>() / len
        }
        Convention::FactorialMoments => {
            values.iter().map(|&x| moment_term(x, n, conv)).sum::<f64>() / len / mean.powi(n as i32)
        }
    };
    Ok(num)
}

/// g⁽ⁿ⁾ with a 200-resample bootstrap standard error.
pub fn estimate_g(values: &[f64], n: u32, conv: Convention) -> Result<CfEstimate> {
    estimate_g_bootstrap(values, n, conv, BOOTSTRAP_RESAMPLES, 0)
}

pub fn estimate_g_bootstrap(
    values: &[f64],
    n: u32,
    conv: Convention,
    resamples: usize,
    seed: u64,
) -> Result<CfEstimate> {
    Ok(estimate_g_orders(values, &[n], conv, resamples, seed)?.remove(0))
}

/// Several orders from one set of bootstrap resamples.
pub fn estimate_g_orders(
    values: &[f64],
    orders: &[u32],
    conv: Convention,
    resamples: usize,
    seed: u64,
) -> Result<Vec<CfEstimate>> {
    if values.is_empty() {
        return Err(Error::ZeroMean);
    }
    let point: Vec<f64> = orders.iter().map(|&n| g_point(values, n, conv)).collect::<Result<_>>()?;
    // Poisson bootstrap: independent Poisson(1) weights in one sequential
    // pass; scaling by the full-sample mean cancels in each ratio
    let m0 = values.iter().sum::<f64>() / values.len() as f64;
    let cdf = poisson1_cdf();
    let k = orders.len();
    let reps: Vec<Vec<f64>> = bootstrap_reps(resamples, seed, |rng| {
        let (mut w_tot, mut s1) = (0.0, 0.0);
        let mut sn = vec![0.0; k];
        for &x in values {
            let u: f64 = rng.random();
            let w = cdf.iter().position(|&c| u < c).unwrap_or(cdf.len()) as f64;
            if w == 0.0 {
                continue;
            }
            w_tot += w;
            s1 += w * x;
            for (acc, &n) in sn.iter_mut().zip(orders) {
                *acc += w * match conv {
                    Convention::ClassicalMoments => (x / m0).powi(n as i32),
                    Convention::FactorialMoments => moment_term(x, n, conv),
                };
            }
        }
        let mean = s1 / w_tot;
        sn.iter()
            .zip(orders)
            .map(|(&acc, &n)| match conv {
                Convention::ClassicalMoments => acc / w_tot / (mean / m0).powi(n as i32),
                Convention::FactorialMoments => acc / w_tot / mean.powi(n as i32),
            })
            .collect()
    });
    Ok(orders
        .iter()
        .enumerate()
        .map(|(j, &n)| CfEstimate {
            order: n,
            value: point[j],
            std_error: std_dev(reps.iter().map(|r| r[j])),
            convention: conv,
        })
        .collect())
}

fn poisson1_cdf() -> [f64; 16] {
    let mut c = [0.0; 16];
    let (mut p, mut acc) = ((-1f64).exp(), 0.0);
    for (k, slot) in c.iter_mut().enumerate() {
        acc += p;
        *slot = acc;
        p /= (k + 1) as f64;
    }
    c
}

fn std_dev(v: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = v.filter(|x| x.is_finite()).collect();
    if v.len() < 2 {
        return f64::NAN;
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// Bootstrap standard deviation of `stat` over resampled index sets.
pub fn bootstrap_se<F>(len: usize, resamples: usize, seed: u64, stat: F) -> f64
where
    F: Fn(&[usize]) -> f64 + Sync,
{
    if len < 2 {
        return f64::NAN;
    }
    std_dev(
        bootstrap_reps(resamples, seed, |rng| {
            let idx: Vec<usize> = (0..len).map(|_| rng.random_range(0..len)).collect();
            stat(&idx)
        })
        .into_iter(),
    )
}

/// Poisson-bootstrap standard deviation: `stat` sees one Poisson(1)
/// weight per sample and reads the data sequentially.
pub fn poisson_bootstrap_se<F>(len: usize, resamples: usize, seed: u64, stat: F) -> f64
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let cdf = poisson1_cdf();
    std_dev(
        bootstrap_reps(resamples, seed, |rng| {
            let w: Vec<f64> = (0..len)
                .map(|_| {
                    let u: f64 = rng.random();
                    cdf.iter().position(|&c| u < c).unwrap_or(cdf.len()) as f64
                })
                .collect();
            stat(&w)
        })
        .into_iter(),
    )
}

fn bootstrap_reps<T: Send, F>(resamples: usize, seed: u64, stat: F) -> Vec<T>
where
    F: Fn(&mut crate::rng::StreamRng) -> T + Sync,
{
    let streams = Streams::new(crate::rng::derive_seed(seed, 0xB007));
    (0..resamples)
        .into_par_iter()
        .map(|r| stat(&mut streams.get(r as u64)))
        .collect()
}

/// Per-pulse binomial thinning (loss with transmission `eta`); values are
/// rounded to whole photons first.
pub fn binomial_thinning(values: &[f64], eta: f64, seed: u64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::invalid("eta", "transmission must lie in [0, 1]"));
    }
    let streams = Streams::new(seed);
    values
        .par_iter()
        .enumerate()
        .map(|(i, &x)| {
            let n = x.max(0.0).round() as u64;
            let b = Binomial::new(n, eta).map_err(|e| Error::invalid("eta", e.to_string()))?;
            Ok(b.sample(&mut streams.get(i as u64)) as f64)
        })
        .collect()
}

/// Discrete photocount distribution p(m), m = 0..=m_max.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountDistribution {
    pub probs: Vec<f64>,
}

impl CountDistribution {
    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(m, p)| m as f64 * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.probs
            .iter()
            .enumerate()
            .map(|(m, p)| (m as f64 - mu).powi(2) * p)
            .sum()
    }

    /// Factorial moment ⟨m(m−1)…(m−n+1)⟩.
    pub fn factorial_moment(&self, n: u32) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(m, p)| p * moment_term(m as f64, n, Convention::FactorialMoments))
            .sum()
    }
}

/// Semiclassical photocount law p(m) = (1/m!)∫Nᵐe^{−N}P(N)dN.
pub fn mandel_transform(d: &PhotonDistribution, m_max: usize) -> Result<CountDistribution> {
    d.validate()?;
    let probs: Result<Vec<f64>> = (0..=m_max)
        .into_par_iter()
        .map(|m| mandel_term(d, m))
        .collect();
    Ok(CountDistribution { probs: probs? })
}

fn mandel_term(d: &PhotonDistribution, m: usize) -> Result<f64> {
    let mf = m as f64;
    let lnm = ln_gamma(mf + 1.0);
    if let Some((a, th)) = d.gamma_params() {
        if th == 0.0 {
            return Ok(if m == 0 { 1.0 } else { 0.0 });
        }
        // N = t²: integrand 2 t^{2m+2a−1} e^{−c t²} / (m! Γ(a) θᵃ)
        let c = 1.0 + 1.0 / th;
        let pw = 2.0 * mf + 2.0 * a - 1.0;
        let norm = 2f64.ln() - lnm - ln_gamma(a) - a * th.ln();
        let f = |t: f64| {
            if t == 0.0 {
                return if pw == 0.0 { norm.exp() } else { 0.0 };
            }
            (pw * t.ln() - c * t * t + norm).exp()
        };
        let peak = (0.5 * pw.max(0.0) / c).sqrt();
        let upper = peak + 40.0 / c.sqrt();
        return adaptive_simpson(f, 0.0, upper, 1e-12, 1e-300, 64);
    }
    match d {
        D::Dirac { mean } => Ok(poisson_pmf(m as u64, *mean)),
        D::Poisson { .. } => Err(Error::invalid(
            "distribution",
            "the Mandel transform takes a classical intensity law, not a count law",
        )),
        D::GaussianNoise { mean, sigma } => {
            if *sigma == 0.0 {
                return Ok(poisson_pmf(m as u64, *mean));
            }
            let lo = (mean - 12.0 * sigma).max(0.0);
            let hi = mean + 12.0 * sigma;
            let f = |x: f64| {
                if x <= 0.0 {
                    return 0.0;
                }
                (mf * x.ln() - x - lnm).exp() * d.pdf(x)
            };
            adaptive_simpson(f, lo, hi, 1e-12, 1e-300, 64)
        }
        D::Empirical(h) => Ok(h
            .probs
            .iter()
            .zip(h.edges.windows(2))
            .map(|(p, w)| {
                let mass = gamma_p(mf + 1.0, w[1]) - gamma_p(mf + 1.0, w[0].max(0.0));
                p * mass / (w[1] - w[0])
            })
            .sum()),
        _ => unreachable!(),
    }
}

/// Photocount law of degenerate (single-beam) squeezed vacuum: only even
/// counts occur.
pub fn superbunched_discrete(m: u64, mean: f64) -> f64 {
    if m % 2 == 1 {
        return 0.0;
    }
    let k = (m / 2) as f64;
    if mean == 0.0 {
        return if m == 0 { 1.0 } else { 0.0 };
    }
    (ln_gamma(2.0 * k + 1.0) - 2.0 * k * 2f64.ln() - 2.0 * ln_gamma(k + 1.0) + k * mean.ln()
        - (k + 0.5) * (mean + 1.0).ln())
    .exp()
}

/// Spectral model for the filtering simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldModel {
    Thermal,
    /// Degenerate pair field: E(−Ω) = E(Ω)*.
    BsvPair,
}

/// Grid of the filtering simulator, in units of the source FWHM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterGrid {
    pub n_bins: usize,
    pub span: f64,
    pub source_fwhm: f64,
}

impl Default for FilterGrid {
    fn default() -> Self {
        Self {
            n_bins: 512,
            span: 4.0,
            source_fwhm: 1.0,
        }
    }
}

/// Equal-time g⁽²⁾(0) of a Gaussian field behind a rectangular spectral
/// filter of full width `filter_bandwidth` (source-FWHM units).
pub fn field_filter_sim(
    model: FieldModel,
    filter_bandwidth: f64,
    n_pulses: usize,
    seed: u64,
) -> Result<CfEstimate> {
    field_filter_sim_on(FilterGrid::default(), model, filter_bandwidth, n_pulses, seed)
}

pub fn field_filter_sim_on(
    grid: FilterGrid,
    model: FieldModel,
    filter_bandwidth: f64,
    n_pulses: usize,
    seed: u64,
) -> Result<CfEstimate> {
    let n = grid.n_bins;
    if n < 4 || n % 2 == 1 {
        return Err(Error::invalid("n_bins", "need an even grid of at least 4 bins"));
    }
    let df = grid.span / n as f64;
    if !(filter_bandwidth >= df) || filter_bandwidth >= grid.span {
        return Err(Error::invalid(
            "filter_bandwidth",
            format!("must lie in [{df}, {}) (one bin to the simulated span)", grid.span),
        ));
    }
    if n_pulses < 2 {
        return Err(Error::invalid("n_pulses", "need at least two pulses"));
    }
    let half = 0.5 * filter_bandwidth;
    let freq = |j: usize| (j as f64 - (n / 2) as f64) * df;
    let passed: Vec<usize> = (1..n).filter(|&j| freq(j).abs() <= half + 1e-12 * df).collect();
    let s_width = grid.source_fwhm / (2.0 * (2f64.ln() * 2.0).sqrt());
    let amp: Vec<f64> = (0..n)
        .map(|j| (-0.25 * (freq(j) / s_width).powi(2)).exp())
        .collect();
    let fft = rustfft::FftPlanner::<f64>::new().plan_fft_inverse(n);
    let streams = Streams::new(seed);
    let per_pulse: Vec<(f64, f64)> = (0..n_pulses)
        .into_par_iter()
        .map_init(
            || (vec![Complex64::new(0.0, 0.0); n], vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()]),
            |(buf, scratch), p| {
                let mut rng = streams.get(p as u64);
                buf.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
                let mut gauss = || -> f64 { StandardNormal.sample(&mut rng) };
                for &j in &passed {
                    match model {
                        FieldModel::Thermal => {
                            buf[j] = amp[j] * std::f64::consts::FRAC_1_SQRT_2 * Complex64::new(gauss(), gauss());
                        }
                        FieldModel::BsvPair => {
                            if j > n / 2 {
                                continue;
                            }
                            if j == n / 2 {
                                buf[j] = Complex64::new(amp[j] * gauss(), 0.0);
                            } else {
                                let e = amp[j] * std::f64::consts::FRAC_1_SQRT_2 * Complex64::new(gauss(), gauss());
                                buf[j] = e;
                                buf[n - j] = e.conj();
                            }
                        }
                    }
                }
                fft.process_with_scratch(buf, scratch);
                let (mut s1, mut s2) = (0.0, 0.0);
                for c in buf.iter() {
                    let i = c.norm_sqr();
                    s1 += i;
                    s2 += i * i;
                }
                (s1 / n as f64, s2 / n as f64)
            },
        )
        .collect();
    let ratio = |idx: &mut dyn Iterator<Item = usize>| {
        let (mut a, mut b, mut k) = (0.0, 0.0, 0usize);
        for i in idx {
            a += per_pulse[i].0;
            b += per_pulse[i].1;
            k += 1;
        }
        let (a, b) = (a / k as f64, b / k as f64);
        b / (a * a)
    };
    let value = ratio(&mut (0..n_pulses));
    let std_error = bootstrap_se(n_pulses, BOOTSTRAP_RESAMPLES, seed, |idx| ratio(&mut idx.iter().copied()));
    Ok(CfEstimate {
        order: 2,
        value,
        std_error,
        convention: Convention::ClassicalMoments,
    })
}

/// Output-port law of |N⟩|N⟩ on a balanced beam splitter, N₁ = 0..=2N.
pub fn fock_bs_distribution(n: u64) -> Vec<f64> {
    let ln4n = 2.0 * n as f64 * 2f64.ln();
    (0..=2 * n)
        .map(|n1| {
            if n1 % 2 == 1 {
                return 0.0;
            }
            let m = n1 / 2;
            (ln_binomial(2 * m, m) + ln_binomial(2 * n - 2 * m, n - m) - ln4n).exp()
        })
        .collect()
}

/// Σ of normally ordered second moments G₁₁ + G₂₂ + 2G₁₂ for the Fock
/// input |N⟩|N⟩ (before) and the beam-splitter output law (after).
pub fn fock_correlation_sums(n: u64) -> (f64, f64) {
    let nf = n as f64;
    let before = 2.0 * nf * (nf - 1.0) + 2.0 * nf * nf;
    let total = 2 * n;
    let after = fock_bs_distribution(n)
        .iter()
        .enumerate()
        .map(|(n1, p)| {
            let (a, b) = (n1 as f64, (total - n1 as u64) as f64);
            p * (a * (a - 1.0) + b * (b - 1.0) + 2.0 * a * b)
        })
        .sum();
    (before, after)
}

/// Twin-beam interference on a beam splitter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwinBeamConfig {
    /// Mean photon number per mode in each beam before losses.
    pub mean: f64,
    pub modes: usize,
    /// Intensity transmission of the beam splitter.
    pub splitting: f64,
    pub loss_s: f64,
    pub loss_i: f64,
    /// Fixed relative phase; random when `None`.
    pub phase: Option<f64>,
    pub ratio_bins: usize,
}

impl TwinBeamConfig {
    pub fn balanced(mean: f64, modes: usize) -> Self {
        Self {
            mean,
            modes,
            splitting: 0.5,
            loss_s: 0.0,
            loss_i: 0.0,
            phase: None,
            ratio_bins: 40,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mean > 0.0) {
            return Err(Error::invalid("mean", "must be positive"));
        }
        if self.modes == 0 {
            return Err(Error::invalid("modes", "must be ≥ 1"));
        }
        for (name, v) in [("splitting", self.splitting), ("loss_s", self.loss_s), ("loss_i", self.loss_i)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(name, format!("must lie in [0, 1], got {v}")));
            }
        }
        if self.loss_s >= 1.0 && self.loss_i >= 1.0 {
            return Err(Error::invalid("loss", "both beams fully lost"));
        }
        if self.ratio_bins < 2 {
            return Err(Error::invalid("ratio_bins", "need at least 2"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwinBeamResult {
    /// Channels `Ns`, `Ni` (pre-splitter, before losses), `N1`, `N2`.
    pub ensemble: PulseEnsemble,
    pub ratio: Histogram,
    pub n1: Histogram,
    pub difference: Histogram,
}

/// Per-mode classical twin fields with thermal weight and random (or fixed)
/// relative phase, mixed on a beam splitter.
pub fn twin_beam_bs_mc(cfg: &TwinBeamConfig, n_pulses: usize, seed: u64) -> Result<TwinBeamResult> {
    cfg.validate()?;
    if n_pulses == 0 {
        return Err(Error::invalid("n_pulses", "must be positive"));
    }
    let streams = Streams::new(seed);
    let (t, r) = (cfg.splitting.sqrt(), (1.0 - cfg.splitting).sqrt());
    let (es, ei) = ((1.0 - cfg.loss_s).sqrt(), (1.0 - cfg.loss_i).sqrt());
    let rows: Vec<[f64; 4]> = (0..n_pulses)
        .into_par_iter()
        .map(|p| {
            let mut rng = streams.get(p as u64);
            let mut out = [0.0; 4];
            for _ in 0..cfg.modes {
                let e: f64 = Exp1.sample(&mut rng);
                let i = cfg.mean * e;
                let phi = cfg
                    .phase
                    .unwrap_or_else(|| rng.random::<f64>() * std::f64::consts::TAU);
                let a_s = Complex64::from_polar(i.sqrt() * es, phi);
                let a_i = Complex64::new(i.sqrt() * ei, 0.0);
                let b1 = t * a_s + r * a_i;
                let b2 = r * a_s - t * a_i;
                out[0] += i;
                out[1] += i;
                out[2] += b1.norm_sqr();
                out[3] += b2.norm_sqr();
            }
            out
        })
        .collect();
    let col = |k: usize| rows.iter().map(|r| r[k]).collect::<Vec<f64>>();
    let (n1, n2) = (col(2), col(3));
    let ratio: Vec<f64> = n1
        .iter()
        .zip(&n2)
        .map(|(a, b)| if a + b > 0.0 { (a - b) / (a + b) } else { 0.0 })
        .collect();
    let diff: Vec<f64> = n1.iter().zip(&n2).map(|(a, b)| a - b).collect();
    let dmax = diff.iter().fold(0.0f64, |m, d| m.max(d.abs())).max(f64::MIN_POSITIVE);
    let n1max = n1.iter().fold(0.0f64, |m, &v| m.max(v)).max(f64::MIN_POSITIVE);
    let ratio_h = Histogram::from_samples(&ratio, linear_edges(-1.0, 1.0, cfg.ratio_bins)?)?;
    let n1_h = Histogram::from_samples(&n1, linear_edges(0.0, n1max, cfg.ratio_bins)?)?;
    let diff_h = Histogram::from_samples(&diff, linear_edges(-dmax, dmax, cfg.ratio_bins)?)?;
    let ensemble = PulseEnsemble::new(
        vec![
            ("Ns".into(), col(0)),
            ("Ni".into(), col(1)),
            ("N1".into(), n1),
            ("N2".into(), n2),
        ],
        Some(seed),
    )?;
    Ok(TwinBeamResult {
        ensemble,
        ratio: ratio_h,
        n1: n1_h,
        difference: diff_h,
    })
}

/// Shape of a two-port distribution such as P(N₋/N₊).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    UShaped,
    Flat,
    Peaked,
}

/// Compares the outer 15% of the occupied support (both ends) with the
/// central 30%. Returns the shape and the edge/centre ratio.
pub fn classify_shape(probs: &[f64]) -> (Shape, f64) {
    let first = probs.iter().position(|&p| p > 0.0);
    let last = probs.iter().rposition(|&p| p > 0.0);
    let (Some(a), Some(b)) = (first, last) else {
        return (Shape::Flat, 1.0);
    };
    let s = &probs[a..=b];
    let k = s.len();
    if k < 4 {
        return (Shape::Flat, 1.0);
    }
    let e = ((0.15 * k as f64) as usize).max(1);
    let edge = (s[..e].iter().sum::<f64>() + s[k - e..].iter().sum::<f64>()) / (2 * e) as f64;
    let (c0, c1) = ((0.35 * k as f64) as usize, ((0.65 * k as f64).ceil() as usize).max((0.35 * k as f64) as usize + 1));
    let centre = s[c0..c1].iter().sum::<f64>() / (c1 - c0) as f64;
    let contrast = edge / centre;
    let shape = if contrast > 1.2 {
        Shape::UShaped
    } else if contrast < 1.0 / 1.2 {
        Shape::Peaked
    } else {
        Shape::Flat
    };
    (shape, contrast)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConservationResidual {
    pub before: f64,
    pub after: f64,
    pub relative: f64,
    pub flagged: bool,
}

fn correlation_sum(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    a.iter()
        .zip(b)
        .map(|(x, y)| x * x + y * y + 2.0 * x * y)
        .sum::<f64>()
        / n
}

/// G¹¹ + G²² + 2G¹² before and after the splitter (classical moments).
/// `tolerance` is the residual above which the law is flagged as broken.
pub fn correlation_conservation_check(
    before: (&[f64], &[f64]),
    after: (&[f64], &[f64]),
    tolerance: f64,
) -> Result<ConservationResidual> {
    if before.0.len() != before.1.len() || after.0.len() != after.1.len() || before.0.is_empty() {
        return Err(Error::invalid("ensemble", "channels must be non-empty and paired"));
    }
    let b = correlation_sum(before.0, before.1);
    let a = correlation_sum(after.0, after.1);
    if b == 0.0 {
        return Err(Error::ZeroMean);
    }
    let relative = (a - b).abs() / b;
    Ok(ConservationResidual {
        before: b,
        after: a,
        relative,
        flagged: relative > tolerance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Postselection {
    pub window: f64,
    pub kept: usize,
    pub fraction: f64,
    /// Channel-B values of the kept pulses.
    pub selected: Vec<f64>,
    /// Residual g⁽²⁾, g⁽³⁾, g⁽⁴⁾ of channel A after selection.
    pub residual_g: [f64; 3],
}

/// Keep pulses whose channel-A value lies within ⟨N⟩(1 ± w).
pub fn postselect_pseudocoherent(a: &[f64], b: &[f64], w: f64) -> Result<Postselection> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::invalid("ensemble", "channels must be non-empty and paired"));
    }
    if !(w >= 0.0) {
        return Err(Error::invalid("window", "must be ≥ 0"));
    }
    let mean = a.iter().sum::<f64>() / a.len() as f64;
    if mean == 0.0 {
        return Err(Error::ZeroMean);
    }
    let (lo, hi) = (mean * (1.0 - w), mean * (1.0 + w));
    let keep: Vec<usize> = (0..a.len()).filter(|&i| w.is_infinite() || (a[i] >= lo && a[i] <= hi)).collect();
    if keep.is_empty() {
        return Err(Error::invalid("window", "no pulse falls inside the window"));
    }
    let sel_a: Vec<f64> = keep.iter().map(|&i| a[i]).collect();
    let mut residual_g = [0.0; 3];
    for (k, g) in residual_g.iter_mut().enumerate() {
        *g = g_point(&sel_a, k as u32 + 2, Convention::ClassicalMoments)?;
    }
    Ok(Postselection {
        window: w,
        kept: keep.len(),
        fraction: keep.len() as f64 / a.len() as f64,
        selected: keep.iter().map(|&i| b[i]).collect(),
        residual_g,
    })
}

/// Photon subtraction: P′(N) ∝ N·P(N), so ⟨N⟩′ = g⁽²⁾⟨N⟩.
pub fn photon_subtract(d: &PhotonDistribution) -> Result<PhotonDistribution> {
    d.validate()?;
    if d.mean() == 0.0 {
        return Err(Error::ZeroMean);
    }
    Ok(match d {
        D::Dirac { .. } => d.clone(),
        // Γ(a, θ) tilts to Γ(a + 1, θ)
        D::Thermal { mean } => D::ThermalM { mean: 2.0 * mean, modes: 2.0 },
        D::Superbunched { mean } => D::SuperbunchedM { mean: 3.0 * mean, modes: 3.0 },
        D::ThermalM { mean, modes } => D::ThermalM {
            mean: mean * (modes + 1.0) / modes,
            modes: modes + 1.0,
        },
        D::SuperbunchedM { mean, modes } => D::SuperbunchedM {
            mean: mean * (modes + 2.0) / modes,
            modes: modes + 2.0,
        },
        D::Empirical(h) => {
            // exact first moment of the bin, density flat inside it
            let w: Vec<f64> = h
                .probs
                .iter()
                .zip(h.edges.windows(2))
                .map(|(p, e)| p * 0.5 * (e[0] + e[1]))
                .collect();
            D::Empirical(Histogram::new(h.edges.clone(), w)?)
        }
        D::Poisson { .. } | D::GaussianNoise { .. } => {
            return Err(Error::invalid(
                "distribution",
                "subtraction is defined here for non-negative intensity laws only",
            ))
        }
    })
}

/// Readout law of `d` plus zero-mean Gaussian noise of std `sigma`,
/// binned on `edges`.
pub fn detector_noise_convolve(d: &PhotonDistribution, sigma: f64, edges: Vec<f64>) -> Result<Histogram> {
    d.validate()?;
    if !(sigma >= 0.0) {
        return Err(Error::invalid("sigma", "must be ≥ 0"));
    }
    if edges.len() < 2 {
        return Err(Error::invalid("edges", "need at least one bin"));
    }
    let phi = |z: f64| 0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2));
    // ∫Φ: ψ(z) = zΦ(z) + φ(z)
    let psi = |z: f64| z * phi(z) + (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let bin_mass = |lo: f64, hi: f64| -> Result<f64> {
        if sigma == 0.0 {
            return Ok(match d {
                D::Dirac { mean } => {
                    if *mean >= lo && *mean < hi {
                        1.0
                    } else {
                        0.0
                    }
                }
                _ => d.cdf(hi) - d.cdf(lo),
            });
        }
        let kernel = |n: f64| phi((hi - n) / sigma) - phi((lo - n) / sigma);
        if let Some((a, th)) = d.gamma_params() {
            if th == 0.0 {
                return Ok(kernel(0.0));
            }
            // N = t² removes the N^{a−1} singularity for a < 1
            let f = |t: f64| {
                if t == 0.0 {
                    return if a == 0.5 { 2.0 / ((std::f64::consts::PI).sqrt() * th.sqrt()) * kernel(0.0) } else { 0.0 };
                }
                let n = t * t;
                2.0 * t * gamma_pdf(a, th, n) * kernel(n)
            };
            // fixed composite Simpson: the Gaussian CDF difference carries
            // rounding noise that defeats adaptive refinement
            let upper = (th * (a + 60.0 + 12.0 * a.sqrt())).sqrt();
            return Ok(composite_simpson(f, 0.0, upper, 4000));
        }
        Ok(match d {
            D::Dirac { mean } => kernel(*mean),
            D::Poisson { mean } => {
                let top = (mean + 12.0 * mean.sqrt() + 20.0) as u64;
                (0..=top).map(|m| poisson_pmf(m, *mean) * kernel(m as f64)).sum()
            }
            D::GaussianNoise { mean, sigma: s0 } => {
                let s = (s0 * s0 + sigma * sigma).sqrt();
                phi((hi - mean) / s) - phi((lo - mean) / s)
            }
            D::Empirical(h) => h
                .probs
                .iter()
                .zip(h.edges.windows(2))
                .map(|(p, e)| {
                    // average of the kernel over a flat bin [e0, e1]
                    let w = e[1] - e[0];
                    let g = |x: f64| sigma * (psi((x - e[0]) / sigma) - psi((x - e[1]) / sigma)) / w;
                    p * (g(hi) - g(lo))
                })
                .sum(),
            _ => unreachable!(),
        })
    };
    let masses: Result<Vec<f64>> = edges.par_windows(2).map(|w| bin_mass(w[0], w[1])).collect();
    let masses = masses?;
    // the edges may not cover everything; keep the covered mass unnormalized
    // in the check but return a normalized histogram
    Histogram::new(edges, masses)
}

fn composite_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n)
        .map(|i| if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h))
        .sum();
    h / 3.0 * (f(a) + inner + f(b))
}

/// Fraction of probability a binned readout captures; used to size grids.
pub fn covered_mass(d: &PhotonDistribution, lo: f64, hi: f64) -> f64 {
    d.cdf(hi) - d.cdf(lo)
}

/// Superbunched law whose g⁽ⁿ⁾ equals `target`, by choosing an effective
/// (possibly fractional) mode number M ≥ 1.
pub fn superbunched_matching_g(mean: f64, n: u32, target: f64) -> Result<PhotonDistribution> {
    let g_of = |m: f64| D::SuperbunchedM { mean: 1.0, modes: m }.g(n);
    if n < 2 || !(target > 1.0) || target > g_of(1.0) {
        return Err(Error::invalid(
            "target",
            format!("g({n}) must lie in (1, {}]", g_of(1.0)),
        ));
    }
    let m = crate::roots::bisect(|m| g_of(m) - target, 1.0, 1e9, 1e-13, "g matching")?;
    PhotonDistribution::superbunched_modes(mean, m)
}
