//! One function per subcommand. Each reads every key it needs up front and
//! returns a job, so `validate` can stop before any computation.

use crate::error::CliError;
use crate::output::{Outputs, Table};
use crate::params::Params;
use bsv_core::coherence::{apply_azimuthal_phase, g1_map, g2_map, ring_fit, spectral_amplitude};
use bsv_core::dispersion::C_UM_PER_FS;
use bsv_core::hom::{extremum_width, hom_g2_curve, hom_nrf_curve};
use bsv_core::io::{read_csv, write_ensemble};
use bsv_core::rng::derive_seed;
use bsv_core::schmidt::{build_jsa, build_jsa_banded, fedorov_ratio, redistribute_gain, schmidt_decompose};
use bsv_core::spectrum::{
    fit_gain, gain_model, linspace, omega_fwhm_at_q0, phase_matching_angle, spectrum_point, spectrum_qomega,
    to_wavelength_angular, tuning_curve,
};
use bsv_core::stats::{
    classify_shape, estimate_g_orders, field_filter_sim, fock_bs_distribution, linear_edges, log_edges, Convention,
    FieldModel, TwinBeamConfig, BOOTSTRAP_RESAMPLES, LOG_BINS_PER_DECADE,
};
use bsv_core::tails::{
    fwm_tail_exponent_prediction, indefinite_mean_demo, pushforward_pdf, sample_pareto, sample_process, tail_report,
};
use bsv_core::{
    CorrelationMap, CrystalConfig, Histogram, HomConfig, Interaction, Material, MaterialId, PhotonDistribution,
    ProcessMap, PumpKind, SpectralGrid, Spectrum2D,
};
use serde_json::json;
use std::f64::consts::PI;
use std::path::Path;

pub type Job = Box<dyn FnOnce(&mut Outputs) -> Result<(), CliError>>;

pub const SCENARIOS: &[&str] = &["spectrum", "tuning", "coherence", "schmidt", "hom", "stats", "tails", "gainfit"];

pub fn prepare(name: &str, p: &Params) -> Result<Job, CliError> {
    match name {
        "spectrum" => spectrum(p),
        "tuning" => tuning(p),
        "coherence" => coherence(p),
        "schmidt" => schmidt(p),
        "hom" => hom(p),
        "stats" => stats(p),
        "tails" => tails(p),
        "gainfit" => gainfit(p),
        _ => Err(CliError::Config(format!(
            "`run.scenario`: unknown scenario `{name}` (one of: {})",
            SCENARIOS.join(", ")
        ))),
    }
}

// ---------------------------------------------------------------- crystal

fn material(p: &Params) -> Result<Material, CliError> {
    let name = p.str_or("crystal.material", "BBO")?;
    match p.opt_str("crystal.materials_file")? {
        Some(file) => {
            let path = Path::new(&file);
            if !path.is_file() {
                return Err(CliError::Config(format!("`crystal.materials_file`: no such file `{file}`")));
            }
            let all = Material::from_file(path).map_err(|e| CliError::at("crystal.materials_file", e))?;
            all.into_iter()
                .find(|m| m.name.eq_ignore_ascii_case(&name))
                .ok_or_else(|| CliError::Config(format!("`crystal.material`: `{name}` not found in `{file}`")))
        }
        None => Ok(MaterialId::parse(&name).map_err(|e| CliError::at("crystal.material", e))?.load()),
    }
}

fn non_negative_gain(key: &str, g: f64) -> Result<f64, CliError> {
    if g >= 0.0 {
        Ok(g)
    } else {
        Err(CliError::Config(format!("`{key}`: gain must be non-negative, got {g}")))
    }
}

fn crystal(p: &Params, defaults: (f64, f64)) -> Result<CrystalConfig, CliError> {
    let m = material(p)?;
    let length = p.positive_or("crystal.length_mm", defaults.0)?;
    let inter = Interaction::parse(&p.str_or("crystal.interaction", "typeI")?)
        .map_err(|e| CliError::at("crystal.interaction", e))?;
    let pump = p.positive_or("crystal.pump_nm", defaults.1)?;
    m.check_window(pump * 1e-3).map_err(|e| CliError::at("crystal.pump_nm", e))?;
    m.check_window(2e-3 * pump).map_err(|e| {
        CliError::Config(format!("`crystal.pump_nm`: degenerate signal at {} nm: {e}", 2.0 * pump))
    })?;
    let gain = non_negative_gain("crystal.gain", p.f64_or("crystal.gain", 1e-3)?)?;
    let phi = match p.opt_f64("crystal.phi_deg")? {
        Some(d) => d.to_radians(),
        None => phase_matching_angle(&m, inter, pump).map_err(|e| CliError::at("crystal.phi_deg", e))?,
    };
    let mut cfg = CrystalConfig::new(m, length, phi, inter, pump, gain).map_err(|e| CliError::at("crystal", e))?;
    if let Some(t) = p.opt_f64("crystal.pump_duration_ps")? {
        if !(t > 0.0) {
            return Err(CliError::Config(format!("`crystal.pump_duration_ps`: must be positive, got {t}")));
        }
        cfg = cfg.with_duration_ps(t);
    }
    Ok(cfg)
}

fn grid(p: &Params, cfg: &CrystalConfig, defaults: (f64, f64)) -> Result<SpectralGrid, CliError> {
    let n_q = p.count_or("grid.n_q", 201)?;
    let q_max = p.positive_or("grid.q_max", defaults.0)?;
    let n_w = p.count_or("grid.n_omega", 201)?;
    let w_max = p.positive_or("grid.omega_max", defaults.1)?;
    if n_q < 3 || n_w < 3 {
        return Err(CliError::Config("`grid.n_q`/`grid.n_omega`: need at least 3 points".into()));
    }
    cfg.check_grid_window(w_max).map_err(|e| CliError::at("grid.omega_max", e))?;
    SpectralGrid::symmetric(n_q, q_max, n_w, w_max).map_err(|e| CliError::at("grid", e))
}

fn gains(p: &Params, key: &str, cfg: &CrystalConfig) -> Result<Vec<f64>, CliError> {
    p.f64_list_or(key, &[cfg.gain])?
        .into_iter()
        .map(|g| non_negative_gain(key, g))
        .collect()
}

fn axis_label(name: &str) -> &str {
    match name {
        "q" => "q_rad_per_um",
        "omega" => "omega_rad_per_fs",
        "theta" => "theta_rad",
        other => other,
    }
}

fn map_table(s: &Spectrum2D) -> Table {
    let mut t = Table::new(&[axis_label(&s.axis1_name), axis_label(&s.axis2_name), "S"]).with_comment(format!(
        "normalization={} masked_cells={}",
        s.normalization.as_str(),
        s.masked_cells
    ));
    for (i, &a) in s.axis1.iter().enumerate() {
        for (j, &b) in s.axis2.iter().enumerate() {
            t.push(vec![a, b, s.values[[i, j]]]);
        }
    }
    t
}

fn correlation_table(m: &CorrelationMap, xi_max: f64, tau_max: f64) -> Table {
    let mut t = Table::new(&["xi_um", "tau_fs", "value"]).with_comment("unit_max");
    for (i, &x) in m.xi.iter().enumerate() {
        if x.abs() > xi_max {
            continue;
        }
        for (j, &y) in m.tau.iter().enumerate() {
            if y.abs() <= tau_max {
                t.push(vec![x, y, m.values[[i, j]]]);
            }
        }
    }
    t
}

fn tag(x: f64) -> String {
    format!("{x}")
}

// ---------------------------------------------------------------- spectrum

fn spectrum(p: &Params) -> Result<Job, CliError> {
    let cfg = crystal(p, (2.0, 354.7))?;
    let grid = grid(p, &cfg, (0.3, 0.6))?;
    let gs = gains(p, "spectrum.gains", &cfg)?;
    let frame = p.choice("spectrum.frame", "q_omega", &["q_omega", "angle_wavelength"])?;
    let maps = p.bool_or("spectrum.maps", true)?;
    let cut = p.bool_or("spectrum.cut_q0", false)?;
    let widths = p.bool_or("spectrum.width_curve", false)?;
    let w_max = p.positive_or("spectrum.width_omega_max", grid.omega[grid.omega.len() - 1])?;
    let w_pts = p.count_or("spectrum.width_points", 6001)?;
    if widths {
        cfg.check_grid_window(w_max)
            .map_err(|e| CliError::at("spectrum.width_omega_max", e))?;
    }
    Ok(Box::new(move |out| {
        for &g in &gs {
            if !maps {
                break;
            }
            let c = cfg.with_gain(g);
            let mut s = spectrum_qomega(&c, &grid)?;
            if frame == "angle_wavelength" {
                s = to_wavelength_angular(&s, &c)?;
            }
            out.table(&format!("spectrum_G{}", tag(g)), &map_table(&s));
        }
        if cut {
            let w0 = cfg.omega0();
            let mut names = vec!["omega_rad_per_fs".to_string(), "lambda_nm".to_string()];
            let mut cols = vec![
                grid.omega.clone(),
                grid.omega.iter().map(|w| 2e3 * PI * C_UM_PER_FS / (w0 + w)).collect(),
            ];
            for &g in &gs {
                let c = cfg.with_gain(g);
                let y: Vec<f64> = grid
                    .omega
                    .iter()
                    .map(|&w| spectrum_point(&c, 0.0, w))
                    .collect::<Result<_, _>>()?;
                let m = y.iter().cloned().fold(0.0, f64::max);
                names.push(format!("S_G{}", tag(g)));
                cols.push(y.iter().map(|v| if m > 0.0 { v / m } else { 0.0 }).collect());
            }
            out.table("cut_q0", &Table::from_columns(&names, &cols).with_comment("unit_max per gain"));
        }
        if widths {
            let mut t = Table::new(&["gain", "fwhm_omega_rad_per_fs", "ratio"])
                .with_comment(format!("ratio relative to G={}", tag(gs[0])));
            let mut first = None;
            for &g in &gs {
                let w = omega_fwhm_at_q0(&cfg.with_gain(g), w_max, w_pts)?;
                let base = *first.get_or_insert(w);
                t.push(vec![g, w, w / base]);
            }
            out.table("width_vs_gain", &t);
        }
        Ok(())
    }))
}

fn tuning(p: &Params) -> Result<Job, CliError> {
    let cfg = crystal(p, (2.0, 354.7))?;
    let grid = grid(p, &cfg, (0.3, 0.6))?;
    let phis = p.f64_list_or("tuning.phi_deg", &[cfg.phi.to_degrees()])?;
    Ok(Box::new(move |out| {
        let rad: Vec<f64> = phis.iter().map(|d| d.to_radians()).collect();
        for (s, d) in tuning_curve(&cfg, &rad, &grid)?.iter().zip(&phis) {
            out.table(&format!("tuning_phi{}", tag(*d)), &map_table(s));
        }
        Ok(())
    }))
}

// ---------------------------------------------------------------- coherence

fn coherence(p: &Params) -> Result<Job, CliError> {
    let cfg = crystal(p, (2.0, 354.7))?;
    let grid = grid(p, &cfg, (0.3, 0.6))?;
    let order = p.choice("coherence.order", "both", &["g1", "g2", "both"])?;
    let l = p.f64_or("coherence.azimuthal_l", 0.0)?;
    if l.fract() != 0.0 || l.abs() > 64.0 {
        return Err(CliError::Config(format!("`coherence.azimuthal_l`: expected a small integer, got {l}")));
    }
    let fit = p.bool_or("coherence.ring_fit", false)?;
    let with_spectrum = p.bool_or("coherence.spectrum", false)?;
    let xi_max = p.positive_or("coherence.xi_max_um", f64::MAX)?;
    let tau_max = p.positive_or("coherence.tau_max_fs", f64::MAX)?;
    Ok(Box::new(move |out| {
        let s = spectrum_qomega(&cfg, &grid)?;
        if with_spectrum {
            out.table("spectrum", &map_table(&s));
        }
        if order != "g2" {
            out.table("g1", &correlation_table(&g1_map(&s)?, xi_max, tau_max));
        }
        if order != "g1" || fit {
            let mut f = spectral_amplitude(&cfg, &grid)?;
            if l != 0.0 {
                f = apply_azimuthal_phase(&f, l as i32, None);
            }
            let m = g2_map(&f)?;
            if order != "g1" {
                out.table("g2", &correlation_table(&m, xi_max, tau_max));
            }
            if fit {
                out.json("ring_fit.json", &ring_fit(&m)?);
            }
        }
        Ok(())
    }))
}

// ---------------------------------------------------------------- schmidt

fn schmidt(p: &Params) -> Result<Job, CliError> {
    let cfg = crystal(p, (2.0, 354.7))?;
    if cfg.pump_duration_ps.is_none() {
        return Err(CliError::Config(
            "`crystal.pump_duration_ps`: required for the joint spectral amplitude".into(),
        ));
    }
    let method = p.choice("schmidt.method", "banded", &["banded", "dense"])?;
    let w_max = p.positive_or("schmidt.omega_max", 0.4)?;
    cfg.check_grid_window(w_max).map_err(|e| CliError::at("schmidt.omega_max", e))?;
    let n = p.count_or("schmidt.n", if method == "banded" { 4001 } else { 301 })?;
    if n < 16 || (method == "dense" && n > 2000) {
        return Err(CliError::Config(format!(
            "`schmidt.n`: {n} points out of range for the {method} method"
        )));
    }
    let (modes, g_tilde) = if method == "dense" {
        (
            p.count_or("schmidt.modes", 8)?,
            p.f64_list_or("schmidt.g_tilde", &[0.0])?,
        )
    } else {
        (0, vec![])
    };
    if g_tilde.iter().any(|g| *g < 0.0) {
        return Err(CliError::Config("`schmidt.g_tilde`: gain must be non-negative".into()));
    }
    Ok(Box::new(move |out| {
        if method == "banded" {
            let b = build_jsa_banded(&cfg, w_max, n)?;
            let k = b.schmidt_number();
            let r = b.fedorov_ratio()?;
            let marg = b.marginal();
            let mm = marg.iter().cloned().fold(0.0, f64::max);
            let (mut bi, mut bv) = (0, -1.0);
            for (lo, v) in &b.rows {
                for (j, z) in v.iter().enumerate() {
                    if z.norm_sqr() > bv {
                        bv = z.norm_sqr();
                        bi = lo + j;
                    }
                }
            }
            let col = b.column(bi);
            let cm = col.iter().cloned().fold(0.0, f64::max);
            let names = ["omega_rad_per_fs", "marginal", "conditional"].map(String::from);
            let cols = vec![
                b.omega.clone(),
                marg.iter().map(|v| v / mm).collect(),
                col.iter().map(|v| v / cm).collect(),
            ];
            out.table("widths", &Table::from_columns(&names, &cols).with_comment("unit_max"));
            out.json(
                "summary.json",
                &json!({"method": "banded", "K": k, "fedorov": r, "idler_omega_of_conditional": b.omega[bi]}),
            );
        } else {
            let axis = linspace(-w_max, w_max, n);
            let f = build_jsa(&cfg, axis.clone(), axis)?;
            let jsi = f.jsi();
            let r = fedorov_ratio(&f.omega_s, &jsi).ok();
            let d = schmidt_decompose(&f)?;
            let mut t = Table::new(&["index", "lambda"]);
            for (i, l) in d.lambdas.iter().enumerate() {
                t.push(vec![i as f64, *l]);
            }
            out.table("lambdas", &t);
            let keep = modes.min(d.n_modes());
            let mut names = vec!["omega_rad_per_fs".to_string()];
            let mut cols = vec![d.omega_s.clone()];
            for m in 0..keep {
                names.push(format!("abs_psi{m}"));
                cols.push(d.signal_modes.row(m).iter().map(|z| z.norm()).collect());
            }
            out.table("modes", &Table::from_columns(&names, &cols));
            let mut jt = Table::new(&["omega_s_rad_per_fs", "omega_i_rad_per_fs", "jsi"]);
            for (i, &a) in f.omega_s.iter().enumerate() {
                for (j, &b) in f.omega_i.iter().enumerate() {
                    jt.push(vec![a, b, jsi[[i, j]]]);
                }
            }
            out.table("jsi", &jt);
            let after: Vec<_> = g_tilde
                .iter()
                .map(|&g| json!({"g_tilde": g, "K": redistribute_gain(&d, g).k()}))
                .collect();
            out.json(
                "summary.json",
                &json!({"method": "dense", "K": d.k(), "fedorov": r, "K_vs_gain": after}),
            );
        }
        Ok(())
    }))
}

// ---------------------------------------------------------------- hom

fn hom(p: &Params) -> Result<Job, CliError> {
    let cfg = crystal(p, (10.0, 400.0))?;
    let gs = gains(p, "hom.gains", &cfg)?;
    let lo = p.f64_or("hom.delay_min_fs", -150.0)?;
    let hi = p.f64_or("hom.delay_max_fs", 150.0)?;
    let n = p.count_or("hom.delays", 301)?;
    if !(hi > lo) || n < 3 {
        return Err(CliError::Config("`hom.delays`: need delay_min_fs < delay_max_fs and ≥ 3 delays".into()));
    }
    let window = p.opt_f64("hom.window_fs")?;
    if window.is_none() && cfg.pump_duration_ps.is_none() {
        return Err(CliError::Config(
            "`hom.window_fs`: required when `crystal.pump_duration_ps` is absent".into(),
        ));
    }
    let modes = p.f64_or("hom.spatial_modes", 1.0)?;
    if !(modes >= 1.0) {
        return Err(CliError::Config(format!("`hom.spatial_modes`: M must be at least 1, got {modes}")));
    }
    let curves = p.choice("hom.curves", "both", &["both", "g2", "nrf"])?;
    let delays = linspace(lo, hi, n);
    // configuration errors surface here, before any integral
    let configs = gs
        .iter()
        .map(|&g| {
            let c = cfg.with_gain(g);
            let hc = match window {
                Some(t) => HomConfig::new(&c, t, delays.clone()),
                None => HomConfig::pulsed(&c, delays.clone()),
            };
            hc.and_then(|h| h.with_spatial_modes(modes)).map_err(|e| CliError::at("hom", e))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Box::new(move |out| {
        let mut summary = Vec::new();
        let mut g2_cols = vec![delays.clone()];
        let mut nrf_cols = vec![delays.clone()];
        let mut names = vec!["delay_fs".to_string()];
        for (g, hc) in gs.iter().zip(&configs) {
            names.push(format!("G{}", tag(*g)));
            let mut entry = json!({"gain": g});
            if curves != "nrf" {
                let c = hom_g2_curve(hc)?;
                entry["g2"] = json!({
                    "width_fs": extremum_width(&c).ok(),
                    "visibility": c.visibility,
                    "extremum_delay_fs": c.extremum_delay,
                    "extremum_value": c.extremum_value,
                });
                g2_cols.push(c.values);
            }
            if curves != "g2" {
                let c = hom_nrf_curve(hc)?;
                entry["nrf"] = json!({
                    "width_fs": extremum_width(&c).ok(),
                    "visibility": c.visibility,
                    "extremum_delay_fs": c.extremum_delay,
                    "extremum_value": c.extremum_value,
                });
                nrf_cols.push(c.values);
            }
            summary.push(entry);
        }
        if curves != "nrf" {
            out.table("hom_g2", &Table::from_columns(&names, &g2_cols).with_comment("g2_12 vs delay per gain"));
        }
        if curves != "g2" {
            out.table("hom_nrf", &Table::from_columns(&names, &nrf_cols).with_comment("Var(N-)/<N+> vs delay per gain"));
        }
        out.json("summary.json", &summary);
        Ok(())
    }))
}

// ---------------------------------------------------------------- stats

fn distribution(p: &Params) -> Result<PhotonDistribution, CliError> {
    let kind = p.choice(
        "stats.dist",
        "thermal",
        &["coherent", "poisson", "thermal", "superbunched"],
    )?;
    let mean = p.positive_or("stats.mean", 1.0)?;
    let modes = p.opt_f64("stats.modes")?;
    if let Some(m) = modes {
        if !(m >= 1.0) {
            return Err(CliError::Config(format!("`stats.modes`: M must be at least 1, got {m}")));
        }
    }
    let d = match (kind.as_str(), modes) {
        ("coherent" | "poisson", _) => PhotonDistribution::Poisson { mean },
        ("thermal", None) => PhotonDistribution::Thermal { mean },
        (_, None) => PhotonDistribution::Superbunched { mean },
        ("thermal", Some(m)) => PhotonDistribution::thermal_modes(mean, m).map_err(|e| CliError::at("stats.modes", e))?,
        (_, Some(m)) => {
            PhotonDistribution::superbunched_modes(mean, m).map_err(|e| CliError::at("stats.modes", e))?
        }
    };
    d.validate().map_err(|e| CliError::at("stats", e))?;
    Ok(d)
}

fn histogram_table(h: &Histogram, theory: Option<&PhotonDistribution>) -> Table {
    let mut cols = vec!["bin_lo", "bin_hi", "probability"];
    if theory.is_some() {
        cols.push("probability_theory");
    }
    let mut t = Table::new(&cols);
    for (i, &pr) in h.probs.iter().enumerate() {
        let (a, b) = (h.edges[i], h.edges[i + 1]);
        let mut row = vec![a, b, pr];
        if let Some(d) = theory {
            row.push(d.cdf(b) - d.cdf(a));
        }
        t.push(row);
    }
    t
}

fn stats(p: &Params) -> Result<Job, CliError> {
    let exp = p.choice(
        "stats.experiment",
        "sample",
        &["sample", "gn_table", "twin_beam", "fock_bs", "filter"],
    )?;
    match exp.as_str() {
        "sample" => stats_sample(p),
        "gn_table" => {
            let top = p.count_or("stats.max_order", 8)?;
            if !(1..=40).contains(&top) {
                return Err(CliError::Config("`stats.max_order`: must lie in 1..=40".into()));
            }
            Ok(Box::new(move |out| {
                let (th, sb) = (PhotonDistribution::Thermal { mean: 1.0 }, PhotonDistribution::Superbunched { mean: 1.0 });
                let mut t = Table::new(&["order", "coherent", "thermal", "superbunched"]);
                for n in 1..=top as u32 {
                    t.push(vec![n as f64, 1.0, th.g(n), sb.g(n)]);
                }
                out.table("g_vs_order", &t);
                Ok(())
            }))
        }
        "twin_beam" => {
            let seed = p.seed()?;
            let mean = p.positive_or("stats.mean", 1e5)?;
            let modes = p.count_list_or("stats.modes", &[1])?;
            if modes.iter().any(|&m| m < 1) {
                return Err(CliError::Config("`stats.modes`: M must be at least 1".into()));
            }
            let n = p.count_or("stats.n", 200_000)?;
            let bins = p.count_or("stats.ratio_bins", 40)?;
            let split = p.f64_or("stats.splitting", 0.5)?;
            let phase = p.opt_f64("stats.phase")?;
            let cfgs = modes
                .iter()
                .map(|&m| {
                    let mut c = TwinBeamConfig::balanced(mean, m as usize);
                    c.ratio_bins = bins;
                    c.splitting = split;
                    c.phase = phase;
                    c.validate().map_err(|e| CliError::at("stats", e))?;
                    Ok(c)
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            Ok(Box::new(move |out| {
                let mut summary = Vec::new();
                for (k, c) in cfgs.iter().enumerate() {
                    let r = bsv_core::stats::twin_beam_bs_mc(c, n, derive_seed(seed, k as u64))?;
                    let (shape, contrast) = classify_shape(&r.ratio.probs);
                    out.table(&format!("ratio_M{}", c.modes), &histogram_table(&r.ratio, None));
                    out.table(&format!("n1_M{}", c.modes), &histogram_table(&r.n1, None));
                    summary.push(json!({"modes": c.modes, "shape": shape, "edge_to_centre": contrast}));
                }
                out.json("summary.json", &summary);
                Ok(())
            }))
        }
        "fock_bs" => {
            let ns = p.count_list_or("stats.photons", &[1, 20, 500])?;
            if ns.iter().any(|&n| n == 0 || n > 100_000) {
                return Err(CliError::Config("`stats.photons`: each N must lie in 1..=100000".into()));
            }
            Ok(Box::new(move |out| {
                for n in ns {
                    let mut t = Table::new(&["n1", "probability"]);
                    for (k, v) in fock_bs_distribution(n).into_iter().enumerate() {
                        t.push(vec![k as f64, v]);
                    }
                    out.table(&format!("fock_N{n}"), &t);
                }
                Ok(())
            }))
        }
        _ => {
            let seed = p.seed()?;
            let bws = p.f64_list_or("stats.bandwidths", &[0.5, 2.0])?;
            if bws.iter().any(|b| !(*b > 0.0)) {
                return Err(CliError::Config("`stats.bandwidths`: must be positive".into()));
            }
            let n = p.count_or("stats.n", 40_000)?;
            Ok(Box::new(move |out| {
                let mut t = Table::new(&["bandwidth", "g2_thermal", "se_thermal", "g2_bsv_pair", "se_bsv_pair"]);
                for (k, &bw) in bws.iter().enumerate() {
                    let th = field_filter_sim(FieldModel::Thermal, bw, n, derive_seed(seed, 2 * k as u64))?;
                    let bs = field_filter_sim(FieldModel::BsvPair, bw, n, derive_seed(seed, 2 * k as u64 + 1))?;
                    t.push(vec![bw, th.value, th.std_error, bs.value, bs.std_error]);
                }
                out.table("filter_g2", &t);
                Ok(())
            }))
        }
    }
}

fn stats_sample(p: &Params) -> Result<Job, CliError> {
    let seed = p.seed()?;
    let d = distribution(p)?;
    let n = p.count_or("stats.n", 100_000)?;
    if n < 2 {
        return Err(CliError::Config("`stats.n`: need at least 2 samples".into()));
    }
    let orders = p.count_list_or("stats.orders", &[2, 3, 4])?;
    if orders.iter().any(|&o| o == 0 || o > 12) {
        return Err(CliError::Config("`stats.orders`: each order must lie in 1..=12".into()));
    }
    let conv = match p.choice("stats.convention", "classical", &["classical", "factorial"])?.as_str() {
        "classical" => Convention::ClassicalMoments,
        _ => Convention::FactorialMoments,
    };
    let binning = p.choice("stats.binning", "log", &["log", "linear"])?;
    let per_decade = p.count_or("stats.bins_per_decade", LOG_BINS_PER_DECADE)?;
    let bins = p.count_or("stats.bins", 200)?;
    if per_decade == 0 || bins == 0 {
        return Err(CliError::Config("`stats.bins`: need at least one bin".into()));
    }
    let save = p.bool_or("stats.save_ensemble", false)?;
    Ok(Box::new(move |out| {
        let e = d.sample(n, seed)?;
        let v = e.values();
        let hi = v.iter().cloned().fold(0.0, f64::max);
        let edges = if binning == "log" {
            let lo = v.iter().cloned().filter(|x| *x > 0.0).fold(f64::MAX, f64::min).max(1e-9 * hi);
            log_edges(lo, hi * (1.0 + 1e-12), per_decade)?
        } else {
            linear_edges(0.0, hi * (1.0 + 1e-12), bins)?
        };
        let h = Histogram::from_samples(v, edges)?;
        let theory = d.gamma_params().map(|_| &d);
        out.table("histogram", &histogram_table(&h, theory));
        let est = estimate_g_orders(
            v,
            &orders.iter().map(|&o| o as u32).collect::<Vec<_>>(),
            conv,
            BOOTSTRAP_RESAMPLES,
            derive_seed(seed, 1),
        )?;
        let mut t = Table::new(&["order", "g", "std_error", "theory"]);
        for c in &est {
            t.push(vec![c.order as f64, c.value, c.std_error, d.g(c.order)]);
        }
        out.table("g", &t);
        if save {
            let mut b = Vec::new();
            write_ensemble(&mut b, &e)?;
            out.raw("ensemble.bin", b);
        }
        Ok(())
    }))
}

// ---------------------------------------------------------------- tails

fn tails(p: &Params) -> Result<Job, CliError> {
    let seed = p.seed()?;
    let source = p.choice("tails.source", "process", &["process", "pareto"])?;
    let n = p.count_or("tails.samples", 1_000_000)?;
    if n < 100 {
        return Err(CliError::Config("`tails.samples`: need at least 100 samples".into()));
    }
    let window = match p.raw_list_pair("tails.fit_window")? {
        Some((a, b)) if a > 0.0 && b > a => Some((a, b)),
        Some(_) => return Err(CliError::Config("`tails.fit_window`: need 0 < lo < hi".into())),
        None => None,
    };
    let fit_n_min = p.opt_f64("tails.fit_n_min")?;
    if matches!(fit_n_min, Some(m) if !(m > 0.0)) {
        return Err(CliError::Config("`tails.fit_n_min`: must be positive".into()));
    }
    enum Src {
        Pareto { alpha: f64, n_min: f64, mean_demo: bool },
        Process { pump: PhotonDistribution, kind: PumpKind, modes: f64, map: ProcessMap },
    }
    let src = if source == "pareto" {
        Src::Pareto {
            alpha: p.positive_or("tails.alpha", 0.5)?,
            n_min: p.positive_or("tails.n_min", 1.0)?,
            mean_demo: p.bool_or("tails.mean_demo", false)?,
        }
    } else {
        let pk = p.choice("tails.pump", "thermal", &["thermal", "superbunched"])?;
        let mean = p.positive_or("tails.pump_mean", 1.0)?;
        let modes = p.f64_or("tails.pump_modes", 1.0)?;
        if !(modes >= 1.0) {
            return Err(CliError::Config(format!("`tails.pump_modes`: M must be at least 1, got {modes}")));
        }
        let (pump, kind) = if pk == "thermal" {
            (PhotonDistribution::thermal_modes(mean, modes), PumpKind::Thermal)
        } else {
            (PhotonDistribution::superbunched_modes(mean, modes), PumpKind::Superbunched)
        };
        let pump = pump.map_err(|e| CliError::at("tails.pump_modes", e))?;
        let map = match p.choice("tails.process", "fwm", &["fwm", "harmonic"])?.as_str() {
            "fwm" => ProcessMap::FwmSinh2 {
                kappa: p.positive_or("tails.kappa", 1.0)?,
            },
            _ => {
                let order = p.count_or("tails.order", 2)?;
                if !(1..=8).contains(&order) {
                    return Err(CliError::Config("`tails.order`: must lie in 1..=8".into()));
                }
                ProcessMap::PowerLawHarmonic {
                    n: order as u32,
                    k_eff: p.positive_or("tails.k_eff", 1.0)?,
                }
            }
        };
        map.validate().map_err(|e| CliError::at("tails.process", e))?;
        Src::Process { pump, kind, modes, map }
    };
    Ok(Box::new(move |out| {
        let mut extra = json!({});
        let (samples, n_min, theory) = match &src {
            Src::Pareto { alpha, n_min, mean_demo } => {
                let s = sample_pareto(*alpha, *n_min, n, seed)?;
                extra["source"] = json!({"kind": "pareto", "alpha": alpha, "n_min": n_min});
                if *mean_demo {
                    let mut sizes = vec![];
                    let mut k = 10usize;
                    while k <= n {
                        sizes.push(k);
                        k *= 10;
                    }
                    let tr = indefinite_mean_demo(&s, &sizes, 32, derive_seed(seed, 1))?;
                    let mut t = Table::new(&["size", "median_running_mean"]);
                    for (a, b) in tr.sizes.iter().zip(&tr.median_means) {
                        t.push(vec![*a as f64, *b]);
                    }
                    out.table("running_mean", &t);
                    extra["running_mean_slope"] = json!({"slope": tr.slope, "ci": tr.slope_ci, "expected": 1.0 / alpha - 1.0});
                }
                (s, fit_n_min.or(Some(*n_min)), None)
            }
            Src::Process { pump, kind, modes, map } => {
                let e = sample_process(&pump.sample(n, seed)?, *map)?;
                extra["source"] = json!({"kind": "process", "pump": pump, "map": map});
                if let ProcessMap::FwmSinh2 { kappa } = map {
                    extra["alpha_predicted"] = json!(fwm_tail_exponent_prediction(*kappa, pump.mean(), *modes, *kind).ok());
                }
                let pf = pushforward_pdf(pump, *map).ok().filter(|f| f.has_closed_form());
                (e.channel("out")?.to_vec(), fit_n_min, pf)
            }
        };
        let rep = tail_report(&samples, n_min, window)?;
        let mut hz = Table::new(&["N", "H_over_N"]);
        for (x, h) in &rep.hazard {
            hz.push(vec![*x, *h]);
        }
        let hz_path = out.table("hazard_trend", &hz);
        let mut cc = match theory {
            Some(_) => Table::new(&["N", "ccdf", "ccdf_theory"]),
            None => Table::new(&["N", "ccdf"]),
        };
        for (x, c) in &rep.ccdf {
            let mut row = vec![*x, *c];
            if let Some(f) = &theory {
                row.push(f.ccdf(*x));
            }
            cc.push(row);
        }
        let cc_path = out.table("ccdf", &cc);
        let mle = rep.alpha_mle;
        let report = json!({
            "alpha_fit": rep.alpha_fit.map(|f| f.alpha),
            "alpha_fit_window": rep.alpha_fit.map(|f| [f.window.0, f.window.1]),
            "alpha_fit_uncertainty": rep.alpha_fit.map(|f| f.uncertainty),
            "alpha_mle": mle.map(|m| m.alpha),
            "alpha_mle_std_error": mle.map(|m| m.std_error),
            "pdf_exponent": mle.map(|m| m.pdf_exponent),
            "n_min": mle.map(|m| m.n_min).or(n_min),
            "s": mle.map(|m| m.s),
            "tail_index_trend": rep.tail_index_trend,
            "hazard_trend_csv_path": hz_path,
            "ccdf_path": cc_path,
            "samples": n,
            "seed": seed,
            "details": extra,
        });
        out.json("tail_report.json", &report);
        Ok(())
    }))
}

// ---------------------------------------------------------------- gainfit

fn gainfit(p: &Params) -> Result<Job, CliError> {
    let tol = p.positive_or("gainfit.max_rel_residual", 0.2)?;
    let (powers, intensities, truth) = match p.opt_str("gainfit.input")? {
        Some(file) => {
            let text = std::fs::read_to_string(&file)
                .map_err(|e| CliError::Config(format!("`gainfit.input`: cannot read `{file}`: {e}")))?;
            let (h, rows) = read_csv(&text).map_err(|e| CliError::at("gainfit.input", e))?;
            let col = |name: &str| {
                h.iter()
                    .position(|c| c == name)
                    .ok_or_else(|| CliError::Config(format!("`gainfit.input`: no `{name}` column in `{file}`")))
            };
            let (ip, ii) = (col("power")?, col("intensity")?);
            (
                rows.iter().map(|r| r[ip]).collect::<Vec<_>>(),
                rows.iter().map(|r| r[ii]).collect::<Vec<_>>(),
                None,
            )
        }
        None => {
            // synthetic data from the sinh² model with multiplicative noise
            let seed = p.seed()?;
            let i0 = p.positive_or("gainfit.i0", 1.0)?;
            let b = p.positive_or("gainfit.b", 1.0)?;
            let p_max = p.positive_or("gainfit.p_max", 40.0)?;
            let pts = p.count_or("gainfit.points", 20)?;
            let noise = p.f64_or("gainfit.noise", 0.03)?;
            if !(0.0..0.5).contains(&noise) {
                return Err(CliError::Config("`gainfit.noise`: must lie in [0, 0.5)".into()));
            }
            if pts < 4 {
                return Err(CliError::Config("`gainfit.points`: need at least 4".into()));
            }
            let ps: Vec<f64> = (1..=pts).map(|k| p_max * k as f64 / pts as f64).collect();
            let jitter = if noise > 0.0 {
                PhotonDistribution::GaussianNoise { mean: 0.0, sigma: noise }
                    .sample(pts, seed)?
                    .values()
                    .to_vec()
            } else {
                vec![0.0; pts]
            };
            let is = ps
                .iter()
                .zip(&jitter)
                .map(|(&pw, j)| gain_model(i0, b, pw) * (1.0 + j))
                .collect();
            (ps, is, Some((i0, b)))
        }
    };
    if powers.len() < 4 {
        return Err(CliError::Config("`gainfit.input`: need at least 4 (power, intensity) rows".into()));
    }
    Ok(Box::new(move |out| {
        let fit = fit_gain(&powers, &intensities, tol)?;
        let mut t = Table::new(&["power", "intensity", "model", "gain"]);
        for (k, (&pw, &i)) in powers.iter().zip(&intensities).enumerate() {
            t.push(vec![pw, i, gain_model(fit.i0, fit.b, pw), fit.gains[k]]);
        }
        out.table("gainfit_curve", &t);
        out.json("gainfit.json", &json!({"fit": fit, "truth": truth.map(|(i0, b)| json!({"i0": i0, "b": b}))}));
        Ok(())
    }))
}
