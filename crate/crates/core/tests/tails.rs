use bsv_core::quad::adaptive_simpson;
use bsv_core::stats::PhotonDistribution as D;
use bsv_core::tails::*;

fn thermal(mean: f64) -> D {
    D::Thermal { mean }
}

fn sb(mean: f64) -> D {
    D::Superbunched { mean }
}

#[test]
fn weibull_harmonic_matches_direct_change_of_variables() {
    let (mu, k) = (3.0, 0.7);
    let pf = pushforward_pdf(&thermal(mu), ProcessMap::PowerLawHarmonic { n: 2, k_eff: k }).unwrap();
    for i in 0..10 {
        let y = 0.05 * 3f64.powi(i);
        // x = √(y/K), P_in = e^{-x/μ}/μ, dy/dx = 2Kx
        let x = (y / k).sqrt();
        let oracle = (-x / mu).exp() / mu / (2.0 * k * x);
        assert!((pf.pdf(y) / oracle - 1.0).abs() < 1e-10, "y={y}");
        assert!((pf.ccdf(y) - (-x / mu).exp()).abs() < 1e-12);
    }
}

#[test]
fn superbunched_harmonic_closed_form_agrees_with_numeric_path() {
    let pf = pushforward_pdf(&sb(2.0), ProcessMap::PowerLawHarmonic { n: 3, k_eff: 0.01 }).unwrap();
    assert!(pf.has_closed_form());
    for i in 0..12 {
        let y = 1e-4 * 5f64.powi(i);
        let (a, b) = (pf.pdf(y), pf.pdf_numeric(y));
        assert!((a / b - 1.0).abs() < 1e-8, "y={y}: {a} {b}");
    }
}

#[test]
fn identity_map_leaves_the_law_unchanged() {
    let id = ProcessMap::PowerLawHarmonic { n: 1, k_eff: 1.0 };
    for d in [thermal(2.0), sb(2.0), D::Poisson { mean: 4.0 }, D::thermal_modes(3.0, 4.0).unwrap()] {
        let pf = pushforward_pdf(&d, id).unwrap();
        for x in [0.1, 1.0, 3.3, 9.0] {
            assert!((pf.pdf(x) / d.pdf(x) - 1.0).abs() < 1e-12 || d.pdf(x) == 0.0);
            assert!((pf.ccdf(x) - d.ccdf(x)).abs() < 1e-12, "{d:?} {x}: {} {}", pf.ccdf(x), d.ccdf(x));
        }
    }
}

fn matrix() -> Vec<PushForward> {
    let mut v = Vec::new();
    for d in [thermal(1.5), sb(1.5)] {
        for n in 1..=4 {
            v.push(pushforward_pdf(&d, ProcessMap::PowerLawHarmonic { n, k_eff: 0.3 }).unwrap());
        }
    }
    for kn in [0.5, 1.0, 2.5] {
        for m in [1.0, 2.0, 5.0] {
            for d in [D::thermal_modes(kn, m).unwrap(), D::superbunched_modes(kn, m).unwrap()] {
                v.push(pushforward_pdf(&d, ProcessMap::FwmSinh2 { kappa: 1.0 }).unwrap());
            }
        }
    }
    v
}

#[test]
fn closed_forms_integrate_to_one() {
    for pf in matrix() {
        assert!(pf.has_closed_form());
        // ∫ P(y) dy = ∫ P(e^s) e^s ds; start where C̄ is within 1e-9 of 1
        let f = |s: f64| pf.pdf(s.exp()) * s.exp();
        let lo = (1..4000).map(|i| -0.25 * i as f64).find(|&s| pf.cdf(s.exp()) < 1e-9).unwrap();
        let hi = (1..4000).map(|i| 0.5 * i as f64).find(|&s| pf.ln_ccdf_ln(s) < -25.0).unwrap_or(700.0);
        let total = pf.cdf(lo.exp()) + adaptive_simpson(f, lo, hi, 1e-10, 1e-14, 200).unwrap() + pf.ccdf(hi.exp());
        assert!((total - 1.0).abs() < 1e-6, "{:?}: {total}", pf.map);
    }
}

#[test]
fn ccdf_is_the_integrated_tail_of_the_pdf() {
    for pf in matrix() {
        for y in [0.3f64, 2.0, 40.0] {
            let f = |s: f64| pf.pdf(s.exp()) * s.exp();
            let tail = adaptive_simpson(f, y.ln(), 700.0, 1e-10, 1e-16, 400).unwrap();
            let c = pf.ccdf(y);
            assert!((tail - c).abs() < 1e-6 * c.max(1e-3), "{:?} y={y}: {tail} {c}", pf.map);
        }
    }
}

#[test]
fn monte_carlo_output_follows_the_pushforward() {
    let n = 1_000_000;
    let crit = 1.63 / (n as f64).sqrt();
    let cases = [
        (thermal(2.0), ProcessMap::FwmSinh2 { kappa: 0.5 }),
        (sb(2.0), ProcessMap::PowerLawHarmonic { n: 2, k_eff: 1.0 }),
        (D::superbunched_modes(2.0, 5.0).unwrap(), ProcessMap::FwmSinh2 { kappa: 0.8 }),
    ];
    for (i, (d, map)) in cases.into_iter().enumerate() {
        let e = sample_process(&d.sample(n, 40 + i as u64).unwrap(), map).unwrap();
        let pf = pushforward_pdf(&d, map).unwrap();
        let ks = ks_statistic(e.channel("out").unwrap(), |y| pf.cdf(y));
        assert!(ks < crit, "{map:?}: {ks}");
    }
}

#[test]
fn zero_coupling_gives_zero_output() {
    let e = thermal(3.0).sample(100, 1).unwrap();
    let out = sample_process(&e, ProcessMap::FwmSinh2 { kappa: 0.0 }).unwrap();
    assert!(out.channel("out").unwrap().iter().all(|&v| v == 0.0));
    assert!(pushforward_pdf(&thermal(3.0), ProcessMap::FwmSinh2 { kappa: 0.0 }).is_err());
}

#[test]
fn correlation_transfer_values() {
    let th: Vec<f64> = (1..=8).map(bsv_core::special::factorial).collect();
    let sbg: Vec<f64> = (1..=8).map(bsv_core::special::double_factorial_odd).collect();
    assert!((cf_transfer(&th, 2, 2).unwrap() - 6.0).abs() < 1e-12);
    assert!((cf_transfer(&sbg, 4, 2).unwrap() - 2027025.0 / 11025.0).abs() < 1e-9);
    assert_eq!(cf_transfer(&sbg, 4, 2).unwrap().round(), 184.0);
    assert!(cf_transfer(&[1.0; 8], 2, 4).unwrap() == 1.0);
    for n in 1..=8 {
        assert_eq!(cf_transfer(&th, n, 1).unwrap(), 1.0);
    }
    assert!(cf_transfer(&th, 3, 3).is_err());
}

#[test]
fn second_harmonic_of_thermal_light_has_g2_of_six() {
    let e = sample_process(
        &thermal(1.0).sample(2_000_000, 9).unwrap(),
        ProcessMap::PowerLawHarmonic { n: 2, k_eff: 1.0 },
    )
    .unwrap();
    let g = bsv_core::stats::estimate_g(e.channel("out").unwrap(), 2, bsv_core::stats::Convention::ClassicalMoments)
        .unwrap();
    assert!((g.value / 6.0 - 1.0).abs() < 0.05, "{}", g.value);
}

#[test]
fn efficiency_enhancement_tracks_pump_correlations() {
    let n = 1_000_000;
    let coh = D::Dirac { mean: 3.0 }.sample(n, 0).unwrap();
    for (order, expect) in [(2u32, 3.0), (4, 105.0)] {
        let map = ProcessMap::PowerLawHarmonic { n: order, k_eff: 1e-3 };
        let f = sample_process(&sb(3.0).sample(n, 11).unwrap(), map).unwrap();
        let c = sample_process(&coh, map).unwrap();
        let e = statistical_enhancement(
            f.channel("pump").unwrap(),
            f.channel("out").unwrap(),
            c.channel("pump").unwrap(),
            c.channel("out").unwrap(),
            order,
            5,
        )
        .unwrap();
        assert!((e.ratio / expect - 1.0).abs() < 0.05, "n={order}: {e:?}");
        assert!(e.std_error > 0.0 && (e.ratio - expect).abs() < 5.0 * e.std_error);
    }
}

#[test]
fn analytic_hazard_limits() {
    let mu = 2.0;
    for x in [0.5, 5.0, 50.0] {
        assert!((hazard_over_n(&thermal(mu), x) - 1.0 / mu).abs() < 1e-12);
    }
    let h = hazard_over_n(&sb(mu), 1e6);
    assert!((h * 2.0 * mu - 1.0).abs() < 1e-3, "{h}");
    // harmonic of superbunched light: H/N keeps falling
    let pf = pushforward_pdf(&sb(mu), ProcessMap::PowerLawHarmonic { n: 3, k_eff: 1.0 }).unwrap();
    let hn: Vec<f64> = [1e1, 1e3, 1e5, 1e7].iter().map(|&y: &f64| -pf.ln_ccdf_ln(y.ln()) / y).collect();
    assert!(hn.windows(2).all(|w| w[1] < 0.2 * w[0]), "{hn:?}");
}

#[test]
fn empirical_ccdf_uses_half_offset() {
    let c = EmpiricalCcdf::new(&[3.0, 1.0, 4.0, 2.0]).unwrap();
    let p = c.points();
    assert_eq!(p[0], (1.0, 0.875));
    assert_eq!(p[3], (4.0, 0.125));
    assert_eq!(c.at(0.5), 1.0);
    assert_eq!(c.at(2.5), 0.625);
    assert!(EmpiricalCcdf::new(&[]).is_err());
    assert!(EmpiricalCcdf::new(&[1.0, f64::NAN]).is_err());
}

#[test]
fn mle_conventions_and_errors() {
    let e = std::f64::consts::E;
    let r = pareto_mle(&[e * 2.0, e * 2.0, 1.0], 2.0).unwrap();
    assert!((r.pdf_exponent - 2.0).abs() < 1e-12);
    assert!((r.alpha - 1.0).abs() < 1e-12);
    assert_eq!(r.s, 2);
    assert!(matches!(pareto_mle(&[2.0, 2.0], 2.0), Err(bsv_core::Error::AllAtBoundary)));
    assert!(pareto_mle(&[1.0], 2.0).is_err());
}

#[test]
fn mle_recovers_synthetic_exponents() {
    for (i, a) in [0.3, 0.5, 1.5].into_iter().enumerate() {
        let s = sample_pareto(a, 10.0, 100_000, 70 + i as u64).unwrap();
        let r = pareto_mle(&s, 10.0).unwrap();
        assert!((r.alpha / a - 1.0).abs() < 0.02, "α={a}: {}", r.alpha);
        assert!((r.alpha - a).abs() < 4.0 * r.std_error);
    }
}

#[test]
fn tail_fit_on_exact_pareto_and_clipped_data() {
    let s = sample_pareto(0.5, 1.0, 1_000_000, 3).unwrap();
    let c = EmpiricalCcdf::new(&s).unwrap();
    let f = ccdf_tail_fit(&c, (1.0, 1e8)).unwrap();
    assert!((f.alpha / 0.5 - 1.0).abs() < 0.02, "{f:?}");
    assert!(f.uncertainty < 0.02);
    // saturation piles everything above the cut onto it
    let cut = 1e6;
    let clipped: Vec<f64> = s.iter().map(|&x| x.min(cut)).collect();
    let cc = EmpiricalCcdf::new(&clipped).unwrap();
    let bad = ccdf_tail_fit(&cc, (1.0, 1e8)).unwrap();
    let good = ccdf_tail_fit(&cc, (1.0, 0.3 * cut)).unwrap();
    assert!((bad.alpha / 0.5 - 1.0).abs() > 0.05, "{bad:?}");
    assert!((good.alpha / 0.5 - 1.0).abs() < 0.02, "{good:?}");
}

#[test]
fn knee_rule() {
    let th = thermal(2.0).sample(200_000, 2).unwrap();
    assert!(knee_n_min(&EmpiricalCcdf::new(th.values()).unwrap()).is_none());
    let e = sample_process(&thermal(4.0).sample(200_000, 2).unwrap(), ProcessMap::FwmSinh2 { kappa: 1.0 }).unwrap();
    let k = knee_n_min(&EmpiricalCcdf::new(e.channel("out").unwrap()).unwrap()).unwrap();
    assert!(k > 1.0 && k < 100.0, "{k}");
}

fn fwm_report(d: D, kappa: f64, n: usize, seed: u64) -> (Vec<f64>, TailReport) {
    let e = sample_process(&d.sample(n, seed).unwrap(), ProcessMap::FwmSinh2 { kappa }).unwrap();
    let out = e.channel("out").unwrap().to_vec();
    let r = tail_report(&out, None, None).unwrap();
    (out, r)
}

#[test]
fn fwm_tail_slopes_follow_the_pump() {
    let n = 2_000_000;
    let (_, th) = fwm_report(thermal(1.0), 1.0, n, 21);
    let a_th = th.alpha_fit.unwrap().alpha;
    assert!((a_th / 0.5 - 1.0).abs() < 0.1, "{:?}", th.alpha_fit);
    let (_, sbr) = fwm_report(sb(1.0), 1.0, n, 22);
    let a_sb = sbr.alpha_fit.unwrap().alpha;
    assert!((a_sb / 0.25 - 1.0).abs() < 0.15, "{:?}", sbr.alpha_fit);
    assert!((a_sb / a_th - 0.5).abs() < 0.1);
    // heavy tail: H/N drops by decades along the grid
    assert!(th.tail_index_trend < 1e-3 * th.hazard[0].1);
}

#[test]
fn tail_equivalence_over_the_top_decade() {
    let (out, r) = fwm_report(thermal(1.0), 1.0, 2_000_000, 23);
    let fit = r.alpha_fit.unwrap();
    let c = EmpiricalCcdf::new(&out).unwrap();
    let top = c.quantile(1.0 - 1e-4);
    let ratios: Vec<f64> = (0..=10)
        .map(|i| {
            let x = top * 10f64.powf(-1.0 + 0.1 * i as f64);
            c.at(x) / (fit.intercept - fit.alpha * x.ln()).exp()
        })
        .collect();
    let (lo, hi) = ratios.iter().fold((f64::MAX, 0f64), |a, &r| (a.0.min(r), a.1.max(r)));
    assert!(hi / lo < 1.2, "{ratios:?}");
}

#[test]
fn multimode_exponent_reaches_the_linear_law_only_asymptotically() {
    for m in [1.0, 2.0, 5.0] {
        let pf = pushforward_pdf(&D::thermal_modes(4.0, m).unwrap(), ProcessMap::FwmSinh2 { kappa: 1.0 }).unwrap();
        let expect = fwm_tail_exponent_prediction(1.0, 4.0, m, PumpKind::Thermal).unwrap();
        let far = pf.local_tail_slope(1e5);
        assert!((far / expect - 1.0).abs() < 1e-3, "M={m}: {far}");
        let pfs = pushforward_pdf(&D::superbunched_modes(4.0, m).unwrap(), ProcessMap::FwmSinh2 { kappa: 1.0 })
            .unwrap();
        let expect = fwm_tail_exponent_prediction(1.0, 4.0, m, PumpKind::Superbunched).unwrap();
        assert!((pfs.local_tail_slope(1e5) / expect - 1.0).abs() < 1e-3);
    }
    // inside an observable window the M = 5 slope is well below M/(2κ⟨N⟩)
    let d = D::thermal_modes(4.0, 5.0).unwrap();
    let pf = pushforward_pdf(&d, ProcessMap::FwmSinh2 { kappa: 1.0 }).unwrap();
    let (_, r) = {
        let e = sample_process(&d.sample(2_000_000, 31).unwrap(), ProcessMap::FwmSinh2 { kappa: 1.0 }).unwrap();
        let out = e.channel("out").unwrap().to_vec();
        let c = EmpiricalCcdf::new(&out).unwrap();
        let w = (c.quantile(0.99), c.quantile(1.0 - 1e-5));
        let f = ccdf_tail_fit(&c, w).unwrap();
        (w, f)
    };
    let (lo, hi) = r.window;
    let secant = -(pf.ln_ccdf_ln(hi.ln()) - pf.ln_ccdf_ln(lo.ln())) / (hi / lo).ln();
    assert!((r.alpha / secant - 1.0).abs() < 0.1, "{} vs {secant}", r.alpha);
    assert!(secant < 0.85 * 0.625);
}

#[test]
fn prediction_table() {
    let p = |k: f64, m: f64| fwm_tail_exponent_prediction(1.0, k, m, PumpKind::Superbunched).unwrap();
    assert_eq!(format!("{:.2}", p(4.0, 5.0)), "0.31");
    assert!((p(2.5, 5.0) - 0.5).abs() < 1e-12);
    assert!((p(2.5, 2.0) - 0.2).abs() < 1e-12);
    assert!((fwm_tail_exponent_prediction(2.0, 2.0, 5.0, PumpKind::Thermal).unwrap() - 0.625).abs() < 1e-12);
    assert!(fwm_tail_exponent_prediction(0.0, 2.0, 1.0, PumpKind::Thermal).is_err());
}

#[test]
fn running_mean_grows_without_bound_below_unit_exponent() {
    let sizes: Vec<usize> = (2..=6).map(|k| 10usize.pow(k)).collect();
    let heavy = sample_pareto(0.5, 1.0, 2_000_000, 8).unwrap();
    let t = indefinite_mean_demo(&heavy, &sizes, 64, 1).unwrap();
    assert!((t.slope - 1.0).abs() < 0.2, "{t:?}");
    assert!(t.slope_ci.0 < t.slope && t.slope < t.slope_ci.1);
    assert!(t.median_means.windows(2).all(|w| w[1] > w[0]));
    let light = sample_pareto(2.0, 1.0, 2_000_000, 8).unwrap();
    let t = indefinite_mean_demo(&light, &sizes, 64, 1).unwrap();
    assert!(t.slope.abs() < 0.05, "{t:?}");
    assert!(indefinite_mean_demo(&light, &[10, 10], 4, 1).is_err());
}

#[test]
fn report_json_round_trip() {
    let s = sample_pareto(0.7, 1.0, 50_000, 4).unwrap();
    let r = tail_report(&s, Some(1.0), None).unwrap();
    let back: TailReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
    assert_eq!(r, back);
    assert!(r.ccdf.windows(2).all(|w| w[1].1 <= w[0].1));
    assert!(r.ccdf[0].1 <= 1.0);
    assert!(r.alpha_mle.unwrap().alpha > 0.0 && r.alpha_fit.unwrap().alpha > 0.0);
}
