use bsv_core::hom::uv_functions;
use bsv_core::io::{fmt17, read_ensemble, write_ensemble};
use bsv_core::schmidt::{redistribute_lambdas, schmidt_number};
use bsv_core::stats::{estimate_g, fock_bs_distribution, Convention, Histogram, PhotonDistribution as D, PulseEnsemble};
use bsv_core::tails::{cf_transfer, pareto_mle, pushforward_pdf, EmpiricalCcdf, ProcessMap};
use proptest::prelude::*;

fn gamma_family() -> impl Strategy<Value = D> {
    (0.01f64..50.0, 1.0f64..20.0, 0usize..4).prop_map(|(mean, m, k)| match k {
        0 => D::Thermal { mean },
        1 => D::Superbunched { mean },
        2 => D::thermal_modes(mean, m).unwrap(),
        _ => D::superbunched_modes(mean, m).unwrap(),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn bogolyubov_norm(g in 0.0f64..12.0, dl in -60.0f64..60.0) {
        let (u, v) = uv_functions(g, dl);
        let s = u.norm_sqr();
        prop_assert!((s - v.norm_sqr() - 1.0).abs() < 1e-9 * s.max(1.0));
    }

    #[test]
    fn gain_redistribution_concentrates_modes(
        raw in proptest::collection::vec(1e-3f64..1.0, 2..40),
        g in 0.05f64..8.0,
    ) {
        let total: f64 = raw.iter().sum();
        let mut l: Vec<f64> = raw.iter().map(|x| x / total).collect();
        l.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let k0 = schmidt_number(&l);
        prop_assert!(k0 >= 1.0 - 1e-12 && k0 <= l.len() as f64 + 1e-9);
        let r = redistribute_lambdas(&l, g);
        prop_assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let distinct = l.windows(2).any(|w| (w[0] - w[1]).abs() > 1e-9);
        if distinct {
            prop_assert!(schmidt_number(&r) < k0);
        }
    }

    #[test]
    fn gamma_family_laws(d in gamma_family(), x in 0.0f64..200.0) {
        let (a, _) = d.gamma_params().unwrap();
        prop_assert!((d.g(2) - (1.0 + 1.0 / a)).abs() < 1e-9 * d.g(2));
        prop_assert!((d.cdf(x) + d.ccdf(x) - 1.0).abs() < 1e-12);
        prop_assert!(d.g(3) >= d.g(2) * d.g(2) - 1e-9);
        prop_assert!((d.moment(1) - d.mean()).abs() < 1e-9 * d.mean());
    }

    #[test]
    fn mean_is_the_mean(g in proptest::collection::vec(1.0f64..1e6, 8), n in 1usize..8) {
        prop_assert_eq!(cf_transfer(&g, n, 1).unwrap(), 1.0);
    }

    #[test]
    fn pushforward_survival_is_non_increasing(
        d in gamma_family(),
        kappa in 0.01f64..2.0,
        n in 1u32..5,
        ys in proptest::collection::vec(1e-6f64..1e12, 2..20),
    ) {
        let mut ys = ys;
        ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for map in [ProcessMap::FwmSinh2 { kappa }, ProcessMap::PowerLawHarmonic { n, k_eff: kappa }] {
            let pf = pushforward_pdf(&d, map).unwrap();
            let c: Vec<f64> = ys.iter().map(|&y| pf.ccdf(y)).collect();
            prop_assert!(c.windows(2).all(|w| w[1] <= w[0] + 1e-15));
            prop_assert!(c.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn mle_is_scale_invariant(
        s in proptest::collection::vec(1.0f64..1e4, 5..200),
        c in 1e-3f64..1e3,
    ) {
        let a = pareto_mle(&s, 1.0);
        let scaled: Vec<f64> = s.iter().map(|x| x * c).collect();
        let b = pareto_mle(&scaled, c);
        match (a, b) {
            (Ok(a), Ok(b)) => prop_assert!((a.alpha / b.alpha - 1.0).abs() < 1e-9),
            (a, b) => prop_assert_eq!(a.is_err(), b.is_err()),
        }
    }

    #[test]
    fn empirical_survival_is_monotone(s in proptest::collection::vec(0.0f64..1e3, 1..300)) {
        let c = EmpiricalCcdf::new(&s).unwrap();
        let p = c.points();
        prop_assert!(p.windows(2).all(|w| w[1].1 <= w[0].1));
        prop_assert!(p[0].1 <= 1.0 && p[p.len() - 1].1 > 0.0);
    }

    #[test]
    fn correlation_estimates_ignore_overall_scale(
        s in proptest::collection::vec(0.1f64..100.0, 10..200),
        c in 1e-3f64..1e3,
        n in 2u32..5,
    ) {
        let a = estimate_g(&s, n, Convention::ClassicalMoments).unwrap().value;
        let scaled: Vec<f64> = s.iter().map(|x| x * c).collect();
        let b = estimate_g(&scaled, n, Convention::ClassicalMoments).unwrap().value;
        prop_assert!((a / b - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fock_splitting_is_normalized_and_symmetric(n in 1u64..300) {
        let p = fock_bs_distribution(n);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        for k in 0..p.len() {
            prop_assert!((p[k] - p[p.len() - 1 - k]).abs() < 1e-12);
        }
    }

    #[test]
    fn histogram_cdf_is_monotone(w in proptest::collection::vec(0.0f64..1.0, 3..50)) {
        prop_assume!(w.iter().sum::<f64>() > 0.0);
        let edges: Vec<f64> = (0..=w.len()).map(|i| i as f64 * 0.5).collect();
        let h = Histogram::new(edges, w).unwrap();
        let c: Vec<f64> = (0..60).map(|i| h.cdf(i as f64 * 0.5 - 1.0)).collect();
        prop_assert!(c.windows(2).all(|x| x[1] >= x[0] - 1e-15));
        prop_assert!((c[c.len() - 1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn decimal_form_round_trips(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL) {
        prop_assert_eq!(fmt17(x).parse::<f64>().unwrap(), x);
    }
}

#[test]
fn ensemble_file_round_trip() {
    let mut e = PulseEnsemble::new(
        vec![("a".into(), vec![1.0, -2.5, 1e-300]), ("b".into(), vec![0.0, 3.0, f64::MAX])],
        Some(42),
    )
    .unwrap();
    e.meta.insert("source".into(), "test".into());
    let mut buf = Vec::new();
    write_ensemble(&mut buf, &e).unwrap();
    let back = read_ensemble(buf.as_slice()).unwrap();
    assert_eq!(back, e);
    buf[0] = b'X';
    assert!(read_ensemble(buf.as_slice()).is_err());
}

#[test]
fn csv_round_trip_and_histogram_layout() {
    use bsv_core::io::{csv_string, histogram_csv, read_csv};
    let rows = vec![vec![0.1, 1.0 / 3.0], vec![-7e-12, 2.0]];
    let text = csv_string(Some("axis1=x"), &["x", "y"], rows.clone());
    assert!(text.starts_with("# axis1=x\nx,y\n"));
    let (h, r) = read_csv(&text).unwrap();
    assert_eq!(h, vec!["x", "y"]);
    assert_eq!(r, rows);
    let hist = Histogram::new(vec![0.0, 1.0, 3.0], vec![1.0, 3.0]).unwrap();
    let (h, r) = read_csv(&histogram_csv(&hist)).unwrap();
    assert_eq!(h, vec!["bin_lo", "bin_hi", "probability"]);
    assert_eq!(r[1], vec![1.0, 3.0, 0.75]);
    assert!(read_csv("x,y\n1,2,3\n").is_err());
}
