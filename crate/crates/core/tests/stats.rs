use bsv_core::quad::adaptive_simpson;
use bsv_core::special::{double_factorial_odd, factorial};
use bsv_core::stats::*;
use nalgebra::DMatrix;

fn thermal(mean: f64) -> PhotonDistribution {
    PhotonDistribution::Thermal { mean }
}

fn superbunched(mean: f64) -> PhotonDistribution {
    PhotonDistribution::Superbunched { mean }
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (m, x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0))
}

#[test]
fn analytic_densities_are_normalized() {
    let cases = [
        thermal(3.0),
        superbunched(3.0),
        PhotonDistribution::thermal_modes(3.0, 4.0).unwrap(),
        PhotonDistribution::superbunched_modes(3.0, 1.0).unwrap(),
        PhotonDistribution::superbunched_modes(3.0, 5.0).unwrap(),
        PhotonDistribution::GaussianNoise { mean: 50.0, sigma: 7.0 },
    ];
    for d in cases {
        // N = t² tames the N^{-1/2} edge of the superbunched family
        let f = |t: f64| {
            let t = t.max(1e-150);
            2.0 * t * d.pdf(t * t)
        };
        let lo = if let PhotonDistribution::GaussianNoise { .. } = d { -60.0 } else { 0.0 };
        let total = if lo < 0.0 {
            adaptive_simpson(|x| d.pdf(x), -100.0, 200.0, 1e-13, 0.0, 64).unwrap()
        } else {
            adaptive_simpson(f, 0.0, 30.0, 1e-13, 0.0, 64).unwrap()
        };
        assert!((total - 1.0).abs() < 1e-9, "{d:?}: {total}");
        assert!((d.cdf(1e6) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn single_mode_moment_laws() {
    for n in 1..=8u32 {
        assert!((thermal(2.0).moment(n) / (factorial(n) * 2f64.powi(n as i32)) - 1.0).abs() < 1e-12);
        let sb = superbunched(2.0).moment(n);
        assert!((sb / (double_factorial_odd(n) * 2f64.powi(n as i32)) - 1.0).abs() < 1e-12);
    }
    assert_eq!(thermal(5.0).g(2), 2.0);
    assert_eq!(superbunched(5.0).g(2), 3.0);
    assert_eq!(PhotonDistribution::Dirac { mean: 4.0 }.variance(), 0.0);
    assert!((PhotonDistribution::Poisson { mean: 4.0 }.variance() - 4.0).abs() < 1e-12);
}

#[test]
fn multimode_g2_follows_the_dilution_law() {
    for m in [1.0, 2.0, 5.0, 40.0] {
        let th = PhotonDistribution::thermal_modes(1.0, m).unwrap().g(2);
        let sb = PhotonDistribution::superbunched_modes(1.0, m).unwrap().g(2);
        assert!((th - (1.0 + 1.0 / m)).abs() < 1e-12);
        assert!((sb - (1.0 + 2.0 / m)).abs() < 1e-12);
    }
}

#[test]
fn two_mode_superbunched_is_thermal() {
    let sb2 = PhotonDistribution::superbunched_modes(3.0, 2.0).unwrap();
    for x in [0.0, 0.1, 1.0, 4.0, 17.0] {
        assert!((sb2.pdf(x) - thermal(3.0).pdf(x)).abs() < 1e-14);
        assert!((sb2.ccdf(x) - (-x / 3.0f64).exp()).abs() < 1e-13);
    }
}

#[test]
fn samplers_match_moments_within_five_standard_errors() {
    let n = 1_000_000;
    let cases = [
        thermal(4.0),
        superbunched(4.0),
        PhotonDistribution::thermal_modes(4.0, 3.0).unwrap(),
        PhotonDistribution::superbunched_modes(4.0, 3.0).unwrap(),
        PhotonDistribution::Poisson { mean: 4.0 },
        PhotonDistribution::GaussianNoise { mean: 4.0, sigma: 2.0 },
    ];
    for (k, d) in cases.iter().enumerate() {
        let e = d.sample(n, 100 + k as u64).unwrap();
        let (m, v) = mean_var(e.values());
        let se_m = (d.variance() / n as f64).sqrt();
        // fourth central moment bounds the variance error
        let mu4 = d.moment(4) - 4.0 * d.mean() * d.moment(3) + 6.0 * d.mean().powi(2) * d.moment(2)
            - 3.0 * d.mean().powi(4);
        let se_v = ((mu4 - d.variance().powi(2)) / n as f64).sqrt();
        assert!((m - d.mean()).abs() < 5.0 * se_m, "{d:?} mean {m}");
        assert!((v - d.variance()).abs() < 5.0 * se_v, "{d:?} var {v}");
    }
    let dirac = PhotonDistribution::Dirac { mean: 7.0 }.sample(1000, 1).unwrap();
    assert_eq!(mean_var(dirac.values()).1, 0.0);
}

#[test]
fn sampled_correlation_functions() {
    let e = thermal(1.0).sample(1_000_000, 11).unwrap();
    let g2 = estimate_g(e.values(), 2, Convention::ClassicalMoments).unwrap();
    assert!((g2.value - 2.0).abs() < 0.01 && (g2.value - 2.0).abs() < 5.0 * g2.std_error, "{g2:?}");
    let e = superbunched(1.0).sample(1_000_000, 12).unwrap();
    let g4 = estimate_g(e.values(), 4, Convention::ClassicalMoments).unwrap();
    assert!((g4.value / 105.0 - 1.0).abs() < 0.05, "{g4:?}");
    assert!(g4.std_error > 0.0);
}

#[test]
fn estimator_conventions() {
    let c = estimate_g(&[3.0; 50], 3, Convention::ClassicalMoments).unwrap();
    assert_eq!(c.value, 1.0);
    let p = PhotonDistribution::Poisson { mean: 6.0 }.sample(400_000, 5).unwrap();
    for n in 2..=3 {
        let f = estimate_g(p.values(), n, Convention::FactorialMoments).unwrap();
        assert!((f.value - 1.0).abs() < 4.0 * f.std_error, "{f:?}");
    }
    let t = thermal(1e4).sample(200_000, 6).unwrap();
    let rounded: Vec<f64> = t.values().iter().map(|x| x.round()).collect();
    let a = estimate_g(&rounded, 2, Convention::ClassicalMoments).unwrap().value;
    let b = estimate_g(&rounded, 2, Convention::FactorialMoments).unwrap().value;
    assert!((a - b).abs() < 2e-4, "{a} {b}");
    assert!(matches!(
        estimate_g(&[0.0, 0.0], 2, Convention::ClassicalMoments),
        Err(bsv_core::Error::ZeroMean)
    ));
}

#[test]
fn loss_leaves_normalized_moments_unchanged() {
    let e = thermal(2e4).sample(300_000, 21).unwrap();
    let thinned = binomial_thinning(e.values(), 0.1, 22).unwrap();
    let before = estimate_g(e.values(), 2, Convention::ClassicalMoments).unwrap();
    let after = estimate_g(&thinned, 2, Convention::ClassicalMoments).unwrap();
    assert!((before.value - after.value).abs() < 1e-3, "{before:?} {after:?}");
}

#[test]
fn mandel_of_dirac_is_poisson() {
    let p = mandel_transform(&PhotonDistribution::Dirac { mean: 3.5 }, 40).unwrap();
    for (m, v) in p.probs.iter().enumerate() {
        let exact = 3.5f64.powi(m as i32) * (-3.5f64).exp() / factorial(m as u32);
        assert!((v - exact).abs() < 1e-14);
    }
}

#[test]
fn mandel_of_thermal_is_bose_einstein() {
    let mu = 4.0;
    let p = mandel_transform(&thermal(mu), 200).unwrap();
    for (m, v) in p.probs.iter().enumerate() {
        let be = mu.powi(m as i32) / (mu + 1.0).powi(m as i32 + 1);
        assert!((v - be).abs() < 1e-8 * be.max(1e-12), "m={m}: {v} vs {be}");
    }
    assert!((p.mean() - mu).abs() < 1e-8);
    assert!((p.variance() - (mu + mu * mu)).abs() < 1e-6);
}

#[test]
fn mandel_preserves_mean_and_adds_shot_noise() {
    let cases = [
        superbunched(3.0),
        PhotonDistribution::thermal_modes(6.0, 3.0).unwrap(),
        PhotonDistribution::GaussianNoise { mean: 60.0, sigma: 4.0 },
    ];
    for d in cases {
        let p = mandel_transform(&d, 400).unwrap();
        assert!((p.total() - 1.0).abs() < 1e-8, "{d:?}");
        assert!((p.mean() - d.mean()).abs() < 1e-8, "{d:?}: {}", p.mean());
        assert!((p.variance() - (d.mean() + d.variance())).abs() < 1e-6 * d.variance(), "{d:?}");
        // factorial moments of p(m) equal the classical moments of P(N)
        assert!((p.factorial_moment(3) / d.moment(3) - 1.0).abs() < 1e-7);
    }
}

#[test]
fn mandel_envelope_of_superbunched_light() {
    let mu = 5.0;
    let p = mandel_transform(&superbunched(mu), 500).unwrap();
    // negative binomial with shape ½ as an independent closed form
    let mut nb = 1.0 / (1.0 + 2.0 * mu).sqrt();
    for m in 0..60 {
        assert!((p.probs[m] - nb).abs() < 1e-10 * nb, "m={m}");
        nb *= (m as f64 + 0.5) / (m as f64 + 1.0) * 2.0 * mu / (1.0 + 2.0 * mu);
    }
    let even_mean: f64 = (0..400).map(|m| m as f64 * superbunched_discrete(m, mu)).sum();
    assert!((even_mean - p.mean()).abs() < 1e-9);
    // the bulk follows the even-only law once pairs of counts are merged
    for k in 0..=10 {
        let pair = p.probs[2 * k] + p.probs[2 * k + 1];
        let even = superbunched_discrete(2 * k as u64, mu);
        assert!((pair / even - 1.0).abs() < 0.1, "k={k}: {pair} {even}");
    }
}

#[test]
fn even_only_superbunched_counts() {
    let mu = 3.0;
    assert_eq!(superbunched_discrete(1, mu), 0.0);
    assert_eq!(superbunched_discrete(7, mu), 0.0);
    let probs: Vec<f64> = (0..2000).map(|m| superbunched_discrete(m, mu)).collect();
    let total: f64 = probs.iter().sum();
    assert!((total - 1.0).abs() < 1e-12);
    let m1: f64 = probs.iter().enumerate().map(|(m, p)| m as f64 * p).sum();
    let m2: f64 = probs.iter().enumerate().map(|(m, p)| (m as f64).powi(2) * p).sum();
    assert!((m1 - mu).abs() < 1e-10);
    assert!((m2 - m1 * m1 - (2.0 * mu * mu + 2.0 * mu)).abs() < 1e-9);
}

#[test]
fn filtering_keeps_equal_time_g2() {
    for bw in [0.25, 1.0] {
        let t = field_filter_sim(FieldModel::Thermal, bw, 40_000, 31).unwrap();
        let b = field_filter_sim(FieldModel::BsvPair, bw, 40_000, 32).unwrap();
        assert!((t.value - 2.0).abs() < 4.0 * t.std_error && (t.value - 2.0).abs() < 0.03, "{t:?}");
        assert!((b.value - 3.0).abs() < 4.0 * b.std_error && (b.value - 3.0).abs() < 0.05, "{b:?}");
    }
}

#[test]
fn single_bin_filter_gives_one_thermal_mode() {
    let grid = FilterGrid { n_bins: 64, span: 4.0, source_fwhm: 1.0 };
    let t = field_filter_sim_on(grid, FieldModel::Thermal, 0.0625, 200_000, 33).unwrap();
    assert!((t.value - 2.0).abs() < 4.0 * t.std_error, "{t:?}");
    assert!(field_filter_sim(FieldModel::Thermal, 1e-4, 10, 1).is_err());
}

#[test]
fn fock_interference_small_cases() {
    let p1 = fock_bs_distribution(1);
    assert_eq!(p1.len(), 3);
    assert!((p1[0] - 0.5).abs() < 1e-14 && p1[1] == 0.0 && (p1[2] - 0.5).abs() < 1e-14);
    for n in 1..=50 {
        let p = fock_bs_distribution(n);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12, "N={n}");
        assert!(p.iter().skip(1).step_by(2).all(|&v| v == 0.0));
    }
}

/// exp(θJ) for the beam-splitter generator J = a₁†a₂ − a₂†a₁ on the
/// fixed-total-photon subspace, by scaling and squaring.
fn beam_splitter_unitary(total: usize) -> DMatrix<f64> {
    let d = total + 1;
    let mut j = DMatrix::<f64>::zeros(d, d);
    for k in 0..d {
        // |k, total−k⟩
        if k + 1 < d {
            j[(k + 1, k)] += (((k + 1) * (total - k)) as f64).sqrt();
        }
        if k > 0 {
            j[(k - 1, k)] -= ((k * (total - k + 1)) as f64).sqrt();
        }
    }
    let theta = std::f64::consts::FRAC_PI_4;
    let squarings = 12;
    let a = j * (theta / 2f64.powi(squarings));
    let mut u = DMatrix::<f64>::identity(d, d);
    let mut term = DMatrix::<f64>::identity(d, d);
    for k in 1..30 {
        term = &term * &a / k as f64;
        u += &term;
    }
    for _ in 0..squarings {
        u = &u * &u;
    }
    u
}

#[test]
fn fock_interference_matches_brute_force_unitary() {
    for n in 1..=6usize {
        let u = beam_splitter_unitary(2 * n);
        let exact = fock_bs_distribution(n as u64);
        for (k, p) in exact.iter().enumerate() {
            let amp = u[(k, n)];
            assert!((amp * amp - p).abs() < 1e-12, "N={n} k={k}: {} vs {p}", amp * amp);
        }
    }
}

#[test]
fn large_fock_states_are_u_shaped() {
    for n in [20u64, 500] {
        let p = fock_bs_distribution(n);
        let even: Vec<f64> = p.iter().step_by(2).copied().collect();
        let imax = even.iter().enumerate().fold(0, |b, (i, &v)| if v > even[b] { i } else { b });
        assert!(imax == 0 || imax == even.len() - 1);
        assert_eq!(even[0], *even.last().unwrap());
        assert_eq!(classify_shape(&even).0, Shape::UShaped);
    }
}

#[test]
fn correlation_sum_is_conserved_for_fock_states() {
    for n in 1..=30 {
        let (a, b) = fock_correlation_sums(n);
        assert!((a - b).abs() < 1e-9 * a, "N={n}");
    }
}

#[test]
fn twin_beam_shapes() {
    let one = twin_beam_bs_mc(&TwinBeamConfig::balanced(1e5, 1), 200_000, 41).unwrap();
    let (s1, c1) = classify_shape(&one.ratio.probs);
    assert_eq!(s1, Shape::UShaped, "{c1}");
    let p = &one.ratio.probs;
    let imax = p.iter().enumerate().fold(0, |b, (i, &v)| if v > p[b] { i } else { b });
    assert!(imax == 0 || imax == p.len() - 1);
    let four = twin_beam_bs_mc(&TwinBeamConfig::balanced(1e5, 4), 200_000, 42).unwrap();
    assert_eq!(classify_shape(&four.ratio.probs).0, Shape::Peaked);
    let three = twin_beam_bs_mc(&TwinBeamConfig::balanced(1e5, 3), 200_000, 43).unwrap();
    assert_eq!(classify_shape(&three.ratio.probs).0, Shape::Peaked);
}

#[test]
fn imbalanced_twin_beams_shrink_the_support() {
    for (ratio, expect_u) in [(5.0, true), (17.0, true)] {
        let mut cfg = TwinBeamConfig::balanced(1e5, 1);
        cfg.loss_i = 1.0 - 1.0 / ratio;
        let r = twin_beam_bs_mc(&cfg, 200_000, 44).unwrap();
        let edge = 2.0 * ratio.sqrt() / (1.0 + ratio);
        let ratios: Vec<f64> = {
            let e = &r.ensemble;
            let (a, b) = (e.channel("N1").unwrap(), e.channel("N2").unwrap());
            a.iter().zip(b).map(|(x, y)| (x - y) / (x + y)).collect()
        };
        let top = ratios.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((top - edge).abs() < 1e-3, "{top} {edge}");
        assert_eq!(classify_shape(&r.ratio.probs).0 == Shape::UShaped, expect_u);
    }
}

#[test]
fn fixed_phase_concentrates_at_cosine() {
    for phi in [0.3f64, 1.2, 2.5] {
        let mut cfg = TwinBeamConfig::balanced(1e5, 3);
        cfg.phase = Some(phi);
        let r = twin_beam_bs_mc(&cfg, 20_000, 45).unwrap();
        let (a, b) = (r.ensemble.channel("N1").unwrap(), r.ensemble.channel("N2").unwrap());
        for (x, y) in a.iter().zip(b) {
            assert!(((x - y) / (x + y) - phi.cos()).abs() < 1e-12);
        }
    }
}

#[test]
fn conservation_holds_without_loss_and_breaks_with_it() {
    let r = twin_beam_bs_mc(&TwinBeamConfig::balanced(1e3, 2), 50_000, 46).unwrap();
    let e = &r.ensemble;
    let pre = (e.channel("Ns").unwrap(), e.channel("Ni").unwrap());
    let post = (e.channel("N1").unwrap(), e.channel("N2").unwrap());
    let c = correlation_conservation_check(pre, post, 1e-3).unwrap();
    assert!(c.relative < 1e-12 && !c.flagged, "{c:?}");
    let mut cfg = TwinBeamConfig::balanced(1e3, 2);
    cfg.loss_s = 0.3;
    let r = twin_beam_bs_mc(&cfg, 50_000, 47).unwrap();
    let e = &r.ensemble;
    let c = correlation_conservation_check(
        (e.channel("Ns").unwrap(), e.channel("Ni").unwrap()),
        (e.channel("N1").unwrap(), e.channel("N2").unwrap()),
        1e-3,
    )
    .unwrap();
    assert!(c.flagged);
}

#[test]
fn postselection_approaches_coherent_statistics() {
    let e = thermal(1.0).sample(1_000_000, 51).unwrap();
    let v = e.values();
    let all = postselect_pseudocoherent(v, v, f64::INFINITY).unwrap();
    assert_eq!(all.kept, v.len());
    assert_eq!(all.selected, v);
    let mut last = f64::INFINITY;
    for w in [0.5, 0.2, 0.05, 0.01] {
        let s = postselect_pseudocoherent(v, v, w).unwrap();
        let exact = (-(1.0 - w)).exp() - (-(1.0 + w)).exp();
        assert!((s.fraction - exact).abs() < 5.0 * (exact / v.len() as f64).sqrt(), "w={w}");
        assert!(s.residual_g[0] < last);
        last = s.residual_g[0];
    }
    assert!(last < 1.001);
}

#[test]
fn subtraction_boosts_the_mean_by_g2() {
    let t = photon_subtract(&thermal(3.0)).unwrap();
    assert!((t.mean() - 6.0).abs() < 1e-12);
    let s = photon_subtract(&superbunched(3.0)).unwrap();
    assert!((s.mean() - 9.0).abs() < 1e-12);
    let d = PhotonDistribution::Dirac { mean: 3.0 };
    assert_eq!(photon_subtract(&d).unwrap(), d);
    // Pareto-like tail with a thermal-like bulk on log bins
    let edges = log_edges(1.0, 1e6, LOG_BINS_PER_DECADE).unwrap();
    let w: Vec<f64> = edges
        .windows(2)
        .map(|e| {
            let c = (e[0] * e[1]).sqrt();
            (e[1] - e[0]) * c.powf(-1.5) * (1.0 + (-c / 10.0).exp())
        })
        .collect();
    let h = Histogram::new(edges, w).unwrap();
    let before = PhotonDistribution::Empirical(h.clone());
    let after = photon_subtract(&before).unwrap();
    // direct summation over bins
    let (mut s1, mut s2) = (0.0, 0.0);
    for (p, e) in h.probs.iter().zip(h.edges.windows(2)) {
        s1 += p * 0.5 * (e[0] + e[1]);
        s2 += p * (e[0] * e[0] + e[0] * e[1] + e[1] * e[1]) / 3.0;
    }
    assert!((after.mean() / (s2 / s1) - 1.0).abs() < 1e-3);
    assert!(after.mean() / before.mean() > 100.0, "{}", after.mean() / before.mean());
}

#[test]
fn detector_noise() {
    let d = thermal(5000.0);
    let edges = linear_edges(-20_000.0, 100_000.0, 600).unwrap();
    let clean = detector_noise_convolve(&d, 0.0, edges.clone()).unwrap();
    for (p, e) in clean.probs.iter().zip(clean.edges.windows(2)) {
        let exact = (d.cdf(e[1]) - d.cdf(e[0])) / covered_mass(&d, -20_000.0, 100_000.0);
        assert!((p - exact).abs() < 1e-12);
    }
    let noisy = detector_noise_convolve(&d, 1600.0, edges).unwrap();
    assert!(noisy.cdf(0.0) > 0.01);
    let var = noisy.moment(2) - noisy.moment(1).powi(2);
    let expect = d.variance() + 1600f64.powi(2);
    assert!((noisy.moment(1) / 5000.0 - 1.0).abs() < 1e-3);
    assert!((var / expect - 1.0).abs() < 2e-3, "{var} {expect}");
    let sb = detector_noise_convolve(&superbunched(5000.0), 1600.0, linear_edges(-20_000.0, 150_000.0, 400).unwrap())
        .unwrap();
    assert!((sb.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn matched_superbunched_pump() {
    for (n, target) in [(2u32, 2.94), (3, 14.5), (4, 63.0)] {
        let d = superbunched_matching_g(1.0, n, target).unwrap();
        assert!((d.g(n) - target).abs() < 1e-9);
    }
    assert!(superbunched_matching_g(1.0, 2, 3.5).is_err());
}

#[test]
fn sampling_is_thread_independent() {
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| superbunched(2.0).sample(10_000, 9).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn histogram_binning() {
    let e = log_edges(1.0, 1000.0, 40).unwrap();
    assert_eq!(e.len(), 121);
    assert!((e[40] - 10.0).abs() < 1e-12);
    let h = Histogram::from_samples(&[0.5, 1.5, 1.5, 2.5], linear_edges(0.0, 3.0, 3).unwrap()).unwrap();
    assert_eq!(h.probs, vec![0.25, 0.5, 0.25]);
    assert!(Histogram::new(vec![0.0, 1.0], vec![0.0]).is_err());
}
