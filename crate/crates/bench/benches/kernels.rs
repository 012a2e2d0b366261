use bsv_core::spectrum::{phase_matching_angle, spectrum_qomega};
use bsv_core::stats::{estimate_g_orders, Convention};
use bsv_core::tails::{pareto_mle, pushforward_pdf, sample_pareto, tail_report};
use bsv_core::{coherence, CrystalConfig, Interaction, Material, PhotonDistribution, ProcessMap, SpectralGrid};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn bbo(gain: f64) -> CrystalConfig {
    let m = Material::bbo();
    let phi = phase_matching_angle(&m, Interaction::TypeI, 354.7).unwrap();
    CrystalConfig::new(m, 2.0, phi, Interaction::TypeI, 354.7, gain).unwrap()
}

fn spectrum(c: &mut Criterion) {
    let cfg = bbo(3.0);
    let mut g = c.benchmark_group("spectrum_qomega");
    for n in [65usize, 129, 257] {
        let grid = SpectralGrid::symmetric(n, 0.3, n, 0.6).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &grid, |b, grid| {
            b.iter(|| spectrum_qomega(&cfg, black_box(grid)).unwrap())
        });
    }
    g.finish();
}

fn correlations(c: &mut Criterion) {
    let cfg = bbo(3.0);
    let grid = SpectralGrid::symmetric(128, 0.3, 128, 0.6).unwrap();
    let f = coherence::spectral_amplitude(&cfg, &grid).unwrap();
    c.bench_function("g2_map_128", |b| b.iter(|| coherence::g2_map(black_box(&f)).unwrap()));
}

fn moments(c: &mut Criterion) {
    let values = PhotonDistribution::Thermal { mean: 10.0 }.sample(200_000, 1).unwrap();
    let v = values.channel("N").unwrap().to_vec();
    c.bench_function("estimate_g_orders_2e5", |b| {
        b.iter(|| estimate_g_orders(black_box(&v), &[2, 3, 4], Convention::ClassicalMoments, 50, 3).unwrap())
    });
}

fn tails(c: &mut Criterion) {
    let s = sample_pareto(0.5, 1.0, 1_000_000, 2).unwrap();
    c.bench_function("pareto_mle_1e6", |b| b.iter(|| pareto_mle(black_box(&s), 1.0).unwrap()));
    let small = sample_pareto(1.5, 1.0, 100_000, 2).unwrap();
    c.bench_function("tail_report_1e5", |b| b.iter(|| tail_report(black_box(&small), None, None).unwrap()));
    let pump = PhotonDistribution::Thermal { mean: 1.0 };
    c.bench_function("pushforward_harmonic", |b| {
        b.iter(|| pushforward_pdf(black_box(&pump), ProcessMap::PowerLawHarmonic { n: 2, k_eff: 1.0 }).unwrap())
    });
}

criterion_group!(benches, spectrum, correlations, moments, tails);
criterion_main!(benches);
