use std::f64::consts::PI;

use bsv_core::dispersion::*;
use bsv_core::roots;

const DEG: f64 = PI / 180.0;

fn k_omega(m: &Material, pol: Polarization, theta: f64, omega: f64) -> f64 {
    m.k_of_omega(pol, omega, theta)
}

fn omega_of(nm: f64) -> f64 {
    2.0 * PI * C_UM_PER_FS / (nm * 1e-3)
}

#[test]
fn ordinary_index_ignores_angle() {
    let b = Material::bbo();
    let a = refractive_index(&b, &WaveSpec::new(800.0, Polarization::Ordinary, 0.0).unwrap()).unwrap();
    let c = refractive_index(&b, &WaveSpec::new(800.0, Polarization::Ordinary, PI / 2.0).unwrap()).unwrap();
    assert_eq!(a, c);
}

#[test]
fn extraordinary_on_axis_equals_ordinary() {
    let b = Material::bbo();
    for nm in [300.0, 532.0, 1064.0, 2500.0] {
        let o = refractive_index(&b, &WaveSpec::ordinary(nm)).unwrap();
        let e = refractive_index(&b, &WaveSpec::extraordinary(nm, 0.0)).unwrap();
        assert!((o - e).abs() < 1e-15);
    }
}

#[test]
fn ordinary_index_at_709_matches_hand_evaluation() {
    // 30-digit evaluation of the same Sellmeier polynomial
    let n = refractive_index(&Material::bbo(), &WaveSpec::ordinary(709.3)).unwrap();
    assert!((n - 1.663_676_246_207_227).abs() < 1e-12);
    let k = wavevector(&Material::bbo(), &WaveSpec::ordinary(709.3)).unwrap();
    assert!((k - 14.737_327_147_995_12).abs() < 1e-10);
    assert!((k - 2.0 * PI * n / 0.7093).abs() < 1e-12);
}

#[test]
fn wavevector_is_two_pi_n_over_lambda() {
    let b = Material::bbo();
    let w = WaveSpec::extraordinary(400.0, 29.0 * DEG);
    let n = refractive_index(&b, &w).unwrap();
    assert!((wavevector(&b, &w).unwrap() - 2.0 * PI * n / 0.4).abs() < 1e-12);
}

#[test]
fn group_velocity_matches_central_difference() {
    let b = Material::bbo();
    let ln = Material::linbo3_mgo5();
    let cases = [
        (&b, Polarization::Ordinary, 0.0, 451.7),
        (&b, Polarization::Ordinary, 0.0, 1317.0),
        (&b, Polarization::Extraordinary, 29.18 * DEG, 400.0),
        (&b, Polarization::Extraordinary, 47.0 * DEG, 709.3),
        (&b, Polarization::Extraordinary, 12.0 * DEG, 2210.0),
        (&ln, Polarization::Ordinary, 0.0, 1064.0),
        (&ln, Polarization::Extraordinary, PI / 2.0, 532.0),
        (&ln, Polarization::Extraordinary, 0.7, 3100.0),
        (&b, Polarization::Ordinary, 0.0, 257.0),
        (&ln, Polarization::Ordinary, 0.0, 4200.0),
    ];
    for (m, pol, th, nm) in cases {
        let w = WaveSpec::new(nm, pol, th).unwrap();
        let v = group_velocity(m, &w).unwrap();
        let om = omega_of(nm);
        let h = 1e-4 * om;
        let dk = (k_omega(m, pol, th, om + h) - k_omega(m, pol, th, om - h)) / (2.0 * h);
        assert!((v * dk - 1.0).abs() < 1e-6, "{nm} nm: {v} vs {}", 1.0 / dk);
    }
}

#[test]
fn gvd_matches_central_difference_and_sign() {
    let b = Material::bbo();
    for (nm, frozen) in [(800.0, 74.795_048_378_961), (1600.0, -22.000_009_578_711)] {
        let g = gvd(&b, &WaveSpec::ordinary(nm)).unwrap();
        assert!((g - frozen).abs() < 1e-6 * frozen.abs(), "{nm}: {g}");
        let om = omega_of(nm);
        let h = 2e-3 * om;
        let fd = (k_omega(&b, Polarization::Ordinary, 0.0, om + h) - 2.0 * k_omega(&b, Polarization::Ordinary, 0.0, om)
            + k_omega(&b, Polarization::Ordinary, 0.0, om - h))
            / (h * h)
            * 1e3;
        assert!((g - fd).abs() < 1e-4 * g.abs());
    }
    assert!(gvd(&b, &WaveSpec::ordinary(709.3)).unwrap() > 0.0);
    assert!(gvd(&b, &WaveSpec::ordinary(1600.0)).unwrap() < 0.0);
}

#[test]
fn bbo_zero_gvd_near_1431() {
    let z = zero_gvd_wavelength(&Material::bbo(), Polarization::Ordinary, 0.0).unwrap();
    assert!((z - 1431.0).abs() < 15.0, "{z}");
    let g = |nm: f64| gvd(&Material::bbo(), &WaveSpec::ordinary(nm)).unwrap();
    assert!(g(z - 0.05) * g(z + 0.05) < 0.0);
}

#[test]
fn linbo3_zero_gvd_matches_dense_scan() {
    let m = Material::linbo3_mgo5();
    let z = zero_gvd_wavelength(&m, Polarization::Ordinary, 0.0).unwrap();
    let mut prev = gvd(&m, &WaveSpec::ordinary(1000.0)).unwrap();
    let mut scan = f64::NAN;
    let mut nm = 1000.0;
    while nm < 3000.0 {
        nm += 0.5;
        let g = gvd(&m, &WaveSpec::ordinary(nm)).unwrap();
        if g * prev < 0.0 {
            scan = nm;
            break;
        }
        prev = g;
    }
    assert!((z - scan).abs() <= 0.5, "{z} vs {scan}");
    // independent 30-digit scan with 0.5 nm steps
    assert!((z - 1895.0).abs() <= 0.5);
}

#[test]
fn synthetic_linear_gvd_root() {
    let r = roots::first_root(|l| 3.0 * (l - 1234.5), 500.0, 3000.0, 100, 0.01, "gvd").unwrap();
    assert!((r - 1234.5).abs() < 0.01);
}

#[test]
fn walkoff_basics() {
    let b = Material::bbo();
    assert_eq!(walkoff_angle(&b, &WaveSpec::ordinary(400.0)).unwrap(), 0.0);
    assert!(walkoff_angle(&b, &WaveSpec::extraordinary(400.0, 0.0)).unwrap().abs() < 1e-16);
    assert!(walkoff_angle(&b, &WaveSpec::extraordinary(400.0, PI / 2.0)).unwrap().abs() < 1e-15);
}

#[test]
fn walkoff_matches_angular_finite_difference() {
    let b = Material::bbo();
    let l = 0.3547;
    let th = 32.97 * DEG;
    let rho = walkoff_angle(&b, &WaveSpec::extraordinary(354.7, th)).unwrap();
    let h = 1e-6;
    let n = b.n(Polarization::Extraordinary, l, th);
    let dn = (b.n(Polarization::Extraordinary, l, th + h) - b.n(Polarization::Extraordinary, l, th - h)) / (2.0 * h);
    assert!((rho + dn / n).abs() < 1e-6 * rho.abs());
    assert!(rho > 0.05 && rho < 0.1);
}

#[test]
fn walkoff_mirror_symmetry() {
    let b = Material::bbo();
    for th in [0.1, 0.5, 1.0, 1.4] {
        let a = b.walkoff_theta(Polarization::Extraordinary, 0.8, th);
        let c = b.walkoff_theta(Polarization::Extraordinary, 0.8, PI - th);
        assert!((a + c).abs() < 1e-14);
    }
}

#[test]
fn group_velocity_match_at_37_5_degrees() {
    let b = Material::bbo();
    let pump = WaveSpec::extraordinary(400.0, 37.5 * DEG);
    let l = group_velocity_match_wavelength(&b, &pump, Polarization::Ordinary).unwrap();
    assert!((l - 533.5).abs() < 10.0, "{l}");
}

#[test]
fn group_velocity_crossing_exists_at_29_18() {
    let b = Material::bbo();
    let pump = WaveSpec::extraordinary(400.0, 29.18 * DEG);
    let l = group_velocity_match_wavelength(&b, &pump, Polarization::Ordinary).unwrap();
    assert!(l > 400.0 && l < 1100.0);
    let vp = group_velocity(&b, &pump).unwrap();
    let vs = group_velocity(&b, &WaveSpec::ordinary(l)).unwrap();
    assert!((vp - vs).abs() < 1e-6 * vp);
}

#[test]
fn pump_matches_itself() {
    let b = Material::bbo();
    let pump = WaveSpec::ordinary(800.0);
    let l = group_velocity_match_wavelength(&b, &pump, Polarization::Ordinary).unwrap();
    assert_eq!(l, 800.0);
}

#[test]
fn no_match_is_reported() {
    // the ordinary wave is slower at every longer wavelength
    let b = Material::bbo();
    let pump = WaveSpec::extraordinary(1500.0, PI / 2.0);
    let r = group_velocity_match_wavelength(&b, &pump, Polarization::Ordinary);
    assert!(matches!(r, Err(bsv_core::Error::NoMatch(_))), "{r:?}");
}
