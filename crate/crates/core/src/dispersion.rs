//! Refractive indices, wavevectors, group velocity, GVD and walk-off for
//! uniaxial crystals.
//!
//! Wavelengths are in nm at the API boundary and in µm inside. Angles are in
//! radians. Times are in fs.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots;

/// Speed of light in µm/fs.
pub const C_UM_PER_FS: f64 = 0.299_792_458;

const BUILTIN: &str = include_str!("../data/materials.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Polarization {
    #[serde(rename = "o")]
    Ordinary,
    #[serde(rename = "e")]
    Extraordinary,
}

/// Built-in crystals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaterialId {
    #[serde(rename = "BBO")]
    Bbo,
    #[serde(rename = "LiNbO3_MgO5")]
    LiNbO3MgO5,
}

impl MaterialId {
    pub fn key(self) -> &'static str {
        match self {
            MaterialId::Bbo => "BBO",
            MaterialId::LiNbO3MgO5 => "LiNbO3_MgO5",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bbo" => Ok(MaterialId::Bbo),
            "linbo3_mgo5" | "linbo3" | "mgo:linbo3" => Ok(MaterialId::LiNbO3MgO5),
            _ => Err(Error::Parse(format!("unknown material `{s}`"))),
        }
    }

    pub fn load(self) -> Material {
        parse_materials(BUILTIN)
            .expect("built-in material table parses")
            .into_iter()
            .find(|m| m.name == self.key())
            .expect("built-in material present")
    }
}

/// One polarization's Sellmeier set, squared index
/// `const + Σ B/(λ²−C) + Σ Bλ²/(λ²−C) + quad·λ²` with λ in µm.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Sellmeier {
    pub constant: f64,
    pub poles: Vec<(f64, f64)>,
    pub lorentz: Vec<(f64, f64)>,
    pub quad: f64,
}

impl Sellmeier {
    /// n² and its first two λ-derivatives.
    fn eval(&self, l: f64) -> (f64, f64, f64) {
        let x = l * l;
        let mut f = self.constant + self.quad * x;
        let mut d1 = 2.0 * self.quad * l;
        let mut d2 = 2.0 * self.quad;
        // Bλ²/(λ²−C) = B + BC/(λ²−C)
        let terms = self
            .poles
            .iter()
            .copied()
            .chain(self.lorentz.iter().map(|&(b, c)| (b * c, c)));
        for (b, c) in terms {
            let r = 1.0 / (x - c);
            f += b * r;
            d1 += -2.0 * b * l * r * r;
            d2 += -2.0 * b * r * r + 8.0 * b * x * r * r * r;
        }
        f += self.lorentz.iter().map(|&(b, _)| b).sum::<f64>();
        (f, d1, d2)
    }
}

/// A uniaxial crystal with its dispersion data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub name: String,
    pub source: String,
    pub version: u32,
    /// Transparency window in µm.
    pub window_um: (f64, f64),
    pub sellmeier_o: Sellmeier,
    pub sellmeier_e: Sellmeier,
}

/// Index and its wavelength derivatives (per µm).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexDerivs {
    pub n: f64,
    pub dn: f64,
    pub d2n: f64,
}

impl Material {
    pub fn bbo() -> Self {
        MaterialId::Bbo.load()
    }

    pub fn linbo3_mgo5() -> Self {
        MaterialId::LiNbO3MgO5.load()
    }

    pub fn from_file(path: &Path) -> Result<Vec<Material>> {
        parse_materials(&std::fs::read_to_string(path)?)
    }

    pub fn in_window(&self, lambda_um: f64) -> bool {
        lambda_um >= self.window_um.0 && lambda_um <= self.window_um.1
    }

    pub fn check_window(&self, lambda_um: f64) -> Result<()> {
        if self.in_window(lambda_um) {
            Ok(())
        } else {
            Err(Error::OutOfWindow {
                wavelength_nm: lambda_um * 1e3,
                lo_nm: self.window_um.0 * 1e3,
                hi_nm: self.window_um.1 * 1e3,
            })
        }
    }

    fn principal(&self, pol: Polarization, l: f64) -> IndexDerivs {
        let s = match pol {
            Polarization::Ordinary => &self.sellmeier_o,
            Polarization::Extraordinary => &self.sellmeier_e,
        };
        let (f, f1, f2) = s.eval(l);
        let n = f.sqrt();
        let dn = f1 / (2.0 * n);
        let d2n = (0.5 * f2 - dn * dn) / n;
        IndexDerivs { n, dn, d2n }
    }

    /// Index with λ-derivatives at wavelength `l` (µm) and angle `theta` to
    /// the optic axis. No window check; `theta` may be any real angle.
    pub fn index_derivs(&self, pol: Polarization, l: f64, theta: f64) -> IndexDerivs {
        let o = self.principal(Polarization::Ordinary, l);
        if pol == Polarization::Ordinary {
            return o;
        }
        let e = self.principal(Polarization::Extraordinary, l);
        let (s2, c2) = (theta.sin().powi(2), theta.cos().powi(2));
        // u = cos²/n_o² + sin²/n_e², n = u^{-1/2}
        let inv = |p: IndexDerivs| {
            let a = 1.0 / (p.n * p.n);
            let a1 = -2.0 * p.dn / p.n.powi(3);
            let a2 = -2.0 * p.d2n / p.n.powi(3) + 6.0 * p.dn * p.dn / p.n.powi(4);
            (a, a1, a2)
        };
        let (a, a1, a2) = inv(o);
        let (b, b1, b2) = inv(e);
        let u = c2 * a + s2 * b;
        let u1 = c2 * a1 + s2 * b1;
        let u2 = c2 * a2 + s2 * b2;
        let n = u.powf(-0.5);
        let dn = -0.5 * u.powf(-1.5) * u1;
        let d2n = 0.75 * u.powf(-2.5) * u1 * u1 - 0.5 * u.powf(-1.5) * u2;
        IndexDerivs { n, dn, d2n }
    }

    pub fn n(&self, pol: Polarization, l: f64, theta: f64) -> f64 {
        self.index_derivs(pol, l, theta).n
    }

    /// k(ω) in rad/µm for angular frequency ω in rad/fs.
    pub fn k_of_omega(&self, pol: Polarization, omega: f64, theta: f64) -> f64 {
        let l = 2.0 * PI * C_UM_PER_FS / omega;
        self.n(pol, l, theta) * omega / C_UM_PER_FS
    }

    /// Walk-off angle on the extended angle domain; zero for ordinary waves.
    pub fn walkoff_theta(&self, pol: Polarization, l: f64, theta: f64) -> f64 {
        if pol == Polarization::Ordinary {
            return 0.0;
        }
        let no = self.principal(Polarization::Ordinary, l).n;
        let ne = self.principal(Polarization::Extraordinary, l).n;
        let n = self.n(pol, l, theta);
        0.5 * n * n * (2.0 * theta).sin() * (1.0 / (ne * ne) - 1.0 / (no * no))
    }
}

/// A monochromatic plane wave inside the crystal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveSpec {
    /// Vacuum wavelength in nm.
    pub wavelength_nm: f64,
    pub polarization: Polarization,
    /// Angle between wave vector and optic axis (rad).
    pub theta: f64,
}

impl WaveSpec {
    pub fn new(wavelength_nm: f64, polarization: Polarization, theta: f64) -> Result<Self> {
        if !(0.0..=PI / 2.0 + 1e-12).contains(&theta) {
            return Err(Error::invalid("theta_to_axis", format!("{theta} rad not in [0, π/2]")));
        }
        if !(wavelength_nm > 0.0) {
            return Err(Error::invalid("wavelength", "must be positive"));
        }
        Ok(Self {
            wavelength_nm,
            polarization,
            theta,
        })
    }

    pub fn ordinary(wavelength_nm: f64) -> Self {
        Self {
            wavelength_nm,
            polarization: Polarization::Ordinary,
            theta: 0.0,
        }
    }

    pub fn extraordinary(wavelength_nm: f64, theta: f64) -> Self {
        Self {
            wavelength_nm,
            polarization: Polarization::Extraordinary,
            theta,
        }
    }

    pub fn lambda_um(&self) -> f64 {
        self.wavelength_nm * 1e-3
    }

    pub fn with_wavelength(&self, wavelength_nm: f64) -> Self {
        Self {
            wavelength_nm,
            ..*self
        }
    }
}

fn derivs(m: &Material, w: &WaveSpec) -> Result<IndexDerivs> {
    m.check_window(w.lambda_um())?;
    Ok(m.index_derivs(w.polarization, w.lambda_um(), w.theta))
}

pub fn refractive_index(m: &Material, w: &WaveSpec) -> Result<f64> {
    Ok(derivs(m, w)?.n)
}

/// k = 2πn/λ in rad/µm.
pub fn wavevector(m: &Material, w: &WaveSpec) -> Result<f64> {
    Ok(2.0 * PI * refractive_index(m, w)? / w.lambda_um())
}

/// Group index n − λ dn/dλ.
pub fn group_index(m: &Material, w: &WaveSpec) -> Result<f64> {
    let d = derivs(m, w)?;
    Ok(d.n - w.lambda_um() * d.dn)
}

/// Group velocity in µm/fs.
pub fn group_velocity(m: &Material, w: &WaveSpec) -> Result<f64> {
    Ok(C_UM_PER_FS / group_index(m, w)?)
}

/// ∂²k/∂ω² in fs²/mm.
pub fn gvd(m: &Material, w: &WaveSpec) -> Result<f64> {
    let d = derivs(m, w)?;
    let l = w.lambda_um();
    Ok(l.powi(3) / (2.0 * PI * C_UM_PER_FS * C_UM_PER_FS) * d.d2n * 1e3)
}

/// Zero of the GVD for a polarization at fixed angle, to 0.01 nm.
pub fn zero_gvd_wavelength(m: &Material, pol: Polarization, theta: f64) -> Result<f64> {
    let lo = m.window_um.0 * 1e3 * 1.02;
    let hi = m.window_um.1 * 1e3 * 0.98;
    let f = |nm: f64| {
        gvd(m, &WaveSpec {
            wavelength_nm: nm,
            polarization: pol,
            theta,
        })
        .unwrap_or(f64::NAN)
    };
    roots::first_root(f, lo, hi, 400, 0.01, "group-velocity dispersion")
}

/// Walk-off angle ρ = −(1/n) ∂n/∂θ (rad).
pub fn walkoff_angle(m: &Material, w: &WaveSpec) -> Result<f64> {
    m.check_window(w.lambda_um())?;
    Ok(m.walkoff_theta(w.polarization, w.lambda_um(), w.theta))
}

/// Wavelength (nm) at which a wave of `signal_pol` travelling along the pump
/// direction has the pump's group velocity. The search runs from the pump
/// wavelength up to the window edge.
pub fn group_velocity_match_wavelength(
    m: &Material,
    pump: &WaveSpec,
    signal_pol: Polarization,
) -> Result<f64> {
    let vp = group_velocity(m, pump)?;
    let f = |nm: f64| {
        let w = WaveSpec {
            wavelength_nm: nm,
            polarization: signal_pol,
            theta: pump.theta,
        };
        group_velocity(m, &w).map(|v| v - vp).unwrap_or(f64::NAN)
    };
    let f0 = f(pump.wavelength_nm);
    if f0.abs() < 1e-12 * vp {
        return Ok(pump.wavelength_nm);
    }
    let hi = m.window_um.1 * 1e3 * 0.98;
    let what = match signal_pol {
        Polarization::Ordinary => "ordinary",
        Polarization::Extraordinary => "extraordinary",
    };
    roots::first_root(f, pump.wavelength_nm, hi, 2000, 1e-3, "group velocity")
        .map_err(|_| Error::NoMatch(what))
}

/// Parse the plain-text material table.
pub fn parse_materials(text: &str) -> Result<Vec<Material>> {
    let mut out = Vec::new();
    let mut cur: Option<Material> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: &str| Error::Parse(format!("materials line {}: {msg}", lineno + 1));
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .and_then(|r| r.strip_prefix("material"))
                .map(str::trim)
                .filter(|n| !n.is_empty())
                .ok_or_else(|| err("expected `[material NAME]`"))?;
            if let Some(m) = cur.take() {
                out.push(finish(m)?);
            }
            cur = Some(Material {
                name: name.to_string(),
                source: String::new(),
                version: 0,
                window_um: (0.0, 0.0),
                sellmeier_o: Sellmeier::default(),
                sellmeier_e: Sellmeier::default(),
            });
            continue;
        }
        let m = cur.as_mut().ok_or_else(|| err("key outside a material block"))?;
        let (key, value) = line.split_once('=').ok_or_else(|| err("expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        let nums = || -> Result<Vec<f64>> {
            value
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| err(&format!("bad number `{t}`"))))
                .collect()
        };
        let pair = || -> Result<(f64, f64)> {
            match nums()?.as_slice() {
                [b, c] => Ok((*b, *c)),
                _ => Err(err("expected two numbers")),
            }
        };
        let single = || -> Result<f64> {
            match nums()?.as_slice() {
                [v] => Ok(*v),
                _ => Err(err("expected one number")),
            }
        };
        match key {
            "source" => m.source = value.to_string(),
            "version" => m.version = value.parse().map_err(|_| err("bad version"))?,
            "window_um" => m.window_um = pair()?,
            _ => {
                let (pol, term) = key.split_once('.').ok_or_else(|| err(&format!("unknown key `{key}`")))?;
                let s = match pol {
                    "o" => &mut m.sellmeier_o,
                    "e" => &mut m.sellmeier_e,
                    _ => return Err(err(&format!("unknown polarization `{pol}`"))),
                };
                match term {
                    "const" => s.constant = single()?,
                    "quad" => s.quad = single()?,
                    "pole" => s.poles.push(pair()?),
                    "lorentz" => s.lorentz.push(pair()?),
                    _ => return Err(err(&format!("unknown term `{term}`"))),
                }
            }
        }
    }
    if let Some(m) = cur.take() {
        out.push(finish(m)?);
    }
    Ok(out)
}

fn finish(m: Material) -> Result<Material> {
    let (lo, hi) = m.window_um;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Parse(format!("material {}: missing or empty window", m.name)));
    }
    for i in 0..=20 {
        let l = lo + (hi - lo) * i as f64 / 20.0;
        for pol in [Polarization::Ordinary, Polarization::Extraordinary] {
            let (f, _, _) = match pol {
                Polarization::Ordinary => m.sellmeier_o.eval(l),
                Polarization::Extraordinary => m.sellmeier_e.eval(l),
            };
            if !(f > 1.0) {
                return Err(Error::Parse(format!(
                    "material {}: index not above 1 at {l} µm",
                    m.name
                )));
            }
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_parse() {
        let b = Material::bbo();
        assert_eq!(b.name, "BBO");
        assert!(b.source.contains("Eimerl"));
        let l = Material::linbo3_mgo5();
        assert_eq!(l.sellmeier_e.lorentz.len(), 3);
    }

    #[test]
    fn rejects_bad_blocks() {
        assert!(parse_materials("o.const = 2").is_err());
        assert!(parse_materials("[material X]\nwindow_um = 1 0.5\n").is_err());
        assert!(parse_materials("[material X]\nwindow_um = 0.5 1\no.cnst = 2\n").is_err());
    }

    #[test]
    fn window_enforced() {
        let b = Material::bbo();
        let w = WaveSpec::ordinary(150.0);
        assert!(matches!(refractive_index(&b, &w), Err(Error::OutOfWindow { .. })));
    }
}
