//! Catalog of figure-data recipes. Each recipe is one or more scenario runs
//! with preset keys; user keys and flags still override them.

use serde::Serialize;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Part {
    pub name: &'static str,
    pub scenario: &'static str,
    pub preset: &'static str,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Recipe {
    pub id: &'static str,
    pub description: &'static str,
    /// Figure label the data corresponds to.
    pub figure: &'static str,
    pub parts: &'static [Part],
}

pub const CATALOG: &[Recipe] = &[
    Recipe {
        id: "spectrum-xshape",
        description: "S(q, Ω) of collinear degenerate type-I PDC in BBO at low gain and G = 10",
        figure: "3_fig:S_q_w",
        parts: &[Part {
            name: "spectrum",
            scenario: "spectrum",
            preset: r#"
[crystal]
material = "BBO"
length_mm = 10.0
pump_nm = 400.0
[grid]
n_q = 241
q_max = 0.12
n_omega = 241
omega_max = 0.5
[spectrum]
gains = [0.001, 10.0]
"#,
        }],
    },
    Recipe {
        id: "correlation-xshape",
        description: "|G1(ξ, τ)| and G2(ξ, τ) of the low-gain X-shaped spectrum",
        figure: "3_fig:G1_G2_x_t",
        parts: &[Part {
            name: "coherence",
            scenario: "coherence",
            preset: r#"
[crystal]
material = "BBO"
length_mm = 10.0
pump_nm = 400.0
gain = 0.001
[grid]
n_q = 256
q_max = 0.12
n_omega = 256
omega_max = 0.5
[coherence]
order = "both"
xi_max_um = 150.0
tau_max_fs = 120.0
"#,
        }],
    },
    Recipe {
        id: "tuning-curves",
        description: "Angle-wavelength tuning curves of BBO pumped at 400 nm for five orientations",
        figure: "3_fig:tuning_curves",
        parts: &[Part {
            name: "tuning",
            scenario: "tuning",
            preset: r#"
[crystal]
material = "BBO"
length_mm = 10.0
pump_nm = 400.0
[grid]
n_q = 161
q_max = 0.6
n_omega = 161
omega_max = 0.8
[tuning]
phi_deg = [28.0, 28.6, 29.18, 29.8, 30.5]
"#,
        }],
    },
    Recipe {
        id: "jsi",
        description: "Marginal and conditional JSI cuts, K and R for 2 mm BBO pumped by 5 ps pulses at 354.7 nm",
        figure: "3_fig:JSA",
        parts: &[Part {
            name: "schmidt",
            scenario: "schmidt",
            preset: r#"
[crystal]
material = "BBO"
length_mm = 2.0
pump_nm = 354.7
gain = 0.001
pump_duration_ps = 5.0
[schmidt]
method = "banded"
omega_max = 0.4
n = 4001
"#,
        }],
    },
    Recipe {
        id: "ring-spectrum",
        description: "Ring-shaped S(q, Ω) and |G1(ξ, τ)| of 10 mm BBO pumped at 800 nm, φ = 19.98°",
        figure: "3_fig:O_S_G1",
        parts: &[Part {
            name: "coherence",
            scenario: "coherence",
            preset: r#"
[crystal]
material = "BBO"
length_mm = 10.0
pump_nm = 800.0
phi_deg = 19.98
gain = 0.001
[grid]
n_q = 256
q_max = 0.3
n_omega = 256
omega_max = 0.6
[coherence]
order = "g1"
spectrum = true
xi_max_um = 150.0
tau_max_fs = 60.0
"#,
        }],
    },
    Recipe {
        id: "ring-g2-phase",
        description: "G2(ξ, τ) of the ring spectrum after an l = 2 azimuthal phase, with ridge fit",
        figure: "3_fig:O_S_G2_phase",
        parts: &[Part {
            name: "coherence",
            scenario: "coherence",
            preset: r#"
[crystal]
material = "BBO"
length_mm = 10.0
pump_nm = 800.0
phi_deg = 19.98
gain = 0.001
[grid]
n_q = 512
q_max = 0.3
n_omega = 512
omega_max = 0.6
[coherence]
order = "g2"
azimuthal_l = 2
ring_fit = true
xi_max_um = 100.0
tau_max_fs = 40.0
"#,
        }],
    },
    Recipe {
        id: "gain-fit",
        description: "Fit of I = I0 sinh²(B√P) to synthetic power-intensity data",
        figure: "3_fig:gain_dependence",
        parts: &[Part {
            name: "gainfit",
            scenario: "gainfit",
            preset: r#"
[run]
seed = 3
[gainfit]
i0 = 1.0
b = 1.0
p_max = 42.0
points = 24
noise = 0.03
"#,
        }],
    },
    Recipe {
        id: "broadening",
        description: "Collinear spectral width versus parametric gain for 2 mm BBO at 354.7 nm",
        figure: "3_fig:width_vs_gain",
        parts: &[Part {
            name: "spectrum",
            scenario: "spectrum",
            preset: r#"
[crystal]
material = "BBO"
length_mm = 2.0
pump_nm = 354.7
[spectrum]
gains = [0.000001, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 3.9, 4.5, 5.0, 5.5, 6.0, 6.5, 7.0]
maps = false
width_curve = true
width_omega_max = 1.2
width_points = 6001
"#,
        }],
    },
    Recipe {
        id: "broadening-spectra",
        description: "Collinear spectra S(Ω) at G = 3.9 and 6.5 for 2 mm BBO at 354.7 nm",
        figure: "3_fig:broadening_spectrums",
        parts: &[Part {
            name: "spectrum",
            scenario: "spectrum",
            preset: r#"
[crystal]
material = "BBO"
length_mm = 2.0
pump_nm = 354.7
[grid]
n_q = 3
q_max = 0.01
n_omega = 1201
omega_max = 0.6
[spectrum]
gains = [3.9, 6.5]
maps = false
cut_q0 = true
"#,
        }],
    },
    Recipe {
        id: "homdip-typeI",
        description: "HOM dip in g2_12 versus delay for type-I BBO at G = 0.001, 1.5 and 10",
        figure: "4_fig:g2_type_I",
        parts: &[Part {
            name: "hom",
            scenario: "hom",
            preset: r#"
[crystal]
material = "BBO"
length_mm = 10.0
pump_nm = 400.0
pump_duration_ps = 1000.0
[hom]
gains = [0.001, 1.5, 10.0]
window_fs = 1000.0
curves = "g2"
"#,
        }],
    },
    Recipe {
        id: "nrf-typeI",
        description: "HOM peak in Var(N-)/<N+> versus delay for type-I BBO at G = 0.001, 1.5 and 10",
        figure: "4_fig:NRF_type_I",
        parts: &[Part {
            name: "hom",
            scenario: "hom",
            preset: r#"
[crystal]
material = "BBO"
length_mm = 10.0
pump_nm = 400.0
pump_duration_ps = 1000.0
[hom]
gains = [0.001, 1.5, 10.0]
window_fs = 1000.0
curves = "nrf"
"#,
        }],
    },
    Recipe {
        id: "fock-interference",
        description: "P(N1) behind a balanced splitter for Fock inputs |N>|N> with N = 1, 20, 500",
        figure: "4_fig:Fock_states_interf",
        parts: &[Part {
            name: "stats",
            scenario: "stats",
            preset: r#"
[stats]
experiment = "fock_bs"
photons = [1, 20, 500]
"#,
        }],
    },
    Recipe {
        id: "ushape",
        description: "P(N1) and P(N-/N+) of twin beams mixed on a splitter, M = 1 and 2",
        figure: "4_fig:4_P_N_exp_M_1_2",
        parts: &[Part {
            name: "stats",
            scenario: "stats",
            preset: r#"
[run]
seed = 41
[stats]
experiment = "twin_beam"
mean = 250000.0
modes = [1, 2]
n = 200000
"#,
        }],
    },
    Recipe {
        id: "ushape-multimode",
        description: "P(N-/N+) of twin beams mixed on a splitter, M = 3 and 4",
        figure: "4_fig:4_P_N_exp_M_3_4",
        parts: &[Part {
            name: "stats",
            scenario: "stats",
            preset: r#"
[run]
seed = 43
[stats]
experiment = "twin_beam"
mean = 250000.0
modes = [3, 4]
n = 200000
"#,
        }],
    },
    Recipe {
        id: "g-vs-order",
        description: "g(n) versus n for coherent, thermal and superbunched light",
        figure: "5_fig:g_n",
        parts: &[Part {
            name: "stats",
            scenario: "stats",
            preset: r#"
[stats]
experiment = "gn_table"
max_order = 8
"#,
        }],
    },
    Recipe {
        id: "photon-distributions",
        description: "Sampled and analytic photon-number distributions of thermal and superbunched light",
        figure: "5_fig:P_th_sb_log",
        parts: &[
            Part {
                name: "thermal",
                scenario: "stats",
                preset: r#"
[run]
seed = 51
[stats]
dist = "thermal"
mean = 1000.0
n = 1000000
"#,
            },
            Part {
                name: "superbunched",
                scenario: "stats",
                preset: r#"
[run]
seed = 52
[stats]
dist = "superbunched"
mean = 1000.0
n = 1000000
"#,
            },
        ],
    },
    Recipe {
        id: "tail-index",
        description: "Hazard ratio H(N)/N for thermal and superbunched light and their second and third harmonics",
        figure: "5_fig:tail_index",
        parts: &[
            Part {
                name: "th",
                scenario: "tails",
                preset: "[run]\nseed = 61\n[tails]\npump = \"thermal\"\nprocess = \"harmonic\"\norder = 1\nsamples = 1000000\n",
            },
            Part {
                name: "sb",
                scenario: "tails",
                preset: "[run]\nseed = 62\n[tails]\npump = \"superbunched\"\nprocess = \"harmonic\"\norder = 1\nsamples = 1000000\n",
            },
            Part {
                name: "sh_sb",
                scenario: "tails",
                preset: "[run]\nseed = 63\n[tails]\npump = \"superbunched\"\nprocess = \"harmonic\"\norder = 2\nsamples = 1000000\n",
            },
            Part {
                name: "th_sb",
                scenario: "tails",
                preset: "[run]\nseed = 64\n[tails]\npump = \"superbunched\"\nprocess = \"harmonic\"\norder = 3\nsamples = 1000000\n",
            },
        ],
    },
    Recipe {
        id: "harmonic-ccdf",
        description: "CCDFs of the second harmonic of thermal and superbunched light and the third harmonic of superbunched light",
        figure: "5_fig:CCDF_nw",
        parts: &[
            Part {
                name: "sh_th",
                scenario: "tails",
                preset: "[run]\nseed = 71\n[tails]\npump = \"thermal\"\nprocess = \"harmonic\"\norder = 2\nsamples = 1000000\n",
            },
            Part {
                name: "sh_sb",
                scenario: "tails",
                preset: "[run]\nseed = 72\n[tails]\npump = \"superbunched\"\nprocess = \"harmonic\"\norder = 2\nsamples = 1000000\n",
            },
            Part {
                name: "th_sb",
                scenario: "tails",
                preset: "[run]\nseed = 73\n[tails]\npump = \"superbunched\"\nprocess = \"harmonic\"\norder = 3\nsamples = 1000000\n",
            },
        ],
    },
    Recipe {
        id: "fwm-tails",
        description: "Photon-number tails of four-wave mixing pumped by thermal and superbunched light",
        figure: "5_fig:P_FWM",
        parts: &[
            Part {
                name: "th",
                scenario: "tails",
                preset: "[run]\nseed = 81\n[tails]\npump = \"thermal\"\nprocess = \"fwm\"\nkappa = 1.0\npump_mean = 1.0\nsamples = 1000000\n",
            },
            Part {
                name: "sb",
                scenario: "tails",
                preset: "[run]\nseed = 82\n[tails]\npump = \"superbunched\"\nprocess = \"fwm\"\nkappa = 1.0\npump_mean = 1.0\nsamples = 1000000\n",
            },
        ],
    },
];

pub fn find(id: &str) -> Option<&'static Recipe> {
    CATALOG.iter().find(|r| r.id == id)
}
