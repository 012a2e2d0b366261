//! Spectra, correlations, mode structure, interference and photon statistics
//! of high-gain parametric down-conversion, plus the heavy-tailed statistics
//! of nonlinear processes pumped by bright squeezed vacuum.
//!
//! Units: µm, fs, rad/µm, rad/fs inside; nm and degrees only at the edges.

pub mod coherence;
pub mod dispersion;
pub mod error;
pub mod hom;
pub mod io;
pub mod profile;
pub mod quad;
pub mod rng;
pub mod roots;
pub mod schmidt;
pub mod special;
pub mod spectrum;
pub mod stats;
pub mod tails;

pub use dispersion::{Material, MaterialId, Polarization, WaveSpec, C_UM_PER_FS};
pub use error::{Error, Result};
pub use spectrum::{CrystalConfig, Interaction, SpectralGrid, Spectrum2D};
pub use coherence::{CorrelationMap, RingFit, SpectralAmplitude};
pub use schmidt::{JointAmplitude, SchmidtDecomposition};
pub use hom::{HomConfig, HomCurve, ModeCounts};
pub use stats::{CfEstimate, Histogram, PhotonDistribution, PulseEnsemble};
pub use tails::{ProcessMap, PumpKind, TailReport};
