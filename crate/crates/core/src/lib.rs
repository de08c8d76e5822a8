//! Two-photon interference at a lossless Fabry-Perot cavity.
//!
//! Phases are `x = ω·t₀`, with `t₀ = L/c` the single-pass transit time.
//!
//! - [`cavity`]: closed-form transmission and reflection coefficients.
//! - [`antibunching`]: coincidence amplitudes, zero-coincidence curves and
//!   the SPDC phase-matching solver.
//! - [`wavepacket`]: coincidence densities for finite-bandwidth photons.
//! - [`oracle`]: independent brute-force checks of the above.

pub mod antibunching;
pub mod cavity;
pub mod error;
pub mod grid;
pub mod oracle;
pub mod wavepacket;

pub use antibunching::{
    coefficients_at_zero, epsilon_threshold, hom_amplitude_degenerate, hom_amplitude_two_color,
    solve_degenerate_zero, solve_spdc, sweep_degenerate, sweep_two_color, HomResult, SpdcSolution,
    SweepGrid, SweepPoint,
};
pub use cavity::{
    finesse, fp_reflection, fp_transmission, mirror_coefficients, reflection_probability,
    transmission_probability, CavityGeometry, FpCoefficients, MirrorSpec,
};
pub use error::{Error, Result};
pub use grid::{linspace, UniformGrid};
pub use wavepacket::{
    filtered_envelope, g2_general, g2_separable, g2_time_integrated, make_gaussian,
    BiphotonAmplitude, Channel, G2Surface, JointSpectrum, PhotonLabel, SpectralAmplitude,
    TemporalEnvelope,
};
