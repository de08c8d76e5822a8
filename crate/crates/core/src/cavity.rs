//! Closed-form Fabry-Perot coefficients.
//!
//! Each mirror is a lossless beam splitter with real transmissivity `T = ε`
//! and purely imaginary reflectivity `R = i√(1−ε²)`. The cavity as a whole
//! acts as a beam splitter whose coefficients depend on the round-trip phase
//! through `x = ω·t₀`:
//!
//! ```text
//! T_fp(x) = T² e^{ix} / (1 − R² e^{i2x})
//! R_fp(x) = R (1 + e^{i2x}) / (1 − R² e^{i2x})
//! ```
//!
//! Factoring `e^{ix}` out of the denominator gives
//! `1 − R² e^{i2x} = e^{ix}(2 cos x − ε² e^{ix})`, which is what the code
//! evaluates. It avoids the cancellation in `1 + (1−ε²)e^{i2x}` near
//! resonance, where the denominator shrinks to `ε²`.
//!
//! The finesse used here is `F = 2√(1−ε²)/ε²`, the parameter that appears in
//! `|T_fp|² = 1/(1 + F² cos² x)`. It is not the spectroscopic finesse
//! `π√R/(1−R)`.

use num_complex::Complex64;

use crate::error::{check_finite, Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Identical, lossless, dispersion-free cavity mirrors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MirrorSpec {
    epsilon: f64,
}

impl MirrorSpec {
    /// Mirror with amplitude transmissivity `epsilon` in `[0, 1]`.
    pub fn new(epsilon: f64) -> Result<Self> {
        check_finite("epsilon", epsilon)?;
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::Domain {
                name: "epsilon",
                value: epsilon,
                reason: "mirror transmissivity must lie in [0, 1]",
            });
        }
        Ok(Self { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `1 − ε²`, evaluated as `(1−ε)(1+ε)`.
    pub fn reflectance(&self) -> f64 {
        (1.0 - self.epsilon) * (1.0 + self.epsilon)
    }
}

/// One-way traversal time `t₀ = L/c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityGeometry {
    t0: f64,
}

impl CavityGeometry {
    pub fn new(t0: f64) -> Result<Self> {
        check_finite("t0", t0)?;
        if t0 <= 0.0 {
            return Err(Error::Domain {
                name: "t0",
                value: t0,
                reason: "traversal time must be positive",
            });
        }
        Ok(Self { t0 })
    }

    /// Geometry of a vacuum-filled cavity with mirror spacing `length` metres.
    pub fn from_length(length: f64) -> Result<Self> {
        check_finite("length", length)?;
        if length <= 0.0 {
            return Err(Error::Domain {
                name: "length",
                value: length,
                reason: "mirror spacing must be positive",
            });
        }
        Self::new(length / SPEED_OF_LIGHT)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// Phase `x = ω t₀` for an angular frequency in rad/s.
    pub fn phase(&self, angular_frequency: f64) -> f64 {
        angular_frequency * self.t0
    }

    pub fn angular_frequency(&self, phase: f64) -> f64 {
        phase / self.t0
    }

    /// Seconds to multiples of `t₀`.
    pub fn to_units(&self, seconds: f64) -> f64 {
        seconds / self.t0
    }

    pub fn to_seconds(&self, units: f64) -> f64 {
        units * self.t0
    }
}

/// Cavity transmission and reflection amplitudes at one phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FpCoefficients {
    pub x: f64,
    pub t_fp: Complex64,
    pub r_fp: Complex64,
}

impl FpCoefficients {
    pub fn new(x: f64, spec: &MirrorSpec) -> Result<Self> {
        check_finite("x", x)?;
        Ok(coefficients(x, spec))
    }

    /// `| |T_fp|² + |R_fp|² − 1 |`
    pub fn unitarity_deviation(&self) -> f64 {
        (self.t_fp.norm_sqr() + self.r_fp.norm_sqr() - 1.0).abs()
    }

    /// `T_fp R_fp* + T_fp* R_fp`, real by construction.
    pub fn phase_relation(&self) -> f64 {
        2.0 * (self.t_fp * self.r_fp.conj()).re
    }
}

/// Single-mirror `(T, R) = (ε, i√(1−ε²))`.
pub fn mirror_coefficients(spec: &MirrorSpec) -> (Complex64, Complex64) {
    (
        Complex64::new(spec.epsilon, 0.0),
        Complex64::new(0.0, spec.reflectance().sqrt()),
    )
}

/// Both cavity amplitudes; `x` is assumed finite.
pub(crate) fn coefficients(x: f64, spec: &MirrorSpec) -> FpCoefficients {
    let eps = spec.epsilon;
    let (sin_x, cos_x) = x.sin_cos();
    if eps == 0.0 {
        // Perfect mirror: the 0/0 at cos x = 0 is removable.
        return FpCoefficients {
            x,
            t_fp: Complex64::new(0.0, 0.0),
            r_fp: Complex64::new(0.0, 1.0),
        };
    }
    let eps2 = eps * eps;
    let denom = Complex64::new(cos_x * (2.0 - eps2), -eps2 * sin_x);
    let t_fp = Complex64::new(eps2, 0.0) / denom;
    let r_fp = Complex64::new(0.0, 2.0 * spec.reflectance().sqrt() * cos_x) / denom;
    FpCoefficients { x, t_fp, r_fp }
}

/// `T_fp(x)`.
pub fn fp_transmission(x: f64, spec: &MirrorSpec) -> Result<Complex64> {
    Ok(FpCoefficients::new(x, spec)?.t_fp)
}

/// `R_fp(x)`.
pub fn fp_reflection(x: f64, spec: &MirrorSpec) -> Result<Complex64> {
    Ok(FpCoefficients::new(x, spec)?.r_fp)
}

/// `F = 2√(1−ε²)/ε²`; diverges for the perfect mirror.
pub fn finesse(spec: &MirrorSpec) -> Result<f64> {
    let eps = spec.epsilon;
    if eps == 0.0 {
        return Err(Error::Domain {
            name: "epsilon",
            value: eps,
            reason: "finesse diverges for a perfect mirror",
        });
    }
    Ok(2.0 * spec.reflectance().sqrt() / (eps * eps))
}

/// `|T_fp(x)|² = 1/(1 + F² cos² x)`.
///
/// For `ε = 0` this is 0 everywhere, including at `cos x = 0`.
pub fn transmission_probability(x: f64, spec: &MirrorSpec) -> Result<f64> {
    check_finite("x", x)?;
    if spec.epsilon == 0.0 {
        return Ok(0.0);
    }
    let f_cos = finesse(spec)? * x.cos();
    Ok(1.0 / (1.0 + f_cos * f_cos))
}

/// `|R_fp(x)|² = F² cos² x/(1 + F² cos² x)`; 1 everywhere for `ε = 0`.
pub fn reflection_probability(x: f64, spec: &MirrorSpec) -> Result<f64> {
    check_finite("x", x)?;
    if spec.epsilon == 0.0 {
        return Ok(1.0);
    }
    let f_cos = finesse(spec)? * x.cos();
    let f2c2 = f_cos * f_cos;
    if f2c2.is_infinite() {
        return Ok(1.0);
    }
    Ok(f2c2 / (1.0 + f2c2))
}
