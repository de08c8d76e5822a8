//! Two-photon coincidences for non-monochromatic inputs.
//!
//! Units: frequencies are phases `x = ω t₀` and times are multiples of `t₀`,
//! so `e^{−iωt}` is `e^{−i x t}` throughout.
//!
//! For a joint spectral amplitude `ζ(ω, ω′)`, photon `ω` entering port I and
//! photon `ω′` entering port V, the coincidence density for detection at T
//! at time `t` and at R at time `t′ = t + τ` is `G²(t, t′) = |A(t, t′)|²` with
//!
//! ```text
//! A(t, t′) = (1/2π) ∬ dω dω′ ζ(ω, ω′) [ T_fp(ω) T_fp(ω′) e^{−iωt − iω′t′}
//!                                      + R_fp(ω) R_fp(ω′) e^{−iω′t − iωt′} ]
//! ```
//!
//! When both photons are reflected the V photon reaches T, which is why the
//! second term swaps the detection times. For `ζ = ζ₀(ω) ζ₁(ω′)` this
//! factorizes into filtered envelopes,
//! `G² = |ζ₀ᵀ(t) ζ₁ᵀ(t+τ) + ζ₀ᴿ(t+τ) ζ₁ᴿ(t)|²`.
//!
//! All integrals use the trapezoid rule on uniform grids over a finite
//! window around the packet.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::cavity::{coefficients, MirrorSpec};
use crate::error::{check_finite, Error, Result};
use crate::grid::UniformGrid;

/// Default cap on joint-spectrum samples.
pub const JOINT_GRID_CAP: usize = 4096 * 4096;

/// Packets are sampled over `center ± this many σ`.
pub const GAUSSIAN_HALF_WIDTH_SIGMAS: f64 = 8.0;

/// Narrowest acceptable frequency window, in σ on each side.
pub const GAUSSIAN_MIN_COVERAGE_SIGMAS: f64 = 6.0;

/// Boundary-to-peak ratio above which a time-integrated trace is flagged.
pub const TRUNCATION_WARNING_RATIO: f64 = 1e-6;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhotonLabel {
    /// Factor `ζ₀`, enters port I.
    Signal,
    /// Factor `ζ₁`, enters port V.
    Idler,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    T,
    R,
}

/// Single-photon spectral amplitude sampled on a uniform phase grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralAmplitude {
    grid: UniformGrid,
    values: Vec<Complex64>,
    label: PhotonLabel,
}

impl SpectralAmplitude {
    /// Wraps samples without normalizing them.
    pub fn new(grid: UniformGrid, values: Vec<Complex64>, label: PhotonLabel) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} amplitude samples for a grid of {}",
                values.len(),
                grid.len()
            )));
        }
        if values
            .iter()
            .any(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(Error::InvalidGrid("non-finite amplitude sample".into()));
        }
        Ok(Self {
            grid,
            values,
            label,
        })
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn label(&self) -> PhotonLabel {
        self.label
    }

    /// `Σ w_k |ζ_k|²`
    pub fn norm(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(k, v)| self.grid.weight(k) * v.norm_sqr())
            .sum()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let norm = self.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::NotNormalized { norm });
        }
        let scale = norm.sqrt().recip();
        self.values.iter_mut().for_each(|v| *v *= scale);
        Ok(self)
    }

    /// Multiplies by `e^{iωd}`, which moves the temporal envelope to `t + d`.
    pub fn delayed(mut self, delay: f64) -> Self {
        for (k, v) in self.values.iter_mut().enumerate() {
            *v *= Complex64::from_polar(1.0, self.grid.at(k) * delay);
        }
        self
    }

    pub fn with_label(mut self, label: PhotonLabel) -> Self {
        self.label = label;
        self
    }

    fn check_normalized(&self) -> Result<()> {
        let norm = self.norm();
        if (norm - 1.0).abs() > 1e-8 {
            return Err(Error::NotNormalized { norm });
        }
        Ok(())
    }
}

/// Grid of `points` samples over `center ± 8σ`.
pub fn gaussian_grid(center: f64, sigma: f64, points: usize) -> Result<UniformGrid> {
    UniformGrid::centered(center, GAUSSIAN_HALF_WIDTH_SIGMAS * sigma, points)
}

/// Gaussian packet `ζ(x) ∝ exp(−(x−center)²/(4σ²))`, normalized on `grid`.
///
/// `|ζ|²` has standard deviation `σ`.
pub fn make_gaussian(
    center: f64,
    sigma: f64,
    grid: &UniformGrid,
    label: PhotonLabel,
) -> Result<SpectralAmplitude> {
    check_finite("center", center)?;
    check_finite("sigma", sigma)?;
    if sigma <= 0.0 {
        return Err(Error::Domain {
            name: "sigma",
            value: sigma,
            reason: "packet width must be positive",
        });
    }
    let reach = GAUSSIAN_MIN_COVERAGE_SIGMAS * sigma;
    // a relative slack absorbs rounding in grids built as center ± 6σ
    let slack = 1e-12 * (center.abs() + reach);
    if grid.start() > center - reach + slack || grid.stop() < center + reach - slack {
        return Err(Error::GridTooNarrow {
            start: grid.start(),
            stop: grid.stop(),
            required_sigmas: GAUSSIAN_MIN_COVERAGE_SIGMAS,
        });
    }
    let values = (0..grid.len())
        .map(|k| {
            let d = grid.at(k) - center;
            Complex64::new((-d * d / (4.0 * sigma * sigma)).exp(), 0.0)
        })
        .collect();
    SpectralAmplitude::new(*grid, values, label)?.normalized()
}

/// Temporal envelope `ζ_mᶜ(t)` of one photon after one cavity channel.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalEnvelope {
    pub times: UniformGrid,
    pub values: Vec<Complex64>,
    pub channel: Channel,
    pub label: PhotonLabel,
}

impl TemporalEnvelope {
    /// `Σ w_j |ζ(t_j)|²`
    pub fn energy(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(j, v)| self.times.weight(j) * v.norm_sqr())
            .sum()
    }
}

/// Sampling preconditions for inverse transforms of a spectrum on `freq`
/// evaluated over a time window of `span`.
///
/// The time step must satisfy `Δt ≤ π / max|x|`, and the window must fit
/// inside one period `2π/Δx` of the discretized transform.
fn check_sampling(freq: &UniformGrid, time_step: f64, span: f64) -> Result<()> {
    let nyquist = PI / freq.max_abs();
    if time_step > nyquist * (1.0 + 1e-12) {
        return Err(Error::Aliasing(format!(
            "time step {time_step} exceeds π/max|x| = {nyquist}"
        )));
    }
    let period = 2.0 * PI / freq.step();
    if span > period {
        return Err(Error::Aliasing(format!(
            "time window {span} exceeds the transform period 2π/Δx = {period}"
        )));
    }
    Ok(())
}

/// Integration weights `w_k H(x_k) ζ_k / √(2π)` for one channel.
fn filtered_weights(
    zeta: &SpectralAmplitude,
    channel: Channel,
    spec: &MirrorSpec,
) -> Vec<Complex64> {
    let grid = zeta.grid();
    zeta.values()
        .iter()
        .enumerate()
        .map(|(k, &z)| {
            let c = coefficients(grid.at(k), spec);
            let h = match channel {
                Channel::T => c.t_fp,
                Channel::R => c.r_fp,
            };
            h * z * (grid.weight(k) * INV_SQRT_2PI)
        })
        .collect()
}

fn inverse_transform(
    freq: &UniformGrid,
    weights: &[Complex64],
    times: &UniformGrid,
) -> Vec<Complex64> {
    let xs = freq.values();
    (0..times.len())
        .into_par_iter()
        .map(|j| {
            let t = times.at(j);
            xs.iter()
                .zip(weights)
                .map(|(&x, &w)| w * Complex64::from_polar(1.0, -x * t))
                .sum()
        })
        .collect()
}

/// `ζᶜ(t) = (1/√2π) ∫ dω e^{−iωt} H_c(ω) ζ(ω)` by trapezoid quadrature.
pub fn filtered_envelope(
    zeta: &SpectralAmplitude,
    channel: Channel,
    spec: &MirrorSpec,
    times: &UniformGrid,
) -> Result<TemporalEnvelope> {
    zeta.check_normalized()?;
    check_sampling(zeta.grid(), times.step(), times.stop() - times.start())?;
    let weights = filtered_weights(zeta, channel, spec);
    Ok(TemporalEnvelope {
        times: *times,
        values: inverse_transform(zeta.grid(), &weights, times),
        channel,
        label: zeta.label(),
    })
}

/// `Σ_t (|ζᵀ|² + |ζᴿ|²) Δt` for one photon; one for a lossless cavity.
pub fn envelope_energy(
    zeta: &SpectralAmplitude,
    spec: &MirrorSpec,
    times: &UniformGrid,
) -> Result<f64> {
    let t = filtered_envelope(zeta, Channel::T, spec, times)?;
    let r = filtered_envelope(zeta, Channel::R, spec, times)?;
    Ok(t.energy() + r.energy())
}

/// `G²(t, t+τ)` sampled on `times × taus`.
#[derive(Debug, Clone, PartialEq)]
pub struct G2Surface {
    pub times: UniformGrid,
    pub taus: Vec<f64>,
    /// Row-major over times, one column per τ.
    pub values: Vec<f64>,
}

impl G2Surface {
    pub fn value(&self, j: usize, m: usize) -> f64 {
        self.values[j * self.taus.len() + m]
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

fn check_taus(taus: &[f64]) -> Result<(f64, f64)> {
    if taus.is_empty() {
        return Err(Error::InvalidGrid("no delays requested".into()));
    }
    for &tau in taus {
        check_finite("tau", tau)?;
    }
    let lo = taus.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = taus.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi))
}

/// Integer time-step offsets for every τ, if they all land on the grid.
fn grid_offsets(times: &UniformGrid, taus: &[f64]) -> Option<Vec<i64>> {
    taus.iter()
        .map(|&tau| {
            let n = (tau / times.step()).round();
            ((tau - n * times.step()).abs() <= 1e-9 * times.step()).then_some(n as i64)
        })
        .collect()
}

/// Envelopes of one photon evaluated at `t_j + τ_m` for every `m`, as one
/// vector per τ.
fn shifted_envelopes(
    freq: &UniformGrid,
    weights: &[Complex64],
    times: &UniformGrid,
    taus: &[f64],
) -> Vec<Vec<Complex64>> {
    if let Some(offsets) = grid_offsets(times, taus) {
        let before = offsets
            .iter()
            .copied()
            .min()
            .unwrap_or(0)
            .min(0)
            .unsigned_abs() as usize;
        let after = offsets.iter().copied().max().unwrap_or(0).max(0) as usize;
        let padded = times.padded(before, after);
        let all = inverse_transform(freq, weights, &padded);
        offsets
            .iter()
            .map(|&n| {
                let first = (before as i64 + n) as usize;
                all[first..first + times.len()].to_vec()
            })
            .collect()
    } else {
        taus.iter()
            .map(|&tau| {
                let shifted = UniformGrid::new(times.start() + tau, times.step(), times.len())
                    .expect("shifting a valid grid");
                inverse_transform(freq, weights, &shifted)
            })
            .collect()
    }
}

/// Coincidence surface for an uncorrelated pair `ζ₀(ω) ζ₁(ω′)`.
pub fn g2_separable(
    zeta0: &SpectralAmplitude,
    zeta1: &SpectralAmplitude,
    spec: &MirrorSpec,
    times: &UniformGrid,
    taus: &[f64],
) -> Result<G2Surface> {
    zeta0.check_normalized()?;
    zeta1.check_normalized()?;
    let (lo, hi) = check_taus(taus)?;
    let span = times.stop() - times.start() + (hi.max(0.0) - lo.min(0.0));
    check_sampling(zeta0.grid(), times.step(), span)?;
    check_sampling(zeta1.grid(), times.step(), span)?;

    let w0t = filtered_weights(zeta0, Channel::T, spec);
    let w0r = filtered_weights(zeta0, Channel::R, spec);
    let w1t = filtered_weights(zeta1, Channel::T, spec);
    let w1r = filtered_weights(zeta1, Channel::R, spec);

    // evaluated at t: ζ₀ᵀ, ζ₁ᴿ; evaluated at t + τ: ζ₁ᵀ, ζ₀ᴿ
    let a0t = inverse_transform(zeta0.grid(), &w0t, times);
    let a1r = inverse_transform(zeta1.grid(), &w1r, times);
    let a1t = shifted_envelopes(zeta1.grid(), &w1t, times, taus);
    let a0r = shifted_envelopes(zeta0.grid(), &w0r, times, taus);

    let cols = taus.len();
    let mut values = vec![0.0; times.len() * cols];
    for (j, row) in values.chunks_mut(cols).enumerate() {
        for (m, v) in row.iter_mut().enumerate() {
            *v = (a0t[j] * a1t[m][j] + a0r[m][j] * a1r[j]).norm_sqr();
        }
    }
    Ok(G2Surface {
        times: *times,
        taus: taus.to_vec(),
        values,
    })
}

/// Joint spectral amplitude `ζ(ω, ω′)` on a product grid; `ω` enters port I.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSpectrum {
    grid_s: UniformGrid,
    grid_i: UniformGrid,
    /// Row-major, one row per `ω` sample.
    values: Vec<Complex64>,
}

impl JointSpectrum {
    pub fn from_fn(
        grid_s: UniformGrid,
        grid_i: UniformGrid,
        f: impl Fn(f64, f64) -> Complex64,
    ) -> Result<Self> {
        Self::from_fn_with_cap(grid_s, grid_i, JOINT_GRID_CAP, f)
    }

    pub fn from_fn_with_cap(
        grid_s: UniformGrid,
        grid_i: UniformGrid,
        cap: usize,
        f: impl Fn(f64, f64) -> Complex64,
    ) -> Result<Self> {
        let requested = grid_s.len().saturating_mul(grid_i.len());
        if requested > cap {
            return Err(Error::Resource { requested, cap });
        }
        let mut values = Vec::with_capacity(requested);
        for k in 0..grid_s.len() {
            let w = grid_s.at(k);
            for l in 0..grid_i.len() {
                values.push(f(w, grid_i.at(l)));
            }
        }
        if values
            .iter()
            .any(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(Error::InvalidGrid(
                "non-finite joint amplitude sample".into(),
            ));
        }
        Ok(Self {
            grid_s,
            grid_i,
            values,
        })
    }

    /// Outer product `ζ₀(ω) ζ₁(ω′)`.
    pub fn separable(zeta0: &SpectralAmplitude, zeta1: &SpectralAmplitude) -> Result<Self> {
        let (a, b) = (zeta0.values(), zeta1.values());
        let (gs, gi) = (*zeta0.grid(), *zeta1.grid());
        let requested = a.len().saturating_mul(b.len());
        if requested > JOINT_GRID_CAP {
            return Err(Error::Resource {
                requested,
                cap: JOINT_GRID_CAP,
            });
        }
        let values = a
            .iter()
            .flat_map(|&x| b.iter().map(move |&y| x * y))
            .collect();
        Ok(Self {
            grid_s: gs,
            grid_i: gi,
            values,
        })
    }

    /// Energy-conserving pair: narrow in `ω + ω′` around `x_p`, centred on
    /// `ω = center_s` along the ridge.
    ///
    /// `sigma_sum` and `sigma_diff` are the standard deviations of `|ζ|²`
    /// along `ω + ω′` and `ω − ω′`.
    pub fn spdc_ridge(
        x_p: f64,
        center_s: f64,
        sigma_sum: f64,
        sigma_diff: f64,
        grid_s: UniformGrid,
        grid_i: UniformGrid,
    ) -> Result<Self> {
        for (name, s) in [("sigma_sum", sigma_sum), ("sigma_diff", sigma_diff)] {
            check_finite(name, s)?;
            if s <= 0.0 {
                return Err(Error::Domain {
                    name,
                    value: s,
                    reason: "ridge width must be positive",
                });
            }
        }
        let diff0 = 2.0 * center_s - x_p;
        Self::from_fn(grid_s, grid_i, |w, wp| {
            let s = w + wp - x_p;
            let d = w - wp - diff0;
            let arg =
                -s * s / (4.0 * sigma_sum * sigma_sum) - d * d / (4.0 * sigma_diff * sigma_diff);
            Complex64::new(arg.exp(), 0.0)
        })?
        .normalized()
    }

    /// Multiplies by `e^{iωd_s + iω′d_i}`, moving each photon's envelope
    /// later by its delay.
    pub fn delayed(mut self, delay_s: f64, delay_i: f64) -> Self {
        let cols = self.grid_i.len();
        for (n, v) in self.values.iter_mut().enumerate() {
            let phase = self.grid_s.at(n / cols) * delay_s + self.grid_i.at(n % cols) * delay_i;
            *v *= Complex64::from_polar(1.0, phase);
        }
        self
    }

    pub fn grid_s(&self) -> &UniformGrid {
        &self.grid_s
    }

    pub fn grid_i(&self) -> &UniformGrid {
        &self.grid_i
    }

    pub fn value(&self, k: usize, l: usize) -> Complex64 {
        self.values[k * self.grid_i.len() + l]
    }

    /// `ΣΣ w_k w_l |ζ_kl|²`
    pub fn norm(&self) -> f64 {
        let cols = self.grid_i.len();
        self.values
            .iter()
            .enumerate()
            .map(|(n, v)| {
                self.grid_s.weight(n / cols) * self.grid_i.weight(n % cols) * v.norm_sqr()
            })
            .sum()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let norm = self.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::NotNormalized { norm });
        }
        let scale = norm.sqrt().recip();
        self.values.iter_mut().for_each(|v| *v *= scale);
        Ok(self)
    }
}

/// Two-photon input, either uncorrelated or a general joint spectrum.
#[derive(Debug, Clone, PartialEq)]
pub enum BiphotonAmplitude {
    Separable(SpectralAmplitude, SpectralAmplitude),
    General(JointSpectrum),
}

impl BiphotonAmplitude {
    pub fn norm(&self) -> f64 {
        match self {
            Self::Separable(a, b) => a.norm() * b.norm(),
            Self::General(j) => j.norm(),
        }
    }

    /// Joint-spectrum form, materializing the outer product if needed.
    pub fn to_joint(&self) -> Result<JointSpectrum> {
        match self {
            Self::Separable(a, b) => JointSpectrum::separable(a, b),
            Self::General(j) => Ok(j.clone()),
        }
    }

    pub fn g2_surface(
        &self,
        spec: &MirrorSpec,
        times: &UniformGrid,
        taus: &[f64],
    ) -> Result<G2Surface> {
        match self {
            Self::Separable(a, b) => g2_separable(a, b, spec, times, taus),
            Self::General(j) => g2_general_surface(j, spec, times, taus),
        }
    }
}

/// Precomputed bilinear kernels for the general coincidence amplitude.
struct JointKernel {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// `w_k w_l T_fp(x_k) T_fp(y_l) ζ_kl / 2π`
    tt: Vec<Complex64>,
    /// `w_k w_l R_fp(x_k) R_fp(y_l) ζ_kl / 2π`
    rr: Vec<Complex64>,
}

impl JointKernel {
    fn new(zeta: &JointSpectrum, spec: &MirrorSpec) -> Result<Self> {
        let norm = zeta.norm();
        if (norm - 1.0).abs() > 1e-8 {
            return Err(Error::NotNormalized { norm });
        }
        let (gs, gi) = (zeta.grid_s(), zeta.grid_i());
        let cs: Vec<_> = gs.values().iter().map(|&x| coefficients(x, spec)).collect();
        let ci: Vec<_> = gi.values().iter().map(|&x| coefficients(x, spec)).collect();
        let mut tt = Vec::with_capacity(gs.len() * gi.len());
        let mut rr = Vec::with_capacity(gs.len() * gi.len());
        for k in 0..gs.len() {
            for l in 0..gi.len() {
                let w = gs.weight(k) * gi.weight(l) / (2.0 * PI);
                let z = zeta.value(k, l) * w;
                tt.push(cs[k].t_fp * ci[l].t_fp * z);
                rr.push(cs[k].r_fp * ci[l].r_fp * z);
            }
        }
        Ok(Self {
            xs: gs.values(),
            ys: gi.values(),
            tt,
            rr,
        })
    }

    fn phases(grid: &[f64], t: f64) -> Vec<Complex64> {
        grid.iter()
            .map(|&x| Complex64::from_polar(1.0, -x * t))
            .collect()
    }

    fn bilinear(kernel: &[Complex64], left: &[Complex64], right: &[Complex64]) -> Complex64 {
        kernel
            .chunks(right.len())
            .zip(left)
            .map(|(row, &l)| {
                l * row
                    .iter()
                    .zip(right)
                    .map(|(&k, &r)| k * r)
                    .sum::<Complex64>()
            })
            .sum()
    }

    /// `A(t, t′)` for detection at T at `t` and at R at `t′`.
    fn amplitude(&self, t: f64, t_prime: f64) -> Complex64 {
        let along_t = Self::bilinear(
            &self.tt,
            &Self::phases(&self.xs, t),
            &Self::phases(&self.ys, t_prime),
        );
        let swapped = Self::bilinear(
            &self.rr,
            &Self::phases(&self.xs, t_prime),
            &Self::phases(&self.ys, t),
        );
        along_t + swapped
    }

    /// `A(t, t+τ)` for every τ, contracting the `t` axis once.
    fn row(&self, t: f64, taus: &[f64]) -> Vec<Complex64> {
        let (nx, ny) = (self.xs.len(), self.ys.len());
        let px = Self::phases(&self.xs, t);
        let py = Self::phases(&self.ys, t);
        let mut tt_left = vec![Complex64::new(0.0, 0.0); ny];
        for (row, &p) in self.tt.chunks(ny).zip(&px) {
            for (acc, &k) in tt_left.iter_mut().zip(row) {
                *acc += p * k;
            }
        }
        let rr_right: Vec<Complex64> = self
            .rr
            .chunks(ny)
            .map(|row| row.iter().zip(&py).map(|(&k, &p)| k * p).sum())
            .collect();
        debug_assert_eq!(rr_right.len(), nx);
        taus.iter()
            .map(|&tau| {
                let t_prime = t + tau;
                let a: Complex64 = tt_left
                    .iter()
                    .zip(&self.ys)
                    .map(|(&u, &y)| u * Complex64::from_polar(1.0, -y * t_prime))
                    .sum();
                let b: Complex64 = rr_right
                    .iter()
                    .zip(&self.xs)
                    .map(|(&v, &x)| v * Complex64::from_polar(1.0, -x * t_prime))
                    .sum();
                a + b
            })
            .collect()
    }
}

fn check_joint_sampling(zeta: &JointSpectrum, time_step: f64, span: f64) -> Result<()> {
    check_sampling(zeta.grid_s(), time_step, span)?;
    check_sampling(zeta.grid_i(), time_step, span)
}

/// `G²(t, t+τ)` for a general joint spectrum by 2-D quadrature.
pub fn g2_general(zeta: &JointSpectrum, spec: &MirrorSpec, t: f64, tau: f64) -> Result<f64> {
    check_finite("t", t)?;
    check_finite("tau", tau)?;
    let kernel = JointKernel::new(zeta, spec)?;
    Ok(kernel.amplitude(t, t + tau).norm_sqr())
}

/// [`g2_general`] over a whole surface, sharing the kernel.
pub fn g2_general_surface(
    zeta: &JointSpectrum,
    spec: &MirrorSpec,
    times: &UniformGrid,
    taus: &[f64],
) -> Result<G2Surface> {
    let (lo, hi) = check_taus(taus)?;
    let span = times.stop() - times.start() + (hi.max(0.0) - lo.min(0.0));
    check_joint_sampling(zeta, times.step(), span)?;
    let kernel = JointKernel::new(zeta, spec)?;
    let values: Vec<f64> = (0..times.len())
        .into_par_iter()
        .flat_map_iter(|j| {
            kernel
                .row(times.at(j), taus)
                .into_iter()
                .map(|a| a.norm_sqr())
        })
        .collect();
    Ok(G2Surface {
        times: *times,
        taus: taus.to_vec(),
        values,
    })
}

/// `G²(τ) = ∫ G²(t, t+τ) dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeIntegratedG2 {
    pub taus: Vec<f64>,
    pub values: Vec<f64>,
    /// Largest value on the first or last time row, relative to the peak.
    pub boundary_ratio: f64,
    pub truncated: bool,
}

pub fn g2_time_integrated(surface: &G2Surface) -> TimeIntegratedG2 {
    let cols = surface.taus.len();
    let rows = surface.times.len();
    let mut values = vec![0.0; cols];
    for j in 0..rows {
        let w = surface.times.weight(j);
        for (m, v) in values.iter_mut().enumerate() {
            *v += w * surface.value(j, m);
        }
    }
    let peak = surface.peak();
    let edge = (0..cols)
        .map(|m| surface.value(0, m).max(surface.value(rows - 1, m)))
        .fold(0.0, f64::max);
    let boundary_ratio = if peak > 0.0 { edge / peak } else { 0.0 };
    let truncated = boundary_ratio > TRUNCATION_WARNING_RATIO;
    if truncated {
        log::warn!(
            "G²(t, t+τ) at the time-grid boundary is {boundary_ratio:.3e} of its peak; the window may truncate the envelopes"
        );
    }
    TimeIntegratedG2 {
        taus: surface.taus.clone(),
        values,
        boundary_ratio,
        truncated,
    }
}

/// Inputs for [`PacketGrids::plan`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketLayout {
    pub center_s: f64,
    pub center_i: f64,
    /// Widest marginal `σ` of either photon; sets the frequency windows.
    pub spectral_sigma: f64,
    /// Narrowest spectral feature; sets the temporal extent.
    pub temporal_sigma: f64,
    /// Envelope centres in time.
    pub delay_min: f64,
    pub delay_max: f64,
    /// Extra samples reserved on the time axis for `t + τ`.
    pub tau_reach: f64,
}

/// Frequency and time grids sized for a pair of packets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketGrids {
    pub freq_s: UniformGrid,
    pub freq_i: UniformGrid,
    pub times: UniformGrid,
}

impl PacketGrids {
    /// Chooses grids that cover `±8σ` in frequency and the whole output
    /// envelope in time, including the cavity ring-down, and that satisfy
    /// the sampling preconditions of the transforms.
    pub fn plan(layout: &PacketLayout, spec: &MirrorSpec, min_freq_points: usize) -> Result<Self> {
        for (name, v) in [
            ("center_s", layout.center_s),
            ("center_i", layout.center_i),
            ("spectral_sigma", layout.spectral_sigma),
            ("temporal_sigma", layout.temporal_sigma),
            ("delay_min", layout.delay_min),
            ("delay_max", layout.delay_max),
            ("tau_reach", layout.tau_reach),
        ] {
            check_finite(name, v)?;
        }
        if layout.spectral_sigma <= 0.0 || layout.temporal_sigma <= 0.0 {
            return Err(Error::Domain {
                name: "sigma",
                value: layout.spectral_sigma.min(layout.temporal_sigma),
                reason: "packet width must be positive",
            });
        }
        let temporal_std = 0.5 / layout.temporal_sigma;
        let eps = spec.epsilon();
        // amplitude e-folding time of the stored field, capped for near-perfect mirrors
        let ringdown = if eps == 0.0 || eps == 1.0 {
            0.0
        } else {
            (2.0 / -spec.reflectance().ln()).min(50.0 * temporal_std)
        };
        let start = layout.delay_min - 8.0 * temporal_std;
        let stop = layout.delay_max + 8.0 * temporal_std + 1.0 + 12.0 * ringdown;

        let half = GAUSSIAN_HALF_WIDTH_SIGMAS * layout.spectral_sigma;
        let max_freq = layout.center_s.abs().max(layout.center_i.abs()) + half;
        let step = (0.5 * PI / max_freq).min(1.0);
        let len = ((stop - start) / step).ceil() as usize + 1;
        let times = UniformGrid::new(start, step, len)?;

        // the transform period 2π/Δx must exceed the window with margin
        let span = times.stop() - times.start() + layout.tau_reach.abs();
        let needed = (2.0 * half * 2.0 * span / (2.0 * PI)).ceil() as usize + 1;
        let points = needed.max(min_freq_points) | 1;
        Ok(Self {
            freq_s: gaussian_grid(layout.center_s, layout.spectral_sigma, points)?,
            freq_i: gaussian_grid(layout.center_i, layout.spectral_sigma, points)?,
            times,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn spec(eps: f64) -> MirrorSpec {
        MirrorSpec::new(eps).unwrap()
    }

    fn layout(center: f64, sigma: f64) -> PacketLayout {
        PacketLayout {
            center_s: center,
            center_i: center,
            spectral_sigma: sigma,
            temporal_sigma: sigma,
            delay_min: 0.0,
            delay_max: 0.0,
            tau_reach: 0.0,
        }
    }

    #[test]
    fn gaussian_is_normalized() {
        for (c, s) in [(1.0, 0.01), (1.4, PI / 200.0), (0.3, 0.05)] {
            let g = gaussian_grid(c, s, 301).unwrap();
            let z = make_gaussian(c, s, &g, PhotonLabel::Signal).unwrap();
            assert!((z.norm() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn gaussian_rejects_narrow_grid() {
        let g = UniformGrid::centered(1.0, 5.0 * 0.01, 101).unwrap();
        assert!(matches!(
            make_gaussian(1.0, 0.01, &g, PhotonLabel::Signal),
            Err(Error::GridTooNarrow { .. })
        ));
        let g = UniformGrid::centered(1.0, 6.0 * 0.01, 101).unwrap();
        assert!(make_gaussian(1.0, 0.01, &g, PhotonLabel::Signal).is_ok());
        assert!(make_gaussian(1.0, -0.01, &g, PhotonLabel::Signal).is_err());
    }

    #[test]
    fn transparent_cavity_delays_by_t0() {
        let sigma = 0.05;
        let s = spec(1.0);
        let grids = PacketGrids::plan(&layout(1.0, sigma), &s, 257).unwrap();
        let z = make_gaussian(1.0, sigma, &grids.freq_s, PhotonLabel::Signal).unwrap();
        let t = filtered_envelope(&z, Channel::T, &s, &grids.times).unwrap();
        let r = filtered_envelope(&z, Channel::R, &s, &grids.times).unwrap();
        // free envelope on the grid shifted by one t₀
        let shifted = UniformGrid::new(
            grids.times.start() - 1.0,
            grids.times.step(),
            grids.times.len(),
        )
        .unwrap();
        let w: Vec<_> = (0..z.grid().len())
            .map(|k| z.values()[k] * (z.grid().weight(k) * INV_SQRT_2PI))
            .collect();
        let free = inverse_transform(z.grid(), &w, &shifted);
        for (a, b) in t.values.iter().zip(&free) {
            assert!((a - b).norm() < 1e-12);
        }
        assert!(r.values.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn perfect_mirror_reflects_envelope() {
        let sigma = 0.05;
        let s = spec(0.0);
        let grids = PacketGrids::plan(&layout(1.0, sigma), &s, 257).unwrap();
        let z = make_gaussian(1.0, sigma, &grids.freq_s, PhotonLabel::Signal).unwrap();
        let t = filtered_envelope(&z, Channel::T, &s, &grids.times).unwrap();
        let r = filtered_envelope(&z, Channel::R, &s, &grids.times).unwrap();
        let w: Vec<_> = (0..z.grid().len())
            .map(|k| z.values()[k] * (z.grid().weight(k) * INV_SQRT_2PI))
            .collect();
        let free = inverse_transform(z.grid(), &w, &grids.times);
        assert!(t.values.iter().all(|v| v.norm() == 0.0));
        for (a, b) in r.values.iter().zip(&free) {
            assert!((a - Complex64::i() * b).norm() < 1e-14);
        }
    }

    #[test]
    fn envelope_energy_is_conserved() {
        for (eps, c, sigma) in [
            (0.5, 1.3, PI / 200.0),
            (0.2, FRAC_PI_2, 0.02),
            (0.8, 0.9, 0.03),
        ] {
            let s = spec(eps);
            let grids = PacketGrids::plan(&layout(c, sigma), &s, 257).unwrap();
            let z = make_gaussian(c, sigma, &grids.freq_s, PhotonLabel::Signal).unwrap();
            let e = envelope_energy(&z, &s, &grids.times).unwrap();
            assert!((e - 1.0).abs() < 1e-6, "ε={eps}: {e}");
        }
    }

    #[test]
    fn aliasing_is_rejected() {
        let s = spec(0.5);
        let g = gaussian_grid(1.0, 0.05, 129).unwrap();
        let z = make_gaussian(1.0, 0.05, &g, PhotonLabel::Signal).unwrap();
        // Δt above π/max|x|
        let coarse = UniformGrid::new(-50.0, 3.0, 40).unwrap();
        assert!(matches!(
            filtered_envelope(&z, Channel::T, &s, &coarse),
            Err(Error::Aliasing(_))
        ));
        // window longer than 2π/Δx
        let period = 2.0 * PI / g.step();
        let long = UniformGrid::spanning(0.0, 1.5 * period, 20_000).unwrap();
        assert!(matches!(
            filtered_envelope(&z, Channel::T, &s, &long),
            Err(Error::Aliasing(_))
        ));
    }

    #[test]
    fn unnormalized_input_is_rejected() {
        let g = gaussian_grid(1.0, 0.05, 65).unwrap();
        let z = SpectralAmplitude::new(g, vec![Complex64::new(1.0, 0.0); 65], PhotonLabel::Idler)
            .unwrap();
        let t = UniformGrid::new(-10.0, 0.5, 41).unwrap();
        assert!(matches!(
            filtered_envelope(&z, Channel::T, &spec(0.5), &t),
            Err(Error::NotNormalized { .. })
        ));
        assert!(SpectralAmplitude::new(g, vec![], PhotonLabel::Idler).is_err());
    }

    #[test]
    fn delay_shifts_envelope() {
        let sigma = 0.04;
        let s = spec(0.6);
        let mut l = layout(1.2, sigma);
        l.delay_max = 20.0;
        let grids = PacketGrids::plan(&l, &s, 257).unwrap();
        let step = grids.times.step();
        let shift = 20.0 / step;
        let n = shift.round() as usize;
        let d = n as f64 * step;
        let z = make_gaussian(1.2, sigma, &grids.freq_s, PhotonLabel::Signal).unwrap();
        let zd = z.clone().delayed(d);
        for ch in [Channel::T, Channel::R] {
            let a = filtered_envelope(&z, ch, &s, &grids.times).unwrap();
            let b = filtered_envelope(&zd, ch, &s, &grids.times).unwrap();
            for j in 0..grids.times.len() - n {
                assert!((b.values[j + n] - a.values[j]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn separable_g2_is_nonnegative_and_transparent_limit() {
        let sigma = 0.05;
        let s = spec(1.0);
        let grids = PacketGrids::plan(&layout(1.0, sigma), &s, 257).unwrap();
        let z0 = make_gaussian(1.0, sigma, &grids.freq_s, PhotonLabel::Signal).unwrap();
        let z1 = make_gaussian(1.0, sigma, &grids.freq_i, PhotonLabel::Idler).unwrap();
        let taus = [-10.0, 0.0, 5.0];
        let surf = g2_separable(&z0, &z1, &s, &grids.times, &taus).unwrap();
        assert!(surf.values.iter().all(|&v| v >= 0.0));
        let a0 = filtered_envelope(&z0, Channel::T, &s, &grids.times).unwrap();
        for (m, &tau) in taus.iter().enumerate() {
            let shifted = UniformGrid::new(
                grids.times.start() + tau,
                grids.times.step(),
                grids.times.len(),
            )
            .unwrap();
            let a1 = filtered_envelope(&z1, Channel::T, &s, &shifted).unwrap();
            for j in (0..grids.times.len()).step_by(17) {
                let expect = (a0.values[j] * a1.values[j]).norm_sqr();
                assert!((surf.value(j, m) - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn time_integration_edge_cases() {
        let times = UniformGrid::new(0.0, 0.5, 10).unwrap();
        let zero = G2Surface {
            times,
            taus: vec![0.0, 1.0],
            values: vec![0.0; 20],
        };
        let g = g2_time_integrated(&zero);
        assert_eq!(g.values, vec![0.0, 0.0]);
        assert!(!g.truncated);

        let mut vals = vec![0.0; 20];
        vals[0] = 1.0;
        let edge = G2Surface {
            times,
            taus: vec![0.0, 1.0],
            values: vals,
        };
        assert!(g2_time_integrated(&edge).truncated);
    }

    #[test]
    fn joint_grid_cap() {
        let g = UniformGrid::spanning(0.0, 1.0, 100).unwrap();
        let r = JointSpectrum::from_fn_with_cap(g, g, 5000, |_, _| Complex64::new(1.0, 0.0));
        assert!(matches!(
            r,
            Err(Error::Resource {
                requested: 10000,
                cap: 5000
            })
        ));
    }

    #[test]
    fn shifted_envelopes_match_direct_evaluation() {
        let s = spec(0.5);
        let g = gaussian_grid(1.0, 0.05, 129).unwrap();
        let z = make_gaussian(1.0, 0.05, &g, PhotonLabel::Signal).unwrap();
        let w = filtered_weights(&z, Channel::R, &s);
        let times = UniformGrid::new(-40.0, 0.5, 161).unwrap();
        let on_grid = shifted_envelopes(&g, &w, &times, &[-3.0, 0.0, 2.5]);
        let off_grid = shifted_envelopes(&g, &w, &times, &[-3.0 + 1e-7, 1e-7, 2.5 + 1e-7]);
        for (a, b) in on_grid.iter().zip(&off_grid) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).norm() < 1e-7);
            }
        }
    }
}
