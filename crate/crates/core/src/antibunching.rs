//! Monochromatic two-photon interference at the cavity.
//!
//! With one photon entering each input port, the amplitude for finding one
//! photon at each output is
//!
//! ```text
//! c_HOM(x_s, x_i) = T_fp(x_s) T_fp(x_i) + R_fp(x_s) R_fp(x_i)
//! ```
//!
//! Substituting the closed forms gives
//! `c_HOM ∝ ε⁴ − 4(1−ε²) cos x_s cos x_i`, so coincidences vanish on the
//! curve `cos x_s cos x_i = ε⁴/(4(1−ε²))`. For equal frequencies this has
//! real solutions only while `ε ≤ ε₀ = √(2(√2−1))`.
//!
//! Phases returned by the solvers are reduced to the cell `[0, π)`
//! (`[0, π]` for the degenerate pair); the coefficient moduli are
//! π-periodic, so other cells follow by `x → x + kπ`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::cavity::{coefficients, FpCoefficients, MirrorSpec};
use crate::error::{check_finite, Error, Result};
use crate::grid::check_increasing;

/// Discriminants below this magnitude are treated as a tangency.
const DISCRIMINANT_CLAMP: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomResult {
    pub c_hom: Complex64,
    pub p_hom: f64,
    pub x_s: f64,
    pub x_i: f64,
}

/// Right-hand side `ε⁴/(4(1−ε²))` of the two-color zero condition.
///
/// Infinite for `ε = 1`.
pub fn zero_curve_level(spec: &MirrorSpec) -> f64 {
    let eps2 = spec.epsilon() * spec.epsilon();
    eps2 * eps2 / (4.0 * spec.reflectance())
}

/// `c_HOM = T_fp(x)² + R_fp(x)²` for two photons of the same frequency.
pub fn hom_amplitude_degenerate(x: f64, spec: &MirrorSpec) -> Result<HomResult> {
    let c = FpCoefficients::new(x, spec)?;
    let c_hom = c.t_fp * c.t_fp + c.r_fp * c.r_fp;
    Ok(HomResult {
        c_hom,
        p_hom: c_hom.norm_sqr(),
        x_s: x,
        x_i: x,
    })
}

/// Frequency-blind coincidence amplitude for photons at `x_s` and `x_i`.
pub fn hom_amplitude_two_color(x_s: f64, x_i: f64, spec: &MirrorSpec) -> Result<HomResult> {
    let s = FpCoefficients::new(x_s, spec)?;
    let i = FpCoefficients::new(x_i, spec)?;
    let c_hom = combine(&s, &i);
    Ok(HomResult {
        c_hom,
        p_hom: c_hom.norm_sqr(),
        x_s,
        x_i,
    })
}

fn combine(s: &FpCoefficients, i: &FpCoefficients) -> Complex64 {
    s.t_fp * i.t_fp + s.r_fp * i.r_fp
}

/// `ε₀ = √(2(√2−1))`, the largest mirror transmissivity that still admits
/// a degenerate coincidence zero.
pub fn epsilon_threshold() -> f64 {
    (2.0 * (std::f64::consts::SQRT_2 - 1.0)).sqrt()
}

/// Phases `x± = arccos(±ε²/(2√(1−ε²)))` where equal-frequency coincidences
/// vanish, or `None` when `ε > ε₀`.
///
/// The perfect mirror (`ε = 0`) reflects both photons unconditionally and has
/// no zero either.
pub fn solve_degenerate_zero(spec: &MirrorSpec) -> Option<(f64, f64)> {
    let eps = spec.epsilon();
    if eps == 0.0 || eps > epsilon_threshold() {
        return None;
    }
    let arg = (eps * eps / (2.0 * spec.reflectance().sqrt())).min(1.0);
    Some((arg.acos(), (-arg).acos()))
}

/// Cavity coefficients at `(x+, x−)`.
///
/// At these phases `|T_fp|² = |R_fp|² = 1/2` and `R_fp = ±i T_fp`. In the
/// high-finesse limit the values tend to `T_fp(x+) = (1+i)/2`,
/// `R_fp(x+) = (−1+i)/2`, `T_fp(x−) = (−1+i)/2`, `R_fp(x−) = (1+i)/2`; for
/// finite `ε` they carry an extra common phase.
pub fn coefficients_at_zero(spec: &MirrorSpec) -> Result<(FpCoefficients, FpCoefficients)> {
    let (x_plus, x_minus) = solve_degenerate_zero(spec).ok_or(Error::Domain {
        name: "epsilon",
        value: spec.epsilon(),
        reason: "no degenerate coincidence zero exists above the threshold transmissivity",
    })?;
    Ok((coefficients(x_plus, spec), coefficients(x_minus, spec)))
}

/// Coincidence probabilities over a 2-D parameter grid, plus the
/// sub-threshold mask.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub axis1: Vec<f64>,
    pub axis2: Vec<f64>,
    /// Row-major, `axis1.len()` rows of `axis2.len()` columns.
    pub values: Vec<f64>,
    pub threshold: f64,
    pub mask: Vec<bool>,
}

/// A grid cell below threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub a: f64,
    pub b: f64,
    pub p_hom: f64,
}

impl SweepGrid {
    fn build(
        axis1: &[f64],
        axis2: &[f64],
        threshold: f64,
        cell: impl Fn(usize, usize) -> f64 + Sync,
    ) -> Self {
        let cols = axis2.len();
        let mut values = vec![0.0; axis1.len() * cols];
        values
            .par_chunks_mut(cols)
            .enumerate()
            .for_each(|(i, row)| {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = cell(i, j);
                }
            });
        let mask = values.iter().map(|&v| v < threshold).collect();
        Self {
            axis1: axis1.to_vec(),
            axis2: axis2.to_vec(),
            values,
            threshold,
            mask,
        }
    }

    pub fn rows(&self) -> usize {
        self.axis1.len()
    }

    pub fn cols(&self) -> usize {
        self.axis2.len()
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols() + j]
    }

    pub fn is_masked(&self, i: usize, j: usize) -> bool {
        self.mask[i * self.cols() + j]
    }

    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Sub-threshold cells in row-major order.
    pub fn points(&self) -> Vec<SweepPoint> {
        let cols = self.cols();
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(k, _)| SweepPoint {
                a: self.axis1[k / cols],
                b: self.axis2[k % cols],
                p_hom: self.values[k],
            })
            .collect()
    }
}

fn check_threshold(threshold: f64) -> Result<()> {
    check_finite("threshold", threshold)?;
    if threshold <= 0.0 {
        return Err(Error::Domain {
            name: "threshold",
            value: threshold,
            reason: "threshold must be positive",
        });
    }
    Ok(())
}

/// `P_HOM(ε, x)` over `eps_grid × x_grid`.
pub fn sweep_degenerate(eps_grid: &[f64], x_grid: &[f64], threshold: f64) -> Result<SweepGrid> {
    check_increasing("epsilon grid", eps_grid)?;
    check_increasing("phase grid", x_grid)?;
    check_threshold(threshold)?;
    let specs = eps_grid
        .iter()
        .map(|&e| MirrorSpec::new(e))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepGrid::build(eps_grid, x_grid, threshold, |i, j| {
        let c = coefficients(x_grid[j], &specs[i]);
        combine(&c, &c).norm_sqr()
    }))
}

/// `P_HOM(x_s, x_i)` over `x_s_grid × x_i_grid` at fixed `ε`.
pub fn sweep_two_color(
    x_s_grid: &[f64],
    x_i_grid: &[f64],
    spec: &MirrorSpec,
    threshold: f64,
) -> Result<SweepGrid> {
    check_increasing("signal phase grid", x_s_grid)?;
    check_increasing("idler phase grid", x_i_grid)?;
    check_threshold(threshold)?;
    let s: Vec<_> = x_s_grid.iter().map(|&x| coefficients(x, spec)).collect();
    let i: Vec<_> = x_i_grid.iter().map(|&x| coefficients(x, spec)).collect();
    Ok(SweepGrid::build(x_s_grid, x_i_grid, threshold, |a, b| {
        combine(&s[a], &i[b]).norm_sqr()
    }))
}

/// Signal phases compatible with both a coincidence zero and energy
/// conservation `x_s + x_i = x_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdcSolution {
    pub x_p: f64,
    /// `cos x_p`
    pub alpha_p: f64,
    /// `ε⁴/(2(1−ε²))`
    pub beta_eps: f64,
    /// Signal phases in `[0, π)`, ascending.
    pub roots: Vec<f64>,
    /// `β_ε − 1 ≤ α_p`
    pub feasible: bool,
}

impl SpdcSolution {
    /// `|cos x_s cos(x_p − x_s) − β_ε/2|` for each root.
    pub fn residuals(&self) -> Vec<f64> {
        self.roots
            .iter()
            .map(|&x_s| (x_s.cos() * (self.x_p - x_s).cos() - 0.5 * self.beta_eps).abs())
            .collect()
    }
}

/// Maps `tan x_s = v` into `[0, π)`.
fn tan_root_to_phase(v: f64) -> f64 {
    let x = v.atan();
    if x < 0.0 {
        x + PI
    } else {
        x
    }
}

/// Solves `β tan² x_s − 2 sin(x_p) tan x_s + β − 2α = 0`.
///
/// This is the zero condition with `x_i = x_p − x_s` after the half-angle
/// substitution. The linear coefficient uses the signed `sin x_p`, which
/// equals `√(1−α_p²)` on `x_p ∈ [0, π]`. The smaller-magnitude root is taken
/// from the product of roots to avoid cancellation when `β` is small; at
/// `β = 0` (ε⁴ underflows) the quadratic degenerates and is solved as a
/// linear equation plus the root at `tan x_s = ∞`.
///
/// ε = 0 is rejected: both cavity denominators vanish on `cos x = 0`, so
/// points on the curve are not coincidence zeros there (`c_HOM = −1`).
pub fn solve_spdc(x_p: f64, spec: &MirrorSpec) -> Result<SpdcSolution> {
    check_finite("x_p", x_p)?;
    let eps = spec.epsilon();
    if eps >= 1.0 || eps == 0.0 {
        return Err(Error::Domain {
            name: "epsilon",
            value: eps,
            reason: "the pump constraint requires 0 < ε < 1",
        });
    }
    let (sin_p, alpha) = x_p.sin_cos();
    let beta = 2.0 * zero_curve_level(spec);
    let feasible = beta - 1.0 <= alpha;
    let mut solution = SpdcSolution {
        x_p,
        alpha_p: alpha,
        beta_eps: beta,
        roots: Vec::new(),
        feasible,
    };
    if !feasible {
        return Ok(solution);
    }

    let mut roots = Vec::with_capacity(2);
    if beta == 0.0 {
        roots.push(FRAC_PI_2);
        if sin_p != 0.0 {
            roots.push(tan_root_to_phase(-alpha / sin_p));
        }
    } else {
        let d = alpha - beta;
        let mut disc = (1.0 - d) * (1.0 + d);
        if disc.abs() < DISCRIMINANT_CLAMP || disc < 0.0 {
            disc = 0.0;
        }
        if disc == 0.0 {
            roots.push(tan_root_to_phase(sin_p / beta));
        } else {
            let sqrt_disc = disc.sqrt();
            let q = if sin_p >= 0.0 {
                sin_p + sqrt_disc
            } else {
                sin_p - sqrt_disc
            };
            roots.push(tan_root_to_phase(q / beta));
            roots.push(tan_root_to_phase((beta - 2.0 * alpha) / q));
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup();
    solution.roots = roots;
    Ok(solution)
}
