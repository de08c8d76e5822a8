//! Brute-force cross-checks for the closed forms.
//!
//! Nothing here calls into [`crate::antibunching`]. The bounce series and the
//! loop rule rebuild the cavity coefficients from the single-mirror `T`, `R`
//! without the factored denominator used by [`crate::cavity`], and the Fock
//! routines expand products of creation operators term by term instead of
//! using the `T² + R²` shortcut.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::cavity::{coefficients, mirror_coefficients, MirrorSpec};
use crate::error::{check_finite, Error, Result};

fn check_convergent(spec: &MirrorSpec) -> Result<()> {
    if spec.epsilon() == 0.0 {
        return Err(Error::Domain {
            name: "epsilon",
            value: 0.0,
            reason: "|R| = 1, the bounce series does not converge",
        });
    }
    Ok(())
}

/// Partial sums of the multiple-reflection expansion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BounceSeries {
    pub n_terms: usize,
    pub partial_t: Complex64,
    pub partial_r: Complex64,
    /// Bound on `|partial − limit|` for both sums.
    pub tail_bound: f64,
}

/// Sums the first `n_terms` bounces.
///
/// ```text
/// T_fp ≈ T² e^{ix} Σ_{k<n} (R² e^{i2x})^k
/// R_fp ≈ R (1 + T² e^{i2x} Σ_{k<n−1} (R² e^{i2x})^k)
/// ```
///
/// The reflected sum starts with the bare `R`, one term outside the
/// geometric pattern. The neglected tails are bounded by
/// `|T|²|R|^{2n}/(1−|R|²)` and `|T|²|R|^{2n−1}/(1−|R|²)`; the larger of the
/// two is reported.
pub fn bounce_series(x: f64, spec: &MirrorSpec, n_terms: usize) -> Result<BounceSeries> {
    check_finite("x", x)?;
    check_convergent(spec)?;
    if n_terms == 0 {
        return Err(Error::Domain {
            name: "n_terms",
            value: 0.0,
            reason: "at least one bounce is required",
        });
    }
    let (t, r) = mirror_coefficients(spec);
    let ratio = r * r * Complex64::from_polar(1.0, 2.0 * x);

    let geometric = |terms: usize| {
        let mut sum = Complex64::new(0.0, 0.0);
        let mut power = Complex64::new(1.0, 0.0);
        for _ in 0..terms {
            sum += power;
            power *= ratio;
        }
        sum
    };

    let partial_t = t * t * Complex64::from_polar(1.0, x) * geometric(n_terms);
    let partial_r =
        r * (1.0 + t * t * Complex64::from_polar(1.0, 2.0 * x) * geometric(n_terms - 1));

    let r_abs = r.norm();
    let t2 = t.norm_sqr();
    let tail_bound = t2 * r_abs.powi(2 * n_terms as i32 - 1) / (1.0 - r_abs * r_abs);

    Ok(BounceSeries {
        n_terms,
        partial_t,
        partial_r,
        tail_bound,
    })
}

/// Cavity coefficients from the recursive loop rule.
///
/// Every path touching the internal loop picks up `1/(1 − R² e^{i2x})`.
/// Transmission has one such path, `T e^{ix} T`; reflection adds the direct
/// `R` to the looped path `T e^{ix} R e^{ix} T`.
pub fn loop_reduction_check(x: f64, spec: &MirrorSpec) -> Result<(Complex64, Complex64)> {
    check_finite("x", x)?;
    check_convergent(spec)?;
    let (t, r) = mirror_coefficients(spec);
    let delay = Complex64::from_polar(1.0, x);
    let loop_factor = 1.0 / (1.0 - r * r * delay * delay);
    let transmitted = t * delay * t * loop_factor;
    let reflected = r + t * delay * r * delay * t * loop_factor;
    Ok((transmitted, reflected))
}

/// Expands `Π_k (Σ_m c_km a_m†) |0⟩` over `modes` output modes.
///
/// Returns the amplitude of each normalized Fock state, keyed by its
/// occupation numbers. A monomial `Π a_m†^{n_m}` maps to
/// `√(Π n_m!) |n_0, n_1, …⟩`.
pub fn expand_creation_product(
    operators: &[Vec<(usize, Complex64)>],
    modes: usize,
) -> BTreeMap<Vec<u32>, Complex64> {
    let mut terms: BTreeMap<Vec<u32>, Complex64> = BTreeMap::new();
    terms.insert(vec![0; modes], Complex64::new(1.0, 0.0));
    for op in operators {
        let mut next: BTreeMap<Vec<u32>, Complex64> = BTreeMap::new();
        for (occupation, amp) in &terms {
            for &(mode, coeff) in op {
                let mut occ = occupation.clone();
                occ[mode] += 1;
                *next.entry(occ).or_insert(Complex64::new(0.0, 0.0)) += amp * coeff;
            }
        }
        terms = next;
    }
    terms
        .into_iter()
        .map(|(occ, coeff)| {
            let norm: f64 = occ
                .iter()
                .map(|&n| (1..=n).map(f64::from).product::<f64>())
                .product();
            (occ, coeff * norm.sqrt())
        })
        .collect()
}

/// Two-photon state over the output modes `(T, R)` at one frequency.
///
/// Amplitudes refer to normalized kets, so `|2_T 0_R⟩` carries `√2 T_fp R_fp`
/// and the three probabilities add to one.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState2Mode {
    pub amplitudes: BTreeMap<(u32, u32), Complex64>,
}

impl FockState2Mode {
    pub fn amplitude(&self, n_t: u32, n_r: u32) -> Complex64 {
        self.amplitudes
            .get(&(n_t, n_r))
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn total_probability(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }
}

/// Output state for `|1_I 1_V⟩` with both photons at phase `x`.
pub fn fock_output_degenerate(x: f64, spec: &MirrorSpec) -> Result<FockState2Mode> {
    check_finite("x", x)?;
    let c = coefficients(x, spec);
    // modes: 0 = T, 1 = R
    let a_i = vec![(0, c.t_fp), (1, c.r_fp)];
    let a_v = vec![(0, c.r_fp), (1, c.t_fp)];
    let amplitudes = expand_creation_product(&[a_i, a_v], 2)
        .into_iter()
        .map(|(occ, amp)| ((occ[0], occ[1]), amp))
        .collect();
    Ok(FockState2Mode { amplitudes })
}

/// Output state for photons at distinct phases `x_s` (port I) and `x_i`
/// (port V). The four modes are distinguishable, so no bosonic factors arise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoFrequencyState {
    /// Both photons at T: `T_fp(x_s) R_fp(x_i)`.
    pub both_t: Complex64,
    /// Both photons at R: `T_fp(x_i) R_fp(x_s)`.
    pub both_r: Complex64,
    /// Signal at T, idler at R: `T_fp(x_s) T_fp(x_i)`.
    pub signal_t_idler_r: Complex64,
    /// Idler at T, signal at R: `R_fp(x_s) R_fp(x_i)`.
    pub idler_t_signal_r: Complex64,
}

impl TwoFrequencyState {
    pub fn total_probability(&self) -> f64 {
        [
            self.both_t,
            self.both_r,
            self.signal_t_idler_r,
            self.idler_t_signal_r,
        ]
        .iter()
        .map(|a| a.norm_sqr())
        .sum()
    }

    /// Amplitude seen by frequency-blind detectors, one at each output.
    pub fn coincidence_amplitude(&self) -> Complex64 {
        self.signal_t_idler_r + self.idler_t_signal_r
    }

    /// Collapses the frequency label, as when `x_s → x_i`.
    pub fn merge_degenerate(&self) -> FockState2Mode {
        let sqrt2 = std::f64::consts::SQRT_2;
        let amplitudes = [
            ((2, 0), self.both_t * sqrt2),
            ((1, 1), self.coincidence_amplitude()),
            ((0, 2), self.both_r * sqrt2),
        ]
        .into_iter()
        .collect();
        FockState2Mode { amplitudes }
    }
}

pub fn fock_output_two_color(x_s: f64, x_i: f64, spec: &MirrorSpec) -> Result<TwoFrequencyState> {
    check_finite("x_s", x_s)?;
    check_finite("x_i", x_i)?;
    if x_s == x_i {
        return Err(Error::Domain {
            name: "x_i",
            value: x_i,
            reason: "the two-frequency state needs distinct phases",
        });
    }
    let s = coefficients(x_s, spec);
    let i = coefficients(x_i, spec);
    // modes: 0 = T(x_s), 1 = R(x_s), 2 = T(x_i), 3 = R(x_i)
    let a_i = vec![(0, s.t_fp), (1, s.r_fp)];
    let a_v = vec![(2, i.r_fp), (3, i.t_fp)];
    let out = expand_creation_product(&[a_i, a_v], 4);
    let get = |occ: [u32; 4]| {
        out.get(occ.as_slice())
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    };
    Ok(TwoFrequencyState {
        both_t: get([1, 0, 1, 0]),
        both_r: get([0, 1, 0, 1]),
        signal_t_idler_r: get([1, 0, 0, 1]),
        idler_t_signal_r: get([0, 1, 1, 0]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cavity::{fp_reflection, fp_transmission};
    use std::f64::consts::FRAC_PI_2;

    fn spec(eps: f64) -> MirrorSpec {
        MirrorSpec::new(eps).unwrap()
    }

    #[test]
    fn single_bounce() {
        let s = spec(0.6);
        let x = 0.9;
        let b = bounce_series(x, &s, 1).unwrap();
        let (t, r) = mirror_coefficients(&s);
        assert!((b.partial_t - t * t * Complex64::from_polar(1.0, x)).norm() < 1e-16);
        assert_eq!(b.partial_r, r);
    }

    #[test]
    fn long_series_converges() {
        let s = spec(0.5);
        let b = bounce_series(0.7, &s, 200).unwrap();
        let t = fp_transmission(0.7, &s).unwrap();
        let r = fp_reflection(0.7, &s).unwrap();
        assert!(b.tail_bound < 0.75f64.powi(199) / 0.25 + 1e-300);
        assert!((b.partial_t - t).norm() < 1e-14);
        assert!((b.partial_r - r).norm() < 1e-14);
    }

    #[test]
    fn transparent_mirrors_need_one_term() {
        let s = spec(1.0);
        for n in [1, 2, 50] {
            let b = bounce_series(1.3, &s, n).unwrap();
            assert!((b.partial_t - Complex64::from_polar(1.0, 1.3)).norm() < 1e-15);
            assert_eq!(b.partial_r.norm(), 0.0);
            assert_eq!(b.tail_bound, 0.0);
        }
    }

    #[test]
    fn series_rejects_perfect_mirror_and_zero_terms() {
        assert!(bounce_series(0.1, &spec(0.0), 10).is_err());
        assert!(bounce_series(0.1, &spec(0.5), 0).is_err());
        assert!(loop_reduction_check(0.1, &spec(0.0)).is_err());
    }

    #[test]
    fn truncation_error_within_bound() {
        let s = spec(0.9);
        let t = fp_transmission(0.4, &s).unwrap();
        let r = fp_reflection(0.4, &s).unwrap();
        for n in 1..30 {
            let b = bounce_series(0.4, &s, n).unwrap();
            assert!((b.partial_t - t).norm() <= b.tail_bound + 1e-15);
            assert!((b.partial_r - r).norm() <= b.tail_bound + 1e-15);
        }
    }

    #[test]
    fn loop_rule_examples() {
        let s = spec(0.5);
        let (t, r) = loop_reduction_check(0.0, &s).unwrap();
        let (_, r_mirror) = mirror_coefficients(&s);
        assert!((r - r_mirror * (1.0 + 0.25 / 1.75)).norm() < 1e-15);
        assert!((r - fp_reflection(0.0, &s).unwrap()).norm() < 1e-15);
        assert!((t - Complex64::new(1.0 / 7.0, 0.0)).norm() < 1e-15);

        let (t, r) = loop_reduction_check(FRAC_PI_2, &s).unwrap();
        assert!((t.norm() - 1.0).abs() < 1e-15);
        assert!(r.norm() < 1e-15);
    }

    #[test]
    fn fock_expansion_counts_bosonic_factors() {
        // (a†)² |0⟩ = √2 |2⟩
        let one = Complex64::new(1.0, 0.0);
        let out = expand_creation_product(&[vec![(0, one)], vec![(0, one)]], 1);
        assert_eq!(out.len(), 1);
        assert!((out[&vec![2]] - std::f64::consts::SQRT_2).norm() < 1e-15);
    }

    #[test]
    fn degenerate_fock_transparent() {
        let f = fock_output_degenerate(0.8, &spec(1.0)).unwrap();
        assert!((f.amplitude(1, 1) - Complex64::from_polar(1.0, 1.6)).norm() < 1e-15);
        assert!(f.amplitude(2, 0).norm() < 1e-15);
        assert!(f.amplitude(0, 2).norm() < 1e-15);
    }

    #[test]
    fn degenerate_fock_at_zero() {
        let s = spec(0.5);
        let (x_plus, _) = crate::antibunching::solve_degenerate_zero(&s).unwrap();
        let f = fock_output_degenerate(x_plus, &s).unwrap();
        assert!(f.amplitude(1, 1).norm() < 1e-10);
        assert!((f.amplitude(2, 0).norm_sqr() - 0.5).abs() < 1e-12);
        assert!((f.amplitude(0, 2).norm_sqr() - 0.5).abs() < 1e-12);
        assert!((f.total_probability() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_color_merges_continuously() {
        let s = spec(0.45);
        let x = 1.2;
        let merged = fock_output_two_color(x, x + 1e-10, &s)
            .unwrap()
            .merge_degenerate();
        let direct = fock_output_degenerate(x, &s).unwrap();
        for key in [(2, 0), (1, 1), (0, 2)] {
            let d = merged.amplitude(key.0, key.1) - direct.amplitude(key.0, key.1);
            assert!(d.norm() < 1e-8, "{key:?}");
        }
        assert!(fock_output_two_color(x, x, &s).is_err());
    }

    #[test]
    fn two_color_cancellation_on_zero_curve() {
        let s = spec(0.4);
        let level = crate::antibunching::zero_curve_level(&s);
        let x_s = 1.0f64;
        let x_i = (level / x_s.cos()).acos();
        let st = fock_output_two_color(x_s, x_i, &s).unwrap();
        assert!(st.coincidence_amplitude().norm() < 1e-10);
        assert!(st.signal_t_idler_r.norm() > 1e-3);
        assert!(st.idler_t_signal_r.norm() > 1e-3);
        assert!((st.total_probability() - 1.0).abs() < 1e-12);
    }
}
