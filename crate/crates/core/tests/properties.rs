use std::f64::consts::{PI, TAU};

use fpqsim::oracle::{
    bounce_series, fock_output_degenerate, fock_output_two_color, loop_reduction_check,
};
use fpqsim::*;
use proptest::prelude::*;

fn spec(eps: f64) -> MirrorSpec {
    MirrorSpec::new(eps).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn unitarity_and_phase_relation(eps in 0.0f64..=1.0, x in 0.0f64..TAU) {
        let c = FpCoefficients::new(x, &spec(eps)).unwrap();
        prop_assert!(c.unitarity_deviation() <= 1e-12);
        prop_assert!(c.phase_relation().abs() <= 1e-12);
    }

    #[test]
    fn probabilities_match_amplitudes(eps in 0.0f64..=1.0, x in 0.0f64..TAU) {
        let s = spec(eps);
        let t = transmission_probability(x, &s).unwrap();
        let r = reflection_probability(x, &s).unwrap();
        prop_assert!((t - fp_transmission(x, &s).unwrap().norm_sqr()).abs() <= 1e-12);
        prop_assert!((r - fp_reflection(x, &s).unwrap().norm_sqr()).abs() <= 1e-12);
    }

    #[test]
    fn degenerate_fock_output_is_normalized(eps in 0.0f64..=1.0, x in 0.0f64..TAU) {
        let s = spec(eps);
        let state = fock_output_degenerate(x, &s).unwrap();
        prop_assert!((state.total_probability() - 1.0).abs() <= 1e-12);
        let hom = hom_amplitude_degenerate(x, &s).unwrap();
        prop_assert!((state.amplitude(1, 1) - hom.c_hom).norm() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    #[test]
    fn series_error_within_tail_bound(eps in 0.05f64..0.99, x in 0.0f64..TAU, n in 1usize..400) {
        let s = spec(eps);
        let closed = FpCoefficients::new(x, &s).unwrap();
        let series = bounce_series(x, &s, n).unwrap();
        // the bound is exact up to rounding in the partial sums
        let slack = 1e-13;
        prop_assert!((series.partial_t - closed.t_fp).norm() <= series.tail_bound + slack);
        prop_assert!((series.partial_r - closed.r_fp).norm() <= series.tail_bound + slack);
    }

    #[test]
    fn tail_bound_decreases(eps in 0.05f64..0.99, x in 0.0f64..TAU, n in 1usize..200) {
        let s = spec(eps);
        let a = bounce_series(x, &s, n).unwrap();
        let b = bounce_series(x, &s, n + 1).unwrap();
        prop_assert!(b.tail_bound < a.tail_bound);
    }

    #[test]
    fn loop_rule_matches_closed_form(eps in 0.2f64..=1.0, x in 0.0f64..TAU) {
        let s = spec(eps);
        let (t, r) = loop_reduction_check(x, &s).unwrap();
        let c = FpCoefficients::new(x, &s).unwrap();
        prop_assert!((t - c.t_fp).norm() <= 1e-14);
        prop_assert!((r - c.r_fp).norm() <= 1e-14);
    }

    #[test]
    fn two_color_fock_output(eps in 0.0f64..=1.0, x_s in 0.0f64..TAU, dx in 1e-3f64..3.0) {
        let s = spec(eps);
        let x_i = x_s + dx;
        let state = fock_output_two_color(x_s, x_i, &s).unwrap();
        prop_assert!((state.total_probability() - 1.0).abs() <= 1e-12);
        let hom = hom_amplitude_two_color(x_s, x_i, &s).unwrap();
        prop_assert!((state.coincidence_amplitude() - hom.c_hom).norm() <= 1e-12);
    }

    #[test]
    fn spdc_roots_back_substitute(eps in 0.01f64..0.999, x_p in -TAU..TAU) {
        let s = spec(eps);
        let sol = solve_spdc(x_p, &s).unwrap();
        prop_assert_eq!(sol.feasible, sol.beta_eps - 1.0 <= x_p.cos());
        if sol.feasible {
            prop_assert!(!sol.roots.is_empty());
        } else {
            prop_assert!(sol.roots.is_empty());
        }
        for r in sol.residuals() {
            prop_assert!(r < 1e-10);
        }
        for &x_s in &sol.roots {
            prop_assert!((0.0..PI).contains(&x_s));
            let hom = hom_amplitude_two_color(x_s, x_p - x_s, &s).unwrap();
            prop_assert!(hom.p_hom < 1e-18);
        }
    }

    #[test]
    fn degenerate_zero_roots(eps in 0.01f64..epsilon_threshold()) {
        let s = spec(eps);
        let (xp, xm) = solve_degenerate_zero(&s).unwrap();
        prop_assert!((0.0..=PI / 2.0).contains(&xp));
        prop_assert!((PI / 2.0..=PI).contains(&xm));
        prop_assert!((xp + xm - PI).abs() < 1e-12);
        for x in [xp, xm] {
            prop_assert!(hom_amplitude_degenerate(x, &s).unwrap().p_hom < 1e-20);
        }
    }

    #[test]
    fn no_degenerate_zero_above_threshold(eps in epsilon_threshold() + 1e-9..=1.0) {
        prop_assert!(solve_degenerate_zero(&spec(eps)).is_none());
    }

    #[test]
    fn hom_two_color_symmetric(eps in 0.0f64..=1.0, x_s in 0.0f64..TAU, x_i in 0.0f64..TAU) {
        let s = spec(eps);
        let a = hom_amplitude_two_color(x_s, x_i, &s).unwrap();
        let b = hom_amplitude_two_color(x_i, x_s, &s).unwrap();
        prop_assert!((a.c_hom - b.c_hom).norm() <= 1e-15);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&a.p_hom));
    }
}

// the unfactored loop denominator loses about 1e-16/ε² near resonance
#[test]
fn loop_rule_near_perfect_mirror() {
    for eps in [1e-3, 1e-2, 0.05] {
        let tol = 1e-15 / (eps * eps);
        let s = spec(eps);
        for k in 0..200 {
            let x = k as f64 * TAU / 200.0;
            let (t, r) = loop_reduction_check(x, &s).unwrap();
            let c = FpCoefficients::new(x, &s).unwrap();
            assert!((t - c.t_fp).norm() <= tol, "ε={eps}, x={x}");
            assert!((r - c.r_fp).norm() <= tol, "ε={eps}, x={x}");
        }
    }
}
