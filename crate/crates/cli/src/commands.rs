use std::f64::consts::TAU;

use fpqsim::oracle::{
    bounce_series, fock_output_degenerate, fock_output_two_color, loop_reduction_check,
};
use fpqsim::wavepacket::{envelope_energy, g2_general_surface, PacketGrids, PacketLayout};
use fpqsim::{
    hom_amplitude_degenerate, hom_amplitude_two_color, linspace, make_gaussian,
    reflection_probability, solve_spdc, sweep_degenerate, sweep_two_color,
    transmission_probability, CavityGeometry, FpCoefficients, JointSpectrum, MirrorSpec,
    PhotonLabel, SweepGrid, UniformGrid,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::args::{G2Mode, JointKind};
use crate::config::{
    CoeffsConfig, CommandConfig, EpsilonSampling, G2Config, HomScanConfig, OracleConfig, RunConfig,
    SeriesConfig, SpdcConfig, TwoColorConfig,
};
use crate::output::{Cell, Report, Section, Table};
use crate::CliError;

/// Residual bound for reported SPDC roots.
pub const SPDC_RESIDUAL_BOUND: f64 = 1e-10;
/// Agreement required between oracle routes and closed forms.
pub const ORACLE_BOUND: f64 = 1e-12;
/// Rounding allowance on top of the analytic series tail bound.
pub const SERIES_SLACK: f64 = 1e-13;

/// A report, plus the reason the oracle gate failed if it did.
#[derive(Debug)]
pub struct Outcome {
    pub report: Report,
    pub gate_failure: Option<String>,
}

impl From<Report> for Outcome {
    fn from(report: Report) -> Self {
        Self {
            report,
            gate_failure: None,
        }
    }
}

pub fn execute(cfg: &RunConfig) -> Result<Outcome, CliError> {
    match &cfg.command {
        CommandConfig::Coeffs(c) => coeffs(c, cfg.t0).map(Outcome::from),
        CommandConfig::HomScan(c) => hom_scan(c).map(Outcome::from),
        CommandConfig::TwoColorScan(c) => two_color_scan(c).map(Outcome::from),
        CommandConfig::SpdcSolve(c) => spdc_solve(c).map(Outcome::from),
        CommandConfig::G2(c) => g2(c, cfg.t0).map(Outcome::from),
        CommandConfig::SeriesCheck(c) => series_check(c),
        CommandConfig::Oracle(c) => oracle(c).map(Outcome::from),
    }
}

pub fn coeffs(c: &CoeffsConfig, t0: Option<f64>) -> Result<Report, CliError> {
    let geometry = t0.map(CavityGeometry::new).transpose()?;
    let mut columns = vec!["x"];
    if geometry.is_some() {
        columns.push("omega");
    }
    columns.extend([
        "t_fp_re",
        "t_fp_im",
        "r_fp_re",
        "r_fp_im",
        "t_fp_abs2",
        "r_fp_abs2",
        "unitarity_dev",
    ]);
    let mut table = Table::new("coeffs", &columns);
    for x in linspace(c.x_min, c.x_max, c.points) {
        let k = FpCoefficients::new(x, &c.spec)?;
        let mut row: Vec<Cell> = vec![x.into()];
        if let Some(g) = &geometry {
            row.push(g.angular_frequency(x).into());
        }
        row.extend([
            k.t_fp.re.into(),
            k.t_fp.im.into(),
            k.r_fp.re.into(),
            k.r_fp.im.into(),
            transmission_probability(x, &c.spec)?.into(),
            reflection_probability(x, &c.spec)?.into(),
            k.unitarity_deviation().into(),
        ]);
        table.push(row);
    }
    let mut s = Section::default();
    s.meta_f64("epsilon", c.spec.epsilon());
    if let Some(t0) = t0 {
        s.meta_f64("t0", t0);
    }
    s.tables.push(table);
    Ok(Report::single("coeffs", s))
}

fn sweep_tables(grid: &SweepGrid, a: &str, b: &str) -> Vec<Table> {
    let mut all = Table::new("grid", &[a, b, "p_hom", "below"]);
    for i in 0..grid.rows() {
        for j in 0..grid.cols() {
            all.push(vec![
                grid.axis1[i].into(),
                grid.axis2[j].into(),
                grid.value(i, j).into(),
                grid.is_masked(i, j).into(),
            ]);
        }
    }
    let mut points = Table::new("points", &[a, b, "p_hom"]);
    for p in grid.points() {
        points.push(vec![p.a.into(), p.b.into(), p.p_hom.into()]);
    }
    vec![all, points]
}

fn sweep_section(grid: &SweepGrid, a: &str, b: &str) -> Section {
    let mut s = Section::default();
    s.meta_f64("threshold", grid.threshold);
    s.meta("rows", grid.rows());
    s.meta("cols", grid.cols());
    s.meta("masked", grid.masked_count());
    s.tables = sweep_tables(grid, a, b);
    s
}

pub fn hom_scan(c: &HomScanConfig) -> Result<Report, CliError> {
    let eps = linspace(c.eps_min, c.eps_max, c.eps_points);
    let xs = linspace(c.x_min, c.x_max, c.x_points);
    let grid = sweep_degenerate(&eps, &xs, c.threshold)?;
    Ok(Report::single(
        "hom-scan",
        sweep_section(&grid, "epsilon", "x"),
    ))
}

pub fn two_color_scan(c: &TwoColorConfig) -> Result<Report, CliError> {
    let xs = linspace(c.x_min, c.x_max, c.s_points);
    let xi = linspace(c.x_min, c.x_max, c.i_points);
    let mut sections = Vec::new();
    for spec in &c.specs {
        let grid = sweep_two_color(&xs, &xi, spec, c.threshold)?;
        let mut s = sweep_section(&grid, "x_s", "x_i");
        s.meta.insert(0, ("epsilon".into(), spec.epsilon().into()));
        s.suffix = Some(format!("eps{}", spec.epsilon()));
        sections.push(s);
    }
    Ok(Report {
        command: "two-color-scan",
        sections,
    })
}

pub fn spdc_solve(c: &SpdcConfig) -> Result<Report, CliError> {
    let sol = solve_spdc(c.x_p, &c.spec)?;
    let residuals = sol.residuals();
    if let Some(r) = residuals.iter().find(|&&r| !(r < SPDC_RESIDUAL_BOUND)) {
        return Err(CliError::Numerical(format!(
            "root residual {r:e} exceeds {SPDC_RESIDUAL_BOUND:e}"
        )));
    }
    let mut s = Section::default();
    s.meta_f64("epsilon", c.spec.epsilon());
    s.meta_f64("x_p", sol.x_p);
    s.meta_f64("alpha_p", sol.alpha_p);
    s.meta_f64("beta_eps", sol.beta_eps);
    s.meta("feasible", sol.feasible);
    s.meta_f64s("roots", &sol.roots);
    s.meta_f64s("residuals", &residuals);
    let mut pairs = Table::new("pairs", &["x_s", "x_i", "residual", "p_hom"]);
    for (&x_s, &r) in sol.roots.iter().zip(&residuals) {
        let x_i = sol.x_p - x_s;
        let p = hom_amplitude_two_color(x_s, x_i, &c.spec)?.p_hom;
        pairs.push(vec![x_s.into(), x_i.into(), r.into(), p.into()]);
    }
    s.tables.push(pairs);
    Ok(Report::single("spdc-solve", s))
}

fn g2_grids(c: &G2Config) -> Result<PacketGrids, CliError> {
    let (spectral_sigma, temporal_sigma) = match (c.mode, c.joint) {
        (G2Mode::General, JointKind::Ridge) => {
            let marginal = 0.5 * (c.sigma_sum * c.sigma_sum + c.sigma_diff * c.sigma_diff).sqrt();
            (marginal, 0.5 * c.sigma_sum.min(c.sigma_diff))
        }
        _ => (c.sigma, c.sigma),
    };
    let (center_s, center_i) = match c.joint {
        JointKind::Ridge if c.mode == G2Mode::General => (c.center_s, c.x_p - c.center_s),
        _ => (c.center_s, c.center_i),
    };
    let layout = PacketLayout {
        center_s,
        center_i,
        spectral_sigma,
        temporal_sigma,
        delay_min: c.delay_s.min(c.delay_i),
        delay_max: c.delay_s.max(c.delay_i),
        tau_reach: c.tau_max.max(0.0) - c.tau_min.min(0.0),
    };
    let mut grids = PacketGrids::plan(&layout, &c.spec, c.freq_points)?;
    if c.dt.is_some() || c.t_min.is_some() || c.t_max.is_some() {
        let auto = grids.times;
        let start = c.t_min.unwrap_or(auto.start());
        let stop = c.t_max.unwrap_or(auto.stop());
        let step = c.dt.unwrap_or(auto.step());
        if stop <= start {
            return Err(CliError::Validation(format!(
                "time window [{start}, {stop}] is empty"
            )));
        }
        let len = ((stop - start) / step).ceil() as usize + 1;
        grids.times = UniformGrid::new(start, step, len.max(2))?;
    }
    Ok(grids)
}

pub fn g2(c: &G2Config, t0: Option<f64>) -> Result<Report, CliError> {
    let geometry = t0.map(CavityGeometry::new).transpose()?;
    let grids = g2_grids(c)?;
    let taus = linspace(c.tau_min, c.tau_max, c.tau_points);
    let mut s = Section::default();
    s.meta(
        "mode",
        match c.mode {
            G2Mode::Separable => "separable",
            G2Mode::General => "general",
        },
    );
    s.meta_f64("epsilon", c.spec.epsilon());
    let mut diagnostics: Vec<(&str, f64)> = Vec::new();

    let surface = match (c.mode, c.joint) {
        (G2Mode::General, JointKind::Ridge) => {
            let joint = JointSpectrum::spdc_ridge(
                c.x_p,
                c.center_s,
                c.sigma_sum,
                c.sigma_diff,
                grids.freq_s,
                grids.freq_i,
            )?
            .delayed(c.delay_s, c.delay_i);
            s.meta("joint", "ridge");
            s.meta_f64("x_p", c.x_p);
            s.meta_f64("center_s", c.center_s);
            s.meta_f64("sigma_sum", c.sigma_sum);
            s.meta_f64("sigma_diff", c.sigma_diff);
            diagnostics.push(("joint_norm", joint.norm()));
            diagnostics.push((
                "p_hom_center",
                hom_amplitude_two_color(c.center_s, c.x_p - c.center_s, &c.spec)?.p_hom,
            ));
            g2_general_surface(&joint, &c.spec, &grids.times, &taus)?
        }
        (mode, _) => {
            let z0 = make_gaussian(c.center_s, c.sigma, &grids.freq_s, PhotonLabel::Signal)?
                .delayed(c.delay_s);
            let z1 = make_gaussian(c.center_i, c.sigma, &grids.freq_i, PhotonLabel::Idler)?
                .delayed(c.delay_i);
            s.meta_f64("center_s", c.center_s);
            s.meta_f64("center_i", c.center_i);
            s.meta_f64("sigma", c.sigma);
            diagnostics.push((
                "parseval_signal",
                envelope_energy(&z0, &c.spec, &grids.times)?,
            ));
            diagnostics.push((
                "parseval_idler",
                envelope_energy(&z1, &c.spec, &grids.times)?,
            ));
            diagnostics.push((
                "p_hom_center",
                hom_amplitude_two_color(c.center_s, c.center_i, &c.spec)?.p_hom,
            ));
            if mode == G2Mode::General {
                s.meta("joint", "product");
                let joint = JointSpectrum::separable(&z0, &z1)?;
                g2_general_surface(&joint, &c.spec, &grids.times, &taus)?
            } else {
                fpqsim::g2_separable(&z0, &z1, &c.spec, &grids.times, &taus)?
            }
        }
    };
    let trace = fpqsim::g2_time_integrated(&surface);
    diagnostics.push(("boundary_ratio", trace.boundary_ratio));
    s.meta_f64("dt", grids.times.step());
    s.meta("time_points", grids.times.len());
    s.meta("freq_points", grids.freq_s.len());
    if let Some(t0) = t0 {
        s.meta_f64("t0", t0);
    }

    let mut columns = vec!["t", "tau"];
    if geometry.is_some() {
        columns.push("t_seconds");
    }
    columns.push("g2");
    let mut surf = Table::new("surface", &columns);
    for j in 0..surface.times.len() {
        let t = surface.times.at(j);
        for (m, &tau) in surface.taus.iter().enumerate() {
            let mut row: Vec<Cell> = vec![t.into(), tau.into()];
            if let Some(g) = &geometry {
                row.push(g.to_seconds(t).into());
            }
            row.push(surface.value(j, m).into());
            surf.push(row);
        }
    }
    let mut tr = Table::new("trace", &["tau", "g2_integrated"]);
    for (&tau, &v) in trace.taus.iter().zip(&trace.values) {
        tr.push(vec![tau.into(), v.into()]);
    }
    let mut diag = Table::new("diagnostics", &["quantity", "value"]);
    for (k, v) in &diagnostics {
        diag.push(vec![(*k).into(), (*v).into()]);
        s.meta_f64(k, *v);
    }
    diag.push(vec!["truncated".into(), trace.truncated.into()]);
    s.meta("truncated", trace.truncated);
    diag.csv_only = true;
    s.tables.extend([surf, tr, diag]);
    Ok(Report::single("g2", s))
}

#[derive(Debug, Default)]
struct Worst {
    value: f64,
}

impl Worst {
    fn update(&mut self, v: f64) {
        if !(v <= self.value) {
            self.value = v;
        }
    }
}

pub fn series_check(c: &SeriesConfig) -> Result<Outcome, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let mut series_dev = Worst::default();
    let mut tail = Worst::default();
    let mut excess = f64::NEG_INFINITY;
    let mut violations = 0usize;
    let mut loop_dev = Worst::default();
    let mut fock_norm = Worst::default();
    let mut fock_cross = Worst::default();
    let mut two_norm = Worst::default();
    let mut two_cross = Worst::default();
    for _ in 0..c.points {
        let spec = match c.epsilon {
            EpsilonSampling::Fixed(s) => s,
            EpsilonSampling::Uniform { min, max } => MirrorSpec::new(rng.gen_range(min..=max))?,
        };
        let x = rng.gen_range(0.0..TAU);
        let x_i = rng.gen_range(0.0..TAU);

        let closed = FpCoefficients::new(x, &spec)?;
        let b = bounce_series(x, &spec, c.n_terms)?;
        let dev = (b.partial_t - closed.t_fp)
            .norm()
            .max((b.partial_r - closed.r_fp).norm());
        series_dev.update(dev);
        tail.update(b.tail_bound);
        excess = excess.max(dev - b.tail_bound);
        if !(dev <= b.tail_bound + SERIES_SLACK) {
            violations += 1;
        }

        let (t, r) = loop_reduction_check(x, &spec)?;
        loop_dev.update((t - closed.t_fp).norm().max((r - closed.r_fp).norm()));

        let state = fock_output_degenerate(x, &spec)?;
        fock_norm.update((state.total_probability() - 1.0).abs());
        fock_cross
            .update((state.amplitude(1, 1) - hom_amplitude_degenerate(x, &spec)?.c_hom).norm());

        if x_i != x {
            let two = fock_output_two_color(x, x_i, &spec)?;
            two_norm.update((two.total_probability() - 1.0).abs());
            two_cross.update(
                (two.coincidence_amplitude() - hom_amplitude_two_color(x, x_i, &spec)?.c_hom)
                    .norm(),
            );
        }
    }

    let checks = [
        (
            "series_vs_closed_form",
            series_dev.value,
            tail.value + SERIES_SLACK,
            violations == 0,
        ),
        (
            "loop_rule_vs_closed_form",
            loop_dev.value,
            ORACLE_BOUND,
            loop_dev.value <= ORACLE_BOUND,
        ),
        (
            "fock_normalization",
            fock_norm.value,
            ORACLE_BOUND,
            fock_norm.value <= ORACLE_BOUND,
        ),
        (
            "fock_coincidence_amplitude",
            fock_cross.value,
            ORACLE_BOUND,
            fock_cross.value <= ORACLE_BOUND,
        ),
        (
            "two_color_normalization",
            two_norm.value,
            ORACLE_BOUND,
            two_norm.value <= ORACLE_BOUND,
        ),
        (
            "two_color_coincidence_amplitude",
            two_cross.value,
            ORACLE_BOUND,
            two_cross.value <= ORACLE_BOUND,
        ),
    ];
    let mut s = Section::default();
    match c.epsilon {
        EpsilonSampling::Fixed(spec) => s.meta_f64("epsilon", spec.epsilon()),
        EpsilonSampling::Uniform { min, max } => {
            s.meta_f64("eps_min", min);
            s.meta_f64("eps_max", max);
        }
    }
    s.meta("n_terms", c.n_terms);
    s.meta("points", c.points);
    s.meta("seed", c.seed);
    s.meta_f64("max_tail_bound", tail.value);
    s.meta_f64("max_excess_over_tail_bound", excess);
    s.meta("series_bound_violations", violations);
    let mut table = Table::new("checks", &["check", "max_deviation", "bound", "pass"]);
    for (name, dev, bound, pass) in checks {
        s.meta_f64(&format!("max_dev_{name}"), dev);
        table.push(vec![name.into(), dev.into(), bound.into(), pass.into()]);
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.3).map(|c| c.0).collect();
    s.meta("pass", failed.is_empty());
    s.tables.push(table);
    Ok(Outcome {
        report: Report::single("series-check", s),
        gate_failure: (!failed.is_empty())
            .then(|| format!("oracle disagreement: {}", failed.join(", "))),
    })
}

pub fn oracle(c: &OracleConfig) -> Result<Report, CliError> {
    let mut s = Section::default();
    s.meta_f64("epsilon", c.spec.epsilon());
    s.meta_f64("x", c.x);
    let mut table = Table::new("amplitudes", &["state", "re", "im", "probability"]);
    let (total, coincidence, c_hom) = match c.x_i {
        None => {
            let state = fock_output_degenerate(c.x, &c.spec)?;
            for (&(n_t, n_r), a) in state.amplitudes.iter().rev() {
                let label = format!("{n_t}_T {n_r}_R");
                table.push(vec![
                    label.as_str().into(),
                    a.re.into(),
                    a.im.into(),
                    a.norm_sqr().into(),
                ]);
            }
            (
                state.total_probability(),
                state.amplitude(1, 1),
                hom_amplitude_degenerate(c.x, &c.spec)?.c_hom,
            )
        }
        Some(x_i) => {
            s.meta_f64("x_i", x_i);
            let state = fock_output_two_color(c.x, x_i, &c.spec)?;
            for (label, a) in [
                ("both_T", state.both_t),
                ("both_R", state.both_r),
                ("signal_T idler_R", state.signal_t_idler_r),
                ("idler_T signal_R", state.idler_t_signal_r),
            ] {
                table.push(vec![
                    label.into(),
                    a.re.into(),
                    a.im.into(),
                    a.norm_sqr().into(),
                ]);
            }
            (
                state.total_probability(),
                state.coincidence_amplitude(),
                hom_amplitude_two_color(c.x, x_i, &c.spec)?.c_hom,
            )
        }
    };
    s.meta_f64("total_probability", total);
    s.meta_f64("c_hom_re", c_hom.re);
    s.meta_f64("c_hom_im", c_hom.im);
    s.meta_f64("p_hom", c_hom.norm_sqr());
    s.meta_f64("coincidence_deviation", (coincidence - c_hom).norm());
    s.tables.push(table);
    Ok(Report::single("oracle", s))
}
