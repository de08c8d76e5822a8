//! Layering of flags over the config file over built-in defaults, and
//! validation of the merged values.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};
use std::path::{Path, PathBuf};

use fpqsim::{solve_degenerate_zero, MirrorSpec};

use crate::args::{
    Cli, CoeffsArgs, Command, FileConfig, Format, G2Args, G2Mode, GridSize, HomScanArgs, JointKind,
    OracleArgs, SeriesArgs, SpdcArgs, TwoColorArgs,
};
use crate::CliError;

pub const DEFAULT_EPSILON: f64 = 0.5;
pub const DEFAULT_THRESHOLD: f64 = 0.01;
pub const DEFAULT_SIGMA: f64 = PI / 200.0;
pub const DEFAULT_SWEEP_POINTS: usize = 1000;
pub const DEFAULT_TWO_COLOR_EPSILONS: [f64; 3] = [0.1, 0.4, 0.7];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandConfig,
    pub t0: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CommandConfig {
    Coeffs(CoeffsConfig),
    HomScan(HomScanConfig),
    TwoColorScan(TwoColorConfig),
    SpdcSolve(SpdcConfig),
    G2(G2Config),
    SeriesCheck(SeriesConfig),
    Oracle(OracleConfig),
}

impl CommandConfig {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Coeffs(_) => "coeffs",
            Self::HomScan(_) => "hom-scan",
            Self::TwoColorScan(_) => "two-color-scan",
            Self::SpdcSolve(_) => "spdc-solve",
            Self::G2(_) => "g2",
            Self::SeriesCheck(_) => "series-check",
            Self::Oracle(_) => "oracle",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoeffsConfig {
    pub spec: MirrorSpec,
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomScanConfig {
    pub eps_min: f64,
    pub eps_max: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub eps_points: usize,
    pub x_points: usize,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoColorConfig {
    pub specs: Vec<MirrorSpec>,
    pub x_min: f64,
    pub x_max: f64,
    pub s_points: usize,
    pub i_points: usize,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpdcConfig {
    pub spec: MirrorSpec,
    pub x_p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct G2Config {
    pub spec: MirrorSpec,
    pub mode: G2Mode,
    pub joint: JointKind,
    pub center_s: f64,
    pub center_i: f64,
    pub sigma: f64,
    pub delay_s: f64,
    pub delay_i: f64,
    pub x_p: f64,
    pub sigma_sum: f64,
    pub sigma_diff: f64,
    pub tau_min: f64,
    pub tau_max: f64,
    pub tau_points: usize,
    pub freq_points: usize,
    pub dt: Option<f64>,
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsilonSampling {
    Fixed(MirrorSpec),
    Uniform { min: f64, max: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesConfig {
    pub epsilon: EpsilonSampling,
    pub n_terms: usize,
    pub points: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    pub spec: MirrorSpec,
    pub x: f64,
    pub x_i: Option<f64>,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn finite(name: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(format!("{name} must be finite, got {v}")))
    }
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if finite(name, v)? > 0.0 {
        Ok(v)
    } else {
        Err(invalid(format!("{name} must be positive, got {v}")))
    }
}

fn range(name: &str, lo: f64, hi: f64) -> Result<(f64, f64), CliError> {
    finite(name, lo)?;
    finite(name, hi)?;
    if lo < hi {
        Ok((lo, hi))
    } else {
        Err(invalid(format!("{name} range [{lo}, {hi}] is empty")))
    }
}

fn count(name: &str, n: usize, min: usize) -> Result<usize, CliError> {
    if n >= min {
        Ok(n)
    } else {
        Err(invalid(format!(
            "{name} needs at least {min} samples, got {n}"
        )))
    }
}

fn one_dimensional(grid: Option<GridSize>, default: usize) -> Result<usize, CliError> {
    match grid {
        None => Ok(default),
        Some(GridSize {
            first,
            second: None,
        }) => Ok(first),
        Some(g) => Err(invalid(format!("this command takes a 1-D grid, got {g}"))),
    }
}

fn two_dimensional(grid: Option<GridSize>, default: usize) -> (usize, usize) {
    match grid {
        None => (default, default),
        Some(GridSize { first, second }) => (first, second.unwrap_or(first)),
    }
}

fn mirror(eps: f64) -> Result<MirrorSpec, CliError> {
    Ok(MirrorSpec::new(eps)?)
}

fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

fn format_from_extension(path: &Path) -> Option<Format> {
    match path.extension()?.to_str()? {
        "json" => Some(Format::Json),
        "csv" => Some(Format::Csv),
        _ => None,
    }
}

/// Reads and parses a TOML config file.
pub fn load_file(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text)
        .map_err(|e| invalid(format!("config {}: {}", path.display(), e.message())))
}

/// Zero-coincidence phase for `spec`, or π/4 when there is none.
fn default_center(spec: &MirrorSpec) -> f64 {
    solve_degenerate_zero(spec).map_or(FRAC_PI_4, |(x_plus, _)| x_plus)
}

impl RunConfig {
    pub fn from_cli(cli: Cli) -> Result<Self, CliError> {
        let file = match &cli.config {
            Some(path) => load_file(path)?,
            None => FileConfig::default(),
        };
        Self::resolve(cli, file)
    }

    pub fn resolve(cli: Cli, file: FileConfig) -> Result<Self, CliError> {
        let epsilon = cli.epsilon.or(file.epsilon);
        let grid = cli.grid.or(file.grid);
        let threshold = positive(
            "threshold",
            pick(cli.threshold, file.threshold, DEFAULT_THRESHOLD),
        )?;
        let t0 = cli.t0.or(file.t0).map(|t| positive("t0", t)).transpose()?;
        let out = cli.out.or(file.out);
        let eps = || -> Result<MirrorSpec, CliError> { mirror(epsilon.unwrap_or(DEFAULT_EPSILON)) };

        let (command, default_format) = match cli.command {
            Command::Coeffs(a) => (Self::coeffs(a, file.coeffs, eps()?, grid)?, Format::Csv),
            Command::HomScan(a) => (
                Self::hom_scan(a, file.hom_scan, grid, threshold)?,
                Format::Csv,
            ),
            Command::TwoColorScan(a) => (
                Self::two_color(a, file.two_color_scan, epsilon, grid, threshold)?,
                Format::Csv,
            ),
            Command::SpdcSolve(a) => (Self::spdc(a, file.spdc_solve, eps()?)?, Format::Json),
            Command::G2(a) => (Self::g2(a, file.g2, eps()?, grid)?, Format::Csv),
            Command::SeriesCheck(a) => (
                Self::series(a, file.series_check, epsilon, grid)?,
                Format::Json,
            ),
            Command::Oracle(a) => (Self::oracle(a, file.oracle, eps()?)?, Format::Json),
        };
        let by_extension = out.as_deref().and_then(format_from_extension);
        Ok(Self {
            command,
            t0,
            format: pick(cli.format, file.format.or(by_extension), default_format),
            out,
        })
    }

    fn coeffs(
        a: CoeffsArgs,
        f: CoeffsArgs,
        spec: MirrorSpec,
        grid: Option<GridSize>,
    ) -> Result<CommandConfig, CliError> {
        let (x_min, x_max) = range(
            "x",
            pick(a.x_min, f.x_min, 0.0),
            pick(a.x_max, f.x_max, TAU),
        )?;
        let points = count("grid", one_dimensional(grid, 1001)?, 2)?;
        Ok(CommandConfig::Coeffs(CoeffsConfig {
            spec,
            x_min,
            x_max,
            points,
        }))
    }

    fn hom_scan(
        a: HomScanArgs,
        f: HomScanArgs,
        grid: Option<GridSize>,
        threshold: f64,
    ) -> Result<CommandConfig, CliError> {
        let (eps_min, eps_max) = range(
            "epsilon",
            pick(a.eps_min, f.eps_min, 0.0),
            pick(a.eps_max, f.eps_max, 1.0),
        )?;
        mirror(eps_min)?;
        mirror(eps_max)?;
        let (x_min, x_max) = range("x", pick(a.x_min, f.x_min, 0.0), pick(a.x_max, f.x_max, PI))?;
        let (eps_points, x_points) = two_dimensional(grid, DEFAULT_SWEEP_POINTS);
        Ok(CommandConfig::HomScan(HomScanConfig {
            eps_min,
            eps_max,
            x_min,
            x_max,
            eps_points: count("epsilon grid", eps_points, 2)?,
            x_points: count("x grid", x_points, 2)?,
            threshold,
        }))
    }

    fn two_color(
        a: TwoColorArgs,
        f: TwoColorArgs,
        epsilon: Option<f64>,
        grid: Option<GridSize>,
        threshold: f64,
    ) -> Result<CommandConfig, CliError> {
        let list = a
            .epsilons
            .or(f.epsilons)
            .or_else(|| epsilon.map(|e| vec![e]))
            .unwrap_or_else(|| DEFAULT_TWO_COLOR_EPSILONS.to_vec());
        if list.is_empty() {
            return Err(invalid("epsilon list is empty"));
        }
        let specs = list
            .into_iter()
            .map(mirror)
            .collect::<Result<Vec<_>, _>>()?;
        let (x_min, x_max) = range(
            "x",
            pick(a.x_min, f.x_min, 0.0),
            pick(a.x_max, f.x_max, TAU),
        )?;
        let (s_points, i_points) = two_dimensional(grid, DEFAULT_SWEEP_POINTS);
        Ok(CommandConfig::TwoColorScan(TwoColorConfig {
            specs,
            x_min,
            x_max,
            s_points: count("x_s grid", s_points, 2)?,
            i_points: count("x_i grid", i_points, 2)?,
            threshold,
        }))
    }

    fn spdc(a: SpdcArgs, f: SpdcArgs, spec: MirrorSpec) -> Result<CommandConfig, CliError> {
        let x_p = finite("x_p", pick(a.x_p, f.x_p, FRAC_PI_2))?;
        Ok(CommandConfig::SpdcSolve(SpdcConfig { spec, x_p }))
    }

    fn g2(
        a: G2Args,
        f: G2Args,
        spec: MirrorSpec,
        grid: Option<GridSize>,
    ) -> Result<CommandConfig, CliError> {
        let mode = pick(a.mode, f.mode, G2Mode::Separable);
        let joint = pick(a.joint, f.joint, JointKind::Product);
        let sigma = positive("sigma", pick(a.sigma, f.sigma, DEFAULT_SIGMA))?;
        let center = default_center(&spec);
        let center_s = finite("center_s", pick(a.center_s, f.center_s, center))?;
        let center_i = finite("center_i", pick(a.center_i, f.center_i, center_s))?;
        let x_p = finite("x_p", pick(a.x_p, f.x_p, center_s + center_i))?;
        let sigma_sum = positive("sigma_sum", pick(a.sigma_sum, f.sigma_sum, sigma / 4.0))?;
        let sigma_diff = positive("sigma_diff", pick(a.sigma_diff, f.sigma_diff, sigma))?;
        let reach = 2.0 / sigma;
        let (tau_min, tau_max) = range(
            "tau",
            pick(a.tau_min, f.tau_min, -reach),
            pick(a.tau_max, f.tau_max, reach),
        )?;
        let general = mode == G2Mode::General;
        // `--grid N` sets frequency samples, `NxM` also sets τ samples
        let (grid_freq, grid_tau) = match grid {
            Some(g) => (Some(g.first), g.second),
            None => (None, None),
        };
        let tau_default = grid_tau.unwrap_or(if general { 21 } else { 81 });
        let tau_points = count("tau", pick(a.tau_points, f.tau_points, tau_default), 1)?;
        let freq_points = count(
            "grid",
            grid_freq.unwrap_or(if general { 97 } else { 257 }),
            2,
        )?;
        let dt = a.dt.or(f.dt).map(|v| positive("dt", v)).transpose()?;
        let t_min = a
            .t_min
            .or(f.t_min)
            .map(|v| finite("t_min", v))
            .transpose()?;
        let t_max = a
            .t_max
            .or(f.t_max)
            .map(|v| finite("t_max", v))
            .transpose()?;
        if let (Some(lo), Some(hi)) = (t_min, t_max) {
            range("t", lo, hi)?;
        }
        if !general && joint == JointKind::Ridge {
            return Err(invalid(
                "the ridge spectrum is correlated; use --mode general",
            ));
        }
        Ok(CommandConfig::G2(G2Config {
            spec,
            mode,
            joint,
            center_s,
            center_i,
            sigma,
            delay_s: finite("delay_s", pick(a.delay_s, f.delay_s, 0.0))?,
            delay_i: finite("delay_i", pick(a.delay_i, f.delay_i, 0.0))?,
            x_p,
            sigma_sum,
            sigma_diff,
            tau_min,
            tau_max,
            tau_points,
            freq_points,
            dt,
            t_min,
            t_max,
        }))
    }

    fn series(
        a: SeriesArgs,
        f: SeriesArgs,
        epsilon: Option<f64>,
        grid: Option<GridSize>,
    ) -> Result<CommandConfig, CliError> {
        let epsilon = match epsilon {
            Some(e) => EpsilonSampling::Fixed(mirror(e)?),
            None => {
                let (min, max) = (
                    pick(a.eps_min, f.eps_min, 0.4),
                    pick(a.eps_max, f.eps_max, 1.0),
                );
                mirror(min)?;
                mirror(max)?;
                if min > max {
                    return Err(invalid(format!("epsilon range [{min}, {max}] is empty")));
                }
                EpsilonSampling::Uniform { min, max }
            }
        };
        let points = match a.points.or(f.points) {
            Some(p) => p,
            None => one_dimensional(grid, 1000)?,
        };
        Ok(CommandConfig::SeriesCheck(SeriesConfig {
            epsilon,
            n_terms: count("n_terms", pick(a.n_terms, f.n_terms, 200), 1)?,
            points: count("points", points, 1)?,
            seed: pick(a.seed, f.seed, 1),
        }))
    }

    fn oracle(a: OracleArgs, f: OracleArgs, spec: MirrorSpec) -> Result<CommandConfig, CliError> {
        let x = finite("x", pick(a.x, f.x, default_center(&spec)))?;
        let x_i = a.x_i.or(f.x_i).map(|v| finite("x_i", v)).transpose()?;
        Ok(CommandConfig::Oracle(OracleConfig { spec, x, x_i }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::Parser;

    fn resolve(args: &[&str], file: &str) -> Result<RunConfig, CliError> {
        let mut full = vec!["fpqsim"];
        full.extend_from_slice(args);
        let cli = Cli::try_parse_from(full).unwrap();
        RunConfig::resolve(cli, toml::from_str(file).unwrap())
    }

    #[test]
    fn flags_override_file_override_defaults() {
        let cfg = resolve(&["coeffs"], "").unwrap();
        match cfg.command {
            CommandConfig::Coeffs(c) => {
                assert_eq!(c.spec.epsilon(), DEFAULT_EPSILON);
                assert_eq!(c.points, 1001);
            }
            _ => unreachable!(),
        }
        let cfg = resolve(
            &["coeffs"],
            "epsilon = 0.3\ngrid = 11\n[coeffs]\nx_max = 1.0",
        )
        .unwrap();
        match cfg.command {
            CommandConfig::Coeffs(c) => {
                assert_eq!(c.spec.epsilon(), 0.3);
                assert_eq!(c.points, 11);
                assert_eq!(c.x_max, 1.0);
            }
            _ => unreachable!(),
        }
        let cfg = resolve(
            &["coeffs", "--epsilon", "0.9", "--x-max", "2"],
            "epsilon = 0.3\n[coeffs]\nx_max = 1.0",
        )
        .unwrap();
        match cfg.command {
            CommandConfig::Coeffs(c) => {
                assert_eq!(c.spec.epsilon(), 0.9);
                assert_eq!(c.x_max, 2.0);
            }
            _ => unreachable!(),
        }
        assert_eq!(cfg.format, Format::Csv);
    }

    #[test]
    fn default_formats() {
        assert_eq!(resolve(&["spdc-solve"], "").unwrap().format, Format::Json);
        assert_eq!(resolve(&["series-check"], "").unwrap().format, Format::Json);
        assert_eq!(
            resolve(&["hom-scan"], "format = \"json\"").unwrap().format,
            Format::Json
        );
        assert_eq!(
            resolve(&["hom-scan", "--format", "csv"], "format = \"json\"")
                .unwrap()
                .format,
            Format::Csv
        );
        assert_eq!(
            resolve(&["hom-scan", "--out", "a.json"], "")
                .unwrap()
                .format,
            Format::Json
        );
        assert_eq!(
            resolve(&["oracle", "--out", "a.csv"], "").unwrap().format,
            Format::Csv
        );
        assert_eq!(
            resolve(&["oracle", "--out", "a.csv", "--format", "json"], "")
                .unwrap()
                .format,
            Format::Json
        );
    }

    #[test]
    fn validation_failures() {
        assert!(matches!(
            resolve(&["coeffs", "--epsilon", "1.5"], ""),
            Err(CliError::Core(_))
        ));
        assert!(matches!(
            resolve(&["coeffs", "--grid", "3x3"], ""),
            Err(CliError::Validation(_))
        ));
        assert!(matches!(
            resolve(&["hom-scan", "--threshold", "0"], ""),
            Err(CliError::Validation(_))
        ));
        assert!(matches!(
            resolve(&["coeffs", "--x-min", "2", "--x-max", "1"], ""),
            Err(CliError::Validation(_))
        ));
        assert!(matches!(
            resolve(&["g2", "--sigma", "-1"], ""),
            Err(CliError::Validation(_))
        ));
        assert!(matches!(
            resolve(&["g2", "--joint", "ridge"], ""),
            Err(CliError::Validation(_))
        ));
        assert!(matches!(
            resolve(&["two-color-scan", "--epsilons", "0.2,2"], ""),
            Err(CliError::Core(_))
        ));
    }

    #[test]
    fn two_color_epsilon_list() {
        match resolve(&["two-color-scan"], "").unwrap().command {
            CommandConfig::TwoColorScan(c) => {
                let e: Vec<f64> = c.specs.iter().map(|s| s.epsilon()).collect();
                assert_eq!(e, DEFAULT_TWO_COLOR_EPSILONS);
            }
            _ => unreachable!(),
        }
        match resolve(&["two-color-scan", "--epsilon", "0.3"], "")
            .unwrap()
            .command
        {
            CommandConfig::TwoColorScan(c) => assert_eq!(c.specs.len(), 1),
            _ => unreachable!(),
        }
    }

    #[test]
    fn series_sampling() {
        match resolve(&["series-check"], "").unwrap().command {
            CommandConfig::SeriesCheck(c) => {
                assert_eq!(c.epsilon, EpsilonSampling::Uniform { min: 0.4, max: 1.0 });
                assert_eq!((c.n_terms, c.points), (200, 1000));
            }
            _ => unreachable!(),
        }
        match resolve(&["series-check", "--epsilon", "0.9", "--n-terms", "1"], "")
            .unwrap()
            .command
        {
            CommandConfig::SeriesCheck(c) => {
                assert!(matches!(c.epsilon, EpsilonSampling::Fixed(_)));
                assert_eq!(c.n_terms, 1);
            }
            _ => unreachable!(),
        }
    }
}
