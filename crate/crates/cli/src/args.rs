use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(
    name = "fpqsim",
    version,
    about = "Two-photon interference at a Fabry-Perot cavity"
)]
pub struct Cli {
    /// TOML file with defaults; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Single-mirror amplitude transmissivity ε ∈ [0, 1].
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub epsilon: Option<f64>,
    /// One-way transit time t₀ in seconds; adds physical-unit columns.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub t0: Option<f64>,
    /// Sample counts, `N` or `NxM`.
    #[arg(long, global = true)]
    pub grid: Option<GridSize>,
    /// Cut-off for the sub-threshold mask.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub threshold: Option<f64>,
    /// Output path; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cavity transmission and reflection over a phase grid.
    Coeffs(CoeffsArgs),
    /// Degenerate coincidence probability over (ε, x).
    HomScan(HomScanArgs),
    /// Two-color coincidence probability over (x_s, x_i), one scan per ε.
    TwoColorScan(TwoColorArgs),
    /// Signal phases compatible with a pump phase.
    SpdcSolve(SpdcArgs),
    /// Coincidence density and its time integral for Gaussian packets.
    G2(G2Args),
    /// Oracle self-test against the closed forms.
    SeriesCheck(SeriesArgs),
    /// Output Fock amplitudes for one input.
    Oracle(OracleArgs),
}

impl Command {
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

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
#[command(allow_negative_numbers = true)]
pub struct CoeffsArgs {
    #[arg(long)]
    pub x_min: Option<f64>,
    #[arg(long)]
    pub x_max: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
#[command(allow_negative_numbers = true)]
pub struct HomScanArgs {
    #[arg(long)]
    pub eps_min: Option<f64>,
    #[arg(long)]
    pub eps_max: Option<f64>,
    #[arg(long)]
    pub x_min: Option<f64>,
    #[arg(long)]
    pub x_max: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
#[command(allow_negative_numbers = true)]
pub struct TwoColorArgs {
    /// Comma-separated ε values.
    #[arg(long, value_delimiter = ',')]
    pub epsilons: Option<Vec<f64>>,
    #[arg(long)]
    pub x_min: Option<f64>,
    #[arg(long)]
    pub x_max: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
#[command(allow_negative_numbers = true)]
pub struct SpdcArgs {
    /// Pump phase ω_p t₀.
    #[arg(long)]
    pub x_p: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum G2Mode {
    Separable,
    General,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointKind {
    /// Outer product of the two Gaussian packets.
    Product,
    /// Energy-conserving ridge around `ω + ω′ = x_p`.
    Ridge,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
#[command(allow_negative_numbers = true)]
pub struct G2Args {
    #[arg(long, value_enum)]
    pub mode: Option<G2Mode>,
    #[arg(long, value_enum)]
    pub joint: Option<JointKind>,
    #[arg(long)]
    pub center_s: Option<f64>,
    #[arg(long)]
    pub center_i: Option<f64>,
    /// Spectral standard deviation of each packet.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub delay_s: Option<f64>,
    #[arg(long)]
    pub delay_i: Option<f64>,
    /// Pump phase for the ridge spectrum.
    #[arg(long)]
    pub x_p: Option<f64>,
    #[arg(long)]
    pub sigma_sum: Option<f64>,
    #[arg(long)]
    pub sigma_diff: Option<f64>,
    #[arg(long)]
    pub tau_min: Option<f64>,
    #[arg(long)]
    pub tau_max: Option<f64>,
    #[arg(long)]
    pub tau_points: Option<usize>,
    /// Time step; chosen from the bandwidth when absent.
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_min: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
#[command(allow_negative_numbers = true)]
pub struct SeriesArgs {
    #[arg(long)]
    pub n_terms: Option<usize>,
    /// Number of random (ε, x) samples.
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub eps_min: Option<f64>,
    #[arg(long)]
    pub eps_max: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
#[command(allow_negative_numbers = true)]
pub struct OracleArgs {
    #[arg(long)]
    pub x: Option<f64>,
    /// Second photon's phase; omitted for the degenerate case.
    #[arg(long)]
    pub x_i: Option<f64>,
}

/// `N` or `NxM` sample counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSize {
    pub first: usize,
    pub second: Option<usize>,
}

impl fmt::Display for GridSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.second {
            Some(m) => write!(f, "{}x{}", self.first, m),
            None => write!(f, "{}", self.first),
        }
    }
}

impl FromStr for GridSize {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse = |p: &str| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| format!("invalid grid size {s:?}, expected N or NxM"))
        };
        match s.split_once(['x', 'X']) {
            Some((a, b)) => Ok(Self {
                first: parse(a)?,
                second: Some(parse(b)?),
            }),
            None => Ok(Self {
                first: parse(s)?,
                second: None,
            }),
        }
    }
}

impl<'de> Deserialize<'de> for GridSize {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Count(usize),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Count(n) => Ok(Self {
                first: n,
                second: None,
            }),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Contents of a `--config` file.
///
/// ```toml
/// epsilon = 0.5
/// grid = "200x300"
///
/// [g2]
/// sigma = 0.0157
/// ```
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub epsilon: Option<f64>,
    pub t0: Option<f64>,
    pub grid: Option<GridSize>,
    pub threshold: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    #[serde(default)]
    pub coeffs: CoeffsArgs,
    #[serde(default, rename = "hom-scan")]
    pub hom_scan: HomScanArgs,
    #[serde(default, rename = "two-color-scan")]
    pub two_color_scan: TwoColorArgs,
    #[serde(default, rename = "spdc-solve")]
    pub spdc_solve: SpdcArgs,
    #[serde(default)]
    pub g2: G2Args,
    #[serde(default, rename = "series-check")]
    pub series_check: SeriesArgs,
    #[serde(default)]
    pub oracle: OracleArgs,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_size_parsing() {
        assert_eq!(
            "64".parse::<GridSize>().unwrap(),
            GridSize {
                first: 64,
                second: None
            }
        );
        assert_eq!(
            "10x20".parse::<GridSize>().unwrap(),
            GridSize {
                first: 10,
                second: Some(20)
            }
        );
        assert!("10x".parse::<GridSize>().is_err());
        assert!("-3".parse::<GridSize>().is_err());
        assert_eq!(
            GridSize {
                first: 3,
                second: Some(4)
            }
            .to_string(),
            "3x4"
        );
    }

    #[test]
    fn file_config_sections() {
        let cfg: FileConfig = toml::from_str(
            r#"
            epsilon = 0.3
            grid = 50
            format = "json"
            [hom-scan]
            eps_max = 0.9
            [two-color-scan]
            epsilons = [0.2, 0.6]
            "#,
        )
        .unwrap();
        assert_eq!(cfg.epsilon, Some(0.3));
        assert_eq!(
            cfg.grid,
            Some(GridSize {
                first: 50,
                second: None
            })
        );
        assert_eq!(cfg.format, Some(Format::Json));
        assert_eq!(cfg.hom_scan.eps_max, Some(0.9));
        assert_eq!(cfg.two_color_scan.epsilons, Some(vec![0.2, 0.6]));
        assert!(toml::from_str::<FileConfig>("epsilonn = 1").is_err());
    }

    #[test]
    fn cli_parses_negative_values() {
        let cli = Cli::try_parse_from(["fpqsim", "coeffs", "--x-min", "-1.5", "--epsilon", "0.2"])
            .unwrap();
        match cli.command {
            Command::Coeffs(a) => assert_eq!(a.x_min, Some(-1.5)),
            _ => unreachable!(),
        }
        assert_eq!(cli.epsilon, Some(0.2));
    }
}
