use thiserror::Error;

/// Errors raised by the simulation routines.
///
/// `Domain` covers plain parameter validation. The remaining variants are
/// numerical preconditions on grids and quadrature.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("{name} = {value} is outside its domain: {reason}")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("frequency grid [{start}, {stop}] does not cover center ± {required_sigmas}σ")]
    GridTooNarrow {
        start: f64,
        stop: f64,
        required_sigmas: f64,
    },

    #[error("time grid aliases the spectrum: {0}")]
    Aliasing(String),

    #[error("product grid of {requested} samples exceeds the cap of {cap}")]
    Resource { requested: usize, cap: usize },

    #[error("amplitude is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value,
            reason: "must be finite",
        })
    }
}
