use crate::error::{check_finite, Error, Result};

/// Uniformly spaced samples `start + k·step`, `k = 0..len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid {
    start: f64,
    step: f64,
    len: usize,
}

impl UniformGrid {
    pub fn new(start: f64, step: f64, len: usize) -> Result<Self> {
        check_finite("grid start", start)?;
        check_finite("grid step", step)?;
        if step <= 0.0 {
            return Err(Error::InvalidGrid(format!("step {step} must be positive")));
        }
        if len < 2 {
            return Err(Error::InvalidGrid(format!(
                "{len} samples, need at least 2"
            )));
        }
        Ok(Self { start, step, len })
    }

    /// `len` samples spanning `[start, stop]` inclusive.
    pub fn spanning(start: f64, stop: f64, len: usize) -> Result<Self> {
        check_finite("grid stop", stop)?;
        if len < 2 {
            return Err(Error::InvalidGrid(format!(
                "{len} samples, need at least 2"
            )));
        }
        Self::new(start, (stop - start) / (len - 1) as f64, len)
    }

    /// `len` samples centred on `center` covering `center ± half_width`.
    pub fn centered(center: f64, half_width: f64, len: usize) -> Result<Self> {
        Self::spanning(center - half_width, center + half_width, len)
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn stop(&self) -> f64 {
        self.at(self.len - 1)
    }

    pub fn at(&self, k: usize) -> f64 {
        self.start + k as f64 * self.step
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len).map(|k| self.at(k)).collect()
    }

    /// Trapezoid weight of sample `k`.
    pub fn weight(&self, k: usize) -> f64 {
        if k == 0 || k + 1 == self.len {
            0.5 * self.step
        } else {
            self.step
        }
    }

    /// Largest sample magnitude.
    pub fn max_abs(&self) -> f64 {
        self.start.abs().max(self.stop().abs())
    }

    /// Same spacing, `before` extra samples in front and `after` behind.
    pub fn padded(&self, before: usize, after: usize) -> Self {
        Self {
            start: self.start - before as f64 * self.step,
            step: self.step,
            len: self.len + before + after,
        }
    }
}

/// `n` evenly spaced values over `[start, stop]`.
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (stop - start) / (n - 1) as f64;
            (0..n)
                .map(|k| {
                    if k + 1 == n {
                        stop
                    } else {
                        start + k as f64 * step
                    }
                })
                .collect()
        }
    }
}

pub(crate) fn check_increasing(name: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidGrid(format!("{name} is empty")));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidGrid(format!("{name} contains {v}")));
    }
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid(format!(
            "{name} is not strictly increasing"
        )));
    }
    Ok(())
}
