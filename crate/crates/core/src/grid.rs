//! Functions on [0, 1] sampled on a uniform grid.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Grid resolution used when nothing else is configured.
pub const DEFAULT_INTERVALS: usize = 1024;

/// Values v_0..v_N of a function at t_i = i/N, N ≥ 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 3 {
            return Err(domain(format!(
                "a grid needs at least 3 points (N ≥ 2), got {}",
                values.len()
            )));
        }
        Ok(Self { values })
    }

    /// Samples `f` at t_i = i/`intervals`.
    pub fn from_fn(intervals: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let n = intervals.max(1);
        Self::new((0..=n).map(|i| f(i as f64 / n as f64)).collect())
    }

    pub fn constant(intervals: usize, value: f64) -> Result<Self> {
        Self::from_fn(intervals, |_| value)
    }

    /// N, the number of grid intervals.
    pub fn intervals(&self) -> usize {
        self.values.len() - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn t(&self, i: usize) -> f64 {
        i as f64 / self.intervals() as f64
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |i| self.t(i))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn min_abs(&self) -> f64 {
        self.values
            .iter()
            .fold(f64::INFINITY, |acc, v| acc.min(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// True when all values coincide.
    pub fn is_constant(&self) -> bool {
        self.values.iter().all(|v| *v == self.values[0])
    }

    /// Checks membership in Ē: finite and nonpositive everywhere.
    pub fn ensure_threshold(&self) -> Result<()> {
        for (i, v) in self.values.iter().enumerate() {
            if !v.is_finite() {
                return Err(domain(format!("non-finite value {v} at t = {}", self.t(i))));
            }
            if *v > 0.0 {
                return Err(domain(format!(
                    "threshold functions must be nonpositive; got {v} at t = {}",
                    self.t(i)
                )));
            }
        }
        Ok(())
    }

    pub fn ensure_same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::GridMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        Ok(())
    }
}

/// Named threshold functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdPreset {
    /// f ≡ −1.
    Constant,
    /// f(t) = −e^{−t}.
    ExpDecay,
}

impl ThresholdPreset {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "constant" => Ok(Self::Constant),
            "exp-decay" => Ok(Self::ExpDecay),
            other => Err(domain(format!(
                "unknown threshold preset '{other}' (expected constant or exp-decay)"
            ))),
        }
    }

    pub fn grid(self, intervals: usize) -> GridFunction {
        let f = match self {
            Self::Constant => GridFunction::constant(intervals, -1.0),
            Self::ExpDecay => GridFunction::from_fn(intervals, |t| -(-t).exp()),
        };
        f.expect("presets use at least two intervals")
    }
}
