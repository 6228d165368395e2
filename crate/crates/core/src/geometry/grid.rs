use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SAMPLES: usize = 256;
pub const MIN_SAMPLES: usize = 16;

/// Uniform periodic grid of tangent angles `θ_k = 2πk/N` on `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AngleGrid {
    n_samples: usize,
}

impl AngleGrid {
    pub fn new(n_samples: usize) -> Result<Self> {
        if n_samples < MIN_SAMPLES {
            return Err(Error::InvalidGrid(format!(
                "n_samples = {n_samples} is below the minimum {MIN_SAMPLES}"
            )));
        }
        if n_samples % 2 != 0 {
            return Err(Error::InvalidGrid(format!("n_samples = {n_samples} must be even")));
        }
        Ok(Self { n_samples })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n_samples
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n_samples == 0
    }

    #[inline]
    pub fn delta_theta(&self) -> f64 {
        2.0 * PI / self.n_samples as f64
    }

    #[inline]
    pub fn theta(&self, k: usize) -> f64 {
        k as f64 * self.delta_theta()
    }

    pub fn thetas(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_samples).map(move |k| self.theta(k))
    }

    /// Sample a function of the angle on the grid.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.thetas().map(f).collect()
    }

    /// Whether a dihedral group of order `2n` maps this grid onto itself and
    /// `π/n` is a node.
    pub fn supports_symmetry(&self, n: usize) -> bool {
        n >= 1 && self.n_samples % (2 * n) == 0
    }
}

impl Default for AngleGrid {
    fn default() -> Self {
        Self { n_samples: DEFAULT_SAMPLES }
    }
}
