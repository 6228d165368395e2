//! Profiles built from support functions.

use super::grid::AngleGrid;
use super::profile::CurvatureProfile;
use crate::error::{Error, Result};
use crate::spectral;

/// `1/ρ = p + p''` with the base point `C(0) = (p'(0), −p(0))`.
pub fn from_support(support: &[f64], symmetry_order: usize) -> Result<CurvatureProfile> {
    AngleGrid::new(support.len())?;
    let (d1, d2) = spectral::first_and_second_derivative(support);
    let radius: Vec<f64> = support.iter().zip(&d2).map(|(p, pp)| p + pp).collect();
    let min_radius = radius.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min_radius > 0.0) {
        return Err(Error::NotConvex { min_radius });
    }
    CurvatureProfile::from_radius(radius, symmetry_order, [d1[0], -support[0]])
}

/// Ellipse with semi-axis `a` along x and `b` along y, centered at the origin.
pub fn ellipse(n_samples: usize, a: f64, b: f64) -> Result<CurvatureProfile> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::InvalidConfig(format!("semi-axes must be positive, got ({a}, {b})")));
    }
    let grid = AngleGrid::new(n_samples)?;
    let p = grid.sample(|t| (a * a * t.sin().powi(2) + b * b * t.cos().powi(2)).sqrt());
    let order = if grid.supports_symmetry(2) { 2 } else { 0 };
    from_support(&p, order)
}

/// `p(θ) = a₀ + Σ_k a_k cos(k n θ)` with `coefficients = [a₀, a₁, ...]`.
pub fn support_fourier(n_samples: usize, n: usize, coefficients: &[f64]) -> Result<CurvatureProfile> {
    if coefficients.is_empty() || n == 0 {
        return Err(Error::InvalidConfig("need n >= 1 and at least a0".into()));
    }
    let grid = AngleGrid::new(n_samples)?;
    let p = grid.sample(|t| {
        coefficients
            .iter()
            .enumerate()
            .map(|(k, a)| a * ((k * n) as f64 * t).cos())
            .sum()
    });
    let order = if n >= 2 && grid.supports_symmetry(n) { n } else { 0 };
    from_support(&p, order)
}
