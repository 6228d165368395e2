use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::grid::AngleGrid;
use crate::error::{Error, Result};
use crate::spectral;

pub const DEFAULT_CLOSURE_TOL: f64 = 1e-8;

/// A strictly convex closed curve described by its curvature `ρ(θ)` as a
/// function of the tangent angle, plus the position of the point with
/// tangent angle zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProfileFile", into = "ProfileFile")]
pub struct CurvatureProfile {
    grid: AngleGrid,
    rho: Vec<f64>,
    symmetry_order: usize,
    base_point: [f64; 2],
}

/// On-disk JSON layout of a profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileFile {
    pub n_samples: usize,
    pub rho: Vec<f64>,
    pub symmetry_order: usize,
    pub base_point: [f64; 2],
}

impl TryFrom<ProfileFile> for CurvatureProfile {
    type Error = Error;

    fn try_from(f: ProfileFile) -> Result<Self> {
        if f.rho.len() != f.n_samples {
            return Err(Error::InvalidGrid(format!(
                "n_samples = {} but rho has {} entries",
                f.n_samples,
                f.rho.len()
            )));
        }
        CurvatureProfile::new(f.rho, f.symmetry_order, f.base_point)
    }
}

impl From<CurvatureProfile> for ProfileFile {
    fn from(p: CurvatureProfile) -> Self {
        ProfileFile {
            n_samples: p.grid.len(),
            rho: p.rho,
            symmetry_order: p.symmetry_order,
            base_point: p.base_point,
        }
    }
}

impl CurvatureProfile {
    /// Checks positivity, grid shape and symmetry compatibility. Closure is
    /// not enforced here; see [`CurvatureProfile::validate`] and
    /// [`project_closure`].
    pub fn new(rho: Vec<f64>, symmetry_order: usize, base_point: [f64; 2]) -> Result<Self> {
        let grid = AngleGrid::new(rho.len())?;
        if let Some((node, &value)) =
            rho.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(Error::PositivityLost { node, value });
        }
        if symmetry_order >= 1 && !grid.supports_symmetry(symmetry_order) {
            return Err(Error::InvalidGrid(format!(
                "symmetry order {symmetry_order} needs 2n | n_samples, got {}",
                grid.len()
            )));
        }
        Ok(Self { grid, rho, symmetry_order, base_point })
    }

    /// Build from the radius of curvature `1/ρ`.
    pub fn from_radius(radius: Vec<f64>, symmetry_order: usize, base_point: [f64; 2]) -> Result<Self> {
        if let Some((_, &r)) = radius.iter().enumerate().find(|(_, r)| !(**r > 0.0)) {
            return Err(Error::NotConvex { min_radius: r });
        }
        Self::new(radius.into_iter().map(|r| 1.0 / r).collect(), symmetry_order, base_point)
    }

    /// Constant curvature `1/radius`, base point at the bottom of a circle
    /// centered at the origin.
    pub fn circle(n_samples: usize, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidConfig(format!("radius must be positive, got {radius}")));
        }
        Self::new(vec![1.0 / radius; n_samples], 0, [0.0, -radius])
    }

    #[inline]
    pub fn grid(&self) -> AngleGrid {
        self.grid
    }

    #[inline]
    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    #[inline]
    pub fn symmetry_order(&self) -> usize {
        self.symmetry_order
    }

    #[inline]
    pub fn base_point(&self) -> [f64; 2] {
        self.base_point
    }

    pub fn with_base_point(mut self, base_point: [f64; 2]) -> Self {
        self.base_point = base_point;
        self
    }

    pub fn with_symmetry_order(self, n: usize) -> Result<Self> {
        Self::new(self.rho, n, self.base_point)
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn radius_of_curvature(&self) -> Vec<f64> {
        self.rho.iter().map(|r| 1.0 / r).collect()
    }

    pub fn rho_min(&self) -> f64 {
        self.rho.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn rho_max(&self) -> f64 {
        self.rho.iter().copied().fold(0.0, f64::max)
    }

    /// Perimeter `∫ dθ/ρ`.
    pub fn perimeter(&self) -> f64 {
        spectral::integrate(&self.radius_of_curvature())
    }

    /// Enclosed area from the Fourier modes of `1/ρ`: with `1/ρ = p + p''`,
    /// `λ = ½∫p(p+p'')dθ`. Translation modes drop out, so this does not need
    /// a closed or positioned curve.
    pub fn area(&self) -> f64 {
        fourier_area(&self.radius_of_curvature())
    }

    /// Isoperimetric ratio `h = σ/λ`.
    pub fn isoperimetric_ratio(&self) -> f64 {
        self.perimeter() / self.area()
    }

    /// `(|∫cosθ/ρ dθ|, |∫sinθ/ρ dθ|)`.
    pub fn closure_residuals(&self) -> (f64, f64) {
        let q = self.radius_of_curvature();
        let (c, s) = self.grid.thetas().zip(&q).fold((0.0, 0.0), |(c, s), (t, r)| {
            (c + t.cos() * r, s + t.sin() * r)
        });
        let w = self.grid.delta_theta();
        ((c * w).abs(), (s * w).abs())
    }

    pub fn closure_residual(&self) -> f64 {
        let (c, s) = self.closure_residuals();
        c.max(s)
    }

    pub fn is_closed(&self, tol: f64) -> bool {
        self.closure_residual() <= tol
    }

    /// Max deviation from `G_n` invariance (rotation by `2π/n` and the
    /// reflection `θ ↦ −θ`).
    pub fn symmetry_residual(&self, n: usize) -> f64 {
        if n == 0 || !self.grid.supports_symmetry(n) {
            return f64::INFINITY;
        }
        let len = self.len();
        let shift = len / n;
        let scale = self.rho_max().max(1e-300);
        (0..len)
            .map(|k| {
                let rot = (self.rho[k] - self.rho[(k + shift) % len]).abs();
                let refl = (self.rho[k] - self.rho[(len - k) % len]).abs();
                rot.max(refl)
            })
            .fold(0.0, f64::max)
            / scale
    }

    /// Largest forward increase `ρ[k+1] − ρ[k]` over the nodes of
    /// `[0, π/n]`. Non-positive when `ρ` is non-increasing on the sector.
    pub fn sector_max_increase(&self, n: usize) -> f64 {
        let end = self.len() / (2 * n.max(1));
        (0..end).map(|k| self.rho[k + 1] - self.rho[k]).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Full invariant check: positivity (by construction), closure, and the
    /// declared symmetry.
    pub fn validate(&self, closure_tol: f64) -> Result<()> {
        let gap = self.closure_residual();
        if gap > closure_tol {
            return Err(Error::NotClosed { gap, threshold: closure_tol });
        }
        if self.symmetry_order >= 1 {
            let residual = self.symmetry_residual(self.symmetry_order);
            if residual > 1e-9 {
                return Err(Error::NotSymmetric { order: self.symmetry_order, residual });
            }
        }
        Ok(())
    }

    /// Average over the `G_n` orbit of the declared symmetry order. No-op for
    /// order 0.
    pub fn symmetrized(&self) -> Self {
        let n = self.symmetry_order;
        if n == 0 {
            return self.clone();
        }
        let rho = symmetrize_values(&self.rho, n);
        Self { rho, ..self.clone() }
    }

    /// Trigonometric interpolation onto a grid `factor` times finer. The
    /// radius of curvature is interpolated, since it is linear in the curve.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        let q = spectral::refine(&self.radius_of_curvature(), factor);
        Self::from_radius(q, self.symmetry_order, self.base_point)
    }

    pub(crate) fn replace_rho(&self, rho: Vec<f64>, base_point: [f64; 2]) -> Result<Self> {
        Self::new(rho, self.symmetry_order, base_point)
    }
}

/// Orbit average of grid values under `G_n`.
pub(crate) fn symmetrize_values(values: &[f64], n: usize) -> Vec<f64> {
    let len = values.len();
    let shift = len / n;
    let mut out = vec![0.0; len];
    for (k, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for j in 0..n {
            acc += values[(k + j * shift) % len];
            acc += values[(len - k + j * shift) % len];
        }
        *o = acc / (2 * n) as f64;
    }
    out
}

/// `½∫p q dθ` with `q = p + p''`, evaluated on the Fourier modes of `q`.
/// Uses the trapezoid weights so the result coincides with the curve-based
/// area integral on the same grid.
pub(crate) fn fourier_area(radius: &[f64]) -> f64 {
    let (a, b) = spectral::real_coefficients(radius);
    let half = radius.len() / 2;
    let mut acc = 2.0 * PI * a[0] * a[0];
    for k in 2..half {
        let kk = (k * k) as f64;
        acc += PI * (a[k] * a[k] + b[k] * b[k]) / (1.0 - kk);
    }
    let kn = (half * half) as f64;
    acc += 2.0 * PI * a[half] * a[half] / (1.0 - kn);
    0.5 * acc
}

/// `σ² − 4πλ` summed mode by mode, so the mean cancels exactly.
pub(crate) fn fourier_deficit(radius: &[f64]) -> f64 {
    let (a, b) = spectral::real_coefficients(radius);
    let half = radius.len() / 2;
    let mut acc = 0.0;
    for k in 2..half {
        acc += (a[k] * a[k] + b[k] * b[k]) / ((k * k) as f64 - 1.0);
    }
    acc += 2.0 * a[half] * a[half] / ((half * half) as f64 - 1.0);
    2.0 * PI * PI * acc
}

/// Remove the first Fourier harmonic of `1/ρ` so that the closure integrals
/// vanish.
pub fn project_closure(profile: &CurvatureProfile) -> Result<CurvatureProfile> {
    let grid = profile.grid();
    let q = profile.radius_of_curvature();
    let n = q.len() as f64;
    let (sc, ss) = grid.thetas().zip(&q).fold((0.0, 0.0), |(c, s), (t, r)| {
        (c + t.cos() * r, s + t.sin() * r)
    });
    let a1 = 2.0 * sc / n;
    let b1 = 2.0 * ss / n;
    let projected: Vec<f64> =
        grid.thetas().zip(&q).map(|(t, r)| r - a1 * t.cos() - b1 * t.sin()).collect();
    if let Some((node, &r)) = projected.iter().enumerate().find(|(_, r)| !(**r > 0.0)) {
        return Err(Error::PositivityLost { node, value: 1.0 / r });
    }
    let rho = projected.into_iter().map(|r| 1.0 / r).collect();
    profile.replace_rho(rho, profile.base_point())
}
