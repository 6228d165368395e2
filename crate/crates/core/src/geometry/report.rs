use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::curve::{reconstruct_with_tolerance, PlanarCurve, Point};
use super::profile::{fourier_deficit, CurvatureProfile};
use crate::error::Result;
use crate::spectral;

/// Relative slack allowed in the static inequality audits.
pub const EPS_NUM: f64 = 1e-9;

/// Scalar functionals of one profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryReport {
    pub sigma: f64,
    pub lambda: f64,
    pub h: f64,
    pub entropy: f64,
    pub deficit: f64,
    pub psi: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    pub pseudo_median: f64,
    pub r_int: f64,
    pub r_out: f64,
    /// True when the radii come from the symmetry center rather than the
    /// approximate center search.
    pub radii_exact: bool,
    /// `∫ρ dθ − πσ/λ`
    pub gage_slack: f64,
    /// `Ent − π ln(π/λ)`
    pub green_osher_slack: f64,
    /// `deficit − π²(r_out − r_int)²`
    pub bonnesen_slack: f64,
    pub bonnesen_ok: bool,
    /// `∫ρ dθ = ∫ρ² ds`
    pub rho_integral: f64,
    /// `∫ρ^{-2} dθ`
    pub inv_rho_sq_integral: f64,
    pub closure_residual: f64,
}

impl GeometryReport {
    /// `σ²/λ`
    pub fn planar_ratio(&self) -> f64 {
        self.sigma * self.sigma / self.lambda
    }

    /// Every static inequality that must hold for a strictly convex curve,
    /// with its slack (non-negative when satisfied).
    pub fn inequality_slacks(&self) -> Vec<InequalityCheck> {
        let rel = |slack: f64, scale: f64| InequalityCheck::new(slack, EPS_NUM * scale.abs().max(1.0));
        vec![
            InequalityCheck { name: "isoperimetric", ..rel(self.deficit, self.sigma * self.sigma) },
            InequalityCheck { name: "gage", ..rel(self.gage_slack, self.rho_integral) },
            InequalityCheck {
                name: "bonnesen",
                ..rel(self.bonnesen_slack, self.sigma * self.sigma)
            },
            InequalityCheck {
                name: "green_osher",
                ..rel(self.green_osher_slack, self.entropy.abs() + PI * (PI / self.lambda).ln().abs())
            },
            InequalityCheck { name: "h_lower_2rho_min", ..rel(self.h - 2.0 * self.rho_min, self.h) },
            InequalityCheck { name: "h_upper_2rho_max", ..rel(2.0 * self.rho_max - self.h, self.h) },
            InequalityCheck { name: "pseudo_median_below_h", ..rel(self.h - self.pseudo_median, self.h) },
        ]
    }

    pub fn all_inequalities_hold(&self) -> bool {
        self.inequality_slacks().iter().all(|c| c.holds)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub name: &'static str,
    pub slack: f64,
    pub tolerance: f64,
    pub holds: bool,
}

impl InequalityCheck {
    fn new(slack: f64, tolerance: f64) -> Self {
        Self { name: "", slack, tolerance, holds: slack >= -tolerance }
    }
}

pub fn geometry_report(profile: &CurvatureProfile) -> Result<GeometryReport> {
    let curve = reconstruct_with_tolerance(profile, 1e-6)?;
    Ok(report_with_curve(profile, &curve))
}

pub(crate) fn report_with_curve(profile: &CurvatureProfile, curve: &PlanarCurve) -> GeometryReport {
    let rho = profile.rho();
    let q = profile.radius_of_curvature();
    let sigma = spectral::integrate(&q);
    let lambda = profile.area();
    let h = sigma / lambda;
    let entropy = spectral::integrate(&rho.iter().map(|r| r.ln()).collect::<Vec<_>>());
    let rho_integral = spectral::integrate(rho);
    let inv_rho_sq_integral = spectral::integrate(&q.iter().map(|r| r * r).collect::<Vec<_>>());
    let deficit = fourier_deficit(&q);
    let radii = inscribed_circumscribed(profile, curve);
    let gap = radii.r_out - radii.r_int;
    let bonnesen_slack = deficit - PI * PI * gap * gap;
    let bonnesen_tol = EPS_NUM * (sigma * sigma).max(1.0);
    GeometryReport {
        sigma,
        lambda,
        h,
        entropy,
        deficit,
        psi: (sigma / (lambda * lambda)).ln(),
        rho_min: profile.rho_min(),
        rho_max: profile.rho_max(),
        pseudo_median: pseudo_median(profile),
        r_int: radii.r_int,
        r_out: radii.r_out,
        radii_exact: radii.exact,
        gage_slack: rho_integral - PI * h,
        green_osher_slack: entropy - PI * (PI / lambda).ln(),
        bonnesen_slack,
        bonnesen_ok: bonnesen_slack >= -bonnesen_tol,
        rho_integral,
        inv_rho_sq_integral,
        closure_residual: profile.closure_residual(),
    }
}

/// `(L/π)² ∫f'² − ∫f²` for `f` sampled at `L·k/(m−1)`, `k = 0..m`, with
/// `f(0) = f(L) = 0`. Trapezoid integrals, second-order differences.
pub fn wirtinger_slack(f: &[f64], length: f64) -> f64 {
    let m = f.len();
    assert!(m >= 3, "need at least three samples");
    let h = length / (m - 1) as f64;
    let d: Vec<f64> = (0..m)
        .map(|k| match k {
            0 => (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h),
            k if k == m - 1 => (3.0 * f[k] - 4.0 * f[k - 1] + f[k - 2]) / (2.0 * h),
            k => (f[k + 1] - f[k - 1]) / (2.0 * h),
        })
        .collect();
    let trap = |g: &dyn Fn(usize) -> f64| h * ((0..m).map(g).sum::<f64>() - 0.5 * (g(0) + g(m - 1)));
    (length / PI).powi(2) * trap(&|k| d[k] * d[k]) - trap(&|k| f[k] * f[k])
}

/// Largest `β` such that `ρ > β` on some θ-window of length `π`, taken over
/// the grid windows of `N/2 + 1` consecutive nodes.
pub fn pseudo_median(profile: &CurvatureProfile) -> f64 {
    let rho = profile.rho();
    let n = rho.len();
    let w = n / 2 + 1;
    (0..n)
        .map(|start| (0..w).map(|j| rho[(start + j) % n]).fold(f64::INFINITY, f64::min))
        .fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, Copy)]
pub struct Radii {
    pub r_int: f64,
    pub r_out: f64,
    pub inner_center: Point,
    pub outer_center: Point,
    pub exact: bool,
}

/// Inradius and circumradius. Symmetric profiles (order >= 2) use the
/// symmetry center; otherwise a coarse grid search with two zoom levels
/// brackets the Chebyshev centers.
pub fn inscribed_circumscribed(profile: &CurvatureProfile, curve: &PlanarCurve) -> Radii {
    if profile.symmetry_order() >= 2 {
        let c = curve.node_centroid();
        let r_int = curve.support_about(c).into_iter().fold(f64::INFINITY, f64::min);
        let r_out = curve.max_distance_from(c);
        return Radii { r_int, r_out, inner_center: c, outer_center: c, exact: true };
    }
    let (lo, hi) = curve.bounding_box();
    let inner = grid_search(lo, hi, |c| -min_support(curve, c));
    let outer = grid_search(lo, hi, |c| curve.max_distance_from(c));
    Radii {
        r_int: min_support(curve, inner),
        r_out: curve.max_distance_from(outer),
        inner_center: inner,
        outer_center: outer,
        exact: false,
    }
}

fn min_support(curve: &PlanarCurve, c: Point) -> f64 {
    curve.support_about(c).into_iter().fold(f64::INFINITY, f64::min)
}

const SEARCH_CELLS: usize = 32;
const SEARCH_LEVELS: usize = 2;

/// Minimize `f` over a box: a 32×32 scan, then two rescans of the 2-cell
/// neighbourhood of the incumbent.
fn grid_search(lo: Point, hi: Point, f: impl Fn(Point) -> f64) -> Point {
    let mut lo = lo;
    let mut hi = hi;
    let mut best = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
    let mut best_val = f(best);
    for _ in 0..=SEARCH_LEVELS {
        let step = [(hi[0] - lo[0]) / SEARCH_CELLS as f64, (hi[1] - lo[1]) / SEARCH_CELLS as f64];
        for i in 0..=SEARCH_CELLS {
            for j in 0..=SEARCH_CELLS {
                let c = [lo[0] + i as f64 * step[0], lo[1] + j as f64 * step[1]];
                let v = f(c);
                if v < best_val {
                    best_val = v;
                    best = c;
                }
            }
        }
        lo = [best[0] - step[0], best[1] - step[1]];
        hi = [best[0] + step[0], best[1] + step[1]];
    }
    best
}
