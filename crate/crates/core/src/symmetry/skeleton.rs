use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{class_membership, projection_pi, SupportFourier};
use crate::error::{Error, Result};
use crate::geometry::report::EPS_NUM;
use crate::geometry::{geometry_report, reconstruct_curve, CurvatureProfile, Point};

/// Star skeleton `G_n({0} × [−y₀, 0])` placed at the curve's center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkeletonStar {
    pub n: usize,
    pub y0: f64,
    pub vertices: Vec<Point>,
    pub center: Point,
    /// `n·y₀`.
    pub length: f64,
    /// `|C(0) − center|`.
    pub b: f64,
    /// `|C(π/n) − center|`.
    pub a: f64,
}

impl SkeletonStar {
    pub fn is_degenerate(&self) -> bool {
        self.y0 <= EPS_NUM * self.b.max(1.0)
    }
}

pub fn extract_skeleton(profile: &CurvatureProfile, n: usize) -> Result<SkeletonStar> {
    let m = class_membership(profile, n);
    if !m.in_tn {
        return Err(Error::NotSymmetric { order: n, residual: m.symmetry_residual });
    }
    if !m.in_sn {
        return Err(Error::NotInSn { order: n, margin: m.pi_slope_margin });
    }
    let proj = projection_pi(profile, n)?;
    let curve = reconstruct_curve(profile)?;
    let c = proj.center;
    let y0 = (proj.b - 1.0 / profile.rho()[0]).max(0.0);
    let vertices = (0..n)
        .map(|k| {
            let (s, co) = (2.0 * PI * k as f64 / n as f64).sin_cos();
            // rotate (0, −y0)
            [c[0] + y0 * s, c[1] - y0 * co]
        })
        .collect();
    let tip = curve.points[profile.len() / (2 * n)];
    let a = (tip[0] - c[0]).hypot(tip[1] - c[1]);
    Ok(SkeletonStar { n, y0, vertices, center: c, length: n as f64 * y0, b: proj.b, a })
}

/// `π²(r_out − r_int)² ≤ deficit ≤ (2π²/n²)L²(1 − sinc(2π/n)) ≤ (4π⁴/3n⁴)L²`
/// together with the Fourier form of the deficit.
#[derive(Debug, Clone, Serialize)]
pub struct ChainReport {
    pub n: usize,
    pub skeleton_length: f64,
    pub bonnesen: f64,
    pub deficit: f64,
    pub middle: f64,
    pub outer: f64,
    pub bonnesen_below_deficit: bool,
    pub deficit_below_middle: bool,
    pub middle_below_outer: bool,
    pub fourier_deficit: f64,
    /// `|fourier − direct| / max(1, deficit)`.
    pub fourier_residual: f64,
    pub holds: bool,
}

pub fn isoperimetric_estimate_check(profile: &CurvatureProfile, n: usize) -> Result<ChainReport> {
    let star = extract_skeleton(profile, n)?;
    let report = geometry_report(profile)?;
    let l = star.length;
    let nf = n as f64;
    let x = 2.0 * PI / nf;
    let bonnesen = PI * PI * (report.r_out - report.r_int).powi(2);
    let deficit = report.deficit;
    let middle = 2.0 * PI * PI / (nf * nf) * l * l * (1.0 - x.sin() / x);
    let outer = 4.0 * PI.powi(4) / (3.0 * nf.powi(4)) * l * l;
    let tol = EPS_NUM * report.sigma.powi(2).max(1.0);
    let fourier_deficit = SupportFourier::of_profile(profile, n)?.deficit();
    let b1 = bonnesen <= deficit + tol;
    let b2 = deficit <= middle + tol;
    let b3 = middle <= outer + tol;
    Ok(ChainReport {
        n,
        skeleton_length: l,
        bonnesen,
        deficit,
        middle,
        outer,
        bonnesen_below_deficit: b1,
        deficit_below_middle: b2,
        middle_below_outer: b3,
        fourier_deficit,
        fourier_residual: (fourier_deficit - deficit).abs() / deficit.max(1.0),
        holds: b1 && b2 && b3,
    })
}
