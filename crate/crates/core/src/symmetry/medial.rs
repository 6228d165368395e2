//! Brute-force medial axis on a square grid of candidate centers, used as
//! an independent oracle for star skeletons.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::geometry::{reconstruct_curve, CurvatureProfile, Point};

const BOUNDARY_SAMPLES: usize = 4096;

#[derive(Debug, Clone, Serialize)]
pub struct MedialEstimate {
    pub grid_size: usize,
    pub spacing: f64,
    /// Candidate centers flagged as medial.
    pub points: Vec<Point>,
    /// Largest distance from `center` among medial points.
    pub y0: f64,
    /// Direction of the farthest medial point.
    pub branch_angle: f64,
}

impl MedialEstimate {
    /// Angular distance from the farthest medial point to the nearest
    /// branch direction `−π/2 + 2πk/n`.
    pub fn branch_angle_error(&self, n: usize) -> f64 {
        let w = 2.0 * PI / n as f64;
        let d = (self.branch_angle + PI / 2.0).rem_euclid(w);
        d.min(w - d)
    }
}

struct Boundary {
    points: Vec<Point>,
    normals: Vec<Point>,
    thetas: Vec<f64>,
}

impl Boundary {
    fn inside(&self, p: Point) -> bool {
        self.points
            .iter()
            .zip(&self.normals)
            .all(|(c, nu)| (p[0] - c[0]) * nu[0] + (p[1] - c[1]) * nu[1] < 0.0)
    }

    /// Distance to the boundary and the tangent angle of the nearest point,
    /// both refined by a parabola through the neighboring squared distances.
    fn distance(&self, p: Point) -> (f64, f64) {
        let m = self.points.len();
        let d2 = |j: usize| {
            let c = self.points[j % m];
            (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)
        };
        let (mut best, mut jb) = (f64::INFINITY, 0);
        for j in 0..m {
            let v = d2(j);
            if v < best {
                best = v;
                jb = j;
            }
        }
        let (fm, fp) = (d2(jb + m - 1), d2(jb + 1));
        let curv = fm - 2.0 * best + fp;
        let (refined, shift) =
            if curv > 0.0 { (best - (fp - fm).powi(2) / (8.0 * curv), (fm - fp) / (2.0 * curv)) } else { (best, 0.0) };
        let dtheta = 2.0 * PI / m as f64;
        (refined.max(0.0).sqrt(), self.thetas[jb] + shift * dtheta)
    }
}

/// Flag a candidate `P` as medial when its inscribed disk is not contained
/// in the inscribed disk at `P + Δu`, `u` pointing away from the nearest
/// boundary point.
pub fn brute_force_medial_axis(profile: &CurvatureProfile, center: Point, grid_size: usize) -> Result<MedialEstimate> {
    let factor = BOUNDARY_SAMPLES.div_ceil(profile.len()).max(1);
    let fine = profile.refined(factor)?;
    let curve = reconstruct_curve(&fine)?;
    let normals = (0..curve.len()).map(|k| curve.normal(k)).collect();
    let boundary = Boundary { points: curve.points.clone(), normals, thetas: curve.thetas.clone() };
    let half = curve.max_distance_from(center);
    let spacing = 2.0 * half / grid_size as f64;
    // above the parabolic-fit error of the sampled distance
    let tol = 3e-7 * half;
    let coord = |i: usize, c: f64| c - half + i as f64 * spacing;

    let points: Vec<Point> = (0..grid_size)
        .into_par_iter()
        .flat_map_iter(|i| {
            let boundary = &boundary;
            (0..grid_size).filter_map(move |j| {
                let p = [coord(i, center[0]), coord(j, center[1])];
                if !boundary.inside(p) {
                    return None;
                }
                let (d, theta) = boundary.distance(p);
                if d < 2.0 * spacing {
                    return None;
                }
                // inward normal at the nearest point
                let u = [-theta.sin(), theta.cos()];
                let q = [p[0] + spacing * u[0], p[1] + spacing * u[1]];
                let (dq, _) = boundary.distance(q);
                (dq < d + spacing - tol).then_some(p)
            })
        })
        .collect();

    let (mut y0, mut branch_angle) = (0.0, 0.0);
    for p in &points {
        let (dx, dy) = (p[0] - center[0], p[1] - center[1]);
        let r = dx.hypot(dy);
        if r > y0 {
            y0 = r;
            branch_angle = dy.atan2(dx);
        }
    }
    Ok(MedialEstimate { grid_size, spacing, points, y0, branch_angle })
}
