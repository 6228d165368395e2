use std::f64::consts::PI;

use super::profile::{CurvatureProfile, DEFAULT_CLOSURE_TOL};
use crate::error::{Error, Result};
use crate::spectral;

pub type Point = [f64; 2];

/// Coordinates `C(θ_k)` of a reconstructed curve together with the Frenet
/// frame at each node.
#[derive(Debug, Clone)]
pub struct PlanarCurve {
    pub thetas: Vec<f64>,
    pub points: Vec<Point>,
    pub closure_gap: f64,
}

impl PlanarCurve {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn tangent(&self, k: usize) -> Point {
        let t = self.thetas[k];
        [t.cos(), t.sin()]
    }

    /// Outward unit normal `(sin θ, −cos θ)`.
    pub fn normal(&self, k: usize) -> Point {
        let t = self.thetas[k];
        [t.sin(), -t.cos()]
    }

    /// Support function about `center`: `p(θ) = ⟨C(θ) − c, ν(θ)⟩`.
    pub fn support_about(&self, center: Point) -> Vec<f64> {
        (0..self.len())
            .map(|k| {
                let [x, y] = self.points[k];
                let [nx, ny] = self.normal(k);
                (x - center[0]) * nx + (y - center[1]) * ny
            })
            .collect()
    }

    /// Mean of the sampled points. On a `G_n`-invariant grid this is the
    /// symmetry center of a `G_n`-symmetric curve.
    pub fn node_centroid(&self) -> Point {
        let n = self.len() as f64;
        let (sx, sy) = self.points.iter().fold((0.0, 0.0), |(a, b), p| (a + p[0], b + p[1]));
        [sx / n, sy / n]
    }

    /// `max_k |C(θ_k) − c|`.
    pub fn max_distance_from(&self, center: Point) -> f64 {
        self.points
            .iter()
            .map(|p| (p[0] - center[0]).hypot(p[1] - center[1]))
            .fold(0.0, f64::max)
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.points {
            for i in 0..2 {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        (lo, hi)
    }

    /// Shoelace area of the polygon through the nodes.
    pub fn polygon_area(&self) -> f64 {
        let n = self.len();
        0.5 * (0..n)
            .map(|k| {
                let a = self.points[k];
                let b = self.points[(k + 1) % n];
                a[0] * b[1] - a[1] * b[0]
            })
            .sum::<f64>()
    }

    /// Length of the polygon through the nodes.
    pub fn polygon_length(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|k| {
                let a = self.points[k];
                let b = self.points[(k + 1) % n];
                (b[0] - a[0]).hypot(b[1] - a[1])
            })
            .sum()
    }
}

/// Integrate `dC = T/ρ dθ` from the base point. The antiderivatives are
/// taken spectrally, so the result is exact for band-limited `1/ρ`.
pub fn reconstruct_curve(profile: &CurvatureProfile) -> Result<PlanarCurve> {
    reconstruct_with_tolerance(profile, DEFAULT_CLOSURE_TOL)
}

pub fn reconstruct_with_tolerance(profile: &CurvatureProfile, closure_tol: f64) -> Result<PlanarCurve> {
    let grid = profile.grid();
    let q = profile.radius_of_curvature();
    let thetas: Vec<f64> = grid.thetas().collect();
    let dx: Vec<f64> = thetas.iter().zip(&q).map(|(t, r)| t.cos() * r).collect();
    let dy: Vec<f64> = thetas.iter().zip(&q).map(|(t, r)| t.sin() * r).collect();
    let gap_x = spectral::integrate(&dx);
    let gap_y = spectral::integrate(&dy);
    let closure_gap = gap_x.hypot(gap_y);
    let sigma = spectral::integrate(&q);
    let threshold = 10.0 * closure_tol * sigma.max(1.0);
    if closure_gap > threshold {
        return Err(Error::NotClosed { gap: closure_gap, threshold });
    }
    let x = spectral::cumulative_integral(&dx);
    let y = spectral::cumulative_integral(&dy);
    let [bx, by] = profile.base_point();
    let points = x.iter().zip(&y).map(|(a, b)| [bx + a, by + b]).collect();
    Ok(PlanarCurve { thetas, points, closure_gap })
}

/// Area `½∮⟨C, ν⟩ ds = ½∫⟨C, ν⟩/ρ dθ` on the reconstructed curve.
pub fn curve_area(profile: &CurvatureProfile, curve: &PlanarCurve) -> f64 {
    let q = profile.radius_of_curvature();
    let integrand: Vec<f64> = (0..curve.len())
        .map(|k| {
            let [x, y] = curve.points[k];
            let [nx, ny] = curve.normal(k);
            (x * nx + y * ny) * q[k]
        })
        .collect();
    0.5 * spectral::integrate(&integrand)
}

/// Hausdorff distance between the convex body bounded by `curve` and the
/// disk `B(center, radius)`, as the sup-norm of the support-function
/// difference.
pub fn hausdorff_to_disk(curve: &PlanarCurve, center: Point, radius: f64) -> Result<f64> {
    let p = curve.support_about(center);
    let min_p = p.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min_p > 0.0) {
        return Err(Error::CenterOutside { x: center[0], y: center[1] });
    }
    Ok(p.iter().map(|v| (v - radius).abs()).fold(0.0, f64::max))
}

/// Curvature recomputed from a closed polygon by turning angle over the
/// mean adjacent edge length. Second-order accurate at the nodes.
pub fn discrete_curvature(points: &[Point]) -> Vec<f64> {
    let n = points.len();
    (0..n)
        .map(|k| {
            let prev = points[(k + n - 1) % n];
            let cur = points[k];
            let next = points[(k + 1) % n];
            let e0 = [cur[0] - prev[0], cur[1] - prev[1]];
            let e1 = [next[0] - cur[0], next[1] - cur[1]];
            let a0 = e0[1].atan2(e0[0]);
            let a1 = e1[1].atan2(e1[0]);
            let turn = (a1 - a0 + PI).rem_euclid(2.0 * PI) - PI;
            let l0 = e0[0].hypot(e0[1]);
            let l1 = e1[0].hypot(e1[1]);
            turn / (0.5 * (l0 + l1))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::grid::AngleGrid;

    #[test]
    fn unit_circle_from_bottom_point() {
        let p = CurvatureProfile::circle(64, 1.0).unwrap();
        let c = reconstruct_curve(&p).unwrap();
        let [x, y] = c.points[16];
        assert!((x - 1.0).abs() < 1e-10 && y.abs() < 1e-10);
        for pt in &c.points {
            assert!((pt[0].hypot(pt[1]) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn radius_two_circle_width() {
        let p = CurvatureProfile::circle(64, 2.0).unwrap();
        let c = reconstruct_curve(&p).unwrap();
        let (lo, hi) = c.bounding_box();
        assert!((hi[0] - lo[0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn three_fold_flower_is_closed_and_symmetric() {
        let g = AngleGrid::new(192).unwrap();
        let q = g.sample(|t| 1.0 - 0.4 * (3.0 * t).cos());
        let p = CurvatureProfile::from_radius(q, 3, [0.0, -1.05]).unwrap();
        let c = reconstruct_curve(&p).unwrap();
        assert!(c.closure_gap < 1e-10);
        // the point set is invariant under rotation by 2π/3 about the origin
        let (s, co) = (2.0 * PI / 3.0).sin_cos();
        for k in 0..192 {
            let [x, y] = c.points[k];
            let rot = [co * x - s * y, s * x + co * y];
            let img = c.points[(k + 64) % 192];
            assert!((rot[0] - img[0]).abs() < 1e-12 && (rot[1] - img[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn open_profile_is_rejected() {
        let g = AngleGrid::new(64).unwrap();
        let q = g.sample(|t| 1.0 + 0.2 * t.cos());
        let p = CurvatureProfile::from_radius(q, 0, [0.0, 0.0]).unwrap();
        assert!(matches!(reconstruct_curve(&p), Err(Error::NotClosed { .. })));
    }

    #[test]
    fn hausdorff_examples() {
        let unit = reconstruct_curve(&CurvatureProfile::circle(64, 1.0).unwrap()).unwrap();
        assert!(hausdorff_to_disk(&unit, [0.0, 0.0], 1.0).unwrap() < 1e-12);
        let two = reconstruct_curve(&CurvatureProfile::circle(64, 2.0).unwrap()).unwrap();
        assert!((hausdorff_to_disk(&two, [0.0, 0.0], 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            hausdorff_to_disk(&unit, [3.0, 0.0], 1.0),
            Err(Error::CenterOutside { .. })
        ));
    }

    #[test]
    fn area_routes_agree() {
        let g = AngleGrid::new(128).unwrap();
        let q = g.sample(|t| 1.0 + 0.2 * (2.0 * t).cos() + 0.05 * (5.0 * t).sin());
        let p = CurvatureProfile::from_radius(q, 0, [0.3, -0.7]).unwrap();
        let c = reconstruct_curve(&p).unwrap();
        assert!((curve_area(&p, &c) - p.area()).abs() < 1e-12);
    }
}
