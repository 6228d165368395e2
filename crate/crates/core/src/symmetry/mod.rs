//! `G_n`-symmetric curves: generators, the classes `T_n ⊃ S_n ⊃ S_n↓`, the
//! axis projection `Π`, star skeletons and the Fourier isoperimetric chain.

mod medial;
mod skeleton;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{reconstruct_curve, AngleGrid, CurvatureProfile, Point};
use crate::spectral;

pub use medial::{brute_force_medial_axis, MedialEstimate};
pub use skeleton::{extract_skeleton, isoperimetric_estimate_check, ChainReport, SkeletonStar};

/// Relative `G_n` residual below which a profile counts as symmetric.
pub const SYMMETRY_TOL: f64 = 1e-8;
/// Relative slack for the grid-level monotonicity tests.
pub const MONOTONE_TOL: f64 = 1e-10;
/// Refinement of the sector grid used for `Π`.
pub const PI_REFINEMENT: usize = 4;

/// `1/ρ = a₀ + ε(1 − n²) cos nθ`, centered at the origin.
pub fn flower(n_samples: usize, n: usize, epsilon: f64, a0: f64) -> Result<CurvatureProfile> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!("flower needs n >= 2, got {n}")));
    }
    if !(a0 > 0.0) || !(epsilon >= 0.0) {
        return Err(Error::InvalidConfig(format!("need a0 > 0 and epsilon >= 0, got {a0} and {epsilon}")));
    }
    let grid = AngleGrid::new(n_samples)?;
    if !grid.supports_symmetry(n) {
        return Err(Error::InvalidGrid(format!("2n = {} must divide n_samples = {n_samples}", 2 * n)));
    }
    let amp = epsilon * ((n * n) as f64 - 1.0);
    if amp >= a0 {
        return Err(Error::NotConvex { min_radius: a0 - amp });
    }
    let nf = n as f64;
    let q = grid.sample(|t| a0 - amp * (nf * t).cos());
    CurvatureProfile::from_radius(q, n, [0.0, -(a0 + epsilon)])
}

/// Support function `p(θ) = a₀ + Σ_{k≥1} a_k cos(knθ)` of a `G_n` curve
/// about its center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportFourier {
    pub n: usize,
    pub a0: f64,
    pub a: Vec<f64>,
}

impl SupportFourier {
    /// Coefficients of the support function about the node centroid.
    pub fn of_profile(profile: &CurvatureProfile, n: usize) -> Result<Self> {
        let curve = reconstruct_curve(profile)?;
        let p = curve.support_about(curve.node_centroid());
        let (a, _) = spectral::real_coefficients(&p);
        let ks = (a.len() - 1) / n;
        Ok(Self { n, a0: a[0], a: (1..=ks).map(|k| a[k * n]).collect() })
    }

    pub fn to_profile(&self, n_samples: usize) -> Result<CurvatureProfile> {
        let mut c = vec![self.a0];
        c.extend_from_slice(&self.a);
        crate::geometry::support_fourier(n_samples, self.n, &c)
    }

    /// `2π² Σ a_k² (n²k² − 1)`.
    pub fn deficit(&self) -> f64 {
        let n = self.n as f64;
        let s: f64 =
            self.a.iter().enumerate().map(|(i, a)| {
                let k = (i + 1) as f64;
                a * a * (n * n * k * k - 1.0)
            }).sum();
        2.0 * std::f64::consts::PI.powi(2) * s
    }
}

/// `Π` and `Π'` on the refined grid of `[0, π/n]`.
#[derive(Debug, Clone, Serialize)]
pub struct AxisProjection {
    pub n: usize,
    pub thetas: Vec<f64>,
    pub pi: Vec<f64>,
    pub pi_prime: Vec<f64>,
    /// `|C(0) − center|`.
    pub b: f64,
    pub center: Point,
    /// `Π(π/n)`, zero in exact arithmetic.
    pub endpoint: f64,
}

impl AxisProjection {
    pub fn min_slope(&self) -> f64 {
        self.pi_prime.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn require_symmetric(profile: &CurvatureProfile, n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!("symmetry order must be >= 2, got {n}")));
    }
    let residual = profile.symmetry_residual(n);
    if residual > SYMMETRY_TOL {
        return Err(Error::NotSymmetric { order: n, residual });
    }
    Ok(())
}

/// Cumulative trapezoid with the first Euler–Maclaurin correction
/// `−h²/12 (f'(x) − f'(0))`, fourth order for smooth `f`.
fn cumulative_trapezoid(f: &[f64], df: &[f64], h: f64, start: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(f.len());
    let mut acc = 0.0;
    out.push(start);
    for j in 1..f.len() {
        acc += 0.5 * h * (f[j - 1] + f[j]);
        out.push(start + acc - h * h / 12.0 * (df[j] - df[0]));
    }
    out
}

/// `Π' = (1/sin²θ) ∫₀^θ q'(β) sin β dβ` with `q = 1/ρ`, integrated from
/// `Π(0) = 1/ρ(0) − b`.
pub fn projection_pi(profile: &CurvatureProfile, n: usize) -> Result<AxisProjection> {
    require_symmetric(profile, n)?;
    let curve = reconstruct_curve(profile)?;
    let center = curve.node_centroid();
    let c0 = curve.points[0];
    let b = (c0[0] - center[0]).hypot(c0[1] - center[1]);
    let q = profile.radius_of_curvature();
    let (d1, d2) = spectral::first_and_second_derivative(&q);
    let qp = spectral::refine(&d1, PI_REFINEMENT);
    let qpp = spectral::refine(&d2, PI_REFINEMENT);
    let fine = q.len() * PI_REFINEMENT;
    let m = fine / (2 * n);
    let h = 2.0 * std::f64::consts::PI / fine as f64;
    let thetas: Vec<f64> = (0..=m).map(|j| j as f64 * h).collect();
    let g: Vec<f64> = thetas.iter().zip(&qp).map(|(t, d)| d * t.sin()).collect();
    let dg: Vec<f64> = (0..=m).map(|j| qpp[j] * thetas[j].sin() + qp[j] * thetas[j].cos()).collect();
    let j_int = cumulative_trapezoid(&g, &dg, h, 0.0);
    let mut pi_prime = vec![0.0; m + 1];
    let mut pi_second = vec![qpp[0] / 3.0; m + 1];
    for j in 1..=m {
        let (s, c) = thetas[j].sin_cos();
        pi_prime[j] = j_int[j] / (s * s);
        pi_second[j] = g[j] / (s * s) - 2.0 * j_int[j] * c / (s * s * s);
    }
    let pi = cumulative_trapezoid(&pi_prime, &pi_second, h, q[0] - b);
    let endpoint = *pi.last().unwrap();
    Ok(AxisProjection { n, thetas, pi, pi_prime, b, center, endpoint })
}

/// Residuals of `Π' sinθ + r = 1/ρ` and `r' = Π' cosθ` at the sector nodes,
/// with `r = |C(θ) − (0, Π(θ))|` taken from the reconstructed curve.
/// Both are relative to `max 1/ρ`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AxisIdentities {
    pub radius_identity: f64,
    pub derivative_identity: f64,
}

pub fn axis_identities(profile: &CurvatureProfile, proj: &AxisProjection) -> Result<AxisIdentities> {
    let curve = reconstruct_curve(profile)?;
    let q = profile.radius_of_curvature();
    let scale = q.iter().copied().fold(0.0, f64::max);
    let (mut r1, mut r2) = (0.0f64, 0.0f64);
    for k in 0..=q.len() / (2 * proj.n) {
        let j = k * PI_REFINEMENT;
        let t = proj.thetas[j];
        let c = curve.points[k];
        let dx = c[0] - proj.center[0];
        let dy = c[1] - proj.center[1] - proj.pi[j];
        let r = dx.hypot(dy);
        let pp = proj.pi_prime[j];
        r1 = r1.max((pp * t.sin() + r - q[k]).abs());
        let rp = (dx * q[k] * t.cos() + dy * (q[k] * t.sin() - pp)) / r;
        r2 = r2.max((rp - pp * t.cos()).abs());
    }
    Ok(AxisIdentities { radius_identity: r1 / scale, derivative_identity: r2 / scale })
}

/// Membership in `T_n`, `S_n` (`Π` non-decreasing) and `S_n↓` (`ρ`
/// non-increasing on `[0, π/n]`).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ClassMembership {
    pub n: usize,
    pub in_tn: bool,
    pub in_sn: bool,
    pub in_sn_down: bool,
    pub symmetry_residual: f64,
    /// `min Π'`; NaN outside `T_n`.
    pub pi_slope_margin: f64,
    /// `max (ρ[k+1] − ρ[k])` over the sector.
    pub rho_increase: f64,
    /// `Π' ≡ 0` within tolerance (disks).
    pub degenerate: bool,
}

pub fn class_membership(profile: &CurvatureProfile, n: usize) -> ClassMembership {
    let symmetry_residual = profile.symmetry_residual(n);
    let rho_increase = if n >= 1 && profile.grid().supports_symmetry(n) {
        profile.sector_max_increase(n)
    } else {
        f64::NAN
    };
    let mut out = ClassMembership {
        n,
        in_tn: false,
        in_sn: false,
        in_sn_down: false,
        symmetry_residual,
        pi_slope_margin: f64::NAN,
        rho_increase,
        degenerate: false,
    };
    let Ok(proj) = projection_pi(profile, n) else {
        return out;
    };
    let q_max = 1.0 / profile.rho_min();
    let tol = MONOTONE_TOL * q_max;
    out.in_tn = true;
    out.pi_slope_margin = proj.min_slope();
    out.in_sn = out.pi_slope_margin >= -tol;
    out.in_sn_down = rho_increase <= MONOTONE_TOL * profile.rho_max();
    out.degenerate = proj.pi_prime.iter().all(|v| v.abs() <= tol);
    debug_assert!(!out.in_sn_down || out.in_sn, "S_n-down member with min Pi' = {:e}", out.pi_slope_margin);
    out
}
