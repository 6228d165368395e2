//! `∂tρ = ρ²(∂²θρ + ρ − 2h)`, integrated with classical RK4.

use std::f64::consts::PI;

use serde::Serialize;

use super::{derivs, finish_step, scalars, Clock, Derivative, FlowConfig, StopReason, TrajectoryRecord};
use crate::audit::{AuditReport, Claim, Worst};
use crate::error::{Error, Result};
use crate::geometry::report::inscribed_circumscribed;
use crate::geometry::{reconstruct_curve, CurvatureProfile, GeometryReport, DEFAULT_CLOSURE_TOL};

/// Right-hand side of the flow with `h` taken from the profile itself.
pub fn rcf_rhs(profile: &CurvatureProfile) -> Vec<f64> {
    rate(profile.rho(), Derivative::Spectral).0
}

/// Rate of `ρ` and of the base point `C(0)`. The support function moves
/// with the normal velocity `−ρ + 2h`, so `C(0) = (p'(0), −p(0))` moves with
/// `(−ρ'(0), ρ(0) − 2h)`.
fn rate(rho: &[f64], mode: Derivative) -> (Vec<f64>, [f64; 2]) {
    let (_, _, h) = scalars(rho);
    let d = derivs(rho, mode);
    let r = rho.iter().zip(&d.d2).map(|(&r, &rpp)| r * r * (rpp + r - 2.0 * h)).collect();
    (r, [-d.d1[0], rho[0] - 2.0 * h])
}

fn axpy(y: &[f64], a: f64, x: &[f64]) -> Vec<f64> {
    y.iter().zip(x).map(|(y, x)| y + a * x).collect()
}

fn rk4(rho: &[f64], base: [f64; 2], dt: f64, mode: Derivative) -> (Vec<f64>, [f64; 2]) {
    let (k1, b1) = rate(rho, mode);
    let (k2, b2) = rate(&axpy(rho, 0.5 * dt, &k1), mode);
    let (k3, b3) = rate(&axpy(rho, 0.5 * dt, &k2), mode);
    let (k4, b4) = rate(&axpy(rho, dt, &k3), mode);
    let next = (0..rho.len())
        .map(|i| rho[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    let mut b = base;
    for j in 0..2 {
        b[j] += dt / 6.0 * (b1[j] + 2.0 * b2[j] + 2.0 * b3[j] + b4[j]);
    }
    (next, b)
}

/// Integrate the renormalized curvature flow up to `config.t_end`. Blow-up
/// and loss of positivity end the run with a stop reason rather than an
/// error; errors are reserved for invalid input.
pub fn run_rcf(initial: &CurvatureProfile, config: &FlowConfig) -> Result<TrajectoryRecord> {
    config.validate()?;
    initial.validate(DEFAULT_CLOSURE_TOL)?;
    let mut record = TrajectoryRecord::new(initial);
    let mut clock = Clock::new(config);
    let mut profile = initial.clone();
    record.push(0.0, &profile, config.keep_profiles)?;
    while clock.running() {
        let dt = clock.clamp(config.dt_max.min(config.cfl_limit(&profile)));
        let (rho, base) = rk4(profile.rho(), profile.base_point(), dt, config.derivative);
        match finish_step(&profile, rho, base, config) {
            Ok(next) => profile = next,
            Err(reason) => {
                record.stop_reason = reason;
                break;
            }
        }
        if clock.advance(dt) {
            if record.push(clock.t, &profile, config.keep_profiles).is_err() {
                record.stop_reason = StopReason::ClosureLost;
                break;
            }
        }
    }
    record.steps = clock.step;
    record.final_profile = Some(profile);
    Ok(record)
}

/// `σ̇ = −∫ρ dθ + 4πh` evaluated on a report.
pub fn sigma_rate(r: &GeometryReport) -> f64 {
    -r.rho_integral + 4.0 * PI * r.h
}

/// `λ̇ = −2π + 2σ²/λ` evaluated on a report.
pub fn lambda_rate(r: &GeometryReport) -> f64 {
    -2.0 * PI + 2.0 * r.sigma * r.sigma / r.lambda
}

/// `ḣ = (σ̇ − hλ̇)/λ`.
pub fn h_rate(r: &GeometryReport) -> f64 {
    (sigma_rate(r) - r.h * lambda_rate(r)) / r.lambda
}

#[derive(Debug, Clone, Serialize)]
pub struct OdeResiduals {
    pub max_sigma_residual: f64,
    pub max_lambda_residual: f64,
    /// Larger of the two.
    pub max_residual: f64,
    pub samples: usize,
}

/// Compare central differences of the recorded `σ_t`, `λ_t` with the rates
/// predicted from the same records. Residuals are relative to
/// `max(1, |predicted|)`.
pub fn deterministic_ode_residuals(trajectory: &TrajectoryRecord) -> Result<OdeResiduals> {
    let n = trajectory.len();
    if n < 3 {
        return Err(Error::InsufficientSnapshots { needed: 3, got: n });
    }
    let t = &trajectory.times;
    let r = &trajectory.reports;
    let mut ms = 0.0f64;
    let mut ml = 0.0f64;
    for i in 1..n - 1 {
        let h1 = t[i] - t[i - 1];
        let h2 = t[i + 1] - t[i];
        let fd = |f: &dyn Fn(&GeometryReport) -> f64| {
            -h2 / (h1 * (h1 + h2)) * f(&r[i - 1])
                + (h2 - h1) / (h1 * h2) * f(&r[i])
                + h1 / (h2 * (h1 + h2)) * f(&r[i + 1])
        };
        let ps = sigma_rate(&r[i]);
        let pl = lambda_rate(&r[i]);
        ms = ms.max((fd(&|x| x.sigma) - ps).abs() / ps.abs().max(1.0));
        ml = ml.max((fd(&|x| x.lambda) - pl).abs() / pl.abs().max(1.0));
    }
    Ok(OdeResiduals { max_sigma_residual: ms, max_lambda_residual: ml, max_residual: ms.max(ml), samples: n - 2 })
}

#[derive(Debug, Clone, Copy)]
pub struct DeterministicTolerances {
    /// Relative slack for the monotonicity claims.
    pub monotone: f64,
    /// Relative slack for the explicit bounds.
    pub bound: f64,
    /// Declared distance of the final `σ²/λ` from `4π`. Without one the
    /// claim checks the trend only: the gap is non-increasing and below the
    /// deficit bound divided by `λ`.
    pub final_ratio: Option<f64>,
}

impl Default for DeterministicTolerances {
    fn default() -> Self {
        Self { monotone: 1e-10, bound: 1e-9, final_ratio: None }
    }
}

fn mono_tol(tol: f64, a: f64, b: f64) -> f64 {
    tol * a.abs().max(b.abs()).max(1.0)
}

/// Deficit bound from the initial state: `D₀ ((λ̇₀t + λ₀)/λ₀)^{−2π/λ̇₀}`
/// with `λ̇₀ = −2π + 2σ₀²/λ₀`.
pub fn deficit_bound(r0: &GeometryReport, t: f64) -> f64 {
    let l0 = r0.lambda;
    let ld = lambda_rate(r0);
    r0.deficit * ((ld * t + l0) / l0).powf(-2.0 * PI / ld)
}

/// `ρ_inf(0) e^{−h₀²t}`.
pub fn rho_floor_exponential(r0: &GeometryReport, t: f64) -> f64 {
    r0.rho_min * (-r0.h * r0.h * t).exp()
}

/// `1 / (1/ρ_inf(0) + σ₀²/(6π²λ₀) √(24π²t + 4πλ₀))`.
pub fn rho_floor_algebraic(r0: &GeometryReport, t: f64) -> f64 {
    1.0 / algebraic_denominator(r0, t)
}

fn algebraic_denominator(r0: &GeometryReport, t: f64) -> f64 {
    let c = r0.sigma * r0.sigma / (6.0 * PI * PI * r0.lambda);
    1.0 / r0.rho_min + c * (24.0 * PI * PI * t + 4.0 * PI * r0.lambda).sqrt()
}

/// Upper entropy bracket `Ent₀ + c ρ_inf(0)²/h₀² (e^{−2h₀²t} − 1)`; the
/// stated form uses `c = π/2`, the integrated differential inequality gives
/// `c = π`.
pub fn entropy_upper(r0: &GeometryReport, t: f64, c: f64) -> f64 {
    let h2 = r0.h * r0.h;
    r0.entropy + c * r0.rho_min * r0.rho_min / h2 * ((-2.0 * h2 * t).exp() - 1.0)
}

/// Larger of the two lower entropy brackets.
pub fn entropy_lower(r0: &GeometryReport, t: f64) -> f64 {
    let a = 2.0 * PI * (r0.rho_min.ln() - r0.h * r0.h * t);
    let b = -2.0 * PI * algebraic_denominator(r0, t).ln();
    a.max(b)
}

pub fn deterministic_monitor_audit(trajectory: &TrajectoryRecord) -> AuditReport {
    deterministic_monitor_audit_with(trajectory, &DeterministicTolerances::default())
}

pub fn deterministic_monitor_audit_with(trajectory: &TrajectoryRecord, tol: &DeterministicTolerances) -> AuditReport {
    let t = &trajectory.times;
    let r = &trajectory.reports;
    if r.is_empty() {
        return AuditReport::new(vec![Claim::new("trajectory_nonempty", false, f64::NAN)]);
    }
    let r0 = r[0];
    let mut h_mono = Worst::new();
    let mut h_rate_state = Worst::new();
    let mut h_rate_fd = Worst::new();
    let mut ratio_mono = Worst::new();
    let mut deficit_mono = Worst::new();
    let mut deficit_cap = Worst::new();
    let mut rho_exp = Worst::new();
    let mut rho_alg = Worst::new();
    let mut ent_mono = Worst::new();
    let mut ent_low = Worst::new();
    let mut ent_up = Worst::new();
    let mut ent_up_proof = Worst::new();
    let mut median = Worst::new();
    let mut psi_mono = Worst::new();
    let mut gap_mono = Worst::new();
    let mut gap_cap = Worst::new();

    for i in 0..r.len() {
        let (ti, ri) = (t[i], &r[i]);
        let bound_i = -12.0 * PI * PI / (ri.sigma * ri.lambda);
        h_rate_state.update(bound_i - h_rate(ri), mono_tol(tol.bound, bound_i, h_rate(ri)), ti);
        median.update(ri.h - ri.pseudo_median, tol.bound * ri.h, ti);
        let f_alg = rho_floor_algebraic(&r0, ti);
        rho_alg.update(ri.rho_min - f_alg, tol.bound * f_alg, ti);
        let low = entropy_lower(&r0, ti);
        ent_low.update(ri.entropy - low, mono_tol(tol.bound, low, 0.0), ti);
        if i == 0 {
            continue;
        }
        // the remaining bounds are equalities at t = 0
        let cap = deficit_bound(&r0, ti);
        deficit_cap.update(cap - ri.deficit, mono_tol(tol.bound, cap, 0.0), ti);
        let gap = ri.planar_ratio() - 4.0 * PI;
        gap_cap.update(cap / ri.lambda - gap, mono_tol(tol.bound, cap / ri.lambda, 4.0 * PI), ti);
        let f_exp = rho_floor_exponential(&r0, ti);
        rho_exp.update(ri.rho_min - f_exp, tol.bound * f_exp.max(1e-300), ti);
        let up = entropy_upper(&r0, ti, PI / 2.0);
        ent_up.update(up - ri.entropy, mono_tol(tol.bound, up, 0.0), ti);
        let up_proof = entropy_upper(&r0, ti, PI);
        ent_up_proof.update(up_proof - ri.entropy, mono_tol(tol.bound, up_proof, 0.0), ti);
        let (tp, rp) = (t[i - 1], &r[i - 1]);
        h_mono.update(rp.h - ri.h, mono_tol(tol.monotone, rp.h, ri.h), ti);
        let dt = ti - tp;
        let fd = (ri.h - rp.h) / dt;
        let bound_p = -12.0 * PI * PI / (rp.sigma * rp.lambda);
        let allowed = bound_i.max(bound_p);
        let fd_tol = tol.bound * allowed.abs() + 4.0 * f64::EPSILON * ri.h.max(1.0) / dt;
        h_rate_fd.update(allowed - fd, fd_tol, ti);
        let ratio = |x: &GeometryReport| x.sigma * x.sigma / (4.0 * PI * x.lambda);
        ratio_mono.update(ratio(rp) - ratio(ri), mono_tol(tol.monotone, ratio(rp), 0.0), ti);
        deficit_mono.update(rp.deficit - ri.deficit, mono_tol(tol.monotone, rp.sigma * rp.sigma, 0.0), ti);
        ent_mono.update(rp.entropy - ri.entropy, mono_tol(tol.monotone, rp.entropy, ri.entropy), ti);
        psi_mono.update(rp.psi - ri.psi, mono_tol(tol.monotone, rp.psi, ri.psi), ti);
        gap_mono.update(rp.planar_ratio() - ri.planar_ratio(), mono_tol(tol.monotone, 4.0 * PI, 0.0), ti);
    }

    let last = r.last().unwrap();
    let final_gap = last.planar_ratio() - 4.0 * PI;
    let h_ok = h_mono.holds() && h_rate_state.holds() && h_rate_fd.holds();
    let h_claim = Claim::new("a_h_decay", h_ok, h_rate_state.claim("").margin)
        .note(format!(
            "monotone margin {:e}; state-rate margin {:e}; difference-quotient margin {:e}",
            h_mono.claim("").margin,
            h_rate_state.claim("").margin,
            h_rate_fd.claim("").margin
        ));
    let deficit_claim = Claim::new(
        "c_deficit",
        deficit_mono.holds() && deficit_cap.holds(),
        deficit_cap.claim("").margin,
    )
    .note(format!("monotone margin {:e}", deficit_mono.claim("").margin));
    let rho_claim = Claim::new("d_rho_floor", rho_exp.holds() && rho_alg.holds(), rho_alg.claim("").margin)
        .note(format!("exponential floor margin {:e}", rho_exp.claim("").margin));
    let ent_claim = Claim::new(
        "e_entropy",
        ent_mono.holds() && ent_low.holds() && ent_up.holds(),
        ent_up.claim("").margin,
    )
    .note(format!(
        "monotone margin {:e}; lower bracket margin {:e}; upper bracket with pi instead of pi/2 margin {:e}",
        ent_mono.claim("").margin,
        ent_low.claim("").margin,
        ent_up_proof.claim("").margin
    ));
    let stop_ok = trajectory.stop_reason == StopReason::Completed;
    let mut claims = vec![
        h_claim,
        ratio_mono.claim("b_isoperimetric_ratio_monotone"),
        deficit_claim,
        rho_claim,
        ent_claim,
        median.claim("f_pseudo_median_below_h"),
        psi_mono.claim("g_psi_monotone"),
        planar_claim(final_gap, &gap_mono, &gap_cap, tol.final_ratio).at(Some(trajectory.final_time())),
    ];
    if !stop_ok {
        claims.push(
            Claim::new("run_completed", false, f64::NAN).note(format!("{:?}", trajectory.stop_reason)),
        );
    }
    AuditReport::new(claims)
}

fn planar_claim(final_gap: f64, mono: &Worst, cap: &Worst, declared: Option<f64>) -> Claim {
    let trend = mono.holds() && cap.holds();
    let note = format!(
        "final gap {final_gap:e}; monotone margin {:e}; envelope margin {:e}",
        mono.claim("").margin,
        cap.claim("").margin
    );
    match declared {
        Some(d) => Claim::new("h_planar_ratio_to_4pi", trend && final_gap.abs() <= d, d - final_gap.abs()),
        None => Claim::new("h_planar_ratio_to_4pi", trend, cap.claim("").margin),
    }
    .note(note)
}

/// Hausdorff distance of the rescaled curve to the unit circle, centered at
/// an inscribed-circle center. Two scalings are reported: `√(λ/π)` and
/// `√(6t)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CircleConvergence {
    pub by_area: f64,
    pub by_time: f64,
}

pub fn circle_convergence(profile: &CurvatureProfile, t: f64) -> Result<CircleConvergence> {
    let curve = reconstruct_curve(profile)?;
    let radii = inscribed_circumscribed(profile, &curve);
    let p = curve.support_about(radii.inner_center);
    let dist = |scale: f64| p.iter().map(|v| (v / scale - 1.0).abs()).fold(0.0, f64::max);
    let lambda = crate::geometry::curve::curve_area(profile, &curve);
    Ok(CircleConvergence { by_area: dist((lambda / PI).sqrt()), by_time: dist((6.0 * t).sqrt()) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ellipse, AngleGrid};

    fn flower3(n: usize) -> CurvatureProfile {
        let g = AngleGrid::new(n).unwrap();
        CurvatureProfile::from_radius(g.sample(|t| 1.0 - 0.4 * (3.0 * t).cos()), 3, [0.0, -1.05])
            .unwrap()
    }

    #[test]
    fn circle_rhs() {
        let r = rcf_rhs(&CurvatureProfile::circle(64, 1.0).unwrap());
        assert!(r.iter().all(|v| (v + 3.0).abs() < 1e-12));
        let r = rcf_rhs(&CurvatureProfile::circle(64, 2.0).unwrap());
        assert!(r.iter().all(|v| (v + 3.0 / 8.0).abs() < 1e-12));
    }

    #[test]
    fn flower_rhs_at_zero() {
        // ρ = 1/u with u = 1 − k cos 3θ: ρ'' = 2u'²/u³ − u''/u², and at θ = 0
        // u' = 0, u'' = 9k.
        let k = 0.4;
        let u = 1.0 - k;
        let rho = 1.0 / u;
        let rpp = -9.0 * k / (u * u);
        let h = 2.0 * PI / (0.99 * PI);
        let expected = rho * rho * (rpp + rho - 2.0 * h);
        let r = rcf_rhs(&flower3(192));
        assert!((r[0] - expected).abs() < 1e-9 * expected.abs(), "{} vs {}", r[0], expected);
    }

    #[test]
    fn circle_grows_as_sqrt() {
        let cfg = FlowConfig { t_end: 0.5, dt_max: 1e-3, record_every: 50, ..Default::default() };
        let out = run_rcf(&CurvatureProfile::circle(32, 1.0).unwrap(), &cfg).unwrap();
        assert_eq!(out.stop_reason, StopReason::Completed);
        let expected = 1.0 / (1.0f64 + 3.0).sqrt();
        let last = out.final_profile.clone().unwrap();
        for r in last.rho() {
            assert!((r - expected).abs() < 1e-10);
        }
        // the circle stays centered at the origin
        let b = last.base_point();
        assert!(b[0].abs() < 1e-12 && (b[1] + 2.0).abs() < 1e-9);
        assert!(deterministic_monitor_audit_with(
            &out,
            &DeterministicTolerances { final_ratio: Some(1e-8), ..Default::default() }
        )
        .passed);
    }

    #[test]
    fn residuals_need_three_records() {
        let cfg = FlowConfig { t_end: 1e-3, dt_max: 1e-3, ..Default::default() };
        let out = run_rcf(&CurvatureProfile::circle(32, 1.0).unwrap(), &cfg).unwrap();
        assert!(matches!(
            deterministic_ode_residuals(&out),
            Err(Error::InsufficientSnapshots { needed: 3, got: 2 })
        ));
    }

    #[test]
    fn ellipse_h_strictly_decreases() {
        let cfg = FlowConfig { t_end: 0.2, dt_max: 1e-3, record_every: 20, ..Default::default() };
        let out = run_rcf(&ellipse(128, 2.0, 1.0).unwrap(), &cfg).unwrap();
        assert_eq!(out.stop_reason, StopReason::Completed);
        for w in out.reports.windows(2) {
            assert!(w[1].h < w[0].h);
        }
        for (i, t) in out.times.iter().enumerate() {
            assert!(out.reports[i].deficit <= deficit_bound(out.first(), *t) + 1e-9);
        }
    }

    #[test]
    fn finite_difference_agrees_with_spectral() {
        let base = FlowConfig { t_end: 0.05, dt_max: 1e-4, record_every: 100, ..Default::default() };
        let a = run_rcf(&flower3(192), &base).unwrap();
        let fd = FlowConfig { derivative: Derivative::FiniteDifference, ..base };
        let b = run_rcf(&flower3(192), &fd).unwrap();
        assert!((a.last().sigma - b.last().sigma).abs() < 1e-5);
        assert!((a.last().lambda - b.last().lambda).abs() < 1e-5);
    }

    #[test]
    fn checkpoints_are_hit_exactly() {
        let cfg = FlowConfig {
            t_end: 0.01,
            dt_max: 3e-4,
            record_every: 1000,
            checkpoints: vec![0.0025, 0.005],
            ..Default::default()
        };
        let out = run_rcf(&CurvatureProfile::circle(32, 1.0).unwrap(), &cfg).unwrap();
        assert_eq!(out.times, vec![0.0, 0.0025, 0.005, 0.01]);
    }
}
