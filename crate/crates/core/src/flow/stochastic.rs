//! Euler–Maruyama for the stochastic flows driven by one scalar Brownian
//! motion shared by every node.

use std::f64::consts::{PI, SQRT_2};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{derivs, finish_step, scalars, Clock, Derivative, FlowConfig, StopReason, TrajectoryRecord};
use crate::audit::{AuditReport, Claim, Worst};
use crate::error::{Error, Result};
use crate::geometry::{project_closure, CurvatureProfile, DEFAULT_CLOSURE_TOL};
use crate::spectral;

/// Scalar Brownian motion generated step by step from a seeded stream.
#[derive(Debug, Clone)]
pub struct BrownianPath {
    seed: u64,
    rng: ChaCha8Rng,
    value: f64,
    sup: f64,
    silent: bool,
}

impl BrownianPath {
    pub fn new(seed: u64) -> Self {
        Self { seed, rng: ChaCha8Rng::seed_from_u64(seed), value: 0.0, sup: 0.0, silent: false }
    }

    /// A path whose increments are all zero.
    pub fn silent(seed: u64) -> Self {
        Self { silent: true, ..Self::new(seed) }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Draw `ΔB ~ N(0, dt)` and advance.
    pub fn increment(&mut self, dt: f64) -> f64 {
        let z: f64 = StandardNormal.sample(&mut self.rng);
        let db = if self.silent { 0.0 } else { dt.sqrt() * z };
        self.value += db;
        self.sup = self.sup.max(self.value);
        db
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn sup(&self) -> f64 {
        self.sup
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StochasticFlow {
    /// Renormalized: drift carries the `−2h` term.
    Srcf,
    /// Pure stochastic curvature flow.
    Scf,
}

impl StochasticFlow {
    fn renormalized(self) -> bool {
        self == StochasticFlow::Srcf
    }
}

/// Which variable the Euler–Maruyama update is applied to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StochasticScheme {
    /// `ρ ← ρ + dt ρ²(ρ'' + 3ρ − 2h) − √2 ΔB ρ²`.
    Curvature,
    /// `1/ρ ← 1/ρ − dt (ρ'' + ρ − 2h) + √2 ΔB`, the same SDE written for
    /// the radius of curvature, where the noise is additive.
    #[default]
    Radius,
}

/// One Euler–Maruyama step on raw samples. Returns the new curvature and
/// base point.
fn em_step(
    rho: &[f64],
    base: [f64; 2],
    dt: f64,
    db: f64,
    flow: StochasticFlow,
    scheme: StochasticScheme,
    mode: Derivative,
) -> (Vec<f64>, [f64; 2]) {
    let h2 = if flow.renormalized() { 2.0 * scalars(rho).2 } else { 0.0 };
    let d = derivs(rho, mode);
    let next = match scheme {
        StochasticScheme::Curvature => rho
            .iter()
            .zip(&d.d2)
            .map(|(&r, &rpp)| r + dt * r * r * (rpp + 3.0 * r - h2) - SQRT_2 * db * r * r)
            .collect(),
        StochasticScheme::Radius => rho
            .iter()
            .zip(&d.d2)
            .map(|(&r, &rpp)| 1.0 / (1.0 / r - dt * (rpp + r - h2) + SQRT_2 * db))
            .collect(),
    };
    let b = [base[0] - dt * d.d1[0], base[1] + dt * (rho[0] - h2) - SQRT_2 * db];
    (next, b)
}

fn single_step(
    profile: &CurvatureProfile,
    dt: f64,
    db: f64,
    flow: StochasticFlow,
) -> Result<CurvatureProfile> {
    let (rho, base) = em_step(
        profile.rho(),
        profile.base_point(),
        dt,
        db,
        flow,
        StochasticScheme::Curvature,
        Derivative::Spectral,
    );
    let floor = FlowConfig::default().rho_floor;
    if let Some((node, &value)) = rho.iter().enumerate().find(|(_, r)| !(**r > floor)) {
        return Err(Error::PositivityLost { node, value });
    }
    project_closure(&profile.replace_rho(rho, base)?)
}

/// One step of the renormalized stochastic flow with `h` frozen at the
/// start of the step, followed by closure projection.
pub fn srcf_step(profile: &CurvatureProfile, dt: f64, db: f64) -> Result<CurvatureProfile> {
    single_step(profile, dt, db, StochasticFlow::Srcf)
}

/// As [`srcf_step`] without the `2h` renormalization.
pub fn scf_step(profile: &CurvatureProfile, dt: f64, db: f64) -> Result<CurvatureProfile> {
    single_step(profile, dt, db, StochasticFlow::Scf)
}

/// Step cap keeping a three-sigma increment below a tenth of the local
/// radius of curvature: `3√2 ρ_max √dt ≤ 0.1`.
pub fn noise_limit(profile: &CurvatureProfile) -> f64 {
    let c = 0.1 / (3.0 * SQRT_2 * profile.rho_max());
    c * c
}

#[derive(Debug, Clone, Serialize)]
pub struct StochasticRunOutcome {
    pub seed: u64,
    pub flow: StochasticFlow,
    pub scheme: StochasticScheme,
    pub trajectory: TrajectoryRecord,
    /// `B_t` at the recorded times.
    pub brownian: Vec<f64>,
    /// `sup_{s≤t} B_s` at the recorded times.
    pub brownian_sup: Vec<f64>,
    /// `∫₀ᵗ h ds` by the trapezoid rule.
    pub integral_h: Vec<f64>,
    /// Increment of the step that produced each record (zero at `t = 0`).
    pub last_increment: Vec<f64>,
    pub lifetime_hit: bool,
}

impl StochasticRunOutcome {
    pub fn stop_reason(&self) -> StopReason {
        self.trajectory.stop_reason
    }
}

pub fn run_srcf(initial: &CurvatureProfile, config: &FlowConfig, seed: u64) -> Result<StochasticRunOutcome> {
    run_stochastic(initial, config, seed, StochasticFlow::Srcf, StochasticScheme::default())
}

pub fn run_scf(initial: &CurvatureProfile, config: &FlowConfig, seed: u64) -> Result<StochasticRunOutcome> {
    run_stochastic(initial, config, seed, StochasticFlow::Scf, StochasticScheme::default())
}

pub fn run_stochastic(
    initial: &CurvatureProfile,
    config: &FlowConfig,
    seed: u64,
    flow: StochasticFlow,
    scheme: StochasticScheme,
) -> Result<StochasticRunOutcome> {
    config.validate()?;
    initial.validate(DEFAULT_CLOSURE_TOL)?;
    let mut path = if config.noise_off { BrownianPath::silent(seed) } else { BrownianPath::new(seed) };
    let mut out = StochasticRunOutcome {
        seed,
        flow,
        scheme,
        trajectory: TrajectoryRecord::new(initial),
        brownian: vec![0.0],
        brownian_sup: vec![0.0],
        integral_h: vec![0.0],
        last_increment: vec![0.0],
        lifetime_hit: false,
    };
    let mut clock = Clock::new(config);
    let mut profile = initial.clone();
    out.trajectory.push(0.0, &profile, config.keep_profiles)?;
    let mut h_prev = scalars(profile.rho()).2;
    let mut int_h = 0.0;
    while clock.running() {
        let mut dt = config.dt_max.min(config.cfl_limit(&profile));
        if !config.noise_off {
            dt = dt.min(noise_limit(&profile));
        }
        let dt = clock.clamp(dt);
        let sup_before = path.sup();
        let db = path.increment(dt);
        let (rho, base) = em_step(profile.rho(), profile.base_point(), dt, db, flow, scheme, config.derivative);
        match finish_step(&profile, rho, base, config) {
            Ok(next) => profile = next,
            Err(reason) => {
                out.trajectory.stop_reason = reason;
                // keep the last valid state for carry-forward
                if out.trajectory.final_time() < clock.t && out.trajectory.push(clock.t, &profile, config.keep_profiles).is_ok() {
                    out.brownian.push(path.value() - db);
                    out.brownian_sup.push(sup_before);
                    out.integral_h.push(int_h);
                    out.last_increment.push(0.0);
                }
                break;
            }
        }
        let h = scalars(profile.rho()).2;
        int_h += 0.5 * (h_prev + h) * dt;
        h_prev = h;
        if clock.advance(dt) {
            if out.trajectory.push(clock.t, &profile, config.keep_profiles).is_err() {
                out.trajectory.stop_reason = StopReason::ClosureLost;
                break;
            }
            out.brownian.push(path.value());
            out.brownian_sup.push(path.sup());
            out.integral_h.push(int_h);
            out.last_increment.push(db);
        }
    }
    out.trajectory.steps = clock.step;
    out.trajectory.final_profile = Some(profile);
    out.lifetime_hit = out.trajectory.stop_reason.is_lifetime_hit();
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
pub struct PathwiseTolerances {
    pub deficit: f64,
    pub inv_rho_sq: f64,
    pub min_rho: f64,
    /// Relative slack for `2ρ_min ≤ h ≤ 2ρ_max`.
    pub h_band: f64,
    /// Relative to `ρ_max` for the sector monotonicity.
    pub sector: f64,
}

impl Default for PathwiseTolerances {
    fn default() -> Self {
        Self { deficit: 1e-6, inv_rho_sq: 1e-6, min_rho: 1e-4, h_band: 1e-9, sector: 1e-10 }
    }
}

pub fn pathwise_monitor_audit(outcome: &StochasticRunOutcome) -> AuditReport {
    pathwise_monitor_audit_with(outcome, &PathwiseTolerances::default())
}

pub fn pathwise_monitor_audit_with(outcome: &StochasticRunOutcome, tol: &PathwiseTolerances) -> AuditReport {
    let tr = &outcome.trajectory;
    let t = &tr.times;
    let r = &tr.reports;
    let q0 = 1.0 / r[0].rho_min;
    let h_weight = if outcome.flow.renormalized() { 2.0 } else { 0.0 };
    let mut deficit = Worst::new();
    let mut q2 = Worst::new();
    let mut min_rho = Worst::new();
    let mut min_rho_sup = Worst::new();
    let mut band = Worst::new();
    for i in 0..r.len() {
        let ri = &r[i];
        let allowance = q0 + h_weight * outcome.integral_h[i];
        let qmax = 1.0 / ri.rho_min;
        min_rho.update(allowance + SQRT_2 * outcome.brownian[i] - qmax, tol.min_rho, t[i]);
        min_rho_sup.update(allowance + SQRT_2 * outcome.brownian_sup[i] - qmax, tol.min_rho, t[i]);
        let lo = ri.h - 2.0 * ri.rho_min;
        let hi = 2.0 * ri.rho_max - ri.h;
        band.update(lo.min(hi), tol.h_band * ri.h, t[i]);
        if i > 0 {
            let rp = &r[i - 1];
            deficit.update(rp.deficit - ri.deficit, tol.deficit, t[i]);
            let a = rp.inv_rho_sq_integral - 2.0 * rp.lambda;
            let b = ri.inv_rho_sq_integral - 2.0 * ri.lambda;
            q2.update(a - b, tol.inv_rho_sq, t[i]);
        }
    }
    let mut claims = vec![
        deficit.claim("deficit_monotone"),
        q2.claim("inv_rho_sq_minus_2lambda_monotone"),
        min_rho
            .claim("min_rho_bound")
            .note(format!("with sup of B instead of B_t: margin {:e}", min_rho_sup.claim("").margin)),
        band.claim("h_between_2rho_min_and_2rho_max"),
    ];
    let n = tr.symmetry_order;
    let sector_applicable = n >= 1
        && !tr.sector_increase.is_empty()
        && tr.sector_increase[0] <= tol.sector * r[0].rho_max;
    if sector_applicable {
        let mut sector = Worst::new();
        for i in 0..tr.sector_increase.len() {
            sector.update(-tr.sector_increase[i], tol.sector * r[i].rho_max, t[i]);
        }
        claims.push(sector.claim("sector_monotone"));
    } else {
        claims.push(Claim::new("sector_monotone", true, f64::NAN).note("initial profile not decreasing on [0, pi/n]"));
    }
    if tr.stop_reason != StopReason::Completed {
        claims.push(Claim::new("run_completed", false, f64::NAN).note(format!("{:?}", tr.stop_reason)));
    }
    AuditReport::new(claims)
}

/// Per-step residuals of the realized `Δσ`, `Δλ` against the Itô system
/// `dσ = (−∫ρ + 4πh)dt + 2√2π dB`, `dλ = 2σ²/λ dt + √2σ dB` (for the pure
/// flow drop `4πh` and use `dλ = √2σ dB`).
#[derive(Debug, Clone, Serialize)]
pub struct SdeResiduals {
    pub steps: usize,
    pub sigma_max: f64,
    pub sigma_p50: f64,
    pub sigma_p99: f64,
    pub lambda_max: f64,
    pub lambda_p50: f64,
    pub lambda_p99: f64,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let idx = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[idx]
}

/// Requires a record at every step (`record_every = 1`).
pub fn sde_coefficient_check(outcome: &StochasticRunOutcome) -> Result<SdeResiduals> {
    let tr = &outcome.trajectory;
    let n = tr.len();
    if n < 2 {
        return Err(Error::InsufficientSnapshots { needed: 2, got: n });
    }
    let renorm = outcome.flow.renormalized();
    let mut rs = Vec::with_capacity(n - 1);
    let mut rl = Vec::with_capacity(n - 1);
    for i in 1..n {
        let (a, b) = (&tr.reports[i - 1], &tr.reports[i]);
        let dt = tr.times[i] - tr.times[i - 1];
        let db = outcome.brownian[i] - outcome.brownian[i - 1];
        let ds_drift = -a.rho_integral + if renorm { 4.0 * PI * a.h } else { 0.0 };
        let dl_drift = if renorm { 2.0 * a.sigma * a.sigma / a.lambda } else { 0.0 };
        let ds = ds_drift * dt + 2.0 * SQRT_2 * PI * db;
        let dl = dl_drift * dt + SQRT_2 * a.sigma * db;
        rs.push(((b.sigma - a.sigma) - ds).abs());
        rl.push(((b.lambda - a.lambda) - dl).abs());
    }
    rs.sort_by(f64::total_cmp);
    rl.sort_by(f64::total_cmp);
    Ok(SdeResiduals {
        steps: n - 1,
        sigma_max: *rs.last().unwrap(),
        sigma_p50: quantile(&rs, 0.5),
        sigma_p99: quantile(&rs, 0.99),
        lambda_max: *rl.last().unwrap(),
        lambda_p50: quantile(&rl, 0.5),
        lambda_p99: quantile(&rl, 0.99),
    })
}

/// Drift and diffusion coefficients of `h` and `Ent` under the renormalized
/// stochastic flow.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DriftReport {
    pub h_drift: f64,
    pub h_diffusion: f64,
    /// `−∫(∂θρ)² dθ`
    pub ent_gradient_part: f64,
    /// `2∫(ρ − h/2)² dθ`
    pub ent_square_part: f64,
    /// `−πh²`
    pub ent_h_part: f64,
    pub ent_drift: f64,
    pub ent_diffusion: f64,
    /// `−πh² − ent_drift`; present for symmetry order `n >= 3`, where it
    /// must be non-negative.
    pub supermartingale_margin: Option<f64>,
}

pub fn drift_calculators(profile: &CurvatureProfile) -> DriftReport {
    let rho = profile.rho();
    let (sigma, lambda, h) = scalars(rho);
    let rho_int = spectral::integrate(rho);
    let d1 = spectral::derivative(rho, 1);
    let grad = -spectral::integrate(&d1.iter().map(|v| v * v).collect::<Vec<_>>());
    let square = 2.0 * spectral::integrate(&rho.iter().map(|r| (r - h / 2.0).powi(2)).collect::<Vec<_>>());
    let hp = -PI * h * h;
    let drift = grad + square + hp;
    DriftReport {
        h_drift: -rho_int / lambda,
        h_diffusion: SQRT_2 * (2.0 * PI * lambda - sigma * sigma) / (lambda * lambda),
        ent_gradient_part: grad,
        ent_square_part: square,
        ent_h_part: hp,
        ent_drift: drift,
        ent_diffusion: -SQRT_2 * rho_int,
        supermartingale_margin: (profile.symmetry_order() >= 3).then_some(hp - drift),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::AngleGrid;

    fn flower3(n: usize) -> CurvatureProfile {
        let g = AngleGrid::new(n).unwrap();
        CurvatureProfile::from_radius(g.sample(|t| 1.0 - 0.4 * (3.0 * t).cos()), 3, [0.0, -1.05])
            .unwrap()
    }

    #[test]
    fn drift_only_circle_steps() {
        let c = CurvatureProfile::circle(32, 1.0).unwrap();
        let dt = 1e-3;
        let s = srcf_step(&c, dt, 0.0).unwrap();
        assert!(s.rho().iter().all(|r| (r - (1.0 - dt)).abs() < 1e-14));
        let s = scf_step(&c, dt, 0.0).unwrap();
        assert!(s.rho().iter().all(|r| (r - (1.0 + 3.0 * dt)).abs() < 1e-14));
        let c2 = CurvatureProfile::circle(32, 2.0).unwrap();
        let s = scf_step(&c2, dt, 0.0).unwrap();
        assert!(s.rho().iter().all(|r| (r - (0.5 + 3.0 * 0.125 * dt)).abs() < 1e-14));
    }

    #[test]
    fn noise_response_is_spatially_constant() {
        let c = CurvatureProfile::circle(32, 1.0).unwrap();
        let s = srcf_step(&c, 1e-14, 0.01).unwrap();
        assert!(s.rho().iter().all(|r| (r - (1.0 - SQRT_2 * 0.01)).abs() < 1e-12));
    }

    #[test]
    fn flower_step_matches_direct_formula() {
        // closed-form ρ, ρ'' and h replace the spectral pieces
        let p = flower3(192);
        let (dt, db) = (1e-4, 0.0123);
        let k = 0.4;
        let h = 2.0 / 0.99;
        let s = srcf_step(&p, dt, db).unwrap();
        let g = p.grid();
        for (i, t) in g.thetas().enumerate() {
            let u = 1.0 - k * (3.0 * t).cos();
            let up = 3.0 * k * (3.0 * t).sin();
            let upp = 9.0 * k * (3.0 * t).cos();
            let r = 1.0 / u;
            let rpp = 2.0 * up * up / u.powi(3) - upp / (u * u);
            let expected = r + dt * r * r * (rpp + 3.0 * r - 2.0 * h) - SQRT_2 * db * r * r;
            assert!((s.rho()[i] - expected).abs() < 1e-13, "{i}");
        }
    }

    #[test]
    fn brownian_is_reproducible() {
        let mut a = BrownianPath::new(9);
        let mut b = BrownianPath::new(9);
        for _ in 0..100 {
            assert_eq!(a.increment(1e-3), b.increment(1e-3));
        }
        assert!(a.sup() >= a.value() && a.sup() >= 0.0);
        let mut s = BrownianPath::silent(9);
        assert_eq!(s.increment(1.0), 0.0);
    }

    #[test]
    fn circle_drift_calculators() {
        let d = drift_calculators(&CurvatureProfile::circle(64, 1.0).unwrap());
        assert!((d.h_drift + 2.0).abs() < 1e-12);
        assert!((d.h_diffusion + 2.0 * SQRT_2).abs() < 1e-12);
        assert!((d.ent_drift + 4.0 * PI).abs() < 1e-12);
        assert!((d.ent_diffusion + 2.0 * SQRT_2 * PI).abs() < 1e-12);
        assert!(d.supermartingale_margin.is_none());
    }

    #[test]
    fn same_seed_same_path() {
        let cfg = FlowConfig { t_end: 0.01, dt_max: 1e-4, ..Default::default() };
        let a = run_srcf(&flower3(96), &cfg, 5).unwrap();
        let b = run_srcf(&flower3(96), &cfg, 5).unwrap();
        assert_eq!(a.brownian, b.brownian);
        for (x, y) in a.trajectory.reports.iter().zip(&b.trajectory.reports) {
            assert_eq!(x, y);
        }
    }

    #[test]
    fn circle_stays_circle_under_noise() {
        let cfg = FlowConfig { t_end: 0.05, dt_max: 1e-4, ..Default::default() };
        let out = run_srcf(&CurvatureProfile::circle(64, 1.0).unwrap(), &cfg, 3).unwrap();
        for r in &out.trajectory.reports {
            assert!(r.deficit.abs() < 1e-12);
            assert!(r.rho_max - r.rho_min < 1e-14 * r.rho_max);
        }
    }

    #[test]
    fn injected_deficit_jump_is_flagged() {
        let cfg = FlowConfig { t_end: 0.01, dt_max: 1e-4, ..Default::default() };
        let mut out = run_srcf(&flower3(96), &cfg, 1).unwrap();
        let k = out.trajectory.reports.len() / 2;
        out.trajectory.reports[k].deficit += 1e-3;
        let audit = pathwise_monitor_audit(&out);
        assert!(!audit.claim("deficit_monotone").unwrap().passed);
    }
}
