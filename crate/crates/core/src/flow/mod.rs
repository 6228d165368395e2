//! Time integration of the renormalized curvature flow and its stochastic
//! variants, all written for `ρ(θ, t)`.

pub mod deterministic;
pub mod stochastic;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::profile::{fourier_area, symmetrize_values};
use crate::geometry::{geometry_report, project_closure, CurvatureProfile, GeometryReport};
use crate::spectral;

pub use deterministic::{
    deterministic_monitor_audit, deterministic_ode_residuals, rcf_rhs, run_rcf, OdeResiduals,
};
pub use stochastic::{
    drift_calculators, pathwise_monitor_audit, run_scf, run_srcf, scf_step, sde_coefficient_check,
    srcf_step, BrownianPath, DriftReport, PathwiseTolerances, SdeResiduals, StochasticRunOutcome,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    Rk4Explicit,
}

/// How `∂θρ` and `∂²θρ` are evaluated inside the flows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Derivative {
    /// FFT; the second-derivative symbol is capped at the two-thirds cutoff.
    #[default]
    Spectral,
    /// Fourth-order central differences.
    FiniteDifference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowConfig {
    pub t_end: f64,
    pub cfl: f64,
    pub dt_max: f64,
    pub record_every: usize,
    pub scheme: Scheme,
    pub derivative: Derivative,
    pub rho_floor: f64,
    pub rho_cap: f64,
    pub enforce_symmetry: bool,
    /// Keep a profile snapshot at every recorded step.
    pub keep_profiles: bool,
    /// Times at which steps are truncated so that a record lands exactly.
    pub checkpoints: Vec<f64>,
    /// Stochastic runs only: force every Brownian increment to zero.
    pub noise_off: bool,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            t_end: 1.0,
            cfl: 0.4,
            dt_max: 1e-3,
            record_every: 1,
            scheme: Scheme::Rk4Explicit,
            derivative: Derivative::Spectral,
            rho_floor: 1e-6,
            rho_cap: 1e6,
            enforce_symmetry: false,
            keep_profiles: false,
            checkpoints: Vec::new(),
            noise_off: false,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.cfl > 0.0 && self.cfl <= 0.5) {
            return bad(format!("cfl must lie in (0, 0.5], got {}", self.cfl));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if !(self.dt_max > 0.0) {
            return bad(format!("dt_max must be positive, got {}", self.dt_max));
        }
        if self.record_every == 0 {
            return bad("record_every must be at least 1".into());
        }
        if !(self.rho_floor >= 0.0 && self.rho_cap > self.rho_floor) {
            return bad(format!("need 0 <= rho_floor < rho_cap, got {} and {}", self.rho_floor, self.rho_cap));
        }
        Ok(())
    }

    /// `cfl·Δθ²/max ρ²`.
    pub fn cfl_limit(&self, profile: &CurvatureProfile) -> f64 {
        let d = profile.grid().delta_theta();
        let m = profile.rho_max();
        self.cfl * d * d / (m * m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Completed,
    RhoFloor,
    RhoCap,
    ClosureLost,
    Nan,
}

impl StopReason {
    pub fn is_lifetime_hit(self) -> bool {
        self != StopReason::Completed
    }
}

/// Recorded output of a flow run.
#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub reports: Vec<GeometryReport>,
    /// Empty unless `keep_profiles` was set.
    #[serde(skip)]
    pub profiles: Vec<CurvatureProfile>,
    /// `max_k (ρ[k+1] − ρ[k])` over `[0, π/n]` at each record, for the
    /// declared symmetry order `n >= 1`.
    pub sector_increase: Vec<f64>,
    /// `G_n` residual at each record (relative to `ρ_max`).
    pub symmetry_residual: Vec<f64>,
    pub symmetry_order: usize,
    pub n_samples: usize,
    pub steps: usize,
    pub stop_reason: StopReason,
    #[serde(skip)]
    pub final_profile: Option<CurvatureProfile>,
}

impl TrajectoryRecord {
    fn new(profile: &CurvatureProfile) -> Self {
        Self {
            times: Vec::new(),
            reports: Vec::new(),
            profiles: Vec::new(),
            sector_increase: Vec::new(),
            symmetry_residual: Vec::new(),
            symmetry_order: profile.symmetry_order(),
            n_samples: profile.len(),
            steps: 0,
            stop_reason: StopReason::Completed,
            final_profile: None,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_time(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    pub fn first(&self) -> &GeometryReport {
        &self.reports[0]
    }

    pub fn last(&self) -> &GeometryReport {
        self.reports.last().expect("empty trajectory")
    }

    fn push(&mut self, t: f64, profile: &CurvatureProfile, keep: bool) -> Result<()> {
        let report = geometry_report(profile)?;
        let n = profile.symmetry_order();
        self.times.push(t);
        self.reports.push(report);
        if n >= 1 {
            self.sector_increase.push(profile.sector_max_increase(n));
            self.symmetry_residual.push(profile.symmetry_residual(n));
        }
        if keep {
            self.profiles.push(profile.clone());
        }
        Ok(())
    }
}

/// `ρ` and its first two derivatives as used by the flows.
pub(crate) struct Derivs {
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

pub(crate) fn derivs(rho: &[f64], mode: Derivative) -> Derivs {
    match mode {
        Derivative::Spectral => {
            let (_, d1, d2) = spectral::dealiased(rho);
            Derivs { d1, d2 }
        }
        Derivative::FiniteDifference => Derivs {
            d1: spectral::finite_difference::first(rho),
            d2: spectral::finite_difference::second(rho),
        },
    }
}

/// `σ`, `λ` and `h = σ/λ` from the Fourier modes of `1/ρ`.
pub(crate) fn scalars(rho: &[f64]) -> (f64, f64, f64) {
    let q: Vec<f64> = rho.iter().map(|r| 1.0 / r).collect();
    let sigma = spectral::integrate(&q);
    let lambda = fourier_area(&q);
    (sigma, lambda, sigma / lambda)
}

/// Symmetrize (when asked), check the lifetime proxies and project the
/// closure constraint. On failure returns the stop reason.
pub(crate) fn finish_step(
    profile: &CurvatureProfile,
    rho: Vec<f64>,
    base: [f64; 2],
    config: &FlowConfig,
) -> std::result::Result<CurvatureProfile, StopReason> {
    let n = profile.symmetry_order();
    let rho = if config.enforce_symmetry && n >= 1 { symmetrize_values(&rho, n) } else { rho };
    if rho.iter().any(|r| !r.is_finite()) || !base[0].is_finite() || !base[1].is_finite() {
        return Err(StopReason::Nan);
    }
    if rho.iter().any(|&r| r <= config.rho_floor) {
        return Err(StopReason::RhoFloor);
    }
    if rho.iter().any(|&r| r >= config.rho_cap) {
        return Err(StopReason::RhoCap);
    }
    let next = profile.replace_rho(rho, base).map_err(|_| StopReason::RhoFloor)?;
    project_closure(&next).map_err(|_| StopReason::ClosureLost)
}

/// Checkpoints inside `(0, t_end)`, sorted.
pub(crate) fn sorted_checkpoints(config: &FlowConfig) -> Vec<f64> {
    let mut c: Vec<f64> =
        config.checkpoints.iter().copied().filter(|&t| t > 0.0 && t < config.t_end).collect();
    c.sort_by(f64::total_cmp);
    c.dedup();
    c
}

/// Time-stepping bookkeeping shared by all runners: step truncation onto
/// checkpoints and `t_end`, and the record schedule.
pub(crate) struct Clock {
    pub t: f64,
    pub step: usize,
    t_end: f64,
    checkpoints: Vec<f64>,
    next_checkpoint: usize,
    record_every: usize,
}

impl Clock {
    pub fn new(config: &FlowConfig) -> Self {
        Self {
            t: 0.0,
            step: 0,
            t_end: config.t_end,
            checkpoints: sorted_checkpoints(config),
            next_checkpoint: 0,
            record_every: config.record_every,
        }
    }

    pub fn running(&self) -> bool {
        self.t < self.t_end
    }

    fn target(&self) -> f64 {
        self.checkpoints.get(self.next_checkpoint).copied().unwrap_or(self.t_end)
    }

    /// Clamp a proposed step so that it lands on the next checkpoint or
    /// `t_end` when it would overshoot, nearly reach or barely miss it.
    pub fn clamp(&self, dt: f64) -> f64 {
        let remaining = self.target() - self.t;
        if remaining <= dt * (1.0 + 1e-6) {
            remaining
        } else {
            dt
        }
    }

    /// Advance by `dt`; returns whether this step must be recorded.
    pub fn advance(&mut self, dt: f64) -> bool {
        let target = self.target();
        let landed = dt == target - self.t;
        self.t = if landed { target } else { self.t + dt };
        self.step += 1;
        let mut record = self.step % self.record_every == 0 || !self.running();
        if landed && self.next_checkpoint < self.checkpoints.len() {
            self.next_checkpoint += 1;
            record = true;
        }
        record
    }
}
