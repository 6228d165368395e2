//! Monte Carlo ensembles of stochastic paths and mean-based tests of the
//! (super)martingale properties.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::stochastic::{run_stochastic, StochasticFlow, StochasticScheme};
use crate::flow::{FlowConfig, StopReason};
use crate::geometry::{CurvatureProfile, GeometryReport};

pub const MIN_PATHS: usize = 30;
/// Width of the acceptance band in standard errors.
pub const SE_BAND: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    H,
    InvLambda,
    Entropy,
    Deficit,
}

impl Quantity {
    pub const ALL: [Quantity; 4] = [Quantity::H, Quantity::InvLambda, Quantity::Entropy, Quantity::Deficit];

    pub fn of(self, r: &GeometryReport) -> f64 {
        match self {
            Quantity::H => r.h,
            Quantity::InvLambda => 1.0 / r.lambda,
            Quantity::Entropy => r.entropy,
            Quantity::Deficit => r.deficit,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EnsembleConfig {
    pub n_paths: usize,
    pub base_seed: u64,
    pub flow: FlowConfig,
    pub stochastic_flow: StochasticFlow,
    pub scheme: StochasticScheme,
    /// Times after `0` at which statistics are taken; the last one is `T`.
    pub checkpoints: Vec<f64>,
    pub quantities: Vec<Quantity>,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            n_paths: 256,
            base_seed: 0,
            flow: FlowConfig { t_end: 0.25, dt_max: 1e-4, ..FlowConfig::default() },
            stochastic_flow: StochasticFlow::Srcf,
            scheme: StochasticScheme::default(),
            checkpoints: vec![0.25],
            quantities: Quantity::ALL.to_vec(),
        }
    }
}

impl EnsembleConfig {
    /// Path `i` uses seed `base_seed + i`.
    pub fn seed(&self, index: usize) -> u64 {
        self.base_seed.wrapping_add(index as u64)
    }

    /// `0` followed by the sorted positive checkpoints.
    pub fn times(&self) -> Vec<f64> {
        let mut t: Vec<f64> = self.checkpoints.iter().copied().filter(|&t| t > 0.0).collect();
        t.sort_by(f64::total_cmp);
        t.dedup();
        t.insert(0, 0.0);
        t
    }
}

/// Values of one path at each checkpoint. After a lifetime event the last
/// valid value is carried forward and `alive` turns false.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub index: usize,
    pub seed: u64,
    pub times: Vec<f64>,
    pub quantities: Vec<Quantity>,
    /// `values[checkpoint][quantity]`.
    pub values: Vec<Vec<f64>>,
    pub alive: Vec<bool>,
    pub stop_reason: StopReason,
    pub stopped_at: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub se: f64,
}

impl Moments {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { count: 0, mean: f64::NAN, std: f64::NAN, se: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let std = var.sqrt();
        Self { count: n, mean, std, se: std / (n as f64).sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantityStats {
    pub quantity: Quantity,
    /// All paths, stopped ones carried forward.
    pub all: Moments,
    /// Sensitivity variant on surviving paths only.
    pub survivors: Moments,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointStats {
    pub t: f64,
    pub surviving: usize,
    pub quantities: Vec<QuantityStats>,
}

impl CheckpointStats {
    pub fn get(&self, q: Quantity) -> Option<&QuantityStats> {
        self.quantities.iter().find(|s| s.quantity == q)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub n_paths: usize,
    pub base_seed: u64,
    pub stochastic_flow: StochasticFlow,
    pub symmetry_order: usize,
    pub lifetime_hits: usize,
    pub checkpoints: Vec<CheckpointStats>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnsembleOutcome {
    pub stats: EnsembleStats,
    pub paths: Vec<PathRecord>,
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("CURVEFLOW_THREADS") {
        let n: usize =
            v.parse().map_err(|_| Error::InvalidConfig(format!("CURVEFLOW_THREADS must be a count, got {v:?}")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| Error::InvalidConfig(e.to_string()))
}

fn run_path(initial: &CurvatureProfile, config: &EnsembleConfig, index: usize) -> Result<PathRecord> {
    let times = config.times();
    let t_end = *times.last().unwrap();
    let flow = FlowConfig {
        t_end: if t_end > 0.0 { t_end } else { config.flow.t_end },
        record_every: usize::MAX,
        keep_profiles: false,
        checkpoints: times[1..].to_vec(),
        ..config.flow.clone()
    };
    let seed = config.seed(index);
    let out = run_stochastic(initial, &flow, seed, config.stochastic_flow, config.scheme)?;
    let traj = &out.trajectory;
    let stopped = traj.stop_reason.is_lifetime_hit();
    let stopped_at = stopped.then(|| traj.final_time());
    let mut values = Vec::with_capacity(times.len());
    let mut alive = Vec::with_capacity(times.len());
    for &t in &times {
        // last record at or before t
        let k = traj.times.iter().rposition(|&s| s <= t + 1e-12).unwrap_or(0);
        let r = &traj.reports[k];
        values.push(config.quantities.iter().map(|q| q.of(r)).collect());
        alive.push(!stopped || t < traj.final_time() || t == 0.0);
    }
    Ok(PathRecord {
        index,
        seed,
        times,
        quantities: config.quantities.clone(),
        values,
        alive,
        stop_reason: traj.stop_reason,
        stopped_at,
    })
}

/// Per-checkpoint statistics as a deterministic fold over path order.
pub fn summarize(paths: &[PathRecord], config: &EnsembleConfig, symmetry_order: usize) -> EnsembleStats {
    let times = config.times();
    let checkpoints = times
        .iter()
        .enumerate()
        .map(|(c, &t)| {
            let surviving = paths.iter().filter(|p| p.alive[c]).count();
            let quantities = config
                .quantities
                .iter()
                .enumerate()
                .map(|(j, &q)| {
                    let all: Vec<f64> = paths.iter().map(|p| p.values[c][j]).collect();
                    let surv: Vec<f64> = paths.iter().filter(|p| p.alive[c]).map(|p| p.values[c][j]).collect();
                    QuantityStats { quantity: q, all: Moments::of(&all), survivors: Moments::of(&surv) }
                })
                .collect();
            CheckpointStats { t, surviving, quantities }
        })
        .collect();
    EnsembleStats {
        n_paths: paths.len(),
        base_seed: config.base_seed,
        stochastic_flow: config.stochastic_flow,
        symmetry_order,
        lifetime_hits: paths.iter().filter(|p| p.stop_reason.is_lifetime_hit()).count(),
        checkpoints,
    }
}

pub fn run_ensemble(initial: &CurvatureProfile, config: &EnsembleConfig) -> Result<EnsembleOutcome> {
    config.flow.validate()?;
    if config.n_paths == 0 {
        return Err(Error::InvalidConfig("n_paths must be positive".into()));
    }
    let pool = thread_pool()?;
    let paths: Vec<PathRecord> = pool.install(|| {
        (0..config.n_paths).into_par_iter().map(|i| run_path(initial, config, i)).collect::<Result<Vec<_>>>()
    })?;
    let stats = summarize(&paths, config, initial.symmetry_order());
    Ok(EnsembleOutcome { stats, paths })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    NoClaim,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    /// `|mean(X_T) − X₀| ≤ 3·SE`.
    TwoSided,
    /// `mean(X_T) ≤ X₀ + 3·SE`.
    Upper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleTest {
    pub name: String,
    pub quantity: Quantity,
    pub kind: TestKind,
    pub verdict: Verdict,
    pub initial: f64,
    pub mean: f64,
    pub se: f64,
    /// `(mean − X₀)/SE`.
    pub z: f64,
    /// Same test on surviving paths only.
    pub survivor_verdict: Verdict,
    #[serde(skip_serializing_if = "String::is_empty", default)]
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleReport {
    pub t: f64,
    pub n_paths: usize,
    pub surviving: usize,
    pub tests: Vec<MartingaleTest>,
    /// Every test with a claim passed.
    pub passed: bool,
}

impl MartingaleReport {
    pub fn test(&self, quantity: Quantity) -> Option<&MartingaleTest> {
        self.tests.iter().find(|t| t.quantity == quantity)
    }
}

fn decide(kind: TestKind, x0: f64, m: &Moments) -> Verdict {
    let ok = match kind {
        TestKind::TwoSided => (m.mean - x0).abs() <= SE_BAND * m.se,
        TestKind::Upper => m.mean <= x0 + SE_BAND * m.se,
    };
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

/// Tests at the last checkpoint against the values at `t = 0`:
/// `1/λ` is a martingale and `h` a supermartingale under the renormalized
/// flow; the entropy is a supermartingale for `G_n` data with `n ≥ 3`.
/// Anything else is reported as `NoClaim`.
pub fn martingale_tests(stats: &EnsembleStats, raw: &[PathRecord]) -> Result<MartingaleReport> {
    if stats.n_paths < MIN_PATHS || raw.len() < MIN_PATHS {
        return Err(Error::InsufficientPaths { needed: MIN_PATHS, got: stats.n_paths.min(raw.len()) });
    }
    let first = stats.checkpoints.first().filter(|c| c.t == 0.0).ok_or_else(|| {
        Error::InvalidConfig("checkpoints must start at t = 0".into())
    })?;
    let last = stats.checkpoints.last().unwrap();
    let renormalized = stats.stochastic_flow == StochasticFlow::Srcf;
    let plan = [
        ("inv_lambda_martingale", Quantity::InvLambda, TestKind::TwoSided),
        ("h_supermartingale", Quantity::H, TestKind::Upper),
        ("entropy_supermartingale", Quantity::Entropy, TestKind::Upper),
    ];
    let mut tests = Vec::new();
    for (name, q, kind) in plan {
        let (Some(s0), Some(st)) = (first.get(q), last.get(q)) else {
            continue;
        };
        let x0 = s0.all.mean;
        let mut note = String::new();
        let claimed = if !renormalized {
            note = "no claim for the unrenormalized flow".into();
            false
        } else if q == Quantity::Entropy && stats.symmetry_order < 3 {
            note = format!("no claim for symmetry order {}", stats.symmetry_order);
            false
        } else {
            true
        };
        let (verdict, survivor_verdict) = if claimed {
            (decide(kind, x0, &st.all), decide(kind, x0, &st.survivors))
        } else {
            (Verdict::NoClaim, Verdict::NoClaim)
        };
        let z = if st.all.se > 0.0 { (st.all.mean - x0) / st.all.se } else { 0.0 };
        tests.push(MartingaleTest {
            name: name.into(),
            quantity: q,
            kind,
            verdict,
            initial: x0,
            mean: st.all.mean,
            se: st.all.se,
            z,
            survivor_verdict,
            note,
        });
    }
    let passed = tests.iter().all(|t| t.verdict != Verdict::Fail);
    Ok(MartingaleReport { t: last.t, n_paths: stats.n_paths, surviving: last.surviving, tests, passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symmetry::flower;

    fn small(n_paths: usize, t: f64) -> EnsembleConfig {
        EnsembleConfig {
            n_paths,
            base_seed: 11,
            flow: FlowConfig { t_end: t, dt_max: 1e-4, ..FlowConfig::default() },
            checkpoints: vec![t / 2.0, t],
            ..EnsembleConfig::default()
        }
    }

    #[test]
    fn moments_match_hand_computation() {
        let m = Moments::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.count, 4);
        assert!((m.mean - 2.5).abs() < 1e-15);
        assert!((m.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((m.se - m.std / 2.0).abs() < 1e-15);
    }

    #[test]
    fn circle_ensemble_keeps_zero_deficit() {
        let c = CurvatureProfile::circle(32, 1.0).unwrap();
        let out = run_ensemble(&c, &small(8, 0.02)).unwrap();
        for cp in &out.stats.checkpoints {
            let d = cp.get(Quantity::Deficit).unwrap();
            assert!(d.all.mean.abs() < 1e-12 && d.all.std < 1e-12);
        }
        assert!(out.stats.checkpoints[2].get(Quantity::H).unwrap().all.std > 0.0);
    }

    #[test]
    fn same_seed_same_stats() {
        let f = flower(48, 3, 0.05, 1.0).unwrap();
        let a = run_ensemble(&f, &small(4, 0.01)).unwrap();
        let b = run_ensemble(&f, &small(4, 0.01)).unwrap();
        assert_eq!(a.stats, b.stats);
        assert_eq!(a.paths, b.paths);
        assert_eq!(a.paths[3].seed, 14);
    }

    #[test]
    fn stats_rebuild_from_raw() {
        let f = flower(48, 3, 0.05, 1.0).unwrap();
        let cfg = small(5, 0.01);
        let out = run_ensemble(&f, &cfg).unwrap();
        assert_eq!(summarize(&out.paths, &cfg, 3), out.stats);
    }

    #[test]
    fn too_few_paths() {
        let f = flower(48, 3, 0.05, 1.0).unwrap();
        let out = run_ensemble(&f, &small(4, 0.01)).unwrap();
        assert!(matches!(martingale_tests(&out.stats, &out.paths), Err(Error::InsufficientPaths { .. })));
    }

    fn fake(stats_flow: StochasticFlow, order: usize, x_t: f64) -> (EnsembleStats, Vec<PathRecord>) {
        let cfg = EnsembleConfig {
            stochastic_flow: stats_flow,
            checkpoints: vec![1.0],
            quantities: vec![Quantity::InvLambda, Quantity::H, Quantity::Entropy],
            ..EnsembleConfig::default()
        };
        let paths: Vec<PathRecord> = (0..40)
            .map(|i| {
                let wiggle = if i % 2 == 0 { 0.01 } else { -0.01 };
                PathRecord {
                    index: i,
                    seed: i as u64,
                    times: vec![0.0, 1.0],
                    quantities: cfg.quantities.clone(),
                    values: vec![vec![1.0; 3], vec![x_t + wiggle; 3]],
                    alive: vec![true, true],
                    stop_reason: StopReason::Completed,
                    stopped_at: None,
                }
            })
            .collect();
        (summarize(&paths, &cfg, order), paths)
    }

    #[test]
    fn verdict_logic() {
        // se = 0.01·√(40/39)/√40 ≈ 0.0016
        let (s, p) = fake(StochasticFlow::Srcf, 3, 1.0);
        let r = martingale_tests(&s, &p).unwrap();
        assert!(r.passed && r.tests.iter().all(|t| t.verdict == Verdict::Pass));
        let (s, p) = fake(StochasticFlow::Srcf, 3, 0.9);
        let r = martingale_tests(&s, &p).unwrap();
        assert_eq!(r.test(Quantity::InvLambda).unwrap().verdict, Verdict::Fail);
        assert_eq!(r.test(Quantity::H).unwrap().verdict, Verdict::Pass);
        let (s, p) = fake(StochasticFlow::Srcf, 3, 1.1);
        let r = martingale_tests(&s, &p).unwrap();
        assert_eq!(r.test(Quantity::Entropy).unwrap().verdict, Verdict::Fail);
        assert!(!r.passed);
    }

    #[test]
    fn no_claim_cases() {
        let (s, p) = fake(StochasticFlow::Srcf, 2, 1.1);
        let r = martingale_tests(&s, &p).unwrap();
        assert_eq!(r.test(Quantity::Entropy).unwrap().verdict, Verdict::NoClaim);
        let (s, p) = fake(StochasticFlow::Scf, 3, 1.1);
        let r = martingale_tests(&s, &p).unwrap();
        assert!(r.tests.iter().all(|t| t.verdict == Verdict::NoClaim));
        assert!(r.passed);
    }

    #[test]
    fn stopped_paths_carry_forward() {
        let f = flower(48, 3, 0.05, 1.0).unwrap();
        let mut cfg = small(3, 0.02);
        cfg.flow.rho_cap = 1.7;
        let out = run_ensemble(&f, &cfg).unwrap();
        let stopped: Vec<_> = out.paths.iter().filter(|p| p.stopped_at.is_some()).collect();
        assert!(!stopped.is_empty());
        for p in stopped {
            assert!(!p.alive[2]);
            assert!(p.values[2].iter().all(|v| v.is_finite()));
        }
        assert_eq!(out.stats.lifetime_hits, out.paths.iter().filter(|p| p.stopped_at.is_some()).count());
    }
}
