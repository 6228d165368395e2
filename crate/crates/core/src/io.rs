//! JSON and JSON Lines files: profiles, trajectories, manifests.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::stochastic::StochasticRunOutcome;
use crate::flow::{StopReason, TrajectoryRecord};
use crate::geometry::{CurvatureProfile, GeometryReport};

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let r = BufReader::new(File::open(path)?);
    Ok(serde_json::from_reader(r)?)
}

pub fn read_profile(path: &Path) -> Result<CurvatureProfile> {
    read_json(path)
}

pub fn write_profile(path: &Path, profile: &CurvatureProfile) -> Result<()> {
    write_json(path, profile)
}

/// First line of a trajectory file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryHeader {
    pub flow: String,
    pub seed: Option<u64>,
    pub n_samples: usize,
    pub symmetry_order: usize,
    pub steps: usize,
    pub stop_reason: StopReason,
    pub records: usize,
}

/// One recorded state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLine {
    pub t: f64,
    pub report: GeometryReport,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub brownian: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub integral_h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sector_increase: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rho: Option<Vec<f64>>,
}

fn trajectory_lines(traj: &TrajectoryRecord, stochastic: Option<&StochasticRunOutcome>) -> Vec<TrajectoryLine> {
    (0..traj.len())
        .map(|i| TrajectoryLine {
            t: traj.times[i],
            report: traj.reports[i],
            brownian: stochastic.map(|s| s.brownian[i]),
            integral_h: stochastic.map(|s| s.integral_h[i]),
            sector_increase: traj.sector_increase.get(i).copied(),
            rho: traj.profiles.get(i).map(|p| p.rho().to_vec()),
        })
        .collect()
}

pub fn write_jsonl<T: Serialize>(path: &Path, header: &impl Serialize, lines: &[T]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut w, header)?;
    w.write_all(b"\n")?;
    for line in lines {
        serde_json::to_writer(&mut w, line)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_jsonl<H: DeserializeOwned, T: DeserializeOwned>(path: &Path) -> Result<(H, Vec<T>)> {
    let r = BufReader::new(File::open(path)?);
    let mut lines = r.lines();
    let first = lines.next().ok_or_else(|| Error::InvalidConfig(format!("{} is empty", path.display())))??;
    let header = serde_json::from_str(&first)?;
    let mut body = Vec::new();
    for line in lines {
        let line = line?;
        if !line.trim().is_empty() {
            body.push(serde_json::from_str(&line)?);
        }
    }
    Ok((header, body))
}

pub fn write_trajectory(
    path: &Path,
    flow: &str,
    traj: &TrajectoryRecord,
    stochastic: Option<&StochasticRunOutcome>,
) -> Result<()> {
    let header = TrajectoryHeader {
        flow: flow.into(),
        seed: stochastic.map(|s| s.seed),
        n_samples: traj.n_samples,
        symmetry_order: traj.symmetry_order,
        steps: traj.steps,
        stop_reason: traj.stop_reason,
        records: traj.len(),
    };
    write_jsonl(path, &header, &trajectory_lines(traj, stochastic))
}

pub fn read_trajectory(path: &Path) -> Result<(TrajectoryHeader, Vec<TrajectoryLine>)> {
    read_jsonl(path)
}

/// Record of one command invocation, written once per output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub version: String,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn new(command: &str, args: Vec<String>, config: serde_json::Value) -> Self {
        Self {
            command: command.into(),
            args,
            config,
            seeds: Vec::new(),
            version: env!("CARGO_PKG_VERSION").into(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            wall_clock_seconds: 0.0,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join(MANIFEST_FILE), self)
    }
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}
