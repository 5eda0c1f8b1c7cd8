//! Artifact formats. Every CSV starts with a `# config_hash=…,mesh_hash=…`
//! line and every JSON document carries the same two fields, so artifacts
//! from different runs are refused when mixed.

use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::continuation::{BranchPoint, StepMode};
use crate::error::{Error, Result};
use crate::geometry::{principal_curvature, AmbientMetricSample};
use crate::mountain_pass::TraceRow;
use crate::solver::Solution;

pub const CHECKPOINT_SCHEMA_VERSION: u32 = 1;

pub const BRANCH_COLUMNS: [&str; 7] = ["s", "t", "mu1", "uMin", "uMax", "residualNorm", "lambdaMax"];
pub const TRACE_COLUMNS: [&str; 4] = ["iteration", "maxNodeIndex", "maxEnergy", "gradVNorm"];
pub const AMBIENT_COLUMNS: [&str; 7] = ["z_re", "z_im", "r", "g11", "g12", "g22", "degenerate"];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactStamp {
    pub config_hash: String,
    pub mesh_hash: String,
}

impl ArtifactStamp {
    pub fn header_line(&self) -> String {
        format!("# config_hash={},mesh_hash={}", self.config_hash, self.mesh_hash)
    }

    pub fn parse_header(line: &str) -> Result<Self> {
        let body = line
            .trim_end()
            .strip_prefix("# ")
            .ok_or_else(|| Error::InvalidInput(format!("missing artifact stamp line, found {line:?}")))?;
        let mut config_hash = None;
        let mut mesh_hash = None;
        for item in body.split(',') {
            match item.split_once('=') {
                Some(("config_hash", v)) => config_hash = Some(v.to_string()),
                Some(("mesh_hash", v)) => mesh_hash = Some(v.to_string()),
                _ => return Err(Error::InvalidInput(format!("malformed artifact stamp {line:?}"))),
            }
        }
        match (config_hash, mesh_hash) {
            (Some(config_hash), Some(mesh_hash)) => Ok(ArtifactStamp { config_hash, mesh_hash }),
            _ => Err(Error::InvalidInput(format!("incomplete artifact stamp {line:?}"))),
        }
    }

    /// Refuses an artifact produced under another configuration or mesh.
    pub fn check(&self, found: &ArtifactStamp) -> Result<()> {
        if self.mesh_hash != found.mesh_hash {
            return Err(Error::MeshHashMismatch { expected: self.mesh_hash.clone(), found: found.mesh_hash.clone() });
        }
        if self.config_hash != found.config_hash {
            return Err(Error::InvalidInput(format!(
                "artifact was produced by config {} but the current config is {}",
                found.config_hash, self.config_hash
            )));
        }
        Ok(())
    }
}

fn stamped_writer<W: Write>(mut out: W, stamp: &ArtifactStamp, columns: &[&str]) -> Result<csv::Writer<W>> {
    writeln!(out, "{}", stamp.header_line())?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(columns)?;
    Ok(w)
}

/// Reads the stamp line and hands back a CSV reader positioned at the
/// column header.
pub fn stamped_reader<R: BufRead>(mut input: R) -> Result<(ArtifactStamp, csv::Reader<R>)> {
    let mut line = String::new();
    input.read_line(&mut line)?;
    let stamp = ArtifactStamp::parse_header(&line)?;
    Ok((stamp, csv::Reader::from_reader(input)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BranchRow {
    pub s: f64,
    pub t: f64,
    pub mu1: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub residual_norm: f64,
    pub lambda_max: f64,
}

impl BranchRow {
    pub fn new(s: f64, sol: &Solution, w0: &[f64]) -> Self {
        BranchRow {
            s,
            t: sol.t,
            mu1: sol.mu1,
            u_min: sol.u_min(),
            u_max: sol.u_max(),
            residual_norm: sol.residual_norm,
            lambda_max: principal_curvature(sol, w0).into_iter().fold(0.0, f64::max),
        }
    }
}

/// Stamp line, column header, then one record per row.
pub fn write_stamped_csv<W: Write, T: Serialize>(out: W, stamp: &ArtifactStamp, columns: &[&str], rows: &[T]) -> Result<()> {
    let mut w = stamped_writer(out, stamp, columns)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_branch_csv<W: Write>(out: W, stamp: &ArtifactStamp, rows: &[BranchRow]) -> Result<()> {
    write_stamped_csv(out, stamp, &BRANCH_COLUMNS, rows)
}

pub fn read_stamped_csv<R: BufRead, T: DeserializeOwned>(input: R) -> Result<(ArtifactStamp, Vec<T>)> {
    let (stamp, mut r) = stamped_reader(input)?;
    let rows = r.deserialize().collect::<std::result::Result<Vec<T>, _>>()?;
    Ok((stamp, rows))
}

pub fn read_branch_csv<R: BufRead>(input: R) -> Result<(ArtifactStamp, Vec<BranchRow>)> {
    read_stamped_csv(input)
}

pub fn write_trace_csv<W: Write>(out: W, stamp: &ArtifactStamp, rows: &[TraceRow]) -> Result<()> {
    write_stamped_csv(out, stamp, &TRACE_COLUMNS, rows)
}

pub fn write_ambient_csv<W: Write>(out: W, stamp: &ArtifactStamp, samples: &[AmbientMetricSample]) -> Result<()> {
    let mut w = stamped_writer(out, stamp, &AMBIENT_COLUMNS)?;
    for s in samples {
        w.serialize((s.z[0], s.z[1], s.r, s.g[0], s.g[1], s.g[2], s.degenerate))?;
    }
    w.flush()?;
    Ok(())
}

/// One solution snapshot, used for branch points and standalone solutions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub schema_version: u32,
    pub config_hash: String,
    pub mesh_hash: String,
    pub t: f64,
    /// Arclength position for branch points.
    pub s: Option<f64>,
    pub mode: Option<StepMode>,
    pub step: Option<f64>,
    pub mu1: f64,
    pub residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
    pub u: Vec<f64>,
}

impl Checkpoint {
    pub fn from_solution(stamp: &ArtifactStamp, sol: &Solution) -> Self {
        Checkpoint {
            schema_version: CHECKPOINT_SCHEMA_VERSION,
            config_hash: stamp.config_hash.clone(),
            mesh_hash: stamp.mesh_hash.clone(),
            t: sol.t,
            s: None,
            mode: None,
            step: None,
            mu1: sol.mu1,
            residual_norm: sol.residual_norm,
            converged: sol.converged,
            iterations: sol.iterations,
            u: sol.u.clone(),
        }
    }

    pub fn from_point(stamp: &ArtifactStamp, p: &BranchPoint) -> Self {
        Checkpoint { s: Some(p.s), mode: Some(p.mode), step: Some(p.step), ..Self::from_solution(stamp, &p.solution) }
    }

    pub fn stamp(&self) -> ArtifactStamp {
        ArtifactStamp { config_hash: self.config_hash.clone(), mesh_hash: self.mesh_hash.clone() }
    }

    pub fn solution(&self) -> Solution {
        Solution {
            u: self.u.clone(),
            t: self.t,
            residual_norm: self.residual_norm,
            mu1: self.mu1,
            converged: self.converged,
            iterations: self.iterations,
        }
    }

    pub fn branch_point(&self) -> Result<BranchPoint> {
        match (self.s, self.mode, self.step) {
            (Some(s), Some(mode), Some(step)) => Ok(BranchPoint { s, solution: self.solution(), mode, step }),
            _ => Err(Error::InvalidInput(format!("checkpoint at t = {} is not a branch point", self.t))),
        }
    }

    /// Parses a checkpoint and refuses it unless it matches `expected`.
    pub fn read(json: &str, expected: &ArtifactStamp) -> Result<Self> {
        let c: Checkpoint = serde_json::from_str(json)?;
        if c.schema_version != CHECKPOINT_SCHEMA_VERSION {
            return Err(Error::InvalidInput(format!("unsupported checkpoint schema version {}", c.schema_version)));
        }
        expected.check(&c.stamp())?;
        Ok(c)
    }
}
