//! `hypgauss`: end-to-end runs of the Bolza-surface Gauss equation pipeline.
//!
//! Exit codes: 0 success, 2 usage or missing inputs, 3 continuation abort,
//! 4 mountain-pass failure, 1 anything else.

use std::fmt;
use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};

pub mod config;
pub mod pipeline;

pub use config::{RunConfig, WeightSpec};
pub use pipeline::Session;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitKind {
    Usage,
    ContinuationAbort,
    MountainPass,
}

impl ExitKind {
    pub fn code(self) -> u8 {
        match self {
            ExitKind::Usage => 2,
            ExitKind::ContinuationAbort => 3,
            ExitKind::MountainPass => 4,
        }
    }
}

/// An error carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub kind: ExitKind,
    pub message: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(f) = cause.downcast_ref::<Failure>() {
            return f.kind.code();
        }
        if let Some(e) = cause.downcast_ref::<hypgauss_core::Error>() {
            use hypgauss_core::Error as E;
            return match e {
                E::ContinuationAborted { .. } => 3,
                E::MountainPass(_) | E::NoSeparatingRidge => 4,
                E::InvalidInput(_) | E::MeshHashMismatch { .. } => 2,
                _ => 1,
            };
        }
    }
    1
}

#[derive(Debug, Parser)]
#[command(name = "hypgauss", version, about = "Gauss equation of minimal immersions of the Bolza surface")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Resume continuation from stored checkpoints.
    #[arg(long, global = true)]
    pub resume: bool,
    /// Refinement level (overrides the config).
    #[arg(long, global = true)]
    pub refine: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Comma-separated parameters for mpass and certify.
    #[arg(long, global = true, value_delimiter = ',')]
    pub t_list: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Build the mesh and print its summary.
    Mesh,
    /// Evaluate the weight field of the quadratic differential.
    Qdiff,
    /// Trace the solution branch through its fold.
    Continue,
    /// Stable and mountain-pass solutions at each requested t.
    Mpass,
    /// Curvature summaries, ambient metric samples and blow-up trend.
    Geom,
    /// Consolidate prior outputs.
    Report,
    /// Check nonexistence at each requested t.
    Certify,
}

impl Cli {
    /// Loads the config (or the constant-weight default) and applies the
    /// command-line overrides.
    pub fn session(&self) -> Result<Session> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p).map_err(|e| Failure { kind: ExitKind::Usage, message: format!("{e:#}") })?,
            None => RunConfig::new(WeightSpec::Constant { c: 1.0 }),
        };
        if let Some(o) = &self.out {
            cfg.out_dir = o.clone();
        }
        if let Some(r) = self.refine {
            cfg.refinement_level = r;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(ts) = &self.t_list {
            cfg.t_list = ts.clone();
        }
        Session::new(cfg)
    }
}

/// Runs one subcommand, printing a short summary to stdout.
pub fn run(cli: &Cli) -> Result<()> {
    let session = cli.session()?;
    match cli.command {
        Command::Mesh => {
            let s = session.cmd_mesh()?;
            println!(
                "level {}: {} vertices ({} raw), {} triangles, Euler characteristic {}",
                s.refinement_level, s.vertices, s.raw_vertices, s.triangles, s.euler_characteristic
            );
            println!("area {:.12} (defect {:.3e}, straight quadrature defect {:.3e})", s.area, s.area_defect, s.quadrature_area_defect);
        }
        Command::Qdiff => {
            let s = session.cmd_qdiff()?;
            println!("weight max {:.6e} min {:.6e}, pairing discrepancy {:.2e}", s.max, s.min, s.relative_pair_discrepancy);
            println!("int sqrt(w0) = {:.10}, nonexistence bound {:.10}", s.sqrt_integral, s.bound);
        }
        Command::Continue => {
            let f = session.cmd_continue(cli.resume)?;
            println!("{} branch points, fold at tau0 = {:.12} (|u|_inf = {:.10})", f.points, f.tau0, f.fold.sup_norm);
            println!("bound {:.10}, tau0 / bound = {:.6}", f.bound, f.ratio);
        }
        Command::Mpass => {
            let r = session.cmd_mpass();
            if let Ok(rep) = &r {
                println!("{:>12} {:>14} {:>14} {:>14} {:>12} {:>14}", "t", "kind", "|u|_inf", "mu1", "lambda_max", "energy");
                for p in &rep.pairs {
                    for (kind, row) in [("stable", &p.stable), ("mountain_pass", &p.mountain_pass)] {
                        println!(
                            "{:>12.8} {:>14} {:>14.10} {:>14.6} {:>12.6} {:>14.8}",
                            p.t, kind, row.sup_norm, row.mu1, row.lambda_max, row.energy
                        );
                    }
                }
            }
            r?;
        }
        Command::Geom => {
            let g = session.cmd_geom()?;
            for row in &g.trend.unstable {
                println!("t {:.6}: |u|_inf {:.6}, max|K| {:.6}", row.t, row.sup_norm, row.curvature_max_abs);
            }
            println!("{} solution summaries written", g.solutions.len());
        }
        Command::Report => {
            let r = session.cmd_report()?;
            println!(
                "tau0 {:.10}, bound {:.10}, {} stable and {} unstable points, {} mountain-pass pairs",
                r.tau0,
                r.bound,
                r.stable_points,
                r.unstable_points,
                r.mountain_pass.len()
            );
        }
        Command::Certify => {
            for rep in session.cmd_certify()? {
                println!("t {:.10} (bound {:.10}): {:?}, {} solutions", rep.t, rep.bound, rep.verdict, rep.solutions.len());
            }
        }
    }
    Ok(())
}

