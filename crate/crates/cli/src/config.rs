//! Run configuration. The file is JSON with camelCase keys; every field
//! except `weight` has a default, and unknown keys are rejected.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hypgauss_core::{MountainPassOptions, NewtonOptions, StepControl};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MAX_REFINEMENT_LEVEL: usize = 6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSpec {
    /// `w₀ ≡ c`.
    Constant { c: f64 },
    /// Weight of the Poincaré series with seed `wᵐ`, truncated at a
    /// hyperbolic radius `depth`.
    Poincare { m: u32, depth: f64 },
    /// A weight file written by `qdiff` for the same mesh.
    File { path: PathBuf },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "camelCase", deny_unknown_fields)]
pub struct ContinuationControls {
    pub dt: f64,
    pub ds: f64,
    pub ds_max: f64,
    pub switch_mu1: f64,
    pub t_min: f64,
    pub max_steps: usize,
    pub max_halvings: usize,
    pub fold_tol: f64,
}

impl Default for ContinuationControls {
    fn default() -> Self {
        let s = StepControl::default();
        ContinuationControls {
            dt: s.dt,
            ds: s.ds,
            ds_max: s.ds_max,
            switch_mu1: s.switch_mu1,
            t_min: s.t_min,
            max_steps: s.max_steps,
            max_halvings: s.max_halvings,
            fold_tol: s.fold_tol,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "camelCase", deny_unknown_fields)]
pub struct MountainPassControls {
    pub path_nodes: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub max_retries: usize,
    pub theta: f64,
}

impl Default for MountainPassControls {
    fn default() -> Self {
        let o = MountainPassOptions::default();
        MountainPassControls {
            path_nodes: o.path_nodes,
            tol: o.tol,
            max_iter: o.max_iter,
            max_retries: o.max_retries,
            theta: o.theta,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "camelCase", deny_unknown_fields)]
pub struct GeometryControls {
    /// Normal offsets sampled for the ambient metric, `r ∈ [−rMax, rMax]`.
    pub r_max: f64,
    pub r_samples: usize,
    /// Blow-up trend parameters as fractions of `τ₀`, strictly decreasing.
    pub trend_fractions: Vec<f64>,
}

impl Default for GeometryControls {
    fn default() -> Self {
        GeometryControls { r_max: 3.0, r_samples: 25, trend_fractions: vec![0.8, 0.4, 0.2] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RunConfig {
    pub weight: WeightSpec,
    #[serde(default = "default_level")]
    pub refinement_level: usize,
    #[serde(default)]
    pub continuation: ContinuationControls,
    #[serde(default = "default_newton_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_newton_max_iter")]
    pub newton_max_iter: usize,
    #[serde(default)]
    pub mountain_pass: MountainPassControls,
    /// Parameters for `mpass` and `certify`; empty means the documented
    /// defaults.
    #[serde(default)]
    pub t_list: Vec<f64>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_attempts")]
    pub certify_attempts: usize,
    #[serde(default)]
    pub geometry: GeometryControls,
}

fn default_level() -> usize {
    3
}
fn default_newton_tol() -> f64 {
    NewtonOptions::default().tol
}
fn default_newton_max_iter() -> usize {
    NewtonOptions::default().max_iter
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_attempts() -> usize {
    20
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        bail!(msg())
    }
}

fn in_range(name: &str, v: f64, lo: f64, hi: f64) -> Result<()> {
    check(v.is_finite() && v > lo && v <= hi, || format!("{name} = {v} must lie in ({lo}, {hi}]"))
}

impl RunConfig {
    pub fn new(weight: WeightSpec) -> Self {
        RunConfig {
            weight,
            refinement_level: default_level(),
            continuation: ContinuationControls::default(),
            newton_tol: default_newton_tol(),
            newton_max_iter: default_newton_max_iter(),
            mountain_pass: MountainPassControls::default(),
            t_list: Vec::new(),
            out_dir: default_out_dir(),
            seed: 0,
            certify_attempts: default_attempts(),
            geometry: GeometryControls::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).context("malformed config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        match &self.weight {
            WeightSpec::Constant { c } => in_range("weight.c", *c, 0.0, 1e6)?,
            WeightSpec::Poincare { m, depth } => {
                check(*m <= 16, || format!("weight.m = {m} must be at most 16"))?;
                in_range("weight.depth", *depth, 0.0, 16.0)?;
            }
            WeightSpec::File { path } => {
                check(!path.as_os_str().is_empty(), || "weight.path is empty".into())?;
            }
        }
        check(self.refinement_level <= MAX_REFINEMENT_LEVEL, || {
            format!("refinementLevel = {} must be at most {MAX_REFINEMENT_LEVEL}", self.refinement_level)
        })?;
        in_range("newtonTol", self.newton_tol, 0.0, 1e-4)?;
        check((1..=1000).contains(&self.newton_max_iter), || {
            format!("newtonMaxIter = {} must lie in [1, 1000]", self.newton_max_iter)
        })?;
        self.step_control().validate()?;
        let mp = &self.mountain_pass;
        check((2..=1000).contains(&mp.path_nodes), || format!("mountainPass.pathNodes = {} must lie in [2, 1000]", mp.path_nodes))?;
        in_range("mountainPass.tol", mp.tol, 0.0, 1.0)?;
        check(mp.max_iter >= 1, || "mountainPass.maxIter must be at least 1".into())?;
        check(mp.max_retries <= 8, || format!("mountainPass.maxRetries = {} must be at most 8", mp.max_retries))?;
        check(mp.theta.is_finite() && mp.theta > 2.0, || format!("mountainPass.theta = {} must exceed 2", mp.theta))?;
        for &t in &self.t_list {
            in_range("tList entry", t, 0.0, 1e6)?;
        }
        check((1..=10_000).contains(&self.certify_attempts), || {
            format!("certifyAttempts = {} must lie in [1, 10000]", self.certify_attempts)
        })?;
        let g = &self.geometry;
        in_range("geometry.rMax", g.r_max, 0.0, 50.0)?;
        check((2..=10_000).contains(&g.r_samples), || format!("geometry.rSamples = {} must lie in [2, 10000]", g.r_samples))?;
        check(!g.trend_fractions.is_empty(), || "geometry.trendFractions is empty".into())?;
        for &f in &g.trend_fractions {
            check(f.is_finite() && f > 0.0 && f < 1.0, || format!("geometry.trendFractions entry {f} must lie in (0, 1)"))?;
        }
        check(g.trend_fractions.windows(2).all(|w| w[1] < w[0]), || {
            "geometry.trendFractions must be strictly decreasing".into()
        })?;
        Ok(())
    }

    pub fn newton(&self) -> NewtonOptions {
        NewtonOptions { tol: self.newton_tol, max_iter: self.newton_max_iter }
    }

    pub fn step_control(&self) -> StepControl {
        let c = &self.continuation;
        StepControl {
            dt: c.dt,
            ds: c.ds,
            ds_max: c.ds_max,
            switch_mu1: c.switch_mu1,
            t_min: c.t_min,
            max_steps: c.max_steps,
            max_halvings: c.max_halvings,
            fold_tol: c.fold_tol,
            newton: self.newton(),
        }
    }

    pub fn mountain_pass_options(&self) -> MountainPassOptions {
        let m = &self.mountain_pass;
        MountainPassOptions {
            path_nodes: m.path_nodes,
            tol: m.tol,
            max_iter: m.max_iter,
            max_retries: m.max_retries,
            theta: m.theta,
            newton: self.newton(),
        }
    }

    /// SHA-256 over every field that influences artifact contents. The
    /// output directory and the t-list are left out; a weight file
    /// contributes its bytes rather than its path.
    pub fn hash(&self) -> Result<String> {
        let mut view = self.clone();
        view.out_dir = PathBuf::new();
        view.t_list.clear();
        let mut h = Sha256::new();
        if let WeightSpec::File { path } = &view.weight {
            let bytes = std::fs::read(path).with_context(|| format!("reading weight file {}", path.display()))?;
            h.update(Sha256::digest(&bytes));
            view.weight = WeightSpec::File { path: PathBuf::new() };
        }
        h.update(serde_json::to_vec(&view)?);
        Ok(hex::encode(h.finalize()))
    }
}
