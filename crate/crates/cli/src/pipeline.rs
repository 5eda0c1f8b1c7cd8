//! The subcommands. Each one rebuilds the mesh and weight from the config,
//! refuses existing artifacts stamped by another config or mesh, and writes
//! its outputs under the configured output directory.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hypgauss_core::geometry::{lambda_distance, principal_curvature, BlowupTrend, NormalData};
use hypgauss_core::io::{
    read_stamped_csv, write_ambient_csv, write_branch_csv, write_stamped_csv, write_trace_csv, ArtifactStamp,
    BranchRow, Checkpoint,
};
use hypgauss_core::mesh::MeshFile;
use hypgauss_core::quad_diff::WeightFile;
use hypgauss_core::solver::integral_identity;
use hypgauss_core::{
    blowup_trend, build_mesh, certify_no_solution, continue_branch_with, curvature_report, degeneration_radius,
    mountain_pass_solve, nonexistence_bound, qd_norms, weight_field, BolzaDomain, Branch,
    BranchSide, CertifyReport, Provenance, QuadraticDifferential, Solution, SurfaceMesh,
    WeightField,
};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, WeightSpec};
use crate::{ExitKind, Failure};

/// Version of every JSON document written here.
pub const SCHEMA_VERSION: u32 = 1;

pub const MESH_FILE: &str = "mesh.json";
pub const WEIGHT_FILE: &str = "weight.json";
pub const BRANCH_FILE: &str = "branch.csv";
pub const FOLD_FILE: &str = "fold.json";
pub const FOLD_SOLUTION_FILE: &str = "fold_solution.json";
pub const CHECKPOINT_DIR: &str = "checkpoints";
pub const MPASS_DIR: &str = "mpass";
pub const MPASS_FILE: &str = "mpass.json";
pub const MPASS_TABLE: &str = "mpass.csv";
pub const GEOMETRY_FILE: &str = "geometry.json";
pub const AMBIENT_DIR: &str = "ambient";
pub const REPORT_FILE: &str = "report.json";
pub const DIAGRAM_FILE: &str = "bifurcation.csv";
pub const CERTIFY_DIR: &str = "certify";

pub const MPASS_COLUMNS: [&str; 8] = ["t", "kind", "supNorm", "mu1", "lambdaMax", "energy", "residualNorm", "converged"];
pub const DIAGRAM_COLUMNS: [&str; 5] = ["s", "t", "supNorm", "mu1", "stable"];

/// Default mountain-pass parameters as fractions of `τ₀`.
pub const DEFAULT_MPASS_FRACTIONS: [f64; 3] = [0.25, 0.5, 0.75];

/// Common envelope of every JSON artifact.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Document<T> {
    pub schema_version: u32,
    pub config_hash: String,
    pub mesh_hash: String,
    #[serde(flatten)]
    pub body: T,
}

#[derive(Deserialize)]
struct StampOnly {
    config_hash: String,
    mesh_hash: String,
}

fn usage(message: String) -> anyhow::Error {
    Failure { kind: ExitKind::Usage, message }.into()
}

fn require(path: &Path, producer: &str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(usage(format!("missing input {}; run `{producer}` first", path.display())))
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn check_stamp(path: &Path, text: &str, expected: &ArtifactStamp) -> Result<()> {
    let head: StampOnly = serde_json::from_str(text).with_context(|| format!("parsing {}", path.display()))?;
    expected
        .check(&ArtifactStamp { config_hash: head.config_hash, mesh_hash: head.mesh_hash })
        .with_context(|| format!("refusing {}", path.display()))?;
    Ok(())
}

fn read_document<T: DeserializeOwned>(path: &Path, expected: &ArtifactStamp) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    check_stamp(path, &text, expected)?;
    let doc: Document<T> = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if doc.schema_version != SCHEMA_VERSION {
        bail!("{} has schema version {}, expected {SCHEMA_VERSION}", path.display(), doc.schema_version);
    }
    Ok(doc.body)
}

fn read_csv<T: DeserializeOwned>(path: &Path, expected: &ArtifactStamp) -> Result<Vec<T>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let (stamp, rows) = read_stamped_csv(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))?;
    expected.check(&stamp).with_context(|| format!("refusing {}", path.display()))?;
    Ok(rows)
}

fn read_checkpoint(path: &Path, expected: &ArtifactStamp) -> Result<Checkpoint> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Checkpoint::read(&text, expected).with_context(|| format!("refusing {}", path.display()))
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn argmax(v: &[f64]) -> usize {
    v.iter().enumerate().fold(0, |best, (i, x)| if *x > v[best] { i } else { best })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MeshSummary {
    pub refinement_level: usize,
    pub vertices: usize,
    pub raw_vertices: usize,
    pub triangles: usize,
    pub euler_characteristic: i64,
    pub area: f64,
    /// `|area − 4π|` for the lumped mass.
    pub area_defect: f64,
    /// Same for straight-triangle quadrature of the hyperbolic density.
    pub quadrature_area_defect: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeshDocument {
    pub summary: MeshSummary,
    pub mesh: MeshFile,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WeightSummary {
    pub provenance: Provenance,
    pub group_elements: Option<usize>,
    pub max: f64,
    pub min: f64,
    /// `∫ √w₀`.
    pub sqrt_integral: f64,
    /// `(∫ w₀)^{1/2}`.
    pub l2_norm: f64,
    pub bound: f64,
    pub relative_pair_discrepancy: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeightDocument {
    pub summary: WeightSummary,
    pub weight: WeightFile,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SolutionStats {
    pub t: f64,
    pub sup_norm: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub mu1: f64,
    pub lambda_max: f64,
    pub residual_norm: f64,
    pub converged: bool,
}

impl SolutionStats {
    pub fn new(sol: &Solution, w0: &[f64]) -> Self {
        SolutionStats {
            t: sol.t,
            sup_norm: sol.sup_norm(),
            u_min: sol.u_min(),
            u_max: sol.u_max(),
            mu1: sol.mu1,
            lambda_max: principal_curvature(sol, w0).into_iter().fold(0.0, f64::max),
            residual_norm: sol.residual_norm,
            converged: sol.converged,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FoldReport {
    pub tau0: f64,
    pub fold_s: f64,
    pub fold_index: usize,
    pub points: usize,
    pub mu1_sign_changes: usize,
    pub fold: SolutionStats,
    pub bound: f64,
    /// `τ₀ / bound`, at most 1.
    pub ratio: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PassRow {
    pub sup_norm: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub mu1: f64,
    pub lambda_max: f64,
    /// Truncated energy `ℱ`.
    pub energy: f64,
    pub residual_norm: f64,
    pub converged: bool,
}

impl PassRow {
    fn new(sol: &Solution, w0: &[f64], energy: f64) -> Self {
        let s = SolutionStats::new(sol, w0);
        PassRow {
            sup_norm: s.sup_norm,
            u_min: s.u_min,
            u_max: s.u_max,
            mu1: s.mu1,
            lambda_max: s.lambda_max,
            energy,
            residual_norm: s.residual_norm,
            converged: s.converged,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PassPair {
    pub index: usize,
    pub t: f64,
    pub stable: PassRow,
    pub mountain_pass: PassRow,
    /// `max |λ_stable − λ_mountain|`.
    pub lambda_distance: f64,
    /// `|‖u‖∞ − ‖u_branch‖∞|` against the post-fold branch at the same `t`.
    pub branch_sup_gap: Option<f64>,
    pub endpoint: f64,
    pub descent_iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PassFailure {
    pub index: usize,
    pub t: f64,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MpassReport {
    pub tau0: f64,
    pub bound: f64,
    pub pairs: Vec<PassPair>,
    pub failures: Vec<PassFailure>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct MpassCsvRow<'a> {
    t: f64,
    kind: &'a str,
    sup_norm: f64,
    mu1: f64,
    lambda_max: f64,
    energy: f64,
    residual_norm: f64,
    converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GeometrySummary {
    pub label: String,
    pub t: f64,
    pub sup_norm: f64,
    pub lambda_max: f64,
    pub curvature_max_abs: f64,
    pub almost_fuchsian: bool,
    pub gauss_bonnet_defect: f64,
    /// `Σ M (e^{2u} + t² w₀ e^{−2u}) − |S|`.
    pub lumped_identity_defect: f64,
    /// The same identity with the P1 quadrature functional.
    pub quadrature_identity_defect: f64,
    /// `None` when the normal exponential map never degenerates.
    pub degeneration_radius: Option<f64>,
    pub frame_undefined: usize,
    /// Canonical vertex of largest `λ`, where the ambient metric is sampled.
    pub ambient_vertex: usize,
    pub ambient_degenerate_samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GeometryReport {
    pub trend: BlowupTrend,
    pub solutions: Vec<GeometrySummary>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DiagramRow {
    pub s: f64,
    pub t: f64,
    pub sup_norm: f64,
    pub mu1: f64,
    pub stable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Report {
    pub tau0: f64,
    pub bound: f64,
    pub ratio: f64,
    pub stable_points: usize,
    pub unstable_points: usize,
    pub bifurcation: Vec<DiagramRow>,
    pub mountain_pass: Vec<PassPair>,
    pub trend: BlowupTrend,
    pub geometry: Vec<GeometrySummary>,
}

/// Identity defect with the lumped functional: `Σ M (e^{2u} + t² w₀ e^{−2u}) − |S|`.
pub fn lumped_identity_defect(sol: &Solution, mesh: &SurfaceMesh, w0: &[f64]) -> f64 {
    let t2 = sol.t * sol.t;
    let f: Vec<f64> = sol.u.iter().zip(w0).map(|(u, w)| (2.0 * u).exp() + t2 * w * (-2.0 * u).exp()).collect();
    mesh.lumped_integral(&f) - mesh.total_area()
}

/// A validated config together with its hash.
#[derive(Clone, Debug)]
pub struct Session {
    pub config: RunConfig,
    pub config_hash: String,
}

impl Session {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate().map_err(|e| usage(format!("{e:#}")))?;
        let config_hash = config.hash()?;
        Ok(Session { config, config_hash })
    }

    pub fn out(&self) -> &Path {
        &self.config.out_dir
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.config.out_dir.join(rel)
    }

    pub fn stamp(&self, mesh: &SurfaceMesh) -> ArtifactStamp {
        ArtifactStamp { config_hash: self.config_hash.clone(), mesh_hash: mesh.hash().to_string() }
    }

    fn document<T>(&self, mesh: &SurfaceMesh, body: T) -> Document<T> {
        Document { schema_version: SCHEMA_VERSION, config_hash: self.config_hash.clone(), mesh_hash: mesh.hash().into(), body }
    }

    fn refuse_foreign(&self, rel: &str, stamp: &ArtifactStamp) -> Result<()> {
        let path = self.path(rel);
        if path.exists() {
            let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            check_stamp(&path, &text, stamp)?;
        }
        Ok(())
    }

    /// Builds the mesh; an existing mesh file must carry the same stamp.
    pub fn mesh(&self) -> Result<SurfaceMesh> {
        let mesh = build_mesh(&BolzaDomain::new(), self.config.refinement_level)?;
        self.refuse_foreign(MESH_FILE, &self.stamp(&mesh))?;
        Ok(mesh)
    }

    /// Builds (or reads) the weight field for `mesh`.
    pub fn weight(&self, mesh: &SurfaceMesh) -> Result<(WeightField, Option<usize>)> {
        self.refuse_foreign(WEIGHT_FILE, &self.stamp(mesh))?;
        match &self.config.weight {
            WeightSpec::Constant { c } => Ok((WeightField::constant(mesh, *c)?, None)),
            WeightSpec::Poincare { m, depth } => {
                let qd = QuadraticDifferential::poincare(&BolzaDomain::new(), *m, *depth)?;
                Ok((weight_field(&qd, mesh)?, Some(qd.group_elements.len())))
            }
            WeightSpec::File { path } => {
                let text = fs::read_to_string(path).with_context(|| format!("reading weight file {}", path.display()))?;
                let doc: Document<WeightDocument> = serde_json::from_str(&text)
                    .with_context(|| format!("parsing weight file {}", path.display()))?;
                Ok((doc.body.weight.into_field(mesh)?, doc.body.summary.group_elements))
            }
        }
    }

    fn prepare(&self, sub: &[&str]) -> Result<()> {
        fs::create_dir_all(self.out()).with_context(|| format!("creating {}", self.out().display()))?;
        for s in sub {
            fs::create_dir_all(self.path(s))?;
        }
        Ok(())
    }

    pub fn cmd_mesh(&self) -> Result<MeshSummary> {
        self.prepare(&[])?;
        let mesh = self.mesh()?;
        let quad = mesh.lumped_areas(hypgauss_core::MassScheme::StraightQuadrature)?.iter().sum::<f64>();
        let four_pi = 4.0 * std::f64::consts::PI;
        let summary = MeshSummary {
            refinement_level: mesh.refinement_level,
            vertices: mesh.n_canonical(),
            raw_vertices: mesh.vertices.len(),
            triangles: mesh.triangles.len(),
            euler_characteristic: mesh.euler_characteristic(),
            area: mesh.total_area(),
            area_defect: (mesh.total_area() - four_pi).abs(),
            quadrature_area_defect: (quad - four_pi).abs(),
        };
        write_json(&self.path(MESH_FILE), &self.document(&mesh, MeshDocument { summary, mesh: MeshFile::from(&mesh) }))?;
        Ok(summary)
    }

    pub fn cmd_qdiff(&self) -> Result<WeightSummary> {
        self.prepare(&[])?;
        let mesh = self.mesh()?;
        let (weight, group_elements) = self.weight(&mesh)?;
        let (sqrt_integral, l2_norm) = qd_norms(&weight, &mesh);
        let summary = WeightSummary {
            provenance: weight.provenance.clone(),
            group_elements,
            max: weight.max(),
            min: weight.min(),
            sqrt_integral,
            l2_norm,
            bound: nonexistence_bound(&weight, &mesh)?,
            relative_pair_discrepancy: weight.relative_pair_discrepancy(),
        };
        let doc = self.document(&mesh, WeightDocument { summary: summary.clone(), weight: WeightFile::from(&weight) });
        write_json(&self.path(WEIGHT_FILE), &doc)?;
        Ok(summary)
    }

    fn checkpoint_path(&self, index: usize) -> PathBuf {
        self.path(CHECKPOINT_DIR).join(format!("point_{index:05}.json"))
    }

    fn checkpoint_files(&self) -> Result<Vec<PathBuf>> {
        let dir = self.path(CHECKPOINT_DIR);
        if !dir.exists() {
            return Ok(Vec::new());
        }
        let mut files: Vec<PathBuf> = fs::read_dir(&dir)?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<_>>()?;
        files.retain(|p| {
            p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("point_") && n.ends_with(".json"))
        });
        files.sort();
        Ok(files)
    }

    fn read_points(&self, stamp: &ArtifactStamp) -> Result<Branch> {
        let mut branch = Branch::default();
        for (i, path) in self.checkpoint_files()?.iter().enumerate() {
            if *path != self.checkpoint_path(i) {
                bail!("checkpoint sequence has a gap before {}", path.display());
            }
            branch.points.push(read_checkpoint(path, stamp)?.branch_point()?);
        }
        Ok(branch)
    }

    fn write_branch(&self, branch: &Branch, stamp: &ArtifactStamp, w0: &[f64]) -> Result<()> {
        let mut rows: Vec<BranchRow> = branch.points.iter().map(|p| BranchRow::new(p.s, &p.solution, w0)).collect();
        if let (Some(i), Some(f), Some(s)) = (branch.fold_index, &branch.fold_solution, branch.fold_s) {
            rows.insert(i, BranchRow::new(s, f, w0));
        }
        write_branch_csv(create(&self.path(BRANCH_FILE))?, stamp, &rows)?;
        Ok(())
    }

    /// Traces the branch through its fold, checkpointing every point.
    /// With `resume`, stored checkpoints seed the run.
    pub fn cmd_continue(&self, resume: bool) -> Result<FoldReport> {
        self.prepare(&[CHECKPOINT_DIR])?;
        let mesh = self.mesh()?;
        let (weight, _) = self.weight(&mesh)?;
        let stamp = self.stamp(&mesh);
        let start = if resume {
            let b = self.read_points(&stamp)?;
            if b.points.is_empty() {
                return Err(usage(format!("--resume given but {} holds no checkpoints", self.path(CHECKPOINT_DIR).display())));
            }
            Some(b)
        } else {
            for f in self.checkpoint_files()? {
                fs::remove_file(f)?;
            }
            None
        };
        let mut on_point = |b: &Branch, i: usize| -> hypgauss_core::Result<()> {
            let json = serde_json::to_string(&Checkpoint::from_point(&stamp, &b.points[i]))?;
            fs::write(self.checkpoint_path(i), json)?;
            Ok(())
        };
        let branch = match continue_branch_with(&mesh, &weight.values, &self.config.step_control(), start, &mut on_point) {
            Ok(b) => b,
            Err(hypgauss_core::Error::ContinuationAborted { reason, partial }) => {
                self.write_branch(&partial, &stamp, &weight.values)?;
                return Err(Failure {
                    kind: ExitKind::ContinuationAbort,
                    message: format!(
                        "continuation aborted after {} points: {reason}; partial branch kept in {}",
                        partial.points.len(),
                        self.out().display()
                    ),
                }
                .into());
            }
            Err(e) => return Err(e.into()),
        };
        let (Some(tau0), Some(fold), Some(fold_s), Some(fold_index)) =
            (branch.fold_parameter, branch.fold_solution.as_ref(), branch.fold_s, branch.fold_index)
        else {
            self.write_branch(&branch, &stamp, &weight.values)?;
            return Err(
                Failure { kind: ExitKind::ContinuationAbort, message: "continuation ended without locating a fold".into() }
                    .into(),
            );
        };
        self.write_branch(&branch, &stamp, &weight.values)?;
        write_json(&self.path(FOLD_SOLUTION_FILE), &Checkpoint::from_solution(&stamp, fold))?;
        let bound = nonexistence_bound(&weight, &mesh)?;
        let report = FoldReport {
            tau0,
            fold_s,
            fold_index,
            points: branch.points.len(),
            mu1_sign_changes: branch.mu1_sign_changes(),
            fold: SolutionStats::new(fold, &weight.values),
            bound,
            ratio: tau0 / bound,
        };
        write_json(&self.path(FOLD_FILE), &self.document(&mesh, report.clone()))?;
        Ok(report)
    }

    /// Reassembles the branch written by `continue`.
    pub fn load_branch(&self, mesh: &SurfaceMesh) -> Result<(Branch, FoldReport)> {
        let stamp = self.stamp(mesh);
        require(&self.path(FOLD_FILE), "continue")?;
        let report: FoldReport = read_document(&self.path(FOLD_FILE), &stamp)?;
        let fold = read_checkpoint(&self.path(FOLD_SOLUTION_FILE), &stamp)?.solution();
        let mut branch = self.read_points(&stamp)?;
        if branch.points.len() != report.points {
            bail!("found {} checkpoints but the fold report lists {}", branch.points.len(), report.points);
        }
        branch.fold_parameter = Some(report.tau0);
        branch.fold_solution = Some(fold);
        branch.fold_s = Some(report.fold_s);
        branch.fold_index = Some(report.fold_index);
        Ok((branch, report))
    }

    /// Requested mountain-pass parameters: the t-list, or the default
    /// fractions of `τ₀`.
    pub fn mpass_parameters(&self, tau0: f64) -> Vec<f64> {
        if self.config.t_list.is_empty() {
            DEFAULT_MPASS_FRACTIONS.iter().map(|f| f * tau0).collect()
        } else {
            self.config.t_list.clone()
        }
    }

    fn solution_file(&self, index: usize, kind: &str) -> PathBuf {
        self.path(MPASS_DIR).join(format!("t{index:02}_{kind}.json"))
    }

    /// Stable solution and mountain-pass solution for each requested `t`,
    /// run concurrently with one output file set per `t`.
    pub fn cmd_mpass(&self) -> Result<MpassReport> {
        let mesh = self.mesh()?;
        let (weight, _) = self.weight(&mesh)?;
        let (branch, fold) = self.load_branch(&mesh)?;
        if self.path(MPASS_DIR).exists() {
            fs::remove_dir_all(self.path(MPASS_DIR))?;
        }
        self.prepare(&[MPASS_DIR])?;
        let stamp = self.stamp(&mesh);
        let w0 = &weight.values;
        let newton = self.config.newton();
        let opts = self.config.mountain_pass_options();
        let ts = self.mpass_parameters(fold.tau0);
        let outcomes: Vec<std::result::Result<PassPair, PassFailure>> = ts
            .par_iter()
            .enumerate()
            .map(|(index, &t)| {
                let fail = |message: String| PassFailure { index, t, message };
                if t >= fold.tau0 {
                    let why = if t >= fold.bound {
                        format!("no solution exists for t >= {} (certified bound)", fold.bound)
                    } else {
                        format!("the certified bound is {}, and no second solution is expected past the fold", fold.bound)
                    };
                    return Err(fail(format!("t = {t} is not below the fold parameter {}; {why}", fold.tau0)));
                }
                let run = || -> Result<PassPair> {
                    let stable = branch.solution_at(t, BranchSide::Stable, &mesh, w0, &newton)?;
                    let mp = mountain_pass_solve(&stable, &mesh, w0, &opts)?;
                    let lower = branch.solution_at(t, BranchSide::Unstable, &mesh, w0, &newton).ok();
                    let lam = lambda_distance(
                        &curvature_report(&stable, &mesh, w0)?,
                        &curvature_report(&mp.solution, &mesh, w0)?,
                    );
                    write_json(&self.solution_file(index, "stable"), &Checkpoint::from_solution(&stamp, &stable))?;
                    write_json(&self.solution_file(index, "mountain"), &Checkpoint::from_solution(&stamp, &mp.solution))?;
                    let trace = self.path(MPASS_DIR).join(format!("t{index:02}_trace.csv"));
                    write_trace_csv(create(&trace)?, &stamp, &mp.trace)?;
                    Ok(PassPair {
                        index,
                        t,
                        stable: PassRow::new(&stable, w0, mp.stable_energy),
                        mountain_pass: PassRow::new(&mp.solution, w0, mp.energy),
                        lambda_distance: lam,
                        branch_sup_gap: lower.map(|l| (l.sup_norm() - mp.solution.sup_norm()).abs()),
                        endpoint: mp.endpoint,
                        descent_iterations: mp.trace.len(),
                    })
                };
                run().map_err(|e| fail(format!("{e:#}")))
            })
            .collect();
        let mut pairs = Vec::new();
        let mut failures = Vec::new();
        for o in outcomes {
            match o {
                Ok(p) => pairs.push(p),
                Err(f) => failures.push(f),
            }
        }
        let report = MpassReport { tau0: fold.tau0, bound: fold.bound, pairs, failures };
        let rows: Vec<MpassCsvRow> = report
            .pairs
            .iter()
            .flat_map(|p| {
                [("stable", &p.stable), ("mountain_pass", &p.mountain_pass)].map(|(kind, r)| MpassCsvRow {
                    t: p.t,
                    kind,
                    sup_norm: r.sup_norm,
                    mu1: r.mu1,
                    lambda_max: r.lambda_max,
                    energy: r.energy,
                    residual_norm: r.residual_norm,
                    converged: r.converged,
                })
            })
            .collect();
        write_stamped_csv(create(&self.path(MPASS_TABLE))?, &stamp, &MPASS_COLUMNS, &rows)?;
        write_json(&self.path(MPASS_FILE), &self.document(&mesh, report.clone()))?;
        if !report.failures.is_empty() {
            let msg: Vec<String> = report.failures.iter().map(|f| f.message.clone()).collect();
            return Err(Failure { kind: ExitKind::MountainPass, message: msg.join("\n") }.into());
        }
        Ok(report)
    }

    fn summarize(
        &self,
        label: String,
        sol: &Solution,
        mesh: &SurfaceMesh,
        weight: &WeightField,
        stamp: &ArtifactStamp,
    ) -> Result<GeometrySummary> {
        let w0 = &weight.values;
        let rep = curvature_report(sol, mesh, w0)?;
        let vertex = argmax(&rep.lambda);
        let data = NormalData::at_vertex(sol, mesh, weight, vertex)?;
        let g = &self.config.geometry;
        let samples: Vec<_> = linspace(-g.r_max, g.r_max, g.r_samples).into_iter().map(|r| data.sample(r)).collect();
        let path = self.path(AMBIENT_DIR).join(format!("{label}.csv"));
        write_ambient_csv(create(&path)?, stamp, &samples)?;
        Ok(GeometrySummary {
            t: sol.t,
            sup_norm: sol.sup_norm(),
            lambda_max: rep.lambda_max,
            curvature_max_abs: rep.curvature_max_abs(),
            almost_fuchsian: rep.almost_fuchsian,
            gauss_bonnet_defect: rep.gauss_bonnet_defect,
            lumped_identity_defect: lumped_identity_defect(sol, mesh, w0),
            quadrature_identity_defect: integral_identity(sol, mesh, w0).1,
            degeneration_radius: degeneration_radius(&rep),
            frame_undefined: rep.frame_defined.iter().filter(|d| !**d).count(),
            ambient_vertex: vertex,
            ambient_degenerate_samples: samples.iter().filter(|s| s.degenerate).count(),
            label,
        })
    }

    /// Blow-up trend along the branch, and curvature summaries with ambient
    /// metric samples for the fold solution and any mountain-pass outputs.
    pub fn cmd_geom(&self) -> Result<GeometryReport> {
        self.prepare(&[AMBIENT_DIR])?;
        let mesh = self.mesh()?;
        let (weight, _) = self.weight(&mesh)?;
        let (branch, fold) = self.load_branch(&mesh)?;
        let stamp = self.stamp(&mesh);
        let ts: Vec<f64> = self.config.geometry.trend_fractions.iter().map(|f| f * fold.tau0).collect();
        let trend = blowup_trend(&branch, &ts, &mesh, &weight.values, &self.config.newton())?;
        let mut solutions = vec![self.summarize("fold".into(), branch.fold_solution.as_ref().unwrap(), &mesh, &weight, &stamp)?];
        if self.path(MPASS_FILE).exists() {
            let mp: MpassReport = read_document(&self.path(MPASS_FILE), &stamp)?;
            for p in &mp.pairs {
                for kind in ["stable", "mountain"] {
                    let sol = read_checkpoint(&self.solution_file(p.index, kind), &stamp)?.solution();
                    solutions.push(self.summarize(format!("t{:02}_{kind}", p.index), &sol, &mesh, &weight, &stamp)?);
                }
            }
        }
        let report = GeometryReport { trend, solutions };
        write_json(&self.path(GEOMETRY_FILE), &self.document(&mesh, report.clone()))?;
        Ok(report)
    }

    /// Consolidates prior outputs into `report.json` and a diagram CSV.
    pub fn cmd_report(&self) -> Result<Report> {
        for (file, producer) in
            [(BRANCH_FILE, "continue"), (FOLD_FILE, "continue"), (MPASS_FILE, "mpass"), (GEOMETRY_FILE, "geom")]
        {
            require(&self.path(file), producer)?;
        }
        let mesh = self.mesh()?;
        let stamp = self.stamp(&mesh);
        let rows: Vec<BranchRow> = read_csv(&self.path(BRANCH_FILE), &stamp)?;
        let fold: FoldReport = read_document(&self.path(FOLD_FILE), &stamp)?;
        let mp: MpassReport = read_document(&self.path(MPASS_FILE), &stamp)?;
        let geom: GeometryReport = read_document(&self.path(GEOMETRY_FILE), &stamp)?;
        let bifurcation: Vec<DiagramRow> = rows
            .iter()
            .map(|r| DiagramRow { s: r.s, t: r.t, sup_norm: r.u_min.abs().max(r.u_max.abs()), mu1: r.mu1, stable: r.mu1 > 0.0 })
            .collect();
        let report = Report {
            tau0: fold.tau0,
            bound: fold.bound,
            ratio: fold.ratio,
            stable_points: bifurcation.iter().filter(|r| r.stable).count(),
            unstable_points: bifurcation.iter().filter(|r| !r.stable).count(),
            bifurcation,
            mountain_pass: mp.pairs,
            trend: geom.trend,
            geometry: geom.solutions,
        };
        write_stamped_csv(create(&self.path(DIAGRAM_FILE))?, &stamp, &DIAGRAM_COLUMNS, &report.bifurcation)?;
        write_json(&self.path(REPORT_FILE), &self.document(&mesh, report.clone()))?;
        Ok(report)
    }

    /// Certification parameters: the t-list, or the midpoint of `[τ₀, bound]`
    /// and the bound itself when a fold report exists.
    pub fn certify_parameters(&self, mesh: &SurfaceMesh) -> Result<Vec<f64>> {
        if !self.config.t_list.is_empty() {
            return Ok(self.config.t_list.clone());
        }
        if !self.path(FOLD_FILE).exists() {
            return Err(usage("certify needs --t-list (or a fold report from `continue`)".into()));
        }
        let fold: FoldReport = read_document(&self.path(FOLD_FILE), &self.stamp(mesh))?;
        Ok(vec![0.5 * (fold.tau0 + fold.bound), fold.bound])
    }

    pub fn cmd_certify(&self) -> Result<Vec<CertifyReport>> {
        self.prepare(&[CERTIFY_DIR])?;
        let mesh = self.mesh()?;
        let (weight, _) = self.weight(&mesh)?;
        let newton = self.config.newton();
        let mut reports = Vec::new();
        for (k, t) in self.certify_parameters(&mesh)?.into_iter().enumerate() {
            let rep = certify_no_solution(t, &mesh, &weight, self.config.certify_attempts, self.config.seed, &newton)?;
            write_json(&self.path(CERTIFY_DIR).join(format!("t{k:02}.json")), &self.document(&mesh, rep.clone()))?;
            reports.push(rep);
        }
        Ok(reports)
    }
}
