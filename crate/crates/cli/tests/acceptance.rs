//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! fails. Runs the real pipeline through `Session` in temporary directories.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use hypgauss_cli::pipeline::{lumped_identity_defect, FoldReport, MpassReport};
use hypgauss_cli::{RunConfig, Session, WeightSpec};
use hypgauss_core::geometry::{degeneration_radius_by_bisection, NormalData};
use hypgauss_core::io::Checkpoint;
use hypgauss_core::linalg::smallest_eigenpairs;
use hypgauss_core::solver::{integral_identity, linearized_operator, residual};
use hypgauss_core::{
    build_mesh_with, certify_no_solution, curvature_report, degeneration_radius, BolzaDomain, Branch,
    BranchSide, MassScheme, QuadraticDifferential, Solution, SurfaceMesh, Verdict, WeightField,
};
use hypgauss_core::geometry::ambient_ode_residual;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// criterion 1
const EXACT_TOL: f64 = 1e-8;
const MU_TOL: f64 = 1e-6;
const FOLD_TOL: f64 = 1e-6;
const RUNTIME_LIMIT: Duration = Duration::from_secs(120);
// criterion 2
const SIGN_TOL: f64 = 1e-10;
// criterion 3
const IDENTITY_TOL_CONSTANT: f64 = 1e-8;
const IDENTITY_TOL_POINCARE: f64 = 1e-3;
const IDENTITY_IMPROVEMENT: f64 = 3.0;
// criterion 4
const BOUND_TOL: f64 = 1e-10;
const CERTIFY_ATTEMPTS: usize = 20;
// criterion 5
const RESIDUAL_TOL: f64 = 1e-8;
const BRANCH_AGREEMENT: f64 = 1e-6;
// criterion 6
const SUP_TOL: f64 = 1e-6;
const CURVATURE_TOL: f64 = 1e-4;
// criterion 7
const AREA_RATIO: (f64, f64) = (3.5, 4.5);
const JACOBIAN_TOL: f64 = 1e-6;
const SPECTRAL_GAP: f64 = 0.1;
// criterion 8
const ODE_TOL: f64 = 1e-4;
const RADIUS_TOL: f64 = 1e-8;
// criterion 9
const AUTOMORPHY_SLACK: f64 = 1.05;
const PAIRING_TOL: f64 = 1e-3;

static SOLUTIONS: Mutex<Vec<(String, f64)>> = Mutex::new(Vec::new());

fn record(label: &str, sol: &Solution) {
    if sol.converged {
        SOLUTIONS.lock().unwrap().push((label.to_string(), sol.u_max()));
    }
}

struct Run {
    session: Session,
    mesh: SurfaceMesh,
    weight: WeightField,
    branch: Branch,
    fold: FoldReport,
    mpass: MpassReport,
    elapsed: Duration,
}

impl Run {
    fn dir(&self) -> &Path {
        self.session.out()
    }

    fn stored_solutions(&self) -> Vec<(String, Solution)> {
        let mut files = Vec::new();
        for sub in ["checkpoints", "mpass"] {
            for e in fs::read_dir(self.dir().join(sub)).unwrap() {
                let p = e.unwrap().path();
                if p.extension().is_some_and(|x| x == "json") {
                    files.push(p);
                }
            }
        }
        files.push(self.dir().join("fold_solution.json"));
        files.sort();
        let stamp = self.session.stamp(&self.mesh);
        files
            .iter()
            .map(|p| {
                let c = Checkpoint::read(&fs::read_to_string(p).unwrap(), &stamp).unwrap();
                (p.file_name().unwrap().to_string_lossy().into_owned(), c.solution())
            })
            .collect()
    }

    fn solution_at(&self, t: f64, side: BranchSide) -> Solution {
        let sol = self.branch.solution_at(t, side, &self.mesh, &self.weight.values, &self.session.config.newton()).unwrap();
        record("branch interpolation", &sol);
        sol
    }

    fn stored(&self, index: usize, kind: &str) -> Solution {
        let p = self.dir().join("mpass").join(format!("t{index:02}_{kind}.json"));
        Checkpoint::read(&fs::read_to_string(p).unwrap(), &self.session.stamp(&self.mesh)).unwrap().solution()
    }
}

fn pipeline(cfg: RunConfig) -> Run {
    let session = Session::new(cfg).unwrap();
    session.cmd_mesh().unwrap();
    session.cmd_qdiff().unwrap();
    let start = Instant::now();
    let fold = session.cmd_continue(false).unwrap();
    let mpass = session.cmd_mpass().unwrap();
    let elapsed = start.elapsed();
    session.cmd_geom().unwrap();
    session.cmd_report().unwrap();
    session.cmd_certify().unwrap();
    let mesh = session.mesh().unwrap();
    let weight = session.weight(&mesh).unwrap().0;
    let branch = session.load_branch(&mesh).unwrap().0;
    let run = Run { session, mesh, weight, branch, fold, mpass, elapsed };
    for (label, sol) in run.stored_solutions() {
        record(&label, &sol);
    }
    run
}

fn config(weight: WeightSpec, level: usize, out: PathBuf, t_list: Vec<f64>) -> RunConfig {
    RunConfig { refinement_level: level, out_dir: out, t_list, ..RunConfig::new(weight) }
}

fn x_minus(t: f64) -> f64 {
    (1.0 - (1.0 - 4.0 * t * t).sqrt()) / 2.0
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn criterion_1(c: &Run) -> Outcome {
    let up = c.solution_at(0.4, BranchSide::Stable);
    let lo = c.solution_at(0.4, BranchSide::Unstable);
    let (ep, em) = (0.5 * 0.8f64.ln(), 0.5 * 0.2f64.ln());
    let dev = |s: &Solution, v: f64| s.u.iter().map(|u| (u - v).abs()).fold(0.0, f64::max);
    let (dp, dm) = (dev(&up, ep), dev(&lo, em));
    let pair = &c.mpass.pairs[0];
    let mp_ok = close(pair.mountain_pass.u_min, em, EXACT_TOL) && close(pair.mountain_pass.u_max, em, EXACT_TOL);
    let mu_ok = close(up.mu1, 1.2, MU_TOL)
        && close(lo.mu1, -1.2, MU_TOL)
        && close(pair.stable.mu1, 1.2, MU_TOL)
        && close(pair.mountain_pass.mu1, -1.2, MU_TOL);
    let f = &c.fold;
    let fold_sol = c.branch.fold_solution.as_ref().unwrap();
    let df = dev(fold_sol, 0.5 * 0.5f64.ln());
    let pass = dp <= EXACT_TOL
        && dm <= EXACT_TOL
        && mp_ok
        && mu_ok
        && close(f.tau0, 0.5, FOLD_TOL)
        && df <= EXACT_TOL
        && close(f.fold.lambda_max, 1.0, FOLD_TOL)
        && c.elapsed <= RUNTIME_LIMIT;
    outcome(
        pass,
        format!(
            "level 3 ({} vertices): |u+ - ln0.8/2| {dp:.1e}, |u- - ln0.2/2| {dm:.1e}, mu1 {:+.9}/{:+.9}, tau0 {:.10}, \
             fold |u - ln0.5/2| {df:.1e}, fold lambda_max {:.9}, continue+mpass {:.1}s",
            c.mesh.n_canonical(),
            up.mu1,
            lo.mu1,
            f.tau0,
            f.fold.lambda_max,
            c.elapsed.as_secs_f64()
        ),
    )
}

fn criterion_2() -> Outcome {
    let all = SOLUTIONS.lock().unwrap();
    let worst = all.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    let bad = all.iter().filter(|(_, m)| *m > SIGN_TOL).count();
    outcome(bad == 0, format!("{} converged solutions, max(u) = {:.3e} ({}), {bad} above {SIGN_TOL:e}", all.len(), worst.1, worst.0))
}

fn criterion_3(c: &Run, p: &Run, p4: &Run) -> Outcome {
    let worst = |r: &Run| {
        r.stored_solutions()
            .iter()
            .filter(|(_, s)| s.converged)
            .map(|(_, s)| lumped_identity_defect(s, &r.mesh, &r.weight.values).abs())
            .fold(0.0, f64::max)
    };
    let (wc, wp, wp4) = (worst(c), worst(p), worst(p4));
    let quad = |r: &Run| integral_identity(r.branch.fold_solution.as_ref().unwrap(), &r.mesh, &r.weight.values).1;
    let (q3, q4) = (quad(p), quad(p4));
    let ratio = q3.abs() / q4.abs();
    let pass = wc <= IDENTITY_TOL_CONSTANT && wp <= IDENTITY_TOL_POINCARE && ratio >= IDENTITY_IMPROVEMENT;
    outcome(
        pass,
        format!(
            "lumped defect: constant {wc:.1e}, Poincare level 3 {wp:.1e}, level 4 {wp4:.1e}; \
             P1 quadrature defect at the fold: level 3 {q3:.4e}, level 4 {q4:.4e}, ratio {ratio:.2}"
        ),
    )
}

fn criterion_4(c: &Run, p: &Run) -> Outcome {
    let cert = certify_no_solution(0.6, &c.mesh, &c.weight, CERTIFY_ATTEMPTS, c.session.config.seed, &c.session.config.newton())
        .unwrap();
    for s in &cert.solutions {
        record("certify", s);
    }
    let pass = close(c.fold.bound, 1.0, BOUND_TOL)
        && cert.verdict == Verdict::EmpiricalNone
        && cert.attempts.len() == CERTIFY_ATTEMPTS
        && cert.solutions.is_empty()
        && c.fold.tau0 <= c.fold.bound
        && p.fold.tau0 <= p.fold.bound;
    outcome(
        pass,
        format!(
            "bound(w0=1) = {:.12}; t = 0.6: {} solutions in {} runs; tau0/bound = {:.6} (constant), {:.6} (Poincare)",
            c.fold.bound,
            cert.solutions.len(),
            cert.attempts.len(),
            c.fold.ratio,
            p.fold.ratio
        ),
    )
}

fn criterion_5(p: &Run) -> Outcome {
    let mut pass = p.mpass.pairs.len() == 3 && p.mpass.failures.is_empty();
    let mut rows = Vec::new();
    for (pair, frac) in p.mpass.pairs.iter().zip([0.25, 0.5, 0.75]) {
        let (s, m) = (&pair.stable, &pair.mountain_pass);
        let gap = pair.branch_sup_gap.unwrap_or(f64::INFINITY);
        pass &= close(pair.t, frac * p.fold.tau0, 1e-15 * p.fold.tau0)
            && s.converged
            && m.converged
            && s.residual_norm <= RESIDUAL_TOL
            && m.residual_norm <= RESIDUAL_TOL
            && s.mu1 > 0.0
            && m.mu1 < 0.0
            && pair.lambda_distance > 0.0
            && gap <= BRANCH_AGREEMENT;
        rows.push(format!(
            "{frac}: mu1 {:+.4}/{:+.4}, |u| {:.6}/{:.6}, dlambda {:.3}, branch gap {gap:.1e}",
            s.mu1, m.mu1, s.sup_norm, m.sup_norm, pair.lambda_distance
        ));
    }
    outcome(pass, format!("Poincare m=0 depth 12, level 3, tau0 {:.9}; {}", p.fold.tau0, rows.join("; ")))
}

fn criterion_6(c: &Run) -> Outcome {
    let ts = [0.4, 0.2, 0.1];
    let w0 = &c.weight.values;
    let mut pass = true;
    let mut last = (0.0, 0.0);
    let mut cells = Vec::new();
    for t in ts {
        let lo = c.solution_at(t, BranchSide::Unstable);
        let rep = curvature_report(&lo, &c.mesh, w0).unwrap();
        let (sup, k) = (lo.sup_norm(), rep.curvature_max_abs());
        let (sup_exact, k_exact) = (0.5 * x_minus(t).ln().abs(), 1.0 + t * t / x_minus(t).powi(2));
        pass &= close(sup, sup_exact, SUP_TOL) && close(k, k_exact, CURVATURE_TOL) && sup > last.0 && k > last.1;
        last = (sup, k);
        cells.push(format!("t {t}: u_min {:.5} max|K| {k:.4}", lo.u_min()));
    }
    let stable: Vec<(f64, f64)> = ts
        .iter()
        .map(|&t| {
            let s = c.solution_at(t, BranchSide::Stable);
            (s.sup_norm(), curvature_report(&s, &c.mesh, w0).unwrap().lambda_max)
        })
        .collect();
    pass &= stable.windows(2).all(|w| w[1].0 < w[0].0) && stable.iter().all(|s| s.1 < 1.0);
    // the pipeline's own trend table must agree
    let geom: serde_json::Value = serde_json::from_str(&fs::read_to_string(c.dir().join("geometry.json")).unwrap()).unwrap();
    let g = &geom["trend"];
    pass &= g["supNormIncreasing"] == true && g["curvatureIncreasing"] == true;
    outcome(
        pass,
        format!(
            "{}; stable |u| {:.2e} -> {:.2e}, stable lambda_max {:.3} -> {:.3}",
            cells.join(", "),
            stable[0].0,
            stable[2].0,
            stable[0].1,
            stable[2].1
        ),
    )
}

fn apply(a: &hypgauss_core::linalg::CsrMatrix, m: &[f64], x: &[f64]) -> Vec<f64> {
    a.matvec(x).iter().zip(m).map(|(y, m)| y / m).collect()
}

fn criterion_7(p: &Run, rng: &mut ChaCha8Rng) -> Outcome {
    let d = BolzaDomain::new();
    let errors: Vec<f64> = (0..=4)
        .map(|l| {
            let m = build_mesh_with(&d, l, MassScheme::StraightQuadrature, 7).unwrap();
            (m.total_area() - 4.0 * PI).abs()
        })
        .collect();
    let ratios: Vec<f64> = errors.windows(2).map(|w| w[0] / w[1]).collect();
    let area_ok = ratios.iter().all(|r| (AREA_RATIO.0..=AREA_RATIO.1).contains(r));

    let (mesh, w0) = (&p.mesh, &p.weight.values);
    let m_norm = |x: &[f64]| mesh.lumped_mass.iter().zip(x).map(|(m, x)| m * x * x).sum::<f64>().sqrt();
    let base = p.stored(1, "mountain");
    let (a, m) = linearized_operator(&base.u, base.t, mesh, w0).unwrap();
    let eps = 1e-5;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let phi: Vec<f64> = (0..mesh.n_canonical()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let up: Vec<f64> = base.u.iter().zip(&phi).map(|(u, p)| u + eps * p).collect();
        let dn: Vec<f64> = base.u.iter().zip(&phi).map(|(u, p)| u - eps * p).collect();
        let (rp, rm) = (residual(&up, base.t, mesh, w0).unwrap(), residual(&dn, base.t, mesh, w0).unwrap());
        let lphi = apply(&a, &m, &phi);
        let diff: Vec<f64> = rp.iter().zip(&rm).zip(&lphi).map(|((p, q), l)| (p - q) / (2.0 * eps) + l).collect();
        worst = worst.max(m_norm(&diff) / m_norm(&phi));
    }
    let eig = smallest_eigenpairs(&mesh.stiffness, &mesh.lumped_mass, mesh.ordering(), 2, -1.0).unwrap();
    let pass = area_ok && worst <= JACOBIAN_TOL && eig[0].value.abs() < 1e-9 && eig[1].value > SPECTRAL_GAP;
    outcome(
        pass,
        format!(
            "area error ratios {}; Jacobian FD worst {worst:.1e} over 20 directions; pencil eigenvalues {:.1e}, {:.6}",
            ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>().join(" "),
            eig[0].value,
            eig[1].value
        ),
    )
}

fn criterion_8(c: &Run, p: &Run, rng: &mut ChaCha8Rng) -> Outcome {
    let sols = [p.stored(1, "stable"), p.stored(1, "mountain")];
    let mut worst = 0.0f64;
    for k in 0..20 {
        let sol = &sols[k % 2];
        let v = rng.gen_range(0..p.mesh.n_canonical());
        let r = rng.gen_range(-3.0..3.0);
        let data = NormalData::at_vertex(sol, &p.mesh, &p.weight, v).unwrap();
        worst = worst.max(ambient_ode_residual(&data, r, 1e-3));
    }
    let lo = c.stored(0, "mountain");
    let rep = curvature_report(&lo, &c.mesh, &c.weight.values).unwrap();
    let analytic = degeneration_radius(&rep).unwrap_or(f64::NAN);
    let data = NormalData::at_vertex(&lo, &c.mesh, &c.weight, 0).unwrap();
    let bisected = degeneration_radius_by_bisection(&data, 10.0).unwrap_or(f64::NAN);
    let radius_ok = close(data.lambda, 2.0, 1e-9)
        && close(analytic, 0.5f64.atanh(), RADIUS_TOL)
        && close(bisected, analytic, RADIUS_TOL);

    let stable = &sols[0];
    let rep = curvature_report(stable, &p.mesh, &p.weight.values).unwrap();
    let mut pd = rep.almost_fuchsian;
    for v in 0..p.mesh.n_canonical() {
        let data = NormalData::at_vertex(stable, &p.mesh, &p.weight, v).unwrap();
        for i in -20..=20 {
            let s = data.sample(0.5 * i as f64);
            pd &= s.g[0] > 0.0 && s.g[0] * s.g[2] - s.g[1] * s.g[1] > 0.0 && !s.degenerate;
        }
    }
    outcome(
        worst <= ODE_TOL && radius_ok && pd,
        format!(
            "ODE residual worst {worst:.1e} at 20 samples; lambda = 2 radius {analytic:.12} vs bisection {bisected:.12}; \
             almost-Fuchsian (lambda_max {:.4}) metric positive definite on r in [-10, 10]: {pd}",
            rep.lambda_max
        ),
    )
}

fn criterion_9(p: &Run) -> Outcome {
    let d = BolzaDomain::new();
    let q8 = QuadraticDifferential::poincare(&d, 0, 8.0).unwrap();
    let q12 = QuadraticDifferential::poincare(&d, 0, 12.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst_ratio = 0.0f64;
    for _ in 0..20 {
        let z = Complex64::from_polar(rng.gen_range(0.0..0.95) * d.midpoint_radius, rng.gen_range(0.0..std::f64::consts::TAU));
        let (r8, r12) = (q8.automorphy_residual(&d, z).unwrap(), q12.automorphy_residual(&d, z).unwrap());
        worst_ratio = worst_ratio.max(r12 / r8);
    }
    let pair = p.weight.relative_pair_discrepancy();
    outcome(
        worst_ratio <= AUTOMORPHY_SLACK && pair <= PAIRING_TOL,
        format!("max residual ratio depth 12 / depth 8 = {worst_ratio:.3e} at 20 probes; pairing discrepancy {pair:.2e} of field max"),
    )
}

fn collect_files(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            collect_files(root, &p, out);
        } else {
            out.insert(p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap());
        }
    }
}

fn criterion_10(c: &Run, again: &Run) -> Outcome {
    let (mut a, mut b) = (BTreeMap::new(), BTreeMap::new());
    collect_files(c.dir(), c.dir(), &mut a);
    collect_files(again.dir(), again.dir(), &mut b);
    let differing: Vec<String> = a
        .keys()
        .chain(b.keys())
        .filter(|k| a.get(*k) != b.get(*k))
        .map(|k| k.display().to_string())
        .collect();
    outcome(
        differing.is_empty() && !a.is_empty(),
        format!("{} files compared, {} differ {:?}", a.len(), differing.len(), differing.iter().take(3).collect::<Vec<_>>()),
    )
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let tmp = tempfile::tempdir().unwrap();
    let poincare = WeightSpec::Poincare { m: 0, depth: 12.0 };
    let c = pipeline(config(WeightSpec::Constant { c: 1.0 }, 3, tmp.path().join("constant"), vec![0.4]));
    let p = pipeline(config(poincare.clone(), 3, tmp.path().join("poincare3"), vec![]));
    let p4 = pipeline(config(poincare, 4, tmp.path().join("poincare4"), vec![]));
    let again = pipeline(config(WeightSpec::Constant { c: 1.0 }, 3, tmp.path().join("constant_again"), vec![0.4]));
    let mut rng = ChaCha8Rng::seed_from_u64(2024);

    let mut results = vec![
        (1, "constant-weight oracle", criterion_1(&c)),
        (3, "integral identity", criterion_3(&c, &p, &p4)),
        (4, "nonexistence", criterion_4(&c, &p)),
        (5, "two solutions", criterion_5(&p)),
        (6, "blow-up alternative", criterion_6(&c)),
        (7, "discretization convergence", criterion_7(&p, &mut rng)),
        (8, "ambient metric", criterion_8(&c, &p, &mut rng)),
        (9, "automorphy", criterion_9(&p)),
        (10, "determinism", criterion_10(&c, &again)),
    ];
    results.insert(1, (2, "sign of solutions", criterion_2()));
    let mut failed = 0;
    for (n, name, o) in &results {
        println!("criterion {n:>2} {:<28} {}  {}", name, if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
