//! Continuation of the solution branch from `(u, t) = (0, 0)` through its fold.
//!
//! Natural-parameter steps in `t` are used while the first eigenvalue `μ₁` of
//! the linearization is comfortably positive; near the fold the tracker
//! switches to pseudo-arclength steps measured in
//! `‖(δu, δt)‖² = δuᵀ M δu + δt²`. The fold is the root of `μ₁` along the
//! branch, refined by false position on the bracketing step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SymmetricSolver;
use crate::mesh::SurfaceMesh;
use crate::solver::{
    first_eigenpair, linearized_operator, newton_solve, residual_t_derivative, scaled_residual,
    scaled_residual_norm, NewtonOptions, Solution,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StepControl {
    /// Natural-parameter step in `t`.
    pub dt: f64,
    /// Initial arclength step.
    pub ds: f64,
    pub ds_max: f64,
    /// Switch to arclength once `μ₁` (or its prediction) drops below this.
    pub switch_mu1: f64,
    /// Stop once `t` falls below this after the fold.
    pub t_min: f64,
    pub max_steps: usize,
    pub max_halvings: usize,
    /// Target `|μ₁|` at the located fold.
    pub fold_tol: f64,
    pub newton: NewtonOptions,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            dt: 0.01,
            ds: 0.02,
            ds_max: 0.5,
            switch_mu1: 0.2,
            t_min: 1e-3,
            max_steps: 4000,
            max_halvings: 8,
            fold_tol: 1e-9,
            newton: NewtonOptions::default(),
        }
    }
}

impl StepControl {
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!("{name} = {v} must be positive and finite")))
            }
        };
        pos("dt", self.dt)?;
        pos("ds", self.ds)?;
        pos("ds_max", self.ds_max)?;
        pos("switch_mu1", self.switch_mu1)?;
        pos("t_min", self.t_min)?;
        pos("fold_tol", self.fold_tol)?;
        pos("newton.tol", self.newton.tol)?;
        if self.ds > self.ds_max {
            return Err(Error::InvalidInput("ds exceeds ds_max".into()));
        }
        if self.max_steps == 0 || self.newton.max_iter == 0 {
            return Err(Error::InvalidInput("max_steps and newton.max_iter must be ≥ 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepMode {
    Natural,
    Arclength,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    /// Accumulated chord length from the start of the branch.
    pub s: f64,
    pub solution: Solution,
    pub mode: StepMode,
    /// Step size in effect after this point.
    pub step: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    /// `τ₀`.
    pub fold_parameter: Option<f64>,
    pub fold_solution: Option<Solution>,
    pub fold_s: Option<f64>,
    /// Index of the first point past the fold.
    pub fold_index: Option<usize>,
}

/// Which side of the fold a solution is taken from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchSide {
    Stable,
    Unstable,
}

impl Branch {
    pub fn stable_points(&self) -> &[BranchPoint] {
        &self.points[..self.fold_index.unwrap_or(self.points.len())]
    }

    pub fn unstable_points(&self) -> &[BranchPoint] {
        &self.points[self.fold_index.unwrap_or(self.points.len())..]
    }

    /// Solution at parameter `t` on one side of the fold: linear
    /// interpolation between the bracketing points, then a Newton polish.
    pub fn solution_at(
        &self,
        t: f64,
        side: BranchSide,
        mesh: &SurfaceMesh,
        w0: &[f64],
        opts: &NewtonOptions,
    ) -> Result<Solution> {
        let pts = match side {
            BranchSide::Stable => self.stable_points(),
            BranchSide::Unstable => self.unstable_points(),
        };
        let mut seq: Vec<&Solution> = pts.iter().map(|p| &p.solution).collect();
        if let Some(f) = &self.fold_solution {
            match side {
                BranchSide::Stable => seq.push(f),
                BranchSide::Unstable => seq.insert(0, f),
            }
        }
        let guess = seq
            .windows(2)
            .find_map(|w| {
                let (a, b) = (w[0], w[1]);
                let (lo, hi) = (a.t.min(b.t), a.t.max(b.t));
                if t < lo || t > hi {
                    return None;
                }
                let th = if hi > lo { (t - a.t) / (b.t - a.t) } else { 0.0 };
                Some(a.u.iter().zip(&b.u).map(|(x, y)| x + th * (y - x)).collect::<Vec<f64>>())
            })
            .ok_or(Error::NotBracketed(t))?;
        let sol = newton_solve(&guess, t, mesh, w0, opts)?;
        let on_side = match side {
            BranchSide::Stable => sol.mu1 > 0.0,
            BranchSide::Unstable => sol.mu1 < 0.0,
        };
        if !sol.converged || !on_side {
            return Err(Error::Internal(format!(
                "polishing the interpolated {side:?} solution at t = {t} failed (converged = {}, mu1 = {})",
                sol.converged, sol.mu1
            )));
        }
        Ok(sol)
    }

    /// Number of sign changes of `μ₁` along the stored points.
    pub fn mu1_sign_changes(&self) -> usize {
        self.points.windows(2).filter(|w| (w[0].solution.mu1 > 0.0) != (w[1].solution.mu1 > 0.0)).count()
    }
}

fn m_dot(m: &[f64], x: &[f64], y: &[f64]) -> f64 {
    m.iter().zip(x).zip(y).map(|((m, x), y)| m * x * y).sum()
}

fn chord(mesh: &SurfaceMesh, a: &Solution, b: &Solution) -> f64 {
    let du: Vec<f64> = b.u.iter().zip(&a.u).map(|(x, y)| x - y).collect();
    (m_dot(&mesh.lumped_mass, &du, &du) + (b.t - a.t).powi(2)).sqrt()
}

/// Unit tangent `(τ_u, τ_t)` in the arclength norm.
#[derive(Clone, Debug)]
struct Tangent {
    u: Vec<f64>,
    t: f64,
}

impl Tangent {
    fn secant(mesh: &SurfaceMesh, a: &Solution, b: &Solution) -> Option<Self> {
        let len = chord(mesh, a, b);
        if !(len > 0.0) {
            return None;
        }
        Some(Tangent { u: b.u.iter().zip(&a.u).map(|(x, y)| (x - y) / len).collect(), t: (b.t - a.t) / len })
    }

    /// Tangent with increasing `t` from the linearization, `u' = A⁻¹ ∂G/∂t`.
    fn from_linearization(mesh: &SurfaceMesh, w0: &[f64], s: &Solution) -> Result<Self> {
        let (a, _) = linearized_operator(&s.u, s.t, mesh, w0)?;
        let gt = residual_t_derivative(&s.u, s.t, mesh, w0);
        let up = SymmetricSolver::new(&a, mesh.ordering())?.solve(&gt)?;
        let len = (m_dot(&mesh.lumped_mass, &up, &up) + 1.0).sqrt();
        Ok(Tangent { u: up.iter().map(|v| v / len).collect(), t: 1.0 / len })
    }
}

/// Bordered Newton corrector on the hyperplane orthogonal to `tau` at
/// distance `ds` from `base`.
fn arclength_corrector(
    mesh: &SurfaceMesh,
    w0: &[f64],
    base: &Solution,
    tau: &Tangent,
    ds: f64,
    opts: &NewtonOptions,
) -> Option<Solution> {
    let m = &mesh.lumped_mass;
    let u_pred: Vec<f64> = base.u.iter().zip(&tau.u).map(|(u, d)| u + ds * d).collect();
    let t_pred = base.t + ds * tau.t;
    let mut u = u_pred.clone();
    let mut t = t_pred;
    let mut last_norm = f64::INFINITY;
    for it in 0..=opts.max_iter.min(15) {
        let g = scaled_residual(&u, t, mesh, w0).ok()?;
        let du: Vec<f64> = u.iter().zip(&u_pred).map(|(a, b)| a - b).collect();
        let n = m_dot(m, &tau.u, &du) + tau.t * (t - t_pred);
        let norm = scaled_residual_norm(mesh, &g);
        if norm <= opts.tol && n.abs() <= opts.tol {
            let mu1 = first_eigenpair(&u, t, mesh, w0, None).ok()?.0;
            return Some(Solution { u, t, residual_norm: norm, mu1, converged: true, iterations: it });
        }
        if it > 3 && norm > 0.5 * last_norm {
            return None;
        }
        last_norm = norm;
        let (a, _) = linearized_operator(&u, t, mesh, w0).ok()?;
        let mut solver = SymmetricSolver::new(&a, mesh.ordering()).ok()?;
        let y1 = solver.solve(&g).ok()?;
        let y2 = solver.solve(&residual_t_derivative(&u, t, mesh, w0)).ok()?;
        let den = m_dot(m, &tau.u, &y2) + tau.t;
        if !(den.abs() > 1e-300) {
            return None;
        }
        let dt = (-n - m_dot(m, &tau.u, &y1)) / den;
        u.iter_mut().zip(y1.iter().zip(&y2)).for_each(|(u, (a, b))| *u += a + dt * b);
        t += dt;
        if !(t.is_finite() && u.iter().all(|v| v.is_finite())) {
            return None;
        }
    }
    None
}

struct Tracker<'a> {
    mesh: &'a SurfaceMesh,
    w0: &'a [f64],
    ctl: StepControl,
}

impl Tracker<'_> {
    fn natural_step(&self, prev: Option<&Solution>, last: &Solution, h: f64) -> Option<Solution> {
        let t_new = last.t + h;
        let guess: Vec<f64> = match prev {
            Some(p) if last.t > p.t => {
                let f = h / (last.t - p.t);
                last.u.iter().zip(&p.u).map(|(a, b)| a + f * (a - b)).collect()
            }
            _ => last.u.clone(),
        };
        let sol = newton_solve(&guess, t_new, self.mesh, self.w0, &self.ctl.newton).ok()?;
        (sol.converged && sol.mu1 > 0.0).then_some(sol)
    }

    /// False position on `μ₁` along the chord from `a` (μ₁ > 0) to `b`.
    fn locate_fold(&self, a: &Solution, b: &Solution) -> Result<Solution> {
        let tau = Tangent::secant(self.mesh, a, b).ok_or_else(|| Error::Internal("coincident fold bracket".into()))?;
        let len = chord(self.mesh, a, b);
        let (mut lo, mut flo) = (0.0, a.mu1);
        let (mut hi, mut fhi) = (len, b.mu1);
        let mut best: Option<Solution> = None;
        let mut side = 0i32;
        for _ in 0..100 {
            let x = (lo * fhi - hi * flo) / (fhi - flo);
            let x = if x > lo && x < hi { x } else { 0.5 * (lo + hi) };
            let s = arclength_corrector(self.mesh, self.w0, a, &tau, x, &self.ctl.newton)
                .ok_or_else(|| Error::Internal(format!("corrector failed while locating the fold at δ = {x}")))?;
            let f = s.mu1;
            let done = f.abs() <= self.ctl.fold_tol;
            best = Some(s);
            if done || hi - lo < 1e-15 * len.max(1.0) {
                break;
            }
            if f > 0.0 {
                lo = x;
                flo = f;
                if side == 1 {
                    fhi *= 0.5;
                }
                side = 1;
            } else {
                hi = x;
                fhi = f;
                if side == -1 {
                    flo *= 0.5;
                }
                side = -1;
            }
        }
        let s = best.expect("at least one iteration");
        if s.mu1.abs() > self.ctl.fold_tol {
            log::warn!("fold located only to |mu1| = {:e}", s.mu1.abs());
        }
        Ok(s)
    }
}

/// Traces the branch from `(0, 0)` with default bookkeeping.
pub fn continue_branch(mesh: &SurfaceMesh, w0: &[f64], ctl: &StepControl) -> Result<Branch> {
    continue_branch_with(mesh, w0, ctl, None, &mut |_, _| Ok(()))
}

/// Traces (or resumes) the branch. `on_point` is called with the branch and
/// the index of each newly appended point.
pub fn continue_branch_with(
    mesh: &SurfaceMesh,
    w0: &[f64],
    ctl: &StepControl,
    resume: Option<Branch>,
    on_point: &mut dyn FnMut(&Branch, usize) -> Result<()>,
) -> Result<Branch> {
    ctl.validate()?;
    if w0.len() != mesh.n_canonical() {
        return Err(Error::InvalidInput("weight length does not match the mesh".into()));
    }
    let sqrt_int: f64 = mesh.lumped_mass.iter().zip(w0).map(|(m, w)| m * w.sqrt()).sum();
    if !(sqrt_int > 0.0) {
        return Err(Error::InvalidInput("weight field vanishes identically".into()));
    }
    let bound = 4.0 * std::f64::consts::PI / sqrt_int;
    let tr = Tracker { mesh, w0, ctl: *ctl };
    let mut branch = resume.unwrap_or_default();
    if branch.points.is_empty() {
        let u = vec![0.0; mesh.n_canonical()];
        let g = scaled_residual(&u, 0.0, mesh, w0)?;
        let mu1 = first_eigenpair(&u, 0.0, mesh, w0, None)?.0;
        let sol = Solution { residual_norm: scaled_residual_norm(mesh, &g), u, t: 0.0, mu1, converged: true, iterations: 0 };
        branch.points.push(BranchPoint { s: 0.0, solution: sol, mode: StepMode::Natural, step: ctl.dt });
        on_point(&branch, 0)?;
    } else if branch.fold_index.is_none() {
        if let Some(i) = branch.points.windows(2).position(|w| w[0].solution.mu1 > 0.0 && w[1].solution.mu1 < 0.0) {
            let f = tr.locate_fold(&branch.points[i].solution, &branch.points[i + 1].solution)?;
            record_fold(mesh, &mut branch, i, f);
        }
    }
    let abort = |branch: &Branch, reason: String| Error::ContinuationAborted { reason, partial: Box::new(branch.clone()) };
    let last = branch.points.last().expect("start point");
    let mut mode = last.mode;
    let mut ds = if mode == StepMode::Arclength { last.step } else { ctl.ds };
    for _ in 0..ctl.max_steps {
        let n = branch.points.len();
        let last = &branch.points[n - 1].solution;
        if branch.fold_index.is_some() && last.t < ctl.t_min {
            break;
        }
        let prev = (n >= 2).then(|| &branch.points[n - 2].solution);
        if mode == StepMode::Natural {
            let predicted_low = prev.is_some_and(|p| {
                let slope = (last.mu1 * last.mu1 - p.mu1 * p.mu1) / (last.t - p.t);
                last.mu1 * last.mu1 + slope * ctl.dt < ctl.switch_mu1 * ctl.switch_mu1
            });
            if last.mu1 < ctl.switch_mu1 || predicted_low || last.t + ctl.dt >= bound {
                mode = StepMode::Arclength;
                continue;
            }
            let mut h = ctl.dt;
            let mut found = None;
            for _ in 0..=ctl.max_halvings {
                if let Some(s) = tr.natural_step(prev, last, h) {
                    found = Some(s);
                    break;
                }
                h *= 0.5;
            }
            match found {
                Some(sol) => {
                    let s = branch.points[n - 1].s + chord(mesh, last, &sol);
                    branch.points.push(BranchPoint { s, solution: sol, mode, step: ctl.dt });
                    on_point(&branch, n)?;
                }
                None => {
                    log::info!("natural step failed at t = {}; switching to arclength", last.t);
                    mode = StepMode::Arclength;
                }
            }
            continue;
        }
        let tau = match prev.and_then(|p| Tangent::secant(mesh, p, last)) {
            Some(t) => t,
            None => Tangent::from_linearization(mesh, w0, last)?,
        };
        let mut h = ds;
        let mut found = None;
        for _ in 0..=ctl.max_halvings {
            if let Some(s) = arclength_corrector(mesh, w0, last, &tau, h, &ctl.newton) {
                found = Some(s);
                break;
            }
            h *= 0.5;
        }
        let Some(sol) = found else {
            return Err(abort(&branch, format!("arclength step failed after {} halvings at t = {}", ctl.max_halvings, last.t)));
        };
        ds = if sol.iterations <= 3 { (h * 1.3).min(ctl.ds_max) } else { h };
        let crossed = last.mu1 > 0.0 && sol.mu1 < 0.0 && branch.fold_index.is_none();
        let s = branch.points[n - 1].s + chord(mesh, last, &sol);
        branch.points.push(BranchPoint { s, solution: sol, mode, step: ds });
        if crossed {
            let a = branch.points[n - 1].solution.clone();
            let b = branch.points[n].solution.clone();
            let f = tr.locate_fold(&a, &b).map_err(|e| abort(&branch, e.to_string()))?;
            record_fold(mesh, &mut branch, n - 1, f);
        }
        on_point(&branch, n)?;
    }
    Ok(branch)
}

fn record_fold(mesh: &SurfaceMesh, branch: &mut Branch, before: usize, fold: Solution) {
    let p = &branch.points[before];
    branch.fold_s = Some(p.s + chord(mesh, &p.solution, &fold));
    branch.fold_parameter = Some(fold.t);
    branch.fold_index = Some(before + 1);
    branch.fold_solution = Some(fold);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperbolic::BolzaDomain;
    use crate::mesh::build_mesh;

    #[test]
    fn constant_weight_fold_at_one_half() {
        let mesh = build_mesh(&BolzaDomain::new(), 2).unwrap();
        let w0 = vec![1.0; mesh.n_canonical()];
        let ctl = StepControl { t_min: 0.05, ..StepControl::default() };
        let b = continue_branch(&mesh, &w0, &ctl).unwrap();
        let tau = b.fold_parameter.unwrap();
        assert!((tau - 0.5).abs() < 1e-6, "{tau}");
        let f = b.fold_solution.as_ref().unwrap();
        assert!(f.u.iter().all(|u| (u - 0.5 * 0.5f64.ln()).abs() < 1e-8));
        assert_eq!(b.mu1_sign_changes(), 1);
        assert!(b.stable_points().windows(2).all(|w| w[1].solution.t > w[0].solution.t));
        assert!(b.unstable_points().windows(2).all(|w| w[1].solution.t < w[0].solution.t));
        let opts = NewtonOptions::default();
        let lo = b.solution_at(0.4, BranchSide::Unstable, &mesh, &w0, &opts).unwrap();
        assert!(lo.u.iter().all(|u| (u - 0.5 * 0.2f64.ln()).abs() < 1e-10));
        let hi = b.solution_at(0.4, BranchSide::Stable, &mesh, &w0, &opts).unwrap();
        assert!(hi.u.iter().all(|u| (u - 0.5 * 0.8f64.ln()).abs() < 1e-10));
        assert!(matches!(b.solution_at(0.6, BranchSide::Stable, &mesh, &w0, &opts), Err(Error::NotBracketed(_))));
    }
}
