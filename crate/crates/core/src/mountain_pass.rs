//! Second solution of the Gauss equation as a mountain-pass critical point of
//! the truncated energy
//! `ℱ(u) = ½∫(|∇u|² + V u²) − ∫(F₁(u) + V F₂(u))`, `V = t² w₀`.
//!
//! The minimax is a steepest descent of the path maximum in the
//! `V`-inner product `⟨f, g⟩_V = fᵀ(K + M_V)g`, followed by a Newton polish.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, LdlFactor};
use crate::mesh::SurfaceMesh;
use crate::solver::{newton_solve, NewtonOptions, Solution};

/// Fields below this are clamped before exponentiation.
pub const EXP_CLAMP: f64 = -350.0;

/// Exponent of the tail `F₁(s) = −s^θ` and the two bridge truncations on
/// `(0, 1)`.
#[derive(Clone, Debug)]
pub struct TruncatedFunctional {
    pub theta: f64,
    /// `V = t² w₀` per canonical vertex.
    pub v: Vec<f64>,
    pub t: f64,
    bridge: Bridge,
}

/// `f₁(s) = −2s(1−s)ⁿ − sᵐ(θ + β(1−s))` on `[0, 1]`. The exponents make
/// `F₁` match value and two derivatives at both ends; `n` is fixed by
/// `∫₀¹ f₁ = F₁(1) − F₁(0) = −½`.
#[derive(Clone, Copy, Debug)]
struct Bridge {
    theta: f64,
    m: f64,
    beta: f64,
    n: f64,
}

impl Bridge {
    fn new(theta: f64) -> Result<Self> {
        let m = 4.0 * theta;
        let beta = theta * (m - theta + 1.0);
        let rest = 0.5 - theta / (m + 1.0) - beta / ((m + 1.0) * (m + 2.0));
        // (n+1)(n+2) = 2 / rest
        if !(rest > 0.0) {
            return Err(Error::InvalidInput(format!("theta = {theta} leaves no room for the F1 bridge")));
        }
        let c = 2.0 / rest;
        let n = (-3.0 + (1.0 + 4.0 * c).sqrt()) / 2.0;
        if !(n > 2.0) {
            return Err(Error::InvalidInput(format!("theta = {theta} gives bridge exponent {n} ≤ 2")));
        }
        Ok(Bridge { theta, m, beta, n })
    }

    fn f(&self, s: f64) -> f64 {
        -2.0 * s * (1.0 - s).powf(self.n) - s.powf(self.m) * (self.theta + self.beta * (1.0 - s))
    }

    fn integral(&self, s: f64) -> f64 {
        let (n, m, b) = (self.n, self.m, self.beta);
        let y = 1.0 - s;
        let first = 2.0 * (1.0 / (n + 1.0) - 1.0 / (n + 2.0) - y.powf(n + 1.0) / (n + 1.0) + y.powf(n + 2.0) / (n + 2.0));
        let second = (self.theta + b) * s.powf(m + 1.0) / (m + 1.0) - b * s.powf(m + 2.0) / (m + 2.0);
        -first - second
    }
}

/// Quintic Hermite join of `F₂` on `[0, 1]` from `½(s² + e^{−2s})` to `0`.
const F2_BRIDGE: [f64; 6] = [0.5, -1.0, 1.5, -3.5, 4.0, -1.5];

fn poly(c: &[f64], s: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * s + a)
}

fn poly_derivative(c: &[f64], s: f64) -> f64 {
    c.iter().enumerate().skip(1).rev().fold(0.0, |acc, (k, &a)| acc * s + k as f64 * a)
}

fn clamp(s: f64) -> f64 {
    if s < EXP_CLAMP {
        log::warn!("field value {s:e} clamped to {EXP_CLAMP} before exponentiation");
        EXP_CLAMP
    } else {
        s
    }
}

impl TruncatedFunctional {
    pub fn new(theta: f64, t: f64, w0: &[f64]) -> Result<Self> {
        if !(theta > 2.0 && theta.is_finite()) {
            return Err(Error::InvalidInput(format!("theta = {theta} must exceed 2")));
        }
        if !t.is_finite() {
            return Err(Error::NonFinite("parameter t"));
        }
        Ok(TruncatedFunctional { theta, v: w0.iter().map(|w| t * t * w).collect(), t, bridge: Bridge::new(theta)? })
    }

    pub fn with_default_theta(t: f64, w0: &[f64]) -> Result<Self> {
        Self::new(3.0, t, w0)
    }

    pub fn big_f1(&self, s: f64) -> f64 {
        if s <= 0.0 {
            let s = clamp(s);
            s - 0.5 * (2.0 * s).exp()
        } else if s <= 1.0 {
            -0.5 + self.bridge.integral(s)
        } else {
            -s.powf(self.theta)
        }
    }

    pub fn big_f2(&self, s: f64) -> f64 {
        if s <= 0.0 {
            let s = clamp(s);
            0.5 * (s * s + (-2.0 * s).exp())
        } else if s <= 1.0 {
            poly(&F2_BRIDGE, s)
        } else {
            0.0
        }
    }

    pub fn f1(&self, s: f64) -> f64 {
        if s <= 0.0 {
            1.0 - (2.0 * clamp(s)).exp()
        } else if s <= 1.0 {
            self.bridge.f(s)
        } else {
            -self.theta * s.powf(self.theta - 1.0)
        }
    }

    pub fn f2(&self, s: f64) -> f64 {
        if s <= 0.0 {
            let s = clamp(s);
            s - (-2.0 * s).exp()
        } else if s <= 1.0 {
            poly_derivative(&F2_BRIDGE, s)
        } else {
            0.0
        }
    }

    fn check(&self, u: &[f64], mesh: &SurfaceMesh) -> Result<()> {
        if u.len() != mesh.n_canonical() || self.v.len() != mesh.n_canonical() {
            return Err(Error::InvalidInput(format!(
                "field lengths {} and {} do not match the {} mesh vertices",
                u.len(),
                self.v.len(),
                mesh.n_canonical()
            )));
        }
        if !u.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("energy argument"));
        }
        Ok(())
    }

    /// `½(uᵀKu + uᵀM_V u) − Σ M_v (F₁(u_v) + V_v F₂(u_v))`.
    pub fn energy(&self, u: &[f64], mesh: &SurfaceMesh) -> Result<f64> {
        self.check(u, mesh)?;
        let quad = 0.5 * mesh.stiffness.bilinear(u, u);
        let local: f64 = (0..u.len())
            .map(|i| {
                let (x, v, m) = (u[i], self.v[i], mesh.lumped_mass[i]);
                m * (0.5 * v * x * x - self.big_f1(x) - v * self.big_f2(x))
            })
            .sum();
        Ok(quad + local)
    }

    /// Euclidean gradient `Ku + M_V u − M(f₁(u) + V f₂(u))`.
    pub fn gradient(&self, u: &[f64], mesh: &SurfaceMesh) -> Result<Vec<f64>> {
        self.check(u, mesh)?;
        let mut r = mesh.stiffness.matvec(u);
        for (i, r) in r.iter_mut().enumerate() {
            let (x, v, m) = (u[i], self.v[i], mesh.lumped_mass[i]);
            *r += m * (v * x - self.f1(x) - v * self.f2(x));
        }
        Ok(r)
    }

    /// `K + M_V`, the Gram matrix of the `V`-inner product.
    pub fn v_metric(&self, mesh: &SurfaceMesh) -> Result<CsrMatrix> {
        if !self.v.iter().any(|&v| v > 0.0) {
            return Err(Error::DegenerateInnerProduct);
        }
        Ok(mesh.stiffness.plus_diagonal(&mesh.weighted_mass(&self.v)?))
    }
}

/// Factored `V`-inner product.
pub struct VMetric {
    gram: CsrMatrix,
    factor: LdlFactor,
}

impl VMetric {
    pub fn new(tf: &TruncatedFunctional, mesh: &SurfaceMesh) -> Result<Self> {
        let gram = tf.v_metric(mesh)?;
        let factor = LdlFactor::factor(&gram, mesh.ordering())?;
        Ok(VMetric { gram, factor })
    }

    pub fn norm(&self, g: &[f64]) -> f64 {
        self.gram.bilinear(g, g).max(0.0).sqrt()
    }

    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        self.gram.bilinear(f, g)
    }

    /// Riesz representative of a Euclidean gradient.
    pub fn riesz(&self, r: &[f64]) -> Result<Vec<f64>> {
        let g = self.factor.solve(r);
        if !g.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("V-gradient"));
        }
        Ok(g)
    }
}

/// `V`-gradient of `ℱ` at `u`: the solution of `(K + M_V) g = r`.
pub fn gradient_v(u: &[f64], tf: &TruncatedFunctional, mesh: &SurfaceMesh) -> Result<Vec<f64>> {
    VMetric::new(tf, mesh)?.riesz(&tf.gradient(u, mesh)?)
}

#[derive(Clone, Debug, Serialize)]
pub struct PathState {
    pub nodes: Vec<Vec<f64>>,
    pub energies: Vec<f64>,
    pub max_index: usize,
}

/// One row of the minimax trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TraceRow {
    pub iteration: usize,
    pub max_node_index: usize,
    pub max_energy: f64,
    pub grad_v_norm: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MountainPassOptions {
    /// Number of path segments `P`.
    pub path_nodes: usize,
    /// Descent stops once the max node has `‖g‖_V ≤ 0.1 · tol · √|S|`.
    pub tol: f64,
    pub max_iter: usize,
    pub max_retries: usize,
    pub theta: f64,
    pub newton: NewtonOptions,
}

impl Default for MountainPassOptions {
    fn default() -> Self {
        MountainPassOptions { path_nodes: 21, tol: 1e-3, max_iter: 3000, max_retries: 3, theta: 3.0, newton: NewtonOptions::default() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MountainPassResult {
    pub solution: Solution,
    pub energy: f64,
    pub stable_energy: f64,
    /// Constant value of the low-energy endpoint.
    pub endpoint: f64,
    pub path_nodes: usize,
    pub trace: Vec<TraceRow>,
}

/// Constant `w < 0` with `ℱ(w) < level − 1`, scanning downward by 0.5.
fn low_endpoint(tf: &TruncatedFunctional, mesh: &SurfaceMesh, level: f64, start: f64) -> Result<(f64, Vec<f64>)> {
    let n = mesh.n_canonical();
    let mut c = start.min(0.0) - 0.5;
    while c > EXP_CLAMP {
        let w = vec![c; n];
        if tf.energy(&w, mesh)? < level - 1.0 {
            return Ok((c, w));
        }
        c -= 0.5;
    }
    Err(Error::MountainPass("no constant field with energy below the stable level".into()))
}

/// The ray `base + s · dir`, `s ≥ 0`.
struct Ray<'a> {
    base: &'a [f64],
    dir: Vec<f64>,
}

impl Ray<'_> {
    fn at(&self, s: f64) -> Vec<f64> {
        self.base.iter().zip(&self.dir).map(|(b, d)| b + s * d).collect()
    }
}

/// Golden-section maximum of `f` on `[lo, hi]`.
fn golden_max(f: impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64) -> Result<(f64, f64)> {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut e1, mut e2) = (f(x1)?, f(x2)?);
    for _ in 0..40 {
        if e1 > e2 {
            hi = x2;
            x2 = x1;
            e2 = e1;
            x1 = hi - phi * (hi - lo);
            e1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            e1 = e2;
            x2 = lo + phi * (hi - lo);
            e2 = f(x2)?;
        }
    }
    Ok(if e1 > e2 { (x1, e1) } else { (x2, e2) })
}

/// Ray samples together with the refined maximum along them.
struct RayMax {
    path: PathState,
    reach: f64,
    s: f64,
    energy: f64,
}

impl PathState {
    /// `segments + 1` nodes on `[0, reach]` along the ray; `reach` doubles
    /// until the last node is at least one unit below `level`.
    fn along_ray(tf: &TruncatedFunctional, mesh: &SurfaceMesh, ray: &Ray, segments: usize, mut reach: f64, level: f64) -> Result<(Self, f64)> {
        for _ in 0..30 {
            if tf.energy(&ray.at(reach), mesh)? < level - 1.0 {
                let nodes: Vec<Vec<f64>> = (0..=segments).map(|i| ray.at(reach * i as f64 / segments as f64)).collect();
                let energies = nodes.par_iter().map(|u| tf.energy(u, mesh)).collect::<Result<Vec<f64>>>()?;
                let mut p = PathState { nodes, energies, max_index: 0 };
                p.locate_max();
                return Ok((p, reach));
            }
            reach *= 2.0;
        }
        Err(Error::MountainPass("the energy does not fall below the stable level along the current ray".into()))
    }

    fn locate_max(&mut self) {
        self.max_index = self
            .energies
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &e)| if e > best.1 { (i, e) } else { best })
            .0;
    }

    fn interior_max(&self) -> bool {
        self.max_index > 0 && self.max_index + 1 < self.nodes.len()
    }
}

fn ray_max(tf: &TruncatedFunctional, mesh: &SurfaceMesh, ray: &Ray, segments: usize, reach: f64, level: f64) -> Result<RayMax> {
    let (mut path, reach) = PathState::along_ray(tf, mesh, ray, segments, reach, level)?;
    if !path.interior_max() {
        return Err(Error::NoSeparatingRidge);
    }
    let k = path.max_index;
    let h = reach / segments as f64;
    let (s, energy) = golden_max(|s| tf.energy(&ray.at(s), mesh), (k - 1) as f64 * h, (k + 1) as f64 * h)?;
    let (s, energy) = if energy >= path.energies[k] { (s, energy) } else { (k as f64 * h, path.energies[k]) };
    path.nodes[k] = ray.at(s);
    path.energies[k] = energy;
    Ok(RayMax { path, reach, s, energy })
}

/// Local minimax over rays from the stable solution: the ray maximum is
/// moved by Armijo steps along the `V`-gradient projected off the ray.
fn descend_rays(
    tf: &TruncatedFunctional,
    mesh: &SurfaceMesh,
    metric: &VMetric,
    stable: &[f64],
    stable_energy: f64,
    endpoint: &[f64],
    segments: usize,
    opts: &MountainPassOptions,
    trace: &mut Vec<TraceRow>,
) -> Result<Vec<f64>> {
    let target = 0.1 * opts.tol * mesh.total_area().sqrt();
    let mut ray = Ray { base: stable, dir: endpoint.iter().zip(stable).map(|(w, u)| w - u).collect() };
    let mut cur = ray_max(tf, mesh, &ray, segments, 1.0, stable_energy)?;
    let mut step: f64 = 1.0;
    for iteration in 0..opts.max_iter {
        let p = ray.at(cur.s);
        let mut g = metric.riesz(&tf.gradient(&p, mesh)?)?;
        let gn = metric.norm(&g);
        trace.push(TraceRow { iteration, max_node_index: cur.path.max_index, max_energy: cur.energy, grad_v_norm: gn });
        if gn <= target {
            return Ok(p);
        }
        let c = metric.inner(&g, &ray.dir) / metric.inner(&ray.dir, &ray.dir);
        g.iter_mut().zip(&ray.dir).for_each(|(g, d)| *g -= c * d);
        let gp = metric.norm(&g);
        let mut accepted = None;
        for _ in 0..40 {
            let dir: Vec<f64> = p.iter().zip(&g).zip(stable).map(|((p, g), u)| p - step * g - u).collect();
            let trial = Ray { base: stable, dir };
            match ray_max(tf, mesh, &trial, segments, cur.reach / cur.s, stable_energy) {
                Ok(rm) if rm.energy <= cur.energy - 1e-4 * step * gp * gp => {
                    accepted = Some((trial, rm));
                    break;
                }
                Ok(_) | Err(Error::NoSeparatingRidge | Error::MountainPass(_)) => step *= 0.5,
                Err(e) => return Err(e),
            }
        }
        match accepted {
            Some((r, rm)) => {
                ray = r;
                cur = rm;
                step = (2.0 * step).min(8.0);
            }
            None => {
                log::debug!("minimax line search stalled at ‖g‖_V = {gn:e}");
                return Ok(p);
            }
        }
    }
    Ok(ray.at(cur.s))
}

/// Mountain-pass solution at the parameter of `stable`.
pub fn mountain_pass_solve(
    stable: &Solution,
    mesh: &SurfaceMesh,
    w0: &[f64],
    opts: &MountainPassOptions,
) -> Result<MountainPassResult> {
    if !stable.converged || !(stable.mu1 > 0.0) {
        return Err(Error::InvalidInput(format!(
            "mountain pass needs a converged stable solution (converged = {}, mu1 = {})",
            stable.converged, stable.mu1
        )));
    }
    if opts.path_nodes < 2 {
        return Err(Error::InvalidInput("at least two path segments are required".into()));
    }
    let tf = TruncatedFunctional::new(opts.theta, stable.t, w0)?;
    let metric = VMetric::new(&tf, mesh)?;
    let stable_energy = tf.energy(&stable.u, mesh)?;
    let (endpoint, w) = low_endpoint(&tf, mesh, stable_energy, stable.u_min())?;
    let mut trace = Vec::new();
    let mut segments = opts.path_nodes;
    for attempt in 0..=opts.max_retries {
        let ridge = descend_rays(&tf, mesh, &metric, &stable.u, stable_energy, &w, segments, opts, &mut trace)?;
        let sol = newton_solve(&ridge, stable.t, mesh, w0, &opts.newton)?;
        let gap = sol.u.iter().zip(&stable.u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if sol.converged && gap > 1e-6 && (sol.mu1 < 0.0 || sol.mu1.abs() <= 1e-6) {
            let energy = tf.energy(&sol.u, mesh)?;
            return Ok(MountainPassResult { solution: sol, energy, stable_energy, endpoint, path_nodes: segments, trace });
        }
        log::info!(
            "mountain pass attempt {attempt} with {segments} segments rejected (converged = {}, gap = {gap:e}, mu1 = {})",
            sol.converged,
            sol.mu1
        );
        segments *= 2;
    }
    Err(Error::MountainPass(format!("no unstable critical point found at t = {} after {} retries", stable.t, opts.max_retries)))
}
