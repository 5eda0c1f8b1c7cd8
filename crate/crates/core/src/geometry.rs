//! Immersion geometry of a solution: principal curvature `λ = t√w₀ e^{−2u}`,
//! intrinsic curvature `K = −1 − λ²`, the ambient metric
//! `g(z, r) = e^{2v}[cosh r · I + sinh r · e^{−2v} A]²` on the normal bundle
//! and the blow-up trend of the lower branch.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::continuation::{Branch, BranchSide};
use crate::error::{Error, Result};
use crate::hyperbolic::metric_density;
use crate::mesh::SurfaceMesh;
use crate::quad_diff::WeightField;
use crate::solver::{NewtonOptions, Solution};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub t: f64,
    pub lambda: Vec<f64>,
    /// Intrinsic curvature `K` per vertex.
    pub curvature: Vec<f64>,
    pub lambda_max: f64,
    pub almost_fuchsian: bool,
    /// `|Σ M K e^{2u} + 4π|`.
    pub gauss_bonnet_defect: f64,
    /// False at zeros of the weight, where the principal frame is undefined.
    pub frame_defined: Vec<bool>,
}

impl CurvatureReport {
    pub fn curvature_max_abs(&self) -> f64 {
        self.curvature.iter().map(|k| k.abs()).fold(0.0, f64::max)
    }
}

pub fn principal_curvature(sol: &Solution, w0: &[f64]) -> Vec<f64> {
    sol.u.iter().zip(w0).map(|(u, w)| sol.t.abs() * w.sqrt() * (-2.0 * u).exp()).collect()
}

pub fn curvature_report(sol: &Solution, mesh: &SurfaceMesh, w0: &[f64]) -> Result<CurvatureReport> {
    if !sol.converged {
        return Err(Error::InvalidInput(format!("solution at t = {} is not converged", sol.t)));
    }
    if sol.u.len() != mesh.n_canonical() || w0.len() != mesh.n_canonical() {
        return Err(Error::InvalidInput("solution or weight length does not match the mesh".into()));
    }
    let lambda = principal_curvature(sol, w0);
    let curvature: Vec<f64> = lambda.iter().map(|l| -1.0 - l * l).collect();
    let lambda_max = lambda.iter().copied().fold(0.0, f64::max);
    let integrand: Vec<f64> = curvature.iter().zip(&sol.u).map(|(k, u)| k * (2.0 * u).exp()).collect();
    let gauss_bonnet_defect = (mesh.lumped_integral(&integrand) + 4.0 * std::f64::consts::PI).abs();
    Ok(CurvatureReport {
        t: sol.t,
        lambda,
        curvature,
        lambda_max,
        almost_fuchsian: lambda_max < 1.0,
        gauss_bonnet_defect,
        frame_defined: w0.iter().map(|&w| w > 0.0).collect(),
    })
}

/// `max_v |λ₁ − λ₂|` for two solutions at the same parameter.
pub fn lambda_distance(a: &CurvatureReport, b: &CurvatureReport) -> f64 {
    a.lambda.iter().zip(&b.lambda).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// `arctanh(1/λ_max)` where the normal exponential map first degenerates,
/// `None` when `λ < 1` everywhere.
pub fn degeneration_radius(report: &CurvatureReport) -> Option<f64> {
    report.lambda.iter().filter(|&&l| l > 1.0).map(|l| (1.0 / l).atanh()).reduce(f64::min)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmbientMetricSample {
    pub z: [f64; 2],
    pub r: f64,
    /// `[g11, g12, g22]`.
    pub g: [f64; 3],
    /// Determinant of the bracket `cosh r · I + sinh r · e^{−2v} A`.
    pub bracket_det: f64,
    pub degenerate: bool,
}

impl AmbientMetricSample {
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [[self.g[0], self.g[1]], [self.g[1], self.g[2]]]
    }
}

/// Per-vertex data determining `g(z, ·)`: `e^{2v}`, `λ` and the phase of
/// `α` fixing the principal frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalData {
    pub z: Complex64,
    pub conformal: f64,
    pub lambda: f64,
    pub phase: f64,
}

impl NormalData {
    pub fn at_vertex(sol: &Solution, mesh: &SurfaceMesh, weight: &WeightField, vertex: usize) -> Result<Self> {
        if vertex >= mesh.n_canonical() {
            return Err(Error::InvalidInput(format!("vertex {vertex} is out of range")));
        }
        if !sol.converged {
            return Err(Error::InvalidInput(format!("solution at t = {} is not converged", sol.t)));
        }
        let z = mesh.canonical_point(vertex);
        let conformal = (2.0 * sol.u[vertex]).exp() * metric_density(z)?;
        let lambda = sol.t.abs() * weight.values[vertex].sqrt() * (-2.0 * sol.u[vertex]).exp();
        let phase = weight.alpha.as_ref().map_or(0.0, |a| a[vertex].arg());
        Ok(NormalData { z, conformal, lambda, phase })
    }

    /// `e^{−2v} A = λ [[cos φ, −sin φ], [−sin φ, −cos φ]]`.
    fn shape(&self) -> [f64; 3] {
        let (s, c) = self.phase.sin_cos();
        [self.lambda * c, -self.lambda * s, -self.lambda * c]
    }

    pub fn sample(&self, r: f64) -> AmbientMetricSample {
        let [a, b, d] = self.shape();
        let (ch, sh) = (r.cosh(), r.sinh());
        let (p, q, s) = (ch + sh * a, sh * b, ch + sh * d);
        let g = [self.conformal * (p * p + q * q), self.conformal * q * (p + s), self.conformal * (q * q + s * s)];
        let bracket_det = p * s - q * q;
        // eigenvalues cosh r ± λ sinh r
        let degenerate = ch - self.lambda * sh.abs() <= 0.0;
        AmbientMetricSample { z: [self.z.re, self.z.im], r, g, bracket_det, degenerate }
    }
}

pub fn ambient_metric(
    sol: &Solution,
    mesh: &SurfaceMesh,
    weight: &WeightField,
    vertex: usize,
    r: f64,
) -> Result<AmbientMetricSample> {
    Ok(NormalData::at_vertex(sol, mesh, weight, vertex)?.sample(r))
}

/// First `r > 0` where the bracket determinant vanishes, by bisection on
/// `[0, r_max]`; `None` if it stays positive.
pub fn degeneration_radius_by_bisection(data: &NormalData, r_max: f64) -> Option<f64> {
    let det = |r: f64| data.sample(r).bracket_det;
    let (mut lo, mut hi) = (0.0, r_max);
    if det(hi) > 0.0 {
        return None;
    }
    while hi - lo > 1e-14 * (1.0 + hi) {
        let mid = 0.5 * (lo + hi);
        if det(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// `½ g'' − ¼ g' g⁻¹ g' − g` by central differences with step `h`: the
/// largest entry in absolute value relative to the largest entry of `g`.
pub fn ambient_ode_residual(data: &NormalData, r: f64, h: f64) -> f64 {
    let m = |r: f64| data.sample(r).matrix();
    let (gm, g0, gp) = (m(r - h), m(r), m(r + h));
    let mut d1 = [[0.0; 2]; 2];
    let mut d2 = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            d1[i][j] = (gp[i][j] - gm[i][j]) / (2.0 * h);
            d2[i][j] = (gp[i][j] - 2.0 * g0[i][j] + gm[i][j]) / (h * h);
        }
    }
    let det = g0[0][0] * g0[1][1] - g0[0][1] * g0[1][0];
    let inv = [[g0[1][1] / det, -g0[0][1] / det], [-g0[1][0] / det, g0[0][0] / det]];
    let mul = |a: [[f64; 2]; 2], b: [[f64; 2]; 2]| {
        let mut c = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        c
    };
    let q = mul(mul(d1, inv), d1);
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            worst = worst.max((0.5 * d2[i][j] - 0.25 * q[i][j] - g0[i][j]).abs());
            scale = scale.max(g0[i][j].abs());
        }
    }
    worst / scale
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TrendRow {
    pub t: f64,
    pub sup_norm: f64,
    pub u_min: f64,
    pub lambda_max: f64,
    pub curvature_max_abs: f64,
    /// `‖u‖∞ + ln t`.
    pub stabilized: f64,
}

impl TrendRow {
    fn new(sol: &Solution, mesh: &SurfaceMesh, w0: &[f64]) -> Result<Self> {
        let rep = curvature_report(sol, mesh, w0)?;
        Ok(TrendRow {
            t: sol.t,
            sup_norm: sol.sup_norm(),
            u_min: sol.u_min(),
            lambda_max: rep.lambda_max,
            curvature_max_abs: rep.curvature_max_abs(),
            stabilized: sol.sup_norm() + sol.t.ln(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BlowupTrend {
    pub unstable: Vec<TrendRow>,
    /// Stable-branch counterparts at the same parameters.
    pub stable: Vec<TrendRow>,
    pub sup_norm_increasing: bool,
    pub curvature_increasing: bool,
}

/// Post-fold solutions at a decreasing parameter sequence, with the
/// monotonicity of `‖u‖∞` and `max |K|` as `t` decreases.
pub fn blowup_trend(
    branch: &Branch,
    ts: &[f64],
    mesh: &SurfaceMesh,
    w0: &[f64],
    opts: &NewtonOptions,
) -> Result<BlowupTrend> {
    if ts.is_empty() || ts.windows(2).any(|w| !(w[1] < w[0])) || ts.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::InvalidInput("the parameter sequence must be positive and strictly decreasing".into()));
    }
    let mut unstable = Vec::with_capacity(ts.len());
    let mut stable = Vec::with_capacity(ts.len());
    for &t in ts {
        unstable.push(TrendRow::new(&branch.solution_at(t, BranchSide::Unstable, mesh, w0, opts)?, mesh, w0)?);
        stable.push(TrendRow::new(&branch.solution_at(t, BranchSide::Stable, mesh, w0, opts)?, mesh, w0)?);
    }
    let sup_norm_increasing = unstable.windows(2).all(|w| w[1].sup_norm > w[0].sup_norm);
    let curvature_increasing = unstable.windows(2).all(|w| w[1].curvature_max_abs > w[0].curvature_max_abs);
    Ok(BlowupTrend { unstable, stable, sup_norm_increasing, curvature_increasing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperbolic::BolzaDomain;
    use crate::mesh::build_mesh;
    use crate::solver::newton_solve;

    fn constant(mesh: &SurfaceMesh, t: f64, u: f64) -> Solution {
        let w0 = vec![1.0; mesh.n_canonical()];
        let sol = newton_solve(&vec![u; mesh.n_canonical()], t, mesh, &w0, &NewtonOptions::default()).unwrap();
        assert!(sol.converged);
        sol
    }

    #[test]
    fn constant_weight_curvatures() {
        let mesh = build_mesh(&BolzaDomain::new(), 2).unwrap();
        let w0 = vec![1.0; mesh.n_canonical()];
        let up = curvature_report(&constant(&mesh, 0.4, 0.0), &mesh, &w0).unwrap();
        assert!((up.lambda_max - 0.5).abs() < 1e-10 && up.almost_fuchsian);
        assert!(degeneration_radius(&up).is_none());
        let lo = curvature_report(&constant(&mesh, 0.4, -1.5), &mesh, &w0).unwrap();
        assert!((lo.lambda_max - 2.0).abs() < 1e-10);
        assert!((degeneration_radius(&lo).unwrap() - 0.5f64.atanh()).abs() < 1e-10);
        assert!(up.gauss_bonnet_defect < 1e-9 && lo.gauss_bonnet_defect < 1e-9);
        let flat = curvature_report(&constant(&mesh, 0.0, 0.1), &mesh, &w0).unwrap();
        assert!(flat.lambda_max == 0.0 && flat.curvature.iter().all(|&k| k == -1.0));
    }

    #[test]
    fn ambient_metric_at_zero_is_conformal() {
        let d = NormalData { z: Complex64::new(0.1, 0.2), conformal: 1.7, lambda: 0.6, phase: 0.9 };
        let s = d.sample(0.0);
        assert!((s.g[0] - 1.7).abs() < 1e-14 && s.g[1].abs() < 1e-14 && (s.g[2] - 1.7).abs() < 1e-14);
        for r in [-5.0, -1.0, 0.5, 5.0] {
            let s = d.sample(r);
            let expect = (r.cosh() + 0.6 * r.sinh()) * (r.cosh() - 0.6 * r.sinh());
            assert!((s.bracket_det - expect).abs() < 1e-9 * expect.abs().max(1.0));
            assert!(!s.degenerate);
            assert!(ambient_ode_residual(&d, r, 1e-3) < 1e-4);
        }
        let steep = NormalData { lambda: 2.0, ..d };
        let r = degeneration_radius_by_bisection(&steep, 10.0).unwrap();
        assert!((r - 0.5f64.atanh()).abs() < 1e-12);
        assert!(steep.sample(r + 1e-6).degenerate && !steep.sample(r - 1e-6).degenerate);
    }
}
