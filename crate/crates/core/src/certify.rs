//! Nonexistence checks above the fold: the sufficient bound
//! `t ≥ 4π / ∫√w₀` and, below it, an empirical search by Newton runs from
//! randomized negative starts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::LdlFactor;
use crate::mesh::SurfaceMesh;
use crate::quad_diff::{nonexistence_bound, WeightField};
use crate::solver::{newton_solve, NewtonOptions, Solution};

/// Two converged endpoints closer than this in sup norm count as one
/// solution.
pub const DISTINCT_TOL: f64 = 1e-6;

/// Relative slack when comparing `t` with the bound, which carries the
/// roundoff of the summed mass.
const BOUND_RTOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// `t` is at or above the bound, so no solution exists.
    CertifiedByTheorem,
    /// No randomized start converged; evidence only.
    EmpiricalNone,
    SolutionsFound,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub start_constant: f64,
    pub converged: bool,
    pub residual_norm: f64,
    pub iterations: usize,
    pub u_min: f64,
    pub u_max: f64,
    pub mu1: f64,
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifyReport {
    pub t: f64,
    pub bound: f64,
    pub verdict: Verdict,
    pub attempts: Vec<Attempt>,
    /// Distinct converged solutions, sorted by `u_max` descending.
    pub solutions: Vec<Solution>,
}

/// Random start `c + η`: `c` uniform in `[−6, 0]`, `η` uniform noise
/// smoothed twice by `(K + M)⁻¹ M` and scaled to sup norm `amplitude`.
fn random_start(rng: &mut ChaCha8Rng, mesh: &SurfaceMesh, smoother: &LdlFactor, amplitude: f64) -> (f64, Vec<f64>) {
    let c = rng.gen_range(-6.0..=0.0);
    let mut eta: Vec<f64> = (0..mesh.n_canonical()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    for _ in 0..2 {
        let rhs: Vec<f64> = eta.iter().zip(&mesh.lumped_mass).map(|(e, m)| e * m).collect();
        eta = smoother.solve(&rhs);
    }
    let mean = mesh.lumped_integral(&eta) / mesh.total_area();
    let sup = eta.iter().map(|e| (e - mean).abs()).fold(0.0, f64::max);
    let scale = if sup > 0.0 { amplitude / sup } else { 0.0 };
    (c, eta.iter().map(|e| c + scale * (e - mean)).collect())
}

pub fn certify_no_solution(
    t: f64,
    mesh: &SurfaceMesh,
    weight: &WeightField,
    attempts: usize,
    seed: u64,
    opts: &NewtonOptions,
) -> Result<CertifyReport> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidInput(format!("t = {t} must be positive")));
    }
    let bound = nonexistence_bound(weight, mesh)?;
    if t >= bound * (1.0 - BOUND_RTOL) {
        return Ok(CertifyReport { t, bound, verdict: Verdict::CertifiedByTheorem, attempts: vec![], solutions: vec![] });
    }
    let smoother = LdlFactor::factor(&mesh.stiffness.plus_diagonal(&mesh.lumped_mass), mesh.ordering())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(attempts);
    let mut solutions: Vec<Solution> = Vec::new();
    for _ in 0..attempts {
        let (c, start) = random_start(&mut rng, mesh, &smoother, 0.1);
        let record = match newton_solve(&start, t, mesh, &weight.values, opts) {
            Ok(sol) => {
                let rec = Attempt {
                    start_constant: c,
                    converged: sol.converged,
                    residual_norm: sol.residual_norm,
                    iterations: sol.iterations,
                    u_min: sol.u_min(),
                    u_max: sol.u_max(),
                    mu1: sol.mu1,
                    failure: None,
                };
                let fresh = sol.converged
                    && solutions.iter().all(|s| {
                        s.u.iter().zip(&sol.u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) > DISTINCT_TOL
                    });
                if fresh {
                    solutions.push(sol);
                }
                rec
            }
            Err(e) => Attempt {
                start_constant: c,
                converged: false,
                residual_norm: f64::NAN,
                iterations: 0,
                u_min: f64::NAN,
                u_max: f64::NAN,
                mu1: f64::NAN,
                failure: Some(e.to_string()),
            },
        };
        records.push(record);
    }
    solutions.sort_by(|a, b| b.u_max().total_cmp(&a.u_max()));
    let verdict = if solutions.is_empty() { Verdict::EmpiricalNone } else { Verdict::SolutionsFound };
    Ok(CertifyReport { t, bound, verdict, attempts: records, solutions })
}
