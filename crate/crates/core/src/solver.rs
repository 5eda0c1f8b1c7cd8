//! Discrete Gauss equation `Δu + 1 − e^{2u} − t² w₀ e^{−2u} = 0`, its
//! linearization and a damped Newton solver.
//!
//! With lumped mass `M` and stiffness `K` the nodal residual is
//! `r = M⁻¹(−K u) + 1 − e^{2u} − W e^{−2u}`, `W = t² w₀`. The scaled residual
//! `G = M r` has Jacobian `−A` with `A = K + M diag(2e^{2u} − 2W e^{−2u})`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{lowest_eigenpair, CsrMatrix, SymmetricSolver};
use crate::mesh::SurfaceMesh;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub u: Vec<f64>,
    pub t: f64,
    pub residual_norm: f64,
    pub mu1: f64,
    pub converged: bool,
    #[serde(default)]
    pub iterations: usize,
}

impl Solution {
    pub fn u_min(&self) -> f64 {
        self.u.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn u_max(&self) -> f64 {
        self.u.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.u.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { tol: 1e-10, max_iter: 50 }
    }
}

fn check_inputs(u: &[f64], mesh: &SurfaceMesh, w0: &[f64]) -> Result<()> {
    let n = mesh.n_canonical();
    if u.len() != n || w0.len() != n {
        return Err(Error::InvalidInput(format!(
            "field lengths {} and {} do not match the {n} mesh vertices",
            u.len(),
            w0.len()
        )));
    }
    if !u.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("solution field"));
    }
    Ok(())
}

/// Scaled residual `G = −K u + M (1 − e^{2u} − W e^{−2u})`.
pub fn scaled_residual(u: &[f64], t: f64, mesh: &SurfaceMesh, w0: &[f64]) -> Result<Vec<f64>> {
    check_inputs(u, mesh, w0)?;
    let ku = mesh.stiffness.matvec(u);
    let t2 = t * t;
    let g: Vec<f64> = (0..u.len())
        .map(|i| {
            let m = mesh.lumped_mass[i];
            -ku[i] + m * (1.0 - (2.0 * u[i]).exp() - t2 * w0[i] * (-2.0 * u[i]).exp())
        })
        .collect();
    if !g.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("residual"));
    }
    Ok(g)
}

/// Nodal residual `r = M⁻¹ G`.
pub fn residual(u: &[f64], t: f64, mesh: &SurfaceMesh, w0: &[f64]) -> Result<Vec<f64>> {
    let g = scaled_residual(u, t, mesh, w0)?;
    Ok(g.iter().zip(&mesh.lumped_mass).map(|(g, m)| g / m).collect())
}

/// `sqrt(Σ M_v r_v²)`.
pub fn residual_norm(mesh: &SurfaceMesh, r: &[f64]) -> f64 {
    mesh.lumped_mass.iter().zip(r).map(|(m, r)| m * r * r).sum::<f64>().sqrt()
}

/// Same norm computed from the scaled residual: `sqrt(Σ G_v² / M_v)`.
pub fn scaled_residual_norm(mesh: &SurfaceMesh, g: &[f64]) -> f64 {
    mesh.lumped_mass.iter().zip(g).map(|(m, g)| g * g / m).sum::<f64>().sqrt()
}

/// Potential of the linearized operator, `q = 2e^{2u} − 2W e^{−2u}`.
pub fn linearized_potential(u: &[f64], t: f64, w0: &[f64]) -> Vec<f64> {
    u.iter().zip(w0).map(|(u, w)| 2.0 * (2.0 * u).exp() - 2.0 * t * t * w * (-2.0 * u).exp()).collect()
}

/// The pencil `(A, M)` with `A = K + M diag(q)`; `M` is returned as its
/// diagonal.
pub fn linearized_operator(u: &[f64], t: f64, mesh: &SurfaceMesh, w0: &[f64]) -> Result<(CsrMatrix, Vec<f64>)> {
    check_inputs(u, mesh, w0)?;
    let q = linearized_potential(u, t, w0);
    let d: Vec<f64> = q.iter().zip(&mesh.lumped_mass).map(|(q, m)| q * m).collect();
    Ok((mesh.stiffness.plus_diagonal(&d), mesh.lumped_mass.clone()))
}

/// `∂G/∂t = −2t M w₀ e^{−2u}`.
pub fn residual_t_derivative(u: &[f64], t: f64, mesh: &SurfaceMesh, w0: &[f64]) -> Vec<f64> {
    (0..u.len()).map(|i| -2.0 * t * mesh.lumped_mass[i] * w0[i] * (-2.0 * u[i]).exp()).collect()
}

/// Smallest eigenvalue of the linearized pencil and its eigenvector.
pub fn first_eigenpair(
    u: &[f64],
    t: f64,
    mesh: &SurfaceMesh,
    w0: &[f64],
    guess: Option<&[f64]>,
) -> Result<(f64, Vec<f64>)> {
    let (a, m) = linearized_operator(u, t, mesh, w0)?;
    let q = linearized_potential(u, t, w0);
    let qmin = q.iter().copied().fold(f64::INFINITY, f64::min);
    let lower = qmin - 0.05 * (1.0 + qmin.abs());
    let pair = lowest_eigenpair(&a, &m, mesh.ordering(), lower, guess)?;
    Ok((pair.value, pair.vector))
}

/// Damped Newton iteration. Each step solves `A δ = G` and halves the step
/// until the residual norm decreases.
pub fn newton_solve(u0: &[f64], t: f64, mesh: &SurfaceMesh, w0: &[f64], opts: &NewtonOptions) -> Result<Solution> {
    let mut u = u0.to_vec();
    let mut g = scaled_residual(&u, t, mesh, w0)?;
    let mut norm = scaled_residual_norm(mesh, &g);
    let mut iterations = 0;
    while norm > opts.tol && iterations < opts.max_iter {
        iterations += 1;
        let (a, _) = linearized_operator(&u, t, mesh, w0)?;
        let mut solver = SymmetricSolver::new(&a, mesh.ordering())?;
        let dmax = a.max_abs_diagonal();
        if solver.factor().min_abs_pivot() < 1e-13 * dmax {
            let (mu1, _) = first_eigenpair(&u, t, mesh, w0, None)?;
            if mu1.abs() < 1e-12 {
                return Err(Error::FoldProximity { mu1 });
            }
        }
        let delta = match solver.solve(&g) {
            Ok(d) => d,
            Err(Error::NonFinite(_)) => {
                let (mu1, _) = first_eigenpair(&u, t, mesh, w0, None)?;
                return Err(Error::FoldProximity { mu1 });
            }
            Err(e) => return Err(e),
        };
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<f64> = u.iter().zip(&delta).map(|(u, d)| u + step * d).collect();
            if let Ok(gt) = scaled_residual(&trial, t, mesh, w0) {
                let nt = scaled_residual_norm(mesh, &gt);
                if nt < norm {
                    u = trial;
                    g = gt;
                    norm = nt;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            log::debug!("newton line search stalled at residual {norm:e}");
            break;
        }
    }
    let converged = norm <= opts.tol;
    let mu1 = if converged { first_eigenpair(&u, t, mesh, w0, None)?.0 } else { f64::NAN };
    Ok(Solution { u, t, residual_norm: norm, mu1, converged, iterations })
}

/// Integral identity `∫ e^{2u} + ∫ W e^{−2u}`, returned with its defect from
/// the surface area. Integrals use the P1 quadrature functional.
pub fn integral_identity(sol: &Solution, mesh: &SurfaceMesh, w0: &[f64]) -> (f64, f64) {
    let t2 = sol.t * sol.t;
    let total = mesh.integrate(&[&sol.u, w0], |f| (2.0 * f[0]).exp() + t2 * f[1] * (-2.0 * f[0]).exp());
    (total, total - mesh.total_area())
}
