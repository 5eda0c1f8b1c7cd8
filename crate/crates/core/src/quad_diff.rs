//! Holomorphic quadratic differentials from truncated Poincaré series and the
//! weight field `w₀ = |α|² / g²` they induce on the mesh.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperbolic::{metric_density, BolzaDomain, DiskIsometry};
use crate::mesh::SurfaceMesh;

/// Default hyperbolic truncation radius of the series.
pub const DEFAULT_DEPTH: f64 = 12.0;

/// Below this ratio of series value to summed term moduli the series is
/// treated as identically zero.
const VANISHING_RATIO: f64 = 1e-4;

/// `α(z) = scale · Σ_γ H(γz) γ'(z)²` with `H(w) = wᵐ`, summed over the group
/// elements moving the origin by at most `truncation_depth`.
#[derive(Clone, Debug)]
pub struct QuadraticDifferential {
    pub group_elements: Vec<DiskIsometry>,
    pub seed_exponent: u32,
    pub truncation_depth: f64,
    pub scale: f64,
}

impl QuadraticDifferential {
    pub fn poincare(domain: &BolzaDomain, seed_exponent: u32, truncation_depth: f64) -> Result<Self> {
        if !(truncation_depth >= 0.0 && truncation_depth.is_finite()) {
            return Err(Error::InvalidInput(format!("truncation depth {truncation_depth} must be finite and ≥ 0")));
        }
        Self::from_elements(domain.enumerate_ball(truncation_depth), seed_exponent, truncation_depth)
    }

    pub fn from_elements(group_elements: Vec<DiskIsometry>, seed_exponent: u32, truncation_depth: f64) -> Result<Self> {
        if group_elements.is_empty() {
            return Err(Error::EmptyGroup);
        }
        Ok(QuadraticDifferential { group_elements, seed_exponent, truncation_depth, scale: 1.0 })
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        self.scale *= factor;
        self
    }

    pub fn evaluate(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.evaluate_with_magnitude(z)?.0)
    }

    /// Series value together with the sum of the term moduli, which measures
    /// cancellation.
    pub fn evaluate_with_magnitude(&self, z: Complex64) -> Result<(Complex64, f64)> {
        if !(z.norm_sqr() < 1.0) {
            return Err(Error::OutsideDisk { re: z.re, im: z.im });
        }
        let m = self.seed_exponent as i32;
        let mut sum = Complex64::new(0.0, 0.0);
        let mut mag = 0.0;
        for g in &self.group_elements {
            let den = g.b.conj() * z + g.a.conj();
            let d2 = (den * den).inv();
            let h = if m == 0 { Complex64::new(1.0, 0.0) } else { ((g.a * z + g.b) / den).powi(m) };
            let term = h * d2 * d2;
            sum += term;
            mag += term.norm();
        }
        Ok((sum * self.scale, mag * self.scale.abs()))
    }

    /// `max_k |α(T_k z) T_k'(z)² − α(z)|` over the eight generators.
    pub fn automorphy_residual(&self, domain: &BolzaDomain, z: Complex64) -> Result<f64> {
        let base = self.evaluate(z)?;
        domain.generators.iter().try_fold(0.0f64, |worst, g| {
            let d = g.derivative(z);
            Ok(worst.max((self.evaluate(g.apply(z))? * d * d - base).norm()))
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Constant { c: f64 },
    Poincare { m: u32, depth: f64 },
    Custom { source: String },
}

#[derive(Clone, Debug)]
pub struct WeightField {
    /// Per canonical vertex.
    pub values: Vec<f64>,
    pub provenance: Provenance,
    /// Largest spread among the copies of one canonical vertex before
    /// averaging.
    pub pair_discrepancy: f64,
    /// `α` at each canonical vertex's representative point, when known.
    pub alpha: Option<Vec<Complex64>>,
    pub mesh_hash: String,
}

impl WeightField {
    pub fn constant(mesh: &SurfaceMesh, c: f64) -> Result<Self> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::InvalidInput(format!("constant weight {c} must be finite and ≥ 0")));
        }
        Ok(WeightField {
            values: vec![c; mesh.n_canonical()],
            provenance: Provenance::Constant { c },
            pair_discrepancy: 0.0,
            alpha: None,
            mesh_hash: mesh.hash().to_string(),
        })
    }

    pub fn custom(mesh: &SurfaceMesh, values: Vec<f64>, source: String) -> Result<Self> {
        if values.len() != mesh.n_canonical() {
            return Err(Error::InvalidInput(format!(
                "weight field has {} values, mesh has {} vertices",
                values.len(),
                mesh.n_canonical()
            )));
        }
        if let Some(w) = values.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidInput(format!("weight value {w} is not finite and nonnegative")));
        }
        Ok(WeightField {
            values,
            provenance: Provenance::Custom { source },
            pair_discrepancy: 0.0,
            alpha: None,
            mesh_hash: mesh.hash().to_string(),
        })
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&w| w == 0.0)
    }

    /// Pairing discrepancy relative to the field maximum.
    pub fn relative_pair_discrepancy(&self) -> f64 {
        let m = self.max();
        if m > 0.0 { self.pair_discrepancy / m } else { 0.0 }
    }
}

/// `w₀ = |α|² / g²` at every raw vertex, folded onto canonical vertices by
/// averaging the boundary copies.
pub fn weight_field(qd: &QuadraticDifferential, mesh: &SurfaceMesh) -> Result<WeightField> {
    let evals: Vec<(Complex64, f64)> =
        mesh.vertices.par_iter().map(|&z| qd.evaluate_with_magnitude(z)).collect::<Result<_>>()?;
    let peak = evals.iter().map(|(a, _)| a.norm()).fold(0.0, f64::max);
    let scale = evals.iter().map(|(_, m)| *m).fold(0.0, f64::max);
    // odd seeds cancel under z ↦ −z and leave only truncation noise
    if !(peak > VANISHING_RATIO * scale) {
        return Err(Error::InvalidInput(format!(
            "Poincare series with seed exponent {} vanishes identically (peak {peak:.3e} against term scale {scale:.3e})",
            qd.seed_exponent
        )));
    }
    let alpha_raw: Vec<Complex64> = evals.into_iter().map(|(a, _)| a).collect();
    let raw: Vec<f64> = mesh
        .vertices
        .iter()
        .zip(&alpha_raw)
        .map(|(&z, a)| Ok(a.norm_sqr() / metric_density(z)?.powi(2)))
        .collect::<Result<_>>()?;
    let (values, spread) = mesh.fold_average(&raw);
    let field = WeightField {
        alpha: Some(
            (0..mesh.n_canonical())
                .map(|c| alpha_raw[mesh.representative(c)])
                .collect(),
        ),
        values,
        provenance: Provenance::Poincare { m: qd.seed_exponent, depth: qd.truncation_depth },
        pair_discrepancy: spread,
        mesh_hash: mesh.hash().to_string(),
    };
    if field.relative_pair_discrepancy() > 1e-3 {
        log::warn!(
            "paired boundary weights differ by {:.3e} of the maximum; the series truncation is too shallow",
            field.relative_pair_discrepancy()
        );
    }
    Ok(field)
}

/// `(‖α‖_T, ‖α‖_WP) = (∫ √w₀ dA, (∫ w₀ dA)^{1/2})` with the lumped mass.
pub fn qd_norms(weight: &WeightField, mesh: &SurfaceMesh) -> (f64, f64) {
    let t: f64 = mesh.lumped_mass.iter().zip(&weight.values).map(|(m, w)| m * w.sqrt()).sum();
    let wp: f64 = mesh.lumped_integral(&weight.values).sqrt();
    (t, wp)
}

/// Parameter beyond which no solution exists: `4π / ∫ √w₀ dA`.
pub fn nonexistence_bound(weight: &WeightField, mesh: &SurfaceMesh) -> Result<f64> {
    let (t, _) = qd_norms(weight, mesh);
    if !(t > 0.0) {
        return Err(Error::InvalidInput("weight field integrates to zero".into()));
    }
    Ok(4.0 * std::f64::consts::PI / t)
}

/// Weight field interchange file; refused when the mesh hash differs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeightFile {
    pub mesh_hash: String,
    pub provenance: Provenance,
    pub pair_discrepancy: f64,
    pub values: Vec<f64>,
}

impl From<&WeightField> for WeightFile {
    fn from(w: &WeightField) -> Self {
        WeightFile {
            mesh_hash: w.mesh_hash.clone(),
            provenance: w.provenance.clone(),
            pair_discrepancy: w.pair_discrepancy,
            values: w.values.clone(),
        }
    }
}

impl WeightFile {
    pub fn into_field(self, mesh: &SurfaceMesh) -> Result<WeightField> {
        if self.mesh_hash != mesh.hash() {
            return Err(Error::MeshHashMismatch { expected: mesh.hash().to_string(), found: self.mesh_hash });
        }
        let mut w = WeightField::custom(mesh, self.values, String::new())?;
        w.provenance = self.provenance;
        w.pair_discrepancy = self.pair_discrepancy;
        Ok(w)
    }
}
