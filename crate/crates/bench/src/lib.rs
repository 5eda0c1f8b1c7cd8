//! Shared fixtures for the benchmarks.

use hypgauss_core::{build_mesh, weight_field, BolzaDomain, QuadraticDifferential, SurfaceMesh, WeightField};

pub struct Fixture {
    pub mesh: SurfaceMesh,
    pub weight: WeightField,
}

/// Mesh at `level` with the `m = 0` Poincaré weight truncated at radius `depth`.
pub fn poincare(level: usize, depth: f64) -> Fixture {
    let domain = BolzaDomain::new();
    let mesh = build_mesh(&domain, level).expect("mesh");
    let qd = QuadraticDifferential::poincare(&domain, 0, depth).expect("series");
    let weight = weight_field(&qd, &mesh).expect("weight");
    Fixture { mesh, weight }
}

/// Mesh at `level` with `w₀ ≡ 1`.
pub fn constant(level: usize) -> Fixture {
    let mesh = build_mesh(&BolzaDomain::new(), level).expect("mesh");
    let weight = WeightField::constant(&mesh, 1.0).expect("weight");
    Fixture { mesh, weight }
}
