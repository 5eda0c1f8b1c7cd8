//! Gauss equation of minimal immersions of the Bolza surface into hyperbolic
//! three-manifolds: meshes, weights from quadratic differentials, branch
//! continuation through the fold, mountain-pass solutions and the induced
//! geometry.

pub mod certify;
pub mod continuation;
pub mod error;
pub mod geometry;
pub mod hyperbolic;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod mountain_pass;
pub mod quad_diff;
pub mod solver;

pub use certify::{certify_no_solution, CertifyReport, Verdict};
pub use continuation::{continue_branch, continue_branch_with, Branch, BranchPoint, BranchSide, StepControl, StepMode};
pub use error::{Error, Result};
pub use geometry::{ambient_metric, blowup_trend, curvature_report, degeneration_radius, AmbientMetricSample, CurvatureReport};
pub use hyperbolic::{BolzaDomain, DiskIsometry};
pub use mesh::{build_mesh, build_mesh_with, MassScheme, SurfaceMesh};
pub use mountain_pass::{gradient_v, mountain_pass_solve, MountainPassOptions, MountainPassResult, PathState, TruncatedFunctional};
pub use quad_diff::{nonexistence_bound, qd_norms, weight_field, Provenance, QuadraticDifferential, WeightField};
pub use solver::{newton_solve, NewtonOptions, Solution};
