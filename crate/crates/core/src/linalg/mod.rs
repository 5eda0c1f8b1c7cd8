//! Sparse symmetric linear algebra used by the solvers.

pub mod eigen;
pub mod ldl;
pub mod sparse;

pub use eigen::{lowest_eigenpair, smallest_eigenpairs, EigenPair};
pub use ldl::{LdlFactor, Ordering, SymmetricSolver};
pub use sparse::CsrMatrix;
