use thiserror::Error;

use crate::continuation::Branch;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {re}+{im}i is not inside the unit disk")]
    OutsideDisk { re: f64, im: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("empty truncation set for the Poincare series")]
    EmptyGroup,

    #[error("side pairing mismatch of {0:e} exceeds construction tolerance")]
    PairingMismatch(f64),

    #[error("degenerate triangle {index} (area {area:e})")]
    DegenerateTriangle { index: usize, area: f64 },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("linear solve is singular near a fold (mu1 = {mu1:e}); use arclength continuation")]
    FoldProximity { mu1: f64 },

    #[error("the V inner product is degenerate (V vanishes identically)")]
    DegenerateInnerProduct,

    #[error("continuation aborted after {} branch points: {reason}", partial.points.len())]
    ContinuationAborted { reason: String, partial: Box<Branch> },

    #[error("no separating ridge found between the stable solution and the low-energy state")]
    NoSeparatingRidge,

    #[error("mountain pass failed: {0}")]
    MountainPass(String),

    #[error("mesh hash mismatch: expected {expected}, found {found}")]
    MeshHashMismatch { expected: String, found: String },

    #[error("branch does not bracket t = {0}")]
    NotBracketed(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
