//! Constructive convex Peano curves.
//!
//! A compact convex planar set is split recursively into ordered
//! populations of convex cells. Every contiguous run of cells at every
//! level has a convex union, so the limit map `f: [0, 1] -> T` sends every
//! subinterval onto a convex set.
//!
//! Module layout:
//! - [`geometry`]: convex polygon kernel.
//! - [`seq_algebra`]: souls, set sequences and the population validators.
//! - [`rho_convex`]: support balls, caps and the rho-convexity tests.
//! - [`nets_stations`]: skeletons, nets, anti-nets and stations.
//! - [`offspring`]: the per-soul offspring pipeline.
//! - [`construction`]: schedules and the level recursion.
//! - [`curve`]: curve evaluation and interval images.
//! - [`cli`]: configuration, commands, JSON and SVG output.

pub mod cli;
pub mod construction;
pub mod curve;
pub mod geometry;
pub mod nets_stations;
pub mod offspring;
pub mod rho_convex;
pub mod seq_algebra;

pub use geometry::{ConvexRegion, Disc, FrameTransform, Point, Shape};
pub use seq_algebra::Soul;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Invalid(String),
    #[error("empty region passed to {0}")]
    EmptyRegion(&'static str),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("cell budget exceeded at level {level}: {cells} cells > {budget}")]
    Budget { level: usize, cells: u128, budget: u128 },
    #[error("{criterion} failed: {witness}")]
    Validation { criterion: String, witness: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
