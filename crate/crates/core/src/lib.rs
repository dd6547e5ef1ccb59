//! Discretized sum-product estimates at scale `δ = 2^-m`: grid sets,
//! regularity statistics, uniformization, additive energies, tube–point
//! incidences, test-set generators and the experiment pipelines that tie
//! them together.

pub mod energy;
pub mod error;
pub mod experiments;
pub mod generators;
pub mod grid;
pub mod incidence;
pub mod regularity;
pub mod uniformize;

pub use error::{Error, Result};
pub use grid::{ArithOp, DyadicCell, DyadicSquare, GridSet, GridSet2D};
