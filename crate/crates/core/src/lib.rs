//! Cluster Center Trees: exact and approximate nearest-neighbor, k-nearest-neighbor
//! and range search over polygonal curves under the continuous Fréchet distance.

// Negated comparisons keep NaN on the rejecting side.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod datagen;
pub mod error;
pub mod frechet;
pub mod geometry;
pub mod index;
pub mod instrument;
pub mod io;
pub mod query;
pub mod session;
pub mod store;

pub use error::{CctError, Result};
pub use frechet::DistanceMode;
pub use geometry::{Interval, TrajId, Trajectory, TrajectorySet};
pub use index::{BuildOptions, BuildVariant, CctIndex, InsertVariant, QualityReport};
pub use instrument::{Counters, Instrumentation, Stage};
pub use query::{query, ErrorModel, QueryKind, QueryResult, QuerySpec, ReportedError};
