//! Graph coarsening with node features.
//!
//! The crate learns a loading matrix `C` that maps the `p` nodes of a graph onto
//! `k < p` supernodes, together with coarse node features, by block
//! majorization-minimization. Three solvers are provided:
//!
//! * [`fgc::fgc_solve`] jointly learns `C` and the coarse features `X̃`.
//! * [`gc::gc_solve`] learns `C` from the Laplacian alone; [`gc::two_stage_solve`]
//!   then aggregates and smooths the features.
//! * [`fgcr::fgcr_solve`] additionally factors the coarse features as `X̃ = WH`.
//!
//! Quality is measured with [`metrics::metric_report`].

pub mod cluster;
pub mod datagen;
pub mod error;
pub mod fgc;
pub mod fgcr;
pub mod gc;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod presets;
pub mod solver;

pub use error::{Error, Result};
pub use fgc::{fgc_solve, FgcResult};
pub use fgcr::{fgcr_solve, FgcrResult};
pub use gc::{gc_solve, two_stage_solve, GcResult};
pub use graph::{CoarsenedGraph, GraphData, LoadingForm, LoadingMatrix};
pub use linalg::Laplacian;
pub use metrics::MetricReport;
pub use solver::{Projection, SolverConfig, SolverTrace, StepRule};
