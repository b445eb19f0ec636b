//! Simulation experiments for the distributed pseudo-likelihood engine:
//! experiment specs, a replicate runner, CSV and SVG output, and the
//! example grids.

pub mod error;
pub mod examples;
pub mod plot;
pub mod report;
pub mod run;
pub mod spec;

pub use error::{BenchError, Result};
pub use report::{Check, ExperimentReport, Metric, SummaryRow};
pub use run::{fit_method, run_experiment, ReplicateRow, RunOptions};
pub use spec::{ExperimentSpec, GridPoint, Method, Splitting, ThetaSpec};
