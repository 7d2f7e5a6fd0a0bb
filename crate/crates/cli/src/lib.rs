//! Seeded experiment orchestration for locaudit: JSON configs in, JSON
//! records, CSV tables and SVG charts out.

// Negated comparisons below are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod drivers;
pub mod error;
pub mod plot;
pub mod record;

pub use config::{AutoOr, DistSpec, ExperimentConfig, Kind};
pub use drivers::{run, RunOptions};
pub use error::{HarnessError, HarnessResult};
pub use record::{ExperimentRecord, RunVerdict, Table};
