//! File formats, the experiment harness and plotting for `pka-core`.
//!
//! The `pka` binary in this crate wires these together; everything here is
//! also usable as a library.

// `!(x > 0.0)` style checks reject NaN on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod formats;
pub mod plot;
pub mod wav;

pub use config::{ExperimentConfig, ExperimentId};
pub use error::{Error, Result};
pub use experiments::{run, RunOutput, Table};
