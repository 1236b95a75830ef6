pub mod classical;
pub mod config;
pub mod detect;
pub mod error;
pub mod pipeline;
pub mod plots;
pub mod potential;
pub mod quad;
pub mod quantum;
pub mod scaling;
pub mod stats;
pub mod testfn;
pub mod trace;

pub use error::{ProbeError, Result};
