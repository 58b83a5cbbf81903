pub mod audio;
pub mod cli;
pub mod dataset;
pub mod degrade;
pub mod error;
pub mod filters;
pub mod flow;
pub mod metrics;
pub mod restore;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};
