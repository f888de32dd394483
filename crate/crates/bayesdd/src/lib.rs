//! File formats, experiment drivers and the command line around
//! [`bayesdd_core`].

pub mod config;
pub mod data;
pub mod error;
pub mod eval;
pub mod model_io;
pub mod rng;
pub mod synth;

pub use bayesdd_core as core;
pub use error::{Error, Result};
