//! Exact and asymptotic sojourn-time analysis of the finite-capacity M/M/1
//! processor-sharing queue.

pub mod cli;
pub mod error;
pub mod green;
pub mod model;
pub mod scaled;
pub mod simulator;
pub mod special;
pub mod spectrum;
pub mod time_domain;
pub mod transform;

pub use error::{Error, Result};
pub use model::{GeneratorMatrix, ModelParams, RootData};
