pub mod check;
pub mod cli;
pub mod compat;
pub mod error;
pub mod matrix;
pub mod ontic;
pub mod quantum;
pub mod random;
pub mod report;
pub mod sampler;
pub mod scenario;
pub mod suite;

pub use error::{Error, Result};
