pub mod cli;
pub mod dataset;
pub mod error;
pub mod fea;
pub mod metrics;
pub mod persistence;
pub mod simp;
pub mod tensor;

pub use error::{Error, Result};
