//! Maximum-likelihood inference for Mallows models with Spearman distance
//! and their finite mixtures, on full and partial rankings.

pub mod bessel;
pub mod counts;
pub mod error;
pub mod io;
pub mod mixture;
pub mod model;
pub mod partition;
pub mod ranking;
pub mod sampler;
pub mod sim;

pub use error::{Error, Result};
