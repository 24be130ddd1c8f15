//! Agent-based simulation of product diffusion in cultural and fashion
//! markets driven by social pressure, advertisement and an
//! over-commercialization penalty.

pub mod cli;
pub mod engine;
pub mod error;
pub mod graph;
pub mod metrics;
pub mod model;
pub mod sweep;

pub use error::{Error, Result};
