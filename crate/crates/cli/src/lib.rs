//! Pipeline orchestration for the shape retrieval toolkit: configuration,
//! content-addressed caching, stage execution, the bundled toy dataset
//! generator and SVG plotting.

pub mod cache;
pub mod config;
pub mod pipeline;
pub mod plot;
pub mod toygen;

pub use config::{Combination, RunConfig, Sampler};
pub use pipeline::{run_pipeline, PipelineOutput};
