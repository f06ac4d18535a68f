//! Full-reference quality metrics for reconstructed background images.
//!
//! The main entry points are [`rbqi`] for the multiscale structure + color
//! index, the statistical baselines in [`baselines`], and the MOS correlation
//! harness in [`eval`].

pub mod baselines;
pub mod color;
pub mod error;
pub mod eval;
pub mod image;
pub mod metrics;
pub mod pipeline;
pub mod pooling;
pub mod pyramid;
pub mod raster;
pub mod structure;
pub mod texture;

mod window;

pub use error::{Error, Result};
pub use metrics::{MetricKind, MetricParams, MetricValue, ALL_METRICS};
pub use pipeline::{rbqi, rbqi_seq, rbqi_with_maps, RbqiParams};
pub use pooling::RbqiResult;
