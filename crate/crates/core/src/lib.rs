//! Group choreography at desk scale: motion and music tokenization, Hilbert
//! position tokens, training-sequence assembly, segment-wise group generation
//! with position hand-off, and evaluation metrics.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod audio;
mod binio;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod generation;
pub mod metrics;
pub mod motion;
pub mod pipeline;
pub mod plot;
pub mod position;
pub mod rvq;
pub mod sequence;

pub use error::{Error, Result};
