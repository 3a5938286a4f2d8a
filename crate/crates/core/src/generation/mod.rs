//! Segment-wise group generation over a pluggable next-word predictor.

mod config;
mod group;
mod ngram;
mod sampler;

pub use config::{GenerationConfig, Placement};
pub use group::{
    auto_placement, generate_group, generate_segment, propagate_position, segment_audio,
    GroupGeneration, RootState, SegmentBlock, SegmentRequest, SegmentTrace,
};
pub use ngram::{
    load_ngram, read_ngram, save_ngram, write_ngram, NGramModel, NGramPredictor, NGRAM_MAGIC,
    NGRAM_VERSION,
};
pub use sampler::Sampling;

use crate::error::Result;
use crate::sequence::Vocabulary;

/// Next-word distribution given a context of vocabulary ids.
///
/// Returned distributions cover the whole vocabulary and sum to 1.
pub trait Predictor: Sync {
    fn vocabulary(&self) -> &Vocabulary;
    fn distribution(&self, context: &[usize]) -> Result<Vec<f64>>;
}
