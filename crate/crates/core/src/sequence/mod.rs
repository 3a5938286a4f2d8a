//! Token-word sequences for pretraining and group fine-tuning.

mod example;
mod vocab;
mod words;

pub(crate) use example::check_distribution;
pub use example::{
    build_pretrain_stream, build_sft_example, read_examples, sft_context, sft_loss, write_examples,
    DancerPrompt, DancerTrack, PretrainSegment, PretrainStream, Span, SpanKind, TrainingExample,
};
pub use vocab::Vocabulary;
pub use words::{flatten_motion_codes, parse_words, render_words, unflatten_motion_codes, Word};
