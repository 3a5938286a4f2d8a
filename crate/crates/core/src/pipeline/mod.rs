//! In-memory pipeline stages shared by the command line and the examples.

mod artifacts;
mod corpus;
mod tokenizer;

pub use artifacts::{
    load_grid, load_vocabulary, parse_grid, parse_vocabulary, render_grid, render_vocabulary,
    save_grid, save_vocabulary, GRID_MAGIC, GRID_VERSION, VOCAB_MAGIC, VOCAB_VERSION,
};
pub use corpus::{pretrain_words, segment_examples, tokenize_clip, ClipTokens, DancerTokens};
pub use tokenizer::{codebook_utilization, train_tokenizer, TokenizerRun, TokenizerSpec};
