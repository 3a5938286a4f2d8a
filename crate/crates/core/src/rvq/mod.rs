//! Motion tokenizer: a temporal autoencoder whose latent is quantized by a
//! cascade of codebooks, each coding the residual left by the previous ones.

mod artifact;
mod autoencoder;
mod codebook;
mod loss;
mod quantizer;
mod tokenizer;
mod train;

pub use artifact::{
    load_tokenizer, read_tokenizer, save_tokenizer, write_tokenizer, RVQ_MAGIC, RVQ_VERSION,
};
pub use autoencoder::{
    parameter_count, AutoencoderConfig, ItemGradient, Quantization, TemporalAutoencoder,
};
pub use codebook::{
    kmeans_init, maintain_codebook, Codebook, MaintenanceConfig, MaintenanceReport,
};
pub use loss::{
    orthogonality_loss, reconstruction_loss, residual_gap, rvq_losses, smooth_l1, LossBreakdown,
    LossWeights,
};
pub use quantizer::{QuantizeResult, ResidualQuantizer};
pub use tokenizer::{MotionTokenizer, MotionTokens};
pub use train::{TrainConfig, Trainer};
