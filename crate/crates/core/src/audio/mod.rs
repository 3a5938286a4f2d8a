//! Stand-in audio tokenizer: mel-band analysis, onset-based beat tracking and
//! a k-means codebook over analysis frames.

mod beats;
mod codebook;
mod features;
mod wav;

pub use beats::{detect_beats, detect_beats_with_gap, format_beats, pick_peaks, MIN_BEAT_GAP};
pub use codebook::{
    load_audio_codebook, read_audio_codebook, save_audio_codebook, write_audio_codebook,
    AudioCodebook, AudioTokenConfig, AUD_MAGIC, AUD_VERSION,
};
pub use features::{
    extract_audio_frames, hann, hz_to_mel, mel_band_centers, mel_filterbank, mel_to_hz, AudioClip,
    AudioFeatureFrame, FrameAnalyzer, FrameConfig, LOG_FLOOR,
};
pub use wav::{read_wav, write_wav};
