//! Discrete audio tokens: nearest-entry ids of mel frames under a k-means
//! codebook.
//!
//! `AUD1` artifact layout, little-endian:
//!
//! ```text
//! magic    "AUD1"
//! version  u32 = 1
//! header   u32 K, u32 bands, u32 window, u32 hop, u32 sample_rate,
//!          u8 gain_normalize
//! entries  f32[K·bands]
//! ```

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use rand::Rng;

use crate::audio::{extract_audio_frames, AudioClip, AudioFeatureFrame, FrameConfig};
use crate::binio::{open_input, to_u32, Reader, Writer};
use crate::error::{Error, Result};
use crate::rvq::{kmeans_init, Codebook};

pub const AUD_MAGIC: &[u8; 4] = b"AUD1";
pub const AUD_VERSION: u32 = 1;

/// Analysis settings for audio tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AudioTokenConfig {
    pub frames: FrameConfig,
    pub sample_rate: u32,
    /// Subtract each frame's mean log energy before matching, which makes ids
    /// independent of overall loudness.
    pub gain_normalize: bool,
}

impl AudioTokenConfig {
    /// Hop chosen so one audio token spans the same time as one motion token
    /// (`downsample` frames at `fps`); the window is two hops.
    pub fn matched(sample_rate: u32, fps: f64, downsample: usize, bands: usize) -> Result<Self> {
        if !(fps > 0.0) || downsample == 0 {
            return Err(Error::invalid("fps and downsample must be positive"));
        }
        let hop = (f64::from(sample_rate) * downsample as f64 / fps).round() as usize;
        if hop == 0 {
            return Err(Error::invalid("token hop rounds to zero samples"));
        }
        Ok(Self {
            frames: FrameConfig {
                window: 2 * hop,
                hop,
                bands,
            },
            sample_rate,
            gain_normalize: true,
        })
    }

    /// Token frames for a clip, padded with trailing silence so that the token
    /// count is `ceil(len / hop)`.
    pub fn token_frames(&self, clip: &AudioClip) -> Result<Vec<AudioFeatureFrame>> {
        if clip.sample_rate() != self.sample_rate {
            return Err(Error::invalid(format!(
                "audio is {} Hz, tokenizer expects {} Hz",
                clip.sample_rate(),
                self.sample_rate
            )));
        }
        let FrameConfig { window, hop, .. } = self.frames;
        let count = clip.samples().len().div_ceil(hop);
        let needed = (count - 1) * hop + window;
        let mut samples = clip.samples().to_vec();
        samples.resize(needed.max(samples.len()), 0.0);
        let padded = AudioClip::new(samples, clip.sample_rate())?;
        let mut frames = extract_audio_frames(&padded, self.frames)?;
        frames.truncate(count);
        Ok(frames)
    }

    /// Number of tokens produced for a clip of `len` samples.
    pub fn token_count(&self, len: usize) -> usize {
        len.div_ceil(self.frames.hop)
    }

    fn feature(&self, frame: &AudioFeatureFrame) -> Vec<f64> {
        let mut v = frame.mel_energies.clone();
        if self.gain_normalize {
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            v.iter_mut().for_each(|x| *x -= mean);
        }
        v
    }
}

/// Codebook over (optionally mean-removed) mel frames.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioCodebook {
    pub config: AudioTokenConfig,
    book: Option<Codebook>,
}

impl AudioCodebook {
    /// An untrained codebook; quantizing with it is an error.
    pub fn untrained(config: AudioTokenConfig) -> Self {
        Self { config, book: None }
    }

    pub fn from_codebook(config: AudioTokenConfig, book: Codebook) -> Result<Self> {
        if book.dim() != config.frames.bands {
            return Err(Error::Shape(format!(
                "codebook width {} but {} mel bands",
                book.dim(),
                config.frames.bands
            )));
        }
        Ok(Self {
            config,
            book: Some(book),
        })
    }

    pub fn codebook(&self) -> Option<&Codebook> {
        self.book.as_ref()
    }

    pub fn size(&self) -> usize {
        self.book.as_ref().map_or(0, Codebook::size)
    }

    /// k-means over the token frames of `clips`.
    pub fn fit<R: Rng + ?Sized>(
        config: AudioTokenConfig,
        clips: &[AudioClip],
        size: usize,
        iters: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let mut samples = Vec::new();
        for clip in clips {
            for f in config.token_frames(clip)? {
                samples.extend(config.feature(&f));
            }
        }
        let book = kmeans_init(&samples, config.frames.bands, size, iters, rng)?;
        Self::from_codebook(config, book)
    }

    /// Nearest-entry id per frame.
    pub fn quantize_audio(&self, frames: &[AudioFeatureFrame]) -> Result<Vec<usize>> {
        let book = self
            .book
            .as_ref()
            .ok_or_else(|| Error::Uninitialized("audio codebook is untrained".into()))?;
        frames
            .iter()
            .enumerate()
            .map(|(i, f)| {
                if f.mel_energies.len() != book.dim() {
                    return Err(Error::Shape(format!(
                        "frame {i} has {} bands, codebook {}",
                        f.mel_energies.len(),
                        book.dim()
                    )));
                }
                Ok(book.nearest(&self.config.feature(f)).0)
            })
            .collect()
    }

    /// Token ids for a whole clip.
    pub fn tokenize(&self, clip: &AudioClip) -> Result<Vec<usize>> {
        self.quantize_audio(&self.config.token_frames(clip)?)
    }
}

pub fn write_audio_codebook<W: Write>(book: &AudioCodebook, out: W) -> Result<()> {
    let cb = book
        .codebook()
        .ok_or_else(|| Error::Uninitialized("cannot save an untrained audio codebook".into()))?;
    let c = book.config;
    let mut w = Writer::new(out);
    w.bytes(AUD_MAGIC)?;
    w.u32(AUD_VERSION)?;
    w.u32(to_u32(cb.size(), "codebook size")?)?;
    w.u32(to_u32(c.frames.bands, "bands")?)?;
    w.u32(to_u32(c.frames.window, "window")?)?;
    w.u32(to_u32(c.frames.hop, "hop")?)?;
    w.u32(c.sample_rate)?;
    w.u8(u8::from(c.gain_normalize))?;
    w.f32s(cb.entries())?;
    w.into_inner().flush()?;
    Ok(())
}

pub fn read_audio_codebook<R: Read>(input: R) -> Result<AudioCodebook> {
    let mut r = Reader::new(input);
    r.magic(AUD_MAGIC)?;
    r.enter("version");
    let version = r.u32()?;
    if version != AUD_VERSION {
        return Err(Error::Version {
            kind: "AUD",
            found: version,
            expected: AUD_VERSION,
        });
    }
    r.enter("header");
    let k = r.u32()? as usize;
    let bands = r.u32()? as usize;
    let window = r.u32()? as usize;
    let hop = r.u32()? as usize;
    let sample_rate = r.u32()?;
    let gain_normalize = match r.u8()? {
        0 => false,
        1 => true,
        b => return Err(r.fail(format!("flag byte {b}"))),
    };
    let frames = FrameConfig { window, hop, bands };
    frames.validate().map_err(|e| r.fail(e.to_string()))?;
    if k == 0 || sample_rate == 0 {
        return Err(r.fail("zero codebook size or sample rate"));
    }
    r.enter("entries");
    let entries = r.f32s(k * bands)?;
    r.finish()?;
    let config = AudioTokenConfig {
        frames,
        sample_rate,
        gain_normalize,
    };
    AudioCodebook::from_codebook(config, Codebook::from_entries(entries, bands)?)
}

pub fn save_audio_codebook(book: &AudioCodebook, path: &Path) -> Result<()> {
    write_audio_codebook(book, BufWriter::new(File::create(path)?))
}

pub fn load_audio_codebook(path: &Path) -> Result<AudioCodebook> {
    read_audio_codebook(open_input(path, "audio codebook")?)
}
