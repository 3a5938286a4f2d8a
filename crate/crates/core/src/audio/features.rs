use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Natural-log value assigned to bands with no energy.
pub const LOG_FLOOR: f64 = -23.025850929940457; // ln(1e-10)

/// Mono waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("audio clip has no samples"));
        }
        if sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::NonFinite(format!("audio sample {i}")));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }

    /// Samples multiplied by `gain`.
    pub fn scaled(&self, gain: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|s| s * gain).collect(),
            sample_rate: self.sample_rate,
        }
    }

    /// Samples `[start, end)`, clamped to the clip.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        let end = end.min(self.samples.len());
        if start >= end {
            return Err(Error::invalid(format!("empty audio slice {start}..{end}")));
        }
        Self::new(self.samples[start..end].to_vec(), self.sample_rate)
    }
}

/// Analysis of one STFT frame.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioFeatureFrame {
    /// Natural log of the mel-band magnitudes, floored at [`LOG_FLOOR`].
    pub mel_energies: Vec<f64>,
    /// Sum over bands of the positive log-energy increase from the previous frame.
    pub onset_strength: f64,
    /// Center of the analysis window, seconds.
    pub frame_time: f64,
}

/// STFT settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameConfig {
    pub window: usize,
    pub hop: usize,
    pub bands: usize,
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self {
            window: 1024,
            hop: 512,
            bands: 32,
        }
    }
}

impl FrameConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hop == 0 || self.window < self.hop {
            return Err(Error::invalid(format!(
                "need window >= hop >= 1, got window {} hop {}",
                self.window, self.hop
            )));
        }
        if self.bands == 0 {
            return Err(Error::invalid("at least one mel band is required"));
        }
        Ok(())
    }

    /// Frames produced for a clip of `len` samples.
    pub fn frame_count(&self, len: usize) -> usize {
        if len < self.window {
            0
        } else {
            (len - self.window) / self.hop + 1
        }
    }
}

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters spaced evenly on the mel scale from 0 Hz to Nyquist;
/// `weights[b][k]` applies to FFT bin `k` of `window/2 + 1`.
pub fn mel_filterbank(bands: usize, window: usize, sample_rate: u32) -> Vec<Vec<f64>> {
    let sr = f64::from(sample_rate);
    let bins = window / 2 + 1;
    let top = hz_to_mel(sr / 2.0);
    let edges: Vec<f64> = (0..bands + 2)
        .map(|i| mel_to_hz(top * i as f64 / (bands + 1) as f64))
        .collect();
    (0..bands)
        .map(|b| {
            let (lo, mid, hi) = (edges[b], edges[b + 1], edges[b + 2]);
            (0..bins)
                .map(|k| {
                    let f = k as f64 * sr / window as f64;
                    if f <= lo || f >= hi {
                        0.0
                    } else if f <= mid {
                        (f - lo) / (mid - lo)
                    } else {
                        (hi - f) / (hi - mid)
                    }
                })
                .collect()
        })
        .collect()
}

/// Center frequency of each mel band, Hz.
pub fn mel_band_centers(bands: usize, sample_rate: u32) -> Vec<f64> {
    let top = hz_to_mel(f64::from(sample_rate) / 2.0);
    (1..=bands)
        .map(|i| mel_to_hz(top * i as f64 / (bands + 1) as f64))
        .collect()
}

/// Periodic Hann window.
pub fn hann(window: usize) -> Vec<f64> {
    (0..window)
        .map(|n| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / window as f64).cos())
        .collect()
}

/// Reusable STFT → mel analyzer for one configuration and sample rate.
pub struct FrameAnalyzer {
    config: FrameConfig,
    sample_rate: u32,
    window: Vec<f64>,
    filters: Vec<Vec<f64>>,
    fft: Arc<dyn Fft<f64>>,
}

impl FrameAnalyzer {
    pub fn new(config: FrameConfig, sample_rate: u32) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            window: hann(config.window),
            filters: mel_filterbank(config.bands, config.window, sample_rate),
            fft: FftPlanner::new().plan_fft_forward(config.window),
            config,
            sample_rate,
        })
    }

    /// Magnitude spectrum of the frame starting at `start`, `window/2 + 1` bins.
    fn magnitudes(&self, samples: &[f64], start: usize, buf: &mut Vec<Complex<f64>>) -> Vec<f64> {
        buf.clear();
        buf.extend(
            samples[start..start + self.config.window]
                .iter()
                .zip(&self.window)
                .map(|(s, w)| Complex::new(s * w, 0.0)),
        );
        self.fft.process(buf);
        buf[..self.config.window / 2 + 1]
            .iter()
            .map(|c| c.norm())
            .collect()
    }

    pub fn analyze(&self, clip: &AudioClip) -> Result<Vec<AudioFeatureFrame>> {
        if clip.sample_rate() != self.sample_rate {
            return Err(Error::invalid(format!(
                "analyzer built for {} Hz, clip is {} Hz",
                self.sample_rate,
                clip.sample_rate()
            )));
        }
        let samples = clip.samples();
        let c = self.config;
        if samples.len() < c.window {
            return Err(Error::invalid(format!(
                "clip of {} samples is shorter than the {}-sample window",
                samples.len(),
                c.window
            )));
        }
        let sr = f64::from(self.sample_rate);
        let n = c.frame_count(samples.len());
        let mut frames: Vec<AudioFeatureFrame> = Vec::with_capacity(n);
        let mut buf = Vec::with_capacity(c.window);
        for k in 0..n {
            let start = k * c.hop;
            let mag = self.magnitudes(samples, start, &mut buf);
            let mel_energies: Vec<f64> = self
                .filters
                .iter()
                .map(|w| {
                    let e: f64 = w.iter().zip(&mag).map(|(a, b)| a * b).sum();
                    if e > 1e-10 {
                        e.ln()
                    } else {
                        LOG_FLOOR
                    }
                })
                .collect();
            let onset_strength = match frames.last() {
                None => 0.0,
                Some(prev) => mel_energies
                    .iter()
                    .zip(&prev.mel_energies)
                    .map(|(a, b)| (a - b).max(0.0))
                    .sum(),
            };
            frames.push(AudioFeatureFrame {
                mel_energies,
                onset_strength,
                frame_time: (start as f64 + c.window as f64 / 2.0) / sr,
            });
        }
        Ok(frames)
    }
}

/// Hann-windowed STFT magnitude → triangular mel bands → natural log, plus
/// onset strength per frame.
pub fn extract_audio_frames(
    clip: &AudioClip,
    config: FrameConfig,
) -> Result<Vec<AudioFeatureFrame>> {
    FrameAnalyzer::new(config, clip.sample_rate())?.analyze(clip)
}
