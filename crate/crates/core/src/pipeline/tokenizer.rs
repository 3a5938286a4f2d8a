use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::KeyValues;
use crate::error::{Error, Result};
use crate::motion::{pose_dim, MotionSequence};
use crate::rvq::{
    AutoencoderConfig, LossBreakdown, MaintenanceConfig, MotionTokenizer, ResidualQuantizer,
    TemporalAutoencoder, TrainConfig, Trainer,
};

/// Tokenizer shape and training schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenizerSpec {
    pub levels: usize,
    pub codebook_size: usize,
    pub latent_dim: usize,
    pub hidden: usize,
    pub downsample: usize,
    pub shared_codebook: bool,
    pub commitment: f64,
    pub steps: usize,
    /// Sequences per step.
    pub batch: usize,
    /// Frames per training crop; 0 trains on whole sequences.
    pub crop_frames: usize,
    pub learning_rate: f64,
    /// Loss emphasis on root velocity and height features.
    pub root_weight: f64,
    pub kmeans_iters: usize,
    pub ema_decay: f64,
    pub dead_threshold: u64,
    pub maintenance_window: u32,
    pub seed: u64,
}

impl Default for TokenizerSpec {
    fn default() -> Self {
        Self {
            levels: 4,
            codebook_size: 64,
            latent_dim: 32,
            hidden: 64,
            downsample: 4,
            shared_codebook: false,
            commitment: 1.0,
            steps: 600,
            batch: 16,
            crop_frames: 64,
            learning_rate: 5e-3,
            root_weight: 10.0,
            kmeans_iters: 20,
            ema_decay: 0.95,
            dead_threshold: 1,
            maintenance_window: 50,
            seed: 0,
        }
    }
}

const KEYS: [&str; 17] = [
    "levels",
    "codebook_size",
    "latent_dim",
    "hidden",
    "downsample",
    "shared_codebook",
    "commitment",
    "steps",
    "batch",
    "crop_frames",
    "learning_rate",
    "root_weight",
    "kmeans_iters",
    "ema_decay",
    "dead_threshold",
    "maintenance_window",
    "seed",
];

impl TokenizerSpec {
    pub const KEYS: &'static [&'static str] = &KEYS;

    /// Reads the tokenizer keys; other keys are left to the caller.
    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        let d = Self::default();
        let spec = Self {
            levels: kv.get_or("levels", d.levels)?,
            codebook_size: kv.get_or("codebook_size", d.codebook_size)?,
            latent_dim: kv.get_or("latent_dim", d.latent_dim)?,
            hidden: kv.get_or("hidden", d.hidden)?,
            downsample: kv.get_or("downsample", d.downsample)?,
            shared_codebook: kv.get_or("shared_codebook", d.shared_codebook)?,
            commitment: kv.get_or("commitment", d.commitment)?,
            steps: kv.get_or("steps", d.steps)?,
            batch: kv.get_or("batch", d.batch)?,
            crop_frames: kv.get_or("crop_frames", d.crop_frames)?,
            learning_rate: kv.get_or("learning_rate", d.learning_rate)?,
            root_weight: kv.get_or("root_weight", d.root_weight)?,
            kmeans_iters: kv.get_or("kmeans_iters", d.kmeans_iters)?,
            ema_decay: kv.get_or("ema_decay", d.ema_decay)?,
            dead_threshold: kv.get_or("dead_threshold", d.dead_threshold)?,
            maintenance_window: kv.get_or("maintenance_window", d.maintenance_window)?,
            seed: kv.get_or("seed", d.seed)?,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch == 0 {
            return Err(Error::invalid("batch must be at least 1"));
        }
        if self.crop_frames != 0 && self.crop_frames < self.downsample {
            return Err(Error::invalid(format!(
                "crop of {} frames is shorter than one latent step ({})",
                self.crop_frames, self.downsample
            )));
        }
        if !(self.ema_decay > 0.0 && self.ema_decay < 1.0) {
            return Err(Error::invalid(format!(
                "EMA decay {} outside (0, 1)",
                self.ema_decay
            )));
        }
        Ok(())
    }

    /// An untrained tokenizer for a `joints`-joint skeleton.
    pub fn build(&self, joints: usize) -> Result<MotionTokenizer> {
        self.validate()?;
        let config = AutoencoderConfig {
            input_dim: pose_dim(joints),
            hidden: self.hidden,
            latent_dim: self.latent_dim,
            downsample: self.downsample,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let ae = TemporalAutoencoder::new(config, &mut rng)?;
        let rq = ResidualQuantizer::new(
            self.levels,
            self.codebook_size,
            self.latent_dim,
            self.shared_codebook,
            self.commitment,
        )?;
        MotionTokenizer::new(ae, rq)
    }

    fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            maintenance: MaintenanceConfig {
                decay: self.ema_decay,
                dead_threshold: self.dead_threshold,
                window: self.maintenance_window,
                ..MaintenanceConfig::default()
            },
            kmeans_iters: self.kmeans_iters,
            seed: self.seed,
            ..TrainConfig::default()
        }
    }
}

/// Result of [`train_tokenizer`].
#[derive(Debug, Clone)]
pub struct TokenizerRun {
    pub tokenizer: MotionTokenizer,
    /// Losses over the full training set right after codebook initialization.
    pub initial: LossBreakdown,
    /// Losses over the full training set after the last step.
    pub last: LossBreakdown,
    /// Per-step batch losses, before each update.
    pub history: Vec<LossBreakdown>,
    /// Fraction of codebook entries used at least once on the training set.
    pub utilization: f64,
}

fn crop<R: Rng>(seq: &MotionSequence, frames: usize, rng: &mut R) -> Result<MotionSequence> {
    if frames == 0 || seq.len() <= frames {
        return Ok(seq.clone());
    }
    let start = rng.gen_range(0..=seq.len() - frames);
    MotionSequence::new(
        seq.frames[start..start + frames].to_vec(),
        seq.fps,
        seq.initial_position,
    )
}

/// Fits normalization, initializes codebooks by k-means on the whole set,
/// then runs `spec.steps` steps on random crops.
pub fn train_tokenizer(sequences: &[MotionSequence], spec: &TokenizerSpec) -> Result<TokenizerRun> {
    let Some(first) = sequences.first() else {
        return Err(Error::invalid("no training sequences"));
    };
    let mut tok = spec.build(first.joint_count())?;
    tok.autoencoder
        .fit_normalization(sequences, spec.root_weight)?;
    let mut trainer = Trainer::new(tok, spec.train_config())?;
    trainer.initialize_codebooks(sequences)?;
    let initial = trainer.evaluate(sequences)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(1);
    let mut history = Vec::with_capacity(spec.steps);
    for _ in 0..spec.steps {
        let batch = (0..spec.batch)
            .map(|_| {
                crop(
                    &sequences[rng.gen_range(0..sequences.len())],
                    spec.crop_frames,
                    &mut rng,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        history.push(trainer.train_step(&batch)?);
    }
    let last = trainer.evaluate(sequences)?;
    let utilization = codebook_utilization(&trainer.tokenizer, sequences)?;
    Ok(TokenizerRun {
        tokenizer: trainer.tokenizer,
        initial,
        last,
        history,
        utilization,
    })
}

/// Fraction of (level, entry) pairs selected at least once when tokenizing
/// `sequences`; a shared codebook counts each entry once.
pub fn codebook_utilization(tok: &MotionTokenizer, sequences: &[MotionSequence]) -> Result<f64> {
    let k = tok.quantizer.codebook_size();
    let levels = tok.quantizer.levels();
    let shared = tok.quantizer.is_shared();
    let rows = if shared { 1 } else { levels };
    let used = sequences
        .par_iter()
        .map(|s| {
            let codes = tok.tokenize_motion(s)?;
            let mut used = vec![false; rows * k];
            for (l, row) in codes.codes.iter().enumerate() {
                let base = if shared { 0 } else { l * k };
                row.iter().for_each(|&c| used[base + c] = true);
            }
            Ok::<_, Error>(used)
        })
        .try_reduce(
            || vec![false; rows * k],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x |= y);
                Ok(a)
            },
        )?;
    Ok(used.iter().filter(|&&u| u).count() as f64 / used.len() as f64)
}
