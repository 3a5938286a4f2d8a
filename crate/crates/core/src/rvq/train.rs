use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::motion::MotionSequence;
use crate::rvq::autoencoder::{ItemGradient, Quantization};
use crate::rvq::codebook::{to_storage, MaintenanceConfig};
use crate::rvq::loss::{orthogonality_loss, LossBreakdown};
use crate::rvq::MotionTokenizer;

/// Optimizer and schedule settings for tokenizer training.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub maintenance: MaintenanceConfig,
    pub kmeans_iters: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            maintenance: MaintenanceConfig::default(),
            kmeans_iters: 20,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
        }
    }
}

/// Owns a tokenizer under training plus optimizer state.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub tokenizer: MotionTokenizer,
    config: TrainConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
    rng: ChaCha8Rng,
}

impl Trainer {
    pub fn new(tokenizer: MotionTokenizer, config: TrainConfig) -> Result<Self> {
        if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) {
            return Err(Error::invalid(format!(
                "learning rate {} must be positive",
                config.learning_rate
            )));
        }
        let n = tokenizer.autoencoder.params().len();
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Ok(Self {
            tokenizer,
            config,
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
            rng,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Fits the codebooks by k-means on the encoder outputs of `sequences`.
    pub fn initialize_codebooks(&mut self, sequences: &[MotionSequence]) -> Result<()> {
        let ae = &self.tokenizer.autoencoder;
        let latents: Vec<Vec<f64>> = sequences
            .par_iter()
            .map(|s| {
                let z = ae.encode(&ae.prepare(s)?)?;
                Ok(z.as_standard_layout().iter().copied().collect())
            })
            .collect::<Result<_>>()?;
        let all: Vec<f64> = latents.concat();
        let iters = self.config.kmeans_iters;
        self.tokenizer
            .quantizer
            .initialize(&all, iters, &mut self.rng)
    }

    /// Losses of `batch` under the current model, without updating anything.
    pub fn evaluate(&self, batch: &[MotionSequence]) -> Result<LossBreakdown> {
        Ok(self.batch_gradients(batch)?.0)
    }

    fn batch_gradients(
        &self,
        batch: &[MotionSequence],
    ) -> Result<(LossBreakdown, Vec<f64>, Vec<ItemGradient>)> {
        if batch.is_empty() {
            return Err(Error::invalid("training batch is empty"));
        }
        let tok = &self.tokenizer;
        if !tok.quantizer.is_initialized() {
            return Err(Error::Uninitialized(
                "codebooks have not been initialized".into(),
            ));
        }
        let items: Vec<ItemGradient> = batch
            .par_iter()
            .map(|s| {
                let x = tok.autoencoder.prepare(s)?;
                tok.autoencoder.loss_and_grad(
                    &x,
                    Quantization::Stack(&tok.quantizer),
                    tok.quantizer.commitment(),
                    &tok.weights,
                )
            })
            .collect::<Result<_>>()?;
        let scale = 1.0 / items.len() as f64;
        let mut losses = LossBreakdown::default();
        let mut grad = vec![0.0; tok.autoencoder.params().len()];
        for item in &items {
            losses.accumulate(&item.losses, scale);
            for (g, v) in grad.iter_mut().zip(&item.grad) {
                *g += scale * v;
            }
        }
        losses.ortho = tok.quantizer.books().iter().map(orthogonality_loss).sum();
        losses.total += tok.weights.ortho * losses.ortho;
        Ok((losses, grad, items))
    }

    /// One Adam step on the batch followed by EMA codebook maintenance.
    ///
    /// Codebooks are fitted by k-means from this batch first if they have not
    /// been initialized. Returns the losses before the update.
    pub fn train_step(&mut self, batch: &[MotionSequence]) -> Result<LossBreakdown> {
        if !self.tokenizer.quantizer.is_initialized() {
            self.initialize_codebooks(batch)?;
        }
        let (losses, grad, items) = self.batch_gradients(batch)?;
        if !losses.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite(format!(
                "training step {}: losses {losses:?}",
                self.step
            )));
        }

        self.step += 1;
        let c = &self.config;
        let t = self.step as i32;
        let bc1 = 1.0 - c.adam_beta1.powi(t);
        let bc2 = 1.0 - c.adam_beta2.powi(t);
        let mut params = self.tokenizer.autoencoder.params().to_vec();
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = c.adam_beta1 * self.m[i] + (1.0 - c.adam_beta1) * g;
            self.v[i] = c.adam_beta2 * self.v[i] + (1.0 - c.adam_beta2) * g * g;
            let update =
                c.learning_rate * (self.m[i] / bc1) / ((self.v[i] / bc2).sqrt() + c.adam_eps);
            params[i] = to_storage(params[i] - update);
        }
        self.tokenizer.autoencoder.set_params(&params)?;

        let results: Vec<_> = items.iter().map(|i| &i.quantization).collect();
        let maintenance = self.config.maintenance;
        self.tokenizer
            .quantizer
            .maintain(&results, &maintenance, &mut self.rng)?;
        Ok(losses)
    }
}
