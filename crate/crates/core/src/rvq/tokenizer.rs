use ndarray::Array2;

use crate::error::{Error, Result};
use crate::motion::{MotionSequence, Vec3};
use crate::rvq::{LossWeights, ResidualQuantizer, TemporalAutoencoder};

/// Motion token grid: `codes[l][t]` is the level-`l` code of latent step `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MotionTokens {
    pub codes: Vec<Vec<usize>>,
    /// Frames of the source sequence before padding.
    pub frames: usize,
}

impl MotionTokens {
    pub fn levels(&self) -> usize {
        self.codes.len()
    }

    pub fn steps(&self) -> usize {
        self.codes.first().map_or(0, Vec::len)
    }
}

/// Autoencoder plus quantizer stack: motion in, token ids out, and back.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionTokenizer {
    pub autoencoder: TemporalAutoencoder,
    pub quantizer: ResidualQuantizer,
    /// Training objective weights, kept with the model.
    pub weights: LossWeights,
}

impl MotionTokenizer {
    pub fn new(autoencoder: TemporalAutoencoder, quantizer: ResidualQuantizer) -> Result<Self> {
        if autoencoder.config().latent_dim != quantizer.dim() {
            return Err(Error::Shape(format!(
                "latent width {} but codebooks have D={}",
                autoencoder.config().latent_dim,
                quantizer.dim()
            )));
        }
        Ok(Self {
            autoencoder,
            quantizer,
            weights: LossWeights::default().stored(),
        })
    }

    pub fn downsample(&self) -> usize {
        self.autoencoder.config().downsample
    }

    /// Joint count implied by the feature width.
    pub fn joint_count(&self) -> usize {
        (self.autoencoder.config().input_dim - 8) / 12
    }

    fn check_ready(&self) -> Result<()> {
        if !self.quantizer.is_initialized() {
            return Err(Error::Uninitialized(
                "motion codebooks are untrained".into(),
            ));
        }
        Ok(())
    }

    /// Encoder output for a sequence, `ceil(F/d) × D`.
    pub fn encode(&self, seq: &MotionSequence) -> Result<Array2<f64>> {
        self.autoencoder.encode(&self.autoencoder.prepare(seq)?)
    }

    pub fn tokenize_motion(&self, seq: &MotionSequence) -> Result<MotionTokens> {
        self.check_ready()?;
        let z = self.encode(seq)?;
        let r = self
            .quantizer
            .quantize(z.as_standard_layout().as_slice().expect("standard"))?;
        Ok(MotionTokens {
            codes: r.indices,
            frames: seq.len(),
        })
    }

    /// Decoded features for a token grid, row-major `(T·d) × D_in`, denormalized.
    pub fn decode_rows(&self, codes: &[Vec<usize>]) -> Result<Vec<f64>> {
        let latent = self.quantizer.dequantize(codes)?;
        let t = codes.first().map_or(0, Vec::len);
        if t == 0 {
            return Err(Error::invalid("no motion tokens to decode"));
        }
        let z = Array2::from_shape_vec((t, self.quantizer.dim()), latent).expect("T x D");
        Ok(self.autoencoder.denormalize(&self.autoencoder.decode(&z)?))
    }

    /// Decodes tokens into a sequence starting at `initial_position`, trimmed
    /// to `frames` when given.
    pub fn detokenize_motion(
        &self,
        codes: &[Vec<usize>],
        initial_position: Vec3,
        frames: Option<usize>,
        fps: f64,
    ) -> Result<MotionSequence> {
        self.check_ready()?;
        let mut rows = self.decode_rows(codes)?;
        if let Some(f) = frames {
            let din = self.autoencoder.config().input_dim;
            let have = rows.len() / din;
            if f == 0 || f > have {
                return Err(Error::invalid(format!(
                    "cannot trim {have} decoded frames to {f}"
                )));
            }
            rows.truncate(f * din);
        }
        MotionSequence::from_feature_rows(&rows, self.joint_count(), fps, initial_position)
    }

    /// Encode, quantize and decode without going through integer ids.
    pub fn reconstruct(&self, seq: &MotionSequence) -> Result<MotionSequence> {
        self.check_ready()?;
        let z = self.encode(seq)?;
        let r = self
            .quantizer
            .quantize(z.as_standard_layout().as_slice().expect("standard"))?;
        let zq = Array2::from_shape_vec(z.dim(), r.quantized).expect("T x D");
        let mut rows = self.autoencoder.denormalize(&self.autoencoder.decode(&zq)?);
        rows.truncate(seq.len() * self.autoencoder.config().input_dim);
        MotionSequence::from_feature_rows(&rows, self.joint_count(), seq.fps, seq.initial_position)
    }

    /// Mean smooth-L1 between normalized features of `seq` and of `recon`
    /// (unpadded frames only).
    pub fn feature_error(&self, seq: &MotionSequence, recon: &MotionSequence) -> Result<f64> {
        let a = self.autoencoder.prepare(seq)?;
        let b = self.autoencoder.prepare(recon)?;
        let f = seq.len().min(recon.len());
        let a = a.slice(ndarray::s![..f, ..]);
        let b = b.slice(ndarray::s![..f, ..]);
        let s: f64 = a
            .iter()
            .zip(b.iter())
            .map(|(x, y)| crate::rvq::smooth_l1(y - x))
            .sum();
        Ok(s / (a.len() as f64))
    }
}
