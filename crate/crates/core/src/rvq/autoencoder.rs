//! Temporal convolutional autoencoder.
//!
//! Encoder: `conv3(D_in→H) → SiLU → strided conv(kernel=stride=d, H→D) →
//! residual block`. Decoder: `residual block → nearest upsample ×d →
//! conv3(D→H) → SiLU → conv3(H→D_in)`. A residual block is
//! `x + W_b·SiLU(W_a·x + b_a) + b_b`. All 3-tap convolutions are zero-padded
//! and preserve length.
//!
//! Inputs are feature rows normalized by a per-feature mean and standard
//! deviation held in the model.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::motion::{pose_dim, MotionSequence};
use crate::rvq::codebook::to_storage;
use crate::rvq::loss::{smooth_l1, smooth_l1_grad, LossBreakdown, LossWeights};
use crate::rvq::QuantizeResult;

/// Network shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AutoencoderConfig {
    /// Feature width per frame.
    pub input_dim: usize,
    /// Channel width of the convolutional layers.
    pub hidden: usize,
    /// Latent width; must equal the quantizer's D.
    pub latent_dim: usize,
    /// Frames per latent step.
    pub downsample: usize,
}

impl AutoencoderConfig {
    /// Desk-scale shape for a `joints`-joint skeleton.
    pub fn desk(joints: usize) -> Self {
        Self {
            input_dim: pose_dim(joints),
            hidden: 64,
            latent_dim: 32,
            downsample: 4,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden == 0 || self.latent_dim == 0 || self.downsample == 0 {
            return Err(Error::invalid(format!(
                "autoencoder dimensions must be positive: {self:?}"
            )));
        }
        Ok(())
    }
}

const N_TENSORS: usize = 16;
const W1: usize = 0;
const B1: usize = 1;
const W2: usize = 2;
const B2: usize = 3;
const W3: usize = 4;
const B3: usize = 5;
const W4: usize = 6;
const B4: usize = 7;
const W5: usize = 8;
const B5: usize = 9;
const W6: usize = 10;
const B6: usize = 11;
const W7: usize = 12;
const B7: usize = 13;
const W8: usize = 14;
const B8: usize = 15;

fn shapes(c: &AutoencoderConfig) -> [(usize, usize); N_TENSORS] {
    let (din, h, d, k) = (c.input_dim, c.hidden, c.latent_dim, c.downsample);
    [
        (h, 3 * din),
        (1, h),
        (d, k * h),
        (1, d),
        (d, d),
        (1, d),
        (d, d),
        (1, d),
        (d, d),
        (1, d),
        (d, d),
        (1, d),
        (h, 3 * d),
        (1, h),
        (din, 3 * h),
        (1, din),
    ]
}

/// Number of scalar parameters for a configuration.
pub fn parameter_count(config: &AutoencoderConfig) -> usize {
    shapes(config).iter().map(|(r, c)| r * c).sum()
}

/// How the quantized latent fed to the decoder is obtained.
pub enum Quantization<'a> {
    /// Run the stack on the encoder output.
    Stack(&'a crate::rvq::ResidualQuantizer),
    /// Reuse fixed code vectors: `selected[l]` per level and a decoder input of
    /// `z + offset`. The loss is then smooth in the parameters.
    Frozen {
        selected: &'a [Vec<f64>],
        offset: &'a Array2<f64>,
    },
}

/// Loss, parameter gradient and encoder-output gradient for one item.
#[derive(Debug, Clone)]
pub struct ItemGradient {
    pub losses: LossBreakdown,
    pub grad: Vec<f64>,
    /// `∂loss/∂z` for the encoder output `z`, `T × D`.
    pub latent_grad: Array2<f64>,
    pub quantization: QuantizeResult,
    /// Encoder output.
    pub latent: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemporalAutoencoder {
    config: AutoencoderConfig,
    offsets: [usize; N_TENSORS + 1],
    params: Vec<f64>,
    norm_mean: Vec<f64>,
    norm_std: Vec<f64>,
}

struct EncoderCache {
    c1: Array2<f64>,
    h1: Array2<f64>,
    r2: Array2<f64>,
    h2: Array2<f64>,
    g3: Array2<f64>,
    a3: Array2<f64>,
    z: Array2<f64>,
}

struct DecoderCache {
    zq: Array2<f64>,
    g5: Array2<f64>,
    a5: Array2<f64>,
    c7: Array2<f64>,
    h7: Array2<f64>,
    c8: Array2<f64>,
    y: Array2<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn silu(x: f64) -> f64 {
    x * sigmoid(x)
}

fn silu_grad(x: f64) -> f64 {
    let s = sigmoid(x);
    s * (1.0 + x * (1.0 - s))
}

/// Rows `[x_{t-1}, x_t, x_{t+1}]`, zero outside the sequence.
fn im2col3(x: &Array2<f64>) -> Array2<f64> {
    let (n, c) = x.dim();
    let mut out = Array2::zeros((n, 3 * c));
    for t in 0..n {
        if t > 0 {
            out.slice_mut(s![t, 0..c]).assign(&x.row(t - 1));
        }
        out.slice_mut(s![t, c..2 * c]).assign(&x.row(t));
        if t + 1 < n {
            out.slice_mut(s![t, 2 * c..3 * c]).assign(&x.row(t + 1));
        }
    }
    out
}

/// Adjoint of [`im2col3`].
fn col2im3(dc: &Array2<f64>, c: usize) -> Array2<f64> {
    let n = dc.nrows();
    let mut out = Array2::zeros((n, c));
    for t in 0..n {
        let mut row = out.row_mut(t);
        row += &dc.slice(s![t, c..2 * c]);
        if t + 1 < n {
            row += &dc.slice(s![t + 1, 0..c]);
        }
        if t > 0 {
            row += &dc.slice(s![t - 1, 2 * c..3 * c]);
        }
    }
    out
}

fn reshape(a: Array2<f64>, rows: usize, cols: usize) -> Array2<f64> {
    let a = a.as_standard_layout().into_owned();
    a.into_shape_with_order((rows, cols))
        .expect("element count preserved")
}

impl TemporalAutoencoder {
    /// Random initialization: weights ~ N(0, 1/fan_in), residual output layers
    /// scaled by 0.1, biases zero. Normalization starts as the identity.
    pub fn new<R: Rng + ?Sized>(config: AutoencoderConfig, rng: &mut R) -> Result<Self> {
        let mut ae = Self::zeros(config)?;
        let sh = shapes(&config);
        for (i, &(rows, cols)) in sh.iter().enumerate() {
            if rows == 1 {
                continue;
            }
            let scale = if i == W4 || i == W6 { 0.1 } else { 1.0 };
            let normal = Normal::new(0.0, scale / (cols as f64).sqrt()).expect("positive std");
            for p in &mut ae.params[ae.offsets[i]..ae.offsets[i + 1]] {
                *p = to_storage(normal.sample(rng));
            }
        }
        Ok(ae)
    }

    /// All parameters zero; identity normalization.
    pub fn zeros(config: AutoencoderConfig) -> Result<Self> {
        config.validate()?;
        let mut offsets = [0; N_TENSORS + 1];
        for (i, (r, c)) in shapes(&config).iter().enumerate() {
            offsets[i + 1] = offsets[i] + r * c;
        }
        Ok(Self {
            config,
            params: vec![0.0; offsets[N_TENSORS]],
            offsets,
            norm_mean: vec![0.0; config.input_dim],
            norm_std: vec![1.0; config.input_dim],
        })
    }

    pub(crate) fn from_parts(
        config: AutoencoderConfig,
        params: Vec<f64>,
        norm_mean: Vec<f64>,
        norm_std: Vec<f64>,
    ) -> Result<Self> {
        let mut ae = Self::zeros(config)?;
        if params.len() != ae.params.len()
            || norm_mean.len() != config.input_dim
            || norm_std.len() != config.input_dim
        {
            return Err(Error::Shape(
                "autoencoder parts do not match its configuration".into(),
            ));
        }
        ae.params = params;
        ae.norm_mean = norm_mean;
        ae.norm_std = norm_std;
        Ok(ae)
    }

    pub fn config(&self) -> &AutoencoderConfig {
        &self.config
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Replaces all parameters; values are rounded to `f32`.
    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(Error::Shape(format!(
                "{} parameters, expected {}",
                params.len(),
                self.params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("autoencoder parameter".into()));
        }
        for (d, s) in self.params.iter_mut().zip(params) {
            *d = to_storage(*s);
        }
        Ok(())
    }

    pub fn norm_mean(&self) -> &[f64] {
        &self.norm_mean
    }

    pub fn norm_std(&self) -> &[f64] {
        &self.norm_std
    }

    /// Sets per-feature mean and standard deviation from training sequences.
    ///
    /// The first four features (root velocities and height) get their standard
    /// deviation divided by `root_weight`, which scales up their share of the
    /// reconstruction loss. Deviations are floored at `1e-3`.
    pub fn fit_normalization(
        &mut self,
        sequences: &[MotionSequence],
        root_weight: f64,
    ) -> Result<()> {
        let din = self.config.input_dim;
        if !(root_weight > 0.0 && root_weight.is_finite()) {
            return Err(Error::invalid(format!(
                "root feature weight {root_weight} must be positive"
            )));
        }
        let mut n = 0usize;
        let mut sum = vec![0.0; din];
        let mut sq = vec![0.0; din];
        for seq in sequences {
            if seq.joint_count() * 12 + 8 != din {
                return Err(Error::Shape(format!(
                    "{}-joint sequence but model expects feature width {din}",
                    seq.joint_count()
                )));
            }
            for row in seq.to_feature_rows().chunks_exact(din) {
                n += 1;
                for (i, v) in row.iter().enumerate() {
                    sum[i] += v;
                    sq[i] += v * v;
                }
            }
        }
        if n == 0 {
            return Err(Error::invalid("normalization needs at least one frame"));
        }
        for i in 0..din {
            let mean = sum[i] / n as f64;
            let var = (sq[i] / n as f64 - mean * mean).max(0.0);
            let mut std = var.sqrt().max(1e-3);
            if i < 4 {
                std /= root_weight;
            }
            self.norm_mean[i] = to_storage(mean);
            self.norm_std[i] = to_storage(std);
        }
        Ok(())
    }

    /// Normalized feature matrix, padded by repeating the last frame up to a
    /// multiple of the downsample factor.
    pub fn prepare(&self, seq: &MotionSequence) -> Result<Array2<f64>> {
        let din = self.config.input_dim;
        if seq.joint_count() * 12 + 8 != din {
            return Err(Error::Shape(format!(
                "{}-joint sequence but model expects feature width {din}",
                seq.joint_count()
            )));
        }
        let flat = seq.to_feature_rows();
        let rows: Vec<&[f64]> = flat.chunks_exact(din).collect();
        let f = rows.len();
        let padded = f.div_ceil(self.config.downsample) * self.config.downsample;
        let mut x = Array2::zeros((padded, din));
        for t in 0..padded {
            let src = rows[t.min(f - 1)];
            for i in 0..din {
                x[[t, i]] = (src[i] - self.norm_mean[i]) / self.norm_std[i];
            }
        }
        Ok(x)
    }

    /// Undoes the normalization of decoder output; row-major `F × D_in`.
    pub fn denormalize(&self, y: &Array2<f64>) -> Vec<f64> {
        let din = self.config.input_dim;
        y.as_standard_layout()
            .iter()
            .enumerate()
            .map(|(k, v)| v * self.norm_std[k % din] + self.norm_mean[k % din])
            .collect()
    }

    fn tensor(&self, i: usize) -> ArrayView2<'_, f64> {
        let (r, c) = shapes(&self.config)[i];
        ArrayView2::from_shape((r, c), &self.params[self.offsets[i]..self.offsets[i + 1]])
            .expect("layout matches shape")
    }

    fn bias(&self, i: usize) -> ndarray::ArrayView1<'_, f64> {
        self.tensor(i).index_axis_move(Axis(0), 0)
    }

    fn linear(&self, x: &Array2<f64>, w: usize, b: usize) -> Array2<f64> {
        x.dot(&self.tensor(w).t()) + self.bias(b)
    }

    fn encoder_forward(&self, x: &Array2<f64>) -> Result<EncoderCache> {
        let (f, din) = x.dim();
        let k = self.config.downsample;
        if din != self.config.input_dim {
            return Err(Error::Shape(format!(
                "input width {din}, expected {}",
                self.config.input_dim
            )));
        }
        if f == 0 || f % k != 0 {
            return Err(Error::Shape(format!(
                "{f} frames is not a positive multiple of {k}"
            )));
        }
        let c1 = im2col3(x);
        let h1 = self.linear(&c1, W1, B1);
        let a1 = h1.mapv(silu);
        let r2 = reshape(a1, f / k, k * self.config.hidden);
        let h2 = self.linear(&r2, W2, B2);
        let g3 = self.linear(&h2, W3, B3);
        let a3 = g3.mapv(silu);
        let z = &h2 + &self.linear(&a3, W4, B4);
        Ok(EncoderCache {
            c1,
            h1,
            r2,
            h2,
            g3,
            a3,
            z,
        })
    }

    fn decoder_forward(&self, zq: Array2<f64>) -> DecoderCache {
        let k = self.config.downsample;
        let g5 = self.linear(&zq, W5, B5);
        let a5 = g5.mapv(silu);
        let u = &zq + &self.linear(&a5, W6, B6);
        let (t, d) = u.dim();
        let mut up = Array2::zeros((t * k, d));
        for (i, row) in u.rows().into_iter().enumerate() {
            for j in 0..k {
                up.row_mut(i * k + j).assign(&row);
            }
        }
        let c7 = im2col3(&up);
        let h7 = self.linear(&c7, W7, B7);
        let a7 = h7.mapv(silu);
        let c8 = im2col3(&a7);
        let y = self.linear(&c8, W8, B8);
        DecoderCache {
            zq,
            g5,
            a5,
            c7,
            h7,
            c8,
            y,
        }
    }

    /// Latent `T × D` for a normalized, padded `F × D_in` matrix.
    pub fn encode(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        Ok(self.encoder_forward(x)?.z)
    }

    /// Normalized `(T·d) × D_in` reconstruction of a `T × D` latent.
    pub fn decode(&self, latent: &Array2<f64>) -> Result<Array2<f64>> {
        if latent.ncols() != self.config.latent_dim || latent.nrows() == 0 {
            return Err(Error::Shape(format!(
                "latent {:?}, expected T x {}",
                latent.dim(),
                self.config.latent_dim
            )));
        }
        Ok(self.decoder_forward(latent.clone()).y)
    }

    fn accumulate(&self, grad: &mut [f64], i: usize, g: &Array2<f64>) {
        let dst = &mut grad[self.offsets[i]..self.offsets[i + 1]];
        debug_assert_eq!(dst.len(), g.len());
        for (d, v) in dst.iter_mut().zip(g.iter()) {
            *d += v;
        }
    }

    fn accumulate_bias(&self, grad: &mut [f64], i: usize, g: &Array2<f64>) {
        let col: Array1<f64> = g.sum_axis(Axis(0));
        let dst = &mut grad[self.offsets[i]..self.offsets[i + 1]];
        for (d, v) in dst.iter_mut().zip(col.iter()) {
            *d += v;
        }
    }

    /// Forward and backward pass on one normalized item.
    ///
    /// The reconstruction term flows through the decoder; the commitment term
    /// `β·Σ_l mean((e_l - q_l)²)` flows into the encoder with `q_l` held fixed,
    /// and the quantizer is bypassed by the straight-through estimator. The
    /// orthogonality term has no parameter dependence and is left at zero.
    pub fn loss_and_grad(
        &self,
        x: &Array2<f64>,
        quantization: Quantization<'_>,
        commitment: f64,
        weights: &LossWeights,
    ) -> Result<ItemGradient> {
        let enc = self.encoder_forward(x)?;
        let z = &enc.z;
        let (t, d) = z.dim();
        let zs = z.as_standard_layout();
        let zs = zs.as_slice().expect("standard layout");

        let (selected, zq, indices): (Vec<Vec<f64>>, Array2<f64>, Vec<Vec<usize>>) =
            match quantization {
                Quantization::Stack(q) => {
                    if q.dim() != d {
                        return Err(Error::Shape(format!(
                            "latent width {d}, quantizer D={}",
                            q.dim()
                        )));
                    }
                    let r = q.quantize(zs)?;
                    let zq = Array2::from_shape_vec((t, d), r.quantized.clone()).expect("T x D");
                    (r.selected, zq, r.indices)
                }
                Quantization::Frozen { selected, offset } => {
                    if selected.iter().any(|s| s.len() != t * d) || offset.dim() != (t, d) {
                        return Err(Error::Shape("frozen codes do not match the latent".into()));
                    }
                    (
                        selected.to_vec(),
                        z + offset,
                        vec![Vec::new(); selected.len()],
                    )
                }
            };

        // residual recursion with fixed code vectors
        let mut residuals = Vec::with_capacity(selected.len());
        let mut e = zs.to_vec();
        let mut commit_grad = vec![0.0; t * d];
        let mut gap = 0.0;
        let n_lat = (t * d) as f64;
        for q in &selected {
            for ((g, ev), qv) in commit_grad.iter_mut().zip(&e).zip(q) {
                *g += 2.0 * (ev - qv) / n_lat;
                gap += (ev - qv) * (ev - qv) / n_lat;
            }
            let next: Vec<f64> = e.iter().zip(q).map(|(a, b)| a - b).collect();
            residuals.push(std::mem::replace(&mut e, next));
        }
        let quantized_vec = zq
            .as_standard_layout()
            .as_slice()
            .expect("standard")
            .to_vec();

        let dec = self.decoder_forward(zq);
        let (f, din) = dec.y.dim();
        let n_out = (f * din) as f64;
        let mut rec = 0.0;
        let mut dy = Array2::zeros((f, din));
        for ((o, yv), xv) in dy.iter_mut().zip(dec.y.iter()).zip(x.iter()) {
            let diff = yv - xv;
            rec += smooth_l1(diff);
            *o = weights.rec * smooth_l1_grad(diff) / n_out;
        }
        rec /= n_out;

        let mut grad = vec![0.0; self.params.len()];
        let h = self.config.hidden;
        let k = self.config.downsample;

        // decoder
        self.accumulate(&mut grad, W8, &dy.t().dot(&dec.c8));
        self.accumulate_bias(&mut grad, B8, &dy);
        let da7 = col2im3(&dy.dot(&self.tensor(W8)), h);
        let dh7 = da7 * &dec.h7.mapv(silu_grad);
        self.accumulate(&mut grad, W7, &dh7.t().dot(&dec.c7));
        self.accumulate_bias(&mut grad, B7, &dh7);
        let dup = col2im3(&dh7.dot(&self.tensor(W7)), d);
        let mut du = Array2::zeros((t, d));
        for i in 0..t {
            let mut row = du.row_mut(i);
            for j in 0..k {
                row += &dup.row(i * k + j);
            }
        }
        self.accumulate(&mut grad, W6, &du.t().dot(&dec.a5));
        self.accumulate_bias(&mut grad, B6, &du);
        let dg5 = du.dot(&self.tensor(W6)) * &dec.g5.mapv(silu_grad);
        self.accumulate(&mut grad, W5, &dg5.t().dot(&dec.zq));
        self.accumulate_bias(&mut grad, B5, &dg5);
        let dzq = &du + &dg5.dot(&self.tensor(W5));

        // straight-through: ∂Z*/∂z = I
        let scale = weights.commit * commitment;
        let commit_grad = Array2::from_shape_vec((t, d), commit_grad).expect("T x D") * scale;
        let dz = &dzq + &commit_grad;

        // encoder
        self.accumulate(&mut grad, W4, &dz.t().dot(&enc.a3));
        self.accumulate_bias(&mut grad, B4, &dz);
        let dg3 = dz.dot(&self.tensor(W4)) * &enc.g3.mapv(silu_grad);
        self.accumulate(&mut grad, W3, &dg3.t().dot(&enc.h2));
        self.accumulate_bias(&mut grad, B3, &dg3);
        let dh2 = &dz + &dg3.dot(&self.tensor(W3));
        self.accumulate(&mut grad, W2, &dh2.t().dot(&enc.r2));
        self.accumulate_bias(&mut grad, B2, &dh2);
        let da1 = reshape(dh2.dot(&self.tensor(W2)), f, h);
        let dh1 = da1 * &enc.h1.mapv(silu_grad);
        self.accumulate(&mut grad, W1, &dh1.t().dot(&enc.c1));
        self.accumulate_bias(&mut grad, B1, &dh1);

        let commit = commitment * gap;
        let losses = LossBreakdown {
            rec,
            commit,
            codebook: gap,
            ortho: 0.0,
            total: weights.rec * rec + weights.commit * commit,
        };
        if !losses.is_finite() {
            return Err(Error::NonFinite(format!("training loss {losses:?}")));
        }
        Ok(ItemGradient {
            losses,
            grad,
            latent_grad: dz,
            quantization: QuantizeResult {
                indices,
                quantized: quantized_vec,
                residuals,
                selected,
                steps: t,
                dim: d,
            },
            latent: enc.z,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rvq::{Codebook, ResidualQuantizer};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small() -> AutoencoderConfig {
        AutoencoderConfig {
            input_dim: 5,
            hidden: 6,
            latent_dim: 3,
            downsample: 2,
        }
    }

    fn input(rng: &mut ChaCha8Rng, f: usize, din: usize) -> Array2<f64> {
        Array2::from_shape_fn((f, din), |_| rng.gen_range(-0.5..0.5))
    }

    fn stack(rng: &mut ChaCha8Rng, d: usize) -> ResidualQuantizer {
        let books = (0..2)
            .map(|_| {
                Codebook::from_entries((0..4 * d).map(|_| rng.gen_range(-0.5..0.5)).collect(), d)
                    .unwrap()
            })
            .collect();
        ResidualQuantizer::from_codebooks(books, 1.0).unwrap()
    }

    /// Loss of the frozen-code surrogate at the given parameters.
    fn surrogate(
        ae: &TemporalAutoencoder,
        params: &[f64],
        x: &Array2<f64>,
        sel: &[Vec<f64>],
        off: &Array2<f64>,
    ) -> f64 {
        let mut m = ae.clone();
        m.params.copy_from_slice(params);
        let q = Quantization::Frozen {
            selected: sel,
            offset: off,
        };
        m.loss_and_grad(x, q, 1.0, &LossWeights::default())
            .unwrap()
            .losses
            .total
    }

    #[test]
    fn parameter_gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ae = TemporalAutoencoder::new(small(), &mut rng).unwrap();
        let q = stack(&mut rng, 3);
        let x = input(&mut rng, 8, 5);
        let base = ae
            .loss_and_grad(&x, Quantization::Stack(&q), 1.0, &LossWeights::default())
            .unwrap();
        let sel = base.quantization.selected.clone();
        let zq =
            Array2::from_shape_vec(base.latent.dim(), base.quantization.quantized.clone()).unwrap();
        let off = &zq - &base.latent;
        let h = 1e-6;
        for i in 0..ae.params.len() {
            let mut p = ae.params.clone();
            p[i] += h;
            let up = surrogate(&ae, &p, &x, &sel, &off);
            p[i] -= 2.0 * h;
            let down = surrogate(&ae, &p, &x, &sel, &off);
            let fd = (up - down) / (2.0 * h);
            let an = base.grad[i];
            let tol = 1e-4 * an.abs().max(fd.abs()).max(1e-4);
            assert!(
                (fd - an).abs() <= tol,
                "param {i}: analytic {an}, numeric {fd}"
            );
        }
    }

    /// Loss as a function of the encoder output `z`, with `Z*` replaced by
    /// `z + off` and the code vectors `sel` held fixed.
    fn loss_of_latent(
        ae: &TemporalAutoencoder,
        x: &Array2<f64>,
        z: &Array2<f64>,
        sel: &[Vec<f64>],
        off: &Array2<f64>,
    ) -> f64 {
        let w = LossWeights::default();
        let y = ae.decoder_forward(z + off).y;
        let rec = y
            .iter()
            .zip(x.iter())
            .map(|(a, b)| smooth_l1(a - b))
            .sum::<f64>()
            / y.len() as f64;
        let mut e: Vec<f64> = z.iter().copied().collect();
        let mut gap = 0.0;
        for q in sel {
            gap += e.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / e.len() as f64;
            e = e.iter().zip(q).map(|(a, b)| a - b).collect();
        }
        w.rec * rec + w.commit * gap
    }

    #[test]
    fn straight_through_latent_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ae = TemporalAutoencoder::new(small(), &mut rng).unwrap();
        let q = stack(&mut rng, 3);
        let x = input(&mut rng, 8, 5);
        let g = ae
            .loss_and_grad(&x, Quantization::Stack(&q), 1.0, &LossWeights::default())
            .unwrap();
        let sel = g.quantization.selected.clone();
        let zq = Array2::from_shape_vec(g.latent.dim(), g.quantization.quantized.clone()).unwrap();
        let off = &zq - &g.latent;
        let f = |i: usize, h: f64| {
            let mut z = g.latent.clone();
            z.as_slice_mut().unwrap()[i] += h;
            loss_of_latent(&ae, &x, &z, &sel, &off)
        };
        let central = |i: usize, h: f64| (f(i, h) - f(i, -h)) / (2.0 * h);
        for i in 0..g.latent.len() {
            let h = 1e-3;
            // Richardson: cancels the h² term of the central difference
            let fd = (4.0 * central(i, h / 2.0) - central(i, h)) / 3.0;
            let an = g.latent_grad.as_slice().unwrap()[i];
            assert!(
                (fd - an).abs() < 1e-10,
                "latent {i}: analytic {an}, numeric {fd}"
            );
        }
    }

    #[test]
    fn zero_network_on_zero_input_has_zero_loss_and_gradient() {
        let ae = TemporalAutoencoder::zeros(small()).unwrap();
        let q = ResidualQuantizer::from_codebooks(vec![Codebook::zeros(2, 3)], 1.0).unwrap();
        let x = Array2::zeros((6, 5));
        let g = ae
            .loss_and_grad(&x, Quantization::Stack(&q), 1.0, &LossWeights::default())
            .unwrap();
        assert_eq!(g.losses.total, 0.0);
        assert!(g.grad.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn decode_preserves_frame_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ae = TemporalAutoencoder::new(small(), &mut rng).unwrap();
        let x = input(&mut rng, 10, 5);
        let z = ae.encode(&x).unwrap();
        assert_eq!(z.dim(), (5, 3));
        assert_eq!(ae.decode(&z).unwrap().dim(), (10, 5));
        assert!(ae.encode(&input(&mut rng, 7, 5)).is_err());
    }

    #[test]
    fn conv_adjoint_identity() {
        // <im2col(x), c> == <x, col2im(c)>
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = input(&mut rng, 5, 2);
        let c = input(&mut rng, 5, 6);
        let lhs: f64 = (im2col3(&x) * &c).sum();
        let rhs: f64 = (&x * &col2im3(&c, 2)).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }
}
