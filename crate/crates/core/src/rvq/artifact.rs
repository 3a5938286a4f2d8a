//! `RVQ1` tokenizer artifact. All integers and floats are little-endian.
//!
//! ```text
//! magic    "RVQ1"
//! version  u32 = 1
//! header   u32 L, u32 K, u32 D, u32 d, u32 D_in, u32 hidden,
//!          u8 shared, u8 initialized,
//!          f32 beta, f32 w_rec, f32 w_commit, f32 w_ortho
//! codebook (×1 if shared, else ×L)
//!          f32[K·D] entries, f32[K] ema_counts, f32[K·D] ema_sums,
//!          u32[K] usage, u32 steps_in_window
//! norm     f32[D_in] mean, f32[D_in] std
//! params   u64 n, f32[n] network parameters
//! ```

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::binio::{open_input, to_u32, Reader, Writer};
use crate::error::{Error, Result};
use crate::rvq::{
    parameter_count, AutoencoderConfig, Codebook, LossWeights, MotionTokenizer, ResidualQuantizer,
    TemporalAutoencoder,
};

pub const RVQ_MAGIC: &[u8; 4] = b"RVQ1";
pub const RVQ_VERSION: u32 = 1;

pub fn write_tokenizer<W: Write>(tok: &MotionTokenizer, out: W) -> Result<()> {
    let mut w = Writer::new(out);
    let q = &tok.quantizer;
    let c = tok.autoencoder.config();
    w.bytes(RVQ_MAGIC)?;
    w.u32(RVQ_VERSION)?;
    for (v, what) in [
        (q.levels(), "levels"),
        (q.codebook_size(), "codebook size"),
        (q.dim(), "latent width"),
        (c.downsample, "downsample"),
        (c.input_dim, "input width"),
        (c.hidden, "hidden width"),
    ] {
        w.u32(to_u32(v, what)?)?;
    }
    w.u8(u8::from(q.is_shared()))?;
    w.u8(u8::from(q.is_initialized()))?;
    w.f32s(&[
        q.commitment(),
        tok.weights.rec,
        tok.weights.commit,
        tok.weights.ortho,
    ])?;
    for book in q.books() {
        w.f32s(book.entries())?;
        w.f32s(book.ema_counts())?;
        w.f32s(book.ema_sums())?;
        for &u in book.usage() {
            w.u32(u32::try_from(u).unwrap_or(u32::MAX))?;
        }
        w.u32(book.steps_in_window())?;
    }
    w.f32s(tok.autoencoder.norm_mean())?;
    w.f32s(tok.autoencoder.norm_std())?;
    w.u64(tok.autoencoder.params().len() as u64)?;
    w.f32s(tok.autoencoder.params())?;
    w.into_inner().flush()?;
    Ok(())
}

pub fn read_tokenizer<R: Read>(input: R) -> Result<MotionTokenizer> {
    let mut r = Reader::new(input);
    r.magic(RVQ_MAGIC)?;
    r.enter("version");
    let version = r.u32()?;
    if version != RVQ_VERSION {
        return Err(Error::Version {
            kind: "RVQ",
            found: version,
            expected: RVQ_VERSION,
        });
    }
    r.enter("header");
    let mut dims = [0usize; 6];
    for d in &mut dims {
        *d = r.u32()? as usize;
    }
    let [levels, k, dim, downsample, input_dim, hidden] = dims;
    if dims.contains(&0) {
        return Err(r.fail(format!("zero dimension in {dims:?}")));
    }
    let flag = |r: &mut Reader<R>| -> Result<bool> {
        match r.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            b => Err(r.fail(format!("flag byte {b}"))),
        }
    };
    let shared = flag(&mut r)?;
    let initialized = flag(&mut r)?;
    let beta = r.f32()?;
    if beta <= 0.0 {
        return Err(r.fail(format!("commitment weight {beta}")));
    }
    let weights = LossWeights {
        rec: r.f32()?,
        commit: r.f32()?,
        ortho: r.f32()?,
    };

    let n_books = if shared { 1 } else { levels };
    let mut books = Vec::with_capacity(n_books);
    for b in 0..n_books {
        r.enter(format!("codebook {b}"));
        let entries = r.f32s(k * dim)?;
        let counts = r.f32s(k)?;
        if counts.iter().any(|&c| c < 0.0) {
            return Err(r.fail("negative EMA count"));
        }
        let sums = r.f32s(k * dim)?;
        let usage = (0..k)
            .map(|_| r.u32().map(u64::from))
            .collect::<Result<Vec<_>>>()?;
        let window = r.u32()?;
        books.push(Codebook::from_parts(
            dim, entries, counts, sums, usage, window,
        ));
    }

    r.enter("normalization");
    let mean = r.f32s(input_dim)?;
    let std = r.f32s(input_dim)?;
    if std.iter().any(|&s| s <= 0.0) {
        return Err(r.fail("non-positive standard deviation"));
    }

    r.enter("parameters");
    let config = AutoencoderConfig {
        input_dim,
        hidden,
        latent_dim: dim,
        downsample,
    };
    let n = r.u64()? as usize;
    let expected = parameter_count(&config);
    if n != expected {
        return Err(r.fail(format!("{n} parameters, shape implies {expected}")));
    }
    let params = r.f32s(n)?;
    r.finish()?;

    let ae = TemporalAutoencoder::from_parts(config, params, mean, std)?;
    let q = ResidualQuantizer::from_parts(books, levels, shared, beta, initialized);
    let mut tok = MotionTokenizer::new(ae, q)?;
    tok.weights = weights;
    Ok(tok)
}

pub fn save_tokenizer(tok: &MotionTokenizer, path: &Path) -> Result<()> {
    write_tokenizer(tok, BufWriter::new(File::create(path)?))
}

pub fn load_tokenizer(path: &Path) -> Result<MotionTokenizer> {
    read_tokenizer(open_input(path, "tokenizer artifact")?)
}
