//! Add-k smoothed n-gram model with back-off.
//!
//! A model may also be anchored on a set of words: each position is then
//! counted a second time under keys made of the most recent anchor word
//! before it followed by the usual suffix. Lookups try those keys first, so
//! the model keeps seeing a prompt word however far back it lies.
//!
//! `NGR1` artifact layout, little-endian:
//!
//! ```text
//! magic     "NGR1"
//! version   u32 = 1
//! header    u32 order, u64 smoothing (f64 bits),
//!           u32 motion, u32 music, u32 pos, u32 max_dancers
//! anchors   u32 count, u32 ids[count] (ascending)
//! tables    u64 count, then per context (sorted by length, then ids):
//!           u32 len, u32 ids[len], u64 total, u32 n, (u32 id, u64 count)[n]
//! anchored  same layout; ids[0] is the anchor word
//! ```

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::binio::{open_input, to_u32, Reader, Writer};
use crate::error::{Error, Result};
use crate::generation::Predictor;
use crate::sequence::{Vocabulary, Word};

pub const NGRAM_MAGIC: &[u8; 4] = b"NGR1";
pub const NGRAM_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Table {
    total: u64,
    counts: HashMap<u32, u64>,
}

/// Counts of next words per context of length `0..order` over word ids
/// `0..size`.
#[derive(Debug, Clone, PartialEq)]
pub struct NGramModel {
    order: usize,
    smoothing: f64,
    size: usize,
    tables: HashMap<Vec<u32>, Table>,
    anchors: BTreeSet<u32>,
    /// Keyed by `[anchor, suffix…]` with suffix length `1..order`.
    anchored: HashMap<Vec<u32>, Table>,
}

impl NGramModel {
    /// Counts every position of every stream; contexts never cross stream
    /// boundaries.
    pub fn train(corpus: &[Vec<usize>], size: usize, order: usize, smoothing: f64) -> Result<Self> {
        Self::train_anchored(corpus, size, order, smoothing, &[])
    }

    /// Like [`NGramModel::train`], additionally counting anchored contexts
    /// for the words in `anchors`.
    pub fn train_anchored(
        corpus: &[Vec<usize>],
        size: usize,
        order: usize,
        smoothing: f64,
        anchors: &[usize],
    ) -> Result<Self> {
        if order == 0 {
            return Err(Error::invalid("n-gram order must be at least 1"));
        }
        if size == 0 || size > u32::MAX as usize {
            return Err(Error::invalid(format!("vocabulary size {size}")));
        }
        if !(smoothing.is_finite() && smoothing >= 0.0) {
            return Err(Error::invalid(format!(
                "smoothing must be non-negative, got {smoothing}"
            )));
        }
        if corpus.iter().all(Vec::is_empty) {
            return Err(Error::invalid("empty training corpus"));
        }
        if let Some(&bad) = anchors.iter().find(|&&id| id >= size) {
            return Err(Error::OutOfRange(format!(
                "anchor id {bad} outside vocabulary of {size}"
            )));
        }
        let anchors: BTreeSet<u32> = anchors.iter().map(|&i| i as u32).collect();
        let mut tables: HashMap<Vec<u32>, Table> = HashMap::new();
        let mut anchored: HashMap<Vec<u32>, Table> = HashMap::new();
        let count = |map: &mut HashMap<Vec<u32>, Table>, key: Vec<u32>, next: u32| {
            let t = map.entry(key).or_default();
            t.total += 1;
            *t.counts.entry(next).or_default() += 1;
        };
        for stream in corpus {
            if let Some(&bad) = stream.iter().find(|&&id| id >= size) {
                return Err(Error::OutOfRange(format!(
                    "word id {bad} outside vocabulary of {size}"
                )));
            }
            let ids: Vec<u32> = stream.iter().map(|&i| i as u32).collect();
            let mut anchor = None;
            for j in 0..ids.len() {
                for c in 0..order.min(j + 1) {
                    count(&mut tables, ids[j - c..j].to_vec(), ids[j]);
                }
                if let Some(a) = anchor {
                    for c in 1..order.min(j + 1) {
                        let mut key = vec![a];
                        key.extend_from_slice(&ids[j - c..j]);
                        count(&mut anchored, key, ids[j]);
                    }
                }
                if anchors.contains(&ids[j]) {
                    anchor = Some(ids[j]);
                }
            }
        }
        Ok(Self {
            order,
            smoothing,
            size,
            tables,
            anchors,
            anchored,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Number of distinct contexts, including the empty one and anchored
    /// ones.
    pub fn context_count(&self) -> usize {
        self.tables.len() + self.anchored.len()
    }

    pub fn is_anchored(&self) -> bool {
        !self.anchors.is_empty()
    }

    /// The table used for `context`: with an anchor word in the context, the
    /// longest seen anchored key; otherwise the longest seen suffix of length
    /// `1..order`, or the unigram table when `order == 1`.
    fn table_for(&self, context: &[usize]) -> Option<&Table> {
        if self.order == 1 {
            return self.tables.get(&Vec::new());
        }
        let longest = (self.order - 1).min(context.len());
        let suffix = |c: usize| context[context.len() - c..].iter().map(|&i| i as u32);
        let anchor = context
            .iter()
            .rev()
            .map(|&i| i as u32)
            .find(|i| self.anchors.contains(i));
        if let Some(a) = anchor {
            let hit = (1..=longest).rev().find_map(|c| {
                let key: Vec<u32> = std::iter::once(a).chain(suffix(c)).collect();
                self.anchored.get(&key)
            });
            if hit.is_some() {
                return hit;
            }
        }
        (1..=longest)
            .rev()
            .find_map(|c| self.tables.get(&suffix(c).collect::<Vec<u32>>()))
    }

    /// Next-word distribution; uniform when no suffix of `context` was seen.
    pub fn distribution(&self, context: &[usize]) -> Vec<f64> {
        let v = self.size;
        let Some(t) = self.table_for(context) else {
            return vec![1.0 / v as f64; v];
        };
        let denom = t.total as f64 + self.smoothing * v as f64;
        let mut p = vec![self.smoothing / denom; v];
        for (&id, &c) in &t.counts {
            p[id as usize] = (c as f64 + self.smoothing) / denom;
        }
        p
    }
}

/// An [`NGramModel`] over the ids of a [`Vocabulary`].
#[derive(Debug, Clone, PartialEq)]
pub struct NGramPredictor {
    pub vocab: Vocabulary,
    pub model: NGramModel,
}

impl NGramPredictor {
    pub fn train(
        corpus: &[Vec<usize>],
        vocab: Vocabulary,
        order: usize,
        smoothing: f64,
    ) -> Result<Self> {
        let model = NGramModel::train(corpus, vocab.size(), order, smoothing)?;
        Ok(Self { vocab, model })
    }

    /// Anchored on the per-dancer header words (`<Pos_id_K>` and `<c_i>`),
    /// so motion is predicted with the current dancer's prompt in view.
    pub fn train_prompt_anchored(
        corpus: &[Vec<usize>],
        vocab: Vocabulary,
        order: usize,
        smoothing: f64,
    ) -> Result<Self> {
        let model = NGramModel::train_anchored(
            corpus,
            vocab.size(),
            order,
            smoothing,
            &header_ids(&vocab),
        )?;
        Ok(Self { vocab, model })
    }
}

fn header_ids(vocab: &Vocabulary) -> Vec<usize> {
    (1..=vocab.max_dancers)
        .map(Word::Dancer)
        .chain((0..vocab.pos).map(Word::Pos))
        .map(|w| vocab.id(w).expect("in range"))
        .collect()
}

impl Predictor for NGramPredictor {
    fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    fn distribution(&self, context: &[usize]) -> Result<Vec<f64>> {
        Ok(self.model.distribution(context))
    }
}

pub fn write_ngram<W: Write>(pred: &NGramPredictor, out: W) -> Result<()> {
    let model = &pred.model;
    let mut w = Writer::new(out);
    w.bytes(NGRAM_MAGIC)?;
    w.u32(NGRAM_VERSION)?;
    w.u32(to_u32(model.order, "order")?)?;
    w.u64(model.smoothing.to_bits())?;
    let v = pred.vocab;
    for x in [v.motion, v.music, v.pos, v.max_dancers] {
        w.u32(x)?;
    }
    w.u32(to_u32(model.anchors.len(), "anchor count")?)?;
    for &a in &model.anchors {
        w.u32(a)?;
    }
    write_tables(&mut w, &model.tables)?;
    write_tables(&mut w, &model.anchored)?;
    w.into_inner().flush()?;
    Ok(())
}

fn write_tables<W: Write>(w: &mut Writer<W>, tables: &HashMap<Vec<u32>, Table>) -> Result<()> {
    let mut keys: Vec<&Vec<u32>> = tables.keys().collect();
    keys.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    w.u64(keys.len() as u64)?;
    for key in keys {
        let t = &tables[key];
        w.u32(to_u32(key.len(), "context length")?)?;
        for &id in key {
            w.u32(id)?;
        }
        w.u64(t.total)?;
        let mut counts: Vec<(u32, u64)> = t.counts.iter().map(|(&a, &b)| (a, b)).collect();
        counts.sort_unstable();
        w.u32(to_u32(counts.len(), "table size")?)?;
        for (id, c) in counts {
            w.u32(id)?;
            w.u64(c)?;
        }
    }
    Ok(())
}

pub fn read_ngram<R: Read>(input: R) -> Result<NGramPredictor> {
    let mut r = Reader::new(input);
    r.magic(NGRAM_MAGIC)?;
    r.enter("version");
    let version = r.u32()?;
    if version != NGRAM_VERSION {
        return Err(Error::Version {
            kind: "NGR",
            found: version,
            expected: NGRAM_VERSION,
        });
    }
    r.enter("header");
    let order = r.u32()? as usize;
    let smoothing = f64::from_bits(r.u64()?);
    if order == 0 || !(smoothing.is_finite() && smoothing >= 0.0) {
        return Err(r.fail(format!("order {order}, smoothing {smoothing}")));
    }
    let vocab = Vocabulary::new(r.u32()?, r.u32()?, r.u32()?, r.u32()?)
        .map_err(|e| r.fail(e.to_string()))?;
    let v = vocab.size() as u32;
    r.enter("anchors");
    let n = r.u32()?;
    let mut anchors = BTreeSet::new();
    for _ in 0..n {
        let a = r.u32()?;
        if a >= v || anchors.last().is_some_and(|&prev| prev >= a) {
            return Err(r.fail(format!("anchor id {a} out of range or order")));
        }
        anchors.insert(a);
    }
    let tables = read_tables(&mut r, "table", v, 0..order)?;
    let anchored = read_tables(&mut r, "anchored table", v, 2..order + 1)?;
    if anchored.keys().any(|k| !anchors.contains(&k[0])) {
        return Err(r.fail("anchored context does not start with an anchor"));
    }
    r.finish()?;
    Ok(NGramPredictor {
        vocab,
        model: NGramModel {
            order,
            smoothing,
            size: vocab.size(),
            tables,
            anchors,
            anchored,
        },
    })
}

fn read_tables<R: Read>(
    r: &mut Reader<R>,
    name: &str,
    v: u32,
    lengths: std::ops::Range<usize>,
) -> Result<HashMap<Vec<u32>, Table>> {
    r.enter(format!("{name}s"));
    let n = r.u64()?;
    let mut tables = HashMap::new();
    for k in 0..n {
        r.enter(format!("{name} {k}"));
        let len = r.u32()? as usize;
        if !lengths.contains(&len) {
            return Err(r.fail(format!("context of {len} words, expected {lengths:?}")));
        }
        let key = (0..len).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        let total = r.u64()?;
        let m = r.u32()?;
        let mut counts = HashMap::new();
        let mut sum = 0u64;
        for _ in 0..m {
            let id = r.u32()?;
            let c = r.u64()?;
            if id >= v {
                return Err(r.fail(format!("word id {id} outside vocabulary of {v}")));
            }
            sum = sum.saturating_add(c);
            counts.insert(id, c);
        }
        if key.iter().any(|&id| id >= v) || sum != total {
            return Err(r.fail("inconsistent counts"));
        }
        tables.insert(key, Table { total, counts });
    }
    Ok(tables)
}

pub fn save_ngram(pred: &NGramPredictor, path: &Path) -> Result<()> {
    write_ngram(pred, BufWriter::new(File::create(path)?))
}

pub fn load_ngram(path: &Path) -> Result<NGramPredictor> {
    read_ngram(open_input(path, "n-gram predictor")?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: usize = 0;
    const B: usize = 1;

    #[test]
    fn bigram_maximum_likelihood() {
        let m = NGramModel::train(&[vec![A, B, A, B]], 2, 2, 0.0).unwrap();
        assert_eq!(m.distribution(&[A])[B], 1.0);
    }

    #[test]
    fn add_k_arithmetic() {
        let m = NGramModel::train(&[vec![A, B, A, B]], 2, 2, 1.0).unwrap();
        // (2 + 1) / (2 + 2)
        assert_eq!(m.distribution(&[A])[B], 0.75);
    }

    #[test]
    fn unseen_context_is_uniform() {
        let m = NGramModel::train(&[vec![A, A]], 5, 2, 0.5).unwrap();
        assert!(m.distribution(&[B]).iter().all(|&x| x == 0.2));
        assert!(m.distribution(&[]).iter().all(|&x| x == 0.2));
    }

    #[test]
    fn backs_off_to_shorter_context() {
        let m = NGramModel::train(&[vec![A, B, B, A]], 2, 3, 0.0).unwrap();
        assert_eq!(m.distribution(&[B, B])[A], 1.0);
        // (a, a) unseen, falls back to (a)
        assert_eq!(m.distribution(&[A, A])[B], 1.0);
    }

    #[test]
    fn unigram_order() {
        let m = NGramModel::train(&[vec![A, B, B, B]], 2, 1, 0.0).unwrap();
        assert_eq!(m.distribution(&[A]), vec![0.25, 0.75]);
    }

    #[test]
    fn distributions_normalized() {
        let m = NGramModel::train(&[vec![0, 3, 2, 3, 3, 1, 0]], 4, 3, 0.1).unwrap();
        for ctx in [vec![], vec![3], vec![3, 3], vec![2, 2], vec![1, 0, 3]] {
            assert!((m.distribution(&ctx).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(NGramModel::train(&[], 2, 2, 0.0).is_err());
        assert!(NGramModel::train(&[vec![]], 2, 2, 0.0).is_err());
        assert!(NGramModel::train(&[vec![A]], 2, 0, 0.0).is_err());
        assert!(NGramModel::train(&[vec![2]], 2, 2, 0.0).is_err());
    }

    #[test]
    fn anchor_stays_in_view() {
        // anchors 3 and 4 pick what follows `0`, however far back they are
        let corpus = vec![vec![3, 0, 1, 0, 1], vec![4, 0, 2, 0, 2]];
        let m = NGramModel::train_anchored(&corpus, 5, 2, 0.0, &[3, 4]).unwrap();
        assert_eq!(m.distribution(&[3, 0, 1, 0])[1], 1.0);
        assert_eq!(m.distribution(&[4, 0, 2, 0])[2], 1.0);
        let plain = NGramModel::train(&corpus, 5, 2, 0.0).unwrap();
        assert_eq!(plain.distribution(&[4, 0, 2, 0])[2], 0.5);
        // unseen anchored key falls back to the plain suffix
        assert_eq!(m.distribution(&[3, 2])[0], 1.0);
    }

    #[test]
    fn artifact_round_trip_and_corruption() {
        let vocab = Vocabulary::new(2, 1, 1, 1).unwrap();
        let p =
            NGramPredictor::train(&[vec![5, 6, 5, 5, 6], vec![6, 6, 0]], vocab, 3, 0.25).unwrap();
        let mut buf = Vec::new();
        write_ngram(&p, &mut buf).unwrap();
        assert_eq!(read_ngram(&buf[..]).unwrap(), p);
        let mut again = Vec::new();
        write_ngram(&read_ngram(&buf[..]).unwrap(), &mut again).unwrap();
        assert_eq!(again, buf);

        let mut bad = buf.clone();
        bad[0] ^= 1;
        assert!(read_ngram(&bad[..]).is_err());
        let mut bad = buf.clone();
        bad[4] = 2;
        assert!(matches!(read_ngram(&bad[..]), Err(Error::Version { .. })));
        let err = read_ngram(&buf[..buf.len() - 3]).unwrap_err().to_string();
        assert!(err.contains("table"), "{err}");

        let p = NGramPredictor::train_prompt_anchored(
            &[vec![5, 6, 5, 5, 6], vec![2, 6, 0]],
            vocab,
            3,
            0.25,
        )
        .unwrap();
        assert!(p.model.is_anchored());
        let mut buf = Vec::new();
        write_ngram(&p, &mut buf).unwrap();
        assert_eq!(read_ngram(&buf[..]).unwrap(), p);
    }
}
