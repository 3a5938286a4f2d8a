use std::io::{BufRead, Write};
use std::ops::Range;

use crate::error::{Error, Result};
use crate::position::PositionGrid;
use crate::sequence::{parse_words, render_words, Vocabulary, Word};

/// One item of a pretraining corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PretrainSegment {
    Motion(Vec<u32>),
    Audio(Vec<u32>),
}

/// A rendered pretraining stream; `skipped` counts empty segments left out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PretrainStream {
    pub words: Vec<Word>,
    pub skipped: usize,
}

/// Renders segments in order as delimited blocks.
pub fn build_pretrain_stream(segments: &[PretrainSegment]) -> Result<PretrainStream> {
    if segments.is_empty() {
        return Err(Error::invalid("no pretraining segments"));
    }
    let mut words = Vec::new();
    let mut skipped = 0;
    for seg in segments {
        match seg {
            PretrainSegment::Motion(ids) if !ids.is_empty() => push_motion_block(&mut words, ids),
            PretrainSegment::Audio(ids) if !ids.is_empty() => push_audio_block(&mut words, ids),
            _ => skipped += 1,
        }
    }
    Ok(PretrainStream { words, skipped })
}

fn push_motion_block(words: &mut Vec<Word>, ids: &[u32]) {
    words.push(Word::Bom);
    words.extend(ids.iter().map(|&k| Word::Motion(k)));
    words.push(Word::Eom);
}

fn push_audio_block(words: &mut Vec<Word>, ids: &[u32]) {
    words.push(Word::Boa);
    words.extend(ids.iter().map(|&k| Word::Music(k)));
    words.push(Word::Eoa);
}

/// Role of a contiguous run of words in a training example.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpanKind {
    /// `<boa> … <eoa>`.
    Audio,
    /// All N leading Pos words, or the `<n_N>` word.
    Prompt,
    /// A dancer's own Pos word or `<c_i>`.
    DancerHeader,
    /// `<bom> … <eom>`.
    Motion,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Span {
    pub kind: SpanKind,
    /// 0-based dancer index for header and motion spans.
    pub dancer: Option<usize>,
    pub range: Range<usize>,
}

/// One dancer's input to an SFT example.
#[derive(Debug, Clone, PartialEq)]
pub struct DancerTrack {
    /// Initial root position (x, z) in meters.
    pub start: [f64; 2],
    /// Flattened motion ids.
    pub motion: Vec<u32>,
}

/// A fine-tuning example: words, the loss mask, and its layout.
///
/// The mask is true exactly on motion words; spans partition the sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingExample {
    pub words: Vec<Word>,
    pub loss_mask: Vec<bool>,
    pub dancer_count: usize,
    pub with_position: bool,
    pub spans: Vec<Span>,
}

/// What precedes the dancers' blocks: every dancer's Pos word, or `<n_N>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DancerPrompt {
    /// Position ids, one per dancer.
    Positions(Vec<u32>),
    /// Dancer count only.
    Count(u32),
}

impl DancerPrompt {
    pub fn dancer_count(&self) -> usize {
        match self {
            DancerPrompt::Positions(p) => p.len(),
            DancerPrompt::Count(n) => *n as usize,
        }
    }

    fn push_prompt(&self, words: &mut Vec<Word>) {
        match self {
            DancerPrompt::Positions(p) => words.extend(p.iter().map(|&k| Word::Pos(k))),
            DancerPrompt::Count(n) => words.push(Word::DancerCount(*n)),
        }
    }

    /// Header word of a 0-based dancer.
    pub fn header(&self, dancer: usize) -> Word {
        match self {
            DancerPrompt::Positions(p) => Word::Pos(p[dancer]),
            DancerPrompt::Count(_) => Word::Dancer(dancer as u32 + 1),
        }
    }
}

fn check_prompt(prompt: &DancerPrompt) -> Result<()> {
    if prompt.dancer_count() == 0 {
        return Err(Error::invalid("an example needs at least one dancer"));
    }
    Ok(())
}

/// The words that precede dancer `prior.len()`'s first motion word: audio,
/// prompt, earlier dancers' headers and blocks, then its own header and `<bom>`.
pub fn sft_context(audio: &[u32], prompt: &DancerPrompt, prior: &[Vec<u32>]) -> Result<Vec<Word>> {
    check_prompt(prompt)?;
    let i = prior.len();
    if i >= prompt.dancer_count() {
        return Err(Error::OutOfRange(format!(
            "dancer {} of {}",
            i + 1,
            prompt.dancer_count()
        )));
    }
    let mut words = Vec::new();
    push_audio_block(&mut words, audio);
    prompt.push_prompt(&mut words);
    for (j, block) in prior.iter().enumerate() {
        words.push(prompt.header(j));
        push_motion_block(&mut words, block);
    }
    words.push(prompt.header(i));
    words.push(Word::Bom);
    Ok(words)
}

/// Builds the SFT layout.
///
/// With positions: `[audio][Pos_1 … Pos_N]` then per dancer `[Pos_i][motion_i]`.
/// Without: `[audio][<n_N>]` then per dancer `[<c_i>][motion_i]`.
pub fn build_sft_example(
    audio: &[u32],
    dancers: &[DancerTrack],
    grid: &PositionGrid,
    with_position: bool,
) -> Result<TrainingExample> {
    let Some(first) = dancers.first() else {
        return Err(Error::invalid("an example needs at least one dancer"));
    };
    let len = first.motion.len();
    if let Some((i, d)) = dancers
        .iter()
        .enumerate()
        .find(|(_, d)| d.motion.len() != len)
    {
        return Err(Error::Shape(format!(
            "dancer {} has {} motion ids, dancer 1 has {len}",
            i + 1,
            d.motion.len()
        )));
    }
    let prompt = if with_position {
        DancerPrompt::Positions(
            dancers
                .iter()
                .map(|d| grid.position_token(d.start[0], d.start[1]).map(|t| t.0))
                .collect::<Result<_>>()?,
        )
    } else {
        DancerPrompt::Count(dancers.len() as u32)
    };
    let mut words = Vec::new();
    push_audio_block(&mut words, audio);
    prompt.push_prompt(&mut words);
    for (i, d) in dancers.iter().enumerate() {
        words.push(prompt.header(i));
        push_motion_block(&mut words, &d.motion);
    }
    TrainingExample::from_words(words)
}

impl TrainingExample {
    /// Recovers layout and mask from a word sequence, validating its shape.
    pub fn from_words(words: Vec<Word>) -> Result<Self> {
        let bad =
            |at: usize, why: &str| Error::format("example layout", format!("word {at}: {why}"));
        let mut spans = Vec::new();
        let mut i = 0;
        if words.first() != Some(&Word::Boa) {
            return Err(bad(0, "expected <boa>"));
        }
        while i + 1 < words.len() && matches!(words[i + 1], Word::Music(_)) {
            i += 1;
        }
        i += 1;
        if words.get(i) != Some(&Word::Eoa) {
            return Err(bad(i, "expected <eoa>"));
        }
        i += 1;
        spans.push(Span {
            kind: SpanKind::Audio,
            dancer: None,
            range: 0..i,
        });

        let with_position = matches!(words.get(i), Some(Word::Pos(_)));
        let dancer_count = if with_position {
            // N prompt words plus dancer 1's header precede the first <bom>
            let run = words[i..]
                .iter()
                .take_while(|w| matches!(w, Word::Pos(_)))
                .count();
            if run < 2 {
                return Err(bad(i, "position prompt needs N words plus a dancer header"));
            }
            run - 1
        } else {
            match words.get(i) {
                Some(&Word::DancerCount(n)) => n as usize,
                _ => return Err(bad(i, "expected position words or <n_N>")),
            }
        };
        let prompt_len = if with_position { dancer_count } else { 1 };
        spans.push(Span {
            kind: SpanKind::Prompt,
            dancer: None,
            range: i..i + prompt_len,
        });
        i += prompt_len;

        let mut motion_len = None;
        for d in 0..dancer_count {
            let header_ok = match words.get(i) {
                Some(&w @ Word::Pos(_)) => with_position && w == words[spans[1].range.start + d],
                Some(&Word::Dancer(c)) => !with_position && c as usize == d + 1,
                _ => false,
            };
            if !header_ok {
                return Err(bad(i, &format!("expected header of dancer {}", d + 1)));
            }
            spans.push(Span {
                kind: SpanKind::DancerHeader,
                dancer: Some(d),
                range: i..i + 1,
            });
            i += 1;
            let start = i;
            if words.get(i) != Some(&Word::Bom) {
                return Err(bad(i, "expected <bom>"));
            }
            i += 1;
            while matches!(words.get(i), Some(Word::Motion(_))) {
                i += 1;
            }
            if words.get(i) != Some(&Word::Eom) {
                return Err(bad(i, "expected <eom>"));
            }
            i += 1;
            let n = i - start - 2;
            if *motion_len.get_or_insert(n) != n {
                return Err(bad(start, "dancer motion lengths differ"));
            }
            spans.push(Span {
                kind: SpanKind::Motion,
                dancer: Some(d),
                range: start..i,
            });
        }
        if i != words.len() {
            return Err(bad(i, "trailing words after the last dancer"));
        }
        let loss_mask = words.iter().map(Word::is_motion).collect();
        Ok(Self {
            words,
            loss_mask,
            dancer_count,
            with_position,
            spans,
        })
    }

    /// Positions that carry loss, in order.
    pub fn masked_positions(&self) -> Vec<usize> {
        (0..self.words.len())
            .filter(|&j| self.loss_mask[j])
            .collect()
    }

    pub fn motion_token_count(&self) -> usize {
        self.loss_mask.iter().filter(|&&m| m).count()
    }

    /// The motion span of a 0-based dancer.
    pub fn motion_span(&self, dancer: usize) -> Option<&Span> {
        self.spans
            .iter()
            .find(|s| s.kind == SpanKind::Motion && s.dancer == Some(dancer))
    }

    pub fn mask_line(&self) -> String {
        let v: Vec<&str> = self
            .loss_mask
            .iter()
            .map(|&m| if m { "1" } else { "0" })
            .collect();
        v.join(" ")
    }
}

/// `−Σ log p(true word)` over masked positions. `weights[j]` holds
/// non-negative scores over vocabulary ids for the j-th masked position, with
/// `p = w / Σw`; each term is `ln Σw − ln w(true word)`.
///
/// Terms are summed with compensation, so a uniform predictor scores exactly
/// `k · ln V` over `k` masked words.
pub fn sft_loss(
    weights: &[Vec<f64>],
    example: &TrainingExample,
    vocab: &Vocabulary,
) -> Result<f64> {
    let positions = example.masked_positions();
    if weights.len() != positions.len() {
        return Err(Error::Shape(format!(
            "{} distributions for {} masked positions",
            weights.len(),
            positions.len()
        )));
    }
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for (w, &j) in weights.iter().zip(&positions) {
        if w.len() != vocab.size() {
            return Err(Error::Shape(format!(
                "{} weights, vocabulary has {}",
                w.len(),
                vocab.size()
            )));
        }
        if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("negative or non-finite weight"));
        }
        let total: f64 = w.iter().sum();
        if total <= 0.0 {
            return Err(Error::invalid("all weights are zero"));
        }
        let term = total.ln() - w[vocab.id(example.words[j])?].ln();
        // Neumaier
        let t = sum + term;
        comp += if sum.abs() >= term.abs() {
            (sum - t) + term
        } else {
            (term - t) + sum
        };
        sum = t;
    }
    Ok(sum + comp)
}

pub(crate) fn check_distribution(p: &[f64], size: usize) -> Result<()> {
    if p.len() != size {
        return Err(Error::Shape(format!(
            "distribution over {} words, vocabulary has {size}",
            p.len()
        )));
    }
    if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::invalid(
            "distribution has negative or non-finite mass",
        ));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-6 {
        return Err(Error::invalid(format!("distribution sums to {s}")));
    }
    Ok(())
}

/// Writes one example per line to `text` and its 0/1 mask to `mask`.
pub fn write_examples<W: Write, M: Write>(
    examples: &[TrainingExample],
    mut text: W,
    mut mask: M,
) -> Result<()> {
    for ex in examples {
        writeln!(text, "{}", render_words(&ex.words))?;
        writeln!(mask, "{}", ex.mask_line())?;
    }
    Ok(())
}

/// Reads examples and checks each against its mask line.
pub fn read_examples<R: BufRead, M: BufRead>(text: R, mask: M) -> Result<Vec<TrainingExample>> {
    let mut masks = mask.lines();
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let ex = TrainingExample::from_words(parse_words(&line)?)?;
        let m = masks.next().ok_or_else(|| {
            Error::format("mask file", format!("no mask for example {}", n + 1))
        })??;
        if m.split_whitespace().collect::<Vec<_>>().join(" ") != ex.mask_line() {
            return Err(Error::format(
                "mask file",
                format!("mask of example {} disagrees with its words", n + 1),
            ));
        }
        out.push(ex);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> PositionGrid {
        PositionGrid::new(2, -2.0, 2.0).unwrap()
    }

    fn two_dancers() -> Vec<DancerTrack> {
        vec![
            DancerTrack {
                start: [-1.5, -1.5],
                motion: vec![1],
            },
            DancerTrack {
                start: [1.5, 1.5],
                motion: vec![2],
            },
        ]
    }

    #[test]
    fn pretrain_blocks() {
        let s = build_pretrain_stream(&[PretrainSegment::Motion(vec![1, 2])]).unwrap();
        assert_eq!(
            render_words(&s.words),
            "<bom> <motion_id_1> <motion_id_2> <eom>"
        );
        let s = build_pretrain_stream(&[PretrainSegment::Audio(vec![3])]).unwrap();
        assert_eq!(render_words(&s.words), "<boa> <music_id_3> <eoa>");
        let s = build_pretrain_stream(&[
            PretrainSegment::Motion(vec![1]),
            PretrainSegment::Audio(vec![]),
            PretrainSegment::Audio(vec![2]),
        ])
        .unwrap();
        assert_eq!(
            render_words(&s.words),
            "<bom> <motion_id_1> <eom> <boa> <music_id_2> <eoa>"
        );
        assert_eq!(s.skipped, 1);
        assert!(build_pretrain_stream(&[]).is_err());
    }

    #[test]
    fn with_position_layout() {
        let g = grid();
        let ex = build_sft_example(&[9], &two_dancers(), &g, true).unwrap();
        let p1 = Word::Pos(g.position_token(-1.5, -1.5).unwrap().0);
        let p2 = Word::Pos(g.position_token(1.5, 1.5).unwrap().0);
        use Word::*;
        assert_eq!(
            ex.words,
            vec![
                Boa,
                Music(9),
                Eoa,
                p1,
                p2,
                p1,
                Bom,
                Motion(1),
                Eom,
                p2,
                Bom,
                Motion(2),
                Eom
            ]
        );
        assert_eq!(ex.masked_positions(), vec![7, 11]);
        assert_eq!(ex.dancer_count, 2);
        // dancer 2's block starts after every prompt word and dancer 1's block
        let m2 = ex.motion_span(1).unwrap();
        assert!(m2.range.start > ex.motion_span(0).unwrap().range.end - 1);
        assert!(m2.range.start > 4);
    }

    #[test]
    fn without_position_layout() {
        let ex = build_sft_example(&[9], &two_dancers(), &grid(), false).unwrap();
        assert_eq!(
            render_words(&ex.words),
            "<boa> <music_id_9> <eoa> <n_2> <c_1> <bom> <motion_id_1> <eom> <c_2> <bom> <motion_id_2> <eom>"
        );
        assert_eq!(ex.motion_token_count(), 2);
    }

    #[test]
    fn solo_example() {
        let d = &two_dancers()[..1];
        let ex = build_sft_example(&[9, 4], d, &grid(), true).unwrap();
        assert_eq!(ex.motion_token_count(), 1);
        assert_eq!(ex.dancer_count, 1);
    }

    #[test]
    fn unequal_lengths_rejected() {
        let mut d = two_dancers();
        d[1].motion.push(3);
        assert!(build_sft_example(&[9], &d, &grid(), true).is_err());
    }

    #[test]
    fn spans_partition_sequence() {
        let ex = build_sft_example(&[9, 8], &two_dancers(), &grid(), true).unwrap();
        let mut next = 0;
        for s in &ex.spans {
            assert_eq!(s.range.start, next);
            next = s.range.end;
        }
        assert_eq!(next, ex.words.len());
    }

    #[test]
    fn perfect_and_uniform_predictors() {
        let ex = build_sft_example(&[0], &two_dancers(), &grid(), true).unwrap();
        let vocab = Vocabulary::new(4, 1, 16, 2).unwrap();
        let v = vocab.size();
        let onehot: Vec<Vec<f64>> = ex
            .masked_positions()
            .iter()
            .map(|&j| {
                let mut p = vec![0.0; v];
                p[vocab.id(ex.words[j]).unwrap()] = 1.0;
                p
            })
            .collect();
        assert_eq!(sft_loss(&onehot, &ex, &vocab).unwrap(), 0.0);
        let uniform = vec![vec![1.0 / v as f64; v]; 2];
        let l = sft_loss(&uniform, &ex, &vocab).unwrap();
        assert!((l - 2.0 * (v as f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn hand_summed_three_tokens() {
        let d = vec![DancerTrack {
            start: [0.0, 0.0],
            motion: vec![0, 1, 1],
        }];
        let ex = build_sft_example(&[0], &d, &grid(), false).unwrap();
        let vocab = Vocabulary::new(2, 1, 0, 1).unwrap();
        let m0 = vocab.id(Word::Motion(0)).unwrap();
        let mk = |p0: f64| {
            let mut p = vec![0.0; vocab.size()];
            p[m0] = p0;
            p[m0 + 1] = 1.0 - p0;
            p
        };
        // true words 0, 1, 1 with p = 0.5, 0.75, 0.9
        let dists = vec![mk(0.5), mk(0.25), mk(0.1)];
        let expected = -(0.5f64.ln() + 0.75f64.ln() + 0.9f64.ln());
        assert!((sft_loss(&dists, &ex, &vocab).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn weights_are_normalized_and_checked() {
        let ex = build_sft_example(&[0], &two_dancers()[..1], &grid(), false).unwrap();
        let vocab = Vocabulary::new(4, 1, 0, 1).unwrap();
        let v = vocab.size();
        let k = ex.motion_token_count();
        let ones = vec![vec![1.0; v]; k];
        let l = sft_loss(&ones, &ex, &vocab).unwrap();
        assert_eq!(l, k as f64 * (v as f64).ln());
        let scaled = vec![vec![0.5 / v as f64; v]; k];
        assert!((sft_loss(&scaled, &ex, &vocab).unwrap() - l).abs() < 1e-12);
        assert!(sft_loss(&vec![vec![0.0; v]; k], &ex, &vocab).is_err());
        let mut neg = ones.clone();
        neg[0][0] = -1.0;
        assert!(sft_loss(&neg, &ex, &vocab).is_err());
    }

    #[test]
    fn additive_over_dancers() {
        let g = grid();
        let ex = build_sft_example(&[3], &two_dancers(), &g, true).unwrap();
        let vocab = Vocabulary::new(4, 4, 16, 2).unwrap();
        let v = vocab.size();
        let dists: Vec<Vec<f64>> = (0..2)
            .map(|k| {
                let mut p = vec![0.5 / (v - 1) as f64; v];
                p[k] = 0.5;
                p
            })
            .collect();
        let total = sft_loss(&dists, &ex, &vocab).unwrap();
        let per: f64 = ex
            .masked_positions()
            .iter()
            .zip(&dists)
            .map(|(&j, p)| -p[vocab.id(ex.words[j]).unwrap()].ln())
            .sum();
        assert!((total - per).abs() < 1e-12);
    }

    #[test]
    fn text_and_mask_round_trip() {
        let g = grid();
        let exs = vec![
            build_sft_example(&[9], &two_dancers(), &g, true).unwrap(),
            build_sft_example(&[1, 2], &two_dancers(), &g, false).unwrap(),
        ];
        let (mut t, mut m) = (Vec::new(), Vec::new());
        write_examples(&exs, &mut t, &mut m).unwrap();
        let back = read_examples(&t[..], &m[..]).unwrap();
        assert_eq!(back, exs);
        let wrong = String::from_utf8(m).unwrap().replacen('1', "0", 1);
        assert!(read_examples(&t[..], wrong.as_bytes()).is_err());
    }

    #[test]
    fn context_is_a_prefix_of_the_example() {
        let g = grid();
        for with_position in [true, false] {
            let ex = build_sft_example(&[9, 1], &two_dancers(), &g, with_position).unwrap();
            let prompt = if with_position {
                DancerPrompt::Positions(
                    two_dancers()
                        .iter()
                        .map(|d| g.position_token(d.start[0], d.start[1]).unwrap().0)
                        .collect(),
                )
            } else {
                DancerPrompt::Count(2)
            };
            let c0 = sft_context(&[9, 1], &prompt, &[]).unwrap();
            let c1 = sft_context(&[9, 1], &prompt, &[vec![1]]).unwrap();
            assert_eq!(c0[..], ex.words[..c0.len()]);
            assert_eq!(c1[..], ex.words[..c1.len()]);
            assert_eq!(c0.len(), ex.motion_span(0).unwrap().range.start + 1);
            assert_eq!(c1.len(), ex.motion_span(1).unwrap().range.start + 1);
            assert!(sft_context(&[9], &prompt, &[vec![1], vec![2]]).is_err());
        }
    }

    #[test]
    fn malformed_layouts_rejected() {
        for text in [
            "<bom> <eom>",
            "<boa> <eoa> <n_2> <c_1> <bom> <eom>",
            "<boa> <eoa> <Pos_id_1> <bom> <motion_id_1> <eom>",
            "<boa> <eoa> <n_1> <c_1> <bom> <motion_id_1> <eom> <eom>",
        ] {
            assert!(
                TrainingExample::from_words(parse_words(text).unwrap()).is_err(),
                "{text}"
            );
        }
    }
}
