use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::generation::{GenerationConfig, Placement, Predictor, Sampling};
use crate::motion::{recover_trajectory_from, MotionSequence, Vec3};
use crate::position::{PosToken, PositionGrid};
use crate::rvq::MotionTokenizer;
use crate::sequence::{check_distribution, sft_context, unflatten_motion_codes, DancerPrompt};

/// Splits a token stream into `per_segment`-sized chunks, padding the last by
/// repeating its final token.
pub fn segment_audio(tokens: &[u32], per_segment: usize) -> Result<Vec<Vec<u32>>> {
    if per_segment == 0 {
        return Err(Error::invalid("segments need at least one token"));
    }
    if tokens.is_empty() {
        return Err(Error::invalid("empty audio token stream"));
    }
    Ok(tokens
        .chunks(per_segment)
        .map(|c| {
            let mut seg = c.to_vec();
            seg.resize(per_segment, *c.last().expect("chunks are nonempty"));
            seg
        })
        .collect())
}

/// One dancer's request within a segment.
#[derive(Debug, Clone, Copy)]
pub struct SegmentRequest<'a> {
    pub audio: &'a [u32],
    pub prompt: &'a DancerPrompt,
    /// Blocks of the dancers before this one in the current segment.
    pub prior: &'a [Vec<u32>],
    /// Motion time steps to emit; each step is `levels` words.
    pub steps: usize,
    pub levels: usize,
}

/// A generated block with the length of the context that preceded it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentBlock {
    pub motion: Vec<u32>,
    pub context_len: usize,
}

/// Samples `steps · levels` motion words for dancer `prior.len()`.
///
/// Only motion ids of level `j mod L` are eligible at motion position `j`,
/// so every block unflattens into a valid code grid.
pub fn generate_segment<P: Predictor + ?Sized, R: Rng>(
    pred: &P,
    req: &SegmentRequest<'_>,
    sampling: &Sampling,
    rng: &mut R,
) -> Result<SegmentBlock> {
    sampling.validate()?;
    if req.steps == 0 || req.levels == 0 {
        return Err(Error::invalid(
            "a segment needs at least one step and one level",
        ));
    }
    let vocab = pred.vocabulary();
    let motion = vocab.motion_range();
    if !motion.len().is_multiple_of(req.levels) {
        return Err(Error::Shape(format!(
            "{} motion ids do not split into {} levels",
            motion.len(),
            req.levels
        )));
    }
    let k = motion.len() / req.levels;
    let context = sft_context(req.audio, req.prompt, req.prior)?;
    let mut ids = vocab.encode(&context)?;
    let context_len = ids.len();
    let n = req.steps * req.levels;
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let dist = pred.distribution(&ids)?;
        check_distribution(&dist, vocab.size())?;
        let base = motion.start + (j % req.levels) * k;
        let id = sampling.sample(&dist, base..base + k, rng)?;
        ids.push(id);
        out.push((id - motion.start) as u32);
    }
    Ok(SegmentBlock {
        motion: out,
        context_len,
    })
}

/// Root state handed from one segment to the next.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootState {
    pub position: [f64; 2],
    pub heading: f64,
}

/// Final-frame root state of a decoded segment that started at its
/// `initial_position` with `heading`, and the Pos token of that point.
pub fn propagate_position(
    grid: &PositionGrid,
    decoded: &MotionSequence,
    heading: f64,
) -> Result<(RootState, PosToken)> {
    let traj = recover_trajectory_from(decoded, decoded.initial_position, heading)?;
    let p = traj.last_position();
    let state = RootState {
        position: [p.x, p.z],
        heading: traj.last_heading(),
    };
    Ok((state, grid.position_token(p.x, p.z)?))
}

/// Ring of radius 1 m centred on the origin; a lone dancer stands at the origin.
pub fn auto_placement(n: usize) -> Vec<[f64; 2]> {
    if n == 1 {
        return vec![[0.0, 0.0]];
    }
    (0..n)
        .map(|i| {
            let a = std::f64::consts::TAU * i as f64 / n as f64;
            [a.cos(), a.sin()]
        })
        .collect()
}

/// What happened for one dancer in one segment.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentTrace {
    pub segment: usize,
    pub dancer: usize,
    pub context_len: usize,
    /// The Pos word prompted for this dancer, when positions are used.
    pub prompt: Option<PosToken>,
    pub start: RootState,
    pub end: RootState,
    /// Flattened motion ids of the block.
    pub motion: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct GroupGeneration {
    /// Whole-clip decode of each dancer's merged codes, starting at its
    /// initial position.
    pub dancers: Vec<MotionSequence>,
    /// Merged level-major codes per dancer.
    pub codes: Vec<Vec<Vec<usize>>>,
    pub initial_positions: Vec<[f64; 2]>,
    pub trace: Vec<SegmentTrace>,
}

/// Segment-wise group generation with position hand-off.
///
/// For each segment, dancers are generated in index order; dancer `i` sees
/// the segment's audio, all dancers' current prompts and the blocks of
/// dancers `< i`. Each block is decoded from the dancer's current root state
/// and the final-frame state becomes the next segment's start.
pub fn generate_group<P: Predictor + ?Sized>(
    pred: &P,
    tokenizer: &MotionTokenizer,
    grid: &PositionGrid,
    audio: &[u32],
    config: &GenerationConfig,
) -> Result<GroupGeneration> {
    config.validate()?;
    let n = config.dancer_count;
    let starts = match &config.placement {
        Placement::Auto => auto_placement(n),
        Placement::Fixed(p) => {
            if p.len() != n {
                return Err(Error::invalid(format!(
                    "{} initial positions for {n} dancers",
                    p.len()
                )));
            }
            p.clone()
        }
    };
    let vocab = pred.vocabulary();
    let levels = tokenizer.quantizer.levels();
    let k = tokenizer.quantizer.codebook_size();
    if vocab.motion as usize != levels * k {
        return Err(Error::Shape(format!(
            "predictor has {} motion ids, tokenizer produces {levels}·{k}",
            vocab.motion
        )));
    }
    if config.with_position && vocab.pos != grid.token_count() {
        return Err(Error::Shape(format!(
            "predictor has {} position ids, grid has {}",
            vocab.pos,
            grid.token_count()
        )));
    }
    if n > vocab.max_dancers as usize {
        return Err(Error::OutOfRange(format!(
            "{n} dancers, predictor knows at most {}",
            vocab.max_dancers
        )));
    }
    let per_segment = config.tokens_per_segment(tokenizer.downsample());
    let segments = segment_audio(audio, per_segment)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut states: Vec<RootState> = starts
        .iter()
        .map(|&position| RootState {
            position,
            heading: 0.0,
        })
        .collect();
    let mut merged: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut trace = Vec::with_capacity(segments.len() * n);
    for (s, seg) in segments.iter().enumerate() {
        let tokens: Vec<PosToken> = states
            .iter()
            .map(|st| grid.position_token(st.position[0], st.position[1]))
            .collect::<Result<_>>()?;
        let prompt = if config.with_position {
            DancerPrompt::Positions(tokens.iter().map(|t| t.0).collect())
        } else {
            DancerPrompt::Count(n as u32)
        };
        let mut blocks: Vec<Vec<u32>> = Vec::with_capacity(n);
        for i in 0..n {
            let req = SegmentRequest {
                audio: seg,
                prompt: &prompt,
                prior: &blocks,
                steps: per_segment,
                levels,
            };
            let block = generate_segment(pred, &req, &config.sampling, &mut rng)?;
            let codes = unflatten_motion_codes(&block.motion, levels, k)?;
            let start = states[i];
            let origin = Vec3::new(start.position[0], 0.0, start.position[1]);
            let decoded = tokenizer.detokenize_motion(&codes, origin, None, config.fps)?;
            let (end, _) = propagate_position(grid, &decoded, start.heading)?;
            states[i] = end;
            merged[i].extend(&block.motion);
            trace.push(SegmentTrace {
                segment: s,
                dancer: i,
                context_len: block.context_len,
                prompt: config.with_position.then_some(tokens[i]),
                start,
                end,
                motion: block.motion.clone(),
            });
            blocks.push(block.motion);
        }
    }

    let mut dancers = Vec::with_capacity(n);
    let mut codes = Vec::with_capacity(n);
    for (ids, p0) in merged.iter().zip(&starts) {
        let c = unflatten_motion_codes(ids, levels, k)?;
        dancers.push(tokenizer.detokenize_motion(
            &c,
            Vec3::new(p0[0], 0.0, p0[1]),
            None,
            config.fps,
        )?);
        codes.push(c);
    }
    Ok(GroupGeneration {
        dancers,
        codes,
        initial_positions: starts,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generation::NGramPredictor;
    use crate::sequence::Vocabulary;

    /// Always prefers one motion id, with a little mass everywhere.
    struct Prefers(Vocabulary, usize);

    impl Predictor for Prefers {
        fn vocabulary(&self) -> &Vocabulary {
            &self.0
        }
        fn distribution(&self, _: &[usize]) -> Result<Vec<f64>> {
            let v = self.0.size();
            let mut p = vec![0.5 / (v - 1) as f64; v];
            p[self.0.motion_range().start + self.1] = 0.5;
            Ok(p)
        }
    }

    #[test]
    fn segment_counts_and_padding() {
        let t: Vec<u32> = (0..10).collect();
        assert_eq!(segment_audio(&t, 2).unwrap().len(), 5);
        let s = segment_audio(&t[..5], 2).unwrap();
        assert_eq!(s, vec![vec![0, 1], vec![2, 3], vec![4, 4]]);
        assert_eq!(segment_audio(&[7], 4).unwrap(), vec![vec![7; 4]]);
        assert!(segment_audio(&[], 2).is_err());
        assert!(segment_audio(&t, 0).is_err());
    }

    #[test]
    fn argmax_block_repeats_preferred_id() {
        let vocab = Vocabulary::new(16, 4, 0, 2).unwrap();
        let pred = Prefers(vocab, 7);
        let prompt = DancerPrompt::Count(1);
        let req = SegmentRequest {
            audio: &[1, 2],
            prompt: &prompt,
            prior: &[],
            steps: 5,
            levels: 1,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let b = generate_segment(&pred, &req, &Sampling::greedy(), &mut rng).unwrap();
        assert_eq!(b.motion, vec![7; 5]);
        assert_eq!(b.context_len, 7);
    }

    #[test]
    fn seeded_sampling_repeats() {
        let vocab = Vocabulary::new(8, 4, 0, 1).unwrap();
        let pred = Prefers(vocab, 3);
        let prompt = DancerPrompt::Count(1);
        let req = SegmentRequest {
            audio: &[0],
            prompt: &prompt,
            prior: &[],
            steps: 20,
            levels: 2,
        };
        let s = Sampling {
            temperature: 1.0,
            nucleus_p: 1.0,
        };
        let run = || generate_segment(&pred, &req, &s, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let a = run();
        assert_eq!(a, run());
        // level-constrained: even positions draw level 0 ids, odd positions level 1
        assert!(a
            .motion
            .iter()
            .enumerate()
            .all(|(j, &id)| (id as usize / 4) == j % 2));
    }

    #[test]
    fn bigram_follows_cycle() {
        let vocab = Vocabulary::new(4, 1, 0, 1).unwrap();
        let m = |k: usize| vocab.motion_range().start + k;
        let prompt = DancerPrompt::Count(1);
        let mut stream = vocab
            .encode(&sft_context(&[0], &prompt, &[]).unwrap())
            .unwrap();
        for t in 0..30 {
            stream.push(m(1 + t % 3));
        }
        let pred = NGramPredictor::train(&[stream], vocab, 2, 0.0).unwrap();
        let req = SegmentRequest {
            audio: &[0],
            prompt: &prompt,
            prior: &[],
            steps: 7,
            levels: 1,
        };
        let b = generate_segment(
            &pred,
            &req,
            &Sampling::greedy(),
            &mut ChaCha8Rng::seed_from_u64(0),
        )
        .unwrap();
        assert_eq!(b.motion, vec![1, 2, 3, 1, 2, 3, 1]);
    }

    #[test]
    fn zero_motion_mass_errors() {
        struct NoMotion(Vocabulary);
        impl Predictor for NoMotion {
            fn vocabulary(&self) -> &Vocabulary {
                &self.0
            }
            fn distribution(&self, _: &[usize]) -> Result<Vec<f64>> {
                let mut p = vec![0.0; self.0.size()];
                p[0] = 1.0;
                Ok(p)
            }
        }
        let pred = NoMotion(Vocabulary::new(4, 1, 0, 1).unwrap());
        let prompt = DancerPrompt::Count(1);
        let req = SegmentRequest {
            audio: &[0],
            prompt: &prompt,
            prior: &[],
            steps: 1,
            levels: 1,
        };
        assert!(generate_segment(
            &pred,
            &req,
            &Sampling::default(),
            &mut ChaCha8Rng::seed_from_u64(0)
        )
        .is_err());
    }

    fn walk(vx: f64, frames: usize, start: [f64; 2]) -> MotionSequence {
        let mut pose = crate::motion::Pose::rest(vec![Vec3::zeros(); 2], 0.9);
        pose.root_velocity_x = vx;
        MotionSequence::new(vec![pose; frames], 30.0, Vec3::new(start[0], 0.0, start[1])).unwrap()
    }

    #[test]
    fn propagation_fixed_point_and_translation() {
        let g = PositionGrid::default();
        let (s, t) = propagate_position(&g, &walk(0.0, 8, [0.3, -0.2]), 0.0).unwrap();
        assert_eq!(s.position, [0.3, -0.2]);
        assert_eq!(t, g.position_token(0.3, -0.2).unwrap());
        // 4 steps of 0.25 m between 5 frames
        let (s, t) = propagate_position(&g, &walk(0.25, 5, [0.0, 0.0]), 0.0).unwrap();
        assert_eq!(s.position, [1.0, 0.0]);
        assert_eq!(t, g.position_token(1.0, 0.0).unwrap());
        // heading a quarter turn sends local +x to world -z
        let (s, _) =
            propagate_position(&g, &walk(0.25, 5, [0.0, 0.0]), std::f64::consts::FRAC_PI_2)
                .unwrap();
        assert!((s.position[0]).abs() < 1e-12 && (s.position[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn ring_placement() {
        assert_eq!(auto_placement(1), vec![[0.0, 0.0]]);
        let r = auto_placement(4);
        assert_eq!(r[0], [1.0, 0.0]);
        for p in r {
            assert!((p[0].hypot(p[1]) - 1.0).abs() < 1e-15);
        }
    }
}
