use crate::audio::AudioCodebook;
use crate::dataset::{LoadedClip, Split};
use crate::error::{Error, Result};
use crate::motion::recover_trajectory;
use crate::position::PositionGrid;
use crate::rvq::MotionTokenizer;
use crate::sequence::{
    build_pretrain_stream, build_sft_example, flatten_motion_codes, DancerTrack, PretrainSegment,
    TrainingExample, Word,
};

/// One dancer of a tokenized clip.
#[derive(Debug, Clone, PartialEq)]
pub struct DancerTokens {
    /// Level-major codes, `codes[l][t]`.
    pub codes: Vec<Vec<usize>>,
    /// Root (x, z) at the first frame of each latent step.
    pub anchors: Vec<[f64; 2]>,
}

/// Audio and motion tokens of a clip, cut to a common number of steps.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipTokens {
    pub id: String,
    pub split: Split,
    pub audio: Vec<u32>,
    pub dancers: Vec<DancerTokens>,
}

impl ClipTokens {
    pub fn steps(&self) -> usize {
        self.audio.len()
    }
}

pub fn tokenize_clip(
    tokenizer: &MotionTokenizer,
    audio_book: &AudioCodebook,
    clip: &LoadedClip,
    split: Split,
) -> Result<ClipTokens> {
    let d = tokenizer.downsample();
    let audio: Vec<u32> = audio_book
        .tokenize(&clip.audio)?
        .into_iter()
        .map(|a| a as u32)
        .collect();
    let mut steps = audio.len();
    let mut dancers = Vec::with_capacity(clip.dancers.len());
    for seq in &clip.dancers {
        let tokens = tokenizer.tokenize_motion(seq)?;
        let traj = recover_trajectory(seq)?;
        let anchors = (0..tokens.steps())
            .map(|t| {
                let p = traj.positions[(t * d).min(traj.len() - 1)];
                [p.x, p.z]
            })
            .collect();
        steps = steps.min(tokens.steps());
        dancers.push(DancerTokens {
            codes: tokens.codes,
            anchors,
        });
    }
    if steps == 0 {
        return Err(Error::invalid(format!(
            "clip `{}` produced no tokens",
            clip.id
        )));
    }
    for dt in &mut dancers {
        dt.codes.iter_mut().for_each(|row| row.truncate(steps));
        dt.anchors.truncate(steps);
    }
    Ok(ClipTokens {
        id: clip.id.clone(),
        split,
        audio: audio[..steps].to_vec(),
        dancers,
    })
}

/// The audio block followed by each dancer's whole motion.
pub fn pretrain_words(clip: &ClipTokens, codebook_size: usize) -> Result<Vec<Word>> {
    let mut segments = vec![PretrainSegment::Audio(clip.audio.clone())];
    for d in &clip.dancers {
        segments.push(PretrainSegment::Motion(flatten_motion_codes(
            &d.codes,
            codebook_size,
        )?));
    }
    Ok(build_pretrain_stream(&segments)?.words)
}

/// Cuts a clip into examples of `per_segment` steps each, prompted with the
/// dancers' positions at the segment's first frame. A clip shorter than one
/// segment yields a single shorter example.
pub fn segment_examples(
    clip: &ClipTokens,
    grid: &PositionGrid,
    codebook_size: usize,
    per_segment: usize,
    with_position: bool,
) -> Result<Vec<TrainingExample>> {
    if per_segment == 0 {
        return Err(Error::invalid("segments need at least one step"));
    }
    let steps = clip.steps();
    let bounds: Vec<(usize, usize)> = if steps < per_segment {
        vec![(0, steps)]
    } else {
        (0..steps / per_segment)
            .map(|s| (s * per_segment, (s + 1) * per_segment))
            .collect()
    };
    bounds
        .into_iter()
        .map(|(a, b)| {
            let dancers = clip
                .dancers
                .iter()
                .map(|d| {
                    let codes: Vec<Vec<usize>> =
                        d.codes.iter().map(|row| row[a..b].to_vec()).collect();
                    Ok(DancerTrack {
                        start: d.anchors[a],
                        motion: flatten_motion_codes(&codes, codebook_size)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            build_sft_example(&clip.audio[a..b], &dancers, grid, with_position)
        })
        .collect()
}
