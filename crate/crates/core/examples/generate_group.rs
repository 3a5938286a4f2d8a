//! End to end in memory: train a tokenizer and an audio codebook on
//! synthetic clips, fit a position-prompted n-gram predictor, then generate a
//! three-dancer group for unseen music and print each segment's hand-off.

use choreo::audio::{AudioCodebook, AudioTokenConfig};
use choreo::dataset::{synthesize_clip, LoadedClip, Split, SyntheticDatasetSpec};
use choreo::generation::{generate_group, GenerationConfig, NGramPredictor};
use choreo::metrics::tif;
use choreo::pipeline::{segment_examples, tokenize_clip, train_tokenizer, TokenizerSpec};
use choreo::position::PositionGrid;
use choreo::sequence::Vocabulary;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> choreo::Result<()> {
    let data = SyntheticDatasetSpec {
        clips: 24,
        ..SyntheticDatasetSpec::default()
    };
    let clips: Vec<LoadedClip> = (0..data.clips)
        .map(|i| {
            synthesize_clip(&data, i).map(|c| LoadedClip {
                id: c.id,
                audio: c.audio,
                dancers: c.dancers,
            })
        })
        .collect::<choreo::Result<_>>()?;
    let (train, test) = clips.split_at(20);

    let spec = TokenizerSpec {
        steps: 300,
        ..TokenizerSpec::default()
    };
    let motions: Vec<_> = train
        .iter()
        .flat_map(|c| c.dancers.iter().cloned())
        .collect();
    let tok = train_tokenizer(&motions, &spec)?.tokenizer;
    let audio_config = AudioTokenConfig::matched(data.sample_rate, data.fps, spec.downsample, 32)?;
    let audios: Vec<_> = train.iter().map(|c| c.audio.clone()).collect();
    let audio_book = AudioCodebook::fit(
        audio_config,
        &audios,
        64,
        20,
        &mut ChaCha8Rng::seed_from_u64(0),
    )?;

    let grid = PositionGrid::new(4, -4.0, 4.0)?;
    let config = GenerationConfig::default();
    let per_segment = config.tokens_per_segment(spec.downsample);
    let vocab = Vocabulary::new(
        (spec.levels * spec.codebook_size) as u32,
        audio_book.size() as u32,
        grid.token_count(),
        5,
    )?;
    let mut corpus = Vec::new();
    for clip in train {
        let tokens = tokenize_clip(&tok, &audio_book, clip, Split::Train)?;
        for ex in segment_examples(&tokens, &grid, spec.codebook_size, per_segment, true)? {
            corpus.push(vocab.encode(&ex.words)?);
        }
    }
    let pred = NGramPredictor::train_prompt_anchored(&corpus, vocab, 6, 0.01)?;
    println!(
        "predictor: {} sequences, {} contexts",
        corpus.len(),
        pred.model.context_count()
    );

    let music: Vec<u32> = audio_book
        .tokenize(&test[0].audio)?
        .into_iter()
        .map(|a| a as u32)
        .collect();
    let g = generate_group(&pred, &tok, &grid, &music, &config)?;
    for t in &g.trace {
        println!(
            "segment {} dancer {}: <Pos_id_{}> ({:+.2}, {:+.2}) -> ({:+.2}, {:+.2})",
            t.segment,
            t.dancer,
            t.prompt.map_or(0, |p| p.0),
            t.start.position[0],
            t.start.position[1],
            t.end.position[0],
            t.end.position[1]
        );
    }
    println!("TIF at 0.5 m: {:.3}", tif(&g.dancers, 0.5)?);
    Ok(())
}
