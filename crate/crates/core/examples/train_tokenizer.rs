//! Trains a motion tokenizer on procedurally generated group dances and
//! reports reconstruction loss and codebook usage.

use std::time::Instant;

use choreo::dataset::{synthesize_clip, SyntheticDatasetSpec};
use choreo::pipeline::{train_tokenizer, TokenizerSpec};

fn main() -> choreo::Result<()> {
    let data = SyntheticDatasetSpec::default();
    let sequences: Vec<_> = (0..data.clips)
        .map(|i| synthesize_clip(&data, i).map(|c| c.dancers))
        .collect::<choreo::Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let spec = TokenizerSpec::default();
    let t = Instant::now();
    let run = train_tokenizer(&sequences, &spec)?;
    println!("sequences: {}", sequences.len());
    println!("steps: {} in {:.1?}", spec.steps, t.elapsed());
    println!(
        "reconstruction loss: {:.5} -> {:.5}",
        run.initial.rec, run.last.rec
    );
    println!("codebook utilization: {:.1}%", 100.0 * run.utilization);
    Ok(())
}
