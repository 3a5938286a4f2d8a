//! Scores one set of synthetic groups against another: FID and diversity of
//! kinetic features, beat alignment against the click track, and TIF.

use choreo::dataset::{synthesize_clip, SyntheticDatasetSpec};
use choreo::metrics::{evaluate, EvalClip, EvalConfig};
use choreo::motion::SkeletonSpec;

fn main() -> choreo::Result<()> {
    let spec = SyntheticDatasetSpec {
        clips: 16,
        ..SyntheticDatasetSpec::default()
    };
    let clips = (0..spec.clips)
        .map(|i| synthesize_clip(&spec, i))
        .collect::<choreo::Result<Vec<_>>>()?;
    let (real, other) = clips.split_at(8);
    let real: Vec<_> = real.iter().map(|c| c.dancers.clone()).collect();
    let generated: Vec<EvalClip> = other
        .iter()
        .map(|c| EvalClip {
            dancers: c.dancers.clone(),
            audio_beats: c.beats.clone(),
        })
        .collect();
    let report = evaluate(
        &SkeletonSpec::default_24(),
        &real,
        &generated,
        &EvalConfig::default(),
    )?;
    print!("{}", report.render_key_values());
    Ok(())
}
