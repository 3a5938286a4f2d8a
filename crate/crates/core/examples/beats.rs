//! Detects beats in a synthetic click track and compares them with the
//! clicks that were placed.

use choreo::audio::{detect_beats, extract_audio_frames, FrameConfig};
use choreo::dataset::{synthesize_clip, SyntheticDatasetSpec};

fn main() -> choreo::Result<()> {
    let spec = SyntheticDatasetSpec::default();
    let clip = synthesize_clip(&spec, 0)?;
    let frames = extract_audio_frames(&clip.audio, FrameConfig::default())?;
    let detected = detect_beats(&frames);
    println!(
        "{} placed clicks, {} detected beats",
        clip.beats.len(),
        detected.len()
    );
    let mut worst = 0.0f64;
    for b in &clip.beats {
        let near = detected
            .iter()
            .map(|d| (d - b).abs())
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(near);
        println!(
            "click {b:6.3}s  nearest detection off by {:5.1} ms",
            1e3 * near
        );
    }
    println!("worst offset {:.1} ms", 1e3 * worst);
    Ok(())
}
