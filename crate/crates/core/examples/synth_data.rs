//! Writes a small synthetic group-dance dataset (click-track audio plus one
//! motion file per dancer) and lists what was generated.
//!
//! Usage: `cargo run --example synth_data [out_dir]`

use std::path::PathBuf;

use choreo::dataset::{generate_synthetic_dataset, SyntheticDatasetSpec};

fn main() -> choreo::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map_or_else(|| std::env::temp_dir().join("choreo_synth"), PathBuf::from);
    let spec = SyntheticDatasetSpec {
        clips: 6,
        seconds: 4.0,
        test_every: 3,
        ..SyntheticDatasetSpec::default()
    };
    let manifest = generate_synthetic_dataset(&spec, &out)?;
    for e in manifest.entries() {
        let starts: Vec<String> = e
            .positions
            .iter()
            .map(|[x, z]| format!("({x:+.2}, {z:+.2})"))
            .collect();
        println!(
            "{} {:5} {} dancers at {}",
            e.id,
            e.split.name(),
            e.motions.len(),
            starts.join(" ")
        );
    }
    println!("manifest: {}", out.join("manifest.tsv").display());
    Ok(())
}
