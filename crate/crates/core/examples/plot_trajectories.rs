//! Draws the root trajectories of one synthetic group over its position grid
//! as an SVG.
//!
//! Usage: `cargo run --example plot_trajectories [out.svg]`

use choreo::dataset::{synthesize_clip, SyntheticDatasetSpec};
use choreo::metrics::root_paths;
use choreo::plot::trajectory_svg;
use choreo::position::PositionGrid;

fn main() -> choreo::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| {
        std::env::temp_dir()
            .join("choreo_paths.svg")
            .display()
            .to_string()
    });
    let clip = synthesize_clip(&SyntheticDatasetSpec::default(), 0)?;
    let paths = root_paths(&clip.dancers)?;
    let grid = PositionGrid::new(4, -4.0, 4.0)?;
    std::fs::write(&out, trajectory_svg(&paths, Some(&grid), 600)?)?;
    for (i, p) in clip.primitives.iter().enumerate() {
        println!("dancer {i}: {}", p.name());
    }
    println!("wrote {out}");
    Ok(())
}
