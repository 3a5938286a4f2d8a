//! Lays out one fine-tuning example with and without position prompts and
//! prints its words next to the loss mask.

use choreo::position::PositionGrid;
use choreo::sequence::{build_sft_example, render_words, DancerTrack};

fn main() -> choreo::Result<()> {
    let grid = PositionGrid::new(2, -2.0, 2.0)?;
    let audio = [3, 1, 4];
    // 3 steps of a 2-level code: level 0 ids in 0..8, level 1 ids in 8..16
    let dancers = [
        DancerTrack {
            start: [-1.5, -1.5],
            motion: vec![1, 9, 2, 10, 3, 11],
        },
        DancerTrack {
            start: [1.2, 0.4],
            motion: vec![7, 15, 6, 14, 5, 13],
        },
    ];
    for with_position in [true, false] {
        let ex = build_sft_example(&audio, &dancers, &grid, with_position)?;
        println!("with_position={with_position}");
        println!("  {}", render_words(&ex.words));
        println!("  {}", ex.mask_line());
        println!(
            "  {} of {} words carry loss",
            ex.motion_token_count(),
            ex.words.len()
        );
    }
    Ok(())
}
