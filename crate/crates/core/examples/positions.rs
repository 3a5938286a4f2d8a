//! Quantizes ground-plane positions to Hilbert-curve tokens and shows that
//! neighbouring tokens are neighbouring cells.

use choreo::position::{hilbert_inverse, PositionGrid};

fn main() -> choreo::Result<()> {
    let grid = PositionGrid::new(3, -4.0, 4.0)?;
    println!(
        "{0}x{0} cells of {1} m, {2} tokens",
        grid.side(),
        grid.cell_size(),
        grid.token_count()
    );
    for (x, z) in [(0.0, 0.0), (0.9, 0.2), (-3.7, 3.9), (2.5, -1.5)] {
        let t = grid.position_token(x, z)?;
        let (cx, cz) = grid.token_center(t)?;
        println!(
            "({x:+.1}, {z:+.1}) -> <Pos_id_{}> centred at ({cx:+.1}, {cz:+.1})",
            t.0
        );
    }
    // the curve over the 8x8 grid, drawn as visit order
    let side = grid.side();
    let mut order = vec![vec![0u32; side as usize]; side as usize];
    for id in 0..grid.token_count() {
        let (cx, cz) = hilbert_inverse(grid.order(), id)?;
        order[cz as usize][cx as usize] = id;
    }
    for row in order {
        let cells: Vec<String> = row.iter().map(|id| format!("{id:3}")).collect();
        println!("{}", cells.join(""));
    }
    Ok(())
}
