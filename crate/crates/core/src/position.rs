//! Ground-plane position tokens via Hilbert-curve indexing.
//!
//! The order-1 curve visits `(0,0) → (0,1) → (1,1) → (1,0)` (cells written as
//! `(cx, cz)`); higher orders follow the standard recursive construction, so
//! consecutive ids are always grid neighbours.

use crate::error::{Error, Result};

pub const MAX_ORDER: u32 = 15;

/// Discretized square stage: `2^order × 2^order` cells over `[min, max]` on
/// both X and Z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionGrid {
    order: u32,
    min: f64,
    max: f64,
}

impl Default for PositionGrid {
    /// 64×64 cells over [-10, 10] m.
    fn default() -> Self {
        Self {
            order: 6,
            min: -10.0,
            max: 10.0,
        }
    }
}

/// Index of a grid cell along the Hilbert curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PosToken(pub u32);

fn check_order(order: u32) -> Result<()> {
    if (1..=MAX_ORDER).contains(&order) {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "grid order {order} outside 1..={MAX_ORDER}"
        )))
    }
}

/// Maps cell `(cx, cz)` on a `2^order` grid to its distance along the curve.
pub fn hilbert_index(order: u32, cell: (u32, u32)) -> Result<u32> {
    check_order(order)?;
    let n = 1u32 << order;
    let (mut x, mut y) = cell;
    if x >= n || y >= n {
        return Err(Error::OutOfRange(format!(
            "cell ({x}, {y}) outside a {n}x{n} grid"
        )));
    }
    let mut d = 0u32;
    let mut s = n / 2;
    while s > 0 {
        let rx = u32::from(x & s > 0);
        let ry = u32::from(y & s > 0);
        d += s * s * ((3 * rx) ^ ry);
        rotate_quadrant(n, &mut x, &mut y, rx, ry);
        s /= 2;
    }
    Ok(d)
}

/// Inverse of [`hilbert_index`].
pub fn hilbert_inverse(order: u32, id: u32) -> Result<(u32, u32)> {
    check_order(order)?;
    let n = 1u32 << order;
    if u64::from(id) >= u64::from(n) * u64::from(n) {
        return Err(Error::OutOfRange(format!(
            "id {id} outside a curve of {} cells",
            u64::from(n) * u64::from(n)
        )));
    }
    let (mut x, mut y) = (0u32, 0u32);
    let mut t = id;
    let mut s = 1u32;
    while s < n {
        let rx = 1 & (t / 2);
        let ry = 1 & (t ^ rx);
        rotate_quadrant(s, &mut x, &mut y, rx, ry);
        x += s * rx;
        y += s * ry;
        t /= 4;
        s *= 2;
    }
    Ok((x, y))
}

fn rotate_quadrant(n: u32, x: &mut u32, y: &mut u32, rx: u32, ry: u32) {
    if ry == 0 {
        if rx == 1 {
            *x = n - 1 - *x;
            *y = n - 1 - *y;
        }
        std::mem::swap(x, y);
    }
}

impl PositionGrid {
    pub fn new(order: u32, min: f64, max: f64) -> Result<Self> {
        check_order(order)?;
        if !(min.is_finite() && max.is_finite() && max > min) {
            return Err(Error::invalid(format!(
                "grid extent [{min}, {max}] is empty"
            )));
        }
        Ok(Self { order, min, max })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn extent(&self) -> (f64, f64) {
        (self.min, self.max)
    }

    /// Cells per side.
    pub fn side(&self) -> u32 {
        1 << self.order
    }

    /// Number of distinct position tokens, `4^order`.
    pub fn token_count(&self) -> u32 {
        1 << (2 * self.order)
    }

    pub fn cell_size(&self) -> f64 {
        (self.max - self.min) / f64::from(self.side())
    }

    /// Floor-quantizes one coordinate, clamping to the outermost cells.
    fn axis_cell(&self, v: f64) -> u32 {
        let t = ((v - self.min) / self.cell_size()).floor();
        t.clamp(0.0, f64::from(self.side() - 1)) as u32
    }

    pub fn cell_of(&self, x: f64, z: f64) -> Result<(u32, u32)> {
        if !(x.is_finite() && z.is_finite()) {
            return Err(Error::NonFinite(format!("position ({x}, {z})")));
        }
        Ok((self.axis_cell(x), self.axis_cell(z)))
    }

    pub fn position_token(&self, x: f64, z: f64) -> Result<PosToken> {
        let cell = self.cell_of(x, z)?;
        Ok(PosToken(hilbert_index(self.order, cell)?))
    }

    /// Center of the cell a token denotes, meters.
    pub fn token_center(&self, token: PosToken) -> Result<(f64, f64)> {
        let (cx, cz) = hilbert_inverse(self.order, token.0)?;
        let h = self.cell_size();
        Ok((
            self.min + (f64::from(cx) + 0.5) * h,
            self.min + (f64::from(cz) + 0.5) * h,
        ))
    }

    /// Whether the (clamped) point lies in the token's cell.
    pub fn contains(&self, token: PosToken, x: f64, z: f64) -> Result<bool> {
        Ok(self.position_token(x, z)? == token)
    }
}
