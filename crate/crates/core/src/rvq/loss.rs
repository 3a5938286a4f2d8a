use crate::error::{Error, Result};
use crate::rvq::codebook::to_storage;
use crate::rvq::{Codebook, QuantizeResult};

/// Weights of the total training objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub rec: f64,
    pub commit: f64,
    pub ortho: f64,
}

impl LossWeights {
    /// The weights as they read back from an artifact.
    pub fn stored(self) -> Self {
        Self {
            rec: to_storage(self.rec),
            commit: to_storage(self.commit),
            ortho: to_storage(self.ortho),
        }
    }
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            rec: 0.8,
            commit: 0.1,
            ortho: 0.1,
        }
    }
}

/// Loss terms for one batch. `commit` already includes β; `codebook` is
/// reported only, since entries move by EMA.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossBreakdown {
    pub rec: f64,
    pub commit: f64,
    pub codebook: f64,
    pub ortho: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn is_finite(&self) -> bool {
        [self.rec, self.commit, self.codebook, self.ortho, self.total]
            .iter()
            .all(|v| v.is_finite())
    }

    pub(crate) fn accumulate(&mut self, other: &LossBreakdown, scale: f64) {
        self.rec += scale * other.rec;
        self.commit += scale * other.commit;
        self.codebook += scale * other.codebook;
        self.ortho += scale * other.ortho;
        self.total += scale * other.total;
    }
}

/// Elementwise smooth-L1 with unit transition point.
pub fn smooth_l1(d: f64) -> f64 {
    let a = d.abs();
    if a < 1.0 {
        0.5 * d * d
    } else {
        a - 0.5
    }
}

pub(crate) fn smooth_l1_grad(d: f64) -> f64 {
    d.clamp(-1.0, 1.0)
}

/// Mean smooth-L1 between equally shaped arrays.
pub fn reconstruction_loss(original: &[f64], reconstructed: &[f64]) -> Result<f64> {
    if original.len() != reconstructed.len() || original.is_empty() {
        return Err(Error::Shape(format!(
            "reconstruction of {} values against {}",
            reconstructed.len(),
            original.len()
        )));
    }
    let s: f64 = original
        .iter()
        .zip(reconstructed)
        .map(|(a, b)| smooth_l1(b - a))
        .sum();
    Ok(s / original.len() as f64)
}

/// `Σ_l mean((e_l - q_l(e_l))²)`; the same value serves the commitment term
/// (gradient to `e_l`) and the codebook term (gradient to `q_l`).
pub fn residual_gap(result: &QuantizeResult) -> f64 {
    result
        .residuals
        .iter()
        .zip(&result.selected)
        .map(|(e, q)| {
            e.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / e.len().max(1) as f64
        })
        .sum()
}

/// `‖Ê Êᵀ − I‖²_F` where `Ê` holds the unit-normalized entries; zero entries
/// contribute a zero row.
pub fn orthogonality_loss(book: &Codebook) -> f64 {
    let dim = book.dim();
    let rows: Vec<Vec<f64>> = book
        .entries()
        .chunks_exact(dim)
        .map(|r| {
            let n = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            if n > 0.0 {
                r.iter().map(|v| v / n).collect()
            } else {
                vec![0.0; dim]
            }
        })
        .collect();
    let mut s = 0.0;
    for (i, a) in rows.iter().enumerate() {
        for (j, b) in rows.iter().enumerate() {
            let g: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            let t = if i == j { 1.0 } else { 0.0 };
            s += (g - t) * (g - t);
        }
    }
    s
}

/// All loss terms for one reconstruction.
pub fn rvq_losses(
    original: &[f64],
    reconstructed: &[f64],
    result: &QuantizeResult,
    books: &[Codebook],
    commitment: f64,
    weights: &LossWeights,
) -> Result<LossBreakdown> {
    let rec = reconstruction_loss(original, reconstructed)?;
    let gap = residual_gap(result);
    let ortho: f64 = books.iter().map(orthogonality_loss).sum();
    let commit = commitment * gap;
    Ok(LossBreakdown {
        rec,
        commit,
        codebook: gap,
        ortho,
        total: weights.rec * rec + weights.commit * commit + weights.ortho * ortho,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rvq::ResidualQuantizer;

    #[test]
    fn smooth_l1_quadratic_region() {
        assert!((smooth_l1(0.3) - 0.045).abs() < 1e-15);
        assert_eq!(smooth_l1(-2.0), 1.5);
        assert_eq!(reconstruction_loss(&[0.0], &[0.3]).unwrap(), smooth_l1(0.3));
    }

    #[test]
    fn commit_and_codebook_scalar() {
        let q = ResidualQuantizer::from_codebooks(
            vec![Codebook::from_entries(vec![0.5], 1).unwrap()],
            1.0,
        )
        .unwrap();
        let r = q.quantize(&[0.3]).unwrap();
        let l = rvq_losses(&[0.0], &[0.0], &r, q.books(), 1.0, &LossWeights::default()).unwrap();
        // (0.3 - 0.5)^2
        assert!((l.commit - 0.04).abs() < 1e-12);
        assert!((l.codebook - 0.04).abs() < 1e-12);
    }

    #[test]
    fn perfect_fit_is_zero() {
        let book = Codebook::from_entries(vec![1.0, 0.0, 0.0, 1.0], 2).unwrap();
        let q = ResidualQuantizer::from_codebooks(vec![book], 1.0).unwrap();
        let r = q.quantize(&[0.0, 1.0]).unwrap();
        let l = rvq_losses(
            &[0.2, 0.4],
            &[0.2, 0.4],
            &r,
            q.books(),
            1.0,
            &LossWeights::default(),
        )
        .unwrap();
        assert_eq!(l, LossBreakdown::default());
    }

    #[test]
    fn ortho_of_parallel_pair() {
        let book = Codebook::from_entries(vec![1.0, 0.0, 2.0, 0.0], 2).unwrap();
        // Gram of unit rows is all ones; off-diagonals contribute 1 each
        assert!((orthogonality_loss(&book) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch_errors() {
        assert!(reconstruction_loss(&[0.0, 1.0], &[0.0]).is_err());
    }
}
