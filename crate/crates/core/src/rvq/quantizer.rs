use rand::Rng;

use crate::error::{Error, Result};
use crate::rvq::codebook::{
    kmeans_init, maintain_codebook, to_storage, Codebook, MaintenanceConfig,
};

/// Output of [`ResidualQuantizer::quantize`] for a `T × D` latent.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizeResult {
    /// `indices[l][t]` is the level-`l` code at time step `t`.
    pub indices: Vec<Vec<usize>>,
    /// Sum of selected code vectors, `T × D` row-major.
    pub quantized: Vec<f64>,
    /// `residuals[l]` is `e_{l+1}`, `T × D`; `residuals[0]` is the latent.
    pub residuals: Vec<Vec<f64>>,
    /// `selected[l]` holds the level-`l` code vectors, `T × D`.
    pub selected: Vec<Vec<f64>>,
    pub steps: usize,
    pub dim: usize,
}

impl QuantizeResult {
    pub fn levels(&self) -> usize {
        self.indices.len()
    }

    /// `e_L - q_L(e_L)`, the part of the latent left unexplained.
    pub fn final_residual(&self) -> Vec<f64> {
        let l = self.levels() - 1;
        self.residuals[l]
            .iter()
            .zip(&self.selected[l])
            .map(|(e, q)| e - q)
            .collect()
    }
}

/// Cascade of L codebooks; level `l` quantizes what levels `< l` left over.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualQuantizer {
    /// One book per level, or a single book reused by every level when shared.
    books: Vec<Codebook>,
    levels: usize,
    shared: bool,
    commitment: f64,
    initialized: bool,
}

impl ResidualQuantizer {
    /// Per-level codebooks, each `size × dim`, all zero and marked uninitialized.
    pub fn new(
        levels: usize,
        size: usize,
        dim: usize,
        shared: bool,
        commitment: f64,
    ) -> Result<Self> {
        if levels == 0 || size == 0 || dim == 0 {
            return Err(Error::invalid(format!(
                "quantizer needs L, K, D >= 1 (got {levels}, {size}, {dim})"
            )));
        }
        if !(commitment > 0.0 && commitment.is_finite()) {
            return Err(Error::invalid(format!(
                "commitment weight {commitment} must be positive"
            )));
        }
        let n_books = if shared { 1 } else { levels };
        Ok(Self {
            books: vec![Codebook::zeros(size, dim); n_books],
            levels,
            shared,
            commitment: to_storage(commitment),
            initialized: false,
        })
    }

    /// Per-level stack from explicit codebooks, marked initialized.
    pub fn from_codebooks(books: Vec<Codebook>, commitment: f64) -> Result<Self> {
        let first = books
            .first()
            .ok_or_else(|| Error::invalid("quantizer needs at least one level"))?;
        let (size, dim) = (first.size(), first.dim());
        if books.iter().any(|b| b.dim() != dim || b.size() != size) {
            return Err(Error::Shape("all levels must share K and D".into()));
        }
        let mut q = Self::new(books.len(), size, dim, false, commitment)?;
        q.books = books;
        q.initialized = true;
        Ok(q)
    }

    pub(crate) fn from_parts(
        books: Vec<Codebook>,
        levels: usize,
        shared: bool,
        commitment: f64,
        initialized: bool,
    ) -> Self {
        Self {
            books,
            levels,
            shared,
            commitment,
            initialized,
        }
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn codebook_size(&self) -> usize {
        self.books[0].size()
    }

    pub fn dim(&self) -> usize {
        self.books[0].dim()
    }

    pub fn is_shared(&self) -> bool {
        self.shared
    }

    pub fn commitment(&self) -> f64 {
        self.commitment
    }

    pub fn is_initialized(&self) -> bool {
        self.initialized
    }

    /// Codebook used at `level`.
    pub fn book(&self, level: usize) -> &Codebook {
        &self.books[if self.shared { 0 } else { level }]
    }

    /// Distinct stored codebooks (one when shared).
    pub fn books(&self) -> &[Codebook] {
        &self.books
    }

    fn check_latent(&self, latent: &[f64]) -> Result<usize> {
        let dim = self.dim();
        if !latent.len().is_multiple_of(dim) {
            return Err(Error::Shape(format!(
                "latent of {} values is not a multiple of D={dim}",
                latent.len()
            )));
        }
        if latent.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("latent".into()));
        }
        Ok(latent.len() / dim)
    }

    /// Quantizes a `T × D` latent through all levels.
    pub fn quantize(&self, latent: &[f64]) -> Result<QuantizeResult> {
        self.quantize_levels(latent, self.levels)
    }

    /// Quantizes with only the first `levels` codebooks.
    pub fn quantize_levels(&self, latent: &[f64], levels: usize) -> Result<QuantizeResult> {
        if levels == 0 || levels > self.levels {
            return Err(Error::invalid(format!(
                "{levels} levels requested from a {}-level stack",
                self.levels
            )));
        }
        let steps = self.check_latent(latent)?;
        let dim = self.dim();
        let mut indices = Vec::with_capacity(levels);
        let mut residuals = Vec::with_capacity(levels);
        let mut selected = Vec::with_capacity(levels);
        let mut quantized = vec![0.0; latent.len()];
        let mut e = latent.to_vec();
        for l in 0..levels {
            let book = self.book(l);
            let mut idx = Vec::with_capacity(steps);
            let mut q = Vec::with_capacity(latent.len());
            for row in e.chunks_exact(dim) {
                let (k, _) = book.nearest(row);
                idx.push(k);
                q.extend_from_slice(book.entry(k));
            }
            for (z, c) in quantized.iter_mut().zip(&q) {
                *z += c;
            }
            let next: Vec<f64> = e.iter().zip(&q).map(|(a, b)| a - b).collect();
            indices.push(idx);
            residuals.push(std::mem::replace(&mut e, next));
            selected.push(q);
        }
        Ok(QuantizeResult {
            indices,
            quantized,
            residuals,
            selected,
            steps,
            dim,
        })
    }

    /// Sum over levels of the indexed code vectors, `T × D`.
    pub fn dequantize(&self, indices: &[Vec<usize>]) -> Result<Vec<f64>> {
        if indices.len() != self.levels {
            return Err(Error::Shape(format!(
                "{} index rows for a {}-level stack",
                indices.len(),
                self.levels
            )));
        }
        let steps = indices[0].len();
        if indices.iter().any(|r| r.len() != steps) {
            return Err(Error::Shape("index rows differ in length".into()));
        }
        let dim = self.dim();
        let k = self.codebook_size();
        let mut out = vec![0.0; steps * dim];
        for (l, row) in indices.iter().enumerate() {
            let book = self.book(l);
            for (t, &i) in row.iter().enumerate() {
                if i >= k {
                    return Err(Error::OutOfRange(format!(
                        "code {i} at level {l}, step {t} (K={k})"
                    )));
                }
                for (o, c) in out[t * dim..(t + 1) * dim].iter_mut().zip(book.entry(i)) {
                    *o += c;
                }
            }
        }
        Ok(out)
    }

    /// Fits every level with k-means on the residuals left by the levels before it.
    pub fn initialize<R: Rng + ?Sized>(
        &mut self,
        latent: &[f64],
        iters: usize,
        rng: &mut R,
    ) -> Result<()> {
        self.check_latent(latent)?;
        let dim = self.dim();
        let k = self.codebook_size();
        if self.shared {
            self.books[0] = kmeans_init(latent, dim, k, iters, rng)?;
        } else {
            let mut e = latent.to_vec();
            for l in 0..self.levels {
                let book = kmeans_init(&e, dim, k, iters, rng)?;
                for row in e.chunks_exact_mut(dim) {
                    let (i, _) = book.nearest(row);
                    for (v, c) in row.iter_mut().zip(book.entry(i)) {
                        *v -= c;
                    }
                }
                self.books[l] = book;
            }
        }
        self.initialized = true;
        Ok(())
    }

    /// EMA maintenance of every codebook from the residuals and codes of `results`.
    pub fn maintain<R: Rng + ?Sized>(
        &mut self,
        results: &[&QuantizeResult],
        config: &MaintenanceConfig,
        rng: &mut R,
    ) -> Result<Vec<usize>> {
        let mut reinitialized = Vec::new();
        let groups: Vec<Vec<usize>> = if self.shared {
            vec![(0..self.levels).collect()]
        } else {
            (0..self.levels).map(|l| vec![l]).collect()
        };
        for (b, levels) in groups.iter().enumerate() {
            let mut vectors = Vec::new();
            let mut assignments = Vec::new();
            for r in results {
                for &l in levels {
                    vectors.extend_from_slice(&r.residuals[l]);
                    assignments.extend_from_slice(&r.indices[l]);
                }
            }
            let report =
                maintain_codebook(&mut self.books[b], &vectors, &assignments, config, rng)?;
            reinitialized.push(report.reinitialized.len());
        }
        Ok(reinitialized)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn book(v: &[f64]) -> Codebook {
        Codebook::from_entries(v.to_vec(), 1).unwrap()
    }

    #[test]
    fn two_level_scalar_example() {
        let q = ResidualQuantizer::from_codebooks(vec![book(&[0.0, 1.0]), book(&[-0.1, 0.5])], 1.0)
            .unwrap();
        let r = q.quantize(&[0.9]).unwrap();
        assert_eq!(r.indices, vec![vec![1], vec![0]]);
        // oracle: nearest of {0,1} to 0.9 is 1, residual -0.1; nearest of {-0.1,0.5} to -0.1 is -0.1
        let l2 = to_f32(-0.1);
        assert_eq!(r.residuals[1], vec![0.9 - 1.0]);
        assert_eq!(r.quantized, vec![1.0 + l2]);
        assert!((r.quantized[0] - 0.9).abs() < 1e-7);
        assert!((r.final_residual()[0]).abs() < 1e-7);
        assert_eq!(q.dequantize(&r.indices).unwrap(), r.quantized);
    }

    fn to_f32(v: f64) -> f64 {
        v as f32 as f64
    }

    #[test]
    fn exact_codeword_single_level() {
        let q = ResidualQuantizer::from_codebooks(vec![book(&[0.25, 2.0])], 1.0).unwrap();
        let r = q.quantize(&[2.0]).unwrap();
        assert_eq!(r.quantized, vec![2.0]);
        assert_eq!(r.final_residual(), vec![0.0]);
        assert_eq!(q.dequantize(&[vec![0]]).unwrap(), vec![0.25]);
    }

    #[test]
    fn tie_goes_to_lowest_index() {
        let q = ResidualQuantizer::from_codebooks(vec![book(&[0.0, 1.0])], 1.0).unwrap();
        assert_eq!(q.quantize(&[0.5]).unwrap().indices, vec![vec![0]]);
    }

    #[test]
    fn zero_codebooks_give_zero_latent() {
        let q = ResidualQuantizer::from_codebooks(vec![Codebook::zeros(3, 2); 2], 1.0).unwrap();
        assert_eq!(
            q.dequantize(&[vec![2, 1], vec![0, 0]]).unwrap(),
            vec![0.0; 4]
        );
    }

    #[test]
    fn shape_and_range_errors() {
        let q = ResidualQuantizer::from_codebooks(vec![Codebook::zeros(2, 2)], 1.0).unwrap();
        assert!(q.quantize(&[1.0, 2.0, 3.0]).is_err());
        assert!(q.dequantize(&[vec![2]]).is_err());
        assert!(q.dequantize(&[vec![0], vec![0]]).is_err());
        assert!(ResidualQuantizer::new(1, 2, 2, false, 0.0).is_err());
    }

    #[test]
    fn shared_stack_reuses_one_book() {
        let mut q = ResidualQuantizer::new(3, 4, 1, true, 1.0).unwrap();
        let data: Vec<f64> = (0..32).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(1);
        q.initialize(&data, 10, &mut rng).unwrap();
        assert_eq!(q.books().len(), 1);
        let r = q.quantize(&data).unwrap();
        for l in 0..3 {
            for (t, &i) in r.indices[l].iter().enumerate() {
                assert_eq!(r.selected[l][t], q.book(0).entry(i)[0]);
            }
        }
    }

    fn f32_vec(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec((-4.0f32..4.0).prop_map(f64::from), n)
    }

    proptest! {
        #[test]
        fn telescoping_and_dequantize_are_exact(
            latent in f32_vec(12),
            books in proptest::collection::vec(f32_vec(15), 3),
        ) {
            let books: Vec<Codebook> = books.into_iter().map(|b| Codebook::from_entries(b, 3).unwrap()).collect();
            let q = ResidualQuantizer::from_codebooks(books, 1.0).unwrap();
            let r = q.quantize(&latent).unwrap();
            let lhs: Vec<f64> = latent.iter().zip(&r.quantized).map(|(a, b)| a - b).collect();
            prop_assert_eq!(lhs, r.final_residual());
            prop_assert_eq!(q.dequantize(&r.indices).unwrap(), r.quantized.clone());
            for (l, row) in r.indices.iter().enumerate() {
                for &i in row {
                    prop_assert!(i < q.book(l).size());
                }
            }
        }

        #[test]
        fn error_does_not_grow_with_levels_when_books_hold_zero(
            latent in f32_vec(8),
            books in proptest::collection::vec(f32_vec(12), 4),
        ) {
            // each level keeps a zero entry, so the nearest code is never worse than skipping
            let books: Vec<Codebook> = books
                .into_iter()
                .map(|mut b| { b[..2].fill(0.0); Codebook::from_entries(b, 2).unwrap() })
                .collect();
            let q = ResidualQuantizer::from_codebooks(books, 1.0).unwrap();
            let mut prev = latent.iter().map(|v| v * v).sum::<f64>();
            for levels in 1..=4 {
                let r = q.quantize_levels(&latent, levels).unwrap();
                let err: f64 = r.final_residual().iter().map(|v| v * v).sum();
                prop_assert!(err <= prev + 1e-12);
                prev = err;
            }
        }
    }
}
