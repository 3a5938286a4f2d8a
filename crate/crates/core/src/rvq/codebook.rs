use rand::Rng;

use crate::error::{Error, Result};

/// Rounds to the nearest `f32`. Codebooks and network weights are persisted as
/// 32-bit floats; keeping the in-memory copies on that grid makes save/load
/// bit-exact.
#[inline]
pub(crate) fn to_storage(v: f64) -> f64 {
    v as f32 as f64
}

/// One level's code vectors plus the exponential-moving-average statistics
/// that drive their updates.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    dim: usize,
    /// K × D, row-major.
    entries: Vec<f64>,
    ema_counts: Vec<f64>,
    /// K × D, row-major.
    ema_sums: Vec<f64>,
    usage: Vec<u64>,
    steps_in_window: u32,
}

/// Settings for [`maintain_codebook`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaintenanceConfig {
    /// EMA decay γ.
    pub decay: f64,
    /// Entries used fewer than this many times over a window are re-drawn.
    pub dead_threshold: u64,
    /// Number of maintenance calls per dead-entry check.
    pub window: u32,
    /// Floor on EMA counts when dividing.
    pub eps: f64,
}

impl Default for MaintenanceConfig {
    fn default() -> Self {
        Self {
            decay: 0.95,
            dead_threshold: 1,
            window: 50,
            eps: 1e-5,
        }
    }
}

impl Codebook {
    /// Builds a codebook from K × D row-major entries with empty statistics.
    pub fn from_entries(entries: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 || entries.is_empty() || !entries.len().is_multiple_of(dim) {
            return Err(Error::Shape(format!(
                "{} values do not form a K x {dim} codebook",
                entries.len()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("codebook entry".into()));
        }
        let k = entries.len() / dim;
        let entries: Vec<f64> = entries.into_iter().map(to_storage).collect();
        Ok(Self {
            dim,
            ema_sums: entries.clone(),
            entries,
            ema_counts: vec![1.0; k],
            usage: vec![0; k],
            steps_in_window: 0,
        })
    }

    pub(crate) fn from_parts(
        dim: usize,
        entries: Vec<f64>,
        ema_counts: Vec<f64>,
        ema_sums: Vec<f64>,
        usage: Vec<u64>,
        steps_in_window: u32,
    ) -> Self {
        Self {
            dim,
            entries,
            ema_counts,
            ema_sums,
            usage,
            steps_in_window,
        }
    }

    pub fn zeros(size: usize, dim: usize) -> Self {
        Self::from_entries(vec![0.0; size * dim], dim).expect("non-empty shape")
    }

    pub fn size(&self) -> usize {
        self.ema_counts.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, k: usize) -> &[f64] {
        &self.entries[k * self.dim..(k + 1) * self.dim]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn ema_counts(&self) -> &[f64] {
        &self.ema_counts
    }

    pub fn ema_sums(&self) -> &[f64] {
        &self.ema_sums
    }

    pub fn usage(&self) -> &[u64] {
        &self.usage
    }

    pub fn steps_in_window(&self) -> u32 {
        self.steps_in_window
    }

    pub(crate) fn set_ema_counts(&mut self, counts: Vec<f64>) {
        assert_eq!(counts.len(), self.size());
        self.ema_counts = counts.into_iter().map(to_storage).collect();
    }

    pub(crate) fn set_ema_sums(&mut self, sums: Vec<f64>) {
        assert_eq!(sums.len(), self.entries.len());
        self.ema_sums = sums.into_iter().map(to_storage).collect();
    }

    /// Nearest entry by squared Euclidean distance; ties go to the lowest index.
    pub fn nearest(&self, x: &[f64]) -> (usize, f64) {
        debug_assert_eq!(x.len(), self.dim);
        let mut best = (0, f64::INFINITY);
        for (k, e) in self.entries.chunks_exact(self.dim).enumerate() {
            let d: f64 = e.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
            if d < best.1 {
                best = (k, d);
            }
        }
        best
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++ seeding followed by Lloyd iterations.
///
/// Clusters that end up empty are re-seeded with a random sample. The returned
/// codebook's EMA counts are the final cluster sizes and its EMA sums the
/// matching per-cluster vector sums.
pub fn kmeans_init<R: Rng + ?Sized>(
    samples: &[f64],
    dim: usize,
    k: usize,
    iters: usize,
    rng: &mut R,
) -> Result<Codebook> {
    if dim == 0 || samples.is_empty() {
        return Err(Error::invalid("k-means needs at least one sample"));
    }
    if !samples.len().is_multiple_of(dim) {
        return Err(Error::Shape(format!(
            "{} values are not rows of width {dim}",
            samples.len()
        )));
    }
    let n = samples.len() / dim;
    if k == 0 || n < k {
        return Err(Error::invalid(format!(
            "k-means with K={k} needs at least K samples, got {n}"
        )));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("k-means sample".into()));
    }
    let row = |i: usize| &samples[i * dim..(i + 1) * dim];

    // k-means++ seeding
    let mut centroids: Vec<f64> = Vec::with_capacity(k * dim);
    centroids.extend_from_slice(row(rng.gen_range(0..n)));
    let mut nearest_d2: Vec<f64> = (0..n).map(|i| sq_dist(row(i), &centroids[..dim])).collect();
    for _ in 1..k {
        let total: f64 = nearest_d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in nearest_d2.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.gen_range(0..n)
        };
        let c = row(pick).to_vec();
        for (i, d) in nearest_d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(row(i), &c));
        }
        centroids.extend_from_slice(&c);
    }

    let mut assign = vec![usize::MAX; n];
    let mut counts = vec![0usize; k];
    let mut sums = vec![0.0; k * dim];
    for iter in 0..=iters {
        let mut changed = false;
        for i in 0..n {
            let x = row(i);
            let mut best = (0, f64::INFINITY);
            for (c, e) in centroids.chunks_exact(dim).enumerate() {
                let d = sq_dist(x, e);
                if d < best.1 {
                    best = (c, d);
                }
            }
            if assign[i] != best.0 {
                assign[i] = best.0;
                changed = true;
            }
        }
        counts.iter_mut().for_each(|c| *c = 0);
        sums.iter_mut().for_each(|s| *s = 0.0);
        for i in 0..n {
            counts[assign[i]] += 1;
            for (s, v) in sums[assign[i] * dim..(assign[i] + 1) * dim]
                .iter_mut()
                .zip(row(i))
            {
                *s += v;
            }
        }
        if iter == iters || (!changed && iter > 0) {
            break;
        }
        for c in 0..k {
            let dst = &mut centroids[c * dim..(c + 1) * dim];
            if counts[c] == 0 {
                dst.copy_from_slice(row(rng.gen_range(0..n)));
            } else {
                for (d, s) in dst.iter_mut().zip(&sums[c * dim..(c + 1) * dim]) {
                    *d = s / counts[c] as f64;
                }
            }
        }
    }

    let mut book = Codebook::from_entries(centroids, dim)?;
    book.set_ema_counts(counts.iter().map(|&c| c as f64).collect());
    book.set_ema_sums(sums);
    Ok(book)
}

/// Outcome of one maintenance call.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MaintenanceReport {
    /// Entries replaced by batch vectors this call.
    pub reinitialized: Vec<usize>,
    /// Whether this call closed a dead-entry window.
    pub window_closed: bool,
}

/// EMA update of a codebook from one batch of vectors and their assigned codes,
/// followed by dead-entry replacement when a usage window closes.
///
/// `vectors` is row-major n × D; `assignments[i]` is the code chosen for row i.
/// An empty batch leaves the codebook untouched.
pub fn maintain_codebook<R: Rng + ?Sized>(
    book: &mut Codebook,
    vectors: &[f64],
    assignments: &[usize],
    config: &MaintenanceConfig,
    rng: &mut R,
) -> Result<MaintenanceReport> {
    let dim = book.dim;
    if !(config.decay > 0.0 && config.decay < 1.0) {
        return Err(Error::invalid(format!(
            "EMA decay {} must be in (0, 1)",
            config.decay
        )));
    }
    if assignments.is_empty() {
        return Ok(MaintenanceReport::default());
    }
    if vectors.len() != assignments.len() * dim {
        return Err(Error::Shape(format!(
            "{} assignments for {} values of width {dim}",
            assignments.len(),
            vectors.len()
        )));
    }
    let k = book.size();
    if let Some(&bad) = assignments.iter().find(|&&a| a >= k) {
        return Err(Error::OutOfRange(format!(
            "code {bad} in a {k}-entry codebook"
        )));
    }

    let mut batch_counts = vec![0.0; k];
    let mut batch_sums = vec![0.0; k * dim];
    for (i, &a) in assignments.iter().enumerate() {
        batch_counts[a] += 1.0;
        book.usage[a] += 1;
        for (s, v) in batch_sums[a * dim..(a + 1) * dim]
            .iter_mut()
            .zip(&vectors[i * dim..(i + 1) * dim])
        {
            *s += v;
        }
    }
    let g = config.decay;
    for c in 0..k {
        book.ema_counts[c] = to_storage(g * book.ema_counts[c] + (1.0 - g) * batch_counts[c]);
        for d in 0..dim {
            let idx = c * dim + d;
            book.ema_sums[idx] = to_storage(g * book.ema_sums[idx] + (1.0 - g) * batch_sums[idx]);
            book.entries[idx] = to_storage(book.ema_sums[idx] / book.ema_counts[c].max(config.eps));
        }
    }

    let mut report = MaintenanceReport::default();
    book.steps_in_window += 1;
    if book.steps_in_window >= config.window {
        report.window_closed = true;
        let n = assignments.len();
        for c in 0..k {
            if book.usage[c] < config.dead_threshold {
                let pick = rng.gen_range(0..n);
                let v = &vectors[pick * dim..(pick + 1) * dim];
                for d in 0..dim {
                    let x = to_storage(v[d]);
                    book.entries[c * dim + d] = x;
                    book.ema_sums[c * dim + d] = x;
                }
                book.ema_counts[c] = 1.0;
                report.reinitialized.push(c);
            }
        }
        book.usage.iter_mut().for_each(|u| *u = 0);
        book.steps_in_window = 0;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    /// Best 2-partition of 1-D points by exhaustive enumeration.
    fn best_two_means(xs: &[f64]) -> Vec<f64> {
        let n = xs.len();
        let mut best = (f64::INFINITY, vec![]);
        for mask in 1u32..(1 << n) - 1 {
            let (a, b): (Vec<f64>, Vec<f64>) = {
                let mut a = vec![];
                let mut b = vec![];
                for (i, &x) in xs.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        a.push(x)
                    } else {
                        b.push(x)
                    }
                }
                (a, b)
            };
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            let (ma, mb) = (mean(&a), mean(&b));
            let sse: f64 = a.iter().map(|x| (x - ma).powi(2)).sum::<f64>()
                + b.iter().map(|x| (x - mb).powi(2)).sum::<f64>();
            if sse < best.0 {
                let mut c = vec![ma, mb];
                c.sort_by(f64::total_cmp);
                best = (sse, c);
            }
        }
        best.1
    }

    #[test]
    fn two_clusters_found() {
        let xs = [0.0, 0.0, 10.0, 10.0];
        let oracle = best_two_means(&xs);
        assert_eq!(oracle, vec![0.0, 10.0]);
        let book = kmeans_init(&xs, 1, 2, 10, &mut rng()).unwrap();
        let mut got = book.entries().to_vec();
        got.sort_by(f64::total_cmp);
        assert_eq!(got, oracle);
        assert_eq!(book.ema_counts(), &[2.0, 2.0]);
    }

    #[test]
    fn single_cluster_is_mean() {
        let xs = [1.0, 2.0, 3.0, 6.0, 1.0, 2.0];
        let book = kmeans_init(&xs, 2, 1, 5, &mut rng()).unwrap();
        assert_eq!(book.entry(0), &[5.0 / 3.0, 10.0 / 3.0].map(to_storage));
    }

    #[test]
    fn identical_samples_reseed_to_that_value() {
        let xs = [4.0; 6];
        let book = kmeans_init(&xs, 1, 2, 5, &mut rng()).unwrap();
        assert_eq!(book.entries(), &[4.0, 4.0]);
    }

    #[test]
    fn too_few_samples_error() {
        assert!(kmeans_init(&[1.0], 1, 2, 5, &mut rng()).is_err());
        assert!(kmeans_init(&[], 1, 1, 5, &mut rng()).is_err());
    }

    #[test]
    fn nearest_breaks_ties_low() {
        let book = Codebook::from_entries(vec![0.0, 1.0], 1).unwrap();
        assert_eq!(book.nearest(&[0.5]).0, 0);
        assert_eq!(book.nearest(&[0.51]).0, 1);
    }

    #[test]
    fn ema_count_update() {
        let mut book = Codebook::from_entries(vec![0.0, 5.0], 1).unwrap();
        book.set_ema_counts(vec![10.0, 4.0]);
        book.set_ema_sums(vec![0.0, 20.0]);
        let cfg = MaintenanceConfig::default();
        maintain_codebook(&mut book, &[0.0, 0.0], &[0, 0], &cfg, &mut rng()).unwrap();
        assert!((book.ema_counts()[0] - 9.6).abs() < 1e-6);
        // unassigned entry decays but keeps its value
        assert!((book.ema_counts()[1] - 3.8).abs() < 1e-6);
        assert!((book.entry(1)[0] - 5.0).abs() < 1e-5);
    }

    #[test]
    fn entries_track_ema_ratio() {
        let mut book = Codebook::from_entries(vec![0.0, 1.0, 2.0], 1).unwrap();
        let cfg = MaintenanceConfig::default();
        let mut r = rng();
        for step in 0..10 {
            let v = [0.1 * step as f64, 1.5, 1.7];
            maintain_codebook(&mut book, &v, &[0, 1, 1], &cfg, &mut r).unwrap();
            for c in 0..3 {
                let expect = to_storage(book.ema_sums()[c] / book.ema_counts()[c].max(cfg.eps));
                assert_eq!(book.entry(c)[0], expect);
            }
        }
    }

    #[test]
    fn unused_entry_is_reinitialized_from_batch() {
        let mut book = Codebook::from_entries(vec![0.0, 100.0], 1).unwrap();
        let cfg = MaintenanceConfig {
            window: 1,
            ..MaintenanceConfig::default()
        };
        let batch = [0.25, -0.5, 0.75];
        let report = maintain_codebook(&mut book, &batch, &[0, 0, 0], &cfg, &mut rng()).unwrap();
        assert_eq!(report.reinitialized, vec![1]);
        assert!(batch.contains(&book.entry(1)[0]));
        assert!(book.usage().iter().all(|&u| u == 0));
    }

    #[test]
    fn empty_batch_is_noop() {
        let mut book = Codebook::from_entries(vec![0.0, 1.0], 1).unwrap();
        let before = book.clone();
        maintain_codebook(
            &mut book,
            &[],
            &[],
            &MaintenanceConfig::default(),
            &mut rng(),
        )
        .unwrap();
        assert_eq!(book, before);
    }
}
