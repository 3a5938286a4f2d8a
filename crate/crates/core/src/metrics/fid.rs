use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// What a feature set describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    Individual,
    Group,
}

/// `n` feature rows of equal dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub kind: FeatureKind,
    rows: Vec<Vec<f64>>,
}

impl FeatureSet {
    pub fn new(kind: FeatureKind, rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if dim == 0 {
            return Err(Error::invalid("feature set needs nonempty rows"));
        }
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Shape("feature rows differ in length".into()));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature value".into()));
        }
        Ok(Self { kind, rows })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.rows[0].len()
    }

    /// Sample mean and unbiased covariance.
    pub fn gaussian(&self) -> Result<Gaussian> {
        let n = self.len();
        if n < 2 {
            return Err(Error::invalid(format!(
                "Gaussian statistics need at least 2 rows, got {n}"
            )));
        }
        let d = self.dim();
        let mut mean = DVector::zeros(d);
        for r in &self.rows {
            mean += DVector::from_column_slice(r);
        }
        mean /= n as f64;
        let mut cov = DMatrix::zeros(d, d);
        for r in &self.rows {
            let c = DVector::from_column_slice(r) - &mean;
            cov += &c * c.transpose();
        }
        cov /= (n - 1) as f64;
        Ok(Gaussian { mean, cov })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

/// Square root of a symmetric positive semidefinite matrix; negative
/// eigenvalues from rounding are clamped to zero.
pub fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let e = SymmetricEigen::new(sym);
    let roots = e.eigenvalues.map(|l| l.max(0.0).sqrt());
    &e.eigenvectors * DMatrix::from_diagonal(&roots) * e.eigenvectors.transpose()
}

/// `‖μ_a − μ_b‖² + Tr(Σ_a + Σ_b − 2(Σ_a Σ_b)^{1/2})`, clamped at 0.
///
/// The trace of `(Σ_a Σ_b)^{1/2}` equals that of `(S Σ_b S)^{1/2}` with
/// `S = Σ_a^{1/2}`, which is symmetric and decomposed directly.
pub fn frechet_distance(a: &Gaussian, b: &Gaussian) -> Result<f64> {
    if a.mean.len() != b.mean.len() {
        return Err(Error::Shape(format!(
            "feature dimensions {} and {}",
            a.mean.len(),
            b.mean.len()
        )));
    }
    let s = psd_sqrt(&a.cov);
    let inner = &s * &b.cov * &s;
    let inner = (&inner + inner.transpose()) * 0.5;
    let tr_sqrt: f64 = SymmetricEigen::new(inner)
        .eigenvalues
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .sum();
    let d = (&a.mean - &b.mean).norm_squared() + a.cov.trace() + b.cov.trace() - 2.0 * tr_sqrt;
    Ok(d.max(0.0))
}

pub fn fid(real: &FeatureSet, generated: &FeatureSet) -> Result<f64> {
    if real.dim() != generated.dim() {
        return Err(Error::Shape(format!(
            "feature dimensions {} and {}",
            real.dim(),
            generated.dim()
        )));
    }
    frechet_distance(&real.gaussian()?, &generated.gaussian()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    /// Principal square root by the Denman–Beavers iteration, valid for any
    /// matrix with positive real eigenvalues (here `Σ_a Σ_b`, not symmetric).
    fn denman_beavers(a: &DMatrix<f64>) -> DMatrix<f64> {
        let n = a.nrows();
        let mut y = a.clone();
        let mut z = DMatrix::identity(n, n);
        for _ in 0..100 {
            let yi = y.clone().try_inverse().unwrap();
            let zi = z.clone().try_inverse().unwrap();
            y = (&y + zi) * 0.5;
            z = (&z + yi) * 0.5;
        }
        y
    }

    fn oracle(a: &Gaussian, b: &Gaussian) -> f64 {
        let r = denman_beavers(&(&a.cov * &b.cov));
        (&a.mean - &b.mean).norm_squared() + a.cov.trace() + b.cov.trace() - 2.0 * r.trace()
    }

    fn gauss(mean: [f64; 2], cov: [f64; 4]) -> Gaussian {
        Gaussian {
            mean: DVector::from_column_slice(&mean),
            cov: DMatrix::from_row_slice(2, 2, &cov),
        }
    }

    #[test]
    fn hand_gaussians_match_denman_beavers() {
        let cases = [
            (
                gauss([0.0, 0.0], [2.0, 0.3, 0.3, 1.0]),
                gauss([1.0, -0.5], [0.5, -0.1, -0.1, 1.5]),
            ),
            (
                gauss([3.0, 1.0], [1.0, 0.9, 0.9, 1.0]),
                gauss([0.0, 0.0], [4.0, 0.0, 0.0, 0.25]),
            ),
        ];
        for (a, b) in &cases {
            let got = frechet_distance(a, b).unwrap();
            assert!(
                (got - oracle(a, b)).abs() < 1e-9,
                "{got} vs {}",
                oracle(a, b)
            );
        }
    }

    #[test]
    fn scalar_closed_form() {
        // 1-D: (μa − μb)² + (σa − σb)²
        let a = Gaussian {
            mean: DVector::from_element(1, 1.0),
            cov: DMatrix::from_element(1, 1, 4.0),
        };
        let b = Gaussian {
            mean: DVector::from_element(1, -1.0),
            cov: DMatrix::from_element(1, 1, 1.0),
        };
        assert!((frechet_distance(&a, &b).unwrap() - 5.0).abs() < 1e-12);
    }

    fn normal_set(rng: &mut ChaCha8Rng, n: usize, shift: &[f64]) -> FeatureSet {
        let rows = (0..n)
            .map(|_| {
                shift
                    .iter()
                    .map(|m| {
                        let z: f64 = StandardNormal.sample(rng);
                        m + z
                    })
                    .collect()
            })
            .collect();
        FeatureSet::new(FeatureKind::Individual, rows).unwrap()
    }

    #[test]
    fn self_distance_and_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = normal_set(&mut rng, 50, &[0.0; 6]);
        let b = normal_set(&mut rng, 40, &[0.5; 6]);
        assert!(fid(&a, &a).unwrap() < 1e-6);
        assert!((fid(&a, &b).unwrap() - fid(&b, &a).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn shifted_normals() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mu = [1.0, -1.0, 0.5, 0.0];
        let a = normal_set(&mut rng, 5000, &[0.0; 4]);
        let b = normal_set(&mut rng, 5000, &mu);
        let want: f64 = mu.iter().map(|m| m * m).sum();
        let got = fid(&a, &b).unwrap();
        assert!((got - want).abs() < 0.1 * want, "{got} vs {want}");
    }

    #[test]
    fn rejects_bad_sets() {
        let one = FeatureSet::new(FeatureKind::Group, vec![vec![1.0, 2.0]]).unwrap();
        let two = FeatureSet::new(FeatureKind::Group, vec![vec![1.0], vec![2.0]]).unwrap();
        assert!(fid(&one, &one).is_err());
        assert!(fid(
            &two,
            &FeatureSet::new(FeatureKind::Group, vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap()
        )
        .is_err());
        assert!(FeatureSet::new(FeatureKind::Group, vec![vec![1.0], vec![1.0, 2.0]]).is_err());
    }
}
