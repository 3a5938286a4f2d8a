use std::ops::Range;

use rand::Rng;

use crate::error::{Error, Result};

/// Temperature and nucleus settings for motion-word sampling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sampling {
    /// 0 selects the argmax.
    pub temperature: f64,
    /// Smallest probability mass kept, in (0, 1].
    pub nucleus_p: f64,
}

impl Default for Sampling {
    fn default() -> Self {
        Self {
            temperature: 0.9,
            nucleus_p: 0.95,
        }
    }
}

impl Sampling {
    pub fn greedy() -> Self {
        Self {
            temperature: 0.0,
            nucleus_p: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(Error::invalid(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        if !(self.nucleus_p > 0.0 && self.nucleus_p <= 1.0) {
            return Err(Error::invalid(format!(
                "nucleus_p must be in (0, 1], got {}",
                self.nucleus_p
            )));
        }
        Ok(())
    }

    /// Draws an id from `allowed`, ignoring all mass outside it.
    pub fn sample<R: Rng>(
        &self,
        dist: &[f64],
        allowed: Range<usize>,
        rng: &mut R,
    ) -> Result<usize> {
        let p = dist.get(allowed.clone()).ok_or_else(|| {
            Error::Shape(format!(
                "distribution of {} words lacks ids {allowed:?}",
                dist.len()
            ))
        })?;
        let mass: f64 = p.iter().sum();
        if !(mass > 0.0) {
            return Err(Error::invalid(format!(
                "predictor puts no mass on motion ids {}..{}",
                allowed.start, allowed.end
            )));
        }
        // first maximal entry: lowest id wins ties
        let (best, &pmax) =
            p.iter().enumerate().fold(
                (0, &p[0]),
                |acc, (i, v)| if *v > *acc.1 { (i, v) } else { acc },
            );
        if self.temperature == 0.0 {
            return Ok(allowed.start + best);
        }
        let mut w: Vec<(usize, f64)> = p
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0.0)
            .map(|(i, &v)| (i, ((v.ln() - pmax.ln()) / self.temperature).exp()))
            .collect();
        let total: f64 = w.iter().map(|x| x.1).sum();
        w.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let mut kept = 0;
        let mut acc = 0.0;
        for (_, v) in &w {
            kept += 1;
            acc += v / total;
            if acc >= self.nucleus_p {
                break;
            }
        }
        w.truncate(kept);
        let kept_mass: f64 = w.iter().map(|x| x.1).sum();
        let mut u = rng.gen::<f64>() * kept_mass;
        for &(i, v) in &w {
            if u < v {
                return Ok(allowed.start + i);
            }
            u -= v;
        }
        Ok(allowed.start + w[w.len() - 1].0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn argmax_lowest_tie() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = Sampling::greedy();
        assert_eq!(
            s.sample(&[0.9, 0.05, 0.05, 0.0], 1..4, &mut rng).unwrap(),
            1
        );
        assert_eq!(s.sample(&[0.1, 0.3, 0.3, 0.3], 0..4, &mut rng).unwrap(), 1);
    }

    #[test]
    fn zero_motion_mass_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(Sampling::default()
            .sample(&[1.0, 0.0, 0.0], 1..3, &mut rng)
            .is_err());
    }

    #[test]
    fn nucleus_drops_tail() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = Sampling {
            temperature: 1.0,
            nucleus_p: 0.5,
        };
        for _ in 0..200 {
            assert_eq!(s.sample(&[0.1, 0.6, 0.3], 0..3, &mut rng).unwrap(), 1);
        }
    }

    #[test]
    fn frequencies_follow_distribution() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = Sampling {
            temperature: 1.0,
            nucleus_p: 1.0,
        };
        let n = 20000;
        let hits = (0..n)
            .filter(|_| s.sample(&[0.25, 0.75], 0..2, &mut rng).unwrap() == 1)
            .count();
        assert!((hits as f64 / n as f64 - 0.75).abs() < 0.02);
    }

    #[test]
    fn seeded_draws_repeat() {
        let s = Sampling::default();
        let d = [0.2, 0.3, 0.1, 0.4];
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50)
                .map(|_| s.sample(&d, 0..4, &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(run(9), run(9));
    }
}
