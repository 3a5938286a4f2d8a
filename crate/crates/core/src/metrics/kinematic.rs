use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::audio::{pick_peaks, MIN_BEAT_GAP};
use crate::error::{Error, Result};
use crate::metrics::FeatureSet;
use crate::motion::{mean_joint_speed, recover_trajectory, MotionSequence, SkeletonSpec};

/// Mean Euclidean distance between rows over `sample_pairs` seeded random
/// distinct pairs, or over all pairs when there are no more than that (or
/// `sample_pairs` is 0).
pub fn diversity(set: &FeatureSet, sample_pairs: usize, seed: u64) -> Result<f64> {
    let n = set.len();
    if n < 2 {
        return Err(Error::invalid(format!(
            "diversity needs at least 2 rows, got {n}"
        )));
    }
    let rows = set.rows();
    let dist = |i: usize, j: usize| -> f64 {
        rows[i]
            .iter()
            .zip(&rows[j])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    };
    let all = n * (n - 1) / 2;
    if sample_pairs == 0 || all <= sample_pairs {
        let mut s = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                s += dist(i, j);
            }
        }
        return Ok(s / all as f64);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = 0.0;
    for _ in 0..sample_pairs {
        let i = rng.gen_range(0..n);
        let mut j = rng.gen_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        s += dist(i, j);
    }
    Ok(s / sample_pairs as f64)
}

/// Mean over audio beats of `exp(−Δt²/(2σ²))`, with `Δt` the distance to the
/// nearest motion beat; 0 when there are no motion beats.
pub fn beat_alignment(audio_beats: &[f64], motion_beats: &[f64], sigma: f64) -> Result<f64> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::invalid(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    if audio_beats.is_empty() {
        return Err(Error::invalid(
            "beat alignment needs at least one audio beat",
        ));
    }
    if motion_beats.is_empty() {
        return Ok(0.0);
    }
    let s: f64 = audio_beats
        .iter()
        .map(|a| {
            let d = motion_beats
                .iter()
                .map(|m| (m - a).abs())
                .fold(f64::INFINITY, f64::min);
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .sum();
    Ok(s / audio_beats.len() as f64)
}

/// Times (s) of salient local minima of mean joint speed, picked with the
/// audio beat rule applied to the negated speed.
pub fn motion_beats(skeleton: &SkeletonSpec, seq: &MotionSequence) -> Result<Vec<f64>> {
    let speed = mean_joint_speed(skeleton, seq)?;
    let neg: Vec<f64> = speed.iter().map(|v| -v).collect();
    let times: Vec<f64> = (0..speed.len()).map(|f| f as f64 / seq.fps).collect();
    Ok(pick_peaks(&neg, &times, MIN_BEAT_GAP))
}

/// Per-frame root (x, z) of each dancer.
pub fn root_paths(group: &[MotionSequence]) -> Result<Vec<Vec<[f64; 2]>>> {
    group
        .iter()
        .map(|s| {
            Ok(recover_trajectory(s)?
                .positions
                .iter()
                .map(|p| [p.x, p.z])
                .collect())
        })
        .collect()
}

fn check_paths(paths: &[Vec<[f64; 2]>]) -> Result<usize> {
    if paths.len() < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 dancers, got {}",
            paths.len()
        )));
    }
    let f = paths[0].len();
    if f == 0 || paths.iter().any(|p| p.len() != f) {
        return Err(Error::Shape("dancers differ in frame count".into()));
    }
    Ok(f)
}

/// Fraction of frames in which some pair of paths is closer than `radius`.
pub fn tif_from_paths(paths: &[Vec<[f64; 2]>], radius: f64) -> Result<f64> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::invalid(format!(
            "collision radius must be positive, got {radius}"
        )));
    }
    let f = check_paths(paths)?;
    let hits = (0..f)
        .filter(|&t| {
            (0..paths.len())
                .any(|i| (i + 1..paths.len()).any(|j| dist(paths[i][t], paths[j][t]) < radius))
        })
        .count();
    Ok(hits as f64 / f as f64)
}

/// Trajectory intersection frequency of a group, on recovered root paths.
pub fn tif(group: &[MotionSequence], radius: f64) -> Result<f64> {
    tif_from_paths(&root_paths(group)?, radius)
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Mean over dancers of per-dancer kinetic features, followed by the mean,
/// min and max over frames and pairs of inter-dancer root distance (zeros for
/// a solo clip).
pub fn group_features(skeleton: &SkeletonSpec, group: &[MotionSequence]) -> Result<Vec<f64>> {
    if group.is_empty() {
        return Err(Error::invalid("group has no dancers"));
    }
    let mut out: Vec<f64> = Vec::new();
    for s in group {
        let k = crate::motion::kinetic_features(skeleton, s)?;
        if out.is_empty() {
            out = k;
        } else {
            out.iter_mut().zip(&k).for_each(|(a, b)| *a += b);
        }
    }
    out.iter_mut().for_each(|v| *v /= group.len() as f64);
    if group.len() < 2 {
        out.extend([0.0; 3]);
        return Ok(out);
    }
    let paths = root_paths(group)?;
    let f = check_paths(&paths)?;
    let (mut sum, mut lo, mut hi, mut n) = (0.0, f64::INFINITY, 0.0f64, 0usize);
    for t in 0..f {
        for i in 0..paths.len() {
            for j in i + 1..paths.len() {
                let d = dist(paths[i][t], paths[j][t]);
                sum += d;
                lo = lo.min(d);
                hi = hi.max(d);
                n += 1;
            }
        }
    }
    out.extend([sum / n as f64, lo, hi]);
    Ok(out)
}
