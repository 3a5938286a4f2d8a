use std::fmt::Write as _;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::config::KeyValues;
use crate::error::{Error, Result};
use crate::metrics::{
    beat_alignment, diversity, fid, group_features, motion_beats, tif, FeatureKind, FeatureSet,
};
use crate::motion::{kinetic_features, MotionSequence, SkeletonSpec};

/// Identifies the group feature definition; part of every report hash.
pub const GROUP_FEATURE_VERSION: &str = "kinetic-mean+root-distance-v1";

/// Evaluation constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    /// Beat alignment kernel width, seconds.
    pub sigma: f64,
    /// TIF collision radius, meters.
    pub collision_radius: f64,
    pub diversity_pairs: usize,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            sigma: 0.3,
            collision_radius: 0.5,
            diversity_pairs: 1000,
            seed: 0,
        }
    }
}

impl EvalConfig {
    pub const KEYS: &'static [&'static str] =
        &["sigma", "collision_radius", "diversity_pairs", "seed"];

    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        kv.reject_unknown(Self::KEYS)?;
        let d = Self::default();
        Ok(Self {
            sigma: kv.get_or("sigma", d.sigma)?,
            collision_radius: kv.get_or("collision_radius", d.collision_radius)?,
            diversity_pairs: kv.get_or("diversity_pairs", d.diversity_pairs)?,
            seed: kv.get_or("seed", d.seed)?,
        })
    }

    pub fn render(&self) -> String {
        format!(
            "group_features={GROUP_FEATURE_VERSION}\nsigma={}\ncollision_radius={}\ndiversity_pairs={}\nseed={}\n",
            self.sigma, self.collision_radius, self.diversity_pairs, self.seed
        )
    }

    /// First 16 hex digits of the SHA-256 of [`EvalConfig::render`].
    pub fn hash(&self) -> String {
        Sha256::digest(self.render().as_bytes())
            .iter()
            .take(8)
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub fid_group: f64,
    pub fid_individual: f64,
    pub diversity_group: f64,
    pub diversity_individual: f64,
    pub beat_alignment: f64,
    pub tif: f64,
    pub config: EvalConfig,
}

impl MetricsReport {
    fn metrics(&self) -> [(&'static str, f64); 6] {
        [
            ("fid_group", self.fid_group),
            ("fid_individual", self.fid_individual),
            ("diversity_group", self.diversity_group),
            ("diversity_individual", self.diversity_individual),
            ("beat_alignment", self.beat_alignment),
            ("tif", self.tif),
        ]
    }

    /// `key=value` block: the evaluation settings, then the metrics.
    pub fn render_key_values(&self) -> String {
        let mut s = self.config.render();
        let _ = writeln!(s, "config_hash={}", self.config.hash());
        for (k, v) in self.metrics() {
            let _ = writeln!(s, "{k}={v:.6}");
        }
        s
    }

    /// Tab-separated `name value config_hash`, one metric per line.
    pub fn render_table(&self) -> String {
        let hash = self.config.hash();
        let mut s = String::from("metric\tvalue\tconfig_hash\n");
        for (k, v) in self.metrics() {
            let _ = writeln!(s, "{k}\t{v:.6}\t{hash}");
        }
        s
    }
}

/// A generated clip with the beats of the music it was generated for.
#[derive(Debug, Clone)]
pub struct EvalClip {
    pub dancers: Vec<MotionSequence>,
    pub audio_beats: Vec<f64>,
}

struct ClipFeatures {
    individual: Vec<Vec<f64>>,
    group: Vec<f64>,
}

fn clip_features(skeleton: &SkeletonSpec, dancers: &[MotionSequence]) -> Result<ClipFeatures> {
    Ok(ClipFeatures {
        individual: dancers
            .iter()
            .map(|d| kinetic_features(skeleton, d))
            .collect::<Result<_>>()?,
        group: group_features(skeleton, dancers)?,
    })
}

fn feature_sets(
    skeleton: &SkeletonSpec,
    clips: &[&[MotionSequence]],
) -> Result<(FeatureSet, FeatureSet)> {
    let feats: Vec<ClipFeatures> = clips
        .par_iter()
        .map(|c| clip_features(skeleton, c))
        .collect::<Result<_>>()?;
    let individual = feats
        .iter()
        .flat_map(|f| f.individual.iter().cloned())
        .collect();
    let group = feats.into_iter().map(|f| f.group).collect();
    Ok((
        FeatureSet::new(FeatureKind::Individual, individual)?,
        FeatureSet::new(FeatureKind::Group, group)?,
    ))
}

/// Compares generated clips against real ones.
///
/// Beat alignment averages over every generated dancer of clips that have
/// audio beats; TIF averages over generated clips with at least two dancers.
pub fn evaluate(
    skeleton: &SkeletonSpec,
    real: &[Vec<MotionSequence>],
    generated: &[EvalClip],
    config: &EvalConfig,
) -> Result<MetricsReport> {
    if real.len() < 2 || generated.len() < 2 {
        return Err(Error::invalid(format!(
            "evaluation needs at least 2 real and 2 generated clips, got {} and {}",
            real.len(),
            generated.len()
        )));
    }
    let real_refs: Vec<&[MotionSequence]> = real.iter().map(Vec::as_slice).collect();
    let gen_refs: Vec<&[MotionSequence]> = generated.iter().map(|c| c.dancers.as_slice()).collect();
    let (real_ind, real_grp) = feature_sets(skeleton, &real_refs)?;
    let (gen_ind, gen_grp) = feature_sets(skeleton, &gen_refs)?;

    let ba: Vec<f64> = generated
        .par_iter()
        .filter(|c| !c.audio_beats.is_empty())
        .map(|c| {
            c.dancers
                .iter()
                .map(|d| beat_alignment(&c.audio_beats, &motion_beats(skeleton, d)?, config.sigma))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    if ba.is_empty() {
        return Err(Error::invalid("no generated clip has audio beats"));
    }
    let tifs: Vec<f64> = generated
        .par_iter()
        .filter(|c| c.dancers.len() >= 2)
        .map(|c| tif(&c.dancers, config.collision_radius))
        .collect::<Result<_>>()?;

    Ok(MetricsReport {
        fid_group: fid(&real_grp, &gen_grp)?,
        fid_individual: fid(&real_ind, &gen_ind)?,
        diversity_group: diversity(&gen_grp, config.diversity_pairs, config.seed)?,
        diversity_individual: diversity(&gen_ind, config.diversity_pairs, config.seed)?,
        beat_alignment: ba.iter().sum::<f64>() / ba.len() as f64,
        tif: if tifs.is_empty() {
            0.0
        } else {
            tifs.iter().sum::<f64>() / tifs.len() as f64
        },
        config: *config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_tracks_settings() {
        let a = EvalConfig::default();
        let b = EvalConfig { sigma: 0.2, ..a };
        assert_eq!(a.hash().len(), 16);
        assert_eq!(a.hash(), EvalConfig::default().hash());
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn table_has_one_line_per_metric() {
        let r = MetricsReport {
            fid_group: 1.0,
            fid_individual: 2.0,
            diversity_group: 3.0,
            diversity_individual: 4.0,
            beat_alignment: 0.5,
            tif: 0.25,
            config: EvalConfig::default(),
        };
        let t = r.render_table();
        assert_eq!(t.lines().count(), 7);
        assert!(t.contains(&format!("tif\t0.250000\t{}", r.config.hash())));
        let kv = KeyValues::parse(&r.render_key_values(), "report").unwrap();
        assert_eq!(kv.get::<f64>("beat_alignment").unwrap(), Some(0.5));
    }
}
