use std::f64::consts::{PI, TAU};
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::audio::{write_wav, AudioClip};
use crate::config::KeyValues;
use crate::dataset::{ClipEntry, DatasetManifest, Split};
use crate::error::{Error, Result};
use crate::motion::{
    detect_foot_contacts, forward_kinematics, root_velocities, rotation_to_6d, write_motion,
    MotionSequence, Pose, SkeletonSpec, Vec3, DEFAULT_CONTACT_HEIGHT, DEFAULT_CONTACT_SPEED,
    DEFAULT_FOOT_JOINTS, DEFAULT_ROOT_HEIGHT,
};

/// Local root pattern layered on top of the formation drift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Primitive {
    /// Small loop, one turn per eight beats.
    Circle,
    /// Out and back along a line over eight beats.
    Line,
    /// Side to side, one cycle per two beats.
    Sway,
    /// Turning in place, one turn per four beats.
    Spin,
}

impl FromStr for Primitive {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "circle" => Ok(Primitive::Circle),
            "line" => Ok(Primitive::Line),
            "sway" => Ok(Primitive::Sway),
            "spin" => Ok(Primitive::Spin),
            other => Err(Error::format(
                "primitives",
                format!("unknown primitive `{other}`"),
            )),
        }
    }
}

impl Primitive {
    pub fn name(&self) -> &'static str {
        match self {
            Primitive::Circle => "circle",
            Primitive::Line => "line",
            Primitive::Sway => "sway",
            Primitive::Spin => "spin",
        }
    }
}

/// Procedural group dance dataset.
///
/// Dancers start at distinct angles around the origin and drift toward a
/// ring of `formation_radius` while the whole formation rotates at
/// `orbit_speed`; each dancer adds one primitive. Every motion component is
/// stationary exactly on the click track's beats.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDatasetSpec {
    pub clips: usize,
    pub dancers_min: usize,
    pub dancers_max: usize,
    pub seconds: f64,
    pub fps: f64,
    pub sample_rate: u32,
    pub tempo_min: f64,
    pub tempo_max: f64,
    pub primitives: Vec<Primitive>,
    /// Maximum distance of a starting position from the origin, meters.
    pub spread: f64,
    pub formation_radius: f64,
    /// Radial approach rate toward the ring, 1/s.
    pub formation_pull: f64,
    /// Formation rotation rate, rad/s, counter-clockwise seen from above.
    pub orbit_speed: f64,
    /// Every `test_every`-th clip goes to the test split; 0 puts all in train.
    pub test_every: usize,
    pub seed: u64,
}

impl Default for SyntheticDatasetSpec {
    fn default() -> Self {
        Self {
            clips: 50,
            dancers_min: 2,
            dancers_max: 4,
            seconds: 8.0,
            fps: 30.0,
            sample_rate: 22050,
            tempo_min: 90.0,
            tempo_max: 130.0,
            primitives: vec![
                Primitive::Circle,
                Primitive::Line,
                Primitive::Sway,
                Primitive::Spin,
            ],
            spread: 2.5,
            formation_radius: 1.5,
            formation_pull: 0.5,
            orbit_speed: 0.25,
            test_every: 5,
            seed: 0,
        }
    }
}

const KEYS: [&str; 15] = [
    "clips",
    "dancers_min",
    "dancers_max",
    "seconds",
    "fps",
    "sample_rate",
    "tempo_min",
    "tempo_max",
    "primitives",
    "spread",
    "formation_radius",
    "formation_pull",
    "orbit_speed",
    "test_every",
    "seed",
];

impl SyntheticDatasetSpec {
    pub const KEYS: &'static [&'static str] = &KEYS;

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::invalid(m));
        if self.clips == 0 {
            return bad("clips must be at least 1".into());
        }
        if self.dancers_min == 0 || self.dancers_min > self.dancers_max {
            return bad(format!(
                "dancer range [{}, {}] is empty",
                self.dancers_min, self.dancers_max
            ));
        }
        if !(self.tempo_min > 0.0 && self.tempo_min <= self.tempo_max && self.tempo_max.is_finite())
        {
            return bad(format!(
                "tempo range [{}, {}] is empty",
                self.tempo_min, self.tempo_max
            ));
        }
        if self.primitives.is_empty() {
            return bad("no motion primitives".into());
        }
        if !(self.seconds > 0.0
            && self.fps > 0.0
            && self.seconds.is_finite()
            && self.fps.is_finite())
        {
            return bad("seconds and fps must be positive".into());
        }
        if (self.seconds * self.fps).round() < 2.0 {
            return bad("clips need at least 2 frames".into());
        }
        if self.sample_rate == 0 {
            return bad("sample_rate must be positive".into());
        }
        for (name, v) in [
            ("spread", self.spread),
            ("formation_radius", self.formation_radius),
            ("formation_pull", self.formation_pull),
            ("orbit_speed", self.orbit_speed),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        Ok(())
    }

    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        kv.reject_unknown(&KEYS)?;
        let d = Self::default();
        let primitives = match kv.raw("primitives") {
            Some(list) => list
                .split(',')
                .map(str::parse)
                .collect::<Result<Vec<_>>>()?,
            None => d.primitives.clone(),
        };
        let spec = Self {
            clips: kv.get_or("clips", d.clips)?,
            dancers_min: kv.get_or("dancers_min", d.dancers_min)?,
            dancers_max: kv.get_or("dancers_max", d.dancers_max)?,
            seconds: kv.get_or("seconds", d.seconds)?,
            fps: kv.get_or("fps", d.fps)?,
            sample_rate: kv.get_or("sample_rate", d.sample_rate)?,
            tempo_min: kv.get_or("tempo_min", d.tempo_min)?,
            tempo_max: kv.get_or("tempo_max", d.tempo_max)?,
            primitives,
            spread: kv.get_or("spread", d.spread)?,
            formation_radius: kv.get_or("formation_radius", d.formation_radius)?,
            formation_pull: kv.get_or("formation_pull", d.formation_pull)?,
            orbit_speed: kv.get_or("orbit_speed", d.orbit_speed)?,
            test_every: kv.get_or("test_every", d.test_every)?,
            seed: kv.get_or("seed", d.seed)?,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn frames(&self) -> usize {
        (self.seconds * self.fps).round() as usize
    }
}

/// One generated clip held in memory.
#[derive(Debug, Clone)]
pub struct SyntheticClip {
    pub id: String,
    pub split: Split,
    pub audio: AudioClip,
    /// Beat times of the click track, seconds.
    pub beats: Vec<f64>,
    pub dancers: Vec<MotionSequence>,
    pub primitives: Vec<Primitive>,
}

/// Per-dancer style drawn once per clip.
struct Style {
    primitive: Primitive,
    home: [f64; 2],
    size: f64,
    direction: f64,
    arm: f64,
    leg: f64,
    twist: f64,
}

/// Builds one clip; clip `index` draws from its own random stream, so clips
/// are independent of each other and of evaluation order.
pub fn synthesize_clip(spec: &SyntheticDatasetSpec, index: usize) -> Result<SyntheticClip> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(index as u64);
    let bpm = rng.gen_range(spec.tempo_min..=spec.tempo_max);
    let period = 60.0 / bpm;
    let t0 = rng.gen_range(0.0..period);
    let n = rng.gen_range(spec.dancers_min..=spec.dancers_max);

    // distinct angles: evenly spaced with jitter, shuffled across dancer indices
    let offset = rng.gen_range(0.0..TAU);
    let mut angles: Vec<f64> = (0..n)
        .map(|i| offset + TAU * (i as f64 + rng.gen_range(-0.25..0.25)) / n as f64)
        .collect();
    for i in (1..n).rev() {
        angles.swap(i, rng.gen_range(0..=i));
    }
    let styles: Vec<Style> = angles
        .iter()
        .map(|&a| {
            let r = if n == 1 {
                rng.gen_range(0.0..=spec.spread)
            } else {
                rng.gen_range(0.4 * spec.spread..=spec.spread)
            };
            Style {
                primitive: spec.primitives[rng.gen_range(0..spec.primitives.len())],
                home: [r * a.cos(), r * a.sin()],
                size: rng.gen_range(0.5..1.0),
                direction: rng.gen_range(0.0..TAU),
                arm: rng.gen_range(0.3..1.2),
                leg: rng.gen_range(0.1..0.4),
                twist: rng.gen_range(0.0..0.3),
            }
        })
        .collect();

    let skeleton = SkeletonSpec::default_24();
    let dancers = styles
        .iter()
        .map(|s| dancer_motion(spec, &skeleton, s, period, t0))
        .collect::<Result<Vec<_>>>()?;
    let tone = rng.gen_range(110.0..440.0);
    let (audio, beats) = click_track(spec, period, t0, tone)?;
    let split = if spec.test_every > 0 && index % spec.test_every == spec.test_every - 1 {
        Split::Test
    } else {
        Split::Train
    };
    Ok(SyntheticClip {
        id: format!("clip_{index:04}"),
        split,
        audio,
        beats,
        dancers,
        primitives: styles.iter().map(|s| s.primitive).collect(),
    })
}

/// Root offset (x, z) from the primitive at (warped) time `t`, zero at
/// `t = 0`, and the heading.
fn primitive_offset(s: &Style, t: f64, period: f64) -> ([f64; 2], f64) {
    let (ux, uz) = (s.direction.cos(), s.direction.sin());
    match s.primitive {
        Primitive::Circle => {
            let rho = 0.4 * s.size;
            let w = TAU / (8.0 * period);
            let phi = s.direction;
            (
                [
                    rho * ((w * t + phi).cos() - phi.cos()),
                    rho * ((w * t + phi).sin() - phi.sin()),
                ],
                0.0,
            )
        }
        Primitive::Line => {
            let a = 0.8 * s.size * 0.5 * (1.0 - (TAU * t / (8.0 * period)).cos());
            ([a * ux, a * uz], 0.0)
        }
        Primitive::Sway => {
            let a = 0.25 * s.size * (PI * t / period).sin();
            ([-a * uz, a * ux], 0.0)
        }
        Primitive::Spin => ([0.0, 0.0], TAU * t / (4.0 * period)),
    }
}

fn dancer_motion(
    spec: &SyntheticDatasetSpec,
    skeleton: &SkeletonSpec,
    s: &Style,
    period: f64,
    t0: f64,
) -> Result<MotionSequence> {
    let frames = spec.frames();
    let dt = 1.0 / spec.fps;
    // formation drift, integrated with forward Euler at the frame rate
    let mut base = s.home;
    let mut positions = Vec::with_capacity(frames);
    let mut headings = Vec::with_capacity(frames);
    // warped clock: advances at rate 1 − cos(2π(t − t0)/P), pausing on beats;
    // the formation drift is gated by the same rate
    let warp = |t: f64| t - period / TAU * (TAU * (t - t0) / period).sin();
    for f in 0..frames {
        let t = f as f64 * dt;
        let (o, h) = primitive_offset(s, warp(t) - warp(0.0), period);
        positions.push(Vec3::new(base[0] + o[0], 0.0, base[1] + o[1]));
        headings.push(h);
        let r = base[0].hypot(base[1]);
        let radial = if r > 0.0 {
            spec.formation_pull * (spec.formation_radius - r) / r
        } else {
            0.0
        };
        let vx = radial * base[0] - spec.orbit_speed * base[1];
        let vz = radial * base[1] + spec.orbit_speed * base[0];
        let rate = 1.0 - (TAU * (t - t0) / period).cos();
        base = [base[0] + rate * vx * dt, base[1] + rate * vz * dt];
    }
    let vels = root_velocities(&positions, &headings);

    let mut poses = Vec::with_capacity(frames);
    for (f, v) in vels.iter().enumerate() {
        let t = f as f64 * dt;
        // two-beat cycles whose derivatives vanish only on beats
        let pulse = 0.5 * (1.0 - (PI * (t - t0) / period).cos());
        let sway = (PI * (t - t0) / period).cos();
        let mut rot = vec![nalgebra::Matrix3::identity(); skeleton.joint_count()];
        rot[16] = axis_rotation(Vec3::z(), s.arm * pulse);
        rot[17] = axis_rotation(Vec3::z(), -s.arm * pulse);
        rot[18] = axis_rotation(Vec3::y(), 0.5 * s.arm * pulse);
        rot[19] = axis_rotation(Vec3::y(), -0.5 * s.arm * pulse);
        rot[1] = axis_rotation(Vec3::x(), -s.leg * pulse);
        rot[2] = axis_rotation(Vec3::x(), -s.leg * pulse);
        rot[4] = axis_rotation(Vec3::x(), 2.0 * s.leg * pulse);
        rot[5] = axis_rotation(Vec3::x(), 2.0 * s.leg * pulse);
        rot[3] = axis_rotation(Vec3::y(), s.twist * sway);
        let r6: Vec<[f64; 6]> = rot.iter().map(rotation_to_6d).collect();
        let joints = forward_kinematics(skeleton, &r6, Vec3::zeros())?;
        let mut pose = Pose::rest(joints, DEFAULT_ROOT_HEIGHT - 0.08 * s.leg * pulse);
        pose.joint_rotations = r6;
        pose.root_angular_velocity = v[0];
        pose.root_velocity_x = v[1];
        pose.root_velocity_z = v[2];
        poses.push(pose);
    }
    for f in 0..frames {
        let next = if f + 1 < frames { f + 1 } else { f };
        let prev = if f + 1 < frames {
            f
        } else {
            f.saturating_sub(1)
        };
        let jv: Vec<Vec3> = poses[next]
            .joint_positions
            .iter()
            .zip(&poses[prev].joint_positions)
            .map(|(a, b)| a - b)
            .collect();
        poses[f].joint_velocities = jv;
    }
    let mut seq = MotionSequence::new(poses, spec.fps, Vec3::new(s.home[0], 0.0, s.home[1]))?;
    let contacts = detect_foot_contacts(
        skeleton,
        &seq,
        DEFAULT_FOOT_JOINTS,
        DEFAULT_CONTACT_HEIGHT,
        DEFAULT_CONTACT_SPEED,
    )?;
    for (p, c) in seq.frames.iter_mut().zip(contacts) {
        p.foot_contacts = c;
    }
    Ok(seq)
}

fn axis_rotation(axis: Vec3, angle: f64) -> nalgebra::Matrix3<f64> {
    *nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle).matrix()
}

/// A quiet sustained tone with a decaying 1 kHz click on every beat.
fn click_track(
    spec: &SyntheticDatasetSpec,
    period: f64,
    t0: f64,
    tone: f64,
) -> Result<(AudioClip, Vec<f64>)> {
    let sr = f64::from(spec.sample_rate);
    let n = (spec.seconds * sr).round() as usize;
    let mut samples: Vec<f64> = (0..n)
        .map(|k| 0.05 * (TAU * tone * k as f64 / sr).sin())
        .collect();
    let mut beats = Vec::new();
    let mut b = t0;
    while b < spec.seconds {
        beats.push(b);
        let start = (b * sr).round() as usize;
        let len = (0.03 * sr) as usize;
        for k in 0..len.min(n.saturating_sub(start)) {
            let t = k as f64 / sr;
            samples[start + k] += 0.8 * (-t / 0.006).exp() * (TAU * 1000.0 * t).sin();
        }
        b += period;
    }
    Ok((AudioClip::new(samples, spec.sample_rate)?, beats))
}

/// Writes every clip under `out` and returns the manifest, also saved as
/// `out/manifest.tsv`.
pub fn generate_synthetic_dataset(
    spec: &SyntheticDatasetSpec,
    out: &Path,
) -> Result<DatasetManifest> {
    spec.validate()?;
    std::fs::create_dir_all(out)?;
    let entries = (0..spec.clips)
        .into_par_iter()
        .map(|i| {
            let clip = synthesize_clip(spec, i)?;
            let dir = out.join(&clip.id);
            std::fs::create_dir_all(&dir)?;
            write_wav(&dir.join("audio.wav"), &clip.audio)?;
            let mut motions = Vec::with_capacity(clip.dancers.len());
            for (d, seq) in clip.dancers.iter().enumerate() {
                let rel = format!("{}/dancer_{d}.motion", clip.id);
                write_motion(&out.join(&rel), seq)?;
                motions.push(rel.into());
            }
            Ok(ClipEntry {
                id: clip.id.clone(),
                split: clip.split,
                audio: format!("{}/audio.wav", clip.id).into(),
                motions,
                positions: clip
                    .dancers
                    .iter()
                    .map(|s| [s.initial_position.x, s.initial_position.z])
                    .collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = DatasetManifest::new(out.to_path_buf(), entries)?;
    manifest.save(&out.join("manifest.tsv"))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::recover_trajectory;

    fn circle_spec() -> SyntheticDatasetSpec {
        SyntheticDatasetSpec {
            clips: 1,
            dancers_min: 1,
            dancers_max: 1,
            primitives: vec![Primitive::Circle],
            formation_pull: 0.0,
            orbit_speed: 0.0,
            seconds: 16.0,
            ..Default::default()
        }
    }

    #[test]
    fn circle_primitive_traces_a_circle() {
        let clip = synthesize_clip(&circle_spec(), 0).unwrap();
        let traj = recover_trajectory(&clip.dancers[0]).unwrap();
        let pts: Vec<[f64; 2]> = traj.positions.iter().map(|p| [p.x, p.z]).collect();
        // the clip spans at least one full loop, so the centroid of the
        // sampled loop lies near the centre; fit with three spread points
        let k = pts.len() / 3;
        let c = circumcenter(pts[0], pts[k], pts[2 * k]);
        let r = dist(c, pts[0]);
        assert!(r > 0.1);
        for p in &pts {
            assert!((dist(c, *p) - r).abs() < 1e-3, "{} vs {r}", dist(c, *p));
        }
    }

    fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
        (a[0] - b[0]).hypot(a[1] - b[1])
    }

    fn circumcenter(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> [f64; 2] {
        let d = 2.0 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]));
        let sq = |p: [f64; 2]| p[0] * p[0] + p[1] * p[1];
        [
            (sq(a) * (b[1] - c[1]) + sq(b) * (c[1] - a[1]) + sq(c) * (a[1] - b[1])) / d,
            (sq(a) * (c[0] - b[0]) + sq(b) * (a[0] - c[0]) + sq(c) * (b[0] - a[0])) / d,
        ]
    }

    #[test]
    fn dancer_range_is_respected() {
        let spec = SyntheticDatasetSpec {
            clips: 6,
            dancers_min: 2,
            dancers_max: 2,
            seconds: 1.0,
            ..Default::default()
        };
        for i in 0..spec.clips {
            assert_eq!(synthesize_clip(&spec, i).unwrap().dancers.len(), 2);
        }
    }

    #[test]
    fn clips_are_deterministic_and_distinct() {
        let spec = SyntheticDatasetSpec {
            seconds: 1.0,
            ..Default::default()
        };
        let a = synthesize_clip(&spec, 3).unwrap();
        let b = synthesize_clip(&spec, 3).unwrap();
        assert_eq!(a.dancers, b.dancers);
        assert_eq!(a.audio, b.audio);
        assert_ne!(synthesize_clip(&spec, 4).unwrap().dancers[0], a.dancers[0]);
    }

    #[test]
    fn joint_speed_rests_on_beats() {
        let sk = SkeletonSpec::default_24();
        for i in 0..5 {
            let clip = synthesize_clip(&SyntheticDatasetSpec::default(), i).unwrap();
            for d in &clip.dancers {
                let beats = crate::metrics::motion_beats(&sk, d).unwrap();
                let ba = crate::metrics::beat_alignment(&clip.beats, &beats, 0.3).unwrap();
                assert!(ba > 0.9, "clip {i}: {ba}");
            }
        }
    }

    #[test]
    fn spec_from_config() {
        let kv = KeyValues::parse("clips=3\nprimitives=circle,spin\nseed=9", "synth").unwrap();
        let s = SyntheticDatasetSpec::from_key_values(&kv).unwrap();
        assert_eq!(s.primitives, vec![Primitive::Circle, Primitive::Spin]);
        assert_eq!((s.clips, s.seed), (3, 9));
        let kv = KeyValues::parse("dancers_min=3\ndancers_max=2", "synth").unwrap();
        assert!(SyntheticDatasetSpec::from_key_values(&kv).is_err());
        let kv = KeyValues::parse("primitives=moonwalk", "synth").unwrap();
        assert!(SyntheticDatasetSpec::from_key_values(&kv).is_err());
    }

    #[test]
    fn same_seed_writes_identical_files() {
        let spec = SyntheticDatasetSpec {
            clips: 3,
            seconds: 1.0,
            ..Default::default()
        };
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let ma = generate_synthetic_dataset(&spec, a.path()).unwrap();
        generate_synthetic_dataset(&spec, b.path()).unwrap();
        for e in ma.entries() {
            for p in std::iter::once(&e.audio).chain(&e.motions) {
                assert_eq!(
                    std::fs::read(a.path().join(p)).unwrap(),
                    std::fs::read(b.path().join(p)).unwrap()
                );
            }
        }
        let loaded = DatasetManifest::load(&a.path().join("manifest.tsv")).unwrap();
        assert_eq!(loaded.entries(), ma.entries());
        let clip = loaded.load_clip(&loaded.entries()[0]).unwrap();
        assert_eq!(clip.dancers.len(), ma.entries()[0].motions.len());
    }
}
