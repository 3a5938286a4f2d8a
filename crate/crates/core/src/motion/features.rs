use crate::error::{Error, Result};
use crate::motion::{global_joint_positions, MotionSequence, SkeletonSpec, Vec3};

/// Default contact height threshold, meters.
pub const DEFAULT_CONTACT_HEIGHT: f64 = 0.05;
/// Default contact speed threshold, meters/frame.
pub const DEFAULT_CONTACT_SPEED: f64 = 0.01;

/// Per-frame contact flags for four foot joints.
///
/// A foot is in contact when its global height is below `height_thresh` and its
/// finite-difference speed is below `speed_thresh`. Frame 0 uses the forward
/// difference, later frames the backward difference.
pub fn detect_foot_contacts(
    skeleton: &SkeletonSpec,
    seq: &MotionSequence,
    foot_joints: [usize; 4],
    height_thresh: f64,
    speed_thresh: f64,
) -> Result<Vec<[bool; 4]>> {
    if let Some(&bad) = foot_joints.iter().find(|&&j| j >= skeleton.joint_count()) {
        return Err(Error::OutOfRange(format!(
            "foot joint {bad} for a {}-joint skeleton",
            skeleton.joint_count()
        )));
    }
    let global = global_joint_positions(skeleton, seq)?;
    let n = global.len();
    Ok((0..n)
        .map(|f| {
            let (a, b) = match (f, n) {
                (_, 1) => (0, 0),
                (0, _) => (0, 1),
                _ => (f - 1, f),
            };
            let mut flags = [false; 4];
            for (k, &j) in foot_joints.iter().enumerate() {
                let speed = (global[b][j] - global[a][j]).norm();
                flags[k] = global[f][j].y < height_thresh && speed < speed_thresh;
            }
            flags
        })
        .collect())
}

/// Per-joint mean squared global velocity (m²/frame²).
pub fn kinetic_features(skeleton: &SkeletonSpec, seq: &MotionSequence) -> Result<Vec<f64>> {
    if seq.len() < 2 {
        return Err(Error::invalid("kinetic features need at least 2 frames"));
    }
    Ok(kinetic_from_global(&global_joint_positions(skeleton, seq)?))
}

/// Kinetic features of precomputed per-frame global joint positions.
pub fn kinetic_from_global(global: &[Vec<Vec3>]) -> Vec<f64> {
    let j = global.first().map_or(0, Vec::len);
    let steps = (global.len().max(2) - 1) as f64;
    let mut out = vec![0.0; j];
    for w in global.windows(2) {
        for (k, slot) in out.iter_mut().enumerate() {
            *slot += (w[1][k] - w[0][k]).norm_squared();
        }
    }
    out.iter_mut().for_each(|v| *v /= steps);
    out
}

/// Mean over joints of global joint speed, per frame (m/frame). Frame `f` uses
/// the displacement from `f - 1`; frame 0 copies frame 1.
pub fn mean_joint_speed(skeleton: &SkeletonSpec, seq: &MotionSequence) -> Result<Vec<f64>> {
    let global = global_joint_positions(skeleton, seq)?;
    if global.len() < 2 {
        return Ok(vec![0.0; global.len()]);
    }
    let j = skeleton.joint_count() as f64;
    let mut speeds: Vec<f64> = global
        .windows(2)
        .map(|w| {
            w[1].iter()
                .zip(&w[0])
                .map(|(a, b)| (a - b).norm())
                .sum::<f64>()
                / j
        })
        .collect();
    speeds.insert(0, speeds[0]);
    Ok(speeds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::{
        global_joint_positions_from, rotate_y, rotation_to_6d, rotation_y, Pose,
        DEFAULT_FOOT_JOINTS, DEFAULT_ROOT_HEIGHT,
    };
    use proptest::prelude::*;

    fn standing(frames: usize, root_height: f64) -> MotionSequence {
        let sk = SkeletonSpec::default_24();
        let pose = Pose::rest(vec![Vec3::zeros(); sk.joint_count()], root_height);
        MotionSequence::new(vec![pose; frames], 30.0, Vec3::zeros()).unwrap()
    }

    #[test]
    fn static_standing_feet_are_planted() {
        let sk = SkeletonSpec::default_24();
        let seq = standing(5, DEFAULT_ROOT_HEIGHT);
        let c = detect_foot_contacts(&sk, &seq, DEFAULT_FOOT_JOINTS, 0.05, 0.01).unwrap();
        assert!(c.iter().all(|f| f.iter().all(|&b| b)));
    }

    #[test]
    fn airborne_feet_have_no_contact() {
        let sk = SkeletonSpec::default_24();
        let seq = standing(5, DEFAULT_ROOT_HEIGHT + 1.0);
        let c = detect_foot_contacts(&sk, &seq, DEFAULT_FOOT_JOINTS, 0.05, 0.01).unwrap();
        assert!(c.iter().all(|f| f.iter().all(|&b| !b)));
    }

    #[test]
    fn sliding_foot_loses_contact() {
        // joint 0 is the planted foot; joint 1 pivots around it on a 0.5 m
        // radius, stepping a 0.1 m chord per frame
        let sk = SkeletonSpec::new(
            vec![None, Some(0)],
            vec![Vec3::zeros(), Vec3::new(0.0, 0.0, 0.5)],
        )
        .unwrap();
        let step = 2.0 * (0.1f64 / (2.0 * 0.5)).asin();
        let frames: Vec<Pose> = (0..6)
            .map(|f| {
                let mut p = Pose::rest(vec![Vec3::zeros(); 2], 0.0);
                p.joint_rotations[0] = rotation_to_6d(&rotation_y(step * f as f64));
                p
            })
            .collect();
        let seq = MotionSequence::new(frames, 30.0, Vec3::zeros()).unwrap();
        let global = global_joint_positions(&sk, &seq).unwrap();
        for w in global.windows(2) {
            assert!(((w[1][1] - w[0][1]).norm() - 0.1).abs() < 1e-12);
        }
        let c = detect_foot_contacts(&sk, &seq, [1, 0, 1, 0], 0.05, 0.01).unwrap();
        for flags in &c {
            assert_eq!(*flags, [false, true, false, true]);
        }
    }

    #[test]
    fn invalid_foot_index_errors() {
        let sk = SkeletonSpec::default_24();
        let seq = standing(2, 0.9);
        assert!(detect_foot_contacts(&sk, &seq, [0, 1, 2, 99], 0.05, 0.01).is_err());
    }

    #[test]
    fn static_sequence_has_zero_kinetic_features() {
        let sk = SkeletonSpec::default_24();
        let k = kinetic_features(&sk, &standing(4, 0.9)).unwrap();
        assert!(k.iter().all(|&v| v == 0.0));
        assert!(kinetic_features(&sk, &standing(1, 0.9)).is_err());
    }

    #[test]
    fn rigid_translation_gives_speed_squared() {
        let sk = SkeletonSpec::default_24();
        let mut seq = standing(6, 0.9);
        for p in &mut seq.frames {
            p.root_velocity_x = 0.03;
            p.root_velocity_z = -0.04;
        }
        let k = kinetic_features(&sk, &seq).unwrap();
        for v in k {
            assert!((v - 0.0025).abs() < 1e-12);
        }
    }

    #[test]
    fn oscillating_joint_matches_direct_sum() {
        let sk = SkeletonSpec::new(
            vec![None, Some(0)],
            vec![Vec3::zeros(), Vec3::new(0.0, 0.0, 0.5)],
        )
        .unwrap();
        let (amp, omega) = (0.7, 0.4);
        let angles: Vec<f64> = (0..20).map(|f| amp * (omega * f as f64).sin()).collect();
        let frames: Vec<Pose> = angles
            .iter()
            .map(|&a| {
                let mut p = Pose::rest(vec![Vec3::zeros(); 2], 1.0);
                p.joint_rotations[0] = rotation_to_6d(&rotation_y(a));
                p
            })
            .collect();
        let seq = MotionSequence::new(frames, 30.0, Vec3::zeros()).unwrap();
        let k = kinetic_features(&sk, &seq).unwrap();
        let pos: Vec<Vec3> = angles
            .iter()
            .map(|&a| rotate_y(a, Vec3::new(0.0, 0.0, 0.5)))
            .collect();
        let direct: f64 = pos
            .windows(2)
            .map(|w| (w[1] - w[0]).norm_squared())
            .sum::<f64>()
            / 19.0;
        assert_eq!(k[0], 0.0);
        assert!((k[1] - direct).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn kinetic_features_ignore_translation_and_heading(
            vels in proptest::collection::vec((-0.2f64..0.2, -0.05f64..0.05, -0.05f64..0.05), 3..12),
            shift in (-5.0f64..5.0, -5.0f64..5.0),
            heading in -3.0f64..3.0,
        ) {
            let sk = SkeletonSpec::default_24();
            let mut seq = standing(vels.len(), 0.9);
            for (p, v) in seq.frames.iter_mut().zip(&vels) {
                p.root_angular_velocity = v.0;
                p.root_velocity_x = v.1;
                p.root_velocity_z = v.2;
                p.joint_rotations[18] = rotation_to_6d(&rotation_y(v.0 * 3.0));
            }
            let base = kinetic_features(&sk, &seq).unwrap();
            let start = rotate_y(heading, Vec3::new(shift.0, 0.0, shift.1));
            let moved = global_joint_positions_from(&sk, &seq, start, heading).unwrap();
            let other = kinetic_from_global(&moved);
            for (a, b) in base.iter().zip(&other) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
