//! Integration of per-frame root velocities into a global trajectory.
//!
//! Frame `f`'s root velocities describe the motion from frame `f` to `f + 1`.
//! The heading is advanced first, then the local ground-plane velocity is
//! rotated by the new heading, so the last frame's velocities are never used.

use crate::error::{Error, Result};
use crate::motion::{rotate_y, MotionSequence, Vec3};

/// Recovered global root path.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub positions: Vec<Vec3>,
    /// Heading about +Y in radians, counterclockwise seen from above.
    pub headings: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn last_position(&self) -> Vec3 {
        *self.positions.last().expect("trajectory is never empty")
    }

    pub fn last_heading(&self) -> f64 {
        *self.headings.last().expect("trajectory is never empty")
    }
}

/// Integrates root velocities starting at `seq.initial_position` with heading 0.
pub fn recover_trajectory(seq: &MotionSequence) -> Result<Trajectory> {
    recover_trajectory_from(seq, seq.initial_position, 0.0)
}

/// Integrates root velocities from an explicit start position and heading.
pub fn recover_trajectory_from(
    seq: &MotionSequence,
    start: Vec3,
    start_heading: f64,
) -> Result<Trajectory> {
    let Some(first) = seq.frames.first() else {
        return Err(Error::invalid(
            "cannot recover the trajectory of an empty sequence",
        ));
    };
    let n = seq.frames.len();
    let mut positions = Vec::with_capacity(n);
    let mut headings = Vec::with_capacity(n);
    let mut pos = Vec3::new(start.x, first.root_height, start.z);
    let mut heading = start_heading;
    positions.push(pos);
    headings.push(heading);
    for w in seq.frames.windows(2) {
        let (prev, cur) = (&w[0], &w[1]);
        heading += prev.root_angular_velocity;
        let step = rotate_y(
            heading,
            Vec3::new(prev.root_velocity_x, 0.0, prev.root_velocity_z),
        );
        pos = Vec3::new(pos.x + step.x, cur.root_height, pos.z + step.z);
        positions.push(pos);
        headings.push(heading);
    }
    if positions.iter().any(|p| !p.iter().all(|v| v.is_finite())) {
        return Err(Error::NonFinite("recovered trajectory".into()));
    }
    Ok(Trajectory {
        positions,
        headings,
    })
}

/// Inverse of [`recover_trajectory_from`]: per-frame `(angular, local x, local z)`
/// velocities that reproduce the given path. The last frame repeats the
/// previous frame's values (zero for a single frame).
pub fn root_velocities(positions: &[Vec3], headings: &[f64]) -> Vec<[f64; 3]> {
    assert_eq!(positions.len(), headings.len());
    let mut out: Vec<[f64; 3]> = positions
        .windows(2)
        .zip(headings.windows(2))
        .map(|(p, h)| {
            let delta = Vec3::new(p[1].x - p[0].x, 0.0, p[1].z - p[0].z);
            let local = rotate_y(-h[1], delta);
            [h[1] - h[0], local.x, local.z]
        })
        .collect();
    out.push(out.last().copied().unwrap_or([0.0; 3]));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::Pose;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn seq_from_velocities(vels: &[[f64; 3]], x: Vec3) -> MotionSequence {
        let frames = vels
            .iter()
            .map(|v| {
                let mut p = Pose::rest(vec![Vec3::zeros(); 2], 0.9);
                p.root_angular_velocity = v[0];
                p.root_velocity_x = v[1];
                p.root_velocity_z = v[2];
                p
            })
            .collect();
        MotionSequence::new(frames, 30.0, x).unwrap()
    }

    #[test]
    fn zero_velocity_stays_at_initial_xz() {
        let seq = seq_from_velocities(&[[0.0; 3]; 5], Vec3::new(1.0, 0.0, 2.0));
        let t = recover_trajectory(&seq).unwrap();
        for p in &t.positions {
            assert_eq!(*p, Vec3::new(1.0, 0.9, 2.0));
        }
    }

    #[test]
    fn straight_line_reaches_point_nine() {
        let seq = seq_from_velocities(&[[0.0, 0.0, 0.1]; 10], Vec3::zeros());
        let t = recover_trajectory(&seq).unwrap();
        assert_eq!(t.len(), 10);
        assert!((t.last_position().z - 0.9).abs() < 1e-12);
        assert!(t.last_position().x.abs() < 1e-12);
    }

    #[test]
    fn turn_then_walk_matches_hand_integration() {
        // frame 0 turns by pi/2; frames 1.. walk forward 0.1 in local z
        let mut vels = vec![[FRAC_PI_2, 0.0, 0.0]];
        vels.extend([[0.0, 0.0, 0.1]; 4]);
        let seq = seq_from_velocities(&vels, Vec3::zeros());
        let t = recover_trajectory(&seq).unwrap();

        // hand integration: heading after frame 0 is pi/2, so local +z maps to
        // world +x; step 0 moves nothing (turn only), steps 1..3 move 0.1 each.
        let mut x = 0.0;
        let mut z = 0.0;
        let mut h = 0.0f64;
        for v in &vels[..vels.len() - 1] {
            h += v[0];
            x += h.cos() * v[1] + h.sin() * v[2];
            z += -h.sin() * v[1] + h.cos() * v[2];
        }
        let end = t.last_position();
        assert!((end.x - x).abs() < 1e-12 && (end.z - z).abs() < 1e-12);
        assert!((end.x - 0.3).abs() < 1e-12 && end.z.abs() < 1e-12);
    }

    #[test]
    fn empty_sequence_errors() {
        let seq = MotionSequence {
            frames: vec![],
            fps: 30.0,
            initial_position: Vec3::zeros(),
        };
        assert!(recover_trajectory(&seq).is_err());
    }

    proptest! {
        #[test]
        fn velocities_roundtrip(
            vels in proptest::collection::vec((-0.5f64..0.5, -0.2f64..0.2, -0.2f64..0.2), 2..40),
            x0 in -5.0f64..5.0, z0 in -5.0f64..5.0,
        ) {
            let v: Vec<[f64; 3]> = vels.iter().map(|&(a, b, c)| [a, b, c]).collect();
            let seq = seq_from_velocities(&v, Vec3::new(x0, 0.0, z0));
            let t = recover_trajectory(&seq).unwrap();
            let back = root_velocities(&t.positions, &t.headings);
            for f in 0..v.len() - 1 {
                for k in 0..3 {
                    prop_assert!((back[f][k] - v[f][k]).abs() < 1e-9);
                }
            }
        }
    }
}
