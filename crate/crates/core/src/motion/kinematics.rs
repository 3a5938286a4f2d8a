use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::motion::{recover_trajectory_from, MotionSequence, SkeletonSpec, Vec3};

const DEGENERATE_EPS: f64 = 1e-8;

/// Rotation about +Y, counterclockwise when viewed from above.
pub fn rotation_y(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rotate_y(angle: f64, v: Vec3) -> Vec3 {
    rotation_y(angle) * v
}

/// Converts the 6D form `[a1, a2]` (two column vectors) to a rotation matrix by
/// Gram-Schmidt and a cross product.
pub fn rotation_from_6d(r: &[f64; 6]) -> Result<Matrix3<f64>> {
    let a1 = Vec3::new(r[0], r[1], r[2]);
    let a2 = Vec3::new(r[3], r[4], r[5]);
    let n1 = a1.norm();
    if !(n1 > DEGENERATE_EPS) {
        return Err(Error::invalid("6D rotation has a zero first column"));
    }
    let b1 = a1 / n1;
    let ortho = a2 - b1 * b1.dot(&a2);
    let n2 = ortho.norm();
    if !(n2 > DEGENERATE_EPS * a2.norm().max(1.0)) {
        return Err(Error::invalid("6D rotation columns are zero or parallel"));
    }
    let b2 = ortho / n2;
    let b3 = b1.cross(&b2);
    Ok(Matrix3::from_columns(&[b1, b2, b3]))
}

pub fn rotation_to_6d(m: &Matrix3<f64>) -> [f64; 6] {
    [
        m[(0, 0)],
        m[(1, 0)],
        m[(2, 0)],
        m[(0, 1)],
        m[(1, 1)],
        m[(2, 1)],
    ]
}

/// Global joint positions from local 6D rotations; joint 0 sits at `root_position`.
pub fn forward_kinematics(
    skeleton: &SkeletonSpec,
    rotations: &[[f64; 6]],
    root_position: Vec3,
) -> Result<Vec<Vec3>> {
    forward_kinematics_oriented(skeleton, rotations, &Matrix3::identity(), root_position)
}

/// Like [`forward_kinematics`] with an extra world rotation applied before the
/// root's local rotation (used for the root heading).
pub fn forward_kinematics_oriented(
    skeleton: &SkeletonSpec,
    rotations: &[[f64; 6]],
    orientation: &Matrix3<f64>,
    root_position: Vec3,
) -> Result<Vec<Vec3>> {
    let j = skeleton.joint_count();
    if rotations.len() != j {
        return Err(Error::Shape(format!(
            "{} rotations for a {j}-joint skeleton",
            rotations.len()
        )));
    }
    let mut global_rot = Vec::with_capacity(j);
    let mut global_pos = Vec::with_capacity(j);
    for (joint, r6) in rotations.iter().enumerate() {
        let local =
            rotation_from_6d(r6).map_err(|e| Error::invalid(format!("joint {joint}: {e}")))?;
        match skeleton.parent(joint) {
            None => {
                global_rot.push(orientation * local);
                global_pos.push(root_position);
            }
            Some(p) => {
                let parent_rot: Matrix3<f64> = global_rot[p];
                global_pos.push(global_pos[p] + parent_rot * skeleton.offset(joint));
                global_rot.push(parent_rot * local);
            }
        }
    }
    Ok(global_pos)
}

/// Per-frame global joint positions: recovered root path plus heading-rotated
/// forward kinematics.
pub fn global_joint_positions(
    skeleton: &SkeletonSpec,
    seq: &MotionSequence,
) -> Result<Vec<Vec<Vec3>>> {
    global_joint_positions_from(skeleton, seq, seq.initial_position, 0.0)
}

/// [`global_joint_positions`] with an explicit start position and heading.
pub fn global_joint_positions_from(
    skeleton: &SkeletonSpec,
    seq: &MotionSequence,
    start: Vec3,
    start_heading: f64,
) -> Result<Vec<Vec<Vec3>>> {
    if seq.joint_count() != skeleton.joint_count() {
        return Err(Error::Shape(format!(
            "sequence has {} joints, skeleton {}",
            seq.joint_count(),
            skeleton.joint_count()
        )));
    }
    let traj = recover_trajectory_from(seq, start, start_heading)?;
    seq.frames
        .iter()
        .zip(traj.positions.iter().zip(&traj.headings))
        .map(|(pose, (pos, &heading))| {
            forward_kinematics_oriented(skeleton, &pose.joint_rotations, &rotation_y(heading), *pos)
        })
        .collect()
}
