//! Pose representation, root trajectory recovery, forward kinematics and
//! per-joint motion features.
//!
//! Coordinates are Y-up with the ground on the XZ plane. All velocities are per
//! frame; `fps` is carried only for converting frame indices to seconds.

mod features;
mod io;
mod kinematics;
mod pose;
mod skeleton;
mod trajectory;

pub use features::{
    detect_foot_contacts, kinetic_features, kinetic_from_global, mean_joint_speed,
    DEFAULT_CONTACT_HEIGHT, DEFAULT_CONTACT_SPEED,
};
pub use io::{format_motion, parse_motion, read_motion, write_motion};
pub use kinematics::{
    forward_kinematics, forward_kinematics_oriented, global_joint_positions,
    global_joint_positions_from, rotate_y, rotation_from_6d, rotation_to_6d, rotation_y,
};
pub use pose::{pose_dim, MotionSequence, Pose, IDENTITY_6D};
pub use skeleton::{SkeletonSpec, DEFAULT_FOOT_JOINTS, DEFAULT_ROOT_HEIGHT};
pub use trajectory::{recover_trajectory, recover_trajectory_from, root_velocities, Trajectory};

pub type Vec3 = nalgebra::Vector3<f64>;
