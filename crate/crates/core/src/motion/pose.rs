use crate::error::{Error, Result};
use crate::motion::Vec3;

/// Flat feature width of one pose for a skeleton with `joints` joints.
pub const fn pose_dim(joints: usize) -> usize {
    4 + 3 * joints + 3 * joints + 6 * joints + 4
}

/// Identity rotation in 6D form (first two columns of I).
pub const IDENTITY_6D: [f64; 6] = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0];

/// One frame of the velocity-based pose representation.
///
/// Root quantities are per frame; joint quantities are expressed relative to
/// the root, in the root's heading frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Pose {
    /// Heading change about +Y, radians/frame.
    pub root_angular_velocity: f64,
    /// Ground-plane velocity along local X, meters/frame.
    pub root_velocity_x: f64,
    /// Ground-plane velocity along local Z, meters/frame.
    pub root_velocity_z: f64,
    /// Root height above the ground, meters.
    pub root_height: f64,
    pub joint_positions: Vec<Vec3>,
    pub joint_velocities: Vec<Vec3>,
    pub joint_rotations: Vec<[f64; 6]>,
    pub foot_contacts: [bool; 4],
}

impl Pose {
    /// Rest pose: zero velocities, identity rotations, given local joint positions.
    pub fn rest(joint_positions: Vec<Vec3>, root_height: f64) -> Self {
        let j = joint_positions.len();
        Self {
            root_angular_velocity: 0.0,
            root_velocity_x: 0.0,
            root_velocity_z: 0.0,
            root_height,
            joint_positions,
            joint_velocities: vec![Vec3::zeros(); j],
            joint_rotations: vec![IDENTITY_6D; j],
            foot_contacts: [false; 4],
        }
    }

    pub fn joint_count(&self) -> usize {
        self.joint_positions.len()
    }

    pub fn flat_dim(&self) -> usize {
        pose_dim(self.joint_count())
    }

    pub fn is_finite(&self) -> bool {
        let scalars = [
            self.root_angular_velocity,
            self.root_velocity_x,
            self.root_velocity_z,
            self.root_height,
        ];
        scalars.iter().all(|v| v.is_finite())
            && self
                .joint_positions
                .iter()
                .all(|v| v.iter().all(|x| x.is_finite()))
            && self
                .joint_velocities
                .iter()
                .all(|v| v.iter().all(|x| x.is_finite()))
            && self
                .joint_rotations
                .iter()
                .all(|r| r.iter().all(|x| x.is_finite()))
    }

    pub fn write_flat(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&[
            self.root_angular_velocity,
            self.root_velocity_x,
            self.root_velocity_z,
            self.root_height,
        ]);
        for p in &self.joint_positions {
            out.extend(p.iter());
        }
        for v in &self.joint_velocities {
            out.extend(v.iter());
        }
        for r in &self.joint_rotations {
            out.extend_from_slice(r);
        }
        out.extend(
            self.foot_contacts
                .iter()
                .map(|&c| if c { 1.0 } else { 0.0 }),
        );
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.flat_dim());
        self.write_flat(&mut out);
        out
    }

    /// Parses a flat vector; contact entries must be exactly 0 or 1.
    pub fn from_flat(flat: &[f64], joints: usize) -> Result<Self> {
        let pose = Self::parse(flat, joints, |c| {
            if c == 0.0 {
                Ok(false)
            } else if c == 1.0 {
                Ok(true)
            } else {
                Err(Error::invalid(format!(
                    "foot contact flag {c} is not 0 or 1"
                )))
            }
        })?;
        if !pose.is_finite() {
            return Err(Error::NonFinite("pose component".into()));
        }
        Ok(pose)
    }

    /// Parses network output: contacts are thresholded at 0.5.
    pub fn from_flat_lossy(flat: &[f64], joints: usize) -> Result<Self> {
        Self::parse(flat, joints, |c| Ok(c >= 0.5))
    }

    fn parse(flat: &[f64], joints: usize, contact: impl Fn(f64) -> Result<bool>) -> Result<Self> {
        if flat.len() != pose_dim(joints) {
            return Err(Error::Shape(format!(
                "pose vector has {} values, expected {} for J={joints}",
                flat.len(),
                pose_dim(joints)
            )));
        }
        let vec3 = |s: &[f64]| Vec3::new(s[0], s[1], s[2]);
        let mut at = 4;
        let joint_positions = flat[at..at + 3 * joints].chunks(3).map(vec3).collect();
        at += 3 * joints;
        let joint_velocities = flat[at..at + 3 * joints].chunks(3).map(vec3).collect();
        at += 3 * joints;
        let joint_rotations = flat[at..at + 6 * joints]
            .chunks(6)
            .map(|c| [c[0], c[1], c[2], c[3], c[4], c[5]])
            .collect();
        at += 6 * joints;
        let mut foot_contacts = [false; 4];
        for (k, slot) in foot_contacts.iter_mut().enumerate() {
            *slot = contact(flat[at + k])?;
        }
        Ok(Self {
            root_angular_velocity: flat[0],
            root_velocity_x: flat[1],
            root_velocity_z: flat[2],
            root_height: flat[3],
            joint_positions,
            joint_velocities,
            joint_rotations,
            foot_contacts,
        })
    }
}

/// A single dancer's motion clip.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionSequence {
    pub frames: Vec<Pose>,
    pub fps: f64,
    /// Root position at frame 0. Only X and Z are used; height comes from
    /// each frame's `root_height`.
    pub initial_position: Vec3,
}

impl MotionSequence {
    pub fn new(frames: Vec<Pose>, fps: f64, initial_position: Vec3) -> Result<Self> {
        let seq = Self {
            frames,
            fps,
            initial_position,
        };
        seq.validate()?;
        Ok(seq)
    }

    pub fn validate(&self) -> Result<()> {
        let Some(first) = self.frames.first() else {
            return Err(Error::invalid("motion sequence has no frames"));
        };
        let j = first.joint_count();
        if let Some(f) = self.frames.iter().position(|p| {
            p.joint_count() != j || p.joint_velocities.len() != j || p.joint_rotations.len() != j
        }) {
            return Err(Error::Shape(format!(
                "frame {f} has a different joint count"
            )));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(Error::invalid(format!(
                "fps must be positive, got {}",
                self.fps
            )));
        }
        if !self.initial_position.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("initial position".into()));
        }
        if let Some(f) = self.frames.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite(format!("pose at frame {f}")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn joint_count(&self) -> usize {
        self.frames.first().map_or(0, Pose::joint_count)
    }

    /// Row-major F × D feature matrix.
    pub fn to_feature_rows(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len() * pose_dim(self.joint_count()));
        for p in &self.frames {
            p.write_flat(&mut out);
        }
        out
    }

    /// Builds a sequence from a row-major feature matrix produced by a decoder.
    pub fn from_feature_rows(
        rows: &[f64],
        joints: usize,
        fps: f64,
        initial_position: Vec3,
    ) -> Result<Self> {
        let dim = pose_dim(joints);
        if rows.is_empty() || !rows.len().is_multiple_of(dim) {
            return Err(Error::Shape(format!(
                "{} values is not a whole number of {dim}-wide frames",
                rows.len()
            )));
        }
        let frames = rows
            .chunks(dim)
            .map(|r| Pose::from_flat_lossy(r, joints))
            .collect::<Result<Vec<_>>>()?;
        Self::new(frames, fps, initial_position)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn flat_dimension_matches_layout() {
        assert_eq!(pose_dim(24), 296);
        let p = Pose::rest(vec![Vec3::zeros(); 3], 0.9);
        assert_eq!(p.to_flat().len(), pose_dim(3));
    }

    #[test]
    fn contact_flags_must_be_binary() {
        let mut flat = Pose::rest(vec![Vec3::zeros(); 2], 0.9).to_flat();
        let n = flat.len();
        flat[n - 1] = 0.5;
        assert!(Pose::from_flat(&flat, 2).is_err());
        assert!(Pose::from_flat_lossy(&flat, 2).unwrap().foot_contacts[3]);
    }

    #[test]
    fn empty_sequence_rejected() {
        assert!(MotionSequence::new(vec![], 30.0, Vec3::zeros()).is_err());
    }

    proptest! {
        #[test]
        fn flat_roundtrip_is_exact(
            vals in proptest::collection::vec(-1e3f64..1e3, pose_dim(3) - 4),
            contacts in proptest::array::uniform4(any::<bool>()),
        ) {
            let mut flat = vals.clone();
            flat.extend(contacts.iter().map(|&c| if c { 1.0 } else { 0.0 }));
            let pose = Pose::from_flat(&flat, 3).unwrap();
            prop_assert_eq!(pose.to_flat(), flat);
        }
    }
}
