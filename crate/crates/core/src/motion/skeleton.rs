use crate::error::{Error, Result};
use crate::motion::Vec3;

/// Joint hierarchy and rest-pose bone offsets.
///
/// Joints are stored in topological order: every non-root joint's parent has a
/// smaller index, and joint 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonSpec {
    parents: Vec<Option<usize>>,
    offsets: Vec<Vec3>,
}

/// Indices of (left ankle, left toe, right ankle, right toe) in [`SkeletonSpec::default_24`].
pub const DEFAULT_FOOT_JOINTS: [usize; 4] = [7, 10, 8, 11];

/// Rest-pose root height of [`SkeletonSpec::default_24`]: toes touch y = 0.
pub const DEFAULT_ROOT_HEIGHT: f64 = 0.92;

impl SkeletonSpec {
    pub fn new(parents: Vec<Option<usize>>, offsets: Vec<Vec3>) -> Result<Self> {
        if parents.is_empty() {
            return Err(Error::invalid("skeleton needs at least one joint"));
        }
        if parents.len() != offsets.len() {
            return Err(Error::Shape(format!(
                "{} parents but {} offsets",
                parents.len(),
                offsets.len()
            )));
        }
        if parents[0].is_some() {
            return Err(Error::invalid("joint 0 must be the root"));
        }
        for (j, p) in parents.iter().enumerate().skip(1) {
            match p {
                Some(p) if *p < j => {}
                Some(p) => {
                    return Err(Error::invalid(format!(
                        "joint {j} has parent {p}; parents must precede children"
                    )))
                }
                None => return Err(Error::invalid(format!("joint {j} has no parent"))),
            }
        }
        if offsets.iter().any(|o| !o.iter().all(|v| v.is_finite())) {
            return Err(Error::NonFinite("skeleton offset".into()));
        }
        Ok(Self { parents, offsets })
    }

    /// SMPL-like 24-joint body (Y up, +X to the body's left, +Z forward).
    pub fn default_24() -> Self {
        const PARENTS: [i32; 24] = [
            -1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19, 20, 21,
        ];
        const OFFSETS: [[f64; 3]; 24] = [
            [0.0, 0.0, 0.0],
            [0.09, -0.09, 0.0],
            [-0.09, -0.09, 0.0],
            [0.0, 0.11, 0.0],
            [0.0, -0.38, 0.0],
            [0.0, -0.38, 0.0],
            [0.0, 0.13, 0.0],
            [0.0, -0.41, 0.0],
            [0.0, -0.41, 0.0],
            [0.0, 0.05, 0.0],
            [0.0, -0.04, 0.12],
            [0.0, -0.04, 0.12],
            [0.0, 0.21, 0.0],
            [0.08, 0.12, 0.0],
            [-0.08, 0.12, 0.0],
            [0.0, 0.09, 0.05],
            [0.11, 0.03, 0.0],
            [-0.11, 0.03, 0.0],
            [0.26, 0.0, 0.0],
            [-0.26, 0.0, 0.0],
            [0.25, 0.0, 0.0],
            [-0.25, 0.0, 0.0],
            [0.08, 0.0, 0.0],
            [-0.08, 0.0, 0.0],
        ];
        let parents = PARENTS
            .iter()
            .map(|&p| (p >= 0).then_some(p as usize))
            .collect();
        let offsets = OFFSETS
            .iter()
            .map(|o| Vec3::new(o[0], o[1], o[2]))
            .collect();
        Self::new(parents, offsets).expect("built-in skeleton is valid")
    }

    pub fn joint_count(&self) -> usize {
        self.parents.len()
    }

    pub fn parent(&self, joint: usize) -> Option<usize> {
        self.parents[joint]
    }

    pub fn offset(&self, joint: usize) -> Vec3 {
        self.offsets[joint]
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parents
    }
}
