//! Plane-of-motion normals and limb-to-plane angles.
//!
//! The transverse normal comes from the floor plane `aX + bY + cZ + d = 0`.
//! The frontal normal is the cross product of the two shoulder-triangle edges
//! anchored at the left shoulder, and the sagittal normal is
//! `frontal x transverse`. No orthogonalization is applied, so a leaning torso
//! yields a frontal normal that is not perpendicular to the floor normal.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::motion::{ActivityDefinition, JointName, Plane, SkeletonFrame, SkeletonSequence};

/// Norm below which a direction is treated as undefined.
pub const DIRECTION_TOLERANCE: f64 = 1e-9;

/// Y-up sensor frame with the floor through the origin.
pub const DEFAULT_FLOOR: [f64; 4] = [0.0, 1.0, 0.0, 0.0];

#[derive(Debug, Error, PartialEq)]
pub enum KinematicsError {
    #[error("frame {frame_index}: shoulders are collinear, frontal plane undefined")]
    CollinearShoulders { frame_index: usize },
    #[error("frame {frame_index}: zero-length vector")]
    ZeroVector { frame_index: usize },
    #[error("frame {frame_index} is missing joint `{joint}`")]
    MissingJoint { frame_index: usize, joint: JointName },
    #[error("floor plane normal has zero length")]
    DegenerateFloor,
}

/// How often plane normals are re-estimated within a repetition.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlaneEstimation {
    #[default]
    PerFrame,
    /// One plane set from the mean shoulder positions of the whole repetition.
    PerRepetition,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneSet {
    pub frontal: Vector3<f64>,
    pub sagittal: Vector3<f64>,
    pub transverse: Vector3<f64>,
    pub floor_offset: f64,
}

impl PlaneSet {
    pub fn normal(&self, plane: Plane) -> Vector3<f64> {
        match plane {
            Plane::Frontal => self.frontal,
            Plane::Sagittal => self.sagittal,
            Plane::Transverse => self.transverse,
        }
    }
}

/// Limb angles to the three planes, in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleFrame {
    pub frontal: f64,
    pub sagittal: f64,
    pub transverse: f64,
}

impl AngleFrame {
    pub fn get(&self, plane: Plane) -> f64 {
        match plane {
            Plane::Frontal => self.frontal,
            Plane::Sagittal => self.sagittal,
            Plane::Transverse => self.transverse,
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.frontal, self.sagittal, self.transverse]
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AngleSequence {
    pub frames: Vec<AngleFrame>,
}

impl AngleSequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn track(&self, plane: Plane) -> Vec<f64> {
        self.frames.iter().map(|f| f.get(plane)).collect()
    }
}

fn plane_set_from(
    sc: Vector3<f64>,
    ls: Vector3<f64>,
    rs: Vector3<f64>,
    floor: [f64; 4],
) -> Option<PlaneSet> {
    let transverse = Vector3::new(floor[0], floor[1], floor[2]);
    let frontal = (sc - ls).cross(&(rs - ls));
    if !(frontal.norm() > DIRECTION_TOLERANCE) {
        return None;
    }
    Some(PlaneSet {
        frontal,
        sagittal: frontal.cross(&transverse),
        transverse,
        floor_offset: floor[3],
    })
}

fn check_floor(floor: [f64; 4]) -> Result<(), KinematicsError> {
    if Vector3::new(floor[0], floor[1], floor[2]).norm() > DIRECTION_TOLERANCE {
        Ok(())
    } else {
        Err(KinematicsError::DegenerateFloor)
    }
}

fn shoulders(
    frame: &SkeletonFrame,
    frame_index: usize,
) -> Result<[Vector3<f64>; 3], KinematicsError> {
    let get = |joint| {
        frame
            .position(joint)
            .ok_or(KinematicsError::MissingJoint { frame_index, joint })
    };
    Ok([
        get(JointName::ShoulderCenter)?,
        get(JointName::LeftShoulder)?,
        get(JointName::RightShoulder)?,
    ])
}

/// Plane normals from a single frame's shoulders and the floor plane.
pub fn estimate_planes(frame: &SkeletonFrame, floor: [f64; 4]) -> Result<PlaneSet, KinematicsError> {
    check_floor(floor)?;
    let [sc, ls, rs] = shoulders(frame, 0)?;
    plane_set_from(sc, ls, rs, floor).ok_or(KinematicsError::CollinearShoulders { frame_index: 0 })
}

/// `90 - acos(cos(limb, normal))` in degrees. Positive when the limb points to
/// the side the normal points to.
pub fn plane_angle(limb: Vector3<f64>, normal: Vector3<f64>) -> Result<f64, KinematicsError> {
    let (ln, nn) = (limb.norm(), normal.norm());
    if !(ln > DIRECTION_TOLERANCE && nn > DIRECTION_TOLERANCE) {
        return Err(KinematicsError::ZeroVector { frame_index: 0 });
    }
    let cosine = (limb.dot(&normal) / (ln * nn)).clamp(-1.0, 1.0);
    Ok(90.0 - cosine.acos().to_degrees())
}

fn angles_for(limb: Vector3<f64>, planes: &PlaneSet) -> Result<AngleFrame, KinematicsError> {
    Ok(AngleFrame {
        frontal: plane_angle(limb, planes.frontal)?,
        sagittal: plane_angle(limb, planes.sagittal)?,
        transverse: plane_angle(limb, planes.transverse)?,
    })
}

pub fn angle_sequence(
    seq: &SkeletonSequence,
    def: &ActivityDefinition,
    floor: [f64; 4],
) -> Result<AngleSequence, KinematicsError> {
    angle_sequence_with(seq, def, floor, PlaneEstimation::PerFrame)
}

pub fn angle_sequence_with(
    seq: &SkeletonSequence,
    def: &ActivityDefinition,
    floor: [f64; 4],
    mode: PlaneEstimation,
) -> Result<AngleSequence, KinematicsError> {
    check_floor(floor)?;
    let fixed = match mode {
        PlaneEstimation::PerFrame => None,
        PlaneEstimation::PerRepetition => {
            let mut mean = [Vector3::zeros(); 3];
            for (i, frame) in seq.frames().iter().enumerate() {
                for (m, p) in mean.iter_mut().zip(shoulders(frame, i)?) {
                    *m += p;
                }
            }
            let n = seq.len() as f64;
            let [sc, ls, rs] = mean.map(|m| m / n);
            Some(
                plane_set_from(sc, ls, rs, floor)
                    .ok_or(KinematicsError::CollinearShoulders { frame_index: 0 })?,
            )
        }
    };

    let mut frames = Vec::with_capacity(seq.len());
    for (i, frame) in seq.frames().iter().enumerate() {
        let planes = match fixed {
            Some(p) => p,
            None => {
                let [sc, ls, rs] = shoulders(frame, i)?;
                plane_set_from(sc, ls, rs, floor)
                    .ok_or(KinematicsError::CollinearShoulders { frame_index: i })?
            }
        };
        let get = |joint| {
            frame.position(joint).ok_or(KinematicsError::MissingJoint {
                frame_index: i,
                joint,
            })
        };
        let limb = get(def.limb_distal_joint)? - get(def.limb_proximal_joint)?;
        let angles = angles_for(limb, &planes).map_err(|e| match e {
            KinematicsError::ZeroVector { .. } => KinematicsError::ZeroVector { frame_index: i },
            other => other,
        })?;
        frames.push(angles);
    }
    Ok(AngleSequence { frames })
}
