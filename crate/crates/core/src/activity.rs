//! The ten therapy exercises and how each is measured.

use crate::motion::{ActivityDefinition, BodyRegion, JointName, Plane};

pub const ACTIVITY_IDS: [&str; 10] = [
    "shoulder_abduction",
    "hip_abduction",
    "shoulder_extension",
    "hip_extension",
    "elbow_extension",
    "shoulder_flexion",
    "hip_flexion",
    "elbow_flexion",
    "shoulder_internal_rotation",
    "shoulder_external_rotation",
];

/// Row titles used in result tables.
pub fn display_name(activity_id: &str) -> &str {
    match activity_id {
        "shoulder_abduction" => "Shoulder Abduction",
        "hip_abduction" => "Hip Abduction",
        "shoulder_extension" => "Shoulder Extension",
        "hip_extension" => "Hip Extension",
        "elbow_extension" => "Elbow Extension",
        "shoulder_flexion" => "Shoulder Flexion",
        "hip_flexion" => "Hip Flexion",
        "elbow_flexion" => "Elbow Flexion",
        "shoulder_internal_rotation" => "Internal Rotation",
        "shoulder_external_rotation" => "External Rotation",
        other => other,
    }
}

/// All exercises act on the subject's right limb.
pub fn definition(activity_id: &str) -> Option<ActivityDefinition> {
    use JointName::*;
    use Plane::*;
    let (proximal, distal, region, deviation, primary) = match activity_id {
        "shoulder_abduction" => (RightShoulder, RightWrist, BodyRegion::Upper, Frontal, Transverse),
        "hip_abduction" => (RightHip, RightAnkle, BodyRegion::Lower, Frontal, Transverse),
        "shoulder_extension" => (RightShoulder, RightWrist, BodyRegion::Upper, Sagittal, Transverse),
        "hip_extension" => (RightHip, RightAnkle, BodyRegion::Lower, Sagittal, Transverse),
        "elbow_extension" => (RightElbow, RightWrist, BodyRegion::Upper, Sagittal, Transverse),
        "shoulder_flexion" => (RightShoulder, RightWrist, BodyRegion::Upper, Sagittal, Transverse),
        "hip_flexion" => (RightHip, RightAnkle, BodyRegion::Lower, Sagittal, Transverse),
        "elbow_flexion" => (RightElbow, RightWrist, BodyRegion::Upper, Sagittal, Transverse),
        "shoulder_internal_rotation" => (RightElbow, RightWrist, BodyRegion::Upper, Transverse, Sagittal),
        "shoulder_external_rotation" => (RightElbow, RightWrist, BodyRegion::Upper, Transverse, Sagittal),
        _ => return None,
    };
    ActivityDefinition::new(activity_id, proximal, distal, region, deviation, primary).ok()
}

pub fn all_definitions() -> Vec<ActivityDefinition> {
    ACTIVITY_IDS
        .iter()
        .filter_map(|id| definition(id))
        .collect()
}
