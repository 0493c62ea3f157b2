//! Skeleton recordings: joint labels, frames, sequences, file ingestion and
//! body-relative normalization.
//!
//! Coordinates are in the sensor frame (meters). The file convention is that
//! `left_*` and `right_*` joints are the subject's own left and right sides;
//! signed plane angles downstream depend on that labeling.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Minimum shoulder (or hip) separation, in meters, for a frame to be usable.
pub const REFERENCE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum MotionError {
    #[error("frame {frame_index} is missing joint `{joint}`")]
    MissingJoint { frame_index: usize, joint: JointName },
    #[error("timestamp of frame {0} does not increase")]
    NonMonotonicTimestamp(usize),
    #[error("frame {0}: reference joints coincide, cannot normalize")]
    DegenerateReference(usize),
    #[error("a sequence needs at least 2 frames, got {0}")]
    TooFewFrames(usize),
    #[error("frame {frame_index}: non-finite coordinate for `{joint}`")]
    NonFinite { frame_index: usize, joint: JointName },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for MotionError {
    fn from(e: csv::Error) -> Self {
        MotionError::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for MotionError {
    fn from(e: serde_json::Error) -> Self {
        MotionError::Parse(e.to_string())
    }
}

macro_rules! joint_names {
    ($($variant:ident => $name:literal),+ $(,)?) => {
        /// Skeleton joint labels carried by recordings.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum JointName {
            $($variant),+
        }

        impl JointName {
            pub const ALL: &'static [JointName] = &[$(JointName::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(JointName::$variant => $name),+
                }
            }
        }

        impl FromStr for JointName {
            type Err = MotionError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($name => Ok(JointName::$variant),)+
                    other => Err(MotionError::Parse(format!("unknown joint `{other}`"))),
                }
            }
        }
    };
}

joint_names! {
    ShoulderCenter => "shoulder_center",
    LeftShoulder => "left_shoulder",
    RightShoulder => "right_shoulder",
    HipCenter => "hip_center",
    LeftHip => "left_hip",
    RightHip => "right_hip",
    LeftElbow => "left_elbow",
    RightElbow => "right_elbow",
    LeftWrist => "left_wrist",
    RightWrist => "right_wrist",
    LeftHand => "left_hand",
    RightHand => "right_hand",
    LeftKnee => "left_knee",
    RightKnee => "right_knee",
    LeftAnkle => "left_ankle",
    RightAnkle => "right_ankle",
    LeftFoot => "left_foot",
    RightFoot => "right_foot",
}

impl fmt::Display for JointName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Joint {
    pub name: JointName,
    pub position: Vector3<f64>,
}

/// One skeleton sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonFrame {
    pub timestamp: f64,
    pub joints: BTreeMap<JointName, Vector3<f64>>,
}

impl SkeletonFrame {
    pub fn new(timestamp: f64) -> Self {
        Self {
            timestamp,
            joints: BTreeMap::new(),
        }
    }

    pub fn with_joint(mut self, name: JointName, position: Vector3<f64>) -> Self {
        self.joints.insert(name, position);
        self
    }

    pub fn joint(&self, name: JointName) -> Option<Joint> {
        self.joints
            .get(&name)
            .map(|&position| Joint { name, position })
    }

    pub fn position(&self, name: JointName) -> Option<Vector3<f64>> {
        self.joints.get(&name).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Correct,
    Error1,
    Error2,
    Unlabeled,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Correct => "correct",
            Label::Error1 => "error1",
            Label::Error2 => "error2",
            Label::Unlabeled => "unlabeled",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = MotionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "correct" => Ok(Label::Correct),
            "error1" => Ok(Label::Error1),
            "error2" => Ok(Label::Error2),
            "unlabeled" => Ok(Label::Unlabeled),
            other => Err(MotionError::Parse(format!("unknown label `{other}`"))),
        }
    }
}

/// A recorded repetition. Construct through [`SkeletonSequence::new`], which
/// enforces `T >= 2`, strictly increasing timestamps, finite coordinates and a
/// uniform joint set across frames.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonSequence {
    pub activity_id: String,
    pub subject_id: String,
    pub label: Label,
    frames: Vec<SkeletonFrame>,
}

impl SkeletonSequence {
    pub fn new(
        activity_id: impl Into<String>,
        subject_id: impl Into<String>,
        label: Label,
        frames: Vec<SkeletonFrame>,
    ) -> Result<Self, MotionError> {
        if frames.len() < 2 {
            return Err(MotionError::TooFewFrames(frames.len()));
        }
        let expected: Vec<JointName> = frames[0].joints.keys().copied().collect();
        for (i, frame) in frames.iter().enumerate() {
            if i > 0 && !(frame.timestamp > frames[i - 1].timestamp) {
                return Err(MotionError::NonMonotonicTimestamp(i));
            }
            for &joint in &expected {
                match frame.joints.get(&joint) {
                    None => {
                        return Err(MotionError::MissingJoint {
                            frame_index: i,
                            joint,
                        })
                    }
                    Some(p) if !p.iter().all(|c| c.is_finite()) => {
                        return Err(MotionError::NonFinite {
                            frame_index: i,
                            joint,
                        })
                    }
                    Some(_) => {}
                }
            }
        }
        Ok(Self {
            activity_id: activity_id.into(),
            subject_id: subject_id.into(),
            label,
            frames,
        })
    }

    pub fn frames(&self) -> &[SkeletonFrame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Joint labels carried by every frame.
    pub fn joint_names(&self) -> Vec<JointName> {
        self.frames[0].joints.keys().copied().collect()
    }

    /// Checks that every joint the activity needs is present in every frame.
    pub fn check_required(&self, def: &ActivityDefinition) -> Result<(), MotionError> {
        let required = def.required_joints();
        for (i, frame) in self.frames.iter().enumerate() {
            for &joint in &required {
                if !frame.joints.contains_key(&joint) {
                    return Err(MotionError::MissingJoint {
                        frame_index: i,
                        joint,
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BodyRegion {
    Upper,
    Lower,
}

impl BodyRegion {
    /// (center, left, right) reference joints used for normalization.
    pub fn reference_joints(self) -> (JointName, JointName, JointName) {
        match self {
            BodyRegion::Upper => (
                JointName::ShoulderCenter,
                JointName::LeftShoulder,
                JointName::RightShoulder,
            ),
            BodyRegion::Lower => (JointName::HipCenter, JointName::LeftHip, JointName::RightHip),
        }
    }
}

/// Anatomical planes of motion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Plane {
    Frontal,
    Sagittal,
    Transverse,
}

impl Plane {
    pub const ALL: [Plane; 3] = [Plane::Frontal, Plane::Sagittal, Plane::Transverse];

    pub fn as_str(self) -> &'static str {
        match self {
            Plane::Frontal => "frontal",
            Plane::Sagittal => "sagittal",
            Plane::Transverse => "transverse",
        }
    }
}

impl fmt::Display for Plane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What a repetition of one exercise looks like to the evaluator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityDefinition {
    pub activity_id: String,
    pub limb_proximal_joint: JointName,
    pub limb_distal_joint: JointName,
    /// Joint whose normalized trajectory feeds the coordinate pipelines.
    pub trajectory_joint: JointName,
    pub body_region: BodyRegion,
    pub deviation_plane: Plane,
    pub primary_plane: Plane,
}

impl ActivityDefinition {
    pub fn new(
        activity_id: impl Into<String>,
        limb_proximal_joint: JointName,
        limb_distal_joint: JointName,
        body_region: BodyRegion,
        deviation_plane: Plane,
        primary_plane: Plane,
    ) -> Result<Self, MotionError> {
        if limb_proximal_joint == limb_distal_joint {
            return Err(MotionError::Parse(
                "limb proximal and distal joints must differ".into(),
            ));
        }
        Ok(Self {
            activity_id: activity_id.into(),
            limb_proximal_joint,
            limb_distal_joint,
            trajectory_joint: limb_distal_joint,
            body_region,
            deviation_plane,
            primary_plane,
        })
    }

    pub fn required_joints(&self) -> Vec<JointName> {
        let (c, l, r) = self.body_region.reference_joints();
        let mut joints = vec![
            JointName::ShoulderCenter,
            JointName::LeftShoulder,
            JointName::RightShoulder,
            c,
            l,
            r,
            self.limb_proximal_joint,
            self.limb_distal_joint,
            self.trajectory_joint,
        ];
        joints.sort();
        joints.dedup();
        joints
    }
}

/// Trajectory of the tracked limb joint expressed relative to the body.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedSequence {
    pub frames: Vec<Vector3<f64>>,
    /// Reference distance of each source frame, in source units.
    pub scale: Vec<f64>,
}

impl NormalizedSequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Normalizes one point against a reference center and reference pair.
pub fn normalize_point(
    point: Vector3<f64>,
    center: Vector3<f64>,
    left: Vector3<f64>,
    right: Vector3<f64>,
) -> Option<(Vector3<f64>, f64)> {
    let distance = (left - right).norm();
    if !(distance > REFERENCE_TOLERANCE) {
        return None;
    }
    Some(((point - center) / distance, distance))
}

/// Subtracts the shoulder (or hip) center and divides by the shoulder (or hip)
/// separation, frame by frame, for the activity's trajectory joint.
pub fn normalize(
    seq: &SkeletonSequence,
    def: &ActivityDefinition,
) -> Result<NormalizedSequence, MotionError> {
    let (center_j, left_j, right_j) = def.body_region.reference_joints();
    let mut frames = Vec::with_capacity(seq.len());
    let mut scale = Vec::with_capacity(seq.len());
    for (i, frame) in seq.frames().iter().enumerate() {
        let get = |joint| {
            frame.position(joint).ok_or(MotionError::MissingJoint {
                frame_index: i,
                joint,
            })
        };
        let (p, d) = normalize_point(
            get(def.trajectory_joint)?,
            get(center_j)?,
            get(left_j)?,
            get(right_j)?,
        )
        .ok_or(MotionError::DegenerateReference(i))?;
        frames.push(p);
        scale.push(d);
    }
    Ok(NormalizedSequence { frames, scale })
}

/// Normalizes every joint of every frame, returning a skeleton whose reference
/// center sits at the origin with unit reference distance.
pub fn normalize_skeleton(
    seq: &SkeletonSequence,
    region: BodyRegion,
) -> Result<SkeletonSequence, MotionError> {
    let (center_j, left_j, right_j) = region.reference_joints();
    let mut frames = Vec::with_capacity(seq.len());
    for (i, frame) in seq.frames().iter().enumerate() {
        let get = |joint| {
            frame.position(joint).ok_or(MotionError::MissingJoint {
                frame_index: i,
                joint,
            })
        };
        let (c, l, r) = (get(center_j)?, get(left_j)?, get(right_j)?);
        let d = (l - r).norm();
        if !(d > REFERENCE_TOLERANCE) {
            return Err(MotionError::DegenerateReference(i));
        }
        let joints = frame
            .joints
            .iter()
            .map(|(&name, &p)| (name, (p - c) / d))
            .collect();
        frames.push(SkeletonFrame {
            timestamp: frame.timestamp,
            joints,
        });
    }
    SkeletonSequence::new(
        seq.activity_id.clone(),
        seq.subject_id.clone(),
        seq.label,
        frames,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileFormat {
    Csv,
    Json,
}

impl FileFormat {
    pub fn extension(self) -> &'static str {
        match self {
            FileFormat::Csv => "csv",
            FileFormat::Json => "json",
        }
    }

    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "csv" => Some(FileFormat::Csv),
            "json" => Some(FileFormat::Json),
            _ => None,
        }
    }
}

impl FromStr for FileFormat {
    type Err = MotionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(FileFormat::Csv),
            "json" => Ok(FileFormat::Json),
            other => Err(MotionError::Parse(format!("unknown format `{other}`"))),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct JsonFrame {
    t: f64,
    joints: BTreeMap<String, [f64; 3]>,
}

#[derive(Serialize, Deserialize)]
struct JsonSequence {
    activity_id: String,
    subject_id: String,
    label: Label,
    frames: Vec<JsonFrame>,
}

/// Reads a recording. CSV files carry no metadata, so the subject id is taken
/// from the file stem and the sequence is unlabeled.
pub fn load_sequence(path: &Path, format: FileFormat) -> Result<SkeletonSequence, MotionError> {
    let mut text = String::new();
    fs::File::open(path)?.read_to_string(&mut text)?;
    match format {
        FileFormat::Csv => {
            let stem = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or_default()
                .to_string();
            parse_csv(&text, "", &stem, Label::Unlabeled)
        }
        FileFormat::Json => parse_json(&text),
    }
}

pub fn parse_json(text: &str) -> Result<SkeletonSequence, MotionError> {
    let raw: JsonSequence = serde_json::from_str(text)?;
    let mut names = None::<Vec<JointName>>;
    let mut frames = Vec::with_capacity(raw.frames.len());
    for (i, jf) in raw.frames.into_iter().enumerate() {
        let mut frame = SkeletonFrame::new(jf.t);
        for (name, [x, y, z]) in jf.joints {
            frame.joints.insert(name.parse()?, Vector3::new(x, y, z));
        }
        match &names {
            None => names = Some(frame.joints.keys().copied().collect()),
            Some(expected) => {
                if let Some(&joint) = expected.iter().find(|j| !frame.joints.contains_key(j)) {
                    return Err(MotionError::MissingJoint {
                        frame_index: i,
                        joint,
                    });
                }
            }
        }
        frames.push(frame);
    }
    SkeletonSequence::new(raw.activity_id, raw.subject_id, raw.label, frames)
}

pub fn parse_csv(
    text: &str,
    activity_id: &str,
    subject_id: &str,
    label: Label,
) -> Result<SkeletonSequence, MotionError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    if headers.get(0) != Some("t") {
        return Err(MotionError::Parse("first column must be `t`".into()));
    }
    // (column, joint, axis)
    let mut columns = Vec::new();
    for (col, h) in headers.iter().enumerate().skip(1) {
        let (name, axis) = h
            .rsplit_once('_')
            .ok_or_else(|| MotionError::Parse(format!("bad column `{h}`")))?;
        let axis = match axis {
            "x" => 0,
            "y" => 1,
            "z" => 2,
            _ => return Err(MotionError::Parse(format!("bad axis in column `{h}`"))),
        };
        columns.push((col, name.parse::<JointName>()?, axis));
    }
    let joints: Vec<JointName> = {
        let mut j: Vec<_> = columns.iter().map(|c| c.1).collect();
        j.sort();
        j.dedup();
        j
    };
    for &joint in &joints {
        for axis in 0..3 {
            if !columns.iter().any(|&(_, j, a)| j == joint && a == axis) {
                return Err(MotionError::Parse(format!(
                    "joint `{joint}` lacks a column for axis {axis}"
                )));
            }
        }
    }

    let mut frames = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let t: f64 = parse_cell(record.get(0), i, "t")?
            .ok_or_else(|| MotionError::Parse(format!("row {i}: empty timestamp")))?;
        let mut coords: BTreeMap<JointName, [Option<f64>; 3]> = BTreeMap::new();
        for &(col, joint, axis) in &columns {
            coords.entry(joint).or_default()[axis] = parse_cell(record.get(col), i, &headers[col])?;
        }
        let mut frame = SkeletonFrame::new(t);
        for (joint, c) in coords {
            match c {
                [Some(x), Some(y), Some(z)] => {
                    frame.joints.insert(joint, Vector3::new(x, y, z));
                }
                _ => {
                    return Err(MotionError::MissingJoint {
                        frame_index: i,
                        joint,
                    })
                }
            }
        }
        frames.push(frame);
    }
    SkeletonSequence::new(activity_id, subject_id, label, frames)
}

fn parse_cell(cell: Option<&str>, row: usize, column: &str) -> Result<Option<f64>, MotionError> {
    match cell.map(str::trim) {
        None | Some("") => Ok(None),
        Some(s) => s
            .parse()
            .map(Some)
            .map_err(|_| MotionError::Parse(format!("row {row}, column `{column}`: `{s}`"))),
    }
}

pub fn to_csv(seq: &SkeletonSequence) -> String {
    let joints = seq.joint_names();
    let mut out = String::from("t");
    for j in &joints {
        for axis in ["x", "y", "z"] {
            out.push_str(&format!(",{j}_{axis}"));
        }
    }
    out.push('\n');
    for frame in seq.frames() {
        out.push_str(&format!("{}", frame.timestamp));
        for j in &joints {
            let p = frame.joints[j];
            out.push_str(&format!(",{},{},{}", p.x, p.y, p.z));
        }
        out.push('\n');
    }
    out
}

pub fn to_json(seq: &SkeletonSequence) -> String {
    let raw = JsonSequence {
        activity_id: seq.activity_id.clone(),
        subject_id: seq.subject_id.clone(),
        label: seq.label,
        frames: seq
            .frames()
            .iter()
            .map(|f| JsonFrame {
                t: f.timestamp,
                joints: f
                    .joints
                    .iter()
                    .map(|(j, p)| (j.as_str().to_string(), [p.x, p.y, p.z]))
                    .collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&raw).expect("sequence serializes")
}

pub fn save_sequence(
    seq: &SkeletonSequence,
    path: &Path,
    format: FileFormat,
) -> Result<(), MotionError> {
    let body = match format {
        FileFormat::Csv => to_csv(seq),
        FileFormat::Json => to_json(seq),
    };
    write_atomic(path, body.as_bytes())
}

/// Writes through a temporary file in the destination directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), MotionError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.persist(path).map_err(|e| MotionError::Io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn upper_def() -> ActivityDefinition {
        ActivityDefinition::new(
            "shoulder_abduction",
            JointName::RightShoulder,
            JointName::RightWrist,
            BodyRegion::Upper,
            Plane::Frontal,
            Plane::Transverse,
        )
        .unwrap()
    }

    fn frame(t: f64, sc: [f64; 3], ls: [f64; 3], rs: [f64; 3], wrist: [f64; 3]) -> SkeletonFrame {
        SkeletonFrame::new(t)
            .with_joint(JointName::ShoulderCenter, sc.into())
            .with_joint(JointName::LeftShoulder, ls.into())
            .with_joint(JointName::RightShoulder, rs.into())
            .with_joint(JointName::RightWrist, wrist.into())
    }

    const HEADER: &str = "t,shoulder_center_x,shoulder_center_y,shoulder_center_z,left_shoulder_x,left_shoulder_y,left_shoulder_z,right_shoulder_x,right_shoulder_y,right_shoulder_z\n";

    #[test]
    fn csv_three_frames() {
        let text = format!(
            "{HEADER}0.0,0,1.6,2,-0.2,1.5,2,0.2,1.5,2\n0.1,0,1.6,2,-0.2,1.5,2,0.2,1.5,2\n0.2,0,1.6,2,-0.2,1.5,2,0.2,1.5,2\n"
        );
        let seq = parse_csv(&text, "a", "s", Label::Correct).unwrap();
        assert_eq!(seq.len(), 3);
        assert_eq!(
            seq.frames()[1].position(JointName::LeftShoulder),
            Some(Vector3::new(-0.2, 1.5, 2.0))
        );
    }

    #[test]
    fn csv_missing_joint_reports_frame() {
        let text = format!(
            "{HEADER}0.0,0,1.6,2,-0.2,1.5,2,0.2,1.5,2\n0.1,0,1.6,2,-0.2,1.5,2,0.2,1.5,2\n0.2,0,1.6,2,,,,0.2,1.5,2\n"
        );
        match parse_csv(&text, "a", "s", Label::Correct) {
            Err(MotionError::MissingJoint { frame_index, joint }) => {
                assert_eq!(frame_index, 2);
                assert_eq!(joint, JointName::LeftShoulder);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_repeated_timestamp() {
        let text = format!(
            "{HEADER}0.0,0,1.6,2,-0.2,1.5,2,0.2,1.5,2\n0.1,0,1.6,2,-0.2,1.5,2,0.2,1.5,2\n0.1,0,1.6,2,-0.2,1.5,2,0.2,1.5,2\n"
        );
        assert!(matches!(
            parse_csv(&text, "a", "s", Label::Correct),
            Err(MotionError::NonMonotonicTimestamp(2))
        ));
    }

    #[test]
    fn csv_garbage_is_parse_error() {
        let text = format!("{HEADER}0.0,zero,1.6,2,-0.2,1.5,2,0.2,1.5,2\n");
        assert!(matches!(
            parse_csv(&text, "a", "s", Label::Correct),
            Err(MotionError::Parse(_))
        ));
    }

    #[test]
    fn json_round_trip() {
        let seq = SkeletonSequence::new(
            "shoulder_abduction",
            "c01",
            Label::Error2,
            vec![
                frame(0.0, [0., 1., 1.], [-0.25, 0., 1.], [0.25, 0., 1.], [1., 1., 1.]),
                frame(0.5, [0., 1., 1.], [-0.25, 0., 1.], [0.25, 0., 1.], [0.1, 0.2, 0.3]),
            ],
        )
        .unwrap();
        let back = parse_json(&to_json(&seq)).unwrap();
        assert_eq!(back, seq);
        let back_csv = parse_csv(&to_csv(&seq), "shoulder_abduction", "c01", Label::Error2).unwrap();
        assert_eq!(back_csv, seq);
    }

    #[test]
    fn json_missing_joint() {
        let text = r#"{"activity_id":"a","subject_id":"s","label":"correct","frames":[
            {"t":0.0,"joints":{"left_shoulder":[0,0,0],"right_shoulder":[1,0,0]}},
            {"t":0.1,"joints":{"right_shoulder":[1,0,0]}}]}"#;
        assert!(matches!(
            parse_json(text),
            Err(MotionError::MissingJoint { frame_index: 1, joint: JointName::LeftShoulder })
        ));
    }

    #[test]
    fn normalize_worked_example() {
        // shoulders 0.5 m apart, center (1,0,1), wrist (1,1,1) -> (0,2,0)
        let seq = SkeletonSequence::new(
            "a",
            "s",
            Label::Correct,
            vec![
                frame(0.0, [1., 0., 1.], [0.75, 0., 1.], [1.25, 0., 1.], [1., 1., 1.]),
                frame(0.1, [1., 0., 1.], [0.75, 0., 1.], [1.25, 0., 1.], [1., 1., 1.]),
            ],
        )
        .unwrap();
        let n = normalize(&seq, &upper_def()).unwrap();
        for p in &n.frames {
            assert!((p - Vector3::new(0., 2., 0.)).norm() < 1e-12);
        }
        assert!((n.scale[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn normalize_identity_for_unit_reference() {
        let seq = SkeletonSequence::new(
            "a",
            "s",
            Label::Correct,
            vec![
                frame(0.0, [0., 0., 0.], [-0.5, 0., 0.], [0.5, 0., 0.], [0.3, -0.7, 0.2]),
                frame(0.1, [0., 0., 0.], [-0.5, 0., 0.], [0.5, 0., 0.], [0.9, -0.1, -0.4]),
            ],
        )
        .unwrap();
        let n = normalize(&seq, &upper_def()).unwrap();
        assert_eq!(n.frames[0], Vector3::new(0.3, -0.7, 0.2));
        assert_eq!(n.frames[1], Vector3::new(0.9, -0.1, -0.4));
    }

    #[test]
    fn normalize_degenerate_reference() {
        let seq = SkeletonSequence::new(
            "a",
            "s",
            Label::Correct,
            vec![
                frame(0.0, [0., 1., 0.], [-0.5, 0., 0.], [0.5, 0., 0.], [0., 0., 0.]),
                frame(0.1, [0., 1., 0.], [0.2, 0., 0.], [0.2, 0., 0.], [0., 0., 0.]),
            ],
        )
        .unwrap();
        assert!(matches!(
            normalize(&seq, &upper_def()),
            Err(MotionError::DegenerateReference(1))
        ));
    }

    #[test]
    fn too_short_sequence() {
        assert!(matches!(
            SkeletonSequence::new("a", "s", Label::Correct, vec![SkeletonFrame::new(0.0)]),
            Err(MotionError::TooFewFrames(1))
        ));
    }
}
