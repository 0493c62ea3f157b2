//! Parametric generator of correct and deviated repetitions.
//!
//! Each exercise swings one limb segment of the right side inside its
//! movement plane: the segment direction is `cos(a) * rest + sin(a) * swing`,
//! where the movement angle `a` follows a half-sine `0 -> peak -> 0`. An error
//! tilts the segment out of the movement plane by a half-sine angle `d` along
//! the deviation-plane normal `n`:
//!
//! ```text
//! u = cos(d) * (cos(a) * rest + sin(a) * swing) + sin(d) * n
//! ```
//!
//! so the angle to the deviation plane is exactly `d` and the in-plane
//! movement angle is unchanged. Gaussian noise is added to `a` and `d` per
//! frame before the skeleton is rebuilt.
//!
//! Sensor frame: Y up, the subject faces `-Z`, and the subject's right side
//! is `+X`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::activity;
use crate::kinematics::{AngleFrame, AngleSequence};
use crate::motion::{self, FileFormat, JointName, Label, MotionError, SkeletonFrame, SkeletonSequence};
use crate::par::{self, Execution};

pub const FRAME_RATE_HZ: f64 = 30.0;
pub const DEFAULT_DURATION_FRAMES: usize = 60;
pub const DEFAULT_NOISE_STD_DEG: f64 = 2.0;
pub const DEFAULT_DEVIATION_DEG: f64 = 30.0;
pub const DEFAULT_N_CORRECT: usize = 42;
pub const DEFAULT_N_ERROR: usize = 100;
pub const PEAK_JITTER: f64 = 0.10;
pub const DURATION_JITTER: f64 = 0.20;
pub const MIN_DURATION_FRAMES: usize = 8;
pub const MAX_DEVIATION_DEG: f64 = 60.0;

// Torso geometry (meters).
const SHOULDER_WIDTH: f64 = 0.35;
const HIP_WIDTH: f64 = 0.30;
const SHOULDER_CENTER_RISE: f64 = 0.10;
const SHOULDER_HEIGHT: f64 = 1.45;
const HIP_HEIGHT: f64 = 0.95;
const SUBJECT_DEPTH: f64 = 2.5;
const UPPER_ARM: f64 = 0.30;
const FOREARM: f64 = 0.27;
const HAND: f64 = 0.08;
const THIGH: f64 = 0.45;
const SHANK: f64 = 0.43;
const FOOT: f64 = 0.10;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("unknown activity `{0}`")]
    UnknownActivity(String),
    #[error("invalid script: {0}")]
    InvalidScript(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Deviation {
    None,
    Error1,
    Error2,
}

impl Deviation {
    pub fn label(self) -> Label {
        match self {
            Deviation::None => Label::Correct,
            Deviation::Error1 => Label::Error1,
            Deviation::Error2 => Label::Error2,
        }
    }
}

impl fmt::Display for Deviation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Deviation::None => "none",
            Deviation::Error1 => "error1",
            Deviation::Error2 => "error2",
        })
    }
}

impl FromStr for Deviation {
    type Err = SynthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Deviation::None),
            "error1" => Ok(Deviation::Error1),
            "error2" => Ok(Deviation::Error2),
            other => Err(SynthError::InvalidScript(format!("unknown deviation `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Segment {
    /// Whole right arm pivoting at the shoulder.
    Arm,
    /// Right forearm pivoting at the elbow, upper arm hanging.
    Forearm,
    /// Whole right leg pivoting at the hip.
    Leg,
}

/// How an exercise moves its limb segment.
#[derive(Debug, Clone, Copy)]
struct LimbMotion {
    segment: Segment,
    rest: Vector3<f64>,
    swing: Vector3<f64>,
    /// Outward normal of the deviation plane.
    deviation_normal: Vector3<f64>,
    /// Sign of the Error 1 tilt along `deviation_normal`; Error 2 is opposite.
    error1_sign: f64,
    base_peak_deg: f64,
}

const UP: Vector3<f64> = Vector3::new(0.0, 1.0, 0.0);
const DOWN: Vector3<f64> = Vector3::new(0.0, -1.0, 0.0);
const ANTERIOR: Vector3<f64> = Vector3::new(0.0, 0.0, -1.0);
const POSTERIOR: Vector3<f64> = Vector3::new(0.0, 0.0, 1.0);
const RIGHT: Vector3<f64> = Vector3::new(1.0, 0.0, 0.0);
const LEFT: Vector3<f64> = Vector3::new(-1.0, 0.0, 0.0);

fn limb_motion(activity_id: &str) -> Option<LimbMotion> {
    use Segment::*;
    // Abduction errors lean toward the front (+frontal); flexion and extension
    // errors move away from the body (+sagittal); rotation errors drop toward
    // the floor (-transverse).
    let (segment, rest, swing, deviation_normal, error1_sign, base_peak_deg) = match activity_id {
        "shoulder_abduction" => (Arm, DOWN, RIGHT, ANTERIOR, 1.0, 80.0),
        "hip_abduction" => (Leg, DOWN, RIGHT, ANTERIOR, 1.0, 40.0),
        "shoulder_extension" => (Arm, DOWN, POSTERIOR, RIGHT, 1.0, 45.0),
        "hip_extension" => (Leg, DOWN, POSTERIOR, RIGHT, 1.0, 25.0),
        "elbow_extension" => (Forearm, ANTERIOR, DOWN, RIGHT, 1.0, 80.0),
        "shoulder_flexion" => (Arm, DOWN, ANTERIOR, RIGHT, 1.0, 80.0),
        "hip_flexion" => (Leg, DOWN, ANTERIOR, RIGHT, 1.0, 60.0),
        "elbow_flexion" => (Forearm, DOWN, ANTERIOR, RIGHT, 1.0, 120.0),
        "shoulder_internal_rotation" => (Forearm, ANTERIOR, LEFT, UP, -1.0, 60.0),
        "shoulder_external_rotation" => (Forearm, ANTERIOR, RIGHT, UP, -1.0, 60.0),
        _ => return None,
    };
    Some(LimbMotion {
        segment,
        rest,
        swing,
        deviation_normal,
        error1_sign,
        base_peak_deg,
    })
}

/// Base peak angle of an exercise, degrees.
pub fn base_peak_angle(activity_id: &str) -> Option<f64> {
    limb_motion(activity_id).map(|m| m.base_peak_deg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionScript {
    pub activity_id: String,
    pub duration_frames: usize,
    pub peak_angle: f64,
    pub deviation: Deviation,
    pub deviation_magnitude: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl MotionScript {
    pub fn new(
        activity_id: impl Into<String>,
        duration_frames: usize,
        peak_angle: f64,
        deviation: Deviation,
        deviation_magnitude: f64,
        noise_std: f64,
        seed: u64,
    ) -> Result<Self, SynthError> {
        let script = Self {
            activity_id: activity_id.into(),
            duration_frames,
            peak_angle,
            deviation,
            deviation_magnitude,
            noise_std,
            seed,
        };
        script.validate()?;
        Ok(script)
    }

    /// A clean, noise-free repetition at the exercise's base parameters.
    pub fn base(activity_id: &str) -> Result<Self, SynthError> {
        let peak = base_peak_angle(activity_id)
            .ok_or_else(|| SynthError::UnknownActivity(activity_id.to_string()))?;
        Self::new(activity_id, DEFAULT_DURATION_FRAMES, peak, Deviation::None, 0.0, 0.0, 0)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if limb_motion(&self.activity_id).is_none() {
            return Err(SynthError::UnknownActivity(self.activity_id.clone()));
        }
        if self.duration_frames < MIN_DURATION_FRAMES {
            return Err(SynthError::InvalidScript(format!(
                "duration {} < {MIN_DURATION_FRAMES} frames",
                self.duration_frames
            )));
        }
        if !(0.0..=MAX_DEVIATION_DEG).contains(&self.deviation_magnitude) {
            return Err(SynthError::InvalidScript(format!(
                "deviation magnitude {} outside [0, {MAX_DEVIATION_DEG}]",
                self.deviation_magnitude
            )));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(SynthError::InvalidScript("noise_std must be >= 0".into()));
        }
        if !self.peak_angle.is_finite() {
            return Err(SynthError::InvalidScript("peak angle must be finite".into()));
        }
        Ok(())
    }
}

/// Per-frame driven angles (degrees) after noise.
#[derive(Debug, Clone, PartialEq)]
pub struct DrivenAngles {
    pub movement: Vec<f64>,
    pub deviation: Vec<f64>,
}

fn half_sine(i: usize, n: usize) -> f64 {
    (std::f64::consts::PI * i as f64 / (n - 1) as f64).sin()
}

pub fn driven_angles(script: &MotionScript) -> Result<DrivenAngles, SynthError> {
    script.validate()?;
    let motion = limb_motion(&script.activity_id).expect("validated");
    let n = script.duration_frames;
    let sign = match script.deviation {
        Deviation::None => 0.0,
        Deviation::Error1 => motion.error1_sign,
        Deviation::Error2 => -motion.error1_sign,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(script.seed);
    let noise = Normal::new(0.0, script.noise_std)
        .map_err(|e| SynthError::InvalidScript(e.to_string()))?;
    let mut movement = Vec::with_capacity(n);
    let mut deviation = Vec::with_capacity(n);
    for i in 0..n {
        let s = half_sine(i, n);
        let (ea, ed) = if script.noise_std > 0.0 {
            (noise.sample(&mut rng), noise.sample(&mut rng))
        } else {
            (0.0, 0.0)
        };
        movement.push(script.peak_angle * s + ea);
        deviation.push(sign * script.deviation_magnitude * s + ed);
    }
    Ok(DrivenAngles {
        movement,
        deviation,
    })
}

fn segment_direction(motion: &LimbMotion, movement_deg: f64, deviation_deg: f64) -> Vector3<f64> {
    let (a, d) = (movement_deg.to_radians(), deviation_deg.to_radians());
    let in_plane = motion.rest * a.cos() + motion.swing * a.sin();
    in_plane * d.cos() + motion.deviation_normal * d.sin()
}

/// Plane angles the generator's forward model predicts for a script: the
/// arcsine of the segment direction's component along each plane normal.
pub fn scripted_angles(script: &MotionScript) -> Result<AngleSequence, SynthError> {
    let motion = limb_motion(&script.activity_id).expect("validated");
    let driven = driven_angles(script)?;
    let frames = driven
        .movement
        .iter()
        .zip(&driven.deviation)
        .map(|(&a, &d)| {
            let u = segment_direction(&motion, a, d);
            let deg = |c: f64| c.clamp(-1.0, 1.0).asin().to_degrees();
            AngleFrame {
                frontal: deg(u.dot(&ANTERIOR)),
                sagittal: deg(u.dot(&RIGHT)),
                transverse: deg(u.dot(&UP)),
            }
        })
        .collect();
    Ok(AngleSequence { frames })
}

/// In-plane movement angle recovered from a segment direction, degrees.
pub fn movement_angle(activity_id: &str, direction: Vector3<f64>) -> Option<f64> {
    let m = limb_motion(activity_id)?;
    Some(direction.dot(&m.swing).atan2(direction.dot(&m.rest)).to_degrees())
}

fn rest_skeleton() -> BTreeMap<JointName, Vector3<f64>> {
    use JointName::*;
    let z = SUBJECT_DEPTH;
    let (sx, hx) = (SHOULDER_WIDTH / 2.0, HIP_WIDTH / 2.0);
    let mut j = BTreeMap::new();
    j.insert(ShoulderCenter, Vector3::new(0.0, SHOULDER_HEIGHT + SHOULDER_CENTER_RISE, z));
    j.insert(LeftShoulder, Vector3::new(-sx, SHOULDER_HEIGHT, z));
    j.insert(RightShoulder, Vector3::new(sx, SHOULDER_HEIGHT, z));
    j.insert(HipCenter, Vector3::new(0.0, HIP_HEIGHT, z));
    j.insert(LeftHip, Vector3::new(-hx, HIP_HEIGHT, z));
    j.insert(RightHip, Vector3::new(hx, HIP_HEIGHT, z));
    for (side, x) in [(-1.0, -sx), (1.0, sx)] {
        let (elbow, wrist, hand) = if side < 0.0 {
            (LeftElbow, LeftWrist, LeftHand)
        } else {
            (RightElbow, RightWrist, RightHand)
        };
        j.insert(elbow, Vector3::new(x, SHOULDER_HEIGHT - UPPER_ARM, z));
        j.insert(wrist, Vector3::new(x, SHOULDER_HEIGHT - UPPER_ARM - FOREARM, z));
        j.insert(hand, Vector3::new(x, SHOULDER_HEIGHT - UPPER_ARM - FOREARM - HAND, z));
    }
    for (side, x) in [(-1.0, -hx), (1.0, hx)] {
        let (knee, ankle, foot) = if side < 0.0 {
            (LeftKnee, LeftAnkle, LeftFoot)
        } else {
            (RightKnee, RightAnkle, RightFoot)
        };
        j.insert(knee, Vector3::new(x, HIP_HEIGHT - THIGH, z));
        j.insert(ankle, Vector3::new(x, HIP_HEIGHT - THIGH - SHANK, z));
        j.insert(foot, Vector3::new(x, HIP_HEIGHT - THIGH - SHANK, z - FOOT));
    }
    j
}

fn pose(motion: &LimbMotion, u: Vector3<f64>) -> BTreeMap<JointName, Vector3<f64>> {
    use JointName::*;
    let mut j = rest_skeleton();
    match motion.segment {
        Segment::Arm => {
            let s = j[&RightShoulder];
            j.insert(RightElbow, s + u * UPPER_ARM);
            j.insert(RightWrist, s + u * (UPPER_ARM + FOREARM));
            j.insert(RightHand, s + u * (UPPER_ARM + FOREARM + HAND));
        }
        Segment::Forearm => {
            let e = j[&RightElbow];
            j.insert(RightWrist, e + u * FOREARM);
            j.insert(RightHand, e + u * (FOREARM + HAND));
        }
        Segment::Leg => {
            let h = j[&RightHip];
            let ankle = h + u * (THIGH + SHANK);
            j.insert(RightKnee, h + u * THIGH);
            j.insert(RightAnkle, ankle);
            j.insert(RightFoot, ankle + ANTERIOR * FOOT);
        }
    }
    j
}

/// Renders a script as a skeleton recording at [`FRAME_RATE_HZ`].
pub fn generate(script: &MotionScript) -> Result<SkeletonSequence, SynthError> {
    let motion = limb_motion(&script.activity_id)
        .ok_or_else(|| SynthError::UnknownActivity(script.activity_id.clone()))?;
    let driven = driven_angles(script)?;
    let frames = driven
        .movement
        .iter()
        .zip(&driven.deviation)
        .enumerate()
        .map(|(i, (&a, &d))| SkeletonFrame {
            timestamp: i as f64 / FRAME_RATE_HZ,
            joints: pose(&motion, segment_direction(&motion, a, d)),
        })
        .collect();
    Ok(SkeletonSequence::new(
        script.activity_id.clone(),
        format!("seed{}", script.seed),
        script.deviation.label(),
        frames,
    )
    .expect("generator builds valid sequences"))
}

/// Base parameters for one exercise in a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityScript {
    pub activity_id: String,
    pub peak_angle: f64,
    pub duration_frames: usize,
    pub deviation_magnitude: f64,
    pub noise_std: f64,
}

impl ActivityScript {
    pub fn defaults(activity_id: &str) -> Result<Self, SynthError> {
        Ok(Self {
            activity_id: activity_id.to_string(),
            peak_angle: base_peak_angle(activity_id)
                .ok_or_else(|| SynthError::UnknownActivity(activity_id.to_string()))?,
            duration_frames: DEFAULT_DURATION_FRAMES,
            deviation_magnitude: DEFAULT_DEVIATION_DEG,
            noise_std: DEFAULT_NOISE_STD_DEG,
        })
    }

    pub fn all_defaults() -> Vec<Self> {
        activity::ACTIVITY_IDS
            .iter()
            .map(|id| Self::defaults(id).expect("catalog activity"))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedSequence {
    pub script: MotionScript,
    pub sequence: SkeletonSequence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub seed: u64,
    pub items: Vec<GeneratedSequence>,
}

impl Dataset {
    pub fn sequences(&self) -> impl Iterator<Item = &SkeletonSequence> {
        self.items.iter().map(|g| &g.sequence)
    }

    pub fn with_label(&self, label: Label) -> Vec<SkeletonSequence> {
        self.sequences().filter(|s| s.label == label).cloned().collect()
    }

    pub fn without_label(&self, label: Label) -> Vec<SkeletonSequence> {
        self.sequences().filter(|s| s.label != label).cloned().collect()
    }

    /// SHA-256 over the CSV rendering of every sequence, in order.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for g in &self.items {
            h.update(g.sequence.activity_id.as_bytes());
            h.update(g.sequence.label.as_str().as_bytes());
            h.update(motion::to_csv(&g.sequence).as_bytes());
        }
        hex::encode(h.finalize())
    }
}

fn jittered(rng: &mut ChaCha8Rng, base: &ActivityScript, deviation: Deviation) -> MotionScript {
    let peak = base.peak_angle * (1.0 + rng.random_range(-PEAK_JITTER..=PEAK_JITTER));
    let duration = (base.duration_frames as f64
        * (1.0 + rng.random_range(-DURATION_JITTER..=DURATION_JITTER)))
    .round()
    .max(MIN_DURATION_FRAMES as f64) as usize;
    MotionScript {
        activity_id: base.activity_id.clone(),
        duration_frames: duration,
        peak_angle: peak,
        deviation,
        deviation_magnitude: if deviation == Deviation::None {
            0.0
        } else {
            base.deviation_magnitude
        },
        noise_std: base.noise_std,
        seed: rng.random(),
    }
}

/// Correct repetitions come from 14 subjects (three each) and error
/// repetitions from 10 subjects (ten each); ids cycle when counts differ.
fn subject_id(label: Label, index: usize) -> String {
    match label {
        Label::Correct => format!("c{:02}", index / 3 % 14 + 1),
        _ => format!("e{:02}", index / 10 % 10 + 1),
    }
}

/// Builds `n_correct` correct and `n_error` of each error type per activity.
pub fn generate_dataset(
    n_correct: usize,
    n_error: usize,
    scripts: &[ActivityScript],
    seed: u64,
) -> Result<Dataset, SynthError> {
    generate_dataset_with(n_correct, n_error, scripts, seed, Execution::default())
}

pub fn generate_dataset_with(
    n_correct: usize,
    n_error: usize,
    scripts: &[ActivityScript],
    seed: u64,
    exec: Execution,
) -> Result<Dataset, SynthError> {
    if n_correct < 2 || n_error < 2 {
        return Err(SynthError::InvalidScript("counts must be >= 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut plan = Vec::new();
    for base in scripts {
        for (deviation, count) in [
            (Deviation::None, n_correct),
            (Deviation::Error1, n_error),
            (Deviation::Error2, n_error),
        ] {
            for i in 0..count {
                let script = jittered(&mut rng, base, deviation);
                script.validate()?;
                plan.push((script, subject_id(deviation.label(), i)));
            }
        }
    }
    let items = par::try_map(exec, &plan, |(script, subject)| {
        let mut sequence = generate(script)?;
        sequence.subject_id = subject.clone();
        Ok::<_, SynthError>(GeneratedSequence {
            script: script.clone(),
            sequence,
        })
    })?;
    Ok(Dataset { seed, items })
}

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Path relative to the dataset directory.
    pub file: String,
    pub activity_id: String,
    pub subject_id: String,
    pub label: Label,
    pub script: MotionScript,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub format: FileFormat,
    pub frame_rate_hz: f64,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

fn entry_path(seq: &SkeletonSequence, index: usize, format: FileFormat) -> String {
    format!("{}/{}_{index:03}.{}", seq.activity_id, seq.label, format.extension())
}

/// Writes every sequence and a manifest under `dir`.
pub fn save_dataset(dataset: &Dataset, dir: &Path, format: FileFormat) -> Result<Manifest, MotionError> {
    let mut counters: BTreeMap<(String, Label), usize> = BTreeMap::new();
    let mut entries = Vec::with_capacity(dataset.items.len());
    for g in &dataset.items {
        let seq = &g.sequence;
        let counter = counters.entry((seq.activity_id.clone(), seq.label)).or_default();
        let file = entry_path(seq, *counter, format);
        *counter += 1;
        let body = match format {
            FileFormat::Csv => motion::to_csv(seq),
            FileFormat::Json => motion::to_json(seq),
        };
        motion::write_atomic(&dir.join(&file), body.as_bytes())?;
        entries.push(ManifestEntry {
            file,
            activity_id: seq.activity_id.clone(),
            subject_id: seq.subject_id.clone(),
            label: seq.label,
            script: g.script.clone(),
            sha256: hex::encode(Sha256::digest(body.as_bytes())),
        });
    }
    let manifest = Manifest {
        seed: dataset.seed,
        format,
        frame_rate_hz: FRAME_RATE_HZ,
        entries,
    };
    motion::write_atomic(&dir.join(MANIFEST_FILE), manifest.to_json().as_bytes())?;
    Ok(manifest)
}

pub fn load_manifest(dir: &Path) -> Result<Manifest, MotionError> {
    let text = std::fs::read_to_string(dir.join(MANIFEST_FILE))?;
    Ok(serde_json::from_str(&text)?)
}

/// Reads every sequence a manifest lists, taking metadata from the manifest.
pub fn load_dataset(dir: &Path) -> Result<(Manifest, Vec<SkeletonSequence>), MotionError> {
    load_dataset_excluding(dir, &BTreeSet::new())
}

/// Reads an exclude list: one manifest file path per line, `#` starts a comment.
pub fn read_exclude_list(path: &Path) -> Result<BTreeSet<String>, MotionError> {
    let text = fs::read_to_string(path)?;
    Ok(text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::to_owned)
        .collect())
}

/// Like [`load_dataset`] but drops the listed files. Every listed file must
/// appear in the manifest.
pub fn load_dataset_excluding(
    dir: &Path,
    exclude: &BTreeSet<String>,
) -> Result<(Manifest, Vec<SkeletonSequence>), MotionError> {
    let mut manifest = load_manifest(dir)?;
    if let Some(unknown) = exclude.iter().find(|f| !manifest.entries.iter().any(|e| &e.file == *f)) {
        return Err(MotionError::Parse(format!("excluded file `{unknown}` is not in the manifest")));
    }
    manifest.entries.retain(|e| !exclude.contains(&e.file));
    let mut out = Vec::with_capacity(manifest.entries.len());
    for e in &manifest.entries {
        let path = dir.join(&e.file);
        let format = FileFormat::from_path(&path).unwrap_or(manifest.format);
        let seq = motion::load_sequence(&path, format)?;
        out.push(SkeletonSequence::new(
            e.activity_id.clone(),
            e.subject_id.clone(),
            e.label,
            seq.frames().to_vec(),
        )?);
    }
    Ok((manifest, out))
}
