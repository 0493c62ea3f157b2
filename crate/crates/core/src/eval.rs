//! Acceptance intervals, phase segmentation and accept/reject verdicts.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dtw::{self, DtwError, DtwTemplate, VectorSeries};
use crate::hmm::{self, HmmError, HmmModel};
use crate::kinematics::{AngleSequence, KinematicsError};
use crate::motion::{ActivityDefinition, MotionError};
use crate::quantize::{QuantizeError, SymbolSequence};

pub const DEFAULT_K_SIGMA: f64 = 2.0;
/// Shortest admissible phase, in frames.
pub const MIN_PHASE_LEN: usize = 2;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("sequence of {len} frames splits at {split_index}, leaving a phase shorter than {MIN_PHASE_LEN} frames")]
    TooShort { len: usize, split_index: usize },
    #[error("calibration needs at least 2 finite statistics, got {0}")]
    InsufficientCalibration(usize),
    #[error("interval calibrated for {expected} cannot score {found}")]
    WrongStatistic {
        expected: StatisticKind,
        found: StatisticKind,
    },
    #[error("activity `{0}` has no error sequences")]
    MissingActivityData(String),
    #[error("unknown activity `{0}`")]
    UnknownActivity(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Dtw(#[from] DtwError),
    #[error(transparent)]
    Hmm(#[from] HmmError),
    #[error(transparent)]
    Quantize(#[from] QuantizeError),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Motion(#[from] MotionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatisticKind {
    DtwDistance,
    HmmPerSymbolLoglik,
}

impl fmt::Display for StatisticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StatisticKind::DtwDistance => "dtw_distance",
            StatisticKind::HmmPerSymbolLoglik => "hmm_per_symbol_loglik",
        })
    }
}

/// Two-sided band `mean ± k_sigma * std`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceInterval {
    pub lo: f64,
    pub hi: f64,
    pub statistic_kind: StatisticKind,
    pub mean: f64,
    pub std: f64,
    pub k_sigma: f64,
}

impl AcceptanceInterval {
    pub fn contains(&self, statistic: f64) -> bool {
        self.lo <= statistic && statistic <= self.hi
    }
}

/// Mean and sample standard deviation of the statistics, widened by
/// `k_sigma` on both sides.
pub fn calibrate(
    statistics: &[f64],
    kind: StatisticKind,
    k_sigma: f64,
) -> Result<AcceptanceInterval, EvalError> {
    let n = statistics.len();
    if n < 2 || statistics.iter().any(|s| !s.is_finite()) {
        return Err(EvalError::InsufficientCalibration(
            statistics.iter().filter(|s| s.is_finite()).count(),
        ));
    }
    if !(k_sigma > 0.0 && k_sigma.is_finite()) {
        return Err(EvalError::InvalidConfig(format!("k_sigma must be > 0, got {k_sigma}")));
    }
    let (mean, std) = if statistics.iter().all(|&s| s == statistics[0]) {
        // summing identical values can drift the mean off by an ulp
        (statistics[0], 0.0)
    } else {
        let mean = statistics.iter().sum::<f64>() / n as f64;
        let var = statistics.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1) as f64;
        (mean, var.sqrt())
    };
    Ok(AcceptanceInterval {
        lo: mean - k_sigma * std,
        hi: mean + k_sigma * std,
        statistic_kind: kind,
        mean,
        std,
        k_sigma,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Phase {
    /// Limb moving away from the body.
    One,
    /// Limb returning to the initial position.
    Two,
}

impl Phase {
    pub const BOTH: [Phase; 2] = [Phase::One, Phase::Two];

    pub fn number(self) -> u8 {
        match self {
            Phase::One => 1,
            Phase::Two => 2,
        }
    }

    /// Inclusive frame range of this phase for a split at `split` in a
    /// sequence of `len` frames.
    pub fn bounds(self, split: usize, len: usize) -> (usize, usize) {
        match self {
            Phase::One => (0, split),
            Phase::Two => (split, len - 1),
        }
    }
}

impl From<Phase> for u8 {
    fn from(p: Phase) -> u8 {
        p.number()
    }
}

impl TryFrom<u8> for Phase {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            1 => Ok(Phase::One),
            2 => Ok(Phase::Two),
            other => Err(format!("phase must be 1 or 2, got {other}")),
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

impl FromStr for Phase {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "1" => Ok(Phase::One),
            "2" => Ok(Phase::Two),
            other => Err(EvalError::InvalidConfig(format!("phase must be 1 or 2, got `{other}`"))),
        }
    }
}

/// The two movement phases of one repetition. Both include the split frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePair {
    pub phase1: AngleSequence,
    pub phase2: AngleSequence,
    pub split_index: usize,
}

/// Frame of largest displacement from the first frame; the earliest wins ties.
pub fn split_index(track: &[f64]) -> usize {
    let Some(&first) = track.first() else {
        return 0;
    };
    let mut best = 0;
    let mut best_disp = 0.0;
    for (t, &v) in track.iter().enumerate() {
        let disp = (v - first).abs();
        if disp > best_disp {
            best = t;
            best_disp = disp;
        }
    }
    best
}

/// Checks that a split leaves both phases at least [`MIN_PHASE_LEN`] long.
pub fn check_split(split_index: usize, len: usize) -> Result<(), EvalError> {
    if split_index + 1 < MIN_PHASE_LEN || len - split_index < MIN_PHASE_LEN {
        return Err(EvalError::TooShort { len, split_index });
    }
    Ok(())
}

pub fn segment_phases(angles: &AngleSequence, def: &ActivityDefinition) -> Result<PhasePair, EvalError> {
    let len = angles.len();
    if len < 4 {
        return Err(EvalError::TooShort { len, split_index: 0 });
    }
    let split = split_index(&angles.track(def.primary_plane));
    check_split(split, len)?;
    Ok(PhasePair {
        phase1: AngleSequence {
            frames: angles.frames[..=split].to_vec(),
        },
        phase2: AngleSequence {
            frames: angles.frames[split..].to_vec(),
        },
        split_index: split,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    MddtwCoords,
    MddtwAngles,
    HmmCoords,
    HmmAngles,
}

impl Pipeline {
    pub const ALL: [Pipeline; 4] = [
        Pipeline::MddtwCoords,
        Pipeline::MddtwAngles,
        Pipeline::HmmCoords,
        Pipeline::HmmAngles,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Pipeline::MddtwCoords => "mddtw_coords",
            Pipeline::MddtwAngles => "mddtw_angles",
            Pipeline::HmmCoords => "hmm_coords",
            Pipeline::HmmAngles => "hmm_angles",
        }
    }

    pub fn is_hmm(self) -> bool {
        matches!(self, Pipeline::HmmCoords | Pipeline::HmmAngles)
    }

    pub fn uses_angles(self) -> bool {
        matches!(self, Pipeline::MddtwAngles | Pipeline::HmmAngles)
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pipeline {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Pipeline::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| EvalError::InvalidConfig(format!("unknown pipeline `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub accepted: bool,
    pub statistic: f64,
    pub interval: AcceptanceInterval,
    pub pipeline: Pipeline,
    pub phase: Phase,
    /// For multi-characteristic HMM verdicts: characteristic → (statistic, accepted).
    pub per_characteristic: Option<BTreeMap<String, (f64, bool)>>,
}

fn expect_kind(interval: &AcceptanceInterval, kind: StatisticKind) -> Result<(), EvalError> {
    if interval.statistic_kind != kind {
        return Err(EvalError::WrongStatistic {
            expected: interval.statistic_kind,
            found: kind,
        });
    }
    Ok(())
}

pub fn evaluate_dtw(
    test: &VectorSeries,
    template: &DtwTemplate,
    interval: &AcceptanceInterval,
    pipeline: Pipeline,
    phase: Phase,
) -> Result<Verdict, EvalError> {
    expect_kind(interval, StatisticKind::DtwDistance)?;
    let statistic = dtw::mddtw_distance_with(test, &template.series, template.normalization)?;
    Ok(Verdict {
        accepted: interval.contains(statistic),
        statistic,
        interval: *interval,
        pipeline,
        phase,
        per_characteristic: None,
    })
}

pub fn evaluate_hmm(
    test: &SymbolSequence,
    model: &HmmModel,
    interval: &AcceptanceInterval,
    pipeline: Pipeline,
    phase: Phase,
) -> Result<Verdict, EvalError> {
    expect_kind(interval, StatisticKind::HmmPerSymbolLoglik)?;
    let statistic = hmm::forward(model, test)?.per_symbol;
    Ok(Verdict {
        accepted: interval.contains(statistic),
        statistic,
        interval: *interval,
        pipeline,
        phase,
        per_characteristic: None,
    })
}

/// Per-characteristic HMM verdicts for one sequence and phase, folded into a
/// single verdict that rejects when any characteristic rejects. The folded
/// statistic and interval are those of the first rejecting characteristic,
/// or of the first characteristic when all accept.
pub fn combine(verdicts: &[(String, Verdict)]) -> Option<Verdict> {
    let (_, first) = verdicts.first()?;
    let lead = verdicts
        .iter()
        .find(|(_, v)| !v.accepted)
        .map(|(_, v)| v)
        .unwrap_or(first);
    Some(Verdict {
        accepted: verdicts.iter().all(|(_, v)| v.accepted),
        statistic: lead.statistic,
        interval: lead.interval,
        pipeline: first.pipeline,
        phase: first.phase,
        per_characteristic: Some(
            verdicts
                .iter()
                .map(|(name, v)| (name.clone(), (v.statistic, v.accepted)))
                .collect(),
        ),
    })
}
