//! JSON persistence of trained detectors.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dtw::DtwTemplate;
use crate::eval::{AcceptanceInterval, EvalError, Phase, Pipeline};
use crate::experiment::{DtwDetector, HmmDetector};
use crate::hmm::{HmmError, HmmModel, Topology};
use crate::motion::{self, MotionError};
use crate::quantize::{Characteristic, CoordinateMap};

#[derive(Debug, thiserror::Error)]
pub enum ArtifactError {
    #[error("malformed artifact: {0}")]
    Format(String),
    #[error(transparent)]
    Model(#[from] HmmError),
    #[error(transparent)]
    Io(#[from] MotionError),
}

impl From<serde_json::Error> for ArtifactError {
    fn from(e: serde_json::Error) -> Self {
        ArtifactError::Format(e.to_string())
    }
}

impl From<std::io::Error> for ArtifactError {
    fn from(e: std::io::Error) -> Self {
        ArtifactError::Io(MotionError::Io(e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmmTrainingInfo {
    pub activity: String,
    pub phase: Phase,
    pub pipeline: Pipeline,
    pub characteristic: Characteristic,
    pub n_sequences: usize,
    pub seed: u64,
    pub iterations: usize,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coordinate_map: Option<CoordinateMap>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmmArtifact {
    pub n_states: usize,
    pub n_symbols: usize,
    pub topology: Topology,
    #[serde(rename = "A")]
    pub transition: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub emission: Vec<Vec<f64>>,
    pub pi: Vec<f64>,
    pub floor_eps: f64,
    pub trained_on: HmmTrainingInfo,
    pub calibration: AcceptanceInterval,
}

impl HmmArtifact {
    pub fn from_detector(detector: &HmmDetector, info: HmmTrainingInfo) -> Self {
        let m = &detector.model;
        Self {
            n_states: m.n_states(),
            n_symbols: m.n_symbols(),
            topology: m.topology(),
            transition: m.transition_rows(),
            emission: m.emission_rows(),
            pi: m.initial().to_vec(),
            floor_eps: m.floor_eps(),
            trained_on: info,
            calibration: detector.interval,
        }
    }

    pub fn model(&self) -> Result<HmmModel, ArtifactError> {
        Ok(HmmModel::new(
            self.n_states,
            self.n_symbols,
            self.topology,
            self.pi.clone(),
            self.transition.concat(),
            self.emission.concat(),
        )?
        .with_floor_eps(self.floor_eps))
    }

    pub fn detector(&self) -> Result<HmmDetector, ArtifactError> {
        Ok(HmmDetector {
            characteristic: self.trained_on.characteristic,
            model: self.model()?,
            interval: self.calibration,
            coordinate_map: self.trained_on.coordinate_map,
            iterations: self.trained_on.iterations,
            converged: self.trained_on.converged,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtwArtifact {
    pub activity: String,
    pub phase: Phase,
    pub pipeline: Pipeline,
    pub n_sequences: usize,
    pub template: DtwTemplate,
    pub calibration: AcceptanceInterval,
}

impl DtwArtifact {
    pub fn detector(&self) -> DtwDetector {
        DtwDetector {
            template: self.template.clone(),
            interval: self.calibration,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Artifact {
    Hmm(HmmArtifact),
    Dtw(DtwArtifact),
}

impl Artifact {
    pub fn activity(&self) -> &str {
        match self {
            Artifact::Hmm(a) => &a.trained_on.activity,
            Artifact::Dtw(a) => &a.activity,
        }
    }

    pub fn phase(&self) -> Phase {
        match self {
            Artifact::Hmm(a) => a.trained_on.phase,
            Artifact::Dtw(a) => a.phase,
        }
    }

    pub fn pipeline(&self) -> Pipeline {
        match self {
            Artifact::Hmm(a) => a.trained_on.pipeline,
            Artifact::Dtw(a) => a.pipeline,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("artifact serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ArtifactError> {
        let artifact: Artifact = serde_json::from_str(text)?;
        if let Artifact::Hmm(h) = &artifact {
            h.model()?;
        }
        Ok(artifact)
    }

    pub fn save(&self, path: &Path) -> Result<(), ArtifactError> {
        motion::write_atomic(path, self.to_json().as_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ArtifactError> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

impl From<ArtifactError> for EvalError {
    fn from(e: ArtifactError) -> Self {
        match e {
            ArtifactError::Model(h) => EvalError::Hmm(h),
            ArtifactError::Io(m) => EvalError::Motion(m),
            ArtifactError::Format(s) => EvalError::InvalidConfig(s),
        }
    }
}
