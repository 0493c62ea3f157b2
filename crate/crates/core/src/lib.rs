//! Accept/reject evaluation of therapy-exercise repetitions recorded as
//! skeleton joint trajectories.
//!
//! Two detector families are provided. Multi-dimensional DTW compares a
//! repetition against a medoid template and accepts it when the distance falls
//! inside a calibrated band. Discrete HMMs score quantized limb-angle (or
//! coordinate) tracks and accept when the per-symbol log-likelihood does.
//! Repetitions are split into an outward and a return phase, each with its
//! own detectors.

pub mod activity;
pub mod artifact;
pub mod cli;
pub mod dtw;
pub mod eval;
pub mod experiment;
pub mod hmm;
pub mod kinematics;
pub mod motion;
pub mod par;
pub mod quantize;
pub mod synth;

use thiserror::Error;

/// Any failure surfaced by the command-line front end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Motion(#[from] motion::MotionError),
    #[error(transparent)]
    Eval(#[from] eval::EvalError),
    #[error(transparent)]
    Synth(#[from] synth::SynthError),
    #[error(transparent)]
    Artifact(#[from] artifact::ArtifactError),
}

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

impl Error {
    pub fn exit_code(&self) -> i32 {
        use eval::EvalError as E;
        match self {
            Error::Usage(_) | Error::Synth(_) => EXIT_USAGE,
            Error::Eval(E::InvalidConfig(_) | E::UnknownActivity(_)) => EXIT_USAGE,
            Error::Eval(E::Dtw(dtw::DtwError::NonFinite))
            | Error::Eval(E::Hmm(hmm::HmmError::InvalidModel(_)))
            | Error::Artifact(artifact::ArtifactError::Model(_)) => EXIT_NUMERICAL,
            Error::Artifact(artifact::ArtifactError::Format(_)) => EXIT_USAGE,
            _ => EXIT_DATA,
        }
    }
}
