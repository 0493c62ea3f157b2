//! Ten-degree angle bins mapped onto the symbols `1..=18`.
//!
//! Bins are half-open `[lo, lo + 10)` except the top bin, which is `[80, 90]`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::AngleSequence;
use crate::motion::Plane;

pub const N_SYMBOLS: usize = 18;
pub const BIN_WIDTH_DEG: f64 = 10.0;

#[derive(Debug, Error, PartialEq)]
pub enum QuantizeError {
    #[error("angle {angle} at frame {frame_index} is outside [-90, 90]")]
    OutOfRange { frame_index: usize, angle: f64 },
    #[error("cannot quantize an empty track")]
    Empty,
}

/// An observation symbol, `1..=18`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Symbol(u8);

impl Symbol {
    pub const MIN: u8 = 1;
    pub const MAX: u8 = N_SYMBOLS as u8;

    pub fn new(value: u8) -> Option<Self> {
        (Self::MIN..=Self::MAX).contains(&value).then_some(Symbol(value))
    }

    pub fn value(self) -> u8 {
        self.0
    }

    /// Zero-based column in an emission matrix.
    pub fn index(self) -> usize {
        usize::from(self.0) - 1
    }
}

impl TryFrom<u8> for Symbol {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        Symbol::new(v).ok_or_else(|| format!("symbol {v} outside 1..=18"))
    }
}

impl From<Symbol> for u8 {
    fn from(s: Symbol) -> u8 {
        s.0
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The feature track a symbol sequence was quantized from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Characteristic {
    Frontal,
    Sagittal,
    Transverse,
    X,
    Y,
    Z,
}

impl Characteristic {
    pub const PLANES: [Characteristic; 3] = [
        Characteristic::Frontal,
        Characteristic::Sagittal,
        Characteristic::Transverse,
    ];
    pub const AXES: [Characteristic; 3] = [Characteristic::X, Characteristic::Y, Characteristic::Z];

    pub fn as_str(self) -> &'static str {
        match self {
            Characteristic::Frontal => "frontal",
            Characteristic::Sagittal => "sagittal",
            Characteristic::Transverse => "transverse",
            Characteristic::X => "x",
            Characteristic::Y => "y",
            Characteristic::Z => "z",
        }
    }

    pub fn plane(self) -> Option<Plane> {
        match self {
            Characteristic::Frontal => Some(Plane::Frontal),
            Characteristic::Sagittal => Some(Plane::Sagittal),
            Characteristic::Transverse => Some(Plane::Transverse),
            _ => None,
        }
    }

    pub fn axis(self) -> Option<usize> {
        match self {
            Characteristic::X => Some(0),
            Characteristic::Y => Some(1),
            Characteristic::Z => Some(2),
            _ => None,
        }
    }
}

impl From<Plane> for Characteristic {
    fn from(p: Plane) -> Self {
        match p {
            Plane::Frontal => Characteristic::Frontal,
            Plane::Sagittal => Characteristic::Sagittal,
            Plane::Transverse => Characteristic::Transverse,
        }
    }
}

impl fmt::Display for Characteristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolSequence {
    symbols: Vec<Symbol>,
    pub characteristic: Characteristic,
}

impl SymbolSequence {
    pub fn new(symbols: Vec<Symbol>, characteristic: Characteristic) -> Result<Self, QuantizeError> {
        if symbols.is_empty() {
            return Err(QuantizeError::Empty);
        }
        Ok(Self {
            symbols,
            characteristic,
        })
    }

    /// Convenience for tests and hand-built observations. Panics on values
    /// outside `1..=18` or on an empty slice.
    pub fn from_values(values: &[u8]) -> Self {
        let symbols = values
            .iter()
            .map(|&v| Symbol::new(v).expect("symbol in 1..=18"))
            .collect();
        Self::new(symbols, Characteristic::Frontal).expect("non-empty")
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

pub fn quantize(angle: f64) -> Result<Symbol, QuantizeError> {
    if !(-90.0..=90.0).contains(&angle) {
        return Err(QuantizeError::OutOfRange {
            frame_index: 0,
            angle,
        });
    }
    let bin = ((angle + 90.0) / BIN_WIDTH_DEG).floor() as usize + 1;
    Ok(Symbol(bin.min(N_SYMBOLS) as u8))
}

pub fn quantize_track(track: &[f64], characteristic: Characteristic) -> Result<SymbolSequence, QuantizeError> {
    let symbols = track
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            quantize(a).map_err(|_| QuantizeError::OutOfRange {
                frame_index: i,
                angle: a,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    SymbolSequence::new(symbols, characteristic)
}

pub fn quantize_sequence(angles: &AngleSequence, plane: Plane) -> Result<SymbolSequence, QuantizeError> {
    quantize_track(&angles.track(plane), plane.into())
}

/// Affine map of a coordinate track onto `[-90, 90]` so it can share the
/// angle alphabet. Fitted on training data; out-of-range values saturate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoordinateMap {
    pub center: f64,
    pub half_range: f64,
}

impl CoordinateMap {
    /// Fraction of the training half-range added on each side.
    pub const DEFAULT_MARGIN: f64 = 0.25;
    const MIN_HALF_RANGE: f64 = 1e-6;

    pub fn fit<'a>(tracks: impl IntoIterator<Item = &'a [f64]>, margin: f64) -> Option<Self> {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &v in tracks.into_iter().flatten() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !(lo.is_finite() && hi.is_finite()) {
            return None;
        }
        Some(Self {
            center: 0.5 * (lo + hi),
            half_range: (0.5 * (hi - lo) * (1.0 + margin)).max(Self::MIN_HALF_RANGE),
        })
    }

    pub fn to_angle(&self, v: f64) -> f64 {
        ((v - self.center) / self.half_range * 90.0).clamp(-90.0, 90.0)
    }

    pub fn quantize_track(
        &self,
        track: &[f64],
        characteristic: Characteristic,
    ) -> Result<SymbolSequence, QuantizeError> {
        let mapped: Vec<f64> = track.iter().map(|&v| self.to_angle(v)).collect();
        quantize_track(&mapped, characteristic)
    }
}
