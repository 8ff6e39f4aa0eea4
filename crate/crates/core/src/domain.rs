//! Activity vocabulary, sample and recording types, and elementary signal math.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Nominal sampling rate of the wrist device.
pub const DEFAULT_RATE_HZ: f64 = 50.0;

/// The five activity classes. Ordinals are fixed and define every
/// tie-break downstream (lowest ordinal wins).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum ActivityLabel {
    Null = 0,
    LiftUp = 1,
    LiftDown = 2,
    StairsUp = 3,
    StairsDown = 4,
}

impl ActivityLabel {
    pub const COUNT: usize = 5;

    pub const ALL: [ActivityLabel; 5] = [
        ActivityLabel::Null,
        ActivityLabel::LiftUp,
        ActivityLabel::LiftDown,
        ActivityLabel::StairsUp,
        ActivityLabel::StairsDown,
    ];

    pub fn ordinal(self) -> usize {
        self as usize
    }

    pub fn from_ordinal(ordinal: usize) -> Option<Self> {
        Self::ALL.get(ordinal).copied()
    }

    pub fn canonical_name(self) -> &'static str {
        match self {
            ActivityLabel::Null => "Null",
            ActivityLabel::LiftUp => "Lift Up",
            ActivityLabel::LiftDown => "Lift Down",
            ActivityLabel::StairsUp => "Stairs Up",
            ActivityLabel::StairsDown => "Stairs Down",
        }
    }

    /// Whether the activity changes floor upwards (pressure falls).
    pub fn ascends(self) -> bool {
        matches!(self, ActivityLabel::LiftUp | ActivityLabel::StairsUp)
    }
}

impl fmt::Display for ActivityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.canonical_name())
    }
}

impl FromStr for ActivityLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_label(s)
    }
}

/// Case-insensitive, whitespace-trimmed match against the canonical names.
/// Inner whitespace runs are collapsed, so `"Lift   up"` is accepted.
pub fn parse_label(text: &str) -> Result<ActivityLabel> {
    let normalized = text
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_ascii_lowercase();
    ActivityLabel::ALL
        .into_iter()
        .find(|l| l.canonical_name().to_ascii_lowercase() == normalized)
        .ok_or_else(|| Error::UnknownLabel(text.to_string()))
}

/// Euclidean norm of a 3-axis acceleration.
pub fn compute_magnitude<T: Scalar>(x: T, y: T, z: T) -> Result<T> {
    if !(x.is_finite() && y.is_finite() && z.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    Ok((x * x + y * y + z * z).sqrt())
}

/// One reading of the wrist device.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorSample {
    pub timestamp_ms: i64,
    pub acc_x: f64,
    pub acc_y: f64,
    pub acc_z: f64,
    pub magnitude: f64,
    pub pressure: f64,
    pub label: Option<ActivityLabel>,
    /// Set by resampling when the sample sits inside a source gap.
    pub gap_filled: bool,
}

impl SensorSample {
    /// Builds a sample with the magnitude computed from the axes.
    pub fn new(
        timestamp_ms: i64,
        acc: [f64; 3],
        pressure: f64,
        label: Option<ActivityLabel>,
    ) -> Result<Self> {
        let magnitude = compute_magnitude(acc[0], acc[1], acc[2])?;
        if !pressure.is_finite() {
            return Err(Error::NonFiniteInput);
        }
        Ok(Self {
            timestamp_ms,
            acc_x: acc[0],
            acc_y: acc[1],
            acc_z: acc[2],
            magnitude,
            pressure,
            label,
            gap_filled: false,
        })
    }
}

/// A participant's ordered sample stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub participant_id: String,
    pub samples: Vec<SensorSample>,
    pub nominal_rate_hz: f64,
}

impl Recording {
    /// Validates strictly increasing timestamps and a positive rate.
    pub fn new(
        participant_id: impl Into<String>,
        samples: Vec<SensorSample>,
        nominal_rate_hz: f64,
    ) -> Result<Self> {
        if !(nominal_rate_hz > 0.0 && nominal_rate_hz.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "sampling rate must be positive, got {nominal_rate_hz}"
            )));
        }
        if let Some(i) = samples
            .windows(2)
            .position(|w| w[1].timestamp_ms <= w[0].timestamp_ms)
        {
            return Err(Error::NonMonotonicTime { row: i + 1 });
        }
        Ok(Self {
            participant_id: participant_id.into(),
            samples,
            nominal_rate_hz,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn period_ms(&self) -> f64 {
        1000.0 / self.nominal_rate_hz
    }

    /// Time from first sample to the end of the last sample period.
    pub fn span_ms(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => (b.timestamp_ms - a.timestamp_ms) as f64 + self.period_ms(),
            _ => 0.0,
        }
    }
}
