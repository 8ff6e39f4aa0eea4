//! Fixed-duration windows over a recording, with majority-vote labelling.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::domain::{ActivityLabel, Recording, SensorSample};
use crate::error::{Error, Result};
use crate::ingest::DEFAULT_GAP_MAX_MS;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowParams {
    pub window_s: f64,
    /// Defaults to the window length (non-overlapping).
    pub stride_s: f64,
    /// Share of samples the majority label must cover (inclusive).
    pub coverage_threshold: f64,
    /// Minimum share of the nominal sample count a window must hold.
    pub min_fill: f64,
    pub gap_max_ms: i64,
}

impl WindowParams {
    pub fn new(window_s: f64) -> Self {
        Self {
            window_s,
            stride_s: window_s,
            coverage_threshold: 0.80,
            min_fill: 0.95,
            gap_max_ms: DEFAULT_GAP_MAX_MS,
        }
    }

    pub fn with_stride(mut self, stride_s: f64) -> Self {
        self.stride_s = stride_s;
        self
    }

    pub fn with_coverage(mut self, coverage_threshold: f64) -> Self {
        self.coverage_threshold = coverage_threshold;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.window_s) || !positive(self.stride_s) {
            return Err(Error::InvalidParams(format!(
                "window ({}) and stride ({}) must be positive",
                self.window_s, self.stride_s
            )));
        }
        if !(self.coverage_threshold > 0.0 && self.coverage_threshold <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "coverage threshold must be in (0, 1], got {}",
                self.coverage_threshold
            )));
        }
        if !(self.min_fill > 0.0 && self.min_fill <= 1.0) || self.gap_max_ms <= 0 {
            return Err(Error::InvalidParams("min_fill must be in (0, 1] and gap_max_ms positive".into()));
        }
        Ok(())
    }
}

impl Default for WindowParams {
    fn default() -> Self {
        Self::new(8.0)
    }
}

/// A slice of a recording covering `[start_ms, end_ms)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Window<'a> {
    pub participant_id: &'a str,
    pub start_ms: i64,
    pub end_ms: i64,
    pub samples: &'a [SensorSample],
    /// `None` when no label reaches the coverage threshold.
    pub label: Option<ActivityLabel>,
}

/// Windows that passed the completeness checks, and how many did not.
#[derive(Debug, Clone)]
pub struct Segmentation<'a> {
    pub windows: Vec<Window<'a>>,
    pub discarded_incomplete: usize,
}

impl Segmentation<'_> {
    pub fn labeled(&self) -> impl Iterator<Item = &Window<'_>> {
        self.windows.iter().filter(|w| w.label.is_some())
    }

    pub fn unlabeled_count(&self) -> usize {
        self.windows.iter().filter(|w| w.label.is_none()).count()
    }
}

/// Modal label if it covers at least `coverage_threshold` of the samples.
/// Unlabelled samples only count toward the denominator; ties go to the
/// lowest ordinal.
pub fn resolve_label(samples: &[SensorSample], coverage_threshold: f64) -> Option<ActivityLabel> {
    if samples.is_empty() {
        return None;
    }
    let mut counts = [0usize; ActivityLabel::COUNT];
    for label in samples.iter().filter_map(|s| s.label) {
        counts[label.ordinal()] += 1;
    }
    let (best, &count) = counts
        .iter()
        .enumerate()
        .rev()
        .max_by_key(|(_, c)| **c)?;
    // inclusive comparison, guarded against the threshold product rounding up
    let needed = coverage_threshold * samples.len() as f64;
    if count > 0 && count as f64 + 1e-9 >= needed {
        ActivityLabel::from_ordinal(best)
    } else {
        None
    }
}

/// Splits a recording into windows starting every `stride_s` seconds from
/// the first sample. Incomplete windows (too few samples, an internal gap,
/// or gap-filled samples) are dropped.
pub fn segment<'a>(recording: &'a Recording, params: &WindowParams) -> Result<Vec<Window<'a>>> {
    segment_counted(recording, params).map(|s| s.windows)
}

pub fn segment_counted<'a>(recording: &'a Recording, params: &WindowParams) -> Result<Segmentation<'a>> {
    params.validate()?;
    let samples = &recording.samples[..];
    let mut out = Segmentation { windows: Vec::new(), discarded_incomplete: 0 };
    let (Some(first), Some(last)) = (samples.first(), samples.last()) else {
        return Ok(out);
    };
    let period_ms = recording.period_ms();
    let window_ms = params.window_s * 1000.0;
    let stride_ms = params.stride_s * 1000.0;
    let expected = (params.window_s * recording.nominal_rate_hz).round();
    let min_count = (params.min_fill * expected - 1e-9).ceil().max(1.0) as usize;
    let horizon = (last.timestamp_ms - first.timestamp_ms) as f64 + period_ms;

    for k in 0u64.. {
        let offset = (k as f64 * stride_ms).round();
        if offset + window_ms > horizon + 1e-6 {
            break;
        }
        let start_ms = first.timestamp_ms + offset as i64;
        let end_ms = start_ms + window_ms.round() as i64;
        let lo = samples.partition_point(|s| s.timestamp_ms < start_ms);
        let hi = samples.partition_point(|s| s.timestamp_ms < end_ms);
        let slice = &samples[lo..hi];
        if !is_complete(slice, start_ms, end_ms, min_count, params.gap_max_ms) {
            out.discarded_incomplete += 1;
            continue;
        }
        out.windows.push(Window {
            participant_id: &recording.participant_id,
            start_ms,
            end_ms,
            samples: slice,
            label: resolve_label(slice, params.coverage_threshold),
        });
    }
    Ok(out)
}

fn is_complete(slice: &[SensorSample], start_ms: i64, end_ms: i64, min_count: usize, gap_max_ms: i64) -> bool {
    let (Some(first), Some(last)) = (slice.first(), slice.last()) else {
        return false;
    };
    slice.len() >= min_count
        && first.timestamp_ms - start_ms <= gap_max_ms
        && end_ms - last.timestamp_ms <= gap_max_ms
        && !slice.iter().any(|s| s.gap_filled)
        && slice.windows(2).all(|p| p[1].timestamp_ms - p[0].timestamp_ms <= gap_max_ms)
}

/// Writes `participant_id,start_ms,end_ms,label,sample_count`; unresolved
/// labels are written as an empty field.
pub fn write_windows_csv<'a, W: Write>(
    writer: W,
    windows: impl IntoIterator<Item = &'a Window<'a>>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["participant_id", "start_ms", "end_ms", "label", "sample_count"])?;
    for win in windows {
        w.write_record([
            win.participant_id.to_string(),
            win.start_ms.to_string(),
            win.end_ms.to_string(),
            win.label.map(|l| l.canonical_name().to_string()).unwrap_or_default(),
            win.samples.len().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
