//! Recordings to a labelled feature dataset.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::balance::Dataset;
use crate::domain::{Recording, DEFAULT_RATE_HZ};
use crate::error::{Error, Result};
use crate::ingest::{
    apply_annotations, parse_annotation_csv, parse_sensor_csv, resample_uniform, ColumnMap, DEFAULT_GAP_MAX_MS,
};
use crate::features::{extract_features, FeatureVector, FEATURE_NAMES};
use crate::scalar::Scalar;
use crate::windowing::{segment_counted, WindowParams};

/// Window bookkeeping for one recording.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowCounts {
    pub participant_id: String,
    pub labeled: usize,
    pub unlabeled: usize,
    pub incomplete: usize,
}

/// Feature vectors of every complete window, labelled or not, in
/// recording order.
pub fn extract_recording<T: Scalar>(recording: &Recording, params: &WindowParams) -> Result<(Vec<FeatureVector<T>>, WindowCounts)> {
    let seg = segment_counted(recording, params)?;
    let vectors = seg.windows.iter().map(extract_features).collect::<Result<Vec<_>>>()?;
    let counts = WindowCounts {
        participant_id: recording.participant_id.clone(),
        labeled: seg.windows.len() - seg.unlabeled_count(),
        unlabeled: seg.unlabeled_count(),
        incomplete: seg.discarded_incomplete,
    };
    Ok((vectors, counts))
}

/// Labelled windows of all recordings as one dataset over the full
/// feature set. Unlabelled windows are dropped.
pub fn build_dataset<T: Scalar>(recordings: &[Recording], params: &WindowParams) -> Result<(Dataset<T>, Vec<WindowCounts>)> {
    params.validate()?;
    let per: Vec<_> = recordings
        .par_iter()
        .map(|r| extract_recording::<T>(r, params))
        .collect::<Result<_>>()?;
    let mut vectors = Vec::new();
    let mut counts = Vec::with_capacity(per.len());
    for (v, c) in per {
        vectors.extend(v.into_iter().filter(|f| f.label.is_some()));
        counts.push(c);
    }
    let names = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
    Ok((Dataset::new(names, vectors)?, counts))
}

/// Suffix of an annotation file paired with `<stem>.csv`.
pub const ANNOTATION_SUFFIX: &str = ".annotations.csv";

/// Ingest counters for one file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadSummary {
    pub participant_id: String,
    pub samples: usize,
    pub rejected_rows: usize,
    pub magnitude_corrections: usize,
    pub annotated: bool,
    pub resampled: bool,
}

fn on_grid(recording: &Recording, rate_hz: f64) -> bool {
    let Some(t0) = recording.samples.first().map(|s| s.timestamp_ms) else {
        return true;
    };
    recording
        .samples
        .iter()
        .enumerate()
        .all(|(k, s)| s.timestamp_ms == t0 + (k as f64 * 1000.0 / rate_hz).round() as i64)
}

/// Reads one sensor file, applies its annotation file when `annotations`
/// is given, and resamples to the nominal rate unless the timestamps
/// already sit on that grid.
pub fn load_recording(
    path: &Path,
    participant_id: &str,
    columns: &ColumnMap,
    annotations: Option<&Path>,
) -> Result<(Recording, LoadSummary)> {
    let log = parse_sensor_csv(BufReader::new(File::open(path)?), participant_id, columns)?;
    let mut recording = log.recording;
    if let Some(a) = annotations {
        let events = parse_annotation_csv(BufReader::new(File::open(a)?))?;
        recording = apply_annotations(recording, &events);
    }
    let resampled = !on_grid(&recording, DEFAULT_RATE_HZ);
    if resampled {
        recording = resample_uniform(&recording, DEFAULT_RATE_HZ, DEFAULT_GAP_MAX_MS)?;
    }
    let summary = LoadSummary {
        participant_id: participant_id.to_string(),
        samples: recording.len(),
        rejected_rows: log.rejected_rows,
        magnitude_corrections: log.magnitude_corrections,
        annotated: annotations.is_some(),
        resampled,
    };
    Ok((recording, summary))
}

/// Sensor files of a directory: every `*.csv` that is not an annotation
/// file, sorted by name. The participant id is the file stem.
pub fn sensor_files(dir: &Path) -> Result<Vec<(String, PathBuf, Option<PathBuf>)>> {
    let mut names: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    names.sort();
    let mut out = Vec::new();
    for path in &names {
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else { continue };
        if name.ends_with(ANNOTATION_SUFFIX) || !name.ends_with(".csv") {
            continue;
        }
        let stem = &name[..name.len() - 4];
        let ann = path.with_file_name(format!("{stem}{ANNOTATION_SUFFIX}"));
        out.push((stem.to_string(), path.clone(), ann.is_file().then_some(ann)));
    }
    if out.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(out)
}

/// Loads every recording of a directory in file-name order.
pub fn load_directory(dir: &Path, columns: &ColumnMap) -> Result<Vec<(Recording, LoadSummary)>> {
    sensor_files(dir)?
        .par_iter()
        .map(|(id, path, ann)| load_recording(path, id, columns, ann.as_deref()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::write_sensor_csv;
    use crate::synth::{generate_cohort, SynthConfig};

    #[test]
    fn directory_round_trip_matches_memory() {
        let cfg = SynthConfig { session_minutes: 4.0, ..SynthConfig::default() };
        let cohort = generate_cohort(2, &cfg, 5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        for s in &cohort {
            let f = File::create(dir.path().join(format!("{}.csv", s.recording.participant_id))).unwrap();
            write_sensor_csv(&s.recording, f).unwrap();
        }
        std::fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
        let loaded = load_directory(dir.path(), &ColumnMap::default()).unwrap();
        assert_eq!(loaded.len(), 2);
        assert_eq!(loaded[0].0.participant_id, "P01");
        assert!(!loaded[0].1.resampled && loaded[0].1.rejected_rows == 0);
        let params = WindowParams::new(8.0);
        let recs: Vec<Recording> = cohort.into_iter().map(|s| s.recording).collect();
        let (mem, _) = build_dataset::<f64>(&recs, &params).unwrap();
        let disk: Vec<Recording> = loaded.into_iter().map(|l| l.0).collect();
        let (file, _) = build_dataset::<f64>(&disk, &params).unwrap();
        assert_eq!(mem.len(), file.len());
        for (a, b) in mem.vectors.iter().zip(&file.vectors) {
            assert_eq!(a.label, b.label);
            assert_eq!(a.start_ms, b.start_ms);
        }
    }

    #[test]
    fn irregular_files_are_resampled_and_annotated() {
        let dir = tempfile::tempdir().unwrap();
        let mut body = String::from("Time,Timestamp,X,Y,Z,Magnitude,Pressure,Label\n");
        for k in 0..600i64 {
            let t = k * 20 + (k % 3) * 3;
            body.push_str(&format!("0,{t},0.1,0.2,0.97,,1000.0,\n"));
        }
        std::fs::write(dir.path().join("a.csv"), body).unwrap();
        std::fs::write(dir.path().join("a.annotations.csv"), "Elapsedtime,Comment\n0,Lift up\n").unwrap();
        let loaded = load_directory(dir.path(), &ColumnMap::default()).unwrap();
        assert_eq!(loaded.len(), 1);
        let (r, s) = &loaded[0];
        assert!(s.resampled && s.annotated);
        assert!(r.samples.iter().all(|x| x.label == Some(crate::domain::ActivityLabel::LiftUp)));
        assert!(on_grid(r, DEFAULT_RATE_HZ));
    }

    #[test]
    fn empty_directory() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_directory(dir.path(), &ColumnMap::default()), Err(Error::EmptyDataset)));
    }
}
