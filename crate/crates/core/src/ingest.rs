//! Sensor and annotation CSV parsing, annotation labelling and uniform
//! resampling.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::domain::{compute_magnitude, parse_label, ActivityLabel, Recording, SensorSample, DEFAULT_RATE_HZ};
use crate::error::{Error, Result};

/// Source gaps longer than this are treated as missing data.
pub const DEFAULT_GAP_MAX_MS: i64 = 200;

/// Relative disagreement above which a supplied magnitude is replaced.
const MAGNITUDE_REL_TOL: f64 = 1e-3;

/// Header names of the sensor CSV. Defaults match the device export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMap {
    pub timestamp: String,
    pub acc_x: String,
    pub acc_y: String,
    pub acc_z: String,
    pub magnitude: String,
    pub pressure: String,
    pub label: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            timestamp: "Timestamp".into(),
            acc_x: "X".into(),
            acc_y: "Y".into(),
            acc_z: "Z".into(),
            magnitude: "Magnitude".into(),
            pressure: "Pressure".into(),
            label: "Label".into(),
        }
    }
}

/// A parsed sensor file together with its data-quality counters.
#[derive(Debug, Clone)]
pub struct SensorLog {
    pub recording: Recording,
    /// Data rows skipped because a numeric field did not parse.
    pub rejected_rows: usize,
    /// Rows whose Magnitude column disagreed with the recomputed norm.
    pub magnitude_corrections: usize,
}

/// One row of an annotation file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationEvent {
    pub elapsed_ms: i64,
    pub comment: String,
}

fn column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h.trim() == name)
}

fn required(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    column(headers, name).ok_or_else(|| Error::MissingColumn(name.to_string()))
}

fn parse_ms(field: &str) -> Option<i64> {
    let field = field.trim();
    field.parse::<i64>().ok().or_else(|| {
        field
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite() && v.fract() == 0.0 && v.abs() < 9.0e15)
            .map(|v| v as i64)
    })
}

fn parse_finite(field: &str) -> Option<f64> {
    field.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

fn reader<R: Read>(source: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(source)
}

/// Writes a recording in the device export layout
/// (`Time,Timestamp,X,Y,Z,Magnitude,Pressure,Label`), with `Time` in
/// seconds since the first sample. Unlabelled samples get an empty label.
pub fn write_sensor_csv<W: Write>(recording: &Recording, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["Time", "Timestamp", "X", "Y", "Z", "Magnitude", "Pressure", "Label"])?;
    let t0 = recording.samples.first().map_or(0, |s| s.timestamp_ms);
    for s in &recording.samples {
        w.write_record([
            format!("{:.3}", (s.timestamp_ms - t0) as f64 / 1000.0),
            s.timestamp_ms.to_string(),
            format!("{:.6}", s.acc_x),
            format!("{:.6}", s.acc_y),
            format!("{:.6}", s.acc_z),
            format!("{:.6}", s.magnitude),
            format!("{:.5}", s.pressure),
            s.label.map_or_else(String::new, |l| l.canonical_name().to_string()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a sensor CSV into a [`Recording`].
///
/// Rows with an unparseable numeric field are skipped and counted; a row
/// with the wrong field count or an unknown label is an error. Timestamps
/// must strictly increase. The magnitude is always recomputed from the axes.
pub fn parse_sensor_csv<R: Read>(
    source: R,
    participant_id: &str,
    columns: &ColumnMap,
) -> Result<SensorLog> {
    let mut rdr = reader(source);
    let headers = rdr.headers()?.clone();
    let ts_col = required(&headers, &columns.timestamp)?;
    let x_col = required(&headers, &columns.acc_x)?;
    let y_col = required(&headers, &columns.acc_y)?;
    let z_col = required(&headers, &columns.acc_z)?;
    let p_col = required(&headers, &columns.pressure)?;
    let m_col = column(&headers, &columns.magnitude);
    let l_col = column(&headers, &columns.label);

    let mut samples: Vec<SensorSample> = Vec::new();
    let mut rejected_rows = 0;
    let mut magnitude_corrections = 0;
    let mut record = csv::StringRecord::new();
    let mut row = 0;
    while rdr.read_record(&mut record)? {
        row += 1;
        if record.len() != headers.len() {
            return Err(Error::MalformedRow {
                row,
                reason: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        let numbers = (
            parse_ms(&record[ts_col]),
            parse_finite(&record[x_col]),
            parse_finite(&record[y_col]),
            parse_finite(&record[z_col]),
            parse_finite(&record[p_col]),
        );
        let (Some(ts), Some(x), Some(y), Some(z), Some(pressure)) = numbers else {
            rejected_rows += 1;
            continue;
        };
        let label = match l_col.map(|c| record[c].trim()) {
            None | Some("") => None,
            Some(text) => Some(parse_label(text).map_err(|_| Error::MalformedRow {
                row,
                reason: format!("unknown label {text:?}"),
            })?),
        };
        if let Some(prev) = samples.last() {
            if ts <= prev.timestamp_ms {
                return Err(Error::NonMonotonicTime { row });
            }
        }
        let sample = SensorSample::new(ts, [x, y, z], pressure, label)?;
        let supplied = m_col.and_then(|c| parse_finite(&record[c]));
        match supplied {
            Some(m) if (m - sample.magnitude).abs() <= MAGNITUDE_REL_TOL * sample.magnitude.abs() => {}
            Some(m) if m == sample.magnitude => {}
            Some(_) => magnitude_corrections += 1,
            None if m_col.is_some() => magnitude_corrections += 1,
            None => {}
        }
        samples.push(sample);
    }
    Ok(SensorLog {
        recording: Recording::new(participant_id, samples, DEFAULT_RATE_HZ)?,
        rejected_rows,
        magnitude_corrections,
    })
}

/// Parses an `Elapsedtime,Comment` annotation file. Comments are kept verbatim.
pub fn parse_annotation_csv<R: Read>(source: R) -> Result<Vec<AnnotationEvent>> {
    let mut rdr = reader(source);
    let headers = rdr.headers()?.clone();
    let t_col = required(&headers, "Elapsedtime")?;
    let c_col = required(&headers, "Comment")?;

    let mut events: Vec<AnnotationEvent> = Vec::new();
    let mut record = csv::StringRecord::new();
    let mut row = 0;
    while rdr.read_record(&mut record)? {
        row += 1;
        if record.len() != headers.len() {
            return Err(Error::MalformedRow {
                row,
                reason: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        let elapsed_ms = parse_ms(&record[t_col])
            .filter(|t| *t >= 0)
            .ok_or_else(|| Error::MalformedRow {
                row,
                reason: format!("bad elapsed time {:?}", &record[t_col]),
            })?;
        if events.last().is_some_and(|e| elapsed_ms < e.elapsed_ms) {
            return Err(Error::NonMonotonicTime { row });
        }
        events.push(AnnotationEvent {
            elapsed_ms,
            comment: record[c_col].to_string(),
        });
    }
    Ok(events)
}

/// Labels each sample with the most recent parseable annotation at or before
/// its elapsed time. Unparseable comments leave their segment untouched.
pub fn apply_annotations(mut recording: Recording, events: &[AnnotationEvent]) -> Recording {
    let Some(t0) = recording.samples.first().map(|s| s.timestamp_ms) else {
        return recording;
    };
    let mut next = 0;
    let mut current: Option<Option<ActivityLabel>> = None;
    for sample in &mut recording.samples {
        let elapsed = sample.timestamp_ms - t0;
        while next < events.len() && events[next].elapsed_ms <= elapsed {
            current = Some(parse_label(&events[next].comment).ok());
            next += 1;
        }
        if let Some(Some(label)) = current {
            sample.label = Some(label);
        }
    }
    recording
}

/// Linearly interpolates every channel onto a uniform grid starting at the
/// first timestamp. Grid points inside a source gap longer than
/// `gap_max_ms` are flagged `gap_filled` and left unlabelled.
pub fn resample_uniform(recording: &Recording, rate_hz: f64, gap_max_ms: i64) -> Result<Recording> {
    if !(rate_hz > 0.0 && rate_hz <= 1000.0) {
        return Err(Error::InvalidParams(format!("rate must be in (0, 1000] Hz, got {rate_hz}")));
    }
    let src = &recording.samples;
    if src.len() < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: src.len() });
    }
    let t0 = src[0].timestamp_ms;
    let t_last = src[src.len() - 1].timestamp_ms;
    let step = 1000.0 / rate_hz;

    let mut out = Vec::new();
    let mut i = 0;
    for k in 0.. {
        let t = t0 + (k as f64 * step).round() as i64;
        if t > t_last {
            break;
        }
        while i + 2 < src.len() && src[i + 1].timestamp_ms < t {
            i += 1;
        }
        // t lies in [src[i], src[i + 1]]
        let (a, b) = (&src[i], &src[i + 1]);
        let width = b.timestamp_ms - a.timestamp_ms;
        let frac = (t - a.timestamp_ms) as f64 / width as f64;
        let lerp = |u: f64, v: f64| u + frac * (v - u);
        let acc = [lerp(a.acc_x, b.acc_x), lerp(a.acc_y, b.acc_y), lerp(a.acc_z, b.acc_z)];
        let gap = width > gap_max_ms && t != a.timestamp_ms && t != b.timestamp_ms;
        let label = if gap {
            None
        } else if t - a.timestamp_ms <= b.timestamp_ms - t {
            a.label
        } else {
            b.label
        };
        let mut sample = SensorSample::new(t, acc, lerp(a.pressure, b.pressure), label)?;
        sample.magnitude = compute_magnitude(acc[0], acc[1], acc[2])?;
        sample.gap_filled = gap;
        out.push(sample);
    }
    Recording::new(recording.participant_id.clone(), out, rate_hz)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "Time,Timestamp,X,Y,Z,Magnitude,Pressure,Label\n";

    fn parse(body: &str) -> Result<SensorLog> {
        parse_sensor_csv(format!("{HEADER}{body}").as_bytes(), "p01", &ColumnMap::default())
    }

    fn uniform(n: usize, period: i64) -> Recording {
        let samples = (0..n)
            .map(|i| {
                let t = i as f64;
                SensorSample::new(
                    i as i64 * period,
                    [t.sin(), (0.3 * t).cos(), 1.0 + 0.01 * t],
                    1000.0 + 0.001 * t,
                    Some(ActivityLabel::Null),
                )
                .unwrap()
            })
            .collect();
        Recording::new("u", samples, 1000.0 / period as f64).unwrap()
    }

    #[test]
    fn written_csv_parses_back() {
        let mut r = uniform(40, 20);
        r.samples[3].label = None;
        r.samples[5].label = Some(ActivityLabel::StairsDown);
        let mut buf = Vec::new();
        write_sensor_csv(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(HEADER));
        let back = parse_sensor_csv(buf.as_slice(), "u", &ColumnMap::default()).unwrap();
        assert_eq!(back.rejected_rows, 0);
        assert_eq!(back.magnitude_corrections, 0);
        assert_eq!(back.recording.len(), r.len());
        for (a, b) in back.recording.samples.iter().zip(&r.samples) {
            assert_eq!(a.timestamp_ms, b.timestamp_ms);
            assert_eq!(a.label, b.label);
            assert!((a.acc_x - b.acc_x).abs() <= 5e-7);
            assert!((a.pressure - b.pressure).abs() <= 5e-6);
        }
    }

    #[test]
    fn parses_three_rows() {
        let log = parse(
            "0.00,0,0.1,0.2,0.97,0.9954,1000.10,Null\n\
             0.02,20,0.1,0.2,0.98,1.0052,1000.11,Lift up\n\
             0.04,40,0.1,0.2,0.99,1.0149,1000.12,\n",
        )
        .unwrap();
        let r = &log.recording;
        assert_eq!(r.len(), 3);
        assert_eq!(r.participant_id, "p01");
        assert_eq!(r.samples[1].label, Some(ActivityLabel::LiftUp));
        assert_eq!(r.samples[2].label, None);
        assert_eq!(log.rejected_rows, 0);
        assert_eq!(log.magnitude_corrections, 0);
    }

    #[test]
    fn header_only_is_empty() {
        let log = parse("").unwrap();
        assert!(log.recording.is_empty());
    }

    #[test]
    fn wrong_magnitude_is_recomputed() {
        let log = parse("0,0,3,4,0,5.2,1000,Null\n0,20,3,4,0,5.0001,1000,Null\n").unwrap();
        assert_eq!(log.magnitude_corrections, 1);
        assert_eq!(log.recording.samples[0].magnitude, 5.0);
    }

    #[test]
    fn unparseable_numeric_rows_are_rejected() {
        let log = parse("0,0,1,0,0,1,1000,\n0,20,abc,0,0,1,1000,\n0,40,1,0,0,1,NaN,\n0,60,1,0,0,1,1000,\n").unwrap();
        assert_eq!(log.recording.len(), 2);
        assert_eq!(log.rejected_rows, 2);
    }

    #[test]
    fn structural_errors() {
        assert!(matches!(parse("0,0,1,0\n"), Err(Error::MalformedRow { row: 1, .. })));
        assert!(matches!(
            parse("0,20,1,0,0,1,1000,\n0,10,1,0,0,1,1000,\n"),
            Err(Error::NonMonotonicTime { row: 2 })
        ));
        assert!(matches!(
            parse("0,0,1,0,0,1,1000,Escalator\n"),
            Err(Error::MalformedRow { row: 1, .. })
        ));
        let missing = parse_sensor_csv("Timestamp,X,Y,Z\n".as_bytes(), "p", &ColumnMap::default());
        assert!(matches!(missing, Err(Error::MissingColumn(c)) if c == "Pressure"));
    }

    #[test]
    fn custom_column_names() {
        let columns = ColumnMap {
            timestamp: "ms".into(),
            pressure: "baro".into(),
            ..ColumnMap::default()
        };
        let log = parse_sensor_csv("ms,X,Y,Z,baro\n0,0,0,1,990\n".as_bytes(), "p", &columns).unwrap();
        assert_eq!(log.recording.samples[0].pressure, 990.0);
    }

    #[test]
    fn annotation_parsing() {
        let ev = parse_annotation_csv("Elapsedtime,Comment\n0, start\n12000, Lift down\n".as_bytes()).unwrap();
        assert_eq!(ev.len(), 2);
        assert_eq!(ev[0], AnnotationEvent { elapsed_ms: 0, comment: " start".into() });
        assert_eq!(ev[1].elapsed_ms, 12000);
        assert_eq!(ev[1].comment, " Lift down");

        let empty = parse_annotation_csv("Elapsedtime,Comment\n500,\n".as_bytes()).unwrap();
        assert_eq!(empty[0].comment, "");

        assert!(matches!(
            parse_annotation_csv("Elapsedtime,Comment\n5000,a\n100,b\n".as_bytes()),
            Err(Error::NonMonotonicTime { row: 2 })
        ));
        assert!(matches!(
            parse_annotation_csv("Elapsed,Comment\n".as_bytes()),
            Err(Error::MissingColumn(_))
        ));
        assert!(matches!(
            parse_annotation_csv("Elapsedtime,Comment\nsoon,a\n".as_bytes()),
            Err(Error::MalformedRow { row: 1, .. })
        ));
    }

    fn unlabeled(n: usize) -> Recording {
        let mut r = uniform(n, 20);
        r.samples.iter_mut().for_each(|s| s.label = None);
        r
    }

    fn ev(t: i64, c: &str) -> AnnotationEvent {
        AnnotationEvent { elapsed_ms: t, comment: c.into() }
    }

    #[test]
    fn annotations_label_segments() {
        let r = apply_annotations(unlabeled(500), &[ev(0, "Stairs up")]);
        assert!(r.samples.iter().all(|s| s.label == Some(ActivityLabel::StairsUp)));

        let r = apply_annotations(unlabeled(500), &[ev(0, "Null"), ev(5000, "Lift up")]);
        for s in &r.samples {
            let want = if s.timestamp_ms < 5000 { ActivityLabel::Null } else { ActivityLabel::LiftUp };
            assert_eq!(s.label, Some(want));
        }

        let r = apply_annotations(
            unlabeled(500),
            &[ev(0, "Null"), ev(2000, "entering building"), ev(6000, "Lift down")],
        );
        for s in &r.samples {
            let want = match s.timestamp_ms {
                t if t < 2000 => Some(ActivityLabel::Null),
                t if t < 6000 => None,
                _ => Some(ActivityLabel::LiftDown),
            };
            assert_eq!(s.label, want, "t={}", s.timestamp_ms);
        }
    }

    #[test]
    fn resample_is_identity_on_uniform_grid() {
        let r = uniform(300, 20);
        let out = resample_uniform(&r, 50.0, DEFAULT_GAP_MAX_MS).unwrap();
        assert_eq!(out.len(), r.len());
        for (a, b) in r.samples.iter().zip(&out.samples) {
            assert_eq!(a.timestamp_ms, b.timestamp_ms);
            assert_eq!(a.label, b.label);
            for (u, v) in [(a.acc_x, b.acc_x), (a.acc_y, b.acc_y), (a.acc_z, b.acc_z), (a.pressure, b.pressure), (a.magnitude, b.magnitude)] {
                assert!((u - v).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn resample_midpoint() {
        let s0 = SensorSample::new(0, [0.0, 0.0, 1.0], 1000.0, None).unwrap();
        let s1 = SensorSample::new(40, [0.0, 0.0, 1.0], 1001.0, None).unwrap();
        let r = Recording::new("m", vec![s0, s1], 25.0).unwrap();
        let out = resample_uniform(&r, 50.0, DEFAULT_GAP_MAX_MS).unwrap();
        let times: Vec<_> = out.samples.iter().map(|s| s.timestamp_ms).collect();
        assert_eq!(times, vec![0, 20, 40]);
        assert!((out.samples[1].pressure - 1000.5).abs() < 1e-12);
    }

    #[test]
    fn resample_matches_piecewise_linear_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut t = 1_000;
        let mut samples = Vec::new();
        for i in 0..400 {
            let acc = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            let label = ActivityLabel::from_ordinal(i / 80);
            samples.push(SensorSample::new(t, acc, 1000.0 + rng.random_range(-1.0..1.0), label).unwrap());
            t += 20 + rng.random_range(-4..=4);
        }
        let r = Recording::new("j", samples, 50.0).unwrap();
        let out = resample_uniform(&r, 50.0, DEFAULT_GAP_MAX_MS).unwrap();

        // independent piecewise-linear oracle: scan for the bracketing pair
        let oracle = |t: i64, f: &dyn Fn(&SensorSample) -> f64| -> f64 {
            let s = &r.samples;
            let j = (0..s.len() - 1)
                .find(|&j| s[j].timestamp_ms <= t && t <= s[j + 1].timestamp_ms)
                .unwrap();
            let (t0, t1) = (s[j].timestamp_ms as f64, s[j + 1].timestamp_ms as f64);
            let t = t as f64;
            (f(&s[j]) * (t1 - t) + f(&s[j + 1]) * (t - t0)) / (t1 - t0)
        };
        for (k, s) in out.samples.iter().enumerate() {
            assert_eq!(s.timestamp_ms, 1_000 + 20 * k as i64);
            assert!(!s.gap_filled);
            assert!((s.acc_x - oracle(s.timestamp_ms, &|q| q.acc_x)).abs() < 1e-9);
            assert!((s.acc_y - oracle(s.timestamp_ms, &|q| q.acc_y)).abs() < 1e-9);
            assert!((s.acc_z - oracle(s.timestamp_ms, &|q| q.acc_z)).abs() < 1e-9);
            assert!((s.pressure - oracle(s.timestamp_ms, &|q| q.pressure)).abs() < 1e-9);
            let norm = (s.acc_x.powi(2) + s.acc_y.powi(2) + s.acc_z.powi(2)).sqrt();
            assert!((s.magnitude - norm).abs() <= 1e-12 * norm.max(1.0));
        }
    }

    #[test]
    fn resample_flags_gaps() {
        let mk = |t| SensorSample::new(t, [0.0, 0.0, 1.0], 1000.0, Some(ActivityLabel::Null)).unwrap();
        let r = Recording::new("g", vec![mk(0), mk(20), mk(520), mk(540)], 50.0).unwrap();
        let out = resample_uniform(&r, 50.0, DEFAULT_GAP_MAX_MS).unwrap();
        assert_eq!(out.len(), 28);
        for s in &out.samples {
            let inside = s.timestamp_ms > 20 && s.timestamp_ms < 520;
            assert_eq!(s.gap_filled, inside, "t={}", s.timestamp_ms);
            assert_eq!(s.label.is_none(), inside);
            assert!(s.acc_z.is_finite() && s.pressure.is_finite());
        }
        assert!(matches!(
            resample_uniform(&Recording::new("g", vec![mk(0)], 50.0).unwrap(), 50.0, 200),
            Err(Error::TooFewSamples { .. })
        ));
    }
}
