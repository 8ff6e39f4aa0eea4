//! The 26 window statistics and their fixed naming order.

use std::io::{Read, Write};

use crate::domain::{parse_label, ActivityLabel};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::stats::{self, Moments};
use crate::windowing::Window;

/// Every feature, in the order used by extraction, training, importance
/// reporting and file output.
pub const FEATURE_NAMES: [&str; 26] = [
    "avg_accX", "min_accX", "max_accX", "var_accX", "std_accX",
    "avg_accY", "min_accY", "max_accY", "var_accY", "std_accY",
    "avg_accZ", "min_accZ", "max_accZ", "var_accZ", "std_accZ",
    "avg_magnitude", "min_magnitude", "max_magnitude", "var_magnitude", "std_magnitude",
    "std_pressure", "var_pressure", "range_pressure", "slope_pressure", "kurtosis_pressure", "skew_pressure",
];

/// The barometer-derived subset removed by the IMU-only ablation.
pub const PRESSURE_FEATURES: [&str; 6] = [
    "std_pressure", "var_pressure", "range_pressure", "slope_pressure", "kurtosis_pressure", "skew_pressure",
];

pub fn is_pressure_feature(name: &str) -> bool {
    PRESSURE_FEATURES.contains(&name)
}

/// Which feature columns a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureSet {
    #[default]
    Full,
    ImuOnly,
}

impl FeatureSet {
    pub fn names(self) -> Vec<String> {
        FEATURE_NAMES
            .iter()
            .filter(|n| self == FeatureSet::Full || !is_pressure_feature(n))
            .map(|n| n.to_string())
            .collect()
    }
}

/// Statistics for one window, plus the window's identity and label.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector<T> {
    pub participant_id: String,
    pub start_ms: i64,
    pub label: Option<ActivityLabel>,
    pub values: Vec<T>,
}

/// Computes the 26 statistics of a window in [`FEATURE_NAMES`] order.
pub fn extract_features<T: Scalar>(window: &Window<'_>) -> Result<FeatureVector<T>> {
    let n = window.samples.len();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let cast = T::from_f64_lossy;
    let mut axes = [Moments::<T>::default(); 4];
    let mut pressure = Moments::<T>::default();
    let mut p_values = Vec::with_capacity(n);
    let mut times = Vec::with_capacity(n);
    for s in window.samples {
        for (m, v) in axes.iter_mut().zip([s.acc_x, s.acc_y, s.acc_z, s.magnitude]) {
            m.push(cast(v));
        }
        pressure.push(cast(s.pressure));
        p_values.push(cast(s.pressure));
        times.push(s.timestamp_ms);
    }
    let mut values = Vec::with_capacity(FEATURE_NAMES.len());
    for m in &axes {
        values.extend([m.mean(), m.min(), m.max(), m.variance(), m.std_dev()]);
    }
    values.extend([
        pressure.std_dev(),
        pressure.variance(),
        pressure.range(),
        stats::slope(&p_values, &times)?,
        pressure.kurtosis(),
        pressure.skewness(),
    ]);
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    Ok(FeatureVector {
        participant_id: window.participant_id.to_string(),
        start_ms: window.start_ms,
        label: window.label,
        values,
    })
}

/// Drops the six pressure columns, keeping the order of the rest.
/// Applying it to already-ablated data changes nothing.
pub fn ablate_pressure<T: Clone>(
    names: &[String],
    vectors: &[FeatureVector<T>],
) -> (Vec<String>, Vec<FeatureVector<T>>) {
    let keep: Vec<usize> = (0..names.len()).filter(|&i| !is_pressure_feature(&names[i])).collect();
    let names = keep.iter().map(|&i| names[i].clone()).collect();
    let vectors = vectors
        .iter()
        .map(|v| FeatureVector {
            participant_id: v.participant_id.clone(),
            start_ms: v.start_ms,
            label: v.label,
            values: keep.iter().map(|&i| v.values[i].clone()).collect(),
        })
        .collect();
    (names, vectors)
}

/// Writes `participant_id,start_ms,<names>,label`.
pub fn write_features_csv<T: Scalar, W: Write>(
    writer: W,
    names: &[String],
    vectors: &[FeatureVector<T>],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["participant_id".to_string(), "start_ms".to_string()];
    header.extend(names.iter().cloned());
    header.push("label".into());
    w.write_record(&header)?;
    for v in vectors {
        if v.values.len() != names.len() {
            return Err(Error::ArityMismatch { expected: names.len(), got: v.values.len() });
        }
        let mut row = vec![v.participant_id.clone(), v.start_ms.to_string()];
        row.extend(v.values.iter().map(|x| x.to_string()));
        row.push(v.label.map(|l| l.canonical_name().to_string()).unwrap_or_default());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a file written by [`write_features_csv`].
pub fn read_features_csv<T: Scalar, R: Read>(source: R) -> Result<(Vec<String>, Vec<FeatureVector<T>>)> {
    let mut rdr = csv::Reader::from_reader(source);
    let headers = rdr.headers()?.clone();
    let cols: Vec<&str> = headers.iter().collect();
    if cols.first() != Some(&"participant_id") {
        return Err(Error::MissingColumn("participant_id".into()));
    }
    if cols.get(1) != Some(&"start_ms") {
        return Err(Error::MissingColumn("start_ms".into()));
    }
    if cols.last() != Some(&"label") || cols.len() < 4 {
        return Err(Error::MissingColumn("label".into()));
    }
    let names: Vec<String> = cols[2..cols.len() - 1].iter().map(|s| s.to_string()).collect();
    let mut vectors = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let bad = |reason: String| Error::MalformedRow { row, reason };
        if rec.len() != cols.len() {
            return Err(bad(format!("expected {} fields, found {}", cols.len(), rec.len())));
        }
        let start_ms = rec[1].trim().parse::<i64>().map_err(|e| bad(e.to_string()))?;
        let values = (2..rec.len() - 1)
            .map(|c| {
                rec[c]
                    .trim()
                    .parse::<T>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| bad(format!("bad value {:?}", &rec[c])))
            })
            .collect::<Result<Vec<T>>>()?;
        let label = match rec[rec.len() - 1].trim() {
            "" => None,
            text => Some(parse_label(text).map_err(|e| bad(e.to_string()))?),
        };
        vectors.push(FeatureVector { participant_id: rec[0].to_string(), start_ms, label, values });
    }
    Ok((names, vectors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::SensorSample;

    fn window(samples: &[SensorSample]) -> Window<'_> {
        Window {
            participant_id: "p",
            start_ms: samples[0].timestamp_ms,
            end_ms: samples[samples.len() - 1].timestamp_ms + 20,
            samples,
            label: Some(ActivityLabel::Null),
        }
    }

    fn idx(name: &str) -> usize {
        FEATURE_NAMES.iter().position(|n| *n == name).unwrap()
    }

    #[test]
    fn names_are_distinct_and_complete() {
        let mut sorted = FEATURE_NAMES.to_vec();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 26);
        assert_eq!(FeatureSet::ImuOnly.names().len(), 20);
        for p in PRESSURE_FEATURES {
            assert!(FEATURE_NAMES.contains(&p));
        }
    }

    #[test]
    fn constant_pressure() {
        let s: Vec<_> = (0..100)
            .map(|i| SensorSample::new(i * 20, [0.1 * i as f64, 0.0, 1.0], 1000.0, None).unwrap())
            .collect();
        let f = extract_features::<f64>(&window(&s)).unwrap();
        for name in PRESSURE_FEATURES {
            assert_eq!(f.values[idx(name)], 0.0, "{name}");
        }
    }

    #[test]
    fn hand_computed_axis() {
        let s: Vec<_> = (1..=4)
            .map(|i| SensorSample::new(i * 20, [i as f64, 0.0, 0.0], 1000.0 + i as f64, None).unwrap())
            .collect();
        let f = extract_features::<f64>(&window(&s)).unwrap();
        assert_eq!(f.values[idx("avg_accX")], 2.5);
        assert_eq!(f.values[idx("min_accX")], 1.0);
        assert_eq!(f.values[idx("max_accX")], 4.0);
        assert!((f.values[idx("var_accX")] - 1.25).abs() < 1e-12);
        assert!((f.values[idx("std_accX")] - 1.1180).abs() < 1e-4);
        assert_eq!(f.values[idx("range_pressure")], 3.0);
        // one unit per 20 ms
        assert!((f.values[idx("slope_pressure")] - 50.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_single_sample() {
        let s = [SensorSample::new(0, [0.0, 0.0, 1.0], 1000.0, None).unwrap()];
        assert!(matches!(extract_features::<f64>(&window(&s)), Err(Error::TooFewSamples { .. })));
    }

    #[test]
    fn ablation_projects_and_is_idempotent() {
        let names = FeatureSet::Full.names();
        let v = FeatureVector {
            participant_id: "p".into(),
            start_ms: 0,
            label: Some(ActivityLabel::LiftUp),
            values: (0..26).map(|i| i as f64).collect(),
        };
        let (n1, v1) = ablate_pressure(&names, std::slice::from_ref(&v));
        assert_eq!(n1, FeatureSet::ImuOnly.names());
        assert_eq!(v1[0].values, (0..20).map(|i| i as f64).collect::<Vec<_>>());
        assert!(n1.iter().all(|n| !n.contains("pressure")));
        let (n2, v2) = ablate_pressure(&n1, &v1);
        assert_eq!((n2, v2), (n1, v1));
    }

    #[test]
    fn features_csv_round_trip() {
        let names = FeatureSet::Full.names();
        let vectors = vec![
            FeatureVector {
                participant_id: "P01".into(),
                start_ms: 8000,
                label: Some(ActivityLabel::StairsDown),
                values: (0..26).map(|i| (i as f64).sqrt() * 1e-3 - 0.1).collect(),
            },
            FeatureVector { participant_id: "P02".into(), start_ms: 0, label: None, values: vec![0.5; 26] },
        ];
        let mut buf = Vec::new();
        write_features_csv(&mut buf, &names, &vectors).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("participant_id,start_ms,avg_accX,"));
        assert!(text.lines().next().unwrap().ends_with(",skew_pressure,label"));
        let (n, v) = read_features_csv::<f64, _>(&buf[..]).unwrap();
        assert_eq!(n, names);
        assert_eq!(v, vectors);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn samples(values: &[(f64, f64, f64, f64)]) -> Vec<SensorSample> {
            values
                .iter()
                .enumerate()
                .map(|(i, &(x, y, z, p))| SensorSample::new(i as i64 * 20, [x, y, z], p, None).unwrap())
                .collect()
        }

        fn close(a: f64, b: f64) -> bool {
            (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
        }

        proptest! {
            #[test]
            fn invariants(values in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0, 990.0f64..1010.0), 2..120),
                          offset in -50.0f64..50.0, scale in 0.1f64..10.0) {
                let s = samples(&values);
                let f = extract_features::<f64>(&window(&s)).unwrap().values;
                for c in 0..4 {
                    let b = 5 * c;
                    prop_assert!(f[b + 1] <= f[b] + 1e-12 && f[b] <= f[b + 2] + 1e-12);
                    prop_assert!(close(f[b + 4] * f[b + 4], f[b + 3]));
                }
                prop_assert!(close(f[20] * f[20], f[21]));

                // reversing time negates only the slope
                let mut rev: Vec<_> = values.clone();
                rev.reverse();
                let r = extract_features::<f64>(&window(&samples(&rev))).unwrap().values;
                for i in 0..26 {
                    let want = if i == idx("slope_pressure") { -f[i] } else { f[i] };
                    prop_assert!((r[i] - want).abs() <= 1e-7 * want.abs().max(1.0), "{}: {} vs {}", FEATURE_NAMES[i], r[i], want);
                }

                // pressure offset leaves pressure features alone
                let shifted: Vec<_> = values.iter().map(|&(x, y, z, p)| (x, y, z, p + offset)).collect();
                let o = extract_features::<f64>(&window(&samples(&shifted))).unwrap().values;
                for name in PRESSURE_FEATURES {
                    let i = idx(name);
                    prop_assert!((o[i] - f[i]).abs() <= 1e-6 * f[i].abs().max(1.0), "{name}");
                }

                // acceleration scaling
                let scaled: Vec<_> = values.iter().map(|&(x, y, z, p)| (scale * x, scale * y, scale * z, p)).collect();
                let g = extract_features::<f64>(&window(&samples(&scaled))).unwrap().values;
                for c in 0..4 {
                    let b = 5 * c;
                    for k in [0, 1, 2, 4] {
                        prop_assert!((g[b + k] - scale * f[b + k]).abs() <= 1e-9 * (scale * f[b + k]).abs().max(1.0));
                    }
                    prop_assert!((g[b + 3] - scale * scale * f[b + 3]).abs() <= 1e-9 * (scale * scale * f[b + 3]).abs().max(1.0));
                }
            }
        }
    }
}
