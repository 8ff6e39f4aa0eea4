//! Report artifacts: JSON summary, CSV tables, a plain-text results table
//! and SVG charts. All writers produce deterministic bytes.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::domain::ActivityLabel;
use crate::error::Result;
use crate::evaluation::{ConfusionMatrix, EvaluationReport};
use crate::features::FeatureSet;

pub const SUMMARY_FILE: &str = "summary.json";
pub const CONFUSION_FILE: &str = "confusion.csv";
pub const IMPORTANCE_FILE: &str = "importance.csv";
pub const TABLE_FILE: &str = "table.txt";
pub const IMPORTANCE_SVG: &str = "importance.svg";
pub const CONFUSION_SVG: &str = "confusion.svg";

/// Writes `bytes` to a temporary sibling and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn summary_json(report: &EvaluationReport) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

/// Rows are true classes, columns predicted classes.
pub fn confusion_csv(confusion: &ConfusionMatrix) -> String {
    let mut out = String::from("true\\predicted");
    for l in ActivityLabel::ALL {
        let _ = write!(out, ",{}", l.canonical_name());
    }
    out.push('\n');
    for (l, row) in ActivityLabel::ALL.iter().zip(confusion) {
        out.push_str(l.canonical_name());
        for c in row {
            let _ = write!(out, ",{c}");
        }
        out.push('\n');
    }
    out
}

/// `feature,importance` sorted by descending importance.
pub fn importance_csv(ranked: &[(String, f64)]) -> String {
    let mut out = String::from("feature,importance\n");
    for (name, v) in ranked {
        let _ = writeln!(out, "{name},{v:.9}");
    }
    out
}

fn column_title(r: &EvaluationReport) -> String {
    let set = match r.feature_set {
        FeatureSet::Full => "with pressure",
        FeatureSet::ImuOnly => "IMU only",
    };
    format!("{}s {}", r.window_s, set)
}

/// Aggregate metrics of one or more runs side by side, one column per run.
pub fn results_table(reports: &[&EvaluationReport]) -> String {
    let titles: Vec<String> = reports.iter().map(|r| column_title(r)).collect();
    let width = titles.iter().map(String::len).max().unwrap_or(0).max(8);
    let mut out = String::new();
    let _ = write!(out, "{:<12}", "Metric");
    for t in &titles {
        let _ = write!(out, " | {t:>width$}");
    }
    out.push('\n');
    let _ = writeln!(out, "{}", "-".repeat(12 + titles.len() * (width + 3)));
    type Metric = fn(&EvaluationReport) -> f64;
    let rows: [(&str, Metric); 4] = [
        ("Accuracy", |r| r.aggregate.accuracy),
        ("F1 micro", |r| r.aggregate.f1_micro),
        ("F1 macro", |r| r.aggregate.f1_macro),
        ("F1 weighted", |r| r.aggregate.f1_weighted),
    ];
    for (name, get) in rows {
        let _ = write!(out, "{name:<12}");
        for r in reports {
            let _ = write!(out, " | {:>width$.4}", get(r));
        }
        out.push('\n');
    }
    out
}

/// Per-participant metrics with the selected hyperparameters.
pub fn participant_table(report: &EvaluationReport) -> String {
    let mut out = String::from("Participant | Accuracy | F1 macro | F1 weighted | max_depth | n_estimators\n");
    for f in &report.folds {
        let _ = writeln!(
            out,
            "{:<11} | {:>8.4} | {:>8.4} | {:>11.4} | {:>9} | {:>12}",
            f.participant_id,
            f.metrics.accuracy,
            f.metrics.f1_macro,
            f.metrics.f1_weighted,
            f.params.depth_label(),
            f.params.n_estimators
        );
    }
    out
}

pub fn text_report(report: &EvaluationReport) -> String {
    format!(
        "{}\n{}\nTop features\n{}",
        results_table(&[report]),
        participant_table(report),
        report
            .ranked_importances()
            .iter()
            .take(10)
            .enumerate()
            .map(|(i, (n, v))| format!("{:>2}. {n:<20} {v:.6}\n", i + 1))
            .collect::<String>()
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Horizontal bar chart of importances in the given order.
pub fn importance_svg(ranked: &[(String, f64)]) -> String {
    let bar_h = 16.0;
    let left = 150.0;
    let width = 420.0;
    let top = 30.0;
    let max = ranked.iter().map(|r| r.1).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let height = top + ranked.len() as f64 * (bar_h + 4.0) + 10.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{height:.0}" font-family="sans-serif" font-size="11">"#,
        left + width + 80.0
    );
    let _ = writeln!(out, r#"<text x="10" y="18" font-size="13">Mean feature importance</text>"#);
    for (i, (name, v)) in ranked.iter().enumerate() {
        let y = top + i as f64 * (bar_h + 4.0);
        let w = v / max * width;
        let _ = writeln!(
            out,
            r##"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text><rect x="{left:.1}" y="{y:.1}" width="{w:.2}" height="{bar_h:.1}" fill="#4477aa"/><text x="{:.1}" y="{:.1}">{v:.4}</text>"##,
            left - 6.0,
            y + 12.0,
            escape(name),
            left + w + 4.0,
            y + 12.0
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Row-normalized confusion heatmap with raw counts in the cells.
pub fn confusion_svg(confusion: &ConfusionMatrix) -> String {
    let cell = 70.0;
    let left = 100.0;
    let top = 60.0;
    let n = ActivityLabel::COUNT as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" font-family="sans-serif" font-size="11">"#,
        left + n * cell + 20.0,
        top + n * cell + 40.0
    );
    let _ = writeln!(out, r#"<text x="{left:.0}" y="18" font-size="13">Confusion (rows: true, columns: predicted)</text>"#);
    for (j, l) in ActivityLabel::ALL.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            left + (j as f64 + 0.5) * cell,
            top - 8.0,
            l.canonical_name()
        );
    }
    for (i, (l, row)) in ActivityLabel::ALL.iter().zip(confusion).enumerate() {
        let y = top + i as f64 * cell;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            left - 6.0,
            y + cell / 2.0 + 4.0,
            l.canonical_name()
        );
        let total: u64 = row.iter().sum();
        for (j, &c) in row.iter().enumerate() {
            let share = if total > 0 { c as f64 / total as f64 } else { 0.0 };
            let shade = (255.0 - share * 200.0).round() as u8;
            let text = if share > 0.5 { "#ffffff" } else { "#000000" };
            let x = left + j as f64 * cell;
            let _ = writeln!(
                out,
                r##"<rect x="{x:.1}" y="{y:.1}" width="{cell:.1}" height="{cell:.1}" fill="rgb({shade},{shade},255)" stroke="#888888"/><text x="{:.1}" y="{:.1}" text-anchor="middle" fill="{text}">{c}</text>"##,
                x + cell / 2.0,
                y + cell / 2.0 + 4.0
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Writes every artifact of `report` into `dir` and returns the paths.
pub fn write_report(dir: &Path, report: &EvaluationReport) -> Result<Vec<PathBuf>> {
    let ranked = report.ranked_importances();
    let files = [
        (SUMMARY_FILE, summary_json(report)?),
        (CONFUSION_FILE, confusion_csv(&report.confusion)),
        (IMPORTANCE_FILE, importance_csv(&ranked)),
        (TABLE_FILE, text_report(report)),
        (IMPORTANCE_SVG, importance_svg(&ranked)),
        (CONFUSION_SVG, confusion_svg(&report.confusion)),
    ];
    let mut paths = Vec::with_capacity(files.len());
    for (name, body) in files {
        let path = dir.join(name);
        write_atomic(&path, body.as_bytes())?;
        paths.push(path);
    }
    Ok(paths)
}

pub fn read_summary(path: &Path) -> Result<EvaluationReport> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}
