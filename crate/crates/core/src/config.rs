//! Run configuration read from a plain `key = value` file.
//!
//! Callers start from [`RunConfig::default`], apply a file with
//! [`RunConfig::apply_file`] and then their own overrides, which gives the
//! precedence flags > file > defaults.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::forest::ForestHyperparams;
use crate::ingest::ColumnMap;
use crate::windowing::WindowParams;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data_dir: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub window_s: f64,
    /// Defaults to the window length.
    pub stride_s: Option<f64>,
    pub coverage_threshold: f64,
    pub imu_only: bool,
    pub seed: u64,
    pub folds: usize,
    pub depths: Vec<Option<usize>>,
    pub estimators: Vec<usize>,
    pub columns: ColumnMap,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data_dir: None,
            out_dir: PathBuf::from("out"),
            window_s: 8.0,
            stride_s: None,
            coverage_threshold: 0.8,
            imu_only: false,
            seed: 42,
            folds: 10,
            depths: vec![Some(15), Some(20), None],
            estimators: (200..=350).step_by(25).collect(),
            columns: ColumnMap::default(),
        }
    }
}

fn invalid(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::InvalidConfig(format!("line {line}: {msg}"))
}

fn parse_list<T>(value: &str, line: usize, item: impl Fn(&str) -> Option<T>) -> Result<Vec<T>> {
    let out: Option<Vec<T>> = value.split(',').map(|s| item(s.trim())).collect();
    match out {
        Some(v) if !v.is_empty() => Ok(v),
        _ => Err(invalid(line, format!("bad list `{value}`"))),
    }
}

fn parse_depth(s: &str) -> Option<Option<usize>> {
    if s.eq_ignore_ascii_case("none") {
        Some(None)
    } else {
        s.parse().ok().filter(|&d| d > 0).map(Some)
    }
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Some(true),
        "false" | "no" | "0" | "off" => Some(false),
        _ => None,
    }
}

impl RunConfig {
    /// Applies `key = value` lines; `#` starts a comment. Unknown keys are
    /// rejected so typos do not pass silently.
    pub fn apply_file(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| invalid(line, "expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            let num = |v: &str| v.parse::<f64>().map_err(|_| invalid(line, format!("bad number `{v}` for {key}")));
            match key {
                "data" => self.data_dir = (value != "-").then(|| PathBuf::from(value)),
                "out" => self.out_dir = PathBuf::from(value),
                "window" => self.window_s = num(value)?,
                "stride" => self.stride_s = Some(num(value)?),
                "coverage" => self.coverage_threshold = num(value)?,
                "imu_only" => {
                    self.imu_only = parse_bool(value).ok_or_else(|| invalid(line, format!("bad flag `{value}`")))?
                }
                "seed" => self.seed = value.parse().map_err(|_| invalid(line, format!("bad seed `{value}`")))?,
                "folds" => self.folds = value.parse().map_err(|_| invalid(line, format!("bad fold count `{value}`")))?,
                "depths" => self.depths = parse_list(value, line, parse_depth)?,
                "estimators" => {
                    self.estimators = parse_list(value, line, |s| s.parse().ok().filter(|&n: &usize| n > 0))?
                }
                "column.timestamp" => self.columns.timestamp = value.into(),
                "column.x" => self.columns.acc_x = value.into(),
                "column.y" => self.columns.acc_y = value.into(),
                "column.z" => self.columns.acc_z = value.into(),
                "column.magnitude" => self.columns.magnitude = value.into(),
                "column.pressure" => self.columns.pressure = value.into(),
                "column.label" => self.columns.label = value.into(),
                other => return Err(invalid(line, format!("unknown key `{other}`"))),
            }
        }
        Ok(())
    }

    pub fn window_params(&self) -> Result<WindowParams> {
        let mut p = WindowParams::new(self.window_s).with_coverage(self.coverage_threshold);
        if let Some(s) = self.stride_s {
            p = p.with_stride(s);
        }
        p.validate()?;
        Ok(p)
    }

    /// Cartesian product of depths and estimator counts.
    pub fn grid(&self) -> Vec<ForestHyperparams> {
        self.depths
            .iter()
            .flat_map(|&d| self.estimators.iter().map(move |&n| ForestHyperparams::new(d, n)))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.window_params()?;
        if self.folds < 2 {
            return Err(Error::InvalidConfig("folds must be at least 2".into()));
        }
        if self.depths.is_empty() || self.estimators.is_empty() {
            return Err(Error::InvalidConfig("empty hyperparameter grid".into()));
        }
        Ok(())
    }

    /// One `key = value` line per setting, in the file syntax.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let list = |v: Vec<String>| v.join(",");
        let c = &self.columns;
        let stride = self.stride_s.unwrap_or(self.window_s);
        let data = self.data_dir.as_ref().map_or_else(|| "-".to_string(), |d| d.display().to_string());
        let _ = writeln!(out, "data = {data}");
        let _ = writeln!(out, "out = {}", self.out_dir.display());
        let _ = writeln!(out, "window = {}", self.window_s);
        let _ = writeln!(out, "stride = {stride}");
        let _ = writeln!(out, "coverage = {}", self.coverage_threshold);
        let _ = writeln!(out, "imu_only = {}", self.imu_only);
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "folds = {}", self.folds);
        let depths = self.depths.iter().map(|d| d.map_or_else(|| "none".into(), |d| d.to_string())).collect();
        let _ = writeln!(out, "depths = {}", list(depths));
        let _ = writeln!(out, "estimators = {}", list(self.estimators.iter().map(|n| n.to_string()).collect()));
        for (k, v) in [
            ("timestamp", &c.timestamp),
            ("x", &c.acc_x),
            ("y", &c.acc_y),
            ("z", &c.acc_z),
            ("magnitude", &c.magnitude),
            ("pressure", &c.pressure),
            ("label", &c.label),
        ] {
            let _ = writeln!(out, "column.{k} = {v}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_cover_the_standard_grid() {
        let c = RunConfig::default();
        assert_eq!(c.grid(), crate::forest::default_grid());
        assert_eq!(c.seed, 42);
        c.validate().unwrap();
    }

    #[test]
    fn file_overrides_defaults() {
        let mut c = RunConfig::default();
        c.apply_file("# comment\nwindow = 4\nseed=7 # trailing\ndepths = none, 15\nestimators = 10,20\ncolumn.pressure = Baro\nimu_only = yes\n")
            .unwrap();
        assert_eq!(c.window_s, 4.0);
        assert_eq!(c.seed, 7);
        assert_eq!(c.depths, vec![None, Some(15)]);
        assert_eq!(c.grid().len(), 4);
        assert_eq!(c.columns.pressure, "Baro");
        assert!(c.imu_only);
    }

    #[test]
    fn render_round_trips() {
        let mut c = RunConfig::default();
        c.apply_file("window = 4\nstride = 2\ndepths = 3\ndata = /tmp/x").unwrap();
        let mut d = RunConfig::default();
        d.apply_file(&c.render()).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn rejects_bad_lines() {
        for bad in ["window", "window = abc", "colour = red", "depths = 0", "estimators = ", "imu_only = maybe"] {
            let mut c = RunConfig::default();
            assert!(matches!(c.apply_file(bad), Err(Error::InvalidConfig(_))), "{bad}");
        }
        let c = RunConfig { window_s: -1.0, ..RunConfig::default() };
        assert!(c.validate().is_err());
    }
}
