use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use barohar::config::RunConfig;
use barohar::evaluation::{run_loso_with_progress, LosoConfig};
use barohar::features::{read_features_csv, write_features_csv};
use barohar::forest::{grid_search, load_forest, save_forest, train_forest};
use barohar::ingest::write_sensor_csv;
use barohar::pipeline::{build_dataset, load_directory};
use barohar::report::{self, write_atomic};
use barohar::synth::{generate_cohort, participant_id, participant_seed, SynthConfig};
use barohar::{ActivityLabel, Dataset, FeatureSet, ForestHyperparams};

const FEATURES_FILE: &str = "features.csv";
const MODEL_FILE: &str = "model.txt";
const CONFIG_FILE: &str = "config.txt";

#[derive(Parser)]
#[command(name = "barohar", version, about = "Floor-change activity recognition from wrist accelerometer and barometer logs")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Plain `key = value` configuration file; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory of sensor CSV files.
    #[arg(long, global = true, env = "BAROHAR_DATA_DIR")]
    data: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Window length in seconds.
    #[arg(long, global = true)]
    window: Option<f64>,
    /// Window stride in seconds (defaults to the window length).
    #[arg(long, global = true)]
    stride: Option<f64>,
    /// Share of samples the modal label needs for a window to be labelled.
    #[arg(long, global = true)]
    coverage: Option<f64>,
    /// Drop the six pressure features.
    #[arg(long, global = true)]
    imu_only: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic cohort of sensor CSV files and a manifest.
    Synth {
        #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
        participants: u64,
        /// Target session length in minutes.
        #[arg(long)]
        minutes: Option<f64>,
    },
    /// Window the recordings and write the feature table.
    Extract,
    /// Fit a forest on all labelled windows and save it.
    Train {
        /// Feature table to use instead of extracting from --data.
        #[arg(long)]
        features: Option<PathBuf>,
        /// Fixed tree depth (`none` for unbounded); skips the grid search.
        #[arg(long)]
        depth: Option<String>,
        /// Fixed number of trees; skips the grid search.
        #[arg(long)]
        trees: Option<usize>,
    },
    /// Leave-one-participant-out evaluation with nested grid search.
    Loso {
        /// Feature table to use instead of extracting from --data.
        #[arg(long)]
        features: Option<PathBuf>,
    },
    /// Feature importances of a saved model.
    Importance {
        #[arg(long)]
        model: PathBuf,
    },
    /// Side-by-side table of one or more evaluation summaries.
    Report {
        #[arg(required = true)]
        summaries: Vec<PathBuf>,
    },
}

fn effective_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &common.config {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        cfg.apply_file(&text).with_context(|| format!("in {}", path.display()))?;
    }
    if let Some(d) = &common.data {
        cfg.data_dir = Some(d.clone());
    }
    if let Some(o) = &common.out {
        cfg.out_dir = o.clone();
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(w) = common.window {
        cfg.window_s = w;
    }
    if common.stride.is_some() {
        cfg.stride_s = common.stride;
    }
    if let Some(c) = common.coverage {
        cfg.coverage_threshold = c;
    }
    cfg.imu_only |= common.imu_only;
    cfg.validate()?;
    for line in cfg.render().lines() {
        eprintln!("# {line}");
    }
    Ok(cfg)
}

fn data_dir(cfg: &RunConfig) -> Result<&Path> {
    match &cfg.data_dir {
        Some(d) => Ok(d),
        None => bail!("no data directory: pass --data, set BAROHAR_DATA_DIR or `data =` in the config file"),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    write_atomic(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn extract_dataset(cfg: &RunConfig) -> Result<Dataset> {
    let dir = data_dir(cfg)?;
    let loaded = load_directory(dir, &cfg.columns).with_context(|| format!("loading {}", dir.display()))?;
    for (_, s) in &loaded {
        if s.rejected_rows > 0 || s.magnitude_corrections > 0 || s.resampled {
            eprintln!(
                "{}: {} rejected rows, {} magnitude corrections{}",
                s.participant_id,
                s.rejected_rows,
                s.magnitude_corrections,
                if s.resampled { ", resampled" } else { "" }
            );
        }
    }
    let recordings: Vec<_> = loaded.into_iter().map(|(r, _)| r).collect();
    let (data, counts) = build_dataset::<f64>(&recordings, &cfg.window_params()?)?;
    let (mut kept, mut unlabeled, mut incomplete) = (0, 0, 0);
    for c in &counts {
        kept += c.labeled;
        unlabeled += c.unlabeled;
        incomplete += c.incomplete;
    }
    eprintln!(
        "{} recordings: {kept} labelled windows kept, {unlabeled} below coverage, {incomplete} incomplete",
        counts.len()
    );
    Ok(data)
}

fn dataset(cfg: &RunConfig, features: Option<&Path>) -> Result<Dataset> {
    let data = match features {
        Some(path) => {
            let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            let (names, vectors) = read_features_csv::<f64, _>(BufReader::new(file))?;
            Dataset::new(names, vectors.into_iter().filter(|v| v.label.is_some()).collect())?
        }
        None => extract_dataset(cfg)?,
    };
    Ok(if cfg.imu_only { data.without_pressure() } else { data })
}

fn cmd_synth(cfg: &RunConfig, participants: usize, minutes: Option<f64>) -> Result<()> {
    let mut synth = SynthConfig::default();
    if let Some(m) = minutes {
        synth.session_minutes = m;
    }
    let cohort = generate_cohort(participants, &synth, cfg.seed)?;
    let mut entries = Vec::new();
    for (i, s) in cohort.iter().enumerate() {
        let id = participant_id(i);
        let file = format!("{id}.csv");
        let mut buf = Vec::new();
        write_sensor_csv(&s.recording, &mut buf)?;
        write_file(&cfg.out_dir.join(&file), &buf)?;
        let seconds: serde_json::Map<_, _> = ActivityLabel::ALL
            .iter()
            .zip(s.class_durations_ms())
            .map(|(l, ms)| (l.canonical_name().to_string(), json!(ms as f64 / 1000.0)))
            .collect();
        entries.push(json!({
            "id": id,
            "file": file,
            "seed": participant_seed(cfg.seed, i),
            "samples": s.recording.len(),
            "class_seconds": seconds,
            "segments": s.segments,
        }));
    }
    let manifest = json!({ "seed": cfg.seed, "config": synth, "participants": entries });
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    write_file(&cfg.out_dir.join("manifest.json"), text.as_bytes())?;
    println!("wrote {participants} recordings to {}", cfg.out_dir.display());
    Ok(())
}

fn cmd_extract(cfg: &RunConfig) -> Result<()> {
    let data = extract_dataset(cfg)?;
    let data = if cfg.imu_only { data.without_pressure() } else { data };
    let mut buf = Vec::new();
    write_features_csv(&mut buf, &data.feature_names, &data.vectors)?;
    let path = cfg.out_dir.join(FEATURES_FILE);
    write_file(&path, &buf)?;
    println!("wrote {} feature rows to {}", data.len(), path.display());
    Ok(())
}

fn parse_depth(s: &str) -> Result<Option<usize>> {
    if s.eq_ignore_ascii_case("none") {
        return Ok(None);
    }
    match s.parse::<usize>() {
        Ok(d) if d > 0 => Ok(Some(d)),
        _ => bail!("bad depth `{s}`: expected a positive integer or `none`"),
    }
}

fn cmd_train(cfg: &RunConfig, features: Option<&Path>, depth: Option<&str>, trees: Option<usize>) -> Result<()> {
    let data = dataset(cfg, features)?;
    let params = match (depth, trees) {
        (None, None) => {
            let result = grid_search(&data, &cfg.grid(), cfg.folds, cfg.seed)?;
            let acc = result.cells.iter().find(|c| c.params == result.best).map_or(0.0, |c| c.mean_accuracy);
            eprintln!("grid search: {} cells, best mean accuracy {acc:.4}", result.cells.len());
            result.best
        }
        (d, n) => ForestHyperparams::new(
            d.map(parse_depth).transpose()?.unwrap_or(None),
            n.unwrap_or(*cfg.estimators.first().expect("validated grid")),
        ),
    };
    let balanced = barohar::balance::random_oversample(&data, cfg.seed)?;
    let forest = train_forest(&balanced, params, cfg.seed)?;
    let mut buf = Vec::new();
    save_forest(&forest, BufWriter::new(&mut buf))?;
    let path = cfg.out_dir.join(MODEL_FILE);
    write_file(&path, &buf)?;
    println!(
        "trained {} trees (max_depth {}) on {} windows; model at {}",
        params.n_estimators,
        params.depth_label(),
        data.len(),
        path.display()
    );
    Ok(())
}

fn cmd_loso(cfg: &RunConfig, features: Option<&Path>) -> Result<()> {
    let full = dataset(&RunConfig { imu_only: false, ..cfg.clone() }, features)?;
    let config = LosoConfig {
        grid: cfg.grid(),
        k: cfg.folds,
        seed: cfg.seed,
        feature_set: if cfg.imu_only { FeatureSet::ImuOnly } else { FeatureSet::Full },
        window_s: cfg.window_s,
    };
    let report = run_loso_with_progress(&full, &config, |f| {
        eprintln!(
            "{}: accuracy {:.4}, macro F1 {:.4} (max_depth {}, {} trees)",
            f.participant_id,
            f.metrics.accuracy,
            f.metrics.f1_macro,
            f.params.depth_label(),
            f.params.n_estimators
        );
    })?;
    report::write_report(&cfg.out_dir, &report)?;
    write_file(&cfg.out_dir.join(CONFIG_FILE), cfg.render().as_bytes())?;
    print!("{}", report::results_table(&[&report]));
    println!("reports written to {}", cfg.out_dir.display());
    Ok(())
}

fn cmd_importance(cfg: &RunConfig, model: &Path) -> Result<()> {
    let file = File::open(model).with_context(|| format!("opening {}", model.display()))?;
    let forest = load_forest::<f64, _>(BufReader::new(file))?;
    let mut ranked: Vec<(String, f64)> =
        forest.feature_names.iter().cloned().zip(forest.feature_importances()).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    write_file(&cfg.out_dir.join(report::IMPORTANCE_FILE), report::importance_csv(&ranked).as_bytes())?;
    write_file(&cfg.out_dir.join(report::IMPORTANCE_SVG), report::importance_svg(&ranked).as_bytes())?;
    for (i, (name, v)) in ranked.iter().enumerate() {
        println!("{:>2}. {name:<20} {v:.6}", i + 1);
    }
    Ok(())
}

fn cmd_report(cfg: &RunConfig, summaries: &[PathBuf]) -> Result<()> {
    let reports = summaries
        .iter()
        .map(|p| report::read_summary(p).with_context(|| format!("reading {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<_> = reports.iter().collect();
    let table = report::results_table(&refs);
    write_file(&cfg.out_dir.join(report::TABLE_FILE), table.as_bytes())?;
    print!("{table}");
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let cfg = effective_config(&cli.common)?;
    match cli.command {
        Command::Synth { participants, minutes } => cmd_synth(&cfg, participants as usize, minutes),
        Command::Extract => cmd_extract(&cfg),
        Command::Train { features, depth, trees } => cmd_train(&cfg, features.as_deref(), depth.as_deref(), trees),
        Command::Loso { features } => cmd_loso(&cfg, features.as_deref()),
        Command::Importance { model } => cmd_importance(&cfg, &model),
        Command::Report { summaries } => cmd_report(&cfg, &summaries),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
