//! Leave-one-subject-out evaluation and classification metrics.

use serde::{Deserialize, Serialize};

use crate::balance::{random_oversample, Dataset};
use crate::domain::ActivityLabel;
use crate::error::{Error, Result};
use crate::features::FeatureSet;
use crate::forest::{default_grid, grid_search, train_forest, ForestHyperparams};
use crate::scalar::Scalar;
use crate::seed::derive_seed;

const N: usize = ActivityLabel::COUNT;

/// Rows are truth, columns are prediction, both in label-ordinal order.
pub type ConfusionMatrix = [[u64; N]; N];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub f1_micro: f64,
    /// Unweighted mean over all five classes; absent classes score 0.
    pub f1_macro: f64,
    pub f1_weighted: f64,
    pub per_class_f1: [f64; N],
    pub support: [u64; N],
    pub confusion: ConfusionMatrix,
}

fn f1(tp: u64, fp: u64, fn_: u64) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        (2 * tp) as f64 / denom as f64
    }
}

pub fn compute_metrics(truth: &[ActivityLabel], predicted: &[ActivityLabel]) -> Result<Metrics> {
    if truth.len() != predicted.len() {
        return Err(Error::LengthMismatch { truth: truth.len(), predicted: predicted.len() });
    }
    if truth.is_empty() {
        return Err(Error::Empty);
    }
    let mut confusion = [[0u64; N]; N];
    for (t, p) in truth.iter().zip(predicted) {
        confusion[t.ordinal()][p.ordinal()] += 1;
    }
    let total = truth.len() as u64;
    let mut support = [0u64; N];
    let mut per_class_f1 = [0.0; N];
    let (mut tp_all, mut fp_all, mut fn_all) = (0, 0, 0);
    for c in 0..N {
        let tp = confusion[c][c];
        let row: u64 = confusion[c].iter().sum();
        let col: u64 = confusion.iter().map(|r| r[c]).sum();
        support[c] = row;
        per_class_f1[c] = f1(tp, col - tp, row - tp);
        tp_all += tp;
        fp_all += col - tp;
        fn_all += row - tp;
    }
    Ok(Metrics {
        accuracy: tp_all as f64 / total as f64,
        f1_micro: f1(tp_all, fp_all, fn_all),
        f1_macro: per_class_f1.iter().sum::<f64>() / N as f64,
        f1_weighted: per_class_f1
            .iter()
            .zip(&support)
            .map(|(f, &s)| f * s as f64)
            .sum::<f64>()
            / total as f64,
        per_class_f1,
        support,
        confusion,
    })
}

#[derive(Debug, Clone)]
pub struct LosoSplit<T> {
    pub held_out: String,
    pub train: Dataset<T>,
    pub test: Dataset<T>,
}

/// One split per participant, ordered by participant id.
pub fn loso_splits<T: Clone>(data: &Dataset<T>) -> Result<Vec<LosoSplit<T>>> {
    let participants = data.participants();
    if participants.len() < 2 {
        return Err(Error::SingleParticipant);
    }
    Ok(participants
        .into_iter()
        .map(|id| {
            let (test, train): (Vec<usize>, Vec<usize>) =
                (0..data.len()).partition(|&i| data.vectors[i].participant_id == id);
            LosoSplit { train: data.subset(&train), test: data.subset(&test), held_out: id }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LosoConfig {
    pub grid: Vec<ForestHyperparams>,
    /// Inner cross-validation folds of the grid search.
    pub k: usize,
    pub seed: u64,
    pub feature_set: FeatureSet,
    /// Recorded in the report; windows are cut before this stage.
    pub window_s: f64,
}

impl Default for LosoConfig {
    fn default() -> Self {
        Self { grid: default_grid(), k: 10, seed: 42, feature_set: FeatureSet::Full, window_s: 8.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub participant_id: String,
    pub params: ForestHyperparams,
    /// Mean inner-CV accuracy of the chosen cell; absent for one-cell grids.
    pub cv_accuracy: Option<f64>,
    pub n_train: usize,
    pub n_train_balanced: usize,
    pub n_test: usize,
    pub metrics: Metrics,
    pub importances: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics {
    pub accuracy: f64,
    pub f1_micro: f64,
    pub f1_macro: f64,
    pub f1_weighted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub window_s: f64,
    pub feature_set: FeatureSet,
    pub seed: u64,
    pub feature_names: Vec<String>,
    pub folds: Vec<FoldResult>,
    /// Unweighted means over participants.
    pub aggregate: AggregateMetrics,
    /// Sum of the per-participant confusion matrices.
    pub confusion: ConfusionMatrix,
    pub mean_importances: Vec<f64>,
}

impl EvaluationReport {
    /// `(name, score)` sorted by descending score, ties by name order.
    pub fn ranked_importances(&self) -> Vec<(String, f64)> {
        let mut ranked: Vec<(String, f64)> = self
            .feature_names
            .iter()
            .cloned()
            .zip(self.mean_importances.iter().copied())
            .collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
        ranked
    }
}

/// Evaluates one held-out participant: grid search on the remaining
/// participants, oversample, fit, predict.
pub fn evaluate_split<T: Scalar>(split: &LosoSplit<T>, config: &LosoConfig, fold_seed: u64) -> Result<FoldResult> {
    if let Some(v) = split.train.vectors.iter().find(|v| v.participant_id == split.held_out) {
        return Err(Error::Leakage(v.participant_id.clone()));
    }
    let (params, cv_accuracy) = match config.grid.as_slice() {
        [only] => (*only, None),
        grid => {
            let gs = grid_search(&split.train, grid, config.k, derive_seed(fold_seed, 1))?;
            let acc = gs.cells.iter().find(|c| c.params == gs.best).map(|c| c.mean_accuracy);
            (gs.best, acc)
        }
    };
    let balanced = random_oversample(&split.train, derive_seed(fold_seed, 2))?;
    let forest = train_forest(&balanced, params, derive_seed(fold_seed, 3))?;
    let predicted = forest.predict_all(&split.test.vectors)?;
    let truth: Vec<ActivityLabel> = (0..split.test.len()).map(|i| split.test.label(i)).collect();
    Ok(FoldResult {
        participant_id: split.held_out.clone(),
        params,
        cv_accuracy,
        n_train: split.train.len(),
        n_train_balanced: balanced.len(),
        n_test: split.test.len(),
        metrics: compute_metrics(&truth, &predicted)?,
        importances: forest.feature_importances(),
    })
}

pub fn run_loso<T: Scalar>(data: &Dataset<T>, config: &LosoConfig) -> Result<EvaluationReport> {
    run_loso_with_progress(data, config, |_| {})
}

/// As [`run_loso`], calling `progress` after each participant.
pub fn run_loso_with_progress<T: Scalar>(
    data: &Dataset<T>,
    config: &LosoConfig,
    mut progress: impl FnMut(&FoldResult),
) -> Result<EvaluationReport> {
    let data = match config.feature_set {
        FeatureSet::Full => data.clone(),
        FeatureSet::ImuOnly => data.without_pressure(),
    };
    let splits = loso_splits(&data)?;
    let mut folds = Vec::with_capacity(splits.len());
    for (i, split) in splits.iter().enumerate() {
        let fold = evaluate_split(split, config, derive_seed(config.seed, i as u64))?;
        progress(&fold);
        folds.push(fold);
    }
    let n = folds.len() as f64;
    let mean = |f: fn(&Metrics) -> f64| folds.iter().map(|r| f(&r.metrics)).sum::<f64>() / n;
    let mut confusion = [[0u64; N]; N];
    for fold in &folds {
        for (row, add) in confusion.iter_mut().zip(&fold.metrics.confusion) {
            row.iter_mut().zip(add).for_each(|(a, b)| *a += b);
        }
    }
    let d = data.n_features();
    let mut mean_importances = vec![0.0; d];
    for fold in &folds {
        mean_importances.iter_mut().zip(&fold.importances).for_each(|(m, v)| *m += v);
    }
    mean_importances.iter_mut().for_each(|m| *m /= n);
    Ok(EvaluationReport {
        window_s: config.window_s,
        feature_set: config.feature_set,
        seed: config.seed,
        feature_names: data.feature_names.clone(),
        aggregate: AggregateMetrics {
            accuracy: mean(|m| m.accuracy),
            f1_micro: mean(|m| m.f1_micro),
            f1_macro: mean(|m| m.f1_macro),
            f1_weighted: mean(|m| m.f1_weighted),
        },
        folds,
        confusion,
        mean_importances,
    })
}
