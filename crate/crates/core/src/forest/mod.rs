//! Bagged CART random forest with impurity-based feature importances.

mod grid;
mod persist;
pub mod tree;

pub use grid::{default_grid, grid_search, stratified_folds, GridCell, GridSearchResult};
pub use persist::{load_forest, save_forest, MODEL_MAGIC};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::balance::Dataset;
use crate::domain::ActivityLabel;
use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::scalar::Scalar;
use crate::seed::derive_seed;
use tree::{grow_tree, Tree, TrainingMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ForestHyperparams {
    /// `None` grows until purity.
    pub max_depth: Option<usize>,
    pub n_estimators: usize,
}

impl ForestHyperparams {
    pub fn new(max_depth: Option<usize>, n_estimators: usize) -> Self {
        Self { max_depth, n_estimators }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.n_estimators == 0 {
            return Err(Error::InvalidParams("n_estimators must be at least 1".into()));
        }
        if self.max_depth == Some(0) {
            return Err(Error::InvalidParams("max_depth must be positive".into()));
        }
        Ok(())
    }

    pub fn depth_label(&self) -> String {
        self.max_depth.map_or_else(|| "None".to_string(), |d| d.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedForest<T> {
    pub trees: Vec<Tree<T>>,
    pub feature_names: Vec<String>,
    pub params: ForestHyperparams,
    pub seed: u64,
    pub classes: Vec<ActivityLabel>,
}

/// Seed of tree `index` in a forest seeded with `seed`.
pub fn tree_seed(seed: u64, index: usize) -> u64 {
    derive_seed(seed, index as u64)
}

pub(crate) fn check_trainable<T: Clone>(data: &Dataset<T>) -> Result<()> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if data.class_counts().iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::DegenerateData);
    }
    Ok(())
}

/// Grows `n` trees in parallel; tree `i` depends only on `(seed, i)`.
pub(crate) fn grow_trees<T: Scalar>(
    matrix: &TrainingMatrix<T>,
    n: usize,
    max_depth: Option<usize>,
    seed: u64,
) -> Vec<Tree<T>> {
    (0..n)
        .into_par_iter()
        .map(|i| grow_tree(matrix, max_depth, tree_seed(seed, i)))
        .collect()
}

/// Fits `params.n_estimators` trees, each on a bootstrap of size n with
/// ceil(sqrt(d)) candidate features per node.
pub fn train_forest<T: Scalar>(data: &Dataset<T>, params: ForestHyperparams, seed: u64) -> Result<TrainedForest<T>> {
    params.validate()?;
    check_trainable(data)?;
    let matrix = TrainingMatrix::new(data);
    Ok(TrainedForest {
        trees: grow_trees(&matrix, params.n_estimators, params.max_depth, seed),
        feature_names: data.feature_names.clone(),
        params,
        seed,
        classes: ActivityLabel::ALL.to_vec(),
    })
}

/// Plurality vote over per-tree labels; ties to the lowest ordinal.
pub fn vote(labels: impl IntoIterator<Item = ActivityLabel>) -> ActivityLabel {
    let mut counts = [0u32; ActivityLabel::COUNT];
    for l in labels {
        counts[l.ordinal()] += 1;
    }
    tree::majority(&counts)
}

impl<T: Scalar> TrainedForest<T> {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn predict(&self, values: &[T]) -> Result<ActivityLabel> {
        if values.len() != self.n_features() {
            return Err(Error::ArityMismatch { expected: self.n_features(), got: values.len() });
        }
        Ok(vote(self.trees.iter().map(|t| t.predict(values))))
    }

    pub fn predict_vector(&self, v: &FeatureVector<T>) -> Result<ActivityLabel> {
        self.predict(&v.values)
    }

    pub fn predict_all(&self, vectors: &[FeatureVector<T>]) -> Result<Vec<ActivityLabel>> {
        vectors.par_iter().map(|v| self.predict(&v.values)).collect()
    }

    /// Mean decrease in Gini impurity per feature, normalized per tree,
    /// averaged over trees that split at least once, and normalized to one.
    pub fn feature_importances(&self) -> Vec<f64> {
        let d = self.n_features();
        let mut sum = vec![0.0; d];
        let mut used = 0usize;
        for tree in &self.trees {
            let imp = tree.impurity_decrease(d);
            let total: f64 = imp.iter().sum();
            if total > 0.0 {
                used += 1;
                sum.iter_mut().zip(&imp).for_each(|(s, v)| *s += v / total);
            }
        }
        if used == 0 {
            return sum;
        }
        let total: f64 = sum.iter().sum();
        sum.iter_mut().for_each(|s| *s /= total);
        sum
    }
}

pub fn predict<T: Scalar>(forest: &TrainedForest<T>, v: &FeatureVector<T>) -> Result<ActivityLabel> {
    forest.predict_vector(v)
}

pub fn feature_importances<T: Scalar>(forest: &TrainedForest<T>) -> Vec<f64> {
    forest.feature_importances()
}
