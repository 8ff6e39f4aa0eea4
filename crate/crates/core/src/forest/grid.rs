//! Exhaustive hyperparameter search scored by stratified k-fold accuracy.
//!
//! Per fold, the largest forest in the grid is grown once (unbounded, or to
//! the deepest bounded depth). Smaller forests are its tree prefixes and
//! shallower ones its truncations, both exact because tree `i` depends only
//! on `(seed, i)` and node draws depend only on the node's path.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow_tree, TrainingMatrix};
use super::{check_trainable, tree_seed, ForestHyperparams};
use crate::balance::{random_oversample, Dataset};
use crate::domain::ActivityLabel;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seed::derive_seed;

const FOLD_STREAM: u64 = 0x666f_6c64;
const OVERSAMPLE_STREAM: u64 = 0x6f76_6572;
const FOREST_STREAM: u64 = 0x7472_6565;

/// max_depth in {15, 20, unbounded} x n_estimators in 200..=350 step 25.
pub fn default_grid() -> Vec<ForestHyperparams> {
    let mut grid = Vec::new();
    for depth in [Some(15), Some(20), None] {
        for n in (200..=350).step_by(25) {
            grid.push(ForestHyperparams::new(depth, n));
        }
    }
    grid
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub params: ForestHyperparams,
    pub mean_accuracy: f64,
    pub fold_accuracies: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best: ForestHyperparams,
    pub cells: Vec<GridCell>,
}

/// Fold index per row: each class is shuffled and dealt round-robin, with
/// the dealing position carried across classes to even out fold sizes.
pub fn stratified_folds<T: Clone>(data: &Dataset<T>, k: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut members: [Vec<usize>; ActivityLabel::COUNT] = Default::default();
    for i in 0..data.len() {
        members[data.label(i).ordinal()].push(i);
    }
    let mut fold = vec![0; data.len()];
    let mut position = 0;
    for class in &mut members {
        class.shuffle(&mut rng);
        for &i in class.iter() {
            fold[i] = position % k;
            position += 1;
        }
    }
    fold
}

/// Ordering used to break score ties: fewer trees, then shallower, with
/// bounded depths before unbounded.
fn preference_key(p: &ForestHyperparams) -> (usize, usize) {
    (p.n_estimators, p.max_depth.unwrap_or(usize::MAX))
}

/// Scores every grid cell by mean stratified k-fold accuracy. Each fold's
/// training part is oversampled; validation parts never are.
pub fn grid_search<T: Scalar>(
    data: &Dataset<T>,
    grid: &[ForestHyperparams],
    k: usize,
    seed: u64,
) -> Result<GridSearchResult> {
    if grid.is_empty() {
        return Err(Error::InvalidParams("empty hyperparameter grid".into()));
    }
    grid.iter().try_for_each(ForestHyperparams::validate)?;
    if k < 2 {
        return Err(Error::InvalidParams(format!("need at least 2 folds, got {k}")));
    }
    check_trainable(data)?;
    if let Some((ord, &n)) = data.class_counts().iter().enumerate().find(|(_, &c)| c > 0 && c < k) {
        return Err(Error::InsufficientData(format!(
            "class {} has {n} samples, fewer than {k} folds",
            ActivityLabel::ALL[ord]
        )));
    }

    let mut depths: Vec<Option<usize>> = grid.iter().map(|p| p.max_depth).collect();
    depths.sort_by_key(|d| d.unwrap_or(usize::MAX));
    depths.dedup();
    let mut sizes: Vec<usize> = grid.iter().map(|p| p.n_estimators).collect();
    sizes.sort_unstable();
    sizes.dedup();
    let max_trees = *sizes.last().expect("grid is non-empty");
    let grow_depth = if depths.contains(&None) { None } else { depths.iter().flatten().max().copied() };

    let folds = stratified_folds(data, k, derive_seed(seed, FOLD_STREAM));
    // accuracy[fold][depth][size]
    let mut accuracy = vec![vec![vec![0.0; sizes.len()]; depths.len()]; k];
    for (f, fold_acc) in accuracy.iter_mut().enumerate() {
        let (train_idx, val_idx): (Vec<usize>, Vec<usize>) = (0..data.len()).partition(|&i| folds[i] != f);
        let train = random_oversample(&data.subset(&train_idx), derive_seed(seed, OVERSAMPLE_STREAM + f as u64))?;
        let matrix = TrainingMatrix::new(&train);
        let forest_seed = derive_seed(seed, FOREST_STREAM + f as u64);
        let per_tree: Vec<Vec<u8>> = (0..max_trees)
            .into_par_iter()
            .map(|i| {
                let tree = grow_tree(&matrix, grow_depth, tree_seed(forest_seed, i));
                let mut out = Vec::with_capacity(depths.len() * val_idx.len());
                for &d in &depths {
                    for &v in &val_idx {
                        out.push(tree.predict_truncated(&data.vectors[v].values, d).ordinal() as u8);
                    }
                }
                out
            })
            .collect();

        let mut votes = vec![[0u32; ActivityLabel::COUNT]; depths.len() * val_idx.len()];
        let mut next_size = 0;
        for (i, labels) in per_tree.iter().enumerate() {
            for (slot, &l) in votes.iter_mut().zip(labels) {
                slot[l as usize] += 1;
            }
            if sizes[next_size] == i + 1 {
                for (di, row) in fold_acc.iter_mut().enumerate() {
                    let correct = val_idx
                        .iter()
                        .enumerate()
                        .filter(|(j, &v)| {
                            super::tree::majority(&votes[di * val_idx.len() + j]) == data.label(v)
                        })
                        .count();
                    row[next_size] = correct as f64 / val_idx.len() as f64;
                }
                next_size += 1;
            }
        }
    }

    let mut cells: Vec<GridCell> = grid
        .iter()
        .map(|p| {
            let di = depths.iter().position(|d| *d == p.max_depth).expect("depth indexed");
            let si = sizes.iter().position(|n| *n == p.n_estimators).expect("size indexed");
            let fold_accuracies: Vec<f64> = accuracy.iter().map(|fa| fa[di][si]).collect();
            GridCell {
                params: *p,
                mean_accuracy: fold_accuracies.iter().sum::<f64>() / k as f64,
                fold_accuracies,
            }
        })
        .collect();
    cells.sort_by_key(|c| preference_key(&c.params));
    cells.dedup_by_key(|c| c.params);
    let mut best = &cells[0];
    for c in &cells[1..] {
        if c.mean_accuracy > best.mean_accuracy {
            best = c;
        }
    }
    Ok(GridSearchResult { best: best.params, cells })
}
