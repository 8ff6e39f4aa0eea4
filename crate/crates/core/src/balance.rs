//! Labelled feature datasets and random oversampling of minority classes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::ActivityLabel;
use crate::error::{Error, Result};
use crate::features::{self, FeatureVector};

/// Labelled vectors sharing one feature layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub feature_names: Vec<String>,
    pub vectors: Vec<FeatureVector<T>>,
}

impl<T: Clone> Dataset<T> {
    /// Checks arity and that every vector is labelled.
    pub fn new(feature_names: Vec<String>, vectors: Vec<FeatureVector<T>>) -> Result<Self> {
        for (row, v) in vectors.iter().enumerate() {
            if v.values.len() != feature_names.len() {
                return Err(Error::ArityMismatch { expected: feature_names.len(), got: v.values.len() });
            }
            if v.label.is_none() {
                return Err(Error::MalformedRow { row: row + 1, reason: "vector has no label".into() });
            }
        }
        Ok(Self { feature_names, vectors })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn label(&self, i: usize) -> ActivityLabel {
        self.vectors[i].label.expect("dataset vectors are labelled")
    }

    pub fn class_counts(&self) -> [usize; ActivityLabel::COUNT] {
        let mut counts = [0; ActivityLabel::COUNT];
        for i in 0..self.len() {
            counts[self.label(i).ordinal()] += 1;
        }
        counts
    }

    /// Sorted, de-duplicated participant ids.
    pub fn participants(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.vectors.iter().map(|v| v.participant_id.clone()).collect();
        ids.sort();
        ids.dedup();
        ids
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            feature_names: self.feature_names.clone(),
            vectors: indices.iter().map(|&i| self.vectors[i].clone()).collect(),
        }
    }

    pub fn without_pressure(&self) -> Self {
        let (feature_names, vectors) = features::ablate_pressure(&self.feature_names, &self.vectors);
        Self { feature_names, vectors }
    }
}

/// Duplicates uniformly drawn members of every non-majority class until all
/// present classes match the majority count.
///
/// Originals come first in input order, followed by the duplicates grouped
/// by class ordinal. Classes absent from the input stay absent.
pub fn random_oversample<T: Clone>(data: &Dataset<T>, seed: u64) -> Result<Dataset<T>> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut members: [Vec<usize>; ActivityLabel::COUNT] = Default::default();
    for i in 0..data.len() {
        members[data.label(i).ordinal()].push(i);
    }
    let majority = members.iter().map(Vec::len).max().unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = data.vectors.clone();
    for class in &members {
        if class.is_empty() {
            continue;
        }
        for _ in class.len()..majority {
            let pick = class[rng.random_range(0..class.len())];
            out.push(data.vectors[pick].clone());
        }
    }
    Ok(Dataset { feature_names: data.feature_names.clone(), vectors: out })
}
