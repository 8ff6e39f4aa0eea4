//! CART classification trees grown on weighted, de-duplicated rows.
//!
//! Every node draws its candidate features from an RNG seeded by its own
//! path from the root. Growth is therefore independent of traversal order,
//! and a tree grown with `max_depth = d` equals the unbounded tree cut at
//! depth `d`. Grid search relies on this.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::balance::Dataset;
use crate::domain::ActivityLabel;
use crate::scalar::Scalar;
use crate::seed::derive_seed;

pub type ClassCounts = [u32; ActivityLabel::COUNT];

/// Argmax with ties to the lowest ordinal.
pub fn majority(counts: &ClassCounts) -> ActivityLabel {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    ActivityLabel::ALL[best]
}

fn gini(counts: &ClassCounts) -> f64 {
    let total: u32 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind<T> {
    /// `value <= threshold` goes left.
    Split { feature: usize, threshold: T, left: u32, right: u32 },
    Leaf { label: ActivityLabel },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node<T> {
    /// Bootstrap-weighted class counts of the training rows reaching the node.
    pub counts: ClassCounts,
    pub kind: NodeKind<T>,
}

/// A tree stored as an arena; the root is node 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree<T> {
    pub nodes: Vec<Node<T>>,
}

impl<T: Scalar> Tree<T> {
    pub fn predict(&self, x: &[T]) -> ActivityLabel {
        self.predict_truncated(x, None)
    }

    /// Prediction of the same tree cut at `max_depth`.
    pub fn predict_truncated(&self, x: &[T], max_depth: Option<usize>) -> ActivityLabel {
        let mut at = 0usize;
        let mut depth = 0usize;
        loop {
            let node = &self.nodes[at];
            match node.kind {
                NodeKind::Leaf { label } => return label,
                NodeKind::Split { .. } if max_depth.is_some_and(|d| depth >= d) => {
                    return majority(&node.counts)
                }
                NodeKind::Split { feature, threshold, left, right } => {
                    at = if x[feature] <= threshold { left } else { right } as usize;
                    depth += 1;
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk<T>(nodes: &[Node<T>], at: usize) -> usize {
            match nodes[at].kind {
                NodeKind::Leaf { .. } => 0,
                NodeKind::Split { left, right, .. } => {
                    1 + walk(nodes, left as usize).max(walk(nodes, right as usize))
                }
            }
        }
        walk(&self.nodes, 0)
    }

    /// Weighted impurity decrease per feature, divided by the root weight.
    pub fn impurity_decrease(&self, n_features: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_features];
        let root_weight: u32 = self.nodes[0].counts.iter().sum();
        if root_weight == 0 {
            return out;
        }
        let weighted = |n: &Node<T>| n.counts.iter().sum::<u32>() as f64 * gini(&n.counts);
        for node in &self.nodes {
            if let NodeKind::Split { feature, left, right, .. } = node.kind {
                let decrease = weighted(node)
                    - weighted(&self.nodes[left as usize])
                    - weighted(&self.nodes[right as usize]);
                out[feature] += decrease.max(0.0);
            }
        }
        out.iter_mut().for_each(|v| *v /= root_weight as f64);
        out
    }
}

/// Column-major training rows with exact duplicates merged.
pub struct TrainingMatrix<T> {
    columns: Vec<Vec<T>>,
    labels: Vec<u8>,
    /// Dataset row -> merged row.
    row_map: Vec<u32>,
    /// Merged rows sorted by each feature's value.
    order: Vec<Vec<u32>>,
}

impl<T: Scalar> TrainingMatrix<T> {
    pub fn new(data: &Dataset<T>) -> Self {
        let d = data.n_features();
        let mut index: HashMap<(u8, Vec<u64>), u32> = HashMap::new();
        let mut columns = vec![Vec::new(); d];
        let mut labels = Vec::new();
        let mut row_map = Vec::with_capacity(data.len());
        for (i, v) in data.vectors.iter().enumerate() {
            let label = data.label(i).ordinal() as u8;
            let key = (label, v.values.iter().map(|x| x.as_f64().to_bits()).collect());
            let next = labels.len() as u32;
            let id = *index.entry(key).or_insert_with(|| {
                for (col, x) in columns.iter_mut().zip(&v.values) {
                    col.push(*x);
                }
                labels.push(label);
                next
            });
            row_map.push(id);
        }
        let order = columns
            .iter()
            .map(|col| {
                let mut o: Vec<u32> = (0..labels.len() as u32).collect();
                o.sort_by(|&a, &b| col[a as usize].partial_cmp(&col[b as usize]).unwrap_or(std::cmp::Ordering::Equal));
                o
            })
            .collect();
        Self { columns, labels, row_map, order }
    }

    pub fn n_rows(&self) -> usize {
        self.row_map.len()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn n_unique(&self) -> usize {
        self.labels.len()
    }
}

/// Features tried per node: ceil(sqrt(d)).
pub fn features_per_node(d: usize) -> usize {
    ((d as f64).sqrt().ceil() as usize).clamp(1, d.max(1))
}

const ROOT_STREAM: u64 = 0x726f_6f74;

/// Grows one tree on a bootstrap of the dataset rows drawn from `tree_seed`.
pub fn grow_tree<T: Scalar>(matrix: &TrainingMatrix<T>, max_depth: Option<usize>, tree_seed: u64) -> Tree<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(tree_seed);
    let n = matrix.n_rows();
    let mut weights = vec![0u32; matrix.n_unique()];
    for _ in 0..n {
        weights[matrix.row_map[rng.random_range(0..n)] as usize] += 1;
    }
    // per-feature row orders restricted to the bootstrap, kept sorted by
    // value inside every node's range
    let sorted: Vec<Vec<u32>> = matrix
        .order
        .iter()
        .map(|o| o.iter().copied().filter(|&r| weights[r as usize] > 0).collect())
        .collect();
    let len = sorted.first().map_or(0, Vec::len);
    let mut grower = Grower {
        matrix,
        weights: &weights,
        max_depth,
        mtry: features_per_node(matrix.n_features()),
        nodes: Vec::new(),
        sorted,
        goes_left: vec![false; matrix.n_unique()],
        scratch: Vec::with_capacity(len),
    };
    let root = grower.counts(0, len);
    grower.grow(0, len, root, 0, derive_seed(tree_seed, ROOT_STREAM));
    Tree { nodes: grower.nodes }
}

struct Grower<'a, T> {
    matrix: &'a TrainingMatrix<T>,
    weights: &'a [u32],
    max_depth: Option<usize>,
    mtry: usize,
    nodes: Vec<Node<T>>,
    sorted: Vec<Vec<u32>>,
    goes_left: Vec<bool>,
    scratch: Vec<u32>,
}

struct BestSplit<T> {
    score: f64,
    feature: usize,
    threshold: T,
    left: ClassCounts,
}

impl<T: Scalar> Grower<'_, T> {
    fn counts(&self, lo: usize, hi: usize) -> ClassCounts {
        let mut c = [0u32; ActivityLabel::COUNT];
        if let Some(rows) = self.sorted.first() {
            for &r in &rows[lo..hi] {
                c[self.matrix.labels[r as usize] as usize] += self.weights[r as usize];
            }
        }
        c
    }

    fn is_terminal(&self, counts: &ClassCounts, rows: usize, depth: usize) -> bool {
        counts.iter().filter(|&&c| c > 0).count() <= 1 || rows < 2 || self.max_depth.is_some_and(|d| depth >= d)
    }

    fn grow(&mut self, lo: usize, hi: usize, counts: ClassCounts, depth: usize, node_seed: u64) -> u32 {
        let id = self.nodes.len() as u32;
        self.nodes.push(Node { counts, kind: NodeKind::Leaf { label: majority(&counts) } });
        if self.is_terminal(&counts, hi - lo, depth) {
            return id;
        }
        let Some(best) = self.best_split(lo, hi, &counts, node_seed) else {
            return id;
        };
        let column = &self.matrix.columns[best.feature];
        let mut n_left = 0;
        for &r in &self.sorted[best.feature][lo..hi] {
            let left = column[r as usize] <= best.threshold;
            self.goes_left[r as usize] = left;
            n_left += left as usize;
        }
        let mid = lo + n_left;
        let left_counts = best.left;
        let mut right_counts = counts;
        right_counts.iter_mut().zip(&left_counts).for_each(|(r, l)| *r -= l);
        let leaves = self.is_terminal(&left_counts, n_left, depth + 1)
            && self.is_terminal(&right_counts, hi - mid, depth + 1);
        if !leaves {
            for rows in &mut self.sorted {
                let segment = &mut rows[lo..hi];
                self.scratch.clear();
                let mut w = 0;
                for i in 0..segment.len() {
                    let r = segment[i];
                    if self.goes_left[r as usize] {
                        segment[w] = r;
                        w += 1;
                    } else {
                        self.scratch.push(r);
                    }
                }
                segment[w..].copy_from_slice(&self.scratch);
            }
        }
        let left = self.grow(lo, mid, left_counts, depth + 1, derive_seed(node_seed, 1));
        let right = self.grow(mid, hi, right_counts, depth + 1, derive_seed(node_seed, 2));
        self.nodes[id as usize].kind = NodeKind::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        id
    }

    /// Visits features in a node-seeded random order until `mtry`
    /// non-constant ones have been scored.
    fn best_split(&self, lo: usize, hi: usize, total: &ClassCounts, node_seed: u64) -> Option<BestSplit<T>> {
        let d = self.matrix.n_features();
        let mut order: Vec<usize> = (0..d).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(node_seed);
        let mut visited = 0;
        let mut best: Option<BestSplit<T>> = None;
        for j in 0..d {
            if visited == self.mtry {
                break;
            }
            let pick = rng.random_range(j..d);
            order.swap(j, pick);
            let feature = order[j];
            if let Some(candidate) = self.scan_feature(lo, hi, total, feature) {
                visited += 1;
                if best.as_ref().is_none_or(|b| candidate.score > b.score) {
                    best = Some(candidate);
                }
            }
        }
        best
    }

    /// Best midpoint threshold of one feature, scored by the weighted sum
    /// of squared class counts over child weight (higher is purer).
    /// `None` when the feature is constant in the node.
    // `!(a < b)` also rejects NaN neighbours; the index drives two slices.
    #[allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]
    fn scan_feature(&self, lo: usize, hi: usize, total: &ClassCounts, feature: usize) -> Option<BestSplit<T>> {
        let column = &self.matrix.columns[feature];
        let rows = &self.sorted[feature][lo..hi];
        let value = |i: usize| column[rows[i] as usize];
        if !(value(0) < value(rows.len() - 1)) {
            return None;
        }
        let total_w: u64 = total.iter().map(|&c| c as u64).sum();
        let mut left = [0u32; ActivityLabel::COUNT];
        let (mut left_w, mut left_sq) = (0u64, 0u64);
        let mut right_sq: u64 = total.iter().map(|&c| c as u64 * c as u64).sum();
        let mut best_score = f64::NEG_INFINITY;
        let mut best_at = 0;
        let mut best_left = left;
        for i in 0..rows.len() - 1 {
            let r = rows[i] as usize;
            let w = self.weights[r];
            let k = self.matrix.labels[r] as usize;
            let (l, rc) = (left[k] as u64, (total[k] - left[k]) as u64);
            let w64 = w as u64;
            left_sq += 2 * l * w64 + w64 * w64;
            right_sq -= 2 * rc * w64 - w64 * w64;
            left[k] += w;
            left_w += w64;
            if !(value(i) < value(i + 1)) {
                continue;
            }
            let score = left_sq as f64 / left_w as f64 + right_sq as f64 / (total_w - left_w) as f64;
            if score > best_score {
                best_score = score;
                best_at = i;
                best_left = left;
            }
        }
        let (a, b) = (value(best_at), value(best_at + 1));
        let two = T::one() + T::one();
        let mut threshold = a + (b - a) / two;
        if !(threshold >= a && threshold < b) {
            threshold = a;
        }
        Some(BestSplit { score: best_score, feature, threshold, left: best_left })
    }
}
