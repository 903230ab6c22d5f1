//! CART-style binary decision tree with Gini impurity splitting.
//!
//! Candidate thresholds sit at midpoints between consecutive distinct sorted
//! feature values. Impure nodes split on the candidate with the largest
//! impurity decrease (first candidate wins ties, in feature-then-threshold
//! order); zero-decrease splits are taken so that consistent training data
//! always ends in pure leaves. Recursion stops at pure nodes, the depth
//! limit, or nodes with fewer than 2 samples. Leaves keep the class-count
//! distribution.

use serde::{Deserialize, Serialize};

use super::TrainSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        counts: Vec<usize>,
    },
}

/// A fitted decision tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    nodes: Vec<TreeNode>,
    feature_count: usize,
    class_count: usize,
}

impl TreeModel {
    pub fn feature_count(&self) -> usize {
        self.feature_count
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Depth of the tree; a single leaf has depth 0.
    pub fn depth(&self) -> usize {
        fn depth_of(nodes: &[TreeNode], index: usize) -> usize {
            match &nodes[index] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => {
                    1 + depth_of(nodes, *left).max(depth_of(nodes, *right))
                }
            }
        }
        depth_of(&self.nodes, 0)
    }

    /// Normalized class counts of the leaf the query lands in.
    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        let mut index = 0;
        loop {
            match &self.nodes[index] {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    index = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
                TreeNode::Leaf { counts } => {
                    let total: usize = counts.iter().sum();
                    return counts.iter().map(|&c| c as f64 / total as f64).collect();
                }
            }
        }
    }

    pub fn predict(&self, row: &[f64]) -> usize {
        crate::types::argmax_ties_low(&self.predict_proba(row))
    }
}

fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts
        .iter()
        .map(|&c| {
            let p = c as f64 / t;
            p * p
        })
        .sum::<f64>()
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    decrease: f64,
}

fn class_counts(train: &TrainSet, samples: &[usize]) -> Vec<usize> {
    let mut counts = vec![0usize; train.class_count()];
    for &s in samples {
        counts[train.labels()[s]] += 1;
    }
    counts
}

fn best_split(train: &TrainSet, samples: &[usize], parent_gini: f64) -> Option<BestSplit> {
    let n = samples.len();
    let mut best: Option<BestSplit> = None;
    for feature in 0..train.feature_count() {
        let mut ordered: Vec<usize> = samples.to_vec();
        ordered.sort_by(|&a, &b| {
            train.features()[a][feature]
                .partial_cmp(&train.features()[b][feature])
                .unwrap()
        });
        let mut left_counts = vec![0usize; train.class_count()];
        let mut right_counts = class_counts(train, samples);
        for i in 0..n - 1 {
            let sample = ordered[i];
            left_counts[train.labels()[sample]] += 1;
            right_counts[train.labels()[sample]] -= 1;
            let value = train.features()[sample][feature];
            let next = train.features()[ordered[i + 1]][feature];
            if value == next {
                continue;
            }
            let threshold = (value + next) / 2.0;
            let n_left = i + 1;
            let n_right = n - n_left;
            let weighted = (n_left as f64 * gini(&left_counts, n_left)
                + n_right as f64 * gini(&right_counts, n_right))
                / n as f64;
            let decrease = parent_gini - weighted;
            if best.as_ref().is_none_or(|b| decrease > b.decrease) {
                best = Some(BestSplit {
                    feature,
                    threshold,
                    decrease,
                });
            }
        }
    }
    best
}

fn build(
    train: &TrainSet,
    samples: &[usize],
    depth: usize,
    max_depth: Option<usize>,
    nodes: &mut Vec<TreeNode>,
) -> usize {
    let counts = class_counts(train, samples);
    let parent_gini = gini(&counts, samples.len());
    let depth_reached = max_depth.is_some_and(|d| depth >= d);
    if samples.len() < 2 || parent_gini == 0.0 || depth_reached {
        nodes.push(TreeNode::Leaf { counts });
        return nodes.len() - 1;
    }
    let Some(split) = best_split(train, samples, parent_gini) else {
        nodes.push(TreeNode::Leaf { counts });
        return nodes.len() - 1;
    };
    let (left_samples, right_samples): (Vec<usize>, Vec<usize>) = samples
        .iter()
        .partition(|&&s| train.features()[s][split.feature] <= split.threshold);
    let index = nodes.len();
    nodes.push(TreeNode::Leaf { counts: vec![] }); // placeholder
    let left = build(train, &left_samples, depth + 1, max_depth, nodes);
    let right = build(train, &right_samples, depth + 1, max_depth, nodes);
    nodes[index] = TreeNode::Split {
        feature: split.feature,
        threshold: split.threshold,
        left,
        right,
    };
    index
}

/// Grows a CART tree; `max_depth = None` means unlimited.
pub fn fit_decision_tree(train: &TrainSet, max_depth: Option<usize>) -> TreeModel {
    let samples: Vec<usize> = (0..train.len()).collect();
    let mut nodes = Vec::new();
    build(train, &samples, 0, max_depth, &mut nodes);
    TreeModel {
        nodes,
        feature_count: train.feature_count(),
        class_count: train.class_count(),
    }
}
