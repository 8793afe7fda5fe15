//! CART decision trees with Gini impurity.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::rng::Rng;

/// `1 - sum_c p_c^2` over weighted class counts.
pub fn gini(counts: [f64; 2]) -> f64 {
    let n = counts[0] + counts[1];
    if n <= 0.0 {
        return 0.0;
    }
    let (p0, p1) = (counts[0] / n, counts[1] / n);
    1.0 - p0 * p0 - p1 * p1
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    /// Rows with `x[feature] <= threshold` go left.
    pub threshold: f64,
    /// Size-weighted Gini impurity of the two children.
    pub child_impurity: f64,
    /// Parent impurity minus `child_impurity`.
    pub gini_gain: f64,
}

const MIN_GAIN: f64 = 1e-12;

/// Best impurity-reducing split over `candidates` for the rows in `idx`.
///
/// Thresholds are midpoints between consecutive distinct values. Among equal
/// gains the first candidate feature and the lowest threshold win.
pub fn best_split_on(
    x: &[Vec<f64>],
    y: &[u8],
    idx: &[usize],
    candidates: &[usize],
) -> Option<SplitCandidate> {
    if idx.len() < 2 {
        return None;
    }
    let mut total = [0.0; 2];
    for &i in idx {
        total[usize::from(y[i])] += 1.0;
    }
    let parent = gini(total);
    if parent == 0.0 {
        return None;
    }
    let n = idx.len() as f64;
    let mut best: Option<SplitCandidate> = None;
    let mut pairs: Vec<(f64, u8)> = Vec::with_capacity(idx.len());
    for &f in candidates {
        pairs.clear();
        pairs.extend(idx.iter().map(|&i| (x[i][f], y[i])));
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut left = [0.0; 2];
        for k in 0..pairs.len() - 1 {
            left[usize::from(pairs[k].1)] += 1.0;
            let (a, b) = (pairs[k].0, pairs[k + 1].0);
            if a == b {
                continue;
            }
            let right = [total[0] - left[0], total[1] - left[1]];
            let nl = (k + 1) as f64;
            let child = (nl * gini(left) + (n - nl) * gini(right)) / n;
            let gain = parent - child;
            if gain > MIN_GAIN && best.is_none_or(|s| gain > s.gini_gain) {
                let mid = a + (b - a) / 2.0;
                best = Some(SplitCandidate {
                    feature: f,
                    threshold: if mid < b { mid } else { a },
                    child_impurity: child,
                    gini_gain: gain,
                });
            }
        }
    }
    best
}

/// [`best_split_on`] over every row.
pub fn best_split(x: &[Vec<f64>], y: &[u8], candidates: &[usize]) -> Option<SplitCandidate> {
    let idx: Vec<usize> = (0..x.len()).collect();
    best_split_on(x, y, &idx, candidates)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        counts: [f64; 2],
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// Candidate features drawn per node; `None` means all.
    pub max_features: Option<usize>,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_samples_split: 2,
            max_features: None,
        }
    }
}

/// Nodes stored flat; index 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    /// Grows a tree on rows `idx` (duplicates allowed, as in a bootstrap).
    ///
    /// When `max_features` is set, each node tries a random subset of that
    /// size first and only falls through to the remaining features if none of
    /// the subset reduces impurity.
    pub fn fit(x: &[Vec<f64>], y: &[u8], idx: &[usize], cfg: &TreeConfig, rng: &mut Rng) -> Self {
        let d = x.first().map_or(0, Vec::len);
        let mut nodes = vec![Node::Leaf { counts: [0.0; 2] }];
        let mut stack = vec![(0usize, idx.to_vec(), 0usize)];
        let mut features: Vec<usize> = (0..d).collect();
        let m = cfg.max_features.unwrap_or(d).clamp(1, d.max(1));

        while let Some((slot, rows, depth)) = stack.pop() {
            let mut counts = [0.0; 2];
            for &i in &rows {
                counts[usize::from(y[i])] += 1.0;
            }
            let can_split = rows.len() >= cfg.min_samples_split.max(2)
                && cfg.max_depth.is_none_or(|md| depth < md)
                && gini(counts) > 0.0;
            let split = if can_split {
                features.shuffle(rng);
                best_split_on(x, y, &rows, &features[..m]).or_else(|| {
                    if m < d {
                        best_split_on(x, y, &rows, &features[m..])
                    } else {
                        None
                    }
                })
            } else {
                None
            };
            match split {
                None => nodes[slot] = Node::Leaf { counts },
                Some(s) => {
                    let (l, r): (Vec<usize>, Vec<usize>) =
                        rows.iter().partition(|&&i| x[i][s.feature] <= s.threshold);
                    let left = nodes.len();
                    nodes.push(Node::Leaf { counts: [0.0; 2] });
                    nodes.push(Node::Leaf { counts: [0.0; 2] });
                    nodes[slot] = Node::Split {
                        feature: s.feature,
                        threshold: s.threshold,
                        left,
                        right: left + 1,
                    };
                    stack.push((left + 1, r, depth + 1));
                    stack.push((left, l, depth + 1));
                }
            }
        }
        Self { nodes }
    }

    pub fn leaf(&self, row: &[f64]) -> [f64; 2] {
        let mut k = 0;
        loop {
            match &self.nodes[k] {
                Node::Leaf { counts } => return *counts,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => k = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    /// Majority class of the leaf; ties go to class 0.
    pub fn predict_row(&self, row: &[f64]) -> u8 {
        let c = self.leaf(row);
        u8::from(c[1] > c[0])
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], k: usize) -> usize {
            match &nodes[k] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}
