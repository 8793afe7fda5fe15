//! Brute-force k-nearest-neighbours.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_labels, check_width, ClassWeights, Classifier};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnnConfig {
    pub k: usize,
    pub class_weights: ClassWeights,
}

impl Default for KnnConfig {
    fn default() -> Self {
        Self {
            k: 2,
            class_weights: ClassWeights::Uniform,
        }
    }
}

/// Neighbours of `query` as `(squared distance, row)`, nearest first, ties by
/// lower row index.
fn neighbors(train: &[Vec<f64>], query: &[f64], k: usize) -> Vec<(f64, usize)> {
    let mut d: Vec<(f64, usize)> = train
        .iter()
        .enumerate()
        .map(|(i, r)| (r.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum(), i))
        .collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < d.len() {
        d.select_nth_unstable_by(k - 1, cmp);
        d.truncate(k);
    }
    d.sort_by(cmp);
    d
}

/// Weighted vote among the `k` nearest rows. Returns `(class, share of
/// weight voting for class 1)`. A tied vote goes to the single nearest row.
fn vote(train_y: &[u8], nn: &[(f64, usize)], weights: [f64; 2]) -> (u8, f64) {
    let mut tally = [0.0; 2];
    for &(_, i) in nn {
        tally[usize::from(train_y[i])] += weights[usize::from(train_y[i])];
    }
    let total = tally[0] + tally[1];
    let share = if total > 0.0 { tally[1] / total } else { 0.5 };
    let class = if tally[1] > tally[0] {
        1
    } else if tally[0] > tally[1] {
        0
    } else {
        train_y[nn[0].1]
    };
    (class, share)
}

/// Majority class among the `k` Euclidean-nearest training rows.
pub fn knn_classify(train_x: &[Vec<f64>], train_y: &[u8], query: &[f64], k: usize) -> Result<u8> {
    if train_x.is_empty() {
        return Err(Error::Data("KNN needs a non-empty training set".into()));
    }
    if k == 0 || k > train_x.len() {
        return Err(Error::Config(format!(
            "k must be in 1..={}, got {k}",
            train_x.len()
        )));
    }
    check_width(train_x, query.len())?;
    Ok(vote(train_y, &neighbors(train_x, query, k), [1.0, 1.0]).0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub train_x: Vec<Vec<f64>>,
    pub train_y: Vec<u8>,
    pub weights: [f64; 2],
    pub config: KnnConfig,
}

impl KnnModel {
    pub fn fit(x: &[Vec<f64>], y: &[u8], config: KnnConfig) -> Result<Self> {
        check_labels(x, y)?;
        if config.k == 0 || config.k > x.len() {
            return Err(Error::Config(format!("k must be in 1..={}, got {}", x.len(), config.k)));
        }
        Ok(Self {
            train_x: x.to_vec(),
            train_y: y.to_vec(),
            weights: config.class_weights.resolve(y),
            config,
        })
    }

    fn votes(&self, rows: &[Vec<f64>]) -> Result<Vec<(u8, f64)>> {
        check_width(rows, self.n_features())?;
        Ok(rows
            .par_iter()
            .map(|q| vote(&self.train_y, &neighbors(&self.train_x, q, self.config.k), self.weights))
            .collect())
    }
}

impl Classifier for KnnModel {
    fn n_features(&self) -> usize {
        self.train_x.first().map_or(0, Vec::len)
    }

    fn scores(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        Ok(self.votes(rows)?.into_iter().map(|v| v.1).collect())
    }

    fn predict(&self, rows: &[Vec<f64>]) -> Result<Vec<u8>> {
        Ok(self.votes(rows)?.into_iter().map(|v| v.0).collect())
    }
}
