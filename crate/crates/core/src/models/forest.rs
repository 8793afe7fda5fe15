//! Random forest: bootstrap-aggregated CART trees with majority voting.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{DecisionTree, TreeConfig};
use super::{check_labels, check_width, Classifier};
use crate::error::{Error, Result};
use crate::rng::{seeded, sub_seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RfConfig {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// Features tried per node; `None` means `floor(sqrt(d))`.
    pub max_features: Option<usize>,
    pub seed: u64,
}

impl Default for RfConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            min_samples_split: 2,
            max_features: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfModel {
    pub trees: Vec<DecisionTree>,
    pub n_features: usize,
    pub config: RfConfig,
}

impl RfModel {
    /// Each tree sees `n` rows drawn with replacement from its own RNG stream,
    /// so the forest is identical however the trees are scheduled.
    pub fn fit(x: &[Vec<f64>], y: &[u8], config: RfConfig) -> Result<Self> {
        check_labels(x, y)?;
        if config.n_trees == 0 {
            return Err(Error::Config("n_trees must be at least 1".into()));
        }
        let d = x[0].len();
        let tree_cfg = TreeConfig {
            max_depth: config.max_depth,
            min_samples_split: config.min_samples_split,
            max_features: Some(
                config
                    .max_features
                    .unwrap_or(((d as f64).sqrt().floor() as usize).max(1)),
            ),
        };
        let n = x.len();
        let trees = (0..config.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = seeded(sub_seed(config.seed, t as u64));
                let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                DecisionTree::fit(x, y, &idx, &tree_cfg, &mut rng)
            })
            .collect();
        Ok(Self {
            trees,
            n_features: d,
            config,
        })
    }

    /// Fraction of trees voting for class 1.
    pub fn vote_share(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        check_width(rows, self.n_features)?;
        let t = self.trees.len() as f64;
        Ok(rows
            .par_iter()
            .map(|r| {
                self.trees
                    .iter()
                    .filter(|tree| tree.predict_row(r) == 1)
                    .count() as f64
                    / t
            })
            .collect())
    }
}

impl Classifier for RfModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn scores(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        self.vote_share(rows)
    }

    /// Strict majority for class 1; a tied vote gives 0.
    fn predict(&self, rows: &[Vec<f64>]) -> Result<Vec<u8>> {
        Ok(self
            .vote_share(rows)?
            .into_iter()
            .map(|s| u8::from(s > 0.5))
            .collect())
    }
}
