//! Minority-class oversampling.
//!
//! [`smote`] interpolates between a minority row and one of its k nearest
//! minority neighbours. [`duplicate_minority`] is the plain duplication used
//! for sequence data, where interpolation between windows has no meaning.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Dataset, SplitRole};
use crate::rng::{seeded, sub_seed, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoteConfig {
    pub k_neighbors: usize,
    /// Desired minority/majority ratio after resampling, in `(0, 1]`.
    pub target_ratio: f64,
    pub seed: u64,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        Self {
            k_neighbors: 5,
            target_ratio: 1.0,
            seed: 0,
        }
    }
}

/// Where a synthetic row came from: `x = x[source] + lambda * (x[neighbor] - x[source])`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticOrigin {
    pub source: usize,
    pub neighbor: usize,
    pub lambda: f64,
}

#[derive(Debug, Clone)]
pub struct SmoteOutput {
    /// Original rows first, synthetic rows appended.
    pub data: Dataset,
    pub minority_label: u8,
    /// Effective neighbour count after clamping.
    pub k: usize,
    pub origins: Vec<SyntheticOrigin>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Indices (into `points`) of the `k` nearest other points to `points[i]`.
/// Equal distances go to the lower index.
pub fn nearest_neighbors(points: &[&[f64]], i: usize, k: usize) -> Vec<usize> {
    let mut d: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(j, p)| (sq_dist(points[i], p), j))
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    d.into_iter().take(k).map(|(_, j)| j).collect()
}

/// SMOTE with `lambda ~ U[0, 1)`.
pub fn smote(data: &Dataset, cfg: &SmoteConfig) -> Result<SmoteOutput> {
    smote_with(data, cfg, |rng| rng.random::<f64>())
}

/// SMOTE with a caller-supplied interpolation factor.
///
/// Synthetic row `s` uses source `s mod m` over the `m` minority rows and its
/// own RNG stream derived from `cfg.seed`, so the output does not depend on
/// evaluation order.
pub fn smote_with<F>(data: &Dataset, cfg: &SmoteConfig, lambda: F) -> Result<SmoteOutput>
where
    F: Fn(&mut Rng) -> f64 + Sync,
{
    if matches!(data.x.role, SplitRole::Validation | SplitRole::Test) {
        return Err(Error::Leakage(format!(
            "SMOTE called on {:?} rows; oversampling is for training data only",
            data.x.role
        )));
    }
    if cfg.k_neighbors == 0 {
        return Err(Error::Config("k_neighbors must be at least 1".into()));
    }
    if !(cfg.target_ratio > 0.0 && cfg.target_ratio <= 1.0) {
        return Err(Error::Config(format!(
            "target_ratio must be in (0, 1], got {}",
            cfg.target_ratio
        )));
    }
    let pos = data.positives();
    let neg = data.len() - pos;
    let minority_label = u8::from(pos <= neg);
    let (n_min, n_maj) = if pos <= neg { (pos, neg) } else { (neg, pos) };
    if n_min < 2 {
        return Err(Error::Data(format!(
            "minority class has {n_min} rows; SMOTE needs at least 2"
        )));
    }
    let mut k = cfg.k_neighbors;
    if k >= n_min {
        log::warn!("k_neighbors {k} >= minority count {n_min}; using {}", n_min - 1);
        k = n_min - 1;
    }
    let target = (cfg.target_ratio * n_maj as f64).floor() as usize;
    let n_new = target.saturating_sub(n_min);

    let minority: Vec<usize> = (0..data.len())
        .filter(|&i| data.y[i] == minority_label)
        .collect();
    let points: Vec<&[f64]> = minority.iter().map(|&i| data.x.rows[i].as_slice()).collect();
    let needed_sources = n_new.min(n_min);
    let neighbors: Vec<Vec<usize>> = (0..needed_sources)
        .into_par_iter()
        .map(|i| nearest_neighbors(&points, i, k))
        .collect();

    let generated: Vec<(Vec<f64>, SyntheticOrigin)> = (0..n_new)
        .into_par_iter()
        .map(|s| {
            let mut rng = seeded(sub_seed(cfg.seed, s as u64));
            let src = s % n_min;
            let nn = neighbors[src][rng.random_range(0..k)];
            let lam = lambda(&mut rng);
            let a = points[src];
            let b = points[nn];
            let row = a.iter().zip(b).map(|(x, y)| x + lam * (y - x)).collect();
            (
                row,
                SyntheticOrigin {
                    source: minority[src],
                    neighbor: minority[nn],
                    lambda: lam,
                },
            )
        })
        .collect();

    let mut out = data.clone();
    let mut origins = Vec::with_capacity(n_new);
    for (row, origin) in generated {
        let mut meta = data.x.meta[origin.source].clone();
        meta.synthetic = true;
        out.x.push(row, meta);
        out.y.push(minority_label);
        origins.push(origin);
    }
    Ok(SmoteOutput {
        data: out,
        minority_label,
        k,
        origins,
    })
}

/// Row indices that balance `labels` by cycling through minority rows.
/// Originals come first, in order.
pub fn duplicate_minority(labels: &[u8]) -> Vec<usize> {
    let pos = labels.iter().filter(|&&l| l == 1).count();
    let neg = labels.len() - pos;
    let minority_label = u8::from(pos <= neg);
    let minority: Vec<usize> = (0..labels.len())
        .filter(|&i| labels[i] == minority_label)
        .collect();
    let mut idx: Vec<usize> = (0..labels.len()).collect();
    if minority.is_empty() {
        return idx;
    }
    let extra = pos.abs_diff(neg);
    idx.extend(minority.iter().cycle().take(extra));
    idx
}
