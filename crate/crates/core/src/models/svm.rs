//! RBF-kernel support vector machine trained with simplified SMO.
//!
//! Each pass visits every multiplier; one that violates the KKT conditions by
//! more than `tol` is optimised jointly with a randomly chosen partner. A pass
//! that makes no progress is followed by an exhaustive partner search for the
//! remaining violators before convergence is declared.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_labels, check_width, Classifier};
use crate::error::{Error, Result};
use crate::rng::{seeded, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmConfig {
    pub c: f64,
    /// Kernel width; `None` uses `1 / (d * var(X))`.
    pub gamma: Option<f64>,
    pub tol: f64,
    pub max_passes: usize,
    /// Larger training sets are reduced to a stratified random subsample of
    /// this size, since the kernel matrix is held in memory.
    pub max_train_rows: usize,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            gamma: None,
            tol: 1e-3,
            max_passes: 200,
            max_train_rows: 3000,
            seed: 0,
        }
    }
}

pub fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub support_vectors: Vec<Vec<f64>>,
    pub alphas: Vec<f64>,
    /// `-1` or `+1` per support vector.
    pub labels: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub converged: bool,
    pub passes: usize,
    pub n_features: usize,
    pub config: SvmConfig,
}

fn scale_gamma(x: &[&Vec<f64>]) -> f64 {
    let n = (x.len() * x[0].len()) as f64;
    let mean = x.iter().copied().flatten().sum::<f64>() / n;
    let var = x
        .iter()
        .copied()
        .flatten()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / n;
    if var > 0.0 {
        1.0 / (x[0].len() as f64 * var)
    } else {
        1.0
    }
}

/// `size` rows keeping the class-1 share of `y`, sorted by index.
fn stratified_subsample(y: &[u8], size: usize, rng: &mut Rng) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let (mut pos, mut neg): (Vec<usize>, Vec<usize>) = (0..y.len()).partition(|&i| y[i] == 1);
    pos.shuffle(rng);
    neg.shuffle(rng);
    let n_pos = ((pos.len() as f64 / y.len() as f64) * size as f64).round() as usize;
    let n_pos = n_pos.min(pos.len());
    let mut out: Vec<usize> = pos[..n_pos]
        .iter()
        .chain(neg.iter().take(size - n_pos))
        .copied()
        .collect();
    out.sort_unstable();
    out
}

struct Smo<'a> {
    k: Vec<f64>,
    n: usize,
    y: &'a [f64],
    c: f64,
    tol: f64,
    alpha: Vec<f64>,
    b: f64,
    /// Decision value `f(x_i)` including the bias.
    f: Vec<f64>,
}

impl Smo<'_> {
    fn kij(&self, i: usize, j: usize) -> f64 {
        self.k[i * self.n + j]
    }

    fn err(&self, i: usize) -> f64 {
        self.f[i] - self.y[i]
    }

    fn violates(&self, i: usize) -> bool {
        let r = self.y[i] * self.err(i);
        (r < -self.tol && self.alpha[i] < self.c) || (r > self.tol && self.alpha[i] > 0.0)
    }

    /// Rounds values within rounding error of a box edge onto it.
    fn snap(&self, a: f64) -> f64 {
        let eps = 1e-12 * self.c;
        if a < eps {
            0.0
        } else if a > self.c - eps {
            self.c
        } else {
            a
        }
    }

    /// Partner with the largest `|E_i - E_j|`, the step-size heuristic.
    fn second_choice(&self, i: usize) -> usize {
        let ei = self.err(i);
        (0..self.n)
            .filter(|&j| j != i)
            .max_by(|&a, &b| (ei - self.err(a)).abs().total_cmp(&(ei - self.err(b)).abs()))
            .unwrap_or(i)
    }

    /// Jointly optimises `alpha[i]` and `alpha[j]`. Returns whether they moved.
    fn take_step(&mut self, i: usize, j: usize) -> bool {
        if i == j {
            return false;
        }
        let (yi, yj) = (self.y[i], self.y[j]);
        let (ei, ej) = (self.err(i), self.err(j));
        let (ai, aj) = (self.alpha[i], self.alpha[j]);
        let (lo, hi) = if yi != yj {
            ((aj - ai).max(0.0), (self.c + aj - ai).min(self.c))
        } else {
            ((ai + aj - self.c).max(0.0), (ai + aj).min(self.c))
        };
        if hi - lo < 1e-12 {
            return false;
        }
        let eta = 2.0 * self.kij(i, j) - self.kij(i, i) - self.kij(j, j);
        if eta >= 0.0 {
            return false;
        }
        let aj_new = self.snap((aj - yj * (ei - ej) / eta).clamp(lo, hi));
        if (aj_new - aj).abs() < 1e-8 * (aj_new + aj + 1e-8) {
            return false;
        }
        let ai_new = self.snap((ai + yi * yj * (aj - aj_new)).clamp(0.0, self.c));
        let (dai, daj) = (ai_new - ai, aj_new - aj);
        let b1 = self.b - ei - yi * dai * self.kij(i, i) - yj * daj * self.kij(i, j);
        let b2 = self.b - ej - yi * dai * self.kij(i, j) - yj * daj * self.kij(j, j);
        let b_new = if ai_new > 0.0 && ai_new < self.c {
            b1
        } else if aj_new > 0.0 && aj_new < self.c {
            b2
        } else {
            (b1 + b2) / 2.0
        };
        let db = b_new - self.b;
        let n = self.n;
        let (ki, kj) = (&self.k[i * n..(i + 1) * n], &self.k[j * n..(j + 1) * n]);
        for (t, f) in self.f.iter_mut().enumerate() {
            *f += yi * dai * ki[t] + yj * daj * kj[t] + db;
        }
        self.alpha[i] = ai_new;
        self.alpha[j] = aj_new;
        self.b = b_new;
        true
    }

    /// Resets `b` to the value the KKT conditions imply for the current
    /// alphas: the mean over free vectors, else the midpoint of the interval
    /// allowed by the bound vectors. Pair steps cannot correct a bias that
    /// drifted, since they only see error differences.
    fn refit_bias(&mut self) {
        let (mut free_sum, mut free_n) = (0.0, 0usize);
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..self.n {
            // Bias that would put x_i exactly on its margin.
            let target = self.y[i] - (self.f[i] - self.b);
            let (a, y) = (self.alpha[i], self.y[i]);
            if a > 0.0 && a < self.c {
                free_sum += target;
                free_n += 1;
            } else if (a == 0.0) == (y > 0.0) {
                lo = lo.max(target);
            } else {
                hi = hi.min(target);
            }
        }
        let b_new = if free_n > 0 {
            free_sum / free_n as f64
        } else if lo.is_finite() && hi.is_finite() {
            (lo + hi) / 2.0
        } else if lo.is_finite() {
            lo
        } else {
            hi
        };
        let db = b_new - self.b;
        self.f.iter_mut().for_each(|f| *f += db);
        self.b = b_new;
    }
}

impl SvmModel {
    /// Trains on `y` in `{0, 1}` (mapped to `-1/+1`).
    pub fn fit(x: &[Vec<f64>], y: &[u8], config: SvmConfig) -> Result<Self> {
        check_labels(x, y)?;
        if !(config.c > 0.0) {
            return Err(Error::Config(format!("C must be positive, got {}", config.c)));
        }
        if let Some(g) = config.gamma {
            if !(g > 0.0) {
                return Err(Error::Config(format!("gamma must be positive, got {g}")));
            }
        }
        let mut rng = seeded(config.seed);
        let (x, y): (Vec<&Vec<f64>>, Vec<u8>) = if x.len() > config.max_train_rows {
            log::warn!(
                "SVM: subsampling {} training rows to {}",
                x.len(),
                config.max_train_rows
            );
            let idx = stratified_subsample(y, config.max_train_rows, &mut rng);
            (idx.iter().map(|&i| &x[i]).collect(), idx.iter().map(|&i| y[i]).collect())
        } else {
            (x.iter().collect(), y.to_vec())
        };
        let n = x.len();
        let gamma = config.gamma.unwrap_or_else(|| scale_gamma(&x));
        if y.iter().all(|&l| l == y[0]) {
            log::warn!("SVM: training labels are all {}; model is constant", y[0]);
            return Ok(Self {
                support_vectors: Vec::new(),
                alphas: Vec::new(),
                labels: Vec::new(),
                bias: if y[0] == 1 { 1.0 } else { -1.0 },
                gamma,
                converged: true,
                passes: 0,
                n_features: x[0].len(),
                config,
            });
        }
        let ys: Vec<f64> = y.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();

        let k: Vec<f64> = (0..n)
            .into_par_iter()
            .flat_map_iter(|i| {
                let xi = x[i];
                x.iter().map(move |xj| rbf(xi, xj, gamma))
            })
            .collect();
        let mut smo = Smo {
            k,
            n,
            y: &ys,
            c: config.c,
            tol: config.tol,
            alpha: vec![0.0; n],
            b: 0.0,
            f: vec![0.0; n],
        };

        let mut passes = 0;
        let mut converged = false;
        while passes < config.max_passes {
            passes += 1;
            let mut changed = 0;
            for i in 0..n {
                if smo.violates(i) {
                    let mut j = rng.random_range(0..n - 1);
                    if j >= i {
                        j += 1;
                    }
                    if smo.take_step(i, smo.second_choice(i)) || smo.take_step(i, j) {
                        changed += 1;
                    }
                }
            }
            if changed == 0 {
                for i in 0..n {
                    if smo.violates(i) {
                        let start = rng.random_range(0..n);
                        if (0..n).map(|o| (start + o) % n).any(|j| smo.take_step(i, j)) {
                            changed += 1;
                        }
                    }
                }
                if changed == 0 {
                    // Remaining violations, if any, come from the bias.
                    smo.refit_bias();
                    if !(0..n).any(|i| smo.violates(i)) {
                        converged = true;
                        break;
                    }
                }
            }
        }
        if !converged {
            log::warn!("SMO stopped after {passes} passes without meeting KKT tolerance");
        }

        let keep: Vec<usize> = (0..n).filter(|&i| smo.alpha[i] > 0.0).collect();
        Ok(Self {
            support_vectors: keep.iter().map(|&i| x[i].clone()).collect(),
            alphas: keep.iter().map(|&i| smo.alpha[i]).collect(),
            labels: keep.iter().map(|&i| ys[i]).collect(),
            bias: smo.b,
            gamma,
            converged,
            passes,
            n_features: x[0].len(),
            config,
        })
    }

    /// `sum_i alpha_i y_i K(x_i, x) + b` per row.
    pub fn decision(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        check_width(rows, self.n_features())?;
        Ok(rows
            .par_iter()
            .map(|r| {
                self.support_vectors
                    .iter()
                    .zip(self.alphas.iter().zip(&self.labels))
                    .map(|(sv, (a, y))| a * y * rbf(sv, r, self.gamma))
                    .sum::<f64>()
                    + self.bias
            })
            .collect())
    }

    /// `sum_i alpha_i y_i`, zero at any feasible point of the dual.
    pub fn dual_balance(&self) -> f64 {
        self.alphas.iter().zip(&self.labels).map(|(a, y)| a * y).sum()
    }
}

impl Classifier for SvmModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn scores(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        self.decision(rows)
    }

    fn predict(&self, rows: &[Vec<f64>]) -> Result<Vec<u8>> {
        Ok(self
            .decision(rows)?
            .into_iter()
            .map(|m| u8::from(m >= 0.0))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor() -> (Vec<Vec<f64>>, Vec<u8>) {
        (
            vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]],
            vec![0, 0, 1, 1],
        )
    }

    #[test]
    fn kernel_diagonal_is_one() {
        assert_eq!(rbf(&[1.5, -2.0], &[1.5, -2.0], 3.0), 1.0);
    }

    #[test]
    fn single_support_vector() {
        let m = SvmModel {
            support_vectors: vec![vec![0.3, 0.4]],
            alphas: vec![1.0],
            labels: vec![1.0],
            bias: 0.0,
            gamma: 2.0,
            converged: true,
            passes: 0,
            n_features: 2,
            config: SvmConfig::default(),
        };
        assert_eq!(m.decision(&[vec![0.3, 0.4]]).unwrap(), vec![1.0]);
        assert_eq!(m.predict(&[vec![0.3, 0.4]]).unwrap(), vec![1]);
    }

    #[test]
    fn xor_is_separable() {
        let (x, y) = xor();
        let cfg = SvmConfig { c: 10.0, gamma: Some(1.0), ..Default::default() };
        let m = SvmModel::fit(&x, &y, cfg).unwrap();
        assert!(m.converged);
        assert_eq!(m.predict(&x).unwrap(), y);
        assert!(m.alphas.iter().all(|&a| (0.0..=10.0).contains(&a)));
        assert!(m.dual_balance().abs() < 1e-6);
    }

    #[test]
    fn kkt_on_random_problem() {
        let mut rng = seeded(8);
        let x: Vec<Vec<f64>> = (0..80)
            .map(|_| vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)])
            .collect();
        let y: Vec<u8> = x
            .iter()
            .map(|r| u8::from(r[0] * r[0] + r[1] * r[1] + rng.random_range(-0.5..0.5) < 1.5))
            .collect();
        let cfg = SvmConfig { c: 2.0, gamma: Some(0.8), tol: 1e-3, ..Default::default() };
        let m = SvmModel::fit(&x, &y, cfg.clone()).unwrap();
        assert!(m.converged);
        assert!(m.alphas.iter().all(|&a| a > 0.0 && a <= cfg.c));
        assert!(m.dual_balance().abs() < 1e-6);
        let margins = m.decision(&m.support_vectors).unwrap();
        for ((a, yv), f) in m.alphas.iter().zip(&m.labels).zip(margins) {
            if *a < cfg.c {
                assert!((f - yv).abs() <= cfg.tol + 1e-9, "free SV margin {f} vs {yv}");
            }
        }
    }

    #[test]
    fn subsample_keeps_class_ratio() {
        let y: Vec<u8> = (0..1000).map(|i| u8::from(i % 10 == 0)).collect();
        let idx = stratified_subsample(&y, 200, &mut seeded(1));
        assert_eq!(idx.len(), 200);
        assert_eq!(idx.iter().filter(|&&i| y[i] == 1).count(), 20);
    }

    #[test]
    fn bad_hyperparameters() {
        let (x, y) = xor();
        assert!(SvmModel::fit(&x, &y, SvmConfig { c: 0.0, ..Default::default() }).is_err());
        assert!(SvmModel::fit(&x, &y, SvmConfig { gamma: Some(-1.0), ..Default::default() }).is_err());
    }
}
